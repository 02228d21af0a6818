//! Margin correction of the mean and the diagonal affine matrix.
//!
//! After every distribution update the marginal of each discrete coordinate
//! of `v = m + σ A y` is adjusted so that it keeps at least probability `α`
//! of landing on the far side of the nearest threshold (binary dimensions and
//! integer means outside the interior), or at least `α/2` below `ℓ_low` and
//! above `ℓ_up` (integer means in the interior). Continuous coordinates are
//! never touched.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::{chi2_ppf_1df, normal_cdf, SymmetricMatrix};
use crate::space::MixedIntegerSpace;

/// Smallest tail mass used when solving for the corrected marginal, keeping
/// `1 - 2p` at least `1e-12` away from one.
const MIN_TAIL: f64 = 5e-13;

/// Inputs shared by the per-dimension corrections: the updated `σ` and `C`
/// and the affine diagonal from before the update.
#[derive(Debug, Clone, Copy)]
pub struct MarginContext<'a> {
    pub sigma: f64,
    pub cov: &'a SymmetricMatrix,
    pub affine: &'a DVector<f64>,
    pub alpha: f64,
}

impl MarginContext<'_> {
    /// Marginal variance `σ² A_j² C_jj` of `v_j`.
    pub fn marginal_variance(&self, j: usize) -> f64 {
        let a = self.affine[j];
        self.sigma * self.sigma * a * a * self.cov.get(j, j)
    }
}

/// Half-width of the central interval holding mass `prob` of the marginal of
/// `v_j`: `sqrt(χ²₁⁻¹(prob) σ² A_j² C_jj)`.
pub fn confidence_halfwidth(ctx: &MarginContext<'_>, j: usize, prob: f64) -> Result<f64> {
    let var = ctx.marginal_variance(j);
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::NotPositiveDefinite { eigenvalue: var });
    }
    Ok((chi2_ppf_1df(prob)? * var).sqrt())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Pull `m_j` toward its nearest threshold until the far side carries mass
/// `α`. The mean never crosses the threshold.
pub fn correct_binary_dim(ctx: &MarginContext<'_>, m_j: f64, space: &MixedIntegerSpace, j: usize) -> Result<f64> {
    let threshold = space.nearest_threshold(j, m_j)?;
    let gap = m_j - threshold;
    if gap == 0.0 {
        return Ok(m_j);
    }
    let ci = confidence_halfwidth(ctx, j, 1.0 - 2.0 * ctx.alpha)?;
    let corrected = threshold + sign(gap) * gap.abs().min(ci);
    // A value on the threshold encodes to the lower cell, so an upper-side
    // mean must stay strictly above it.
    if gap > 0.0 && corrected <= threshold {
        return Ok(threshold.next_up());
    }
    Ok(corrected)
}

/// Correction for an integer dimension. Returns the corrected `(m_j, A_j)`.
pub fn correct_integer_dim(
    ctx: &MarginContext<'_>,
    m_j: f64,
    space: &MixedIntegerSpace,
    j: usize,
) -> Result<(f64, f64)> {
    let a_j = ctx.affine[j];
    if !space.is_interior(j, m_j) {
        return Ok((correct_binary_dim(ctx, m_j, space, j)?, a_j));
    }
    let (low, up) = space.bracketing_thresholds(j, m_j)?;
    let var = ctx.marginal_variance(j);
    if !(var > 0.0 && var.is_finite()) {
        return Err(Error::NotPositiveDefinite { eigenvalue: var });
    }
    let sd = var.sqrt();
    let half = 0.5 * ctx.alpha;
    let p_low = normal_cdf((low - m_j) / sd);
    let p_up = normal_cdf((m_j - up) / sd);
    if p_low >= half && p_up >= half {
        return Ok((m_j, a_j));
    }
    let p_mid = 1.0 - p_low - p_up;
    let q_low = p_low.max(half);
    let q_up = p_up.max(half);
    let scale = (1.0 - q_low - q_up - p_mid) / (q_low + q_up + p_mid - 3.0 * half);
    let r_low = (q_low + scale * (q_low - half)).clamp(MIN_TAIL, 0.5);
    let r_up = (q_up + scale * (q_up - half)).clamp(MIN_TAIL, 0.5);

    let s_low = chi2_ppf_1df(1.0 - 2.0 * r_low)?.sqrt();
    let s_up = chi2_ppf_1df(1.0 - 2.0 * r_up)?.sqrt();
    let total = s_low + s_up;
    let mean = ((low * s_up + up * s_low) / total).clamp(low.next_up(), up);
    let affine = (up - low) / (ctx.sigma * ctx.cov.get(j, j).sqrt() * total);
    Ok((mean, affine))
}

/// Full correction pass over all dimensions. `affine` is the diagonal of `A`
/// from before the update; `sigma` and `cov` are the updated values.
/// Every dimension is corrected from its own pre-correction mean.
pub fn margin_correction(
    mean: &DVector<f64>,
    affine: &DVector<f64>,
    sigma: f64,
    cov: &SymmetricMatrix,
    space: &MixedIntegerSpace,
    alpha: f64,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = space.dim();
    for len in [mean.len(), affine.len(), cov.dim()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, actual: len });
        }
    }
    if !(0.0..0.5).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("margin {alpha} must lie in [0, 0.5)")));
    }
    let mut m = mean.clone();
    let mut a = affine.clone();
    if alpha == 0.0 {
        return Ok((m, a));
    }
    let ctx = MarginContext {
        sigma,
        cov,
        affine,
        alpha,
    };
    for j in space.binary_range() {
        debug_assert_eq!(affine[j], 1.0, "binary dimensions keep a unit affine entry");
        m[j] = correct_binary_dim(&ctx, mean[j], space, j)?;
    }
    for j in space.integer_range() {
        let (mj, aj) = correct_integer_dim(&ctx, mean[j], space, j)?;
        m[j] = mj;
        a[j] = aj;
    }
    Ok((m, a))
}

/// `min(P(v ≤ ℓ), P(v > ℓ))` for `v ~ N(mean, sd²)`: the smaller of the two
/// encoded-value probabilities of a binary coordinate with threshold `ℓ`.
pub fn binary_minority_probability(mean: f64, sd: f64, threshold: f64) -> f64 {
    normal_cdf((threshold - mean) / sd).min(normal_cdf((mean - threshold) / sd))
}
