//! CMA-ES with integer mutation and masked step-size adaptation (CMA-ES-IM),
//! the baseline the margin correction is compared against.
//!
//! Candidates are `x_i = m + σ y_i + S r_i` where `S` is the diagonal of
//! granularities and `r_i` an integer mutation injected when the coordinate
//! standard deviation is small compared to the granularity. The mean moves
//! toward the selected `x_i`, mutation included, while the evolution paths
//! and the covariance only see the Gaussian steps `y_i`.

use nalgebra::DVector;

use crate::cma::{
    rank_by_fitness, rank_samples, sample_population, update_step, CmaParams, CmaState, CovarianceFactors,
    Generation,
};
use crate::error::{Error, Result};
use crate::numerics::{expected_norm, geometric_sample, RngStream, SymmetricMatrix};
use crate::space::MixedIntegerSpace;

/// Diagonal of `S^int`: one granularity per dimension, zero on continuous
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GranularityVector(Vec<f64>);

impl GranularityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidParameter(format!("granularity {bad} is not a finite non-negative value")));
        }
        Ok(Self(values))
    }

    /// 1 on every discrete dimension, 0 on continuous ones.
    pub fn for_space(space: &MixedIntegerSpace) -> Self {
        Self((0..space.dim()).map(|j| if space.is_discrete(j) { 1.0 } else { 0.0 }).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-dimension optional closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxConstraint {
    bounds: Vec<Option<(f64, f64)>>,
}

impl BoxConstraint {
    pub fn new(bounds: Vec<Option<(f64, f64)>>) -> Result<Self> {
        for (j, b) in bounds.iter().enumerate() {
            if let Some((lo, hi)) = b {
                if !(lo <= hi) {
                    return Err(Error::InvalidParameter(format!("box bound {j} has lo {lo} > hi {hi}")));
                }
            }
        }
        Ok(Self { bounds })
    }

    /// `[-1, 1]` on binary dimensions and `[-10, 10]` on integer ones.
    pub fn discrete_default(space: &MixedIntegerSpace) -> Self {
        let bounds = (0..space.dim())
            .map(|j| {
                if space.is_binary(j) {
                    Some((-1.0, 1.0))
                } else if space.is_discrete(j) {
                    Some((-10.0, 10.0))
                } else {
                    None
                }
            })
            .collect();
        Self { bounds }
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }

    pub fn bound(&self, j: usize) -> Option<(f64, f64)> {
        self.bounds[j]
    }

    pub fn clamp(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.bounds).map(|(&v, b)| match b {
                Some((lo, hi)) => v.clamp(*lo, *hi),
                None => v,
            }),
        )
    }
}

/// Nearest feasible point and the penalty `‖x_feas - x‖² / N`.
pub fn box_penalty(x: &DVector<f64>, bounds: &BoxConstraint) -> Result<(DVector<f64>, f64)> {
    if x.len() != bounds.len() {
        return Err(Error::DimensionMismatch {
            expected: bounds.len(),
            actual: x.len(),
        });
    }
    let feasible = bounds.clamp(x);
    let penalty = (&feasible - x).norm_squared() / x.len() as f64;
    Ok((feasible, penalty))
}

/// Randomly ordered indices `j` with `2 σ √C_jj < s_j`.
pub fn mutation_index_set(state: &CmaState, s: &GranularityVector, rng: &mut RngStream) -> Vec<usize> {
    let mut set: Vec<usize> = (0..state.dim())
        .filter(|&j| 2.0 * state.sigma * state.cov.get(j, j).sqrt() < s.as_slice()[j])
        .collect();
    rng.shuffle(&mut set);
    set
}

/// Number of candidates receiving an integer mutation.
pub fn mutation_count(set_len: usize, dim: usize, lambda: usize) -> usize {
    if set_len == 0 {
        0
    } else if set_len < dim {
        (lambda / 10 + set_len + 1).min((lambda / 2).saturating_sub(1))
    } else {
        lambda / 2
    }
}

fn random_sign(rng: &mut RngStream) -> f64 {
    if rng.coin() {
        -1.0
    } else {
        1.0
    }
}

/// Integer mutation vectors `r_1, ..., r_λ`.
///
/// The first `lambda_int` get `±(R' + R'')` with one sign per vector; when
/// `lambda_int > 0` the last one gets, per dimension with `s_j > 0`,
/// `±(⌊b_j / s_j⌋ - ⌊m_j / s_j⌋)` where `b` is the previous best candidate.
pub fn integer_mutation(
    state: &CmaState,
    set: &[usize],
    lambda_int: usize,
    lambda: usize,
    s: &GranularityVector,
    prev_best: Option<&DVector<f64>>,
    rng: &mut RngStream,
) -> Result<Vec<DVector<f64>>> {
    let n = state.dim();
    let mut out = vec![DVector::zeros(n); lambda];
    if lambda_int == 0 {
        return Ok(out);
    }
    let p = 0.7f64.powf(1.0 / set.len() as f64);
    for (i, r) in out.iter_mut().enumerate().take(lambda_int.min(lambda)) {
        r[set[i % set.len()]] += 1.0;
        for &j in set {
            r[j] += geometric_sample(rng, p)? as f64;
        }
        *r *= random_sign(rng);
    }
    if let Some(best) = prev_best {
        let last = &mut out[lambda - 1];
        for j in 0..n {
            let sj = s.as_slice()[j];
            if sj > 0.0 {
                let jump = (best[j] / sj).floor() - (state.mean[j] / sj).floor();
                last[j] = random_sign(rng) * jump;
            }
        }
    }
    Ok(out)
}

/// Step size after the masked cumulative step-size adaptation. `state` is the
/// distribution before the update (its `σ` and `C` define the mask) and
/// `path_sigma` the freshly updated evolution path.
pub fn masked_sigma_update(
    state: &CmaState,
    params: &CmaParams,
    path_sigma: &DVector<f64>,
    s: &GranularityVector,
) -> f64 {
    let mut norm_sq = 0.0;
    let mut kept = 0;
    for j in 0..state.dim() {
        let masked = 5.0 * state.sigma * state.cov.get(j, j).sqrt() / params.c_sigma.sqrt() < s.as_slice()[j];
        if !masked {
            kept += 1;
            norm_sq += path_sigma[j] * path_sigma[j];
        }
    }
    if kept == 0 {
        return state.sigma;
    }
    let ratio = norm_sq.sqrt() / expected_norm(kept);
    state.sigma * ((params.c_sigma / params.d_sigma) * (ratio - 1.0)).exp()
}

/// CMA-ES-IM on a mixed-integer space.
///
/// Binary coordinates are read as `1{x_j > 0}`: `encoding_offset` is added to
/// the candidate before encoding against the space's thresholds, and is 0.5
/// on binary dimensions by default.
#[derive(Debug, Clone)]
pub struct CmaEsIm {
    pub params: CmaParams,
    pub state: CmaState,
    space: MixedIntegerSpace,
    granularity: GranularityVector,
    bounds: Option<BoxConstraint>,
    encoding_offset: DVector<f64>,
    prev_best: Option<DVector<f64>>,
}

impl CmaEsIm {
    pub fn new(
        params: CmaParams,
        state: CmaState,
        space: MixedIntegerSpace,
        bounds: Option<BoxConstraint>,
    ) -> Result<Self> {
        let n = state.dim();
        let granularity = GranularityVector::for_space(&space);
        let encoding_offset =
            DVector::from_iterator(n, (0..n).map(|j| if j < space.dim() && space.is_binary(j) { 0.5 } else { 0.0 }));
        Self::with_granularity(params, state, space, granularity, bounds, encoding_offset)
    }

    pub fn with_granularity(
        params: CmaParams,
        state: CmaState,
        space: MixedIntegerSpace,
        granularity: GranularityVector,
        bounds: Option<BoxConstraint>,
        encoding_offset: DVector<f64>,
    ) -> Result<Self> {
        let n = state.dim();
        let lens = [
            params.dim,
            space.dim(),
            granularity.len(),
            encoding_offset.len(),
            bounds.as_ref().map_or(n, |b| b.len()),
        ];
        if let Some(&bad) = lens.iter().find(|&&l| l != n) {
            return Err(Error::DimensionMismatch { expected: n, actual: bad });
        }
        Ok(Self {
            params,
            state,
            space,
            granularity,
            bounds,
            encoding_offset,
            prev_best: None,
        })
    }

    pub fn space(&self) -> &MixedIntegerSpace {
        &self.space
    }

    /// Encoded value of a raw candidate as seen by the objective.
    pub fn encode(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        Ok(self.space.encode((x + &self.encoding_offset).as_slice())?.into_inner())
    }

    pub fn step<F>(&mut self, factors: &CovarianceFactors, rng: &mut RngStream, mut f: F) -> Result<Generation>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let lambda = self.params.lambda;
        let mut samples = sample_population(&self.state, &self.params, factors, rng)?;
        let set = mutation_index_set(&self.state, &self.granularity, rng);
        let lambda_int = mutation_count(set.len(), self.state.dim(), lambda);
        let mutations = integer_mutation(
            &self.state,
            &set,
            lambda_int,
            lambda,
            &self.granularity,
            self.prev_best.as_ref(),
            rng,
        )?;
        let s = DVector::from_column_slice(self.granularity.as_slice());
        for (sample, r) in samples.iter_mut().zip(&mutations) {
            if r.iter().any(|&v| v != 0.0) {
                sample.x += s.component_mul(r);
                sample.v = sample.x.clone();
            }
        }

        let mut encoded = Vec::with_capacity(lambda);
        let mut fitness = Vec::with_capacity(lambda);
        for sample in &samples {
            let (point, penalty) = match &self.bounds {
                Some(b) => box_penalty(&sample.x, b)?,
                None => (sample.x.clone(), 0.0),
            };
            let e = self.space.encode((point + &self.encoding_offset).as_slice())?;
            fitness.push(f(&e) + penalty);
            encoded.push(e);
        }
        let order = rank_by_fitness(&fitness)?;
        let ranked = rank_samples(samples, encoded, &fitness, &order);

        let mut next = update_step(&self.state, &self.params, &ranked, &factors.inv_sqrt)?;
        next.sigma = masked_sigma_update(&self.state, &self.params, &next.path_sigma, &self.granularity);
        self.state = next;
        self.prev_best = Some(ranked[0].x.clone());
        Ok(Generation {
            best_fitness: ranked[0].fitness,
            best: ranked[0].clone(),
            evaluations: ranked.len(),
        })
    }
}

/// Identity covariance helper used by callers building an initial state.
pub fn identity_state(mean: DVector<f64>, sigma: f64) -> Result<CmaState> {
    let n = mean.len();
    CmaState::new(mean, sigma, SymmetricMatrix::identity(n))
}
