//! Standard (μ/μ_w, λ)-CMA-ES with weighted recombination, cumulative
//! step-size adaptation, rank-one and rank-μ covariance updates and negative
//! recombination weights, plus the margin post-step for mixed-integer spaces.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::margin::margin_correction;
use crate::numerics::{expected_norm, standard_normal_vector, EigenDecomposition, RngStream, SymmetricMatrix};
use crate::space::{EncodedVector, MixedIntegerSpace};

/// Strategy parameters. [`CmaParams::new`] fills in the standard defaults for
/// a given dimension; fields are public so experiments can override them.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaParams {
    pub dim: usize,
    pub lambda: usize,
    pub mu: usize,
    /// Recombination weights `w_1 ≥ ... ≥ w_λ`; the first `mu` are positive
    /// and sum to one, the rest are non-positive.
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub mu_eff_neg: f64,
    pub c_m: f64,
    pub c_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub d_sigma: f64,
    /// Margin parameter. Zero disables margin correction.
    pub alpha: f64,
    /// `E‖N(0, I)‖` for this dimension.
    pub chi_n: f64,
}

impl CmaParams {
    /// Defaults for dimension `dim` with `λ = 4 + ⌊3 ln N⌋` and
    /// `α = 1 / (N λ)`.
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let lambda = 4 + (3.0 * (dim as f64).ln()).floor() as usize;
        Self::with_lambda(dim, lambda)
    }

    /// Defaults for dimension `dim` and an explicit population size.
    pub fn with_lambda(dim: usize, lambda: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if lambda < 2 {
            return Err(Error::InvalidParameter(format!(
                "population size {lambda} is below 2"
            )));
        }
        let n = dim as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=lambda)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let pos_sum: f64 = raw[..mu].iter().sum();
        let pos_sq: f64 = raw[..mu].iter().map(|w| w * w).sum();
        let mu_eff = pos_sum * pos_sum / pos_sq;
        let neg_sum: f64 = raw[mu..].iter().sum();
        let neg_sq: f64 = raw[mu..].iter().map(|w| w * w).sum();
        let mu_eff_neg = if neg_sq > 0.0 { neg_sum * neg_sum / neg_sq } else { 0.0 };

        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let d_sigma = 1.0 + c_sigma + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0);

        let neg_abs_sum: f64 = raw[mu..].iter().map(|w| w.abs()).sum();
        let neg_scale = (1.0 + c_1 / c_mu)
            .min(1.0 + 2.0 * mu_eff_neg / (mu_eff + 2.0))
            .min((1.0 - c_1 - c_mu) / (n * c_mu));
        let weights = raw
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                if i < mu {
                    w / pos_sum
                } else if neg_abs_sum > 0.0 {
                    w / neg_abs_sum * neg_scale
                } else {
                    0.0
                }
            })
            .collect();

        Ok(Self {
            dim,
            lambda,
            mu,
            weights,
            mu_eff,
            mu_eff_neg,
            c_m: 1.0,
            c_sigma,
            c_c,
            c_1,
            c_mu,
            d_sigma,
            alpha: 1.0 / (n * lambda as f64),
            chi_n: expected_norm(dim),
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Table defaults for dimension `n`.
pub fn default_params(n: usize) -> Result<CmaParams> {
    CmaParams::new(n)
}

/// Distribution state `(m, σ, C, p_σ, p_c, A, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaState {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: SymmetricMatrix,
    pub path_sigma: DVector<f64>,
    pub path_c: DVector<f64>,
    /// Diagonal of the margin affine matrix `A`.
    pub affine: DVector<f64>,
    pub iteration: usize,
}

impl CmaState {
    pub fn new(mean: DVector<f64>, sigma: f64, cov: SymmetricMatrix) -> Result<Self> {
        let n = mean.len();
        if cov.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: cov.dim(),
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("step size {sigma} is not positive")));
        }
        Ok(Self {
            mean,
            sigma,
            cov,
            path_sigma: DVector::zeros(n),
            path_c: DVector::zeros(n),
            affine: DVector::from_element(n, 1.0),
            iteration: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Coordinate-wise standard deviations `σ √C_jj` of `x`.
    pub fn coordinate_std(&self) -> DVector<f64> {
        self.cov.diagonal().map(|c| self.sigma * c.sqrt())
    }
}

/// `C^{1/2}` and `C^{-1/2}` from one eigendecomposition of `C`.
#[derive(Debug, Clone)]
pub struct CovarianceFactors {
    pub sqrt: SymmetricMatrix,
    pub inv_sqrt: SymmetricMatrix,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl CovarianceFactors {
    pub fn new(cov: &SymmetricMatrix) -> Result<Self> {
        Self::from_decomposition(&cov.decompose())
    }

    pub fn from_decomposition(eig: &EigenDecomposition) -> Result<Self> {
        Ok(Self {
            sqrt: eig.sqrt()?,
            inv_sqrt: eig.inverse_sqrt()?,
            min_eigenvalue: eig.min_eigenvalue(),
            max_eigenvalue: eig.max_eigenvalue(),
        })
    }
}

/// One sampled candidate: `y ~ N(0, C)`, `x = m + σ y`, `v = m + σ A y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub v: DVector<f64>,
}

/// Candidate after evaluation and ranking (`rank` is 1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct RankedSample {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub encoded: EncodedVector,
    pub fitness: f64,
    pub rank: usize,
}

pub fn sample_population(
    state: &CmaState,
    params: &CmaParams,
    factors: &CovarianceFactors,
    rng: &mut RngStream,
) -> Result<Vec<Sample>> {
    let n = state.dim();
    (0..params.lambda)
        .map(|_| {
            let xi = standard_normal_vector(rng, n)?;
            let y = factors.sqrt.as_matrix() * xi;
            let x = &state.mean + &y * state.sigma;
            let v = &state.mean + y.component_mul(&state.affine) * state.sigma;
            Ok(Sample { x, y, v })
        })
        .collect()
}

/// Indices sorted by ascending fitness. The sort is stable, so ties keep
/// sample order.
pub fn rank_by_fitness(fitness: &[f64]) -> Result<Vec<usize>> {
    if let Some((index, &value)) = fitness.iter().enumerate().find(|(_, f)| !f.is_finite()) {
        return Err(Error::NonFiniteFitness { index, value });
    }
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[a].total_cmp(&fitness[b]));
    Ok(order)
}

/// Mean, evolution paths, covariance and step size update from a ranked
/// population. `inv_sqrt` must be `C^{-1/2}` of the current covariance.
/// The affine diagonal is carried over unchanged.
pub fn update_step(
    state: &CmaState,
    params: &CmaParams,
    ranked: &[RankedSample],
    inv_sqrt: &SymmetricMatrix,
) -> Result<CmaState> {
    let n = state.dim();
    if ranked.len() != params.lambda {
        return Err(Error::DimensionMismatch {
            expected: params.lambda,
            actual: ranked.len(),
        });
    }
    if params.dim != n || inv_sqrt.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: params.dim,
        });
    }

    let mut y_w = DVector::zeros(n);
    let mut shift = DVector::zeros(n);
    for (s, &w) in ranked.iter().zip(&params.weights).take(params.mu) {
        y_w.axpy(w, &s.y, 1.0);
        shift.axpy(w, &(&s.x - &state.mean), 1.0);
    }
    let mean = &state.mean + shift * params.c_m;

    let cs = params.c_sigma;
    let path_sigma = &state.path_sigma * (1.0 - cs)
        + inv_sqrt.as_matrix() * &y_w * (cs * (2.0 - cs) * params.mu_eff).sqrt();
    let ps_norm = path_sigma.norm();
    let generation = (state.iteration + 1) as f64;
    let h_sigma = ps_norm
        < (1.0 - (1.0 - cs).powf(2.0 * generation)).sqrt()
            * (1.4 + 2.0 / (n as f64 + 1.0))
            * params.chi_n;
    let h = if h_sigma { 1.0 } else { 0.0 };

    let cc = params.c_c;
    let path_c = &state.path_c * (1.0 - cc) + &y_w * (h * (cc * (2.0 - cc) * params.mu_eff).sqrt());

    let weight_sum: f64 = params.weights.iter().sum();
    let decay = 1.0 - params.c_1 - params.c_mu * weight_sum + (1.0 - h) * params.c_1 * cc * (2.0 - cc);
    let mut cov = state.cov.as_matrix() * decay;
    cov.ger(params.c_1, &path_c, &path_c, 1.0);
    for (s, &w) in ranked.iter().zip(&params.weights) {
        let w_circ = if w >= 0.0 {
            w
        } else {
            let norm_sq = (inv_sqrt.as_matrix() * &s.y).norm_squared();
            if norm_sq > 0.0 {
                w * n as f64 / norm_sq
            } else {
                0.0
            }
        };
        if w_circ != 0.0 {
            cov.ger(params.c_mu * w_circ, &s.y, &s.y, 1.0);
        }
    }
    let cov = SymmetricMatrix::new(cov)?;

    let sigma = state.sigma * ((cs / params.d_sigma) * (ps_norm / params.chi_n - 1.0)).exp();

    Ok(CmaState {
        mean,
        sigma,
        cov,
        path_sigma,
        path_c,
        affine: state.affine.clone(),
        iteration: state.iteration + 1,
    })
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TerminationReason {
    /// Best evaluated value fell below `SUCCESS_THRESHOLD`.
    Success,
    /// Smallest eigenvalue of `σ² C` fell below `MIN_EIGENVALUE`.
    MinEigen,
    /// Condition number of `C` exceeded `MAX_CONDITION`.
    IllConditioned,
    BudgetExhausted,
    /// The run aborted on a numerical error (non-finite state, indefinite
    /// covariance).
    NumericalAbort,
}

impl TerminationReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationReason::Success => "success",
            TerminationReason::MinEigen => "min-eigen",
            TerminationReason::IllConditioned => "ill-conditioned",
            TerminationReason::BudgetExhausted => "budget-exhausted",
            TerminationReason::NumericalAbort => "numerical-abort",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "success" => TerminationReason::Success,
            "min-eigen" => TerminationReason::MinEigen,
            "ill-conditioned" => TerminationReason::IllConditioned,
            "budget-exhausted" => TerminationReason::BudgetExhausted,
            "numerical-abort" => TerminationReason::NumericalAbort,
            _ => return None,
        })
    }
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const SUCCESS_THRESHOLD: f64 = 1e-10;
pub const MIN_EIGENVALUE: f64 = 1e-30;
pub const MAX_CONDITION: f64 = 1e14;

/// Stopping rule given the eigenvalue extremes of `C`.
pub fn termination_from_extremes(
    sigma: f64,
    min_eigenvalue: f64,
    max_eigenvalue: f64,
    best_f: f64,
    evaluations: u64,
    budget: u64,
) -> Option<TerminationReason> {
    if best_f < SUCCESS_THRESHOLD {
        Some(TerminationReason::Success)
    } else if !(sigma * sigma * min_eigenvalue >= MIN_EIGENVALUE) {
        Some(TerminationReason::MinEigen)
    } else if max_eigenvalue / min_eigenvalue > MAX_CONDITION {
        Some(TerminationReason::IllConditioned)
    } else if evaluations >= budget {
        Some(TerminationReason::BudgetExhausted)
    } else {
        None
    }
}

pub fn termination_check(
    state: &CmaState,
    best_f: f64,
    evaluations: u64,
    budget: u64,
) -> Option<TerminationReason> {
    let eig = state.cov.decompose();
    termination_from_extremes(
        state.sigma,
        eig.min_eigenvalue(),
        eig.max_eigenvalue(),
        best_f,
        evaluations,
        budget,
    )
}

/// Outcome of one generation.
#[derive(Debug, Clone)]
pub struct Generation {
    pub best_fitness: f64,
    pub best: RankedSample,
    pub evaluations: usize,
}

/// CMA-ES with Margin on a mixed-integer space. With `alpha == 0` (or a
/// purely continuous space) this is plain CMA-ES.
#[derive(Debug, Clone)]
pub struct CmaEs {
    pub params: CmaParams,
    pub state: CmaState,
    space: MixedIntegerSpace,
}

impl CmaEs {
    pub fn new(params: CmaParams, state: CmaState, space: MixedIntegerSpace) -> Result<Self> {
        if params.dim != state.dim() || space.dim() != state.dim() {
            return Err(Error::DimensionMismatch {
                expected: state.dim(),
                actual: params.dim.max(space.dim()),
            });
        }
        if !(0.0..0.5).contains(&params.alpha) {
            return Err(Error::InvalidParameter(format!(
                "margin {} must lie in [0, 0.5)",
                params.alpha
            )));
        }
        Ok(Self { params, state, space })
    }

    pub fn space(&self) -> &MixedIntegerSpace {
        &self.space
    }

    /// Sample, evaluate `f` on the encoded `v`, update and margin-correct.
    pub fn step<F>(&mut self, factors: &CovarianceFactors, rng: &mut RngStream, mut f: F) -> Result<Generation>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let samples = sample_population(&self.state, &self.params, factors, rng)?;
        let mut encoded = Vec::with_capacity(samples.len());
        let mut fitness = Vec::with_capacity(samples.len());
        for s in &samples {
            let e = self.space.encode(s.v.as_slice())?;
            fitness.push(f(&e));
            encoded.push(e);
        }
        let order = rank_by_fitness(&fitness)?;
        let ranked = rank_samples(samples, encoded, &fitness, &order);

        let mut next = update_step(&self.state, &self.params, &ranked, &factors.inv_sqrt)?;
        if self.params.alpha > 0.0 {
            let (mean, affine) = margin_correction(
                &next.mean,
                &self.state.affine,
                next.sigma,
                &next.cov,
                &self.space,
                self.params.alpha,
            )?;
            next.mean = mean;
            next.affine = affine;
        }
        self.state = next;
        Ok(Generation {
            best_fitness: ranked[0].fitness,
            best: ranked[0].clone(),
            evaluations: ranked.len(),
        })
    }
}

/// Reorder samples by `order` and attach fitness and 1-based ranks.
pub fn rank_samples(
    samples: Vec<Sample>,
    encoded: Vec<EncodedVector>,
    fitness: &[f64],
    order: &[usize],
) -> Vec<RankedSample> {
    let mut slots: Vec<Option<(Sample, EncodedVector)>> =
        samples.into_iter().zip(encoded).map(Some).collect();
    order
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let (s, e) = slots[i].take().expect("order is a permutation");
            RankedSample {
                x: s.x,
                y: s.y,
                encoded: e,
                fitness: fitness[i],
                rank: r + 1,
            }
        })
        .collect()
}
