//! Single-objective trials: CMA-ES with margin and the integer-mutation
//! baselines, run to termination.

use margin_cma::cma::{
    termination_from_extremes, CmaEs, CmaParams, CmaState, CovarianceFactors, Generation, TerminationReason,
};
use margin_cma::im::{BoxConstraint, CmaEsIm};
use margin_cma::numerics::{derive_seed, RngStream, SymmetricMatrix};
use margin_cma::space::MixedIntegerSpace;
use rayon::prelude::*;

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::HarnessError;

/// Distribution snapshot taken at the start of an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSnapshot {
    pub iteration: usize,
    pub evaluations: u64,
    pub sigma: f64,
    /// Best value evaluated so far (`inf` before the first evaluation).
    pub best_f: f64,
    pub mean: Vec<f64>,
    /// Coordinate-wise standard deviations `σ √C_jj`.
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub function: String,
    pub dim: usize,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub seed: u64,
    pub success: bool,
    pub evaluations: u64,
    pub best_f: f64,
    pub termination: TerminationReason,
    pub history: Vec<IterationSnapshot>,
}

/// Per-trial seeds derived from the master seed.
pub fn trial_seeds(master: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64).map(|i| derive_seed(master, i)).collect()
}

enum Optimizer {
    Margin(CmaEs),
    Im(CmaEsIm),
}

impl Optimizer {
    fn state(&self) -> &CmaState {
        match self {
            Optimizer::Margin(es) => &es.state,
            Optimizer::Im(es) => &es.state,
        }
    }

    fn step<F>(&mut self, factors: &CovarianceFactors, rng: &mut RngStream, f: F) -> margin_cma::Result<Generation>
    where
        F: FnMut(&[f64]) -> f64,
    {
        match self {
            Optimizer::Margin(es) => es.step(factors, rng, f),
            Optimizer::Im(es) => es.step(factors, rng, f),
        }
    }
}

fn box_for(config: &ExperimentConfig, space: &MixedIntegerSpace) -> BoxConstraint {
    let binary = config.box_binary.unwrap_or([-1.0, 1.0]);
    let integer = config.box_integer.unwrap_or([-10.0, 10.0]);
    let bounds = (0..space.dim())
        .map(|j| {
            if space.is_binary(j) {
                Some((binary[0], binary[1]))
            } else if space.is_discrete(j) {
                Some((integer[0], integer[1]))
            } else {
                None
            }
        })
        .collect();
    BoxConstraint::new(bounds).expect("validated box bounds")
}

fn snapshot(state: &CmaState, iteration: usize, evaluations: u64, best_f: f64) -> IterationSnapshot {
    IterationSnapshot {
        iteration,
        evaluations,
        sigma: state.sigma,
        best_f,
        mean: state.mean.iter().copied().collect(),
        std: state.coordinate_std().iter().copied().collect(),
    }
}

/// Run one trial without keeping a history.
pub fn run_trial(config: &ExperimentConfig, seed: u64) -> Result<TrialRecord, HarnessError> {
    run_trial_traced(config, seed, None)
}

/// Run one trial. With `trace_every = Some(k)` the state at the start of
/// every k-th iteration and the final state are kept.
pub fn run_trial_traced(
    config: &ExperimentConfig,
    seed: u64,
    trace_every: Option<usize>,
) -> Result<TrialRecord, HarnessError> {
    if config.algorithm.is_multi_objective() {
        return Err(HarnessError::Config(format!(
            "{} is a multi-objective algorithm",
            config.algorithm
        )));
    }
    let spec = config.spec()?;
    let n = spec.n;
    let lambda = config.effective_lambda()?;
    let alpha = config.effective_alpha()?;
    let budget = config.effective_budget();
    let params = CmaParams::with_lambda(n, lambda)?.with_alpha(alpha);

    let mut rng = RngStream::new(seed);
    let mean = spec.initial_mean(&mut rng);
    let state = CmaState::new(mean, spec.init.sigma, SymmetricMatrix::identity(n))?;
    let mut opt = match config.algorithm {
        Algorithm::CmaEsMargin => Optimizer::Margin(CmaEs::new(params, state, spec.space.clone())?),
        Algorithm::CmaEsIm => Optimizer::Im(CmaEsIm::new(params, state, spec.space.clone(), None)?),
        Algorithm::CmaEsImBox => {
            let b = box_for(config, &spec.space);
            Optimizer::Im(CmaEsIm::new(params, state, spec.space.clone(), Some(b))?)
        }
        Algorithm::MoCmaEs | Algorithm::MoCmaEsMargin => unreachable!("checked above"),
    };

    let mut best_f = f64::INFINITY;
    let mut evaluations = 0u64;
    let mut history = Vec::new();
    let mut iteration = 0usize;
    let termination = loop {
        let state = opt.state();
        if !(state.sigma.is_finite() && state.cov.is_finite() && state.mean.iter().all(|m| m.is_finite())) {
            break TerminationReason::NumericalAbort;
        }
        if let Some(every) = trace_every {
            if iteration % every == 0 {
                history.push(snapshot(state, iteration, evaluations, best_f));
            }
        }
        let eig = state.cov.decompose();
        if let Some(reason) = termination_from_extremes(
            state.sigma,
            eig.min_eigenvalue(),
            eig.max_eigenvalue(),
            best_f,
            evaluations,
            budget,
        ) {
            break reason;
        }
        let Ok(factors) = CovarianceFactors::from_decomposition(&eig) else {
            break TerminationReason::NumericalAbort;
        };
        match opt.step(&factors, &mut rng, |v| spec.evaluate(v).expect("single-objective benchmark")) {
            Ok(generation) => {
                evaluations += generation.evaluations as u64;
                best_f = best_f.min(generation.best_fitness);
            }
            Err(_) => break TerminationReason::NumericalAbort,
        }
        iteration += 1;
    };
    if trace_every.is_some() && history.last().map(|h| h.iteration) != Some(iteration) {
        history.push(snapshot(opt.state(), iteration, evaluations, best_f));
    }

    Ok(TrialRecord {
        function: spec.benchmark.name().to_string(),
        dim: n,
        algorithm: config.algorithm,
        alpha,
        seed,
        success: termination == TerminationReason::Success,
        evaluations,
        best_f,
        termination,
        history,
    })
}

/// Run `config.trials` trials in the current rayon pool. Records come back in
/// trial order regardless of scheduling.
pub fn run_trials(config: &ExperimentConfig, trace_every: Option<usize>) -> Result<Vec<TrialRecord>, HarnessError> {
    config.validate()?;
    trial_seeds(config.seed, config.trials)
        .into_par_iter()
        .map(|seed| run_trial_traced(config, seed, trace_every))
        .collect()
}
