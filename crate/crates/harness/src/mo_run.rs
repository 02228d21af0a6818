//! Bi-objective runs: hypervolume and `p_med` traces plus the final
//! population.

use margin_cma::mo::{MoCmaEs, MoIndividual, MoParams};
use margin_cma::numerics::RngStream;
use rayon::prelude::*;

use crate::aggregate::median;
use crate::config::{Algorithm, ExperimentConfig};
use crate::error::HarnessError;
use crate::trial::trial_seeds;

#[derive(Debug, Clone, PartialEq)]
pub struct MoIterationRecord {
    pub iteration: usize,
    pub hypervolume: f64,
    /// Smallest `p_med` in the population; `None` without binary variables.
    pub p_med_min: Option<f64>,
    /// Population median of `p_med`.
    pub p_med_median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalIndividual {
    pub f1: f64,
    pub f2: f64,
    pub encoded: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoTrialRecord {
    pub function: String,
    pub dim: usize,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub lambda: usize,
    pub seed: u64,
    pub iterations: usize,
    pub trace: Vec<MoIterationRecord>,
    pub final_population: Vec<FinalIndividual>,
    /// Smallest `p_med` over every individual and iteration.
    pub min_p_med: Option<f64>,
    pub corrections: usize,
    /// Corrections that changed the encoded search point. Always zero.
    pub encoding_changes: usize,
}

impl MoTrialRecord {
    pub fn final_hypervolume(&self) -> f64 {
        self.trace.last().map_or(0.0, |t| t.hypervolume)
    }

    /// Population-median `p_med` at the last iteration.
    pub fn final_p_med_median(&self) -> Option<f64> {
        self.trace.last().and_then(|t| t.p_med_median)
    }
}

fn p_med_stats(es: &MoCmaEs) -> (Option<f64>, Option<f64>) {
    let values: Vec<f64> = es.population.iter().filter_map(|ind| ind.p_med(es.space())).collect();
    if values.is_empty() {
        return (None, None);
    }
    (values.iter().copied().reduce(f64::min), median(&values))
}

pub fn run_mo_trial(config: &ExperimentConfig, seed: u64, trace_every: usize) -> Result<MoTrialRecord, HarnessError> {
    if !config.algorithm.is_multi_objective() {
        return Err(HarnessError::Config(format!(
            "{} is a single-objective algorithm",
            config.algorithm
        )));
    }
    let spec = config.spec()?;
    let lambda = config.effective_lambda()?;
    let alpha = config.effective_alpha()?;
    let iterations = config.effective_iterations();
    let params = MoParams::new(spec.n, lambda)?.with_alpha(alpha);
    let mut f = |v: &[f64]| spec.evaluate_pair(v).expect("bi-objective benchmark");

    let mut rng = RngStream::new(seed);
    let population = (0..lambda)
        .map(|_| MoIndividual::new(spec.initial_mean(&mut rng), spec.init.sigma, &params, &spec.space, &mut f))
        .collect::<Result<Vec<_>, _>>()?;
    let mut es = MoCmaEs::new(params, population, spec.space.clone())?;

    let mut trace = Vec::new();
    let mut min_p_med: Option<f64> = None;
    let mut corrections = 0;
    let mut encoding_changes = 0;
    for t in 0..=iterations {
        if t > 0 {
            let report = es.step(&mut rng, &mut f)?;
            corrections += report.corrections;
            encoding_changes += report.encoding_changes;
        }
        let (p_min, p_median) = p_med_stats(&es);
        if let Some(p) = p_min {
            min_p_med = Some(min_p_med.map_or(p, |m| m.min(p)));
        }
        if t % trace_every.max(1) == 0 || t == iterations {
            trace.push(MoIterationRecord {
                iteration: t,
                hypervolume: es.hypervolume(),
                p_med_min: p_min,
                p_med_median: p_median,
            });
        }
    }

    let final_population = es
        .population
        .iter()
        .map(|ind| FinalIndividual {
            f1: ind.objectives[0],
            f2: ind.objectives[1],
            encoded: ind.encoded.to_vec(),
        })
        .collect();
    Ok(MoTrialRecord {
        function: spec.benchmark.name().to_string(),
        dim: spec.n,
        algorithm: config.algorithm,
        alpha,
        lambda,
        seed,
        iterations,
        trace,
        final_population,
        min_p_med,
        corrections,
        encoding_changes,
    })
}

/// Run `config.trials` independent trials in the current rayon pool.
pub fn run_mo_trials(config: &ExperimentConfig) -> Result<Vec<MoTrialRecord>, HarnessError> {
    config.validate()?;
    let every = config.trace_every.unwrap_or(1);
    trial_seeds(config.seed, config.trials)
        .into_par_iter()
        .map(|seed| run_mo_trial(config, seed, every))
        .collect()
}
