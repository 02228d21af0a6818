//! Sensitivity of CMA-ES with margin to `α = N^{-m} λ^{-n}`.

use rayon::prelude::*;

use crate::aggregate::{aggregate, Summary};
use crate::config::{Algorithm, ExperimentConfig};
use crate::error::HarnessError;
use crate::trial::{run_trial, trial_seeds, TrialRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub m: f64,
    pub n: f64,
    pub alpha: f64,
    pub summary: Summary,
}

/// Exponent pairs of the grid, row-major in `m`, without `(0, 0)` (`α = 1`).
pub fn sweep_grid(exponents: &[f64]) -> Vec<(f64, f64)> {
    exponents
        .iter()
        .flat_map(|&m| exponents.iter().map(move |&n| (m, n)))
        .filter(|&(m, n)| !(m == 0.0 && n == 0.0))
        .collect()
}

pub fn sweep_alpha(dim: usize, lambda: usize, m: f64, n: f64) -> f64 {
    (dim as f64).powf(-m) * (lambda as f64).powf(-n)
}

/// One summary per grid cell. Every cell reuses the same per-trial seeds.
pub fn alpha_sweep(config: &ExperimentConfig) -> Result<Vec<SweepCell>, HarnessError> {
    if config.algorithm != Algorithm::CmaEsMargin {
        return Err(HarnessError::Config(format!(
            "sweep-alpha needs algorithm cma-es-margin, got {}",
            config.algorithm
        )));
    }
    config.validate()?;
    let lambda = config.effective_lambda()?;
    let exponents = config.sweep.clone().unwrap_or_default().exponents;
    let cells: Vec<(f64, f64, ExperimentConfig)> = sweep_grid(&exponents)
        .into_iter()
        .map(|(m, n)| {
            let mut c = config.clone();
            c.alpha = Some(sweep_alpha(config.dim, lambda, m, n));
            c.sweep = None;
            (m, n, c)
        })
        .collect();
    for (_, _, c) in &cells {
        c.validate()?;
    }
    let seeds = trial_seeds(config.seed, config.trials);
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|cell| seeds.iter().map(move |&s| (cell, s)))
        .collect();
    let records: Vec<TrialRecord> = jobs
        .into_par_iter()
        .map(|(cell, seed)| run_trial(&cells[cell].2, seed))
        .collect::<Result<_, _>>()?;
    cells
        .iter()
        .zip(records.chunks(config.trials))
        .map(|((m, n, c), recs)| {
            Ok(SweepCell {
                m: *m,
                n: *n,
                alpha: c.alpha.expect("set above"),
                summary: aggregate(recs)?,
            })
        })
        .collect()
}
