//! Success counts, medians and interquartile ranges over trial records.

use crate::config::Algorithm;
use crate::error::HarnessError;
use crate::trial::TrialRecord;

/// Percentile `q ∈ [0, 1]` of sorted data, interpolating linearly between
/// the closest ranks (`q (n - 1)` as a fractional index).
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile(&v, 0.5)
}

pub fn iqr(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(percentile(&v, 0.75)? - percentile(&v, 0.25)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub function: String,
    pub dim: usize,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub trials: usize,
    pub successes: usize,
    /// Median evaluations over successful trials; `None` without successes.
    pub median_evals: Option<f64>,
    pub iqr: Option<f64>,
}

impl Summary {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Summary of records that share function, dimension, algorithm and `α`.
pub fn aggregate(records: &[TrialRecord]) -> Result<Summary, HarnessError> {
    let first = records
        .first()
        .ok_or_else(|| HarnessError::Config("cannot aggregate zero trials".into()))?;
    let evals: Vec<f64> = records
        .iter()
        .filter(|r| r.success)
        .map(|r| r.evaluations as f64)
        .collect();
    Ok(Summary {
        function: first.function.clone(),
        dim: first.dim,
        algorithm: first.algorithm,
        alpha: first.alpha,
        trials: records.len(),
        successes: evals.len(),
        median_evals: median(&evals),
        iqr: iqr(&evals),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use margin_cma::cma::TerminationReason;

    fn record(success: bool, evaluations: u64) -> TrialRecord {
        TrialRecord {
            function: "SphereInt".into(),
            dim: 4,
            algorithm: Algorithm::CmaEsMargin,
            alpha: 0.1,
            seed: 0,
            success,
            evaluations,
            best_f: 0.0,
            termination: if success {
                TerminationReason::Success
            } else {
                TerminationReason::BudgetExhausted
            },
            history: Vec::new(),
        }
    }

    #[test]
    fn median_and_iqr() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0]), Some(3.25 - 1.75));
        assert_eq!(median(&[]), None);
        assert_eq!(percentile(&[5.0], 0.3), Some(5.0));
    }

    #[test]
    fn aggregate_counts_successes_only() {
        let recs = [record(true, 3), record(false, 100), record(true, 1), record(true, 2)];
        let s = aggregate(&recs).unwrap();
        assert_eq!((s.trials, s.successes), (4, 3));
        assert_eq!(s.median_evals, Some(2.0));
        assert_eq!(s.success_rate(), 0.75);
    }

    #[test]
    fn no_successes_gives_no_median() {
        let s = aggregate(&[record(false, 10)]).unwrap();
        assert_eq!(s.median_evals, None);
        assert_eq!(s.iqr, None);
        assert!(aggregate(&[]).is_err());
    }
}
