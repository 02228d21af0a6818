//! Experiment configuration, read from TOML.
//!
//! ```toml
//! algorithm = "cma-es-margin"
//! benchmark = "SphereOneMax"
//! dim = 20
//! trials = 100
//! seed = 1
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use margin_cma::benchmarks::{Benchmark, BenchmarkSpec};
use margin_cma::cma::CmaParams;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    CmaEsMargin,
    CmaEsIm,
    CmaEsImBox,
    MoCmaEs,
    MoCmaEsMargin,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::CmaEsMargin => "cma-es-margin",
            Algorithm::CmaEsIm => "cma-es-im",
            Algorithm::CmaEsImBox => "cma-es-im-box",
            Algorithm::MoCmaEs => "mo-cma-es",
            Algorithm::MoCmaEsMargin => "mo-cma-es-margin",
        }
    }

    pub fn is_multi_objective(&self) -> bool {
        matches!(self, Algorithm::MoCmaEs | Algorithm::MoCmaEsMargin)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Exponent grid for `α = N^{-m} λ^{-n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_exponents")]
    pub exponents: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            exponents: default_exponents(),
        }
    }
}

pub fn default_exponents() -> Vec<f64> {
    vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
}

/// Single-objective evaluation budget when none is configured.
pub const DEFAULT_BUDGET: u64 = 1_000_000;
/// Multi-objective iteration count when none is configured.
pub const DEFAULT_MO_ITERATIONS: usize = 2000;
/// Multi-objective population size when none is configured.
pub const DEFAULT_MO_LAMBDA: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub benchmark: String,
    /// Total dimension `N`, split evenly between continuous and discrete.
    pub dim: usize,
    #[serde(default = "one")]
    pub trials: usize,
    /// Master seed; per-trial seeds are derived from it.
    #[serde(default)]
    pub seed: u64,
    /// Margin parameter. Defaults to `1 / (N λ)`; ignored by the IM baseline.
    #[serde(default)]
    pub alpha: Option<f64>,
    /// Population size override.
    #[serde(default)]
    pub lambda: Option<usize>,
    /// Maximum number of evaluations (single-objective).
    #[serde(default)]
    pub budget: Option<u64>,
    /// Number of iterations (multi-objective).
    #[serde(default)]
    pub iterations: Option<usize>,
    /// Box on binary coordinates for `cma-es-im-box`, default `[-1, 1]`.
    #[serde(default)]
    pub box_binary: Option<[f64; 2]>,
    /// Box on integer coordinates for `cma-es-im-box`, default `[-10, 10]`.
    #[serde(default)]
    pub box_integer: Option<[f64; 2]>,
    /// Value range of integer coordinates.
    #[serde(default)]
    pub integer_range: Option<[i64; 2]>,
    /// Keep every k-th iteration in traces.
    #[serde(default)]
    pub trace_every: Option<usize>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Output directory.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// Minimal configuration with every optional field unset.
    pub fn new(algorithm: Algorithm, benchmark: Benchmark, dim: usize) -> Self {
        Self {
            algorithm,
            benchmark: benchmark.name().to_string(),
            dim,
            trials: 1,
            seed: 0,
            alpha: None,
            lambda: None,
            budget: None,
            iterations: None,
            box_binary: None,
            box_integer: None,
            integer_range: None,
            trace_every: None,
            sweep: None,
            output: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn benchmark(&self) -> Result<Benchmark, HarnessError> {
        Benchmark::parse(&self.benchmark)
            .ok_or_else(|| HarnessError::Config(format!("unknown benchmark {:?}", self.benchmark)))
    }

    pub fn spec(&self) -> Result<BenchmarkSpec, HarnessError> {
        let range = self.integer_range.map(|[lo, hi]| (lo, hi));
        BenchmarkSpec::with_integer_range(self.benchmark()?, self.dim, range)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    /// Population size actually used.
    pub fn effective_lambda(&self) -> Result<usize, HarnessError> {
        if let Some(l) = self.lambda {
            return Ok(l);
        }
        if self.algorithm.is_multi_objective() {
            return Ok(DEFAULT_MO_LAMBDA);
        }
        Ok(CmaParams::new(self.dim).map_err(|e| HarnessError::Config(e.to_string()))?.lambda)
    }

    /// Margin actually used: 0 for algorithms without margin.
    pub fn effective_alpha(&self) -> Result<f64, HarnessError> {
        Ok(match self.algorithm {
            Algorithm::CmaEsIm | Algorithm::CmaEsImBox | Algorithm::MoCmaEs => 0.0,
            Algorithm::CmaEsMargin | Algorithm::MoCmaEsMargin => match self.alpha {
                Some(a) => a,
                None => 1.0 / (self.dim as f64 * self.effective_lambda()? as f64),
            },
        })
    }

    pub fn effective_budget(&self) -> u64 {
        self.budget.unwrap_or(DEFAULT_BUDGET)
    }

    pub fn effective_iterations(&self) -> usize {
        self.iterations.unwrap_or(DEFAULT_MO_ITERATIONS)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        let bench = self.benchmark()?;
        if self.trials == 0 {
            return err("trials must be at least 1".into());
        }
        if bench.is_multi_objective() != self.algorithm.is_multi_objective() {
            return err(format!("algorithm {} cannot run benchmark {}", self.algorithm, bench));
        }
        self.spec()?;
        if let Some(l) = self.lambda {
            if l < 2 {
                return err(format!("lambda {l} is below 2"));
            }
        }
        if let Some(a) = self.alpha {
            if !(0.0..0.5).contains(&a) {
                return err(format!("alpha {a} must lie in [0, 0.5)"));
            }
        }
        for b in [self.box_binary, self.box_integer].into_iter().flatten() {
            if !(b[0] <= b[1]) {
                return err(format!("box [{}, {}] is empty", b[0], b[1]));
            }
        }
        if self.trace_every == Some(0) {
            return err("trace_every must be positive".into());
        }
        if let Some(s) = &self.sweep {
            if s.exponents.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                return err("sweep exponents must be finite and non-negative".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let c = ExperimentConfig::from_toml(
            r#"
            algorithm = "cma-es-margin"
            benchmark = "SphereInt"
            dim = 20
            "#,
        )
        .unwrap();
        assert_eq!(c.trials, 1);
        assert_eq!(c.effective_lambda().unwrap(), 12);
        assert!((c.effective_alpha().unwrap() - 1.0 / 240.0).abs() < 1e-15);
        assert_eq!(c.effective_budget(), DEFAULT_BUDGET);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            "algorithm = \"cma-es-margin\"\nbenchmark = \"SphereInt\"\ndim = 20\ncolour = 1",
            "algorithm = \"nope\"\nbenchmark = \"SphereInt\"\ndim = 20",
            "algorithm = \"cma-es-margin\"\nbenchmark = \"Rosenbrock\"\ndim = 20",
            "algorithm = \"cma-es-margin\"\nbenchmark = \"SphereInt\"\ndim = 7",
            "algorithm = \"cma-es-margin\"\nbenchmark = \"DSLOTZ\"\ndim = 20",
            "algorithm = \"cma-es-margin\"\nbenchmark = \"SphereInt\"\ndim = 20\ntrials = 0",
            "algorithm = \"cma-es-margin\"\nbenchmark = \"SphereInt\"\ndim = 20\nalpha = 0.7",
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(HarnessError::Config(_))), "{text}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut c = ExperimentConfig::new(Algorithm::MoCmaEsMargin, Benchmark::Dslotz, 30);
        c.iterations = Some(50);
        c.sweep = Some(SweepConfig::default());
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.effective_lambda().unwrap(), DEFAULT_MO_LAMBDA);
    }

    #[test]
    fn baselines_run_without_margin() {
        let mut c = ExperimentConfig::new(Algorithm::CmaEsIm, Benchmark::SphereOneMax, 10);
        c.alpha = Some(0.1);
        assert_eq!(c.effective_alpha().unwrap(), 0.0);
    }
}
