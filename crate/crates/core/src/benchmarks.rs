//! Mixed-integer benchmark functions with their search spaces and
//! initialization recipes.
//!
//! Every evaluator takes an encoded vector whose first `n_co` entries are
//! continuous and whose remaining entries are binary or integer.

use std::fmt;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::space::MixedIntegerSpace;

fn ellipsoid_weight(j: usize, len: usize) -> f64 {
    if len <= 1 {
        1.0
    } else {
        1000f64.powf(j as f64 / (len - 1) as f64)
    }
}

fn sphere(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn ellipsoid(v: &[f64]) -> f64 {
    v.iter()
        .enumerate()
        .map(|(j, x)| (ellipsoid_weight(j, v.len()) * x).powi(2))
        .sum()
}

/// `N_bi - Σ bits`.
fn onemax_deficit(bits: &[f64]) -> f64 {
    bits.len() as f64 - bits.iter().sum::<f64>()
}

fn leading_ones(bits: &[f64]) -> f64 {
    bits.iter().take_while(|&&b| b == 1.0).count() as f64
}

fn trailing_zeros(bits: &[f64]) -> f64 {
    bits.iter().rev().take_while(|&&b| b == 0.0).count() as f64
}

pub fn eval_sphere_onemax(v: &[f64], n_co: usize) -> f64 {
    sphere(&v[..n_co]) + onemax_deficit(&v[n_co..])
}

pub fn eval_sphere_leadingones(v: &[f64], n_co: usize) -> f64 {
    let bits = &v[n_co..];
    sphere(&v[..n_co]) + bits.len() as f64 - leading_ones(bits)
}

pub fn eval_ellipsoid_onemax(v: &[f64], n_co: usize) -> f64 {
    ellipsoid(&v[..n_co]) + onemax_deficit(&v[n_co..])
}

pub fn eval_ellipsoid_leadingones(v: &[f64], n_co: usize) -> f64 {
    let bits = &v[n_co..];
    ellipsoid(&v[..n_co]) + bits.len() as f64 - leading_ones(bits)
}

pub fn eval_sphere_int(v: &[f64]) -> f64 {
    sphere(v)
}

/// Conditioning runs over all `N` coordinates, continuous and integer alike.
pub fn eval_ellipsoid_int(v: &[f64]) -> f64 {
    ellipsoid(v)
}

/// Double sphere on the continuous part combined with leading ones and
/// trailing zeros on the bits, each part normalized by its length.
pub fn eval_dslotz(v: &[f64], n_co: usize) -> [f64; 2] {
    let (co, bits) = v.split_at(n_co);
    let nc = co.len() as f64;
    let nb = bits.len() as f64;
    let f1 = sphere(co) / nc + (nb - leading_ones(bits)) / nb;
    let f2 = co.iter().map(|x| (1.0 - x).powi(2)).sum::<f64>() / nc + (nb - trailing_zeros(bits)) / nb;
    [f1, f2]
}

/// Double sphere with optima at 0 and 10, partially integerized.
pub fn eval_dsint(v: &[f64], n_co: usize) -> [f64; 2] {
    let (co, int) = v.split_at(n_co);
    let part = |xs: &[f64], c: f64| xs.iter().map(|x| (c - x).powi(2)).sum::<f64>() / (100.0 * xs.len() as f64);
    [part(co, 0.0) + part(int, 0.0), part(co, 10.0) + part(int, 10.0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    SphereOneMax,
    SphereLeadingOnes,
    EllipsoidOneMax,
    EllipsoidLeadingOnes,
    SphereInt,
    EllipsoidInt,
    Dslotz,
    DsInt,
}

impl Benchmark {
    pub const ALL: [Benchmark; 8] = [
        Benchmark::SphereOneMax,
        Benchmark::SphereLeadingOnes,
        Benchmark::EllipsoidOneMax,
        Benchmark::EllipsoidLeadingOnes,
        Benchmark::SphereInt,
        Benchmark::EllipsoidInt,
        Benchmark::Dslotz,
        Benchmark::DsInt,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Benchmark::SphereOneMax => "SphereOneMax",
            Benchmark::SphereLeadingOnes => "SphereLeadingOnes",
            Benchmark::EllipsoidOneMax => "EllipsoidOneMax",
            Benchmark::EllipsoidLeadingOnes => "EllipsoidLeadingOnes",
            Benchmark::SphereInt => "SphereInt",
            Benchmark::EllipsoidInt => "EllipsoidInt",
            Benchmark::Dslotz => "DSLOTZ",
            Benchmark::DsInt => "DSInt",
        }
    }

    /// Case-insensitive lookup by name.
    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name().eq_ignore_ascii_case(name))
    }

    pub fn is_multi_objective(&self) -> bool {
        matches!(self, Benchmark::Dslotz | Benchmark::DsInt)
    }

    pub fn has_binary(&self) -> bool {
        matches!(
            self,
            Benchmark::SphereOneMax
                | Benchmark::SphereLeadingOnes
                | Benchmark::EllipsoidOneMax
                | Benchmark::EllipsoidLeadingOnes
                | Benchmark::Dslotz
        )
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How one coordinate of the initial mean is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanInit {
    Constant(f64),
    Uniform(f64, f64),
}

impl MeanInit {
    fn draw(&self, rng: &mut RngStream) -> f64 {
        match *self {
            MeanInit::Constant(c) => c,
            MeanInit::Uniform(lo, hi) => rng.uniform(lo, hi),
        }
    }
}

/// Initial distribution: mean recipe per group, `σ⁰`, and `C⁰ = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitRecipe {
    pub continuous: MeanInit,
    pub discrete: MeanInit,
    pub sigma: f64,
}

/// A benchmark instance: function, dimension split, space and initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub benchmark: Benchmark,
    pub n: usize,
    pub n_co: usize,
    pub space: MixedIntegerSpace,
    pub init: InitRecipe,
}

/// Integer values of the multi-objective integer benchmark unless overridden.
pub const DSINT_DEFAULT_RANGE: (i64, i64) = (-10, 20);
/// Integer values of the single-objective integer benchmarks.
pub const INT_RANGE: (i64, i64) = (-10, 10);

impl BenchmarkSpec {
    /// Instance with `N_co = N / 2`; `n` must be even and at least 2.
    pub fn new(benchmark: Benchmark, n: usize) -> Result<Self> {
        Self::with_integer_range(benchmark, n, None)
    }

    /// As [`BenchmarkSpec::new`] with an explicit integer value range.
    pub fn with_integer_range(benchmark: Benchmark, n: usize, range: Option<(i64, i64)>) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidSpace(format!(
                "{benchmark} needs an even dimension of at least 2, got {n}"
            )));
        }
        let half = n / 2;
        let so_init = InitRecipe {
            continuous: MeanInit::Uniform(1.0, 3.0),
            discrete: MeanInit::Constant(0.0),
            sigma: 1.0,
        };
        let (space, init) = match benchmark {
            Benchmark::SphereOneMax
            | Benchmark::SphereLeadingOnes
            | Benchmark::EllipsoidOneMax
            | Benchmark::EllipsoidLeadingOnes => (MixedIntegerSpace::continuous_binary(half, half)?, so_init),
            Benchmark::SphereInt | Benchmark::EllipsoidInt => {
                let (lo, hi) = range.unwrap_or(INT_RANGE);
                (MixedIntegerSpace::continuous_integer(half, half, lo, hi)?, so_init)
            }
            Benchmark::Dslotz => (
                MixedIntegerSpace::continuous_binary(half, half)?,
                InitRecipe {
                    continuous: MeanInit::Uniform(0.0, 1.0),
                    discrete: MeanInit::Uniform(0.0, 1.0),
                    sigma: 1.0,
                },
            ),
            Benchmark::DsInt => {
                let (lo, hi) = range.unwrap_or(DSINT_DEFAULT_RANGE);
                (
                    MixedIntegerSpace::continuous_integer(half, half, lo, hi)?,
                    InitRecipe {
                        continuous: MeanInit::Uniform(0.0, 10.0),
                        discrete: MeanInit::Uniform(0.0, 10.0),
                        sigma: 5.0,
                    },
                )
            }
        };
        Ok(Self {
            benchmark,
            n,
            n_co: half,
            space,
            init,
        })
    }

    /// Draw an initial mean (or search point) following the recipe.
    pub fn initial_mean(&self, rng: &mut RngStream) -> DVector<f64> {
        DVector::from_fn(self.n, |j, _| {
            if j < self.n_co {
                self.init.continuous.draw(rng)
            } else {
                self.init.discrete.draw(rng)
            }
        })
    }

    /// Value of a single-objective benchmark.
    pub fn evaluate(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v)?;
        let n_co = self.n_co;
        Ok(match self.benchmark {
            Benchmark::SphereOneMax => eval_sphere_onemax(v, n_co),
            Benchmark::SphereLeadingOnes => eval_sphere_leadingones(v, n_co),
            Benchmark::EllipsoidOneMax => eval_ellipsoid_onemax(v, n_co),
            Benchmark::EllipsoidLeadingOnes => eval_ellipsoid_leadingones(v, n_co),
            Benchmark::SphereInt => eval_sphere_int(v),
            Benchmark::EllipsoidInt => eval_ellipsoid_int(v),
            Benchmark::Dslotz | Benchmark::DsInt => {
                return Err(Error::InvalidParameter(format!("{} has two objectives", self.benchmark)))
            }
        })
    }

    /// Objective pair of a bi-objective benchmark.
    pub fn evaluate_pair(&self, v: &[f64]) -> Result<[f64; 2]> {
        self.check_len(v)?;
        match self.benchmark {
            Benchmark::Dslotz => Ok(eval_dslotz(v, self.n_co)),
            Benchmark::DsInt => Ok(eval_dsint(v, self.n_co)),
            _ => Err(Error::InvalidParameter(format!("{} has one objective", self.benchmark))),
        }
    }

    /// Optimal encoded point of a single-objective benchmark (value 0).
    pub fn optimum(&self) -> Option<Vec<f64>> {
        if self.benchmark.is_multi_objective() {
            return None;
        }
        let discrete = if self.benchmark.has_binary() { 1.0 } else { 0.0 };
        Some((0..self.n).map(|j| if j < self.n_co { 0.0 } else { discrete }).collect())
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: v.len(),
            });
        }
        Ok(())
    }
}

/// Every benchmark instantiated at dimension `n`.
pub fn benchmark_catalog(n: usize) -> Result<Vec<BenchmarkSpec>> {
    Benchmark::ALL.into_iter().map(|b| BenchmarkSpec::new(b, n)).collect()
}
