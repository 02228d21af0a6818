//! Random sampling and the small set of scalar and matrix routines the
//! optimizers are built on.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`). A stream is seeded from a
//! single `u64` through `SeedableRng::seed_from_u64`, so a seed reproduces the
//! same sequence on every platform. Normal deviates use the ziggurat sampler
//! from `rand_distr`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, StandardNormal};

use crate::error::{Error, Result};

/// SplitMix64 finalizer, used to turn `(master seed, index)` into
/// well-separated child seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th child stream of `master`.
///
/// Defined as `splitmix64(splitmix64(master) ^ index)`; stable across
/// releases because experiment outputs are keyed on it.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

/// A single-owner, seedable random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for trial `index` of an experiment seeded with `master`.
    pub fn for_trial(master: u64, index: u64) -> Self {
        Self::new(derive_seed(master, index))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform draw from `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    /// Fair coin, `true` with probability 1/2.
    pub fn coin(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.rng);
    }

    /// Child stream derived from the next output of this one.
    pub fn fork(&mut self) -> RngStream {
        let seed = self.rng.random::<u64>();
        RngStream::new(seed)
    }
}

/// `n` independent standard-normal draws.
pub fn standard_normal_vector(rng: &mut RngStream, n: usize) -> Result<DVector<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "normal vector length must be at least 1".into(),
        ));
    }
    Ok(DVector::from_fn(n, |_, _| rng.standard_normal()))
}

/// Draw from the geometric distribution on `{0, 1, 2, ...}` with
/// `P(k) = p (1 - p)^k`.
pub fn geometric_sample(rng: &mut RngStream, p: f64) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::ProbabilityDomain(p));
    }
    let dist = Geometric::new(p).map_err(|_| Error::ProbabilityDomain(p))?;
    Ok(dist.sample(&mut rng.rng))
}

/// Dense symmetric matrix. Every constructor averages the input with its
/// transpose, so `entries[i][j] == entries[j][i]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        let mut m = Self(matrix);
        m.symmetrize();
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.0.diagonal()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// Replace the contents by `(M + Mᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.0.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.0[(i, j)] + self.0[(j, i)]);
                self.0[(i, j)] = avg;
                self.0[(j, i)] = avg;
            }
        }
    }

    pub fn decompose(&self) -> EigenDecomposition {
        let eig = SymmetricEigen::new(self.0.clone());
        EigenDecomposition {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Eigenpairs `C = B diag(values) Bᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn min_eigenvalue(&self) -> f64 {
        self.values.min()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.values.max()
    }

    fn check_positive(&self) -> Result<()> {
        let min = self.min_eigenvalue();
        if !(min > 0.0) || !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NotPositiveDefinite { eigenvalue: min });
        }
        Ok(())
    }

    fn spectral(&self, f: impl Fn(f64) -> f64) -> SymmetricMatrix {
        let b = &self.vectors;
        let scaled = DVector::from_iterator(self.values.len(), self.values.iter().map(|&v| f(v)));
        let mut bd = b.clone();
        for (j, s) in scaled.iter().enumerate() {
            bd.column_mut(j).scale_mut(*s);
        }
        let mut out = SymmetricMatrix(bd * b.transpose());
        out.symmetrize();
        out
    }

    pub fn sqrt(&self) -> Result<SymmetricMatrix> {
        self.check_positive()?;
        Ok(self.spectral(f64::sqrt))
    }

    pub fn inverse_sqrt(&self) -> Result<SymmetricMatrix> {
        self.check_positive()?;
        Ok(self.spectral(|v| 1.0 / v.sqrt()))
    }
}

/// Symmetric square root `S` with `S S = C`.
pub fn matrix_sqrt(c: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    c.decompose().sqrt()
}

/// Symmetric inverse square root `S` with `S C S = I`.
pub fn matrix_inverse_sqrt(c: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    c.decompose().inverse_sqrt()
}

/// Smallest eigenvalue and condition number `λ_max / λ_min`.
pub fn eigen_extremes(c: &SymmetricMatrix) -> (f64, f64) {
    let eig = c.decompose();
    let min = eig.min_eigenvalue();
    (min, eig.max_eigenvalue() / min)
}

/// Standard normal CDF, `Φ(x) = erfc(-x/√2) / 2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Inverse of [`normal_cdf`]. The inverse-erfc estimate is polished with
/// Newton steps on the lower tail so small probabilities keep full relative
/// precision.
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() {
        return f64::NAN;
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -normal_quantile(1.0 - p);
    }
    let mut z = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p);
    for _ in 0..4 {
        let density = normal_pdf(z);
        if density == 0.0 {
            break;
        }
        let step = (normal_cdf(z) - p) / density;
        z -= step;
        if step.abs() <= 1e-16 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

/// Quantile of the chi-squared distribution with one degree of freedom:
/// the `q` with `P(χ²₁ ≤ q) = p`. Equal to `(√2 erfinv(p))²`.
pub fn chi2_ppf_1df(p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::ProbabilityDomain(p));
    }
    if p == 0.0 {
        return Ok(0.0);
    }
    // P(|Z| ≤ z) = p  <=>  Φ(-z) = (1 - p) / 2
    let z = normal_quantile(0.5 * (1.0 - p));
    Ok(z * z)
}

/// Closed-form approximation of `E‖N(0, I_n)‖`:
/// `√n (1 - 1/(4n) + 1/(21 n²))`.
pub fn expected_norm(n: usize) -> f64 {
    let n = n as f64;
    n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
}
