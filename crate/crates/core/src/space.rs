//! Mixed-integer search spaces and the encoding of relaxed real vectors.
//!
//! A discrete dimension holds an ordered value list `z_1 < ... < z_K`.
//! Its thresholds are the midpoints `(z_k + z_{k+1}) / 2`, and a real
//! coordinate `v` encodes to `z_k` when `ℓ_{k-1} < v ≤ ℓ_k`. A value sitting
//! exactly on a threshold belongs to the lower cell.
//!
//! Dimensions must be laid out as continuous, then binary (two values), then
//! integer (three or more values).

use std::ops::Deref;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum DimensionKind {
    Continuous,
    /// Strictly increasing, finite, at least two values.
    Discrete(Vec<f64>),
}

impl DimensionKind {
    /// `{0, 1}`.
    pub fn binary() -> Self {
        DimensionKind::Discrete(vec![0.0, 1.0])
    }

    /// Consecutive integers `lo..=hi`.
    pub fn integer_range(lo: i64, hi: i64) -> Self {
        DimensionKind::Discrete((lo..=hi).map(|v| v as f64).collect())
    }

    fn rank(&self) -> u8 {
        match self {
            DimensionKind::Continuous => 0,
            DimensionKind::Discrete(v) if v.len() == 2 => 1,
            DimensionKind::Discrete(_) => 2,
        }
    }
}

/// Encoded candidate: continuous coordinates unchanged, discrete coordinates
/// replaced by members of their value lists.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedVector(Vec<f64>);

impl EncodedVector {
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for EncodedVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedIntegerSpace {
    dims: Vec<DimensionKind>,
    thresholds: Vec<Vec<f64>>,
    n_co: usize,
    n_bi: usize,
    n_in: usize,
}

impl MixedIntegerSpace {
    pub fn new(dims: Vec<DimensionKind>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidSpace("no dimensions".into()));
        }
        let mut thresholds = Vec::with_capacity(dims.len());
        for (j, kind) in dims.iter().enumerate() {
            match kind {
                DimensionKind::Continuous => thresholds.push(Vec::new()),
                DimensionKind::Discrete(values) => {
                    if values.len() < 2 {
                        return Err(Error::InvalidSpace(format!(
                            "dimension {j} has fewer than two values"
                        )));
                    }
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidSpace(format!(
                            "dimension {j} has a non-finite value"
                        )));
                    }
                    if values.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::InvalidSpace(format!(
                            "values of dimension {j} are not strictly increasing"
                        )));
                    }
                    let th: Vec<f64> = values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
                    if th.windows(2).any(|w| w[0] >= w[1]) {
                        return Err(Error::InvalidSpace(format!(
                            "thresholds of dimension {j} collapse in floating point"
                        )));
                    }
                    thresholds.push(th);
                }
            }
        }
        if dims.windows(2).any(|w| w[0].rank() > w[1].rank()) {
            return Err(Error::InvalidSpace(
                "dimensions must be ordered continuous, binary, integer".into(),
            ));
        }
        let count = |r: u8| dims.iter().filter(|d| d.rank() == r).count();
        let (n_co, n_bi, n_in) = (count(0), count(1), count(2));
        Ok(Self {
            dims,
            thresholds,
            n_co,
            n_bi,
            n_in,
        })
    }

    /// Purely continuous space of dimension `n`.
    pub fn continuous(n: usize) -> Result<Self> {
        Self::new(vec![DimensionKind::Continuous; n])
    }

    /// `n_co` continuous dimensions followed by `n_bi` binary ones.
    pub fn continuous_binary(n_co: usize, n_bi: usize) -> Result<Self> {
        let mut dims = vec![DimensionKind::Continuous; n_co];
        dims.extend(std::iter::repeat_n(DimensionKind::binary(), n_bi));
        Self::new(dims)
    }

    /// `n_co` continuous dimensions followed by `n_in` integer dimensions
    /// over `lo..=hi`.
    pub fn continuous_integer(n_co: usize, n_in: usize, lo: i64, hi: i64) -> Result<Self> {
        let mut dims = vec![DimensionKind::Continuous; n_co];
        dims.extend(std::iter::repeat_n(DimensionKind::integer_range(lo, hi), n_in));
        Self::new(dims)
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn n_continuous(&self) -> usize {
        self.n_co
    }

    pub fn n_binary(&self) -> usize {
        self.n_bi
    }

    pub fn n_integer(&self) -> usize {
        self.n_in
    }

    pub fn kind(&self, j: usize) -> &DimensionKind {
        &self.dims[j]
    }

    pub fn is_discrete(&self, j: usize) -> bool {
        matches!(self.dims[j], DimensionKind::Discrete(_))
    }

    pub fn is_binary(&self, j: usize) -> bool {
        self.dims[j].rank() == 1
    }

    /// Candidate values of a discrete dimension (empty for continuous ones).
    pub fn values(&self, j: usize) -> &[f64] {
        match &self.dims[j] {
            DimensionKind::Continuous => &[],
            DimensionKind::Discrete(v) => v,
        }
    }

    /// Encoding thresholds of dimension `j` (empty for continuous ones).
    pub fn thresholds(&self, j: usize) -> &[f64] {
        &self.thresholds[j]
    }

    /// Index range of the binary dimensions.
    pub fn binary_range(&self) -> std::ops::Range<usize> {
        self.n_co..self.n_co + self.n_bi
    }

    /// Index range of the integer dimensions.
    pub fn integer_range(&self) -> std::ops::Range<usize> {
        self.n_co + self.n_bi..self.dims.len()
    }

    /// Encode a single coordinate.
    pub fn encode_coordinate(&self, j: usize, v: f64) -> f64 {
        match &self.dims[j] {
            DimensionKind::Continuous => v,
            DimensionKind::Discrete(values) => {
                let cell = self.thresholds[j].partition_point(|&l| l < v);
                values[cell]
            }
        }
    }

    pub fn encode(&self, v: &[f64]) -> Result<EncodedVector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        Ok(EncodedVector(
            v.iter()
                .enumerate()
                .map(|(j, &x)| self.encode_coordinate(j, x))
                .collect(),
        ))
    }

    fn discrete_thresholds(&self, j: usize) -> Result<&[f64]> {
        if j >= self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: j,
            });
        }
        if !self.is_discrete(j) {
            return Err(Error::NotDiscrete(j));
        }
        Ok(&self.thresholds[j])
    }

    /// Threshold of dimension `j` closest to `m`; ties go to the smaller one.
    pub fn nearest_threshold(&self, j: usize, m: f64) -> Result<f64> {
        let th = self.discrete_thresholds(j)?;
        let idx = th.partition_point(|&l| l < m);
        let nearest = if idx == 0 {
            th[0]
        } else if idx == th.len() {
            th[th.len() - 1]
        } else {
            let (below, above) = (th[idx - 1], th[idx]);
            if m - below <= above - m {
                below
            } else {
                above
            }
        };
        Ok(nearest)
    }

    /// `(ℓ_low, ℓ_up)`: the largest threshold strictly below `m` and the
    /// smallest threshold at or above it. Requires `ℓ_1 < m ≤ ℓ_{K-1}`.
    pub fn bracketing_thresholds(&self, j: usize, m: f64) -> Result<(f64, f64)> {
        let th = self.discrete_thresholds(j)?;
        if !(m > th[0] && m <= th[th.len() - 1]) {
            return Err(Error::ExteriorMean { dim: j, value: m });
        }
        let idx = th.partition_point(|&l| l < m);
        Ok((th[idx - 1], th[idx]))
    }

    /// `true` when `m` lies in `(ℓ_1, ℓ_{K-1}]` of discrete dimension `j`.
    pub fn is_interior(&self, j: usize, m: f64) -> bool {
        let th = &self.thresholds[j];
        !th.is_empty() && m > th[0] && m <= th[th.len() - 1]
    }
}
