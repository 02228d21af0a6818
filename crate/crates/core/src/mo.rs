//! Bi-objective MO-CMA-ES with success-based step-size adaptation and the
//! per-individual margin correction.
//!
//! Each individual carries its own `(x, σ, p_c, C, A, p̄_succ)`. Every
//! parent produces one offspring; parents and offspring are ranked by
//! non-domination level and contributing hypervolume, and the best `λ`
//! survive. An offspring counts as a success when it survives.

use nalgebra::{Cholesky, DVector};

use crate::error::{Error, Result};
use crate::margin::{binary_minority_probability, margin_correction};
use crate::numerics::{standard_normal_vector, RngStream, SymmetricMatrix};
use crate::space::{EncodedVector, MixedIntegerSpace};

pub type Objectives = [f64; 2];

/// Pareto dominance for minimization.
pub fn dominates(a: &Objectives, b: &Objectives) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && a != b
}

/// Partition of `points` into non-domination levels, best first. Indices in
/// each level are ascending.
pub fn nondominated_sort(points: &[Objectives]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by = vec![0usize; n];
    let mut dominating: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if dominates(&points[i], &points[j]) {
                dominating[i].push(j);
            } else if dominates(&points[j], &points[i]) {
                dominated_by[i] += 1;
            }
        }
    }
    let mut levels = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominating[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        levels.push(current);
        current = next;
    }
    levels
}

/// Area dominated by `points` and bounded by `reference`. Points that do not
/// strictly dominate the reference contribute nothing.
pub fn hypervolume_2d(points: &[Objectives], reference: Objectives) -> f64 {
    let mut inside: Vec<Objectives> = points
        .iter()
        .copied()
        .filter(|p| p[0] < reference[0] && p[1] < reference[1])
        .collect();
    inside.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut area = 0.0;
    let mut ceiling = reference[1];
    for p in inside {
        if p[1] < ceiling {
            area += (reference[0] - p[0]) * (ceiling - p[1]);
            ceiling = p[1];
        }
    }
    area
}

/// Hypervolume lost when point `i` is removed.
pub fn contributing_hypervolume(points: &[Objectives], reference: Objectives, i: usize) -> f64 {
    let rest: Vec<Objectives> = points
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i)
        .map(|(_, p)| *p)
        .collect();
    (hypervolume_2d(points, reference) - hypervolume_2d(&rest, reference)).max(0.0)
}

/// Total order over `points`, best first: by non-domination level, and within
/// a level by repeatedly discarding the least contributor to the level's
/// hypervolume. Among equal contributions the later index is discarded first.
pub fn rank_population(points: &[Objectives], reference: Objectives) -> Vec<usize> {
    let mut order = Vec::with_capacity(points.len());
    for level in nondominated_sort(points) {
        let mut remaining = level;
        let mut discarded = Vec::with_capacity(remaining.len());
        while remaining.len() > 1 {
            let subset: Vec<Objectives> = remaining.iter().map(|&k| points[k]).collect();
            let mut worst = 0;
            let mut worst_value = f64::INFINITY;
            for pos in 0..remaining.len() {
                let c = contributing_hypervolume(&subset, reference, pos);
                if c <= worst_value {
                    worst_value = c;
                    worst = pos;
                }
            }
            discarded.push(remaining.remove(worst));
        }
        order.extend(remaining);
        order.extend(discarded.into_iter().rev());
    }
    order
}

/// Strategy parameters of the success-rule MO-CMA-ES.
#[derive(Debug, Clone, PartialEq)]
pub struct MoParams {
    pub lambda: usize,
    pub d: f64,
    pub p_target: f64,
    pub c_p: f64,
    pub c_c: f64,
    pub c_cov: f64,
    pub p_thresh: f64,
    /// Margin parameter. Zero disables margin correction.
    pub alpha: f64,
    pub reference: Objectives,
}

impl MoParams {
    /// Defaults for dimension `n` and population size `lambda`, with
    /// `α = 1 / (N λ)` and reference point `(5, 5)`.
    pub fn new(n: usize, lambda: usize) -> Result<Self> {
        if n == 0 || lambda == 0 {
            return Err(Error::InvalidParameter("dimension and population size must be positive".into()));
        }
        let nf = n as f64;
        let p_target = 1.0 / (5.0 + 0.5);
        Ok(Self {
            lambda,
            d: 1.0 + nf / 2.0,
            p_target,
            c_p: p_target / (2.0 + p_target),
            c_c: 2.0 / (nf + 2.0),
            c_cov: 2.0 / (nf * nf + 6.0),
            p_thresh: 0.44,
            alpha: 1.0 / (nf * lambda as f64),
            reference: [5.0, 5.0],
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    fn step_factor(&self, p_succ: f64) -> f64 {
        ((p_succ - self.p_target) / (self.d * (1.0 - self.p_target))).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoIndividual {
    pub x: DVector<f64>,
    pub encoded: EncodedVector,
    pub objectives: Objectives,
    pub p_succ: f64,
    pub sigma: f64,
    pub path_c: DVector<f64>,
    pub cov: SymmetricMatrix,
    pub affine: DVector<f64>,
}

impl MoIndividual {
    /// Fresh individual at `x` with `C = I`, `A = I`, zero path and
    /// `p̄_succ = p_target`. `x` is encoded and evaluated.
    pub fn new<F>(x: DVector<f64>, sigma: f64, params: &MoParams, space: &MixedIntegerSpace, f: &mut F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Objectives,
    {
        let n = x.len();
        if n != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                actual: n,
            });
        }
        let encoded = space.encode(x.as_slice())?;
        let objectives = f(&encoded);
        Ok(Self {
            x,
            encoded,
            objectives,
            p_succ: params.p_target,
            sigma,
            path_c: DVector::zeros(n),
            cov: SymmetricMatrix::identity(n),
            affine: DVector::from_element(n, 1.0),
        })
    }

    /// Median over binary dimensions of the smaller encoded-value
    /// probability of the marginal `N(x_j, σ² A_j² C_jj)`. `None` without
    /// binary dimensions.
    pub fn p_med(&self, space: &MixedIntegerSpace) -> Option<f64> {
        let mut probs: Vec<f64> = space
            .binary_range()
            .map(|j| {
                let sd = self.sigma * self.affine[j] * self.cov.get(j, j).sqrt();
                binary_minority_probability(self.x[j], sd, space.thresholds(j)[0])
            })
            .collect();
        if probs.is_empty() {
            return None;
        }
        probs.sort_by(f64::total_cmp);
        let k = probs.len();
        Some(if k % 2 == 1 {
            probs[k / 2]
        } else {
            0.5 * (probs[k / 2 - 1] + probs[k / 2])
        })
    }
}

/// Counts collected during one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    /// Offspring that entered the next population.
    pub successes: usize,
    /// Margin corrections applied (offspring plus parents).
    pub corrections: usize,
    /// Corrections after which `encode(x)` changed. Always zero.
    pub encoding_changes: usize,
    /// Size of the first non-domination level of parents plus offspring.
    pub front_size: usize,
}

fn sample_direction(cov: &SymmetricMatrix, rng: &mut RngStream) -> Result<DVector<f64>> {
    let n = cov.dim();
    let chol = Cholesky::new(cov.as_matrix().clone()).ok_or_else(|| Error::NotPositiveDefinite {
        eigenvalue: cov.decompose().min_eigenvalue(),
    })?;
    Ok(chol.l() * standard_normal_vector(rng, n)?)
}

/// One generation. Returns the next parent population and a report.
pub fn mo_step<F>(
    parents: &[MoIndividual],
    params: &MoParams,
    space: &MixedIntegerSpace,
    rng: &mut RngStream,
    mut f: F,
) -> Result<(Vec<MoIndividual>, StepReport)>
where
    F: FnMut(&[f64]) -> Objectives,
{
    let lambda = parents.len();
    if lambda != params.lambda {
        return Err(Error::DimensionMismatch {
            expected: params.lambda,
            actual: lambda,
        });
    }
    let n = space.dim();
    if let Some(p) = parents.iter().find(|p| p.x.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: p.x.len(),
        });
    }

    let mut offspring = Vec::with_capacity(lambda);
    let mut steps = Vec::with_capacity(lambda);
    for (i, parent) in parents.iter().enumerate() {
        let y = sample_direction(&parent.cov, rng)?;
        let x = &parent.x + &y * parent.sigma;
        let v = &parent.x + y.component_mul(&parent.affine) * parent.sigma;
        let encoded = space.encode(v.as_slice())?;
        let objectives = f(&encoded);
        if let Some(&value) = objectives.iter().find(|o| !o.is_finite()) {
            return Err(Error::NonFiniteFitness { index: lambda + i, value });
        }
        offspring.push(MoIndividual {
            x,
            encoded,
            objectives,
            ..parent.clone()
        });
        steps.push(y);
    }
    let mut pool: Vec<MoIndividual> = parents.to_vec();
    pool.extend(offspring);

    let points: Vec<Objectives> = pool.iter().map(|ind| ind.objectives).collect();
    let order = rank_population(&points, params.reference);
    let mut selected = vec![false; 2 * lambda];
    for &k in &order[..lambda] {
        selected[k] = true;
    }

    let mut report = StepReport {
        front_size: nondominated_sort(&points).first().map_or(0, Vec::len),
        ..StepReport::default()
    };
    let cc = params.c_c;
    for i in 0..lambda {
        let success = if selected[lambda + i] { 1.0 } else { 0.0 };
        report.successes += selected[lambda + i] as usize;

        let child = &mut pool[lambda + i];
        child.p_succ = (1.0 - params.c_p) * child.p_succ + params.c_p * success;
        child.sigma *= params.step_factor(child.p_succ);
        let mut cov = child.cov.as_matrix() * (1.0 - params.c_cov);
        if child.p_succ < params.p_thresh {
            child.path_c = &child.path_c * (1.0 - cc) + &steps[i] * (cc * (2.0 - cc)).sqrt();
            cov.ger(params.c_cov, &child.path_c, &child.path_c, 1.0);
        } else {
            child.path_c *= 1.0 - cc;
            cov.ger(params.c_cov, &child.path_c, &child.path_c, 1.0);
            cov += child.cov.as_matrix() * (params.c_cov * cc * (2.0 - cc));
        }
        child.cov = SymmetricMatrix::new(cov)?;

        let parent = &mut pool[i];
        parent.p_succ = (1.0 - params.c_p) * parent.p_succ + params.c_p * success;
        parent.sigma *= params.step_factor(parent.p_succ);

        if params.alpha > 0.0 {
            for k in [lambda + i, i] {
                let ind = &mut pool[k];
                let (x, a) = margin_correction(&ind.x, &ind.affine, ind.sigma, &ind.cov, space, params.alpha)?;
                report.corrections += 1;
                if space.encode(x.as_slice())? != space.encode(ind.x.as_slice())? {
                    report.encoding_changes += 1;
                }
                ind.x = x;
                ind.affine = a;
            }
        }
    }

    let mut slots: Vec<Option<MoIndividual>> = pool.into_iter().map(Some).collect();
    let next = order[..lambda]
        .iter()
        .map(|&k| slots[k].take().expect("order is a permutation"))
        .collect();
    Ok((next, report))
}

/// Population hypervolume against `reference`.
pub fn population_hypervolume(population: &[MoIndividual], reference: Objectives) -> f64 {
    let points: Vec<Objectives> = population.iter().map(|ind| ind.objectives).collect();
    hypervolume_2d(&points, reference)
}

/// Driver holding the population and its parameters.
#[derive(Debug, Clone)]
pub struct MoCmaEs {
    pub params: MoParams,
    pub population: Vec<MoIndividual>,
    space: MixedIntegerSpace,
}

impl MoCmaEs {
    pub fn new(params: MoParams, population: Vec<MoIndividual>, space: MixedIntegerSpace) -> Result<Self> {
        if population.len() != params.lambda {
            return Err(Error::DimensionMismatch {
                expected: params.lambda,
                actual: population.len(),
            });
        }
        if !(0.0..0.5).contains(&params.alpha) {
            return Err(Error::InvalidParameter(format!("margin {} must lie in [0, 0.5)", params.alpha)));
        }
        Ok(Self {
            params,
            population,
            space,
        })
    }

    pub fn space(&self) -> &MixedIntegerSpace {
        &self.space
    }

    pub fn step<F>(&mut self, rng: &mut RngStream, f: F) -> Result<StepReport>
    where
        F: FnMut(&[f64]) -> Objectives,
    {
        let (next, report) = mo_step(&self.population, &self.params, &self.space, rng, f)?;
        self.population = next;
        Ok(report)
    }

    pub fn hypervolume(&self) -> f64 {
        population_hypervolume(&self.population, self.params.reference)
    }
}
