//! Hypervolume, non-dominated sorting and one MO-CMA-ES generation against
//! brute-force oracles.

use margin_cma::benchmarks::eval_dslotz;
use margin_cma::mo::{hypervolume_2d, mo_step, nondominated_sort, MoIndividual, MoParams, Objectives};
use margin_cma::numerics::{RngStream, SymmetricMatrix};
use margin_cma::space::MixedIntegerSpace;
use nalgebra::{DMatrix, DVector};

const REF: Objectives = [5.0, 5.0];

fn random_points(rng: &mut RngStream, k: usize, grid: bool) -> Vec<Objectives> {
    (0..k)
        .map(|_| {
            if grid {
                // Coarse values produce duplicates and shared coordinates.
                [rng.uniform(0.0, 6.0).floor(), rng.uniform(0.0, 6.0).floor()]
            } else {
                [rng.uniform(-1.0, 6.0), rng.uniform(-1.0, 6.0)]
            }
        })
        .collect()
}

/// Union of boxes `[p, REF]` on the grid spanned by all coordinates.
fn brute_hypervolume(points: &[Objectives], reference: Objectives) -> f64 {
    let mut xs: Vec<f64> = points.iter().map(|p| p[0]).filter(|&x| x < reference[0]).collect();
    let mut ys: Vec<f64> = points.iter().map(|p| p[1]).filter(|&y| y < reference[1]).collect();
    xs.push(reference[0]);
    ys.push(reference[1]);
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    xs.dedup();
    ys.dedup();
    let mut area = 0.0;
    for a in xs.windows(2) {
        for b in ys.windows(2) {
            let covered = points.iter().any(|p| p[0] <= a[0] && p[1] <= b[0]);
            if covered {
                area += (a[1] - a[0]) * (b[1] - b[0]);
            }
        }
    }
    area
}

fn weakly_better(a: &Objectives, b: &Objectives) -> bool {
    a[0] <= b[0] && a[1] <= b[1] && (a[0] < b[0] || a[1] < b[1])
}

fn brute_levels(points: &[Objectives]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut levels = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| weakly_better(&points[j], &points[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        levels.push(front);
    }
    levels
}

#[test]
fn hypervolume_matches_monte_carlo() {
    check_hypervolume_monte_carlo();
}

#[test]
fn nondominated_sort_matches_brute_force() {
    check_nondominated_sort();
}

pub(crate) fn check_hypervolume_monte_carlo() {
    let mut rng = RngStream::new(2);
    for set in 0..50 {
        let pts = random_points(&mut rng, 1 + set % 12, false);
        let exact = hypervolume_2d(&pts, REF);
        assert!((exact - brute_hypervolume(&pts, REF)).abs() < 1e-9);
        // Uniform samples in [-1, 5]², which contains every dominated region.
        let samples = 20_000;
        let box_area = 36.0;
        let hits = (0..samples)
            .filter(|_| {
                let q = [rng.uniform(-1.0, 5.0), rng.uniform(-1.0, 5.0)];
                pts.iter().any(|p| p[0] <= q[0] && p[1] <= q[1])
            })
            .count();
        let p = hits as f64 / samples as f64;
        let estimate = p * box_area;
        let se = box_area * (p * (1.0 - p) / samples as f64).sqrt();
        assert!(
            (estimate - exact).abs() <= 3.0 * se.max(1e-3),
            "set {set}: exact {exact}, Monte-Carlo {estimate} ± {se}"
        );
    }
}

pub(crate) fn check_nondominated_sort() {
    let mut rng = RngStream::new(3);
    for inst in 0..200 {
        let pts = random_points(&mut rng, 1 + inst % 25, inst % 2 == 0);
        assert_eq!(nondominated_sort(&pts), brute_levels(&pts), "instance {inst}");
    }
}

/// Lower Cholesky factor by the textbook recurrence.
fn cholesky(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.nrows();
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            if i == j {
                l[(i, j)] = (c[(i, i)] - s).sqrt();
            } else {
                l[(i, j)] = (c[(i, j)] - s) / l[(j, j)];
            }
        }
    }
    l
}

/// Ranking of the pool: levels by brute force, then within a level the
/// least contributor (later index on ties) is removed until one remains.
fn brute_order(points: &[Objectives]) -> Vec<usize> {
    let mut order = Vec::new();
    for level in brute_levels(points) {
        let mut rest = level.clone();
        let mut removed = Vec::new();
        while rest.len() > 1 {
            let sub: Vec<Objectives> = rest.iter().map(|&k| points[k]).collect();
            let total = brute_hypervolume(&sub, REF);
            let contrib: Vec<f64> = (0..rest.len())
                .map(|p| {
                    let without: Vec<Objectives> =
                        sub.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, v)| *v).collect();
                    total - brute_hypervolume(&without, REF)
                })
                .collect();
            let min = contrib.iter().copied().fold(f64::INFINITY, f64::min);
            let pos = (0..rest.len()).rev().find(|&p| contrib[p] <= min + 1e-12).unwrap();
            removed.push(rest.remove(pos));
        }
        order.extend(rest);
        order.extend(removed.into_iter().rev());
    }
    order
}

#[derive(Clone, Debug)]
struct OracleInd {
    x: DVector<f64>,
    f: Objectives,
    p: f64,
    sigma: f64,
    pc: DVector<f64>,
    c: DMatrix<f64>,
}

#[test]
fn one_generation_without_margin_matches_oracle() {
    let (n_co, n_bi, lambda) = (3, 3, 6);
    let n = n_co + n_bi;
    let space = MixedIntegerSpace::continuous_binary(n_co, n_bi).unwrap();
    let params = MoParams::new(n, lambda).unwrap().with_alpha(0.0);
    let mut f = |v: &[f64]| eval_dslotz(v, n_co);

    let mut init = RngStream::new(8);
    let mut parents = Vec::new();
    for k in 0..lambda {
        let x = DVector::from_fn(n, |_, _| init.uniform(0.0, 1.0));
        let mut ind = MoIndividual::new(x, 0.5 + 0.1 * k as f64, &params, &space, &mut f).unwrap();
        // Non-trivial covariance and path.
        let b = DMatrix::from_fn(n, n, |_, _| 0.3 * init.standard_normal());
        ind.cov = SymmetricMatrix::new(&b * b.transpose() + DMatrix::identity(n, n)).unwrap();
        ind.path_c = DVector::from_fn(n, |_, _| init.standard_normal());
        ind.p_succ = init.uniform(0.0, 0.8);
        parents.push(ind);
    }

    // Oracle generation.
    let mut rng = RngStream::new(21);
    let mut pool: Vec<OracleInd> = parents
        .iter()
        .map(|p| OracleInd {
            x: p.x.clone(),
            f: p.objectives,
            p: p.p_succ,
            sigma: p.sigma,
            pc: p.path_c.clone(),
            c: p.cov.as_matrix().clone(),
        })
        .collect();
    let mut steps = Vec::new();
    for i in 0..lambda {
        let z = DVector::from_fn(n, |_, _| rng.standard_normal());
        let y = cholesky(&pool[i].c) * z;
        let mut child = pool[i].clone();
        child.x = &pool[i].x + &y * pool[i].sigma;
        child.f = f(&space.encode(child.x.as_slice()).unwrap());
        pool.push(child);
        steps.push(y);
    }
    let points: Vec<Objectives> = pool.iter().map(|o| o.f).collect();
    let order = brute_order(&points);
    let chosen = &order[..lambda];
    let target = 2.0 / 11.0;
    let cp = target / (2.0 + target);
    let d = 1.0 + n as f64 / 2.0;
    let cc = 2.0 / (n as f64 + 2.0);
    let ccov = 2.0 / ((n * n) as f64 + 6.0);
    for i in 0..lambda {
        let s = if chosen.contains(&(lambda + i)) { 1.0 } else { 0.0 };
        for k in [lambda + i, i] {
            let o = &mut pool[k];
            o.p = (1.0 - cp) * o.p + cp * s;
            o.sigma *= ((o.p - target) / (d * (1.0 - target))).exp();
        }
        let o = &mut pool[lambda + i];
        if o.p < 0.44 {
            o.pc = &o.pc * (1.0 - cc) + &steps[i] * (cc * (2.0 - cc)).sqrt();
            o.c = &o.c * (1.0 - ccov) + &o.pc * o.pc.transpose() * ccov;
        } else {
            o.pc = &o.pc * (1.0 - cc);
            o.c = &o.c * (1.0 - ccov) + (&o.pc * o.pc.transpose() + &o.c * (cc * (2.0 - cc))) * ccov;
        }
    }

    let mut rng = RngStream::new(21);
    let (next, report) = mo_step(&parents, &params, &space, &mut rng, &mut f).unwrap();
    assert_eq!(report.corrections, 0);
    assert_eq!(report.successes, chosen.iter().filter(|&&k| k >= lambda).count());
    for (got, &k) in next.iter().zip(chosen) {
        let want = &pool[k];
        assert_eq!(got.objectives, want.f);
        assert!((&got.x - &want.x).amax() < 1e-12);
        assert!((got.p_succ - want.p).abs() < 1e-12);
        assert!((got.sigma - want.sigma).abs() < 1e-12 * want.sigma);
        assert!((&got.path_c - &want.pc).amax() < 1e-12);
        assert!((got.cov.as_matrix() - &want.c).amax() < 1e-12);
        assert!(got.affine.iter().all(|&a| a == 1.0));
    }
}
