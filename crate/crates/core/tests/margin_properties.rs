//! Margin guarantees checked on random distributions.

use margin_cma::margin::margin_correction;
use margin_cma::numerics::{RngStream, SymmetricMatrix};
use margin_cma::space::MixedIntegerSpace;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Normal CDF through an erf series, independent of the library's routine.
pub(crate) fn phi(x: f64) -> f64 {
    if x < -3.0 {
        return oracle_tail(x);
    }
    if x > 3.0 {
        return 1.0 - oracle_tail(-x);
    }
    let z = x / std::f64::consts::SQRT_2;
    // erf(z) = 2/√π Σ (-1)^k z^{2k+1} / (k! (2k+1)) is unstable for large z,
    // so use the confluent form erf(z) = 2/√π e^{-z²} Σ 2^k z^{2k+1} / (1·3·…·(2k+1)).
    let mut term = z;
    let mut sum = z;
    let mut k = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        k += 1.0;
        term *= 2.0 * z * z / (2.0 * k + 1.0);
        sum += term;
    }
    let erf = 2.0 / std::f64::consts::PI.sqrt() * (-z * z).exp() * sum;
    0.5 * (1.0 + erf)
}

/// Lower tail for `x < -3` by Laplace's continued fraction
/// `Q(t) = φ(t) / (t + 1/(t + 2/(t + 3/(t + …))))`, evaluated from the back.
fn oracle_tail(x: f64) -> f64 {
    let t = -x;
    let density = (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut frac = t;
    for k in (1..=300).rev() {
        frac = t + k as f64 / frac;
    }
    density / frac
}

fn random_spd(rng: &mut RngStream, n: usize) -> SymmetricMatrix {
    let b = DMatrix::from_fn(n, n, |_, _| rng.standard_normal());
    let scales = DVector::from_fn(n, |_, _| 10f64.powf(rng.uniform(-2.0, 2.0)));
    let d = DMatrix::from_diagonal(&scales);
    SymmetricMatrix::new(&d * (&b * b.transpose() + DMatrix::identity(n, n) * 0.1) * &d).unwrap()
}

struct Audit {
    binary_min: f64,
    integer_tail_min: f64,
}

/// One random state, corrected, then every discrete marginal checked.
fn audit_state(seed: u64) -> Audit {
    let mut rng = RngStream::new(seed);
    let n_co = 1 + (rng.uniform(0.0, 3.0) as usize);
    let n_disc = 1 + (rng.uniform(0.0, 4.0) as usize);
    let binary = rng.coin();
    let space = if binary {
        MixedIntegerSpace::continuous_binary(n_co, n_disc).unwrap()
    } else {
        let lo = rng.uniform(-5.0, 0.0).floor() as i64;
        let hi = lo + 1 + rng.uniform(0.0, 8.0) as i64;
        MixedIntegerSpace::continuous_integer(n_co, n_disc, lo, hi).unwrap()
    };
    let n = space.dim();
    let cov = random_spd(&mut rng, n);
    let sigma = 10f64.powf(rng.uniform(-4.0, 1.0));
    let alpha = 10f64.powf(rng.uniform(-4.0, -0.5));
    let affine = DVector::from_fn(n, |j, _| {
        if space.is_discrete(j) && !space.is_binary(j) {
            10f64.powf(rng.uniform(-1.0, 1.0))
        } else {
            1.0
        }
    });
    let mean = DVector::from_fn(n, |j, _| {
        let v = space.values(j);
        if v.is_empty() {
            rng.uniform(-3.0, 3.0)
        } else {
            rng.uniform(v[0] - 2.0, v[v.len() - 1] + 2.0)
        }
    });

    let (m2, a2) = margin_correction(&mean, &affine, sigma, &cov, &space, alpha).unwrap();
    assert_eq!(
        space.encode(m2.as_slice()).unwrap(),
        space.encode(mean.as_slice()).unwrap(),
        "seed {seed}: encoding changed"
    );
    let mut audit = Audit {
        binary_min: f64::INFINITY,
        integer_tail_min: f64::INFINITY,
    };
    for j in 0..n {
        let sd = sigma * a2[j] * cov.get(j, j).sqrt();
        if !space.is_discrete(j) {
            assert_eq!(m2[j], mean[j]);
            assert_eq!(a2[j], affine[j]);
            continue;
        }
        let thresholds = space.thresholds(j);
        let below = |l: f64| phi((l - m2[j]) / sd);
        let above = |l: f64| 1.0 - phi((l - m2[j]) / sd);
        if space.is_binary(j) {
            let p = below(thresholds[0]).min(above(thresholds[0]));
            audit.binary_min = audit.binary_min.min(p / alpha);
            assert!(p >= alpha - 1e-9, "seed {seed} dim {j}: binary mass {p} < α {alpha}");
            continue;
        }
        if space.is_interior(j, m2[j]) {
            let (low, up) = space.bracketing_thresholds(j, m2[j]).unwrap();
            let (pl, pu) = (below(low), above(up));
            audit.integer_tail_min = audit.integer_tail_min.min(pl.min(pu) / (0.5 * alpha));
            assert!(pl >= 0.5 * alpha - 1e-9, "seed {seed} dim {j}: lower tail {pl} < α/2");
            assert!(pu >= 0.5 * alpha - 1e-9, "seed {seed} dim {j}: upper tail {pu} < α/2");
        } else {
            let l = space.nearest_threshold(j, m2[j]).unwrap();
            let p = below(l).min(above(l));
            assert!(p >= alpha - 1e-9, "seed {seed} dim {j}: edge mass {p} < α");
        }
    }
    audit
}

/// Audits 1000 random states and checks the worst ratios are tight.
pub(crate) fn check_margin_audit() {
    let mut binary_min = f64::INFINITY;
    let mut tail_min = f64::INFINITY;
    for seed in 0..1000 {
        let a = audit_state(seed);
        binary_min = binary_min.min(a.binary_min);
        tail_min = tail_min.min(a.integer_tail_min);
    }
    // Worst ratios land on the bound itself, i.e. the correction is tight.
    assert!((binary_min - 1.0).abs() < 1e-6, "binary ratio {binary_min}");
    assert!((tail_min - 1.0).abs() < 1e-6, "integer ratio {tail_min}");
}

#[test]
fn margin_audit_on_random_states() {
    check_margin_audit();
}

#[test]
fn oracle_cdf_sanity() {
    assert!((phi(0.0) - 0.5).abs() < 1e-16);
    assert!((phi(1.959963984540054) - 0.975).abs() < 1e-14);
    assert!((phi(-10.0) - 7.619853024160527e-24).abs() < 1e-30);
}

fn binary_case() -> impl Strategy<Value = (f64, f64, f64)> {
    (-30.0..30.0f64, 1e-6..3.0f64, 1e-5..0.4f64)
}

proptest! {
    #[test]
    fn binary_correction_is_idempotent_and_keeps_side((m, sd, alpha) in binary_case()) {
        let space = MixedIntegerSpace::continuous_binary(1, 1).unwrap();
        let cov = SymmetricMatrix::from_diagonal(&[1.0, sd * sd]);
        let mean = DVector::from_vec(vec![0.3, m]);
        let affine = DVector::from_element(2, 1.0);
        let (m1, a1) = margin_correction(&mean, &affine, 1.0, &cov, &space, alpha).unwrap();
        let (m2, _) = margin_correction(&m1, &a1, 1.0, &cov, &space, alpha).unwrap();
        let l = space.thresholds(1)[0];
        prop_assert_eq!(m1[1] > l, m > l);
        prop_assert!((m2[1] - m1[1]).abs() <= 1e-12 * (1.0 + m1[1].abs()));
        prop_assert!((m1[1] - l).abs() <= (m - l).abs());
    }

    #[test]
    fn interior_integer_stays_in_cell(m in -2.4..2.4f64, sd in 1e-4..2.0f64, a in 0.1..3.0f64, alpha in 1e-4..0.3f64) {
        let space = MixedIntegerSpace::continuous_integer(1, 1, -3, 3).unwrap();
        let cov = SymmetricMatrix::from_diagonal(&[1.0, sd * sd]);
        let mean = DVector::from_vec(vec![0.0, m]);
        let affine = DVector::from_vec(vec![1.0, a]);
        prop_assume!(space.is_interior(1, m));
        let (m1, a1) = margin_correction(&mean, &affine, 1.0, &cov, &space, alpha).unwrap();
        let cell = space.bracketing_thresholds(1, m).unwrap();
        prop_assert_eq!(space.bracketing_thresholds(1, m1[1]).unwrap(), cell);
        prop_assert!(a1[1] > 0.0 && a1[1].is_finite());
        let (m2, a2) = margin_correction(&m1, &a1, 1.0, &cov, &space, alpha).unwrap();
        prop_assert!((m2[1] - m1[1]).abs() <= 1e-9 * (1.0 + m1[1].abs()));
        prop_assert!((a2[1] - a1[1]).abs() <= 1e-9 * a1[1]);
    }
}
