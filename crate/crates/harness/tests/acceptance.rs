//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero when any criterion fails.
//!
//! The property checks reuse the oracle test files of the core crate, whose
//! `#[test]` items are compiled out here.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;

use margin_cma::benchmarks::Benchmark;
use margin_cma::numerics::{chi2_ppf_1df, matrix_inverse_sqrt, matrix_sqrt, normal_quantile, RngStream, SymmetricMatrix};
use margin_harness::aggregate::{aggregate, median, Summary};
use margin_harness::mo_run::{run_mo_trials, MoTrialRecord};
use margin_harness::output::{read_trace, write_trace};
use margin_harness::sweep::alpha_sweep;
use margin_harness::trial::{run_trial_traced, run_trials, trial_seeds};
use margin_harness::{Algorithm, ExperimentConfig};
use nalgebra::DMatrix;

#[allow(dead_code, unused_imports)]
#[path = "../../core/tests/margin_properties.rs"]
mod margin_properties;

#[allow(dead_code, unused_imports)]
#[path = "../../core/tests/mo_properties.rs"]
mod mo_properties;

#[allow(dead_code, unused_imports)]
#[path = "../../core/tests/cma_oracle.rs"]
mod cma_oracle;

const SEED: u64 = 2024;

/// Result of one check: pass flag and a one-line detail.
type Check = (bool, String);

fn summary(algorithm: Algorithm, benchmark: Benchmark, dim: usize, trials: usize) -> Summary {
    let mut c = ExperimentConfig::new(algorithm, benchmark, dim);
    c.trials = trials;
    c.seed = SEED;
    let records = run_trials(&c, None).expect("trials run");
    aggregate(&records).expect("non-empty")
}

fn describe(s: &Summary) -> String {
    format!(
        "{} N={} {}: {}/{} successes, median evaluations {}",
        s.function,
        s.dim,
        s.algorithm,
        s.successes,
        s.trials,
        s.median_evals.map_or("-".into(), |m| format!("{m}"))
    )
}

fn report(lines: &mut Vec<String>, checks: Vec<Check>) -> bool {
    let mut ok = true;
    for (pass, detail) in checks {
        lines.push(format!("    [{}] {detail}", if pass { "ok" } else { "FAIL" }));
        ok &= pass;
    }
    ok
}

fn criterion_1(lines: &mut Vec<String>) -> bool {
    let reference = [
        (Benchmark::SphereOneMax, 3876.0),
        (Benchmark::SphereLeadingOnes, 4158.0),
        (Benchmark::EllipsoidOneMax, 11172.0),
        (Benchmark::EllipsoidLeadingOnes, 11454.0),
        (Benchmark::SphereInt, 3840.0),
        (Benchmark::EllipsoidInt, 8418.0),
    ];
    let checks = reference
        .iter()
        .map(|&(b, want)| {
            let s = summary(Algorithm::CmaEsMargin, b, 20, 100);
            let med = s.median_evals.unwrap_or(f64::NAN);
            let pass = s.successes >= 98 && (med - want).abs() <= 0.25 * want;
            (pass, format!("{} (reference {want}, ±25%)", describe(&s)))
        })
        .collect();
    report(lines, checks)
}

fn criterion_2(lines: &mut Vec<String>) -> bool {
    let mut checks = Vec::new();
    for (b, im_max) in [(Benchmark::SphereOneMax, 80), (Benchmark::SphereLeadingOnes, 45)] {
        let im = summary(Algorithm::CmaEsIm, b, 40, 100);
        checks.push((im.successes <= im_max, format!("{} (at most {im_max})", describe(&im))));
        let margin = summary(Algorithm::CmaEsMargin, b, 40, 100);
        checks.push((margin.successes >= 98, format!("{} (at least 98)", describe(&margin))));
    }
    report(lines, checks)
}

fn criterion_3(lines: &mut Vec<String>) -> bool {
    let mut c = ExperimentConfig::new(Algorithm::CmaEsMargin, Benchmark::SphereInt, 20);
    c.trials = 30;
    c.seed = SEED;
    let cells = alpha_sweep(&c).expect("sweep runs");
    let mut checks = vec![(cells.len() == 48, format!("{} cells", cells.len()))];
    let mut others = Vec::new();
    for cell in &cells {
        let rate = cell.summary.success_rate();
        let detail = format!("m={} n={} α={:.3e}: success {:.0}%", cell.m, cell.n, cell.alpha, 100.0 * rate);
        // α = N^-0.5 and α = λ^-0.5.
        let large = (cell.m, cell.n) == (0.5, 0.0) || (cell.m, cell.n) == (0.0, 0.5);
        if large {
            checks.push((rate == 0.0, format!("{detail} (must be 0%)")));
        } else if cell.m == 1.0 && cell.n == 1.0 {
            checks.push((rate >= 0.95, format!("{detail} (at least 95%)")));
        } else if cell.m == 0.5 || cell.n == 0.5 {
            others.push(format!("({},{}) {:.0}%", cell.m, cell.n, 100.0 * rate));
        }
    }
    let pass = report(lines, checks);
    lines.push(format!("    other cells with m or n = 0.5: {}", others.join(", ")));
    pass
}

fn mo_records(algorithm: Algorithm) -> Vec<MoTrialRecord> {
    let mut c = ExperimentConfig::new(algorithm, Benchmark::Dslotz, 30);
    c.trials = 20;
    c.seed = SEED;
    c.lambda = Some(10);
    c.iterations = Some(1000);
    c.trace_every = Some(100);
    run_mo_trials(&c).expect("mo trials run")
}

fn criterion_4(lines: &mut Vec<String>, margin: &[MoTrialRecord], free: &[MoTrialRecord]) -> bool {
    let hv = |r: &[MoTrialRecord]| median(&r.iter().map(|t| t.final_hypervolume()).collect::<Vec<_>>()).unwrap();
    let (hv_m, hv_f) = (hv(margin), hv(free));
    let collapsed = free
        .iter()
        .filter(|t| t.final_p_med_median().is_some_and(|p| p < 1e-3))
        .count();
    // Equality with α is reached up to rounding in the correction.
    let floor_ok = margin
        .iter()
        .all(|t| t.min_p_med.is_some_and(|p| p >= t.alpha * (1.0 - 1e-9)));
    let worst = margin
        .iter()
        .map(|t| t.min_p_med.unwrap_or(f64::NAN) / t.alpha)
        .fold(f64::INFINITY, f64::min);
    report(
        lines,
        vec![
            (
                hv_m - hv_f >= 0.5,
                format!("median final HV {hv_m:.4} with margin, {hv_f:.4} without (difference ≥ 0.5)"),
            ),
            (
                collapsed * 5 >= free.len() * 4,
                format!("p_med < 1e-3 without margin in {collapsed}/{} seeds (at least 80%)", free.len()),
            ),
            (floor_ok, format!("smallest p_med / α with margin {worst:.12}")),
        ],
    )
}

/// Runs a check that reports failure by panicking.
fn guarded(name: &str, f: impl FnOnce()) -> Check {
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let result = catch_unwind(AssertUnwindSafe(f));
    std::panic::set_hook(hook);
    match result {
        Ok(()) => (true, name.to_string()),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("{name}: {msg}"))
        }
    }
}

fn round_trips() {
    // x is recovered from the lower tail, where p keeps full relative precision.
    let mut worst: f64 = 0.0;
    for k in 0..=800 {
        let x = -0.01 * k as f64;
        let p = margin_properties::phi(x);
        worst = worst.max((normal_quantile(p) - x).abs());
    }
    assert!(worst < 1e-9, "normal quantile round trip error {worst}");
    for k in 1..1000 {
        let p = k as f64 / 1000.0;
        let back = margin_properties::phi(normal_quantile(p));
        assert!((back - p).abs() < 1e-9, "normal round trip at p={p}: {back}");
        let q = chi2_ppf_1df(p).unwrap();
        // P(χ²₁ ≤ q) = 2Φ(√q) − 1.
        let back = 2.0 * margin_properties::phi(q.sqrt()) - 1.0;
        assert!((back - p).abs() < 1e-9, "chi2 round trip at p={p}: {back}");
    }
}

fn matrix_roots() {
    let mut rng = RngStream::new(17);
    for n in [1, 2, 5, 10, 20, 40] {
        let b = DMatrix::from_fn(n, n, |_, _| rng.standard_normal());
        let c = SymmetricMatrix::new(&b * b.transpose() + DMatrix::identity(n, n)).unwrap();
        let s = matrix_sqrt(&c).unwrap();
        let inv = matrix_inverse_sqrt(&c).unwrap();
        let scale = c.as_matrix().amax();
        let err = (s.as_matrix() * s.as_matrix() - c.as_matrix()).amax() / scale;
        assert!(err < 1e-10, "n={n}: |S² − C| / |C| = {err}");
        let ident = (s.as_matrix() * inv.as_matrix() - DMatrix::identity(n, n)).amax();
        assert!(ident < 1e-10, "n={n}: |S S⁻¹ − I| = {ident}");
    }
}

fn criterion_5(lines: &mut Vec<String>, margin: &[MoTrialRecord]) -> bool {
    let corrections: usize = margin.iter().map(|t| t.corrections).sum();
    let changes: usize = margin.iter().map(|t| t.encoding_changes).sum();
    let checks = vec![
        guarded("margin audit on 1000 random states", margin_properties::check_margin_audit),
        (
            corrections > 0 && changes == 0,
            format!("DSLOTZ runs: {corrections} corrections, {changes} changed an encoded point"),
        ),
        guarded(
            "margin disabled matches plain CMA-ES for 20 iterations at 1e-12",
            cma_oracle::check_zero_margin_reduction,
        ),
        guarded(
            "hypervolume within 3σ of Monte-Carlo",
            mo_properties::check_hypervolume_monte_carlo,
        ),
        guarded(
            "non-dominated sort equals brute force on 200 instances",
            mo_properties::check_nondominated_sort,
        ),
        guarded("chi2 and normal quantile round trips at 1e-9", round_trips),
        guarded("matrix square roots at 1e-10", matrix_roots),
    ];
    report(lines, checks)
}

fn criterion_6(lines: &mut Vec<String>) -> bool {
    let mut c = ExperimentConfig::new(Algorithm::CmaEsIm, Benchmark::SphereOneMax, 40);
    c.seed = SEED;
    let space = c.spec().unwrap().space;
    let dir = tempfile::tempdir().unwrap();
    for (k, seed) in trial_seeds(SEED, 30).into_iter().enumerate() {
        let record = run_trial_traced(&c, seed, Some(10)).expect("trial runs");
        if record.success {
            continue;
        }
        let path = dir.path().join(format!("trace_{k}.csv"));
        write_trace(&path, &record, &space).unwrap();
        let table = read_trace(&path).unwrap();
        let it_col = table.column("iteration").unwrap();
        for j in (1..=40).filter(|j| table.column(&format!("m_b{j}")).is_some()) {
            let (mc, sc) = (
                table.column(&format!("m_b{j}")).unwrap(),
                table.column(&format!("sd_b{j}")).unwrap(),
            );
            if let Some(row) = table.rows.iter().find(|r| r[sc] < 1e-2 && r[mc].abs() > 0.5) {
                return report(
                    lines,
                    vec![(
                        true,
                        format!(
                            "failed trial {k} ({:?}): binary dim {j} at iteration {} has sd {:.2e}, m {:.3}",
                            record.termination, row[it_col], row[sc], row[mc]
                        ),
                    )],
                );
            }
        }
        lines.push(format!("    failed trial {k} shows no fixed binary dimension"));
    }
    report(lines, vec![(false, "no failed trial with a fixed binary dimension".into())])
}

fn main() -> ExitCode {
    let mut all = true;
    let mut run = |label: &str, f: &mut dyn FnMut(&mut Vec<String>) -> bool| {
        let mut lines = Vec::new();
        let pass = f(&mut lines);
        for l in lines {
            println!("{l}");
        }
        println!("{} {label}", if pass { "PASS" } else { "FAIL" });
        all &= pass;
    };

    run("1: margin success and median evaluations at N=20", &mut criterion_1);
    run("2: IM fails where margin succeeds at N=40", &mut criterion_2);
    run("3: α sweep on SphereInt N=20", &mut criterion_3);
    let margin = mo_records(Algorithm::MoCmaEsMargin);
    let free = mo_records(Algorithm::MoCmaEs);
    run("4: DSLOTZ with and without margin", &mut |l| criterion_4(l, &margin, &free));
    run("5: property suites", &mut |l| criterion_5(l, &margin));
    run("6: IM trace shows binary fixation", &mut criterion_6);

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
