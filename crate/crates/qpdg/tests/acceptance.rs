//! Acceptance criteria, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use qpdg::config::StudyConfig;
use qpdg::oswald::measure_reference_set;
use qpdg::study::{run_study, RunResult};
use qpdg::verify::run_verify;
use qpdg_core::estimator::c3_from_measurements;
use qpdg_core::problem::{check_hypotheses, Preset};

const SEED: u64 = 20_240_229;
const HYPOTHESIS_PAIRS: usize = 10_000;
const HYPOTHESIS_RADIUS: f64 = 1e3;
const LINEAR_RATIO_TOLERANCE: f64 = 1e-12;
const HYPOTHESIS_RELATIVE_SLACK: f64 = 1e-9;
const NEWTON_TOLERANCE: f64 = 1e-10;
const GALERKIN_FACTOR: f64 = 10.0;
const JACOBIAN_TOLERANCE: f64 = 1e-6;
const OSWALD_SPREAD: f64 = 2.0;
const STEADY_SLOPE_TOLERANCE: f64 = 0.2;
const ESTIMATOR_SLOPE_GAP: f64 = 0.25;
const EFFECTIVITY_SPREAD: f64 = 3.0;
const HEAT_NORM_TOLERANCE: f64 = 0.02;

struct Outcome {
    id: usize,
    name: &'static str,
    passed: bool,
    detail: String,
    seconds: f64,
    budget: f64,
}

fn outcome(id: usize, name: &'static str, budget: f64, start: Instant, passed: bool, detail: String) -> Outcome {
    let seconds = start.elapsed().as_secs_f64();
    Outcome {
        id,
        name,
        passed: passed && seconds < budget,
        detail,
        seconds,
        budget,
    }
}

fn hypotheses() -> Outcome {
    let start = Instant::now();
    let lin = check_hypotheses(&Preset::Linear, HYPOTHESIS_PAIRS, HYPOTHESIS_RADIUS, SEED);
    let hrs = check_hypotheses(&Preset::Hrs, HYPOTHESIS_PAIRS, HYPOTHESIS_RADIUS, SEED);
    let lin_ok = (lin.worst_lipschitz - 1.0).abs() <= LINEAR_RATIO_TOLERANCE
        && (lin.worst_monotonicity - 1.0).abs() <= LINEAR_RATIO_TOLERANCE;
    let hrs_ok = hrs.worst_lipschitz <= 3.0 * (1.0 + HYPOTHESIS_RELATIVE_SLACK)
        && hrs.worst_monotonicity >= 2.0 * (1.0 - HYPOTHESIS_RELATIVE_SLACK);
    let count_ok = lin.pairs_checked + lin.pairs_skipped == HYPOTHESIS_PAIRS
        && hrs.pairs_checked + hrs.pairs_skipped == HYPOTHESIS_PAIRS;
    outcome(
        1,
        "hypothesis certification",
        1.0,
        start,
        lin_ok && hrs_ok && count_ok,
        format!(
            "linear ratios {:.15}/{:.15}, hrs Lipschitz {:.12} monotonicity {:.12}",
            lin.worst_lipschitz, lin.worst_monotonicity, hrs.worst_lipschitz, hrs.worst_monotonicity
        ),
    )
}

fn suite_config(suite: &str) -> StudyConfig {
    StudyConfig {
        seed: SEED,
        newton_tol: NEWTON_TOLERANCE,
        suites: vec![suite.to_string()],
        ..StudyConfig::default()
    }
}

fn galerkin(all_rows: &[&RunResult]) -> Outcome {
    let start = Instant::now();
    let report = run_verify(&suite_config("galerkin")).expect("galerkin suite runs");
    let bound = GALERKIN_FACTOR * NEWTON_TOLERANCE;
    let worst = all_rows.iter().map(|r| r.galerkin_residual).fold(0.0, f64::max);
    outcome(
        2,
        "Galerkin identity",
        60.0,
        start,
        report.passed() && worst <= bound,
        format!(
            "max residual over {} study runs {worst:.2e} (bound {bound:.0e}); verify suite {}",
            all_rows.len(),
            if report.passed() { "passed" } else { "failed" }
        ),
    )
}

fn jacobian() -> Outcome {
    let start = Instant::now();
    let report = run_verify(&suite_config("jacobian")).expect("jacobian suite runs");
    assert_eq!(qpdg::verify::JACOBIAN_TOLERANCE, JACOBIAN_TOLERANCE);
    let suite = report.suite("jacobian").expect("suite ran");
    outcome(
        3,
        "Jacobian correctness",
        10.0,
        start,
        suite.passed,
        format!(
            "{} groups, presets linear and hrs, p = 1..3, each over theta = -1, 0, 1",
            suite.details.len()
        ),
    )
}

fn oswald(c3: &mut f64) -> Outcome {
    let start = Instant::now();
    let m = measure_reference_set().expect("oswald measurement");
    *c3 = c3_from_measurements(&m).expect("nonempty measurements");
    let spread = |f: fn(&qpdg_core::estimator::OswaldMeasurement) -> f64| {
        let v: Vec<f64> = m.iter().map(f).collect();
        v.iter().cloned().fold(f64::MIN, f64::max) / v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let sl2 = spread(|x| x.l2);
    let sgr = spread(|x| x.gradient);
    outcome(
        4,
        "Oswald constants p-explicit",
        30.0,
        start,
        sl2 <= OSWALD_SPREAD && sgr <= OSWALD_SPREAD,
        format!(
            "spread L2 {sl2:.3}, gradient {sgr:.3} (limit {OSWALD_SPREAD}); C3 = {:.4}",
            *c3
        ),
    )
}

fn study(preset: &str, t_final: Option<f64>, c3: f64) -> Vec<RunResult> {
    let cfg = StudyConfig {
        preset: preset.into(),
        degrees: vec![1, 2],
        levels: 3,
        base: 4,
        t_final,
        seed: SEED,
        newton_tol: NEWTON_TOLERANCE,
        ..StudyConfig::default()
    };
    run_study(&cfg, c3).expect("study runs")
}

fn steady(rows: &[RunResult], seconds: f64) -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [1usize, 2] {
        let sel: Vec<&RunResult> = rows.iter().filter(|r| r.p == p).collect();
        let er = sel[0].error_rate;
        let es = sel[0].estimator_rate;
        let eff: Vec<f64> = sel.iter().map(|r| r.effectivity).collect();
        let emin = eff.iter().cloned().fold(f64::MAX, f64::min);
        let emax = eff.iter().cloned().fold(f64::MIN, f64::max);
        ok &= sel.len() == 3
            && (er - p as f64).abs() <= STEADY_SLOPE_TOLERANCE
            && (es - er).abs() <= ESTIMATOR_SLOPE_GAP
            && emin >= 1.0
            && emax / emin <= EFFECTIVITY_SPREAD;
        parts.push(format!(
            "p={p}: error slope {er:.3}, estimator slope {es:.3}, effectivity {emin:.2}..{emax:.2}"
        ));
    }
    let mut o = outcome(5, "steady convergence rates", 120.0, start, ok, parts.join("; "));
    o.seconds += seconds;
    o.passed &= o.seconds < o.budget;
    o
}

fn parabolic(heat: &[RunResult], smooth: &[RunResult], seconds: f64) -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for rows in [heat, smooth] {
        for r in rows {
            ok &= r.total >= r.true_error && r.dt <= r.h.powi(r.p as i32 + 1) * (1.0 + 1e-12);
        }
        for p in [1usize, 2] {
            let finest = rows
                .iter()
                .filter(|r| r.p == p)
                .max_by_key(|r| r.level)
                .expect("rows per degree");
            let jumps = finest.initial_jump + finest.jump + finest.time_jump;
            ok &= finest.elliptic > jumps;
            parts.push(format!(
                "{} p={p}: min effectivity {:.2}, finest elliptic {:.3e} vs jump terms {:.3e}",
                finest.preset,
                rows.iter()
                    .filter(|r| r.p == p)
                    .map(|r| r.effectivity)
                    .fold(f64::MAX, f64::min),
                finest.elliptic,
                jumps
            ));
        }
    }
    let mut o = outcome(6, "parabolic bound", 600.0, start, ok, parts.join("; "));
    o.seconds += seconds;
    o.passed &= o.seconds < o.budget;
    o
}

fn heat_norm(heat: &[RunResult]) -> Outcome {
    let start = Instant::now();
    let finest = heat
        .iter()
        .filter(|r| r.p == 2)
        .max_by_key(|r| r.level)
        .expect("p = 2 rows");
    let exact = 0.5 * (-2.0 * PI * PI * 0.1f64).exp();
    let rel = (finest.final_l2_norm - exact).abs() / exact;
    outcome(
        7,
        "heat equation sanity",
        60.0,
        start,
        rel <= HEAT_NORM_TOLERANCE,
        format!(
            "|U(T)| = {:.6} vs {exact:.6} (relative {rel:.4}, limit {HEAT_NORM_TOLERANCE})",
            finest.final_l2_norm
        ),
    )
}

fn stability(heat: &[RunResult]) -> Outcome {
    let start = Instant::now();
    let mut violations = 0;
    let mut steps = 0;
    for r in heat {
        for w in r.l2_history.windows(2) {
            steps += 1;
            if w[1] > w[0] {
                violations += 1;
            }
        }
    }
    outcome(
        8,
        "stability witness",
        5.0,
        start,
        violations == 0 && steps > 0,
        format!("{steps} heat_decay steps, {violations} increases of |U^n|"),
    )
}

fn determinism(c3: f64) -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().expect("temporary directory");
    let run = |name: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_qpdg"))
            .args([
                "study",
                "--preset",
                "quasilinear_smooth",
                "--p",
                "1,2",
                "--levels",
                "2",
                "--t-final",
                "0.02",
            ])
            .arg("--seed")
            .arg(SEED.to_string())
            .arg("--c3")
            .arg(c3.to_string())
            .arg("--out")
            .arg(&out)
            .output()
            .expect("binary runs");
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(Path::new(&out).join("summary.csv")).expect("summary written")
    };
    let a = run("a");
    let b = run("b");
    outcome(
        9,
        "determinism",
        60.0,
        start,
        a == b && !a.is_empty(),
        format!("two study runs, {} bytes each, identical: {}", a.len(), a == b),
    )
}

#[test]
fn acceptance_criteria() {
    let mut results = vec![hypotheses()];
    results.push(jacobian());
    let mut c3 = 0.0;
    results.push(oswald(&mut c3));

    let t = Instant::now();
    let steady_rows = study("steady_quasilinear", None, c3);
    let steady_seconds = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let heat_rows = study("heat_decay", Some(0.1), c3);
    let smooth_rows = study("quasilinear_smooth", Some(0.1), c3);
    let parabolic_seconds = t.elapsed().as_secs_f64();

    let all: Vec<&RunResult> = steady_rows.iter().chain(&heat_rows).chain(&smooth_rows).collect();
    results.push(galerkin(&all));
    results.push(steady(&steady_rows, steady_seconds));
    results.push(parabolic(&heat_rows, &smooth_rows, parabolic_seconds));
    results.push(heat_norm(&heat_rows));
    results.push(stability(&heat_rows));
    results.push(determinism(c3));
    results.sort_by_key(|o| o.id);

    println!();
    for o in &results {
        println!(
            "criterion {} {} {}: {} [{:.1} s, limit {:.0} s]",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail,
            o.seconds,
            o.budget
        );
    }
    println!();
    for r in steady_rows.iter().chain(&heat_rows).chain(&smooth_rows) {
        println!(
            "  {} p={} level={} h={:.4} steps={} error={:.4e} bound={:.4e} eff={:.2} elliptic={:.3e} init={:.2e}/{:.2e} jump={:.3e} time_jump={:.3e}",
            r.preset, r.p, r.level, r.h, r.steps, r.true_error, r.total, r.effectivity, r.elliptic, r.initial_l2, r.initial_jump, r.jump, r.time_jump
        );
    }
    let failed: Vec<usize> = results.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
