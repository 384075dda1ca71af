//! Single runs and (degree × level) convergence studies.

use qpdg_core::estimator::{accumulate_parabolic, estimate_at, populate_constants};
use qpdg_core::fespace::{DgFunction, DgSpace};
use qpdg_core::ipdg::{form_vector, load_vector, DiscretizationParams};
use qpdg_core::mesh::{build_structured_mesh, Mesh};
use qpdg_core::problem::{manufactured_problem, ProblemSpec};
use qpdg_core::solver::{march_parabolic, mass_matrix, solve_elliptic, DtPolicy, NewtonConfig, TimeSeries};
use rayon::prelude::*;

use crate::config::{DtSetting, StudyConfig};
use crate::error::Result;
use crate::output::fmt_f64;

/// CSV columns of `summary.csv`, in order.
pub const COLUMNS: [&str; 22] = [
    "preset",
    "p",
    "level",
    "elements",
    "h",
    "dofs",
    "steps",
    "dt",
    "true_error",
    "elliptic",
    "initial_l2",
    "initial_jump",
    "jump",
    "time_jump",
    "oscillation",
    "total",
    "effectivity",
    "newton_iterations",
    "error_rate",
    "estimator_rate",
    "final_l2_norm",
    "galerkin_residual",
];

/// Outcome of one solve with every term of the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub preset: String,
    pub p: usize,
    pub level: usize,
    pub elements: usize,
    /// Largest element diameter.
    pub h: f64,
    pub dofs: usize,
    pub steps: usize,
    /// Time step (zero for steady problems).
    pub dt: f64,
    pub true_error: f64,
    pub elliptic: f64,
    pub initial_l2: f64,
    pub initial_jump: f64,
    pub jump: f64,
    pub time_jump: f64,
    /// `(∫₀ᵀ Θ)^{1/2}`, or `Θ^{1/2}` for steady problems.
    pub oscillation: f64,
    pub total: f64,
    pub effectivity: f64,
    /// Newton iterations summed over all solves.
    pub newton_iterations: usize,
    /// Least-squares slope of `log true_error` against `log h` over the
    /// levels of the same degree.
    pub error_rate: f64,
    pub estimator_rate: f64,
    pub final_l2_norm: f64,
    /// `max_i |B(U, φ_i) − ⟨f − U_t, φ_i⟩|` over every accepted solve.
    pub galerkin_residual: f64,
    /// `‖U^n‖` for every snapshot.
    pub l2_history: Vec<f64>,
}

impl RunResult {
    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.preset.clone(),
            self.p.to_string(),
            self.level.to_string(),
            self.elements.to_string(),
            fmt_f64(self.h),
            self.dofs.to_string(),
            self.steps.to_string(),
            fmt_f64(self.dt),
            fmt_f64(self.true_error),
            fmt_f64(self.elliptic),
            fmt_f64(self.initial_l2),
            fmt_f64(self.initial_jump),
            fmt_f64(self.jump),
            fmt_f64(self.time_jump),
            fmt_f64(self.oscillation),
            fmt_f64(self.total),
            fmt_f64(self.effectivity),
            self.newton_iterations.to_string(),
            fmt_f64(self.error_rate),
            fmt_f64(self.estimator_rate),
            fmt_f64(self.final_l2_norm),
            fmt_f64(self.galerkin_residual),
        ]
    }
}

/// A finished run together with the data needed for field dumps.
pub struct Solved {
    pub result: RunResult,
    pub mesh: Mesh,
    /// Final solution.
    pub solution: DgFunction,
    /// The whole history of a time dependent run.
    pub series: Option<TimeSeries>,
}

/// The problem with the configured final time applied.
pub fn problem(cfg: &StudyConfig) -> Result<ProblemSpec> {
    let mut spec = manufactured_problem(&cfg.preset)?;
    if let Some(t) = cfg.t_final {
        spec.final_time = t;
    }
    Ok(spec)
}

/// Mesh of the given level: `base·2^level` cells per side.
pub fn level_mesh(spec: &ProblemSpec, base: usize, level: usize) -> Result<Mesh> {
    let n = base << level;
    Ok(build_structured_mesh(spec.domain, n, n)?)
}

fn newton_config(cfg: &StudyConfig) -> NewtonConfig {
    NewtonConfig {
        tolerance: cfg.newton_tol,
        ..NewtonConfig::default()
    }
}

fn dt_policy(cfg: &StudyConfig) -> DtPolicy {
    match cfg.dt {
        DtSetting::Auto => DtPolicy::MeshPower,
        DtSetting::Fixed(dt) => DtPolicy::Fixed(dt),
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Solves one (degree, level) case of the configured problem.
pub fn run_case(cfg: &StudyConfig, p: usize, level: usize, c3: f64) -> Result<Solved> {
    let spec = problem(cfg)?;
    let mesh = level_mesh(&spec, cfg.base, level)?;
    let params = DiscretizationParams::new(cfg.theta, cfg.c_sigma, p)?;
    let newton = newton_config(cfg);
    let (result, solution, series) = {
        let space = DgSpace::new(&mesh, p);
        let nl = spec.nonlinearity.as_ref();
        let constants = populate_constants(nl, &spec.domain, &params, c3, 1.0)?;
        let mut r = RunResult {
            preset: cfg.preset.clone(),
            p,
            level,
            elements: mesh.num_elements(),
            h: mesh.max_diameter(),
            dofs: space.num_dofs(),
            steps: 0,
            dt: 0.0,
            true_error: f64::NAN,
            elliptic: 0.0,
            initial_l2: 0.0,
            initial_jump: 0.0,
            jump: 0.0,
            time_jump: 0.0,
            oscillation: 0.0,
            total: 0.0,
            effectivity: f64::NAN,
            newton_iterations: 0,
            error_rate: f64::NAN,
            estimator_rate: f64::NAN,
            final_l2_norm: 0.0,
            galerkin_residual: 0.0,
            l2_history: Vec::new(),
        };
        if spec.steady {
            let t = spec.final_time;
            let f = |x| (spec.source)(t, x);
            let (u, report) = solve_elliptic(&space, nl, &f, t, &params, &newton, DgFunction::zeros(&space))?;
            let b = estimate_at(&space, nl, &u, &f, t, &params, constants.c_est)?;
            let form = form_vector(&space, nl, &u, t, &params)?;
            let load = load_vector(&space, &f);
            r.galerkin_residual = max_abs(form.iter().zip(&load).map(|(a, b)| a - b));
            r.elliptic = b.total.sqrt();
            r.total = r.elliptic;
            r.oscillation = (constants.c_est * b.oscillation).sqrt();
            r.newton_iterations = report.iterations;
            if let Some(exact) = &spec.exact {
                r.true_error = space.energy_distance(Some(&u), |x| (exact.grad)(t, x), params.c_sigma());
                r.effectivity = r.total / r.true_error;
            }
            r.final_l2_norm = space.l2_norm(&u);
            r.l2_history = vec![r.final_l2_norm];
            (r, u, None)
        } else {
            let series = march_parabolic(&spec, &space, &params, dt_policy(cfg), &newton)?;
            let report = accumulate_parabolic(&series, &spec, &space, &params, &constants)?;
            let mass = mass_matrix(&space);
            let mut worst: f64 = 0.0;
            for n in 1..series.len() {
                let t = series.times[n];
                let u = &series.snapshots[n];
                let form = form_vector(&space, nl, u, t, &params)?;
                let load = load_vector(&space, &|x| (spec.source)(t, x));
                let mdu = mass.mul_vec(series.derivatives[n - 1].coeffs());
                worst = worst.max(max_abs((0..form.len()).map(|i| form[i] - (load[i] - mdu[i]))));
            }
            r.galerkin_residual = worst;
            r.steps = series.steps();
            r.dt = if r.steps > 0 {
                series.times[1] - series.times[0]
            } else {
                0.0
            };
            r.true_error = report.true_error;
            r.elliptic = report.elliptic;
            r.initial_l2 = report.initial_l2;
            r.initial_jump = report.initial_jump;
            r.jump = report.jump;
            r.time_jump = report.time_jump;
            r.oscillation = report.oscillation_integral.sqrt();
            r.total = report.total;
            r.effectivity = report.effectivity;
            r.newton_iterations = series.newton_iterations.iter().sum();
            r.l2_history = series.snapshots.iter().map(|u| space.l2_norm(u)).collect();
            r.final_l2_norm = *r.l2_history.last().expect("nonempty series");
            let last = series.snapshots.last().expect("nonempty series").clone();
            (r, last, Some(series))
        }
    };
    Ok(Solved {
        result,
        mesh,
        solution,
        series,
    })
}

/// Least-squares slope of `log y` against `log x`; NaN with fewer than two
/// usable points.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// Runs every (degree, level) pair in parallel and returns the rows sorted
/// by degree and level, with the rate columns filled in.
pub fn run_study(cfg: &StudyConfig, c3: f64) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    let cases: Vec<(usize, usize)> = cfg
        .degrees
        .iter()
        .flat_map(|&p| (0..cfg.levels).map(move |l| (p, l)))
        .collect();
    let mut rows: Vec<RunResult> = cases
        .into_par_iter()
        .map(|(p, l)| run_case(cfg, p, l, c3).map(|s| s.result))
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| (r.p, r.level));
    let mut degrees: Vec<usize> = rows.iter().map(|r| r.p).collect();
    degrees.dedup();
    for p in degrees {
        let err: Vec<(f64, f64)> = rows.iter().filter(|r| r.p == p).map(|r| (r.h, r.true_error)).collect();
        let est: Vec<(f64, f64)> = rows.iter().filter(|r| r.p == p).map(|r| (r.h, r.total)).collect();
        let (re, rs) = (loglog_slope(&err), loglog_slope(&est));
        for r in rows.iter_mut().filter(|r| r.p == p) {
            r.error_rate = re;
            r.estimator_rate = rs;
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.5, 0.25, 0.125].iter().map(|&h: &f64| (h, 3.0 * h.powi(2))).collect();
        assert!((loglog_slope(&pts) - 2.0).abs() < 1e-12);
        assert!(loglog_slope(&pts[..1]).is_nan());
    }

    #[test]
    fn steady_run_reports_consistent_terms() {
        let cfg = StudyConfig {
            preset: "steady_quasilinear".into(),
            ..StudyConfig::default()
        };
        let s = run_case(&cfg, 1, 0, 10.0).unwrap();
        let r = &s.result;
        assert_eq!(r.steps, 0);
        assert_eq!(r.elements, 16);
        assert!(r.galerkin_residual <= 1e-9);
        assert!(r.effectivity >= 1.0);
        assert_eq!(r.total, r.elliptic);
        assert!(s.series.is_none());
    }

    #[test]
    fn parabolic_run_fills_every_term() {
        let cfg = StudyConfig {
            t_final: Some(0.01),
            ..StudyConfig::default()
        };
        let s = run_case(&cfg, 1, 0, 10.0).unwrap();
        let r = &s.result;
        assert!(r.steps >= 1);
        assert_eq!(r.l2_history.len(), r.steps + 1);
        assert!(r.galerkin_residual <= 1e-9);
        let sum = r.elliptic + r.initial_l2 + r.initial_jump + r.jump + r.time_jump;
        assert!((sum - r.total).abs() <= 1e-12 * r.total);
        assert_eq!(r.csv_row().len(), COLUMNS.len());
    }
}
