//! Command line interface: `solve`, `study` and `verify`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qpdg_core::fespace::{gauss_lobatto, DgFunction, DgSpace};
use qpdg_core::mesh::Mesh;

use crate::config::{parse_list, StudyConfig};
use crate::error::{exit, Error, Result};
use crate::oswald::measured_c3;
use crate::output::{csv_bytes, fmt_f64, loglog_svg, write_atomic, Series};
use crate::study::{problem, run_case, run_study, RunResult, COLUMNS};
use crate::verify::run_verify;

#[derive(Debug, Parser)]
#[command(
    name = "qpdg",
    version,
    about = "IPDG solver and a posteriori error bounds for quasilinear parabolic problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one steady or time dependent solve and dump the solution.
    Solve(Overrides),
    /// Sweep degrees and mesh levels; write summary.csv and convergence.svg.
    Study(Overrides),
    /// Run the verification suites and write verify.txt.
    Verify(Overrides),
}

/// Flags overriding the configuration file.
#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// heat_decay, quasilinear_smooth or steady_quasilinear.
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma separated polynomial degrees (`solve` uses the first).
    #[arg(long)]
    pub p: Option<String>,
    /// Number of mesh levels in a study.
    #[arg(long)]
    pub levels: Option<String>,
    /// Mesh level of a single solve.
    #[arg(long)]
    pub level: Option<String>,
    /// Cells per side on level 0.
    #[arg(long)]
    pub base: Option<String>,
    /// -1, 0 or 1.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Penalty parameter, must exceed 1.
    #[arg(long = "c-sigma")]
    pub c_sigma: Option<String>,
    /// `auto` (Δt ≤ h^{p+1}) or a step size.
    #[arg(long)]
    pub dt: Option<String>,
    /// Final time, overriding the preset.
    #[arg(long = "t-final")]
    pub t_final: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed of every random sample.
    #[arg(long)]
    pub seed: Option<String>,
    /// `auto` (measured) or a value for the Oswald constant.
    #[arg(long)]
    pub c3: Option<String>,
    /// Max-norm Newton residual tolerance.
    #[arg(long = "newton-tol")]
    pub newton_tol: Option<String>,
    /// Dump the solution at every time step.
    #[arg(long)]
    pub snapshots: bool,
    /// Comma separated verification suites.
    #[arg(long)]
    pub suites: Option<String>,
}

impl Overrides {
    /// Configuration file (or defaults) with the flags applied, validated.
    pub fn resolve(&self) -> Result<StudyConfig> {
        let mut cfg = match &self.config {
            Some(p) => StudyConfig::load(p)?,
            None => StudyConfig::default(),
        };
        let pairs: [(&str, &Option<String>); 12] = [
            ("preset", &self.preset),
            ("levels", &self.levels),
            ("level", &self.level),
            ("base", &self.base),
            ("theta", &self.theta),
            ("c_sigma", &self.c_sigma),
            ("t_final", &self.t_final),
            ("seed", &self.seed),
            ("newton_tol", &self.newton_tol),
            ("p", &self.p),
            ("dt", &self.dt),
            ("c3", &self.c3),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if self.snapshots {
            cfg.snapshots = true;
        }
        if let Some(s) = &self.suites {
            cfg.suites = parse_list(s);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn c3_for(cfg: &StudyConfig) -> Result<f64> {
    match cfg.c3 {
        Some(c) => Ok(c),
        None => {
            let c = measured_c3()?;
            println!("measured C3 = {c:.6}");
            Ok(c)
        }
    }
}

fn summary_csv(rows: &[RunResult]) -> Result<Vec<u8>> {
    let body: Vec<Vec<String>> = rows.iter().map(RunResult::csv_row).collect();
    csv_bytes(&COLUMNS, &body)
}

const FIELD_COLUMNS: [&str; 7] = ["time", "element", "rx", "ry", "x", "y", "value"];

/// Values of `u` at the tensor Gauss-Lobatto points of every element.
fn field_rows(space: &DgSpace<'_>, u: &DgFunction, t: f64) -> Result<Vec<Vec<String>>> {
    let nodes = gauss_lobatto(space.degree()).points;
    let refs: Vec<[f64; 2]> = nodes.iter().flat_map(|&y| nodes.iter().map(move |&x| [x, y])).collect();
    let mesh = space.mesh();
    let mut rows = Vec::new();
    for e in 0..mesh.num_elements() {
        let map = mesh.element_map(e);
        for (r, (v, _)) in refs.iter().zip(space.evaluate(u, e, &refs)?) {
            let x = map.map(*r);
            rows.push(vec![
                fmt_f64(t),
                e.to_string(),
                fmt_f64(r[0]),
                fmt_f64(r[1]),
                fmt_f64(x[0]),
                fmt_f64(x[1]),
                fmt_f64(v),
            ]);
        }
    }
    Ok(rows)
}

fn mesh_csv(mesh: &Mesh) -> Result<Vec<u8>> {
    let header = ["element", "x0", "y0", "x1", "y1", "x2", "y2", "x3", "y3", "diameter"];
    let rows: Vec<Vec<String>> = mesh
        .elements
        .iter()
        .enumerate()
        .map(|(e, cell)| {
            let mut r = vec![e.to_string()];
            for &v in cell {
                r.push(fmt_f64(mesh.vertices[v][0]));
                r.push(fmt_f64(mesh.vertices[v][1]));
            }
            r.push(fmt_f64(mesh.element_diameter[e]));
            r
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn cmd_solve(cfg: &StudyConfig) -> Result<()> {
    let c3 = c3_for(cfg)?;
    let p = cfg.degrees[0];
    let solved = run_case(cfg, p, cfg.level, c3)?;
    let out = &cfg.out;
    write_atomic(
        &out.join("summary.csv"),
        &summary_csv(std::slice::from_ref(&solved.result))?,
    )?;
    let space = DgSpace::new(&solved.mesh, p);
    let t_final = problem(cfg)?.final_time;
    write_atomic(
        &out.join("solution.csv"),
        &csv_bytes(&FIELD_COLUMNS, &field_rows(&space, &solved.solution, t_final)?)?,
    )?;
    write_atomic(&out.join("mesh.csv"), &mesh_csv(&solved.mesh)?)?;
    if cfg.snapshots {
        if let Some(series) = &solved.series {
            for (n, (t, u)) in series.times.iter().zip(&series.snapshots).enumerate() {
                let path = out.join("snapshots").join(format!("step_{n:05}.csv"));
                write_atomic(&path, &csv_bytes(&FIELD_COLUMNS, &field_rows(&space, u, *t)?)?)?;
            }
        }
    }
    let r = &solved.result;
    println!(
        "{} p={} level={}: true error {:.4e}, bound {:.4e}, effectivity {:.3}",
        r.preset, r.p, r.level, r.true_error, r.total, r.effectivity
    );
    Ok(())
}

/// Log-log plot of true error and bound against `h`, one pair per degree.
pub fn convergence_svg(cfg: &StudyConfig, rows: &[RunResult]) -> String {
    let mut series = Vec::new();
    for &p in &cfg.degrees {
        let sel: Vec<&RunResult> = rows.iter().filter(|r| r.p == p).collect();
        series.push(Series {
            label: format!("error p={p}"),
            points: sel.iter().map(|r| (r.h, r.true_error)).collect(),
            dashed: false,
        });
        series.push(Series {
            label: format!("bound p={p}"),
            points: sel.iter().map(|r| (r.h, r.total)).collect(),
            dashed: true,
        });
    }
    loglog_svg(&format!("{}: error and bound", cfg.preset), "h", "energy norm", &series)
}

pub fn cmd_study(cfg: &StudyConfig) -> Result<Vec<RunResult>> {
    let c3 = c3_for(cfg)?;
    let rows = run_study(cfg, c3)?;
    write_atomic(&cfg.out.join("summary.csv"), &summary_csv(&rows)?)?;
    write_atomic(&cfg.out.join("convergence.svg"), convergence_svg(cfg, &rows).as_bytes())?;
    for r in &rows {
        println!(
            "p={} level={} h={:.4}: error {:.4e} bound {:.4e} effectivity {:.3}",
            r.p, r.level, r.h, r.true_error, r.total, r.effectivity
        );
    }
    Ok(rows)
}

/// Returns whether every suite passed.
pub fn cmd_verify(cfg: &StudyConfig) -> Result<bool> {
    let report = run_verify(cfg)?;
    let text = report.render();
    print!("{text}");
    write_atomic(&cfg.out.join("verify.txt"), text.as_bytes())?;
    Ok(report.passed())
}

fn report_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    let (flags, which) = match &cli.command {
        Command::Solve(o) => (o, 0),
        Command::Study(o) => (o, 1),
        Command::Verify(o) => (o, 2),
    };
    let cfg = match flags.resolve() {
        Ok(c) => c,
        Err(e) => return report_error(&e),
    };
    let outcome = match which {
        0 => cmd_solve(&cfg).map(|_| exit::SUCCESS),
        1 => cmd_study(&cfg).map(|_| exit::SUCCESS),
        _ => cmd_verify(&cfg).map(|ok| if ok { exit::SUCCESS } else { exit::VERIFICATION_FAILED }),
    };
    outcome.unwrap_or_else(|e| report_error(&e))
}
