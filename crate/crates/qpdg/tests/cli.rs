use std::path::Path;
use std::process::{Command, Output};

fn qpdg(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qpdg"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn solve_writes_summary_solution_and_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let o = qpdg(
        &[
            "solve",
            "--preset",
            "heat_decay",
            "--p",
            "1",
            "--level",
            "0",
            "--c3",
            "13.7",
            "--t-final",
            "0.02",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("preset,p,level,elements,h,dofs,steps,dt,true_error,elliptic"));
    assert!(lines[1].starts_with("heat_decay,1,0,16,"));
    let solution = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert_eq!(solution.lines().count(), 1 + 16 * 4);
    let mesh = std::fs::read_to_string(dir.path().join("mesh.csv")).unwrap();
    assert_eq!(mesh.lines().count(), 17);
}

#[test]
fn snapshots_are_written_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let o = qpdg(
        &[
            "solve",
            "--preset",
            "heat_decay",
            "--p",
            "1",
            "--dt",
            "0.01",
            "--t-final",
            "0.03",
            "--c3",
            "13.7",
            "--snapshots",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let n = std::fs::read_dir(dir.path().join("snapshots")).unwrap().count();
    assert_eq!(n, 4);
}

#[test]
fn invalid_penalty_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = qpdg(&["solve", "--c-sigma", "0.5", "--c3", "13.7"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("c_sigma"));
}

#[test]
fn unknown_preset_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = qpdg(&["study", "--preset", "nonexistent"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("preset"));
}

#[test]
fn unknown_config_key_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.cfg");
    std::fs::write(&file, "preset = heat_decay\nbogus_key = 3\n").unwrap();
    let o = qpdg(&["study", "--config", file.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus_key"));
}

#[test]
fn usage_errors_exit_with_configuration_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&qpdg(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&qpdg(&["study", "--theta", "2"], dir.path())), 2);
}

#[test]
fn verify_reports_failure_for_weak_symmetric_penalty() {
    let dir = tempfile::tempdir().unwrap();
    let o = qpdg(&["verify", "--suites", "coercivity", "--c-sigma", "1.01"], dir.path());
    assert_eq!(code(&o), 1);
    let report = std::fs::read_to_string(dir.path().join("verify.txt")).unwrap();
    assert!(report.contains("[FAIL] coercivity"));
}

#[test]
fn verify_passes_selected_suites() {
    let dir = tempfile::tempdir().unwrap();
    let o = qpdg(
        &["verify", "--suites", "hypotheses,quadrature,projection,jumps"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let report = std::fs::read_to_string(dir.path().join("verify.txt")).unwrap();
    assert!(report.contains("overall: PASS (4/4 suites passed)"));
}

#[test]
fn config_file_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("study.cfg");
    std::fs::write(
        &file,
        "# small study\npreset = steady_quasilinear\np = 1\nlevels = 3\nbase = 2\nc3 = 13.7\n",
    )
    .unwrap();
    let o = qpdg(
        &["study", "--config", file.to_str().unwrap(), "--levels", "2"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary
        .lines()
        .nth(2)
        .unwrap()
        .starts_with("steady_quasilinear,1,1,16,"));
    let svg = std::fs::read_to_string(dir.path().join("convergence.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
}
