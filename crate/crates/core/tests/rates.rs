use qpdg_core::estimator::{accumulate_parabolic, populate_constants, true_error};
use qpdg_core::fespace::DgSpace;
use qpdg_core::ipdg::DiscretizationParams;
use qpdg_core::mesh::build_structured_mesh;
use qpdg_core::problem::manufactured_problem;
use qpdg_core::solver::{march_parabolic, DtPolicy, NewtonConfig};

const DT: f64 = 2e-4;
const T_FINAL: f64 = 0.02;
const C3: f64 = 13.7;

/// (h, energy error, bound) for the heat problem on `n × n` cells.
fn heat_run(n: usize, p: usize) -> (f64, f64, f64) {
    let mut spec = manufactured_problem("heat_decay").unwrap();
    spec.final_time = T_FINAL;
    let mesh = build_structured_mesh(spec.domain, n, n).unwrap();
    let space = DgSpace::new(&mesh, p);
    let params = DiscretizationParams::new(0, 10.0, p).unwrap();
    let series = march_parabolic(&spec, &space, &params, DtPolicy::Fixed(DT), &NewtonConfig::default()).unwrap();
    assert_eq!(series.steps(), 100);
    let (err, profile) = true_error(&series, &spec, &space, &params).unwrap();
    assert_eq!(profile.len(), 101);
    let constants = populate_constants(spec.nonlinearity.as_ref(), &spec.domain, &params, C3, 1.0).unwrap();
    let report = accumulate_parabolic(&series, &spec, &space, &params, &constants).unwrap();
    (mesh.max_diameter(), err, report.total)
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(h, e)| (h.ln(), e.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[test]
fn heat_energy_error_converges_at_degree_rate() {
    for (p, tolerance) in [(1usize, 0.15), (2, 0.2)] {
        let runs: Vec<(f64, f64, f64)> = [4, 8, 16].iter().map(|&n| heat_run(n, p)).collect();
        for &(_, err, bound) in &runs {
            assert!(bound >= err, "p = {p}: bound {bound} below error {err}");
        }
        let s = slope(&runs.iter().map(|r| (r.0, r.1)).collect::<Vec<_>>());
        assert!((s - p as f64).abs() <= tolerance, "p = {p}: slope {s}");
    }
}
