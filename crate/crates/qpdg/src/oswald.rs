//! Exact worst-case constants of the Oswald approximation inequalities
//!
//! `Σ_κ ‖v − I_Os v‖²_κ ≤ C Σ_e (h_e/p²) ‖[v]‖²_e` and
//! `Σ_κ ‖∇(v − I_Os v)‖²_κ ≤ C Σ_e (p²/h_e) ‖[v]‖²_e`,
//!
//! computed as the largest generalized eigenvalue of the two quadratic forms
//! over the whole broken space. Both forms vanish on continuous functions
//! with zero trace, so the quotient is taken on the range of the jump form.

use nalgebra::{DMatrix, SymmetricEigen};
use qpdg_core::estimator::{c3_from_measurements, OswaldMeasurement};
use qpdg_core::fespace::{oswald_with, DgFunction, DgSpace, NodalConversion, NodeNumbering};
use qpdg_core::mesh::{build_structured_mesh, refine_uniform, Mesh, Rectangle};
use rayon::prelude::*;

use crate::dense::{element_matrix, jump_form};
use crate::error::Result;

/// Relative cut-off below which jump-form eigenvalues count as zero.
const NULL_TOLERANCE: f64 = 1e-10;

/// `D = I − I_Os` as per-element row blocks: for element `e`, the nonzero
/// columns and the `nloc × columns` block in row-major order.
struct DefectBlocks {
    columns: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
}

fn defect_blocks(space: &DgSpace<'_>) -> Result<DefectBlocks> {
    let n = space.num_dofs();
    let nloc = space.dofs_per_element();
    let ne = space.mesh().num_elements();
    let conv = NodalConversion::new(space.degree())?;
    let numbering = NodeNumbering::new(space.mesh(), space.degree());
    let mut columns = vec![Vec::new(); ne];
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); ne];
    let mut unit = vec![0.0; n];
    for j in 0..n {
        unit[j] = 1.0;
        let v = DgFunction::from_coeffs(space, unit.clone())?;
        unit[j] = 0.0;
        let d = v.add_scaled(&oswald_with(space, &conv, &numbering, &v), -1.0);
        for e in 0..ne {
            let block = d.local(e);
            if block.iter().any(|x| x.abs() > 1e-15) {
                columns[e].push(j);
                values[e].extend_from_slice(block);
            }
        }
    }
    // transpose each block to row-major `nloc × columns`
    for e in 0..ne {
        let k = columns[e].len();
        let col_major = std::mem::take(&mut values[e]);
        let mut row_major = vec![0.0; nloc * k];
        for c in 0..k {
            for r in 0..nloc {
                row_major[r * k + c] = col_major[c * nloc + r];
            }
        }
        values[e] = row_major;
    }
    Ok(DefectBlocks { columns, values })
}

/// `DᵀKD` where `K` is the element mass (`gradient = false`) or stiffness
/// matrix.
fn defect_form(space: &DgSpace<'_>, blocks: &DefectBlocks, gradient: bool) -> DMatrix<f64> {
    let n = space.num_dofs();
    let nloc = space.dofs_per_element();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for e in 0..space.mesh().num_elements() {
        let k = element_matrix(space, e, gradient);
        let cols = &blocks.columns[e];
        let d = DMatrix::from_row_slice(nloc, cols.len(), &blocks.values[e]);
        let local = d.transpose() * k * &d;
        for (a_i, &gi) in cols.iter().enumerate() {
            for (a_j, &gj) in cols.iter().enumerate() {
                a[(gi, gj)] += local[(a_i, a_j)];
            }
        }
    }
    a
}

/// `B^{+1/2}` restricted to the range of `B`, as columns `v_k / √λ_k`.
fn range_whitening(b: DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows();
    let eig = SymmetricEigen::new(b);
    let lmax = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > NULL_TOLERANCE * lmax).collect();
    let mut q = DMatrix::<f64>::zeros(n, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        let s = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..n {
            q[(r, k)] = eig.eigenvectors[(r, i)] * s;
        }
    }
    q
}

fn largest_quotient(a: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let reduced = q.transpose() * a * q;
    SymmetricEigen::new(reduced).eigenvalues.max()
}

/// Supremum of both Oswald ratios over all `v` in the broken space of
/// degree `degree` on `mesh`.
pub fn oswald_supremum(mesh: &Mesh, degree: usize) -> Result<OswaldMeasurement> {
    let space = DgSpace::new(mesh, degree);
    let blocks = defect_blocks(&space)?;
    let p2 = (degree * degree) as f64;
    let l2_form = defect_form(&space, &blocks, false);
    let grad_form = defect_form(&space, &blocks, true);
    let hs: Vec<f64> = mesh.faces.iter().map(|f| f.h).collect();
    let h0 = hs[0];
    let uniform = hs.iter().all(|h| ((h - h0) / h0).abs() < 1e-12);
    let q_l2 = range_whitening(jump_form(&space, |h| h / p2));
    let l2 = largest_quotient(&l2_form, &q_l2);
    let gradient = if uniform {
        // the two jump forms differ by the constant factor p⁴/h²
        largest_quotient(&grad_form, &q_l2) * h0 * h0 / (p2 * p2)
    } else {
        largest_quotient(&grad_form, &range_whitening(jump_form(&space, |h| p2 / h)))
    };
    Ok(OswaldMeasurement {
        degree,
        elements: mesh.num_elements(),
        l2,
        gradient,
    })
}

/// The meshes and degrees on which the Oswald constants are measured: the
/// unit square refined once, twice and three times, with `p = 1, …, 4`.
pub fn reference_cases() -> Result<Vec<(Mesh, usize)>> {
    let mut cases = Vec::new();
    let mut mesh = build_structured_mesh(Rectangle::UNIT_SQUARE, 1, 1)?;
    for _ in 0..3 {
        mesh = refine_uniform(&mesh)?;
        for p in 1..=4 {
            cases.push((mesh.clone(), p));
        }
    }
    Ok(cases)
}

/// Exact Oswald constants on all [`reference_cases`], in their order.
pub fn measure_reference_set() -> Result<Vec<OswaldMeasurement>> {
    let cases = reference_cases()?;
    // largest problems first so the parallel map finishes early
    let mut order: Vec<usize> = (0..cases.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(cases[i].0.num_elements() * cases[i].1 * cases[i].1));
    let mut done: Vec<(usize, OswaldMeasurement)> = order
        .into_par_iter()
        .map(|i| oswald_supremum(&cases[i].0, cases[i].1).map(|m| (i, m)))
        .collect::<Result<_>>()?;
    done.sort_by_key(|(i, _)| *i);
    Ok(done.into_iter().map(|(_, m)| m).collect())
}

/// `C3` from [`measure_reference_set`].
pub fn measured_c3() -> Result<f64> {
    Ok(c3_from_measurements(&measure_reference_set()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qpdg_core::estimator::measure_oswald;

    #[test]
    fn supremum_dominates_random_samples() {
        let mesh = build_structured_mesh(Rectangle::UNIT_SQUARE, 3, 3).unwrap();
        for p in 1..=2 {
            let sup = oswald_supremum(&mesh, p).unwrap();
            let sampled = measure_oswald(&mesh, p, 40, 7).unwrap();
            assert!(sampled.l2 <= sup.l2 * (1.0 + 1e-8), "{sampled:?} {sup:?}");
            assert!(sampled.gradient <= sup.gradient * (1.0 + 1e-8));
            assert!(sampled.l2 > 0.2 * sup.l2);
        }
    }

    #[test]
    fn uniform_shortcut_matches_direct_computation() {
        let mesh = build_structured_mesh(Rectangle::UNIT_SQUARE, 2, 2).unwrap();
        let space = DgSpace::new(&mesh, 2);
        let blocks = defect_blocks(&space).unwrap();
        let grad = defect_form(&space, &blocks, true);
        let direct = largest_quotient(&grad, &range_whitening(jump_form(&space, |h| 4.0 / h)));
        let sup = oswald_supremum(&mesh, 2).unwrap();
        assert!((direct - sup.gradient).abs() < 1e-8 * direct);
    }

    #[test]
    fn defect_blocks_reproduce_the_operator() {
        let mesh = build_structured_mesh(Rectangle::UNIT_SQUARE, 2, 3).unwrap();
        let space = DgSpace::new(&mesh, 2);
        let blocks = defect_blocks(&space).unwrap();
        let n = space.num_dofs();
        let nloc = space.dofs_per_element();
        let coeffs: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 5.0).collect();
        let v = DgFunction::from_coeffs(&space, coeffs.clone()).unwrap();
        let conv = NodalConversion::new(2).unwrap();
        let numbering = NodeNumbering::new(&mesh, 2);
        let d = v.add_scaled(&oswald_with(&space, &conv, &numbering, &v), -1.0);
        for e in 0..mesh.num_elements() {
            let cols = &blocks.columns[e];
            for r in 0..nloc {
                let s: f64 = cols
                    .iter()
                    .enumerate()
                    .map(|(c, &j)| blocks.values[e][r * cols.len() + c] * coeffs[j])
                    .sum();
                assert!((s - d.local(e)[r]).abs() < 1e-12);
            }
        }
    }
}
