//! Dense matrix forms of the broken space, used by the eigenvalue based
//! suites on small meshes.

use nalgebra::{DMatrix, SymmetricEigen};
use qpdg_core::fespace::DgSpace;
use qpdg_core::linalg::CsrMatrix;

/// Element mass (`gradient = false`) or stiffness matrix of element `e`.
pub fn element_matrix(space: &DgSpace<'_>, e: usize, gradient: bool) -> DMatrix<f64> {
    let nloc = space.dofs_per_element();
    let cell = space.cell(e);
    let mut k = DMatrix::<f64>::zeros(nloc, nloc);
    for q in 0..cell.x.len() {
        for i in 0..nloc {
            for j in 0..nloc {
                let v = if gradient {
                    let gi = cell.grad[q * nloc + i];
                    let gj = cell.grad[q * nloc + j];
                    gi[0] * gj[0] + gi[1] * gj[1]
                } else {
                    cell.phi[q * nloc + i] * cell.phi[q * nloc + j]
                };
                k[(i, j)] += cell.jxw[q] * v;
            }
        }
    }
    k
}

/// Block diagonal assembly of [`element_matrix`] over all elements.
pub fn broken_form(space: &DgSpace<'_>, gradient: bool) -> DMatrix<f64> {
    let n = space.num_dofs();
    let nloc = space.dofs_per_element();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for e in 0..space.mesh().num_elements() {
        let k = element_matrix(space, e, gradient);
        a.view_mut((e * nloc, e * nloc), (nloc, nloc)).copy_from(&k);
    }
    a
}

/// `Σ_e w(h_e) ‖[v]‖²_e` over all faces as a matrix.
pub fn jump_form(space: &DgSpace<'_>, weight: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = space.num_dofs();
    let nloc = space.dofs_per_element();
    let mut b = DMatrix::<f64>::zeros(n, n);
    for (f, face) in space.mesh().faces.iter().enumerate() {
        let fd = space.face(f);
        let w = weight(face.h);
        let mut sides = vec![(&fd.plus, 1.0)];
        if let Some(m) = &fd.minus {
            sides.push((m, -1.0));
        }
        for q in 0..fd.x.len() {
            for (sa, ga) in &sides {
                for (sb, gb) in &sides {
                    let c = w * fd.wds[q] * ga * gb;
                    for i in 0..nloc {
                        let pi = c * sa.phi[q * nloc + i];
                        for j in 0..nloc {
                            b[(sa.element * nloc + i, sb.element * nloc + j)] += pi * sb.phi[q * nloc + j];
                        }
                    }
                }
            }
        }
    }
    b
}

pub fn from_csr(a: &CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::<f64>::zeros(a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        for (j, v) in a.row(i) {
            d[(i, j)] += v;
        }
    }
    d
}

/// Smallest `λ` with `A x = λ E x` for symmetric `A` and symmetric positive
/// definite `E`; `None` if `E` is not positive definite.
pub fn min_generalized_eigenvalue(a: &DMatrix<f64>, e: DMatrix<f64>) -> Option<f64> {
    let l = e.cholesky()?.l();
    let y = l.solve_lower_triangular(a)?;
    let s = l.solve_lower_triangular(&y.transpose())?;
    let sym = (&s + s.transpose()) * 0.5;
    Some(SymmetricEigen::new(sym).eigenvalues.min())
}
