//! The interior penalty semilinear form
//!
//! `B(w, v) = Σ_κ ∫_κ α(w)·∇v + Σ_e ∫_e ( θ a(|h⁻¹[w]|) {∇v}·[w] − {α(w)}·[v] + σ [w]·[v] )`
//!
//! with `α(w) = μ(|∇w|)∇w` and `σ = C_σ p² / h_e`, its residual and Newton
//! Jacobian, the discrete operator `A` defined by `⟨−AZ, V⟩ = B(Z, V)` and the
//! datum `g = −AU + f − Πf` of the elliptic reconstruction.

use alloc::vec;
use alloc::vec::Vec;

use crate::fespace::{penalty, DgFunction, DgSpace, SideData};
use crate::linalg::CsrMatrix;
use crate::mesh::Face;
use crate::problem::{flux, flux_derivative, Nonlinearity};
use crate::{dot, Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationParams {
    theta: i8,
    c_sigma: f64,
    degree: usize,
}

impl DiscretizationParams {
    /// `theta ∈ {−1, 0, 1}` (symmetric, incomplete, nonsymmetric),
    /// `c_sigma > 1`, `degree >= 1`.
    pub fn new(theta: i32, c_sigma: f64, degree: usize) -> Result<Self> {
        if !(-1..=1).contains(&theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: "must be -1, 0 or 1",
            });
        }
        if !(c_sigma > 1.0) || !c_sigma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "c_sigma",
                reason: "must be a finite number greater than 1",
            });
        }
        if degree == 0 {
            return Err(Error::InvalidParameter {
                name: "degree",
                reason: "must be at least 1",
            });
        }
        Ok(Self {
            theta: theta as i8,
            c_sigma,
            degree,
        })
    }

    pub fn theta(&self) -> i32 {
        self.theta as i32
    }

    pub fn c_sigma(&self) -> f64 {
        self.c_sigma
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    fn check(&self, space: &DgSpace<'_>) -> Result<()> {
        if space.degree() != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: space.degree(),
            });
        }
        Ok(())
    }
}

/// `σ_e = C_σ p² / h_e`
pub fn penalty_sigma(face: &Face, params: &DiscretizationParams) -> f64 {
    penalty(params.c_sigma, params.degree, face.h)
}

/// Residual entries `B(U, φ_i) − ⟨f, φ_i⟩` and the Jacobian `∂/∂U_j` of them.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub residual: Vec<f64>,
    pub jacobian: CsrMatrix,
}

/// `⟨f, φ_i⟩` for all basis functions.
pub fn load_vector(space: &DgSpace<'_>, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let nloc = space.dofs_per_element();
    let mut out = vec![0.0; space.num_dofs()];
    for e in 0..space.mesh().num_elements() {
        let cell = space.cell(e);
        for (q, &x) in cell.x.iter().enumerate() {
            let w = cell.jxw[q] * f(x);
            for k in 0..nloc {
                out[e * nloc + k] += w * cell.phi[q * nloc + k];
            }
        }
    }
    out
}

struct Side<'a> {
    data: &'a SideData,
    coeffs: &'a [f64],
    /// `+1` on the plus side, `−1` on the minus side.
    sign: f64,
}

/// Core assembly of `B(w, φ_i)` and optionally of its Jacobian.
pub(crate) fn assemble(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    w: &DgFunction,
    t: f64,
    params: &DiscretizationParams,
    with_jacobian: bool,
) -> Result<(Vec<f64>, Option<CsrMatrix>)> {
    params.check(space)?;
    if w.coeffs().len() != space.num_dofs() || w.degree() != space.degree() {
        return Err(Error::DimensionMismatch {
            expected: space.num_dofs(),
            found: w.coeffs().len(),
        });
    }
    let mesh = space.mesh();
    let nloc = space.dofs_per_element();
    let n = space.num_dofs();
    let theta = params.theta as f64;
    let mut res = vec![0.0; n];
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    if with_jacobian {
        trip.reserve(mesh.num_elements() * nloc * nloc * 5);
    }
    let mut block = vec![0.0; nloc * nloc];

    for e in 0..mesh.num_elements() {
        let cell = space.cell(e);
        let c = w.local(e);
        block.iter_mut().for_each(|b| *b = 0.0);
        for q in 0..cell.x.len() {
            let grads = &cell.grad[q * nloc..(q + 1) * nloc];
            let mut g = [0.0; 2];
            for k in 0..nloc {
                g[0] += c[k] * grads[k][0];
                g[1] += c[k] * grads[k][1];
            }
            let a = flux(nl, t, cell.x[q], g);
            let jw = cell.jxw[q];
            for i in 0..nloc {
                res[e * nloc + i] += jw * dot(a, grads[i]);
            }
            if with_jacobian {
                let d = flux_derivative(nl, t, cell.x[q], g);
                for j in 0..nloc {
                    let dg = [
                        d[0][0] * grads[j][0] + d[0][1] * grads[j][1],
                        d[1][0] * grads[j][0] + d[1][1] * grads[j][1],
                    ];
                    for i in 0..nloc {
                        block[i * nloc + j] += jw * dot(dg, grads[i]);
                    }
                }
            }
        }
        if with_jacobian {
            for i in 0..nloc {
                for j in 0..nloc {
                    trip.push((e * nloc + i, e * nloc + j, block[i * nloc + j]));
                }
            }
        }
    }

    let mut fblock: Vec<f64> = Vec::new();
    for (f, face) in mesh.faces.iter().enumerate() {
        let fd = space.face(f);
        let sigma = penalty_sigma(face, params);
        let normal = fd.normal;
        let mut sides: Vec<Side<'_>> = Vec::with_capacity(2);
        sides.push(Side {
            data: &fd.plus,
            coeffs: w.local(fd.plus.element),
            sign: 1.0,
        });
        if let Some(m) = &fd.minus {
            sides.push(Side {
                data: m,
                coeffs: w.local(m.element),
                sign: -1.0,
            });
        }
        let omega = if sides.len() == 2 { 0.5 } else { 1.0 };
        let ns = sides.len();
        if with_jacobian {
            fblock.clear();
            fblock.resize(ns * ns * nloc * nloc, 0.0);
        }
        for q in 0..fd.x.len() {
            let x = fd.x[q];
            let wq = fd.wds[q];
            // jump of w (scalar, times n gives [w]) and average flux
            let mut jw = 0.0;
            let mut avg = [0.0; 2];
            let mut dflux: [[[f64; 2]; 2]; 2] = [[[0.0; 2]; 2]; 2];
            for (k, side) in sides.iter().enumerate() {
                let phi = &side.data.phi[q * nloc..(q + 1) * nloc];
                let grads = &side.data.grad[q * nloc..(q + 1) * nloc];
                let mut v = 0.0;
                let mut g = [0.0; 2];
                for m in 0..nloc {
                    v += side.coeffs[m] * phi[m];
                    g[0] += side.coeffs[m] * grads[m][0];
                    g[1] += side.coeffs[m] * grads[m][1];
                }
                jw += side.sign * v;
                let a = flux(nl, t, x, g);
                avg[0] += omega * a[0];
                avg[1] += omega * a[1];
                if with_jacobian {
                    dflux[k] = flux_derivative(nl, t, x, g);
                }
            }
            let s = jw.abs() / face.h;
            let mu_jump = if theta != 0.0 { nl.mu(t, x, s) } else { 0.0 };
            let avg_n = dot(avg, normal);
            for side in &sides {
                let phi = &side.data.phi[q * nloc..(q + 1) * nloc];
                let grads = &side.data.grad[q * nloc..(q + 1) * nloc];
                let base = side.data.element * nloc;
                for i in 0..nloc {
                    let jump_i = side.sign * phi[i];
                    let avg_grad_n_i = omega * dot(grads[i], normal);
                    res[base + i] += wq * (theta * mu_jump * avg_grad_n_i * jw - avg_n * jump_i + sigma * jw * jump_i);
                }
            }
            if with_jacobian {
                let theta_coef = if theta != 0.0 {
                    theta * (mu_jump + nl.dmu_ds(t, x, s) * s)
                } else {
                    0.0
                };
                for (l, sl) in sides.iter().enumerate() {
                    let phi_l = &sl.data.phi[q * nloc..(q + 1) * nloc];
                    let grads_l = &sl.data.grad[q * nloc..(q + 1) * nloc];
                    let d = &dflux[l];
                    for j in 0..nloc {
                        let jump_j = sl.sign * phi_l[j];
                        let gj = grads_l[j];
                        let dflux_n = omega
                            * ((d[0][0] * gj[0] + d[0][1] * gj[1]) * normal[0]
                                + (d[1][0] * gj[0] + d[1][1] * gj[1]) * normal[1]);
                        for (k, sk) in sides.iter().enumerate() {
                            let phi_k = &sk.data.phi[q * nloc..(q + 1) * nloc];
                            let grads_k = &sk.data.grad[q * nloc..(q + 1) * nloc];
                            let off = ((k * ns + l) * nloc) * nloc;
                            for i in 0..nloc {
                                let jump_i = sk.sign * phi_k[i];
                                let avg_grad_n_i = omega * dot(grads_k[i], normal);
                                fblock[off + i * nloc + j] += wq
                                    * (theta_coef * avg_grad_n_i * jump_j - dflux_n * jump_i + sigma * jump_j * jump_i);
                            }
                        }
                    }
                }
            }
        }
        if with_jacobian {
            for (k, sk) in sides.iter().enumerate() {
                for (l, sl) in sides.iter().enumerate() {
                    let off = ((k * ns + l) * nloc) * nloc;
                    let (bi, bj) = (sk.data.element * nloc, sl.data.element * nloc);
                    for i in 0..nloc {
                        for j in 0..nloc {
                            trip.push((bi + i, bj + j, fblock[off + i * nloc + j]));
                        }
                    }
                }
            }
        }
    }
    let jac = if with_jacobian {
        Some(CsrMatrix::from_triplets(n, n, trip))
    } else {
        None
    };
    Ok((res, jac))
}

/// `B(w, v)`
pub fn semilinear_form(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    w: &DgFunction,
    v: &DgFunction,
    t: f64,
    params: &DiscretizationParams,
) -> Result<f64> {
    let (r, _) = assemble(space, nl, w, t, params, false)?;
    if v.coeffs().len() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: r.len(),
            found: v.coeffs().len(),
        });
    }
    Ok(r.iter().zip(v.coeffs()).map(|(a, b)| a * b).sum())
}

/// `B(U, φ_i)` for all basis functions.
pub fn form_vector(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    u: &DgFunction,
    t: f64,
    params: &DiscretizationParams,
) -> Result<Vec<f64>> {
    Ok(assemble(space, nl, u, t, params, false)?.0)
}

/// `B(U, φ_i) − ⟨rhs, φ_i⟩`
pub fn assemble_residual(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    u: &DgFunction,
    rhs: &dyn Fn(Point) -> f64,
    t: f64,
    params: &DiscretizationParams,
) -> Result<Vec<f64>> {
    let mut r = form_vector(space, nl, u, t, params)?;
    for (r, l) in r.iter_mut().zip(load_vector(space, rhs)) {
        *r -= l;
    }
    Ok(r)
}

pub fn assemble_jacobian(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    u: &DgFunction,
    t: f64,
    params: &DiscretizationParams,
) -> Result<CsrMatrix> {
    Ok(assemble(space, nl, u, t, params, true)?.1.expect("jacobian requested"))
}

/// Residual against a precomputed load vector together with the Jacobian.
pub fn assemble_system(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    u: &DgFunction,
    load: &[f64],
    t: f64,
    params: &DiscretizationParams,
) -> Result<AssembledSystem> {
    if load.len() != space.num_dofs() {
        return Err(Error::DimensionMismatch {
            expected: space.num_dofs(),
            found: load.len(),
        });
    }
    let (mut residual, jac) = assemble(space, nl, u, t, params, true)?;
    for (r, l) in residual.iter_mut().zip(load) {
        *r -= l;
    }
    Ok(AssembledSystem {
        residual,
        jacobian: jac.expect("jacobian requested"),
    })
}

/// Solves the block diagonal mass system `M x = b` elementwise.
pub fn mass_inverse(space: &DgSpace<'_>, mut b: Vec<f64>) -> DgFunction {
    let nloc = space.dofs_per_element();
    for e in 0..space.mesh().num_elements() {
        space.mass_solve(e, &mut b[e * nloc..(e + 1) * nloc]);
    }
    DgFunction::from_coeffs(space, b).expect("length matches the space")
}

/// The discrete operator `AZ`, defined by `⟨−AZ, V⟩ = B(Z, V)` for all `V`.
pub fn apply_discrete_operator(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    z: &DgFunction,
    t: f64,
    params: &DiscretizationParams,
) -> Result<DgFunction> {
    let b = form_vector(space, nl, z, t, params)?;
    Ok(mass_inverse(space, b).scaled(-1.0))
}

/// The reconstruction datum `g = −AU + f − Πf`, kept as its discrete part
/// `−AU` and the projected source `Πf` so that `g` can be evaluated
/// pointwise once `f` is supplied.
#[derive(Debug, Clone)]
pub struct ReconstructionData {
    pub time: f64,
    pub minus_au: DgFunction,
    pub projected_source: DgFunction,
}

impl ReconstructionData {
    /// `−AU`, which equals `g` when tested against the discrete space.
    pub fn discrete(&self) -> &DgFunction {
        &self.minus_au
    }

    /// `g` at the cell quadrature points of element `e`.
    pub fn cell_values(&self, space: &DgSpace<'_>, e: usize, f: &dyn Fn(Point) -> f64) -> Vec<f64> {
        let (au, _) = space.cell_values(&self.minus_au, e);
        let (pf, _) = space.cell_values(&self.projected_source, e);
        space
            .cell(e)
            .x
            .iter()
            .enumerate()
            .map(|(q, &x)| au[q] + f(x) - pf[q])
            .collect()
    }
}

pub fn reconstruction_data(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    u: &DgFunction,
    f: &dyn Fn(Point) -> f64,
    t: f64,
    params: &DiscretizationParams,
) -> Result<ReconstructionData> {
    let b = form_vector(space, nl, u, t, params)?;
    Ok(ReconstructionData {
        time: t,
        minus_au: mass_inverse(space, b),
        projected_source: space.l2_project(f),
    })
}
