//! Gauss-Lobatto nodal representation, global node numbering and the
//! Oswald averaging operator onto the conforming subspace with zero
//! boundary values.

use alloc::vec;
use alloc::vec::Vec;

use super::basis::legendre_table;
use super::quadrature::gauss_lobatto;
use super::space::{DgFunction, DgSpace, FaceWeight};
use crate::linalg::DenseMatrix;
use crate::mesh::Mesh;
use crate::Result;

/// Conversion between Legendre coefficients and values at the tensor
/// Gauss-Lobatto nodes (node `(a, b)` has index `b * (p + 1) + a`).
#[derive(Debug, Clone)]
pub struct NodalConversion {
    degree: usize,
    nodes: Vec<f64>,
    /// `V[a][i] = P_i(x_a)`
    vandermonde: DenseMatrix,
    inverse: DenseMatrix,
}

impl NodalConversion {
    pub fn new(degree: usize) -> Result<Self> {
        let nodes = gauss_lobatto(degree).points;
        let n = degree + 1;
        let mut v = DenseMatrix::zeros(n);
        for (a, &x) in nodes.iter().enumerate() {
            let (p, _, _) = legendre_table(degree, x);
            for i in 0..n {
                v[(a, i)] = p[i];
            }
        }
        let inverse = v.inverse()?;
        Ok(Self {
            degree,
            nodes,
            vandermonde: v,
            inverse,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn apply(&self, m: &DenseMatrix, input: &[f64]) -> Vec<f64> {
        let n = self.degree + 1;
        // along ξ (first index), then along η
        let mut tmp = vec![0.0; n * n];
        for j in 0..n {
            for a in 0..n {
                tmp[j * n + a] = (0..n).map(|i| m[(a, i)] * input[j * n + i]).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for b in 0..n {
            for a in 0..n {
                out[b * n + a] = (0..n).map(|j| m[(b, j)] * tmp[j * n + a]).sum();
            }
        }
        out
    }

    pub fn modal_to_nodal(&self, modal: &[f64]) -> Vec<f64> {
        self.apply(&self.vandermonde, modal)
    }

    pub fn nodal_to_modal(&self, nodal: &[f64]) -> Vec<f64> {
        self.apply(&self.inverse, nodal)
    }

    /// Column `node` of the nodal-to-modal map: the Legendre coefficients of
    /// the Lagrange basis function attached to `node`.
    pub fn lagrange_coefficients(&self, node: usize) -> Vec<f64> {
        let n = (self.degree + 1) * (self.degree + 1);
        let mut e = vec![0.0; n];
        e[node] = 1.0;
        self.nodal_to_modal(&e)
    }
}

/// Global numbering of tensor Gauss-Lobatto nodes; coincident nodes of
/// neighboring elements share one id.
#[derive(Debug, Clone)]
pub struct NodeNumbering {
    degree: usize,
    global: Vec<usize>,
    num_nodes: usize,
    on_boundary: Vec<bool>,
}

impl NodeNumbering {
    pub fn new(mesh: &Mesh, degree: usize) -> Self {
        assert!(degree >= 1);
        let p = degree;
        let n = p + 1;
        let nv = mesh.vertices.len();
        let nf = mesh.faces.len();
        let edge_base = nv;
        let interior_base = nv + nf * (p - 1);
        let num_nodes = interior_base + mesh.num_elements() * (p - 1) * (p - 1);
        let mut global = vec![0usize; mesh.num_elements() * n * n];
        for (e, el) in mesh.elements.iter().enumerate() {
            let faces = mesh.element_faces[e];
            let edge_node = |lf: usize, m: usize| -> usize {
                let f = faces[lf];
                let face = &mesh.faces[f];
                let reversed = if face.plus.element == e && face.plus.local_face == lf {
                    face.plus.reversed
                } else {
                    face.minus.expect("interior face").reversed
                };
                let idx = if reversed { p - m } else { m };
                edge_base + f * (p - 1) + (idx - 1)
            };
            for b in 0..n {
                for a in 0..n {
                    let id = match (a, b) {
                        (0, 0) => el[0],
                        (a, 0) if a == p => el[1],
                        (a, b) if a == p && b == p => el[2],
                        (0, b) if b == p => el[3],
                        (a, 0) => edge_node(0, a),
                        (a, b) if b == p => edge_node(2, a),
                        (a, b) if a == p => edge_node(1, b),
                        (0, b) => edge_node(3, b),
                        (a, b) => interior_base + e * (p - 1) * (p - 1) + (b - 1) * (p - 1) + (a - 1),
                    };
                    global[e * n * n + b * n + a] = id;
                }
            }
        }
        let mut on_boundary = vec![false; num_nodes];
        for &f in &mesh.boundary_faces {
            let face = &mesh.faces[f];
            let (e, lf) = (face.plus.element, face.plus.local_face);
            for m in 0..n {
                let (a, b) = match lf {
                    0 => (m, 0),
                    1 => (p, m),
                    2 => (m, p),
                    _ => (0, m),
                };
                on_boundary[global[e * n * n + b * n + a]] = true;
            }
        }
        Self {
            degree,
            global,
            num_nodes,
            on_boundary,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Global ids of the local nodes of element `e`.
    pub fn element_nodes(&self, e: usize) -> &[usize] {
        let n = (self.degree + 1) * (self.degree + 1);
        &self.global[e * n..(e + 1) * n]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.on_boundary[node]
    }
}

/// Oswald averaging: values at coincident Gauss-Lobatto nodes are replaced
/// by their mean and boundary nodes are set to zero. The result lies in the
/// conforming subspace with homogeneous boundary values.
pub fn oswald_interpolate(space: &DgSpace<'_>, v: &DgFunction) -> Result<DgFunction> {
    let conv = NodalConversion::new(space.degree())?;
    let numbering = NodeNumbering::new(space.mesh(), space.degree());
    Ok(oswald_with(space, &conv, &numbering, v))
}

pub fn oswald_with(
    space: &DgSpace<'_>,
    conv: &NodalConversion,
    numbering: &NodeNumbering,
    v: &DgFunction,
) -> DgFunction {
    let ne = space.mesh().num_elements();
    let mut sum = vec![0.0; numbering.num_nodes()];
    let mut count = vec![0u32; numbering.num_nodes()];
    for e in 0..ne {
        let nodal = conv.modal_to_nodal(v.local(e));
        for (val, &g) in nodal.iter().zip(numbering.element_nodes(e)) {
            sum[g] += val;
            count[g] += 1;
        }
    }
    let avg: Vec<f64> = (0..numbering.num_nodes())
        .map(|g| {
            if numbering.is_boundary(g) {
                0.0
            } else {
                sum[g] / count[g] as f64
            }
        })
        .collect();
    let mut coeffs = Vec::with_capacity(space.num_dofs());
    for e in 0..ne {
        let nodal: Vec<f64> = numbering.element_nodes(e).iter().map(|&g| avg[g]).collect();
        coeffs.extend(conv.nodal_to_modal(&nodal));
    }
    DgFunction::from_coeffs(space, coeffs).expect("same space")
}

/// Ratios measuring the Oswald approximation bounds for one function:
/// `Σ_κ‖v − I v‖²_κ / Σ_e (h_e/p²)‖[v]‖²_e` and
/// `Σ_κ‖∇(v − I v)‖²_κ / Σ_e (p²/h_e)‖[v]‖²_e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OswaldRatios {
    pub l2: f64,
    pub gradient: f64,
}

pub fn oswald_ratios(
    space: &DgSpace<'_>,
    conv: &NodalConversion,
    numbering: &NodeNumbering,
    v: &DgFunction,
) -> Option<OswaldRatios> {
    let iv = oswald_with(space, conv, numbering, v);
    let d = v.add_scaled(&iv, -1.0);
    let l2 = space.l2_norm(&d);
    let grad = space.broken_h1_seminorm(&d);
    let jl = space.face_weighted_norm(v, FaceWeight::MeshsizeOverDegreeSquared);
    let jg = space.face_weighted_norm(v, FaceWeight::DegreeSquaredOverMeshsize);
    if jl == 0.0 || jg == 0.0 {
        return None;
    }
    Some(OswaldRatios {
        l2: l2 * l2 / (jl * jl),
        gradient: grad * grad / (jg * jg),
    })
}
