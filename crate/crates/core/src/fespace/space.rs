use alloc::vec;
use alloc::vec::Vec;

use super::basis::{tabulate, PointTable};
use super::quadrature::{gauss_legendre, QuadratureRule};
use crate::linalg::{DenseCholesky, DenseMatrix};
use crate::mesh::{FaceSide, Mesh};
use crate::{dot, Error, Point, Result};

/// Precomputed geometry and basis data of one element at the cell
/// quadrature points. Basis arrays are indexed `q * nloc + k`.
#[derive(Debug, Clone)]
pub struct CellData {
    pub x: Vec<Point>,
    pub jxw: Vec<f64>,
    pub kinv: Vec<[[f64; 2]; 2]>,
    pub phi: Vec<f64>,
    pub grad: Vec<Point>,
}

/// Basis data of one side of a face at the face quadrature points.
#[derive(Debug, Clone)]
pub struct SideData {
    pub element: usize,
    pub phi: Vec<f64>,
    pub grad: Vec<Point>,
}

#[derive(Debug, Clone)]
pub struct FaceData {
    pub x: Vec<Point>,
    /// Quadrature weight times the length element.
    pub wds: Vec<f64>,
    /// Face parameter of each quadrature point.
    pub s: Vec<f64>,
    pub normal: Point,
    pub plus: SideData,
    pub minus: Option<SideData>,
}

/// The broken space of mapped tensor-product polynomials of degree
/// `degree` in each reference variable.
#[derive(Debug, Clone)]
pub struct DgSpace<'m> {
    mesh: &'m Mesh,
    degree: usize,
    nloc: usize,
    rule: QuadratureRule,
    ref_points: Vec<(Point, f64)>,
    ref_tables: Vec<PointTable>,
    cells: Vec<CellData>,
    faces: Vec<FaceData>,
    mass: Vec<DenseCholesky>,
}

/// A member of a [`DgSpace`], stored as Legendre coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct DgFunction {
    degree: usize,
    coeffs: Vec<f64>,
}

impl DgFunction {
    pub fn zeros(space: &DgSpace<'_>) -> Self {
        Self {
            degree: space.degree,
            coeffs: vec![0.0; space.num_dofs()],
        }
    }

    pub fn from_coeffs(space: &DgSpace<'_>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.num_dofs() {
            return Err(Error::DimensionMismatch {
                expected: space.num_dofs(),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            degree: space.degree,
            coeffs,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn local(&self, e: usize) -> &[f64] {
        let n = (self.degree + 1) * (self.degree + 1);
        &self.coeffs[e * n..(e + 1) * n]
    }

    /// `self + a * other`
    pub fn add_scaled(&self, other: &DgFunction, a: f64) -> DgFunction {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        DgFunction {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + a * y).collect(),
        }
    }

    pub fn scaled(&self, a: f64) -> DgFunction {
        DgFunction {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|x| a * x).collect(),
        }
    }

    /// Re-expresses the function in a space of degree `degree >= self.degree()`
    /// (the Legendre basis is hierarchical).
    pub fn elevate(&self, degree: usize) -> DgFunction {
        assert!(degree >= self.degree);
        let (n0, n1) = (self.degree + 1, degree + 1);
        let ne = self.coeffs.len() / (n0 * n0);
        let mut coeffs = vec![0.0; ne * n1 * n1];
        for e in 0..ne {
            for j in 0..n0 {
                for i in 0..n0 {
                    coeffs[e * n1 * n1 + j * n1 + i] = self.coeffs[e * n0 * n0 + j * n0 + i];
                }
            }
        }
        DgFunction { degree, coeffs }
    }
}

/// Trace data of a function on one face.
#[derive(Debug, Clone)]
pub struct FaceTrace {
    pub normal: Point,
    pub plus_values: Vec<f64>,
    pub plus_grads: Vec<Point>,
    /// Empty on boundary faces.
    pub minus_values: Vec<f64>,
    pub minus_grads: Vec<Point>,
}

impl FaceTrace {
    pub fn is_boundary(&self) -> bool {
        self.minus_values.is_empty()
    }

    /// `[u] = u⁺n⁺ + u⁻n⁻` (`u⁺n⁺` on the boundary).
    pub fn jump(&self, q: usize) -> Point {
        scalar_jump(self.plus_values[q], self.minus_values.get(q).copied(), self.normal)
    }

    /// `{u}` (`u⁺` on the boundary).
    pub fn average(&self, q: usize) -> f64 {
        match self.minus_values.get(q) {
            Some(m) => 0.5 * (self.plus_values[q] + m),
            None => self.plus_values[q],
        }
    }

    /// `{∇u}` (`∇u⁺` on the boundary).
    pub fn average_grad(&self, q: usize) -> Point {
        vector_average(self.plus_grads[q], self.minus_grads.get(q).copied())
    }

    /// `[∇u] = ∇u⁺·n⁺ + ∇u⁻·n⁻`.
    pub fn grad_jump(&self, q: usize) -> f64 {
        vector_jump(self.plus_grads[q], self.minus_grads.get(q).copied(), self.normal)
    }
}

/// `[q]` for scalar traces; `minus = None` on boundary faces.
#[inline]
pub fn scalar_jump(plus: f64, minus: Option<f64>, n: Point) -> Point {
    let d = plus - minus.unwrap_or(0.0);
    [d * n[0], d * n[1]]
}

/// `[φ]` for vector traces.
#[inline]
pub fn vector_jump(plus: Point, minus: Option<Point>, n: Point) -> f64 {
    let m = minus.unwrap_or([0.0, 0.0]);
    (plus[0] - m[0]) * n[0] + (plus[1] - m[1]) * n[1]
}

/// `{φ}` for vector traces.
#[inline]
pub fn vector_average(plus: Point, minus: Option<Point>) -> Point {
    match minus {
        Some(m) => [0.5 * (plus[0] + m[0]), 0.5 * (plus[1] + m[1])],
        None => plus,
    }
}

/// Interior penalty `σ = C_σ p² / h_e`.
#[inline]
pub fn penalty(c_sigma: f64, degree: usize, h_e: f64) -> f64 {
    c_sigma * (degree * degree) as f64 / h_e
}

/// Face weights `w_e` for weighted jump norms `(Σ_e w_e ‖[v]‖²_e)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceWeight {
    /// `σ = C_σ p² / h_e`
    Penalty {
        c_sigma: f64,
    },
    /// `h_e / p²`
    MeshsizeOverDegreeSquared,
    /// `p² / h_e`
    DegreeSquaredOverMeshsize,
    Constant(f64),
}

impl FaceWeight {
    pub fn value(&self, degree: usize, h_e: f64) -> f64 {
        let p2 = (degree * degree) as f64;
        match *self {
            FaceWeight::Penalty { c_sigma } => penalty(c_sigma, degree, h_e),
            FaceWeight::MeshsizeOverDegreeSquared => h_e / p2,
            FaceWeight::DegreeSquaredOverMeshsize => p2 / h_e,
            FaceWeight::Constant(c) => c,
        }
    }
}

#[inline]
fn physical_grad(kinv: &[[f64; 2]; 2], g: Point) -> Point {
    [
        kinv[0][0] * g[0] + kinv[1][0] * g[1],
        kinv[0][1] * g[0] + kinv[1][1] * g[1],
    ]
}

impl<'m> DgSpace<'m> {
    /// Space of degree `degree` with the default `degree + 3` point rules.
    pub fn new(mesh: &'m Mesh, degree: usize) -> Self {
        Self::with_quadrature(mesh, degree, degree + 3)
    }

    pub fn with_quadrature(mesh: &'m Mesh, degree: usize, points: usize) -> Self {
        let nloc = (degree + 1) * (degree + 1);
        let rule = gauss_legendre(points);
        let ref_points = rule.tensor_points();
        let ref_tables: Vec<PointTable> = ref_points.iter().map(|(r, _)| tabulate(degree, *r)).collect();
        let nq = ref_points.len();
        let mut cells = Vec::with_capacity(mesh.num_elements());
        let mut mass = Vec::with_capacity(mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let map = mesh.element_map(e);
            let mut cell = CellData {
                x: Vec::with_capacity(nq),
                jxw: Vec::with_capacity(nq),
                kinv: Vec::with_capacity(nq),
                phi: Vec::with_capacity(nq * nloc),
                grad: Vec::with_capacity(nq * nloc),
            };
            for ((r, w), tab) in ref_points.iter().zip(&ref_tables) {
                let (kinv, det) = map.inverse_jacobian(*r);
                cell.x.push(map.map(*r));
                cell.jxw.push(w * det);
                cell.kinv.push(kinv);
                cell.phi.extend_from_slice(&tab.values);
                cell.grad.extend(tab.grads.iter().map(|g| physical_grad(&kinv, *g)));
            }
            let mut m = DenseMatrix::zeros(nloc);
            for q in 0..nq {
                let phi = &cell.phi[q * nloc..(q + 1) * nloc];
                for a in 0..nloc {
                    for b in 0..nloc {
                        m[(a, b)] += cell.jxw[q] * phi[a] * phi[b];
                    }
                }
            }
            mass.push(DenseCholesky::factor(&m).expect("element mass matrix must be positive definite"));
            cells.push(cell);
        }
        let side_data = |side: &FaceSide| -> SideData {
            let map = mesh.element_map(side.element);
            let mut phi = Vec::with_capacity(rule.len() * nloc);
            let mut grad = Vec::with_capacity(rule.len() * nloc);
            for &s in &rule.points {
                let r = side.reference_point(s);
                let (kinv, _) = map.inverse_jacobian(r);
                let tab = tabulate(degree, r);
                phi.extend_from_slice(&tab.values);
                grad.extend(tab.grads.iter().map(|g| physical_grad(&kinv, *g)));
            }
            SideData {
                element: side.element,
                phi,
                grad,
            }
        };
        let faces = mesh
            .faces
            .iter()
            .map(|face| {
                let map = mesh.element_map(face.plus.element);
                FaceData {
                    x: rule
                        .points
                        .iter()
                        .map(|&s| map.map(face.plus.reference_point(s)))
                        .collect(),
                    wds: rule.weights.iter().map(|w| 0.5 * w * face.length).collect(),
                    s: rule.points.clone(),
                    normal: face.normal,
                    plus: side_data(&face.plus),
                    minus: face.minus.as_ref().map(side_data),
                }
            })
            .collect();
        Self {
            mesh,
            degree,
            nloc,
            rule,
            ref_points,
            ref_tables,
            cells,
            faces,
            mass,
        }
    }

    /// The degree `p - 1` space on the same mesh and quadrature.
    pub fn lower(&self) -> Result<DgSpace<'m>> {
        if self.degree == 0 {
            return Err(Error::InvalidParameter {
                name: "degree",
                reason: "lower space needs p >= 1",
            });
        }
        Ok(Self::with_quadrature(self.mesh, self.degree - 1, self.rule.len()))
    }

    pub fn mesh(&self) -> &'m Mesh {
        self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dofs_per_element(&self) -> usize {
        self.nloc
    }

    pub fn num_dofs(&self) -> usize {
        self.nloc * self.mesh.num_elements()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn reference_points(&self) -> &[(Point, f64)] {
        &self.ref_points
    }

    pub fn reference_tables(&self) -> &[PointTable] {
        &self.ref_tables
    }

    pub fn cell(&self, e: usize) -> &CellData {
        &self.cells[e]
    }

    pub fn face(&self, f: usize) -> &FaceData {
        &self.faces[f]
    }

    #[inline]
    pub fn dof(&self, e: usize, k: usize) -> usize {
        e * self.nloc + k
    }

    fn check(&self, u: &DgFunction) {
        assert_eq!(u.degree, self.degree, "function degree does not match space");
        assert_eq!(
            u.coeffs.len(),
            self.num_dofs(),
            "coefficient length does not match space"
        );
    }

    /// Values and physical gradients at the cell quadrature points.
    pub fn cell_values(&self, u: &DgFunction, e: usize) -> (Vec<f64>, Vec<Point>) {
        self.check(u);
        let c = u.local(e);
        let cell = &self.cells[e];
        let nq = cell.x.len();
        let mut vals = Vec::with_capacity(nq);
        let mut grads = Vec::with_capacity(nq);
        for q in 0..nq {
            let (mut v, mut g) = (0.0, [0.0; 2]);
            for k in 0..self.nloc {
                let i = q * self.nloc + k;
                v += c[k] * cell.phi[i];
                g[0] += c[k] * cell.grad[i][0];
                g[1] += c[k] * cell.grad[i][1];
            }
            vals.push(v);
            grads.push(g);
        }
        (vals, grads)
    }

    /// Physical Hessians `[[u_xx, u_xy], [u_xy, u_yy]]` at the cell
    /// quadrature points (exact for bilinear maps).
    pub fn cell_hessians(&self, u: &DgFunction, e: usize) -> Vec<[[f64; 2]; 2]> {
        self.check(u);
        let c = u.local(e);
        let cell = &self.cells[e];
        let mixed = self.mesh.element_map(e).mixed_second_derivative();
        let mut out = Vec::with_capacity(cell.x.len());
        for (q, tab) in self.ref_tables.iter().enumerate() {
            let mut h = [0.0; 3];
            let mut g = [0.0; 2];
            for k in 0..self.nloc {
                h[0] += c[k] * tab.hessians[k][0];
                h[1] += c[k] * tab.hessians[k][1];
                h[2] += c[k] * tab.hessians[k][2];
                g[0] += c[k] * cell.grad[q * self.nloc + k][0];
                g[1] += c[k] * cell.grad[q * self.nloc + k][1];
            }
            // J^T H J = Ĥ - Σ_k u_{x_k} ∂²x_k/∂ξ_a∂ξ_b, only the mixed term is nonzero
            let corr = dot(g, mixed);
            let hr = [[h[0], h[1] - corr], [h[1] - corr, h[2]]];
            let k = cell.kinv[q];
            let mut hp = [[0.0; 2]; 2];
            for a in 0..2 {
                for c2 in 0..2 {
                    let mut s = 0.0;
                    for b in 0..2 {
                        for d in 0..2 {
                            s += k[b][a] * hr[b][d] * k[d][c2];
                        }
                    }
                    hp[a][c2] = s;
                }
            }
            out.push(hp);
        }
        out
    }

    /// Values and physical gradients at arbitrary reference points of `e`.
    pub fn evaluate(&self, u: &DgFunction, e: usize, points: &[Point]) -> Result<Vec<(f64, Point)>> {
        if e >= self.mesh.num_elements() {
            return Err(Error::ElementOutOfRange {
                index: e,
                count: self.mesh.num_elements(),
            });
        }
        self.check(u);
        let c = u.local(e);
        let map = self.mesh.element_map(e);
        Ok(points
            .iter()
            .map(|&r| {
                let tab = tabulate(self.degree, r);
                let (kinv, _) = map.inverse_jacobian(r);
                let mut v = 0.0;
                let mut g = [0.0; 2];
                for k in 0..self.nloc {
                    v += c[k] * tab.values[k];
                    g[0] += c[k] * tab.grads[k][0];
                    g[1] += c[k] * tab.grads[k][1];
                }
                (v, physical_grad(&kinv, g))
            })
            .collect())
    }

    fn side_values(&self, u: &DgFunction, side: &SideData) -> (Vec<f64>, Vec<Point>) {
        let c = u.local(side.element);
        let nq = self.rule.len();
        let mut vals = Vec::with_capacity(nq);
        let mut grads = Vec::with_capacity(nq);
        for q in 0..nq {
            let (mut v, mut g) = (0.0, [0.0; 2]);
            for k in 0..self.nloc {
                let i = q * self.nloc + k;
                v += c[k] * side.phi[i];
                g[0] += c[k] * side.grad[i][0];
                g[1] += c[k] * side.grad[i][1];
            }
            vals.push(v);
            grads.push(g);
        }
        (vals, grads)
    }

    pub fn face_trace(&self, u: &DgFunction, f: usize) -> FaceTrace {
        self.check(u);
        let face = &self.faces[f];
        let (plus_values, plus_grads) = self.side_values(u, &face.plus);
        let (minus_values, minus_grads) = match &face.minus {
            Some(m) => self.side_values(u, m),
            None => (Vec::new(), Vec::new()),
        };
        FaceTrace {
            normal: face.normal,
            plus_values,
            plus_grads,
            minus_values,
            minus_grads,
        }
    }

    /// Solves the element mass system in place.
    pub fn mass_solve(&self, e: usize, rhs: &mut [f64]) {
        self.mass[e].solve_in_place(rhs);
    }

    /// Local coefficients of the L² projection of data given at the cell
    /// quadrature points of `e`.
    pub fn project_cell_values(&self, e: usize, values: &[f64]) -> Vec<f64> {
        let cell = &self.cells[e];
        let mut b = vec![0.0; self.nloc];
        for (q, v) in values.iter().enumerate() {
            let w = cell.jxw[q] * v;
            for k in 0..self.nloc {
                b[k] += w * cell.phi[q * self.nloc + k];
            }
        }
        self.mass[e].solve_in_place(&mut b);
        b
    }

    /// Orthogonal L² projection onto the space.
    pub fn l2_project(&self, f: impl Fn(Point) -> f64) -> DgFunction {
        let mut coeffs = Vec::with_capacity(self.num_dofs());
        for e in 0..self.mesh.num_elements() {
            let vals: Vec<f64> = self.cells[e].x.iter().map(|&x| f(x)).collect();
            coeffs.extend(self.project_cell_values(e, &vals));
        }
        DgFunction {
            degree: self.degree,
            coeffs,
        }
    }

    /// `‖u‖` over the domain.
    pub fn l2_norm(&self, u: &DgFunction) -> f64 {
        libm::sqrt(self.integrate(|e| {
            let (v, _) = self.cell_values(u, e);
            v.iter().map(|x| x * x).collect()
        }))
    }

    /// `(Σ_κ ‖∇u‖²_κ)^{1/2}`
    pub fn broken_h1_seminorm(&self, u: &DgFunction) -> f64 {
        libm::sqrt(self.integrate(|e| {
            let (_, g) = self.cell_values(u, e);
            g.iter().map(|g| dot(*g, *g)).collect()
        }))
    }

    /// Sum over elements of `∫_κ values(e)` with values at the quadrature points.
    pub fn integrate(&self, values: impl Fn(usize) -> Vec<f64>) -> f64 {
        (0..self.mesh.num_elements())
            .map(|e| {
                values(e)
                    .iter()
                    .zip(&self.cells[e].jxw)
                    .map(|(v, w)| v * w)
                    .sum::<f64>()
            })
            .sum()
    }

    /// `‖[u]‖²_e` for one face.
    pub fn face_jump_sq(&self, u: &DgFunction, f: usize) -> f64 {
        let tr = self.face_trace(u, f);
        self.faces[f]
            .wds
            .iter()
            .enumerate()
            .map(|(q, w)| {
                let j = tr.jump(q);
                w * dot(j, j)
            })
            .sum()
    }

    /// `(Σ_e w_e ‖[u]‖²_e)^{1/2}` over all faces, boundary included.
    pub fn face_weighted_norm(&self, u: &DgFunction, weight: FaceWeight) -> f64 {
        let sum: f64 = (0..self.mesh.faces.len())
            .map(|f| weight.value(self.degree, self.mesh.faces[f].h) * self.face_jump_sq(u, f))
            .sum();
        libm::sqrt(sum)
    }

    /// `⫴u⫴ = (Σ_κ ‖∇u‖²_κ + Σ_e σ‖[u]‖²_e)^{1/2}`.
    pub fn energy_norm(&self, u: &DgFunction, c_sigma: f64) -> f64 {
        let g = self.broken_h1_seminorm(u);
        let j = self.face_weighted_norm(u, FaceWeight::Penalty { c_sigma });
        libm::sqrt(g * g + j * j)
    }
}

/// The L² projection onto the degree `p - 1` space on the same mesh.
pub fn l2_project_lower<'m>(space: &DgSpace<'m>, f: impl Fn(Point) -> f64) -> Result<(DgSpace<'m>, DgFunction)> {
    let lower = space.lower()?;
    let pf = lower.l2_project(f);
    Ok((lower, pf))
}

/// 1D L² projection of face data (given at the face Gauss points with
/// parameters `s` and weights `wds`) onto polynomials of degree `<= degree`
/// in the face parameter. Returns the projected values at the same points.
pub fn face_project(s: &[f64], wds: &[f64], values: &[f64], degree: usize) -> Vec<f64> {
    let tables: Vec<Vec<f64>> = s.iter().map(|&t| super::basis::legendre_table(degree, t).0).collect();
    let len: f64 = wds.iter().sum();
    let coeffs: Vec<f64> = (0..=degree)
        .map(|m| {
            let num: f64 = (0..s.len()).map(|q| wds[q] * values[q] * tables[q][m]).sum();
            // ∫ P_m² ds = len / (2m + 1) for a straight face
            num * (2.0 * m as f64 + 1.0) / len
        })
        .collect();
    tables
        .iter()
        .map(|t| coeffs.iter().zip(t).map(|(c, p)| c * p).sum())
        .collect()
}

impl DgSpace<'_> {
    /// `⫴u − w⫴` for `w ∈ H¹₀` given through its gradient: the broken gradient
    /// error plus the σ-weighted jumps of `u` (since `[w] = 0`).
    pub fn energy_distance(&self, u: Option<&DgFunction>, grad_w: impl Fn(Point) -> Point, c_sigma: f64) -> f64 {
        let vol = self.integrate(|e| {
            let grads = match u {
                Some(u) => self.cell_values(u, e).1,
                None => vec![[0.0; 2]; self.cells[e].x.len()],
            };
            self.cells[e]
                .x
                .iter()
                .zip(grads)
                .map(|(&x, g)| {
                    let gw = grad_w(x);
                    let d = [g[0] - gw[0], g[1] - gw[1]];
                    dot(d, d)
                })
                .collect()
        });
        let jumps = match u {
            Some(u) => {
                let j = self.face_weighted_norm(u, FaceWeight::Penalty { c_sigma });
                j * j
            }
            None => 0.0,
        };
        libm::sqrt(vol + jumps)
    }
}
