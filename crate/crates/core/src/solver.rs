//! Newton's method for the discrete problems, backward Euler time marching
//! and a conforming fine-space solver approximating the elliptic
//! reconstruction.

use alloc::vec;
use alloc::vec::Vec;

use crate::fespace::{DgFunction, DgSpace, FaceWeight, NodalConversion, NodeNumbering};
use crate::ipdg::{assemble, load_vector, DiscretizationParams, ReconstructionData};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::mesh::{child_to_parent, refine_uniform, Mesh};
use crate::problem::{flux, flux_derivative, Nonlinearity, ProblemSpec};
use crate::{dot, Error, Point, Result};

pub use crate::linalg::solve_linear;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Absolute tolerance on the max-norm of the residual vector.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Maximal number of step halvings in the backtracking line search.
    pub max_halvings: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 30,
            max_halvings: 20,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: "must be positive",
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                reason: "must be at least 1",
            });
        }
        Ok(())
    }
}

/// Iteration count and residual max-norms (initial residual first).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// The block diagonal mass matrix of the space.
pub fn mass_matrix(space: &DgSpace<'_>) -> CsrMatrix {
    let nloc = space.dofs_per_element();
    let mut trip = Vec::with_capacity(space.mesh().num_elements() * nloc * nloc);
    for e in 0..space.mesh().num_elements() {
        let cell = space.cell(e);
        for i in 0..nloc {
            for j in 0..nloc {
                let m: f64 = (0..cell.x.len())
                    .map(|q| cell.jxw[q] * cell.phi[q * nloc + i] * cell.phi[q * nloc + j])
                    .sum();
                trip.push((e * nloc + i, e * nloc + j, m));
            }
        }
    }
    CsrMatrix::from_triplets(space.num_dofs(), space.num_dofs(), trip)
}

/// Implicit mass term `(M U − M U_old) / Δt` of a backward Euler step.
struct MassShift<'a> {
    mass: &'a CsrMatrix,
    inv_dt: f64,
    mass_old: &'a [f64],
}

struct Stepper<'a, 's> {
    space: &'a DgSpace<'s>,
    nl: &'a dyn Nonlinearity,
    t: f64,
    params: &'a DiscretizationParams,
    load: &'a [f64],
    shift: Option<MassShift<'a>>,
}

impl Stepper<'_, '_> {
    fn evaluate(&self, u: &DgFunction, with_jacobian: bool) -> Result<(Vec<f64>, Option<CsrMatrix>)> {
        let (mut r, mut j) = assemble(self.space, self.nl, u, self.t, self.params, with_jacobian)?;
        for (r, l) in r.iter_mut().zip(self.load) {
            *r -= l;
        }
        if let Some(s) = &self.shift {
            let mu = s.mass.mul_vec(u.coeffs());
            for i in 0..r.len() {
                r[i] += s.inv_dt * (mu[i] - s.mass_old[i]);
            }
            j = j.map(|j| j.add_scaled(s.mass, s.inv_dt));
        }
        Ok((r, j))
    }

    fn newton(&self, cfg: &NewtonConfig, initial: DgFunction) -> Result<(DgFunction, NewtonReport)> {
        cfg.validate()?;
        let mut u = initial;
        let mut report = NewtonReport::default();
        let (mut r, _) = self.evaluate(&u, false)?;
        let mut rn = max_norm(&r);
        report.residuals.push(rn);
        while rn > cfg.tolerance {
            if report.iterations == cfg.max_iterations || !rn.is_finite() {
                return Err(Error::NewtonDivergence {
                    iterations: report.iterations,
                    residual: rn,
                });
            }
            let (_, j) = self.evaluate(&u, true)?;
            let neg: Vec<f64> = r.iter().map(|x| -x).collect();
            let delta = solve_linear(&j.expect("jacobian requested"), &neg)?;
            let delta = DgFunction::from_coeffs(self.space, delta)?;
            let mut lambda = 1.0;
            let mut halvings = 0;
            loop {
                let trial = u.add_scaled(&delta, lambda);
                let (rt, _) = self.evaluate(&trial, false)?;
                let tn = max_norm(&rt);
                if tn < rn || halvings == cfg.max_halvings {
                    u = trial;
                    r = rt;
                    rn = tn;
                    break;
                }
                lambda *= 0.5;
                halvings += 1;
            }
            report.iterations += 1;
            report.residuals.push(rn);
        }
        Ok((u, report))
    }
}

/// Solves `B(U, V) = ⟨source, V⟩` for all `V` by damped Newton.
pub fn solve_elliptic(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    source: &dyn Fn(Point) -> f64,
    t: f64,
    params: &DiscretizationParams,
    newton: &NewtonConfig,
    initial: DgFunction,
) -> Result<(DgFunction, NewtonReport)> {
    let load = load_vector(space, source);
    let stepper = Stepper {
        space,
        nl,
        t,
        params,
        load: &load,
        shift: None,
    };
    stepper.newton(newton, initial)
}

/// How the time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    /// `Δt ≤ h^{p+1}` with `h` the largest element diameter.
    MeshPower,
    Fixed(f64),
}

impl DtPolicy {
    /// Number of steps and uniform step size covering `[0, t_final]` with
    /// steps no larger than the requested one.
    pub fn resolve(&self, mesh: &Mesh, degree: usize, t_final: f64) -> Result<(usize, f64)> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_final",
                reason: "must be positive",
            });
        }
        let target = match *self {
            DtPolicy::MeshPower => libm::pow(mesh.max_diameter(), (degree + 1) as f64),
            DtPolicy::Fixed(dt) => dt,
        };
        if !(target > 0.0) || !target.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: "must be positive",
            });
        }
        let n = libm::ceil(t_final / target * (1.0 - 1e-12)).max(1.0) as usize;
        Ok((n, t_final / n as f64))
    }
}

/// Snapshots `U(t_n)` on a strictly increasing grid and the backward
/// differences `(U^{n+1} − U^n) / Δt` standing in for `U_t` on each interval.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub snapshots: Vec<DgFunction>,
    pub derivatives: Vec<DgFunction>,
    pub newton_iterations: Vec<usize>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }
}

/// Backward Euler realization of the semidiscrete scheme, starting from the
/// L² projection of the initial datum.
pub fn march_parabolic(
    spec: &ProblemSpec,
    space: &DgSpace<'_>,
    params: &DiscretizationParams,
    dt: DtPolicy,
    newton: &NewtonConfig,
) -> Result<TimeSeries> {
    if spec.steady {
        return Err(Error::InvalidParameter {
            name: "problem",
            reason: "time marching needs a time dependent problem",
        });
    }
    let (steps, dt) = dt.resolve(space.mesh(), space.degree(), spec.final_time)?;
    let mass = mass_matrix(space);
    let u0 = space.l2_project(|x| (spec.initial)(x));
    let mut series = TimeSeries {
        times: vec![0.0],
        snapshots: vec![u0],
        derivatives: Vec::with_capacity(steps),
        newton_iterations: Vec::with_capacity(steps),
    };
    for n in 0..steps {
        let t = (n + 1) as f64 * dt;
        let old = series.snapshots.last().expect("initial snapshot");
        let load = load_vector(space, &|x| (spec.source)(t, x));
        let mass_old = mass.mul_vec(old.coeffs());
        let stepper = Stepper {
            space,
            nl: spec.nonlinearity.as_ref(),
            t,
            params,
            load: &load,
            shift: Some(MassShift {
                mass: &mass,
                inv_dt: 1.0 / dt,
                mass_old: &mass_old,
            }),
        };
        let (u, report) = stepper.newton(newton, old.clone()).map_err(|e| match e {
            Error::NewtonDivergence { iterations, residual } => Error::StepDivergence {
                step: n + 1,
                iterations,
                residual,
            },
            other => other,
        })?;
        series.derivatives.push(u.add_scaled(old, -1.0).scaled(1.0 / dt));
        series.newton_iterations.push(report.iterations);
        series.times.push(t);
        series.snapshots.push(u);
    }
    Ok(series)
}

/// Fine-space enrichment used by [`reconstruction_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Enrichment {
    pub refinements: usize,
    pub extra_degree: usize,
}

impl Default for Enrichment {
    fn default() -> Self {
        Self {
            refinements: 1,
            extra_degree: 2,
        }
    }
}

/// A continuous piecewise polynomial with zero boundary values on a
/// uniformly refined copy of a coarse mesh.
#[derive(Debug, Clone)]
pub struct ConformingField {
    mesh: Mesh,
    degree: usize,
    quadrature: usize,
    /// Coarse element, scale and shift of the affine map from fine to coarse
    /// reference coordinates.
    ancestry: Vec<(usize, f64, Point)>,
    nodal: Vec<f64>,
    modal: DgFunction,
    newton: NewtonReport,
}

impl ConformingField {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// The broken space on the fine mesh containing the field.
    pub fn space(&self) -> DgSpace<'_> {
        DgSpace::with_quadrature(&self.mesh, self.degree, self.quadrature)
    }

    /// Legendre coefficients on [`Self::space`].
    pub fn function(&self) -> &DgFunction {
        &self.modal
    }

    /// Values at the global Gauss-Lobatto nodes.
    pub fn nodal_values(&self) -> &[f64] {
        &self.nodal
    }

    pub fn newton_report(&self) -> &NewtonReport {
        &self.newton
    }

    /// Coarse element and coarse reference point of a fine reference point.
    pub fn coarse_point(&self, fine_element: usize, r: Point) -> (usize, Point) {
        let (e, a, b) = self.ancestry[fine_element];
        (e, [a * r[0] + b[0], a * r[1] + b[1]])
    }

    /// Values and gradients of a coarse function at the quadrature points of
    /// a fine element.
    pub fn coarse_values(
        &self,
        fine: &DgSpace<'_>,
        coarse: &DgSpace<'_>,
        u: &DgFunction,
        fine_element: usize,
    ) -> Result<Vec<(f64, Point)>> {
        let pts: Vec<Point> = fine
            .reference_points()
            .iter()
            .map(|(r, _)| self.coarse_point(fine_element, *r).1)
            .collect();
        coarse.evaluate(u, self.ancestry[fine_element].0, &pts)
    }

    /// `⫴w − U⫴`: broken gradient difference on the fine mesh plus the
    /// σ-weighted jumps of `U` (the field itself has no jumps).
    pub fn energy_distance(&self, coarse: &DgSpace<'_>, u: &DgFunction, c_sigma: f64) -> Result<f64> {
        let fine = self.space();
        let mut vol = 0.0;
        for e in 0..self.mesh.num_elements() {
            let cu = self.coarse_values(&fine, coarse, u, e)?;
            let (_, gw) = fine.cell_values(&self.modal, e);
            let jxw = &fine.cell(e).jxw;
            for q in 0..jxw.len() {
                let d = [gw[q][0] - cu[q].1[0], gw[q][1] - cu[q].1[1]];
                vol += jxw[q] * dot(d, d);
            }
        }
        let j = coarse.face_weighted_norm(u, FaceWeight::Penalty { c_sigma });
        Ok(libm::sqrt(vol + j * j))
    }
}

/// Solves `⟨α(w), ∇v⟩ = ⟨g, v⟩` for all conforming `v` with zero boundary
/// values, on the enriched space, where `g` is assembled from the
/// reconstruction datum of `U` and the source `f` at the same time.
pub fn reconstruction_oracle(
    space: &DgSpace<'_>,
    nl: &dyn Nonlinearity,
    data: &ReconstructionData,
    f: &dyn Fn(Point) -> f64,
    enrichment: Enrichment,
    newton: &NewtonConfig,
) -> Result<ConformingField> {
    newton.validate()?;
    let coarse_mesh = space.mesh();
    let mut mesh = coarse_mesh.clone();
    let mut ancestry: Vec<(usize, f64, Point)> = (0..mesh.num_elements()).map(|e| (e, 1.0, [0.0, 0.0])).collect();
    for _ in 0..enrichment.refinements {
        mesh = refine_uniform(&mesh)?;
        let parents = mesh.parent.as_ref().expect("refined mesh records parents");
        ancestry = parents
            .iter()
            .map(|&(p, off)| {
                let (e, a, b) = ancestry[p];
                // r ↦ (r + off)/2 in the parent, then the parent's map
                let o = child_to_parent(off, [0.0, 0.0]);
                (e, 0.5 * a, [a * o[0] + b[0], a * o[1] + b[1]])
            })
            .collect();
    }
    let degree = space.degree() + enrichment.extra_degree;
    let quadrature = degree + 3;
    let fine = DgSpace::with_quadrature(&mesh, degree, quadrature);
    let conv = NodalConversion::new(degree)?;
    let numbering = NodeNumbering::new(&mesh, degree);
    let nloc = fine.dofs_per_element();
    // C[k][a]: Legendre coefficient k of the Lagrange function of node a
    let mut c = DenseMatrix::zeros(nloc);
    for a in 0..nloc {
        for (k, v) in conv.lagrange_coefficients(a).into_iter().enumerate() {
            c[(k, a)] = v;
        }
    }
    let mut field = ConformingField {
        mesh: mesh.clone(),
        degree,
        quadrature,
        ancestry,
        nodal: vec![0.0; numbering.num_nodes()],
        modal: DgFunction::zeros(&fine),
        newton: NewtonReport::default(),
    };
    // load ⟨g, L_a⟩
    let nn = numbering.num_nodes();
    let mut load = vec![0.0; nn];
    for e in 0..mesh.num_elements() {
        let au = field.coarse_values(&fine, space, &data.minus_au, e)?;
        let pf = field.coarse_values(&fine, space, &data.projected_source, e)?;
        let cell = fine.cell(e);
        let mut modal = vec![0.0; nloc];
        for q in 0..cell.x.len() {
            let g = au[q].0 + f(cell.x[q]) - pf[q].0;
            for k in 0..nloc {
                modal[k] += cell.jxw[q] * g * cell.phi[q * nloc + k];
            }
        }
        for (a, &gid) in numbering.element_nodes(e).iter().enumerate() {
            load[gid] += (0..nloc).map(|k| c[(k, a)] * modal[k]).sum::<f64>();
        }
    }
    let t = data.time;
    let evaluate = |nodal: &[f64], with_jacobian: bool| -> (Vec<f64>, Option<CsrMatrix>) {
        let mut r: Vec<f64> = load.iter().map(|l| -l).collect();
        let mut trip = Vec::new();
        for e in 0..mesh.num_elements() {
            let ids = numbering.element_nodes(e);
            let local: Vec<f64> = ids.iter().map(|&g| nodal[g]).collect();
            let coeffs = conv.nodal_to_modal(&local);
            let cell = fine.cell(e);
            let mut rm = vec![0.0; nloc];
            let mut jm = vec![0.0; if with_jacobian { nloc * nloc } else { 0 }];
            for q in 0..cell.x.len() {
                let grads = &cell.grad[q * nloc..(q + 1) * nloc];
                let mut g = [0.0; 2];
                for k in 0..nloc {
                    g[0] += coeffs[k] * grads[k][0];
                    g[1] += coeffs[k] * grads[k][1];
                }
                let a = flux(nl, t, cell.x[q], g);
                for k in 0..nloc {
                    rm[k] += cell.jxw[q] * dot(a, grads[k]);
                }
                if with_jacobian {
                    let d = flux_derivative(nl, t, cell.x[q], g);
                    for j in 0..nloc {
                        let dg = [
                            d[0][0] * grads[j][0] + d[0][1] * grads[j][1],
                            d[1][0] * grads[j][0] + d[1][1] * grads[j][1],
                        ];
                        for i in 0..nloc {
                            jm[i * nloc + j] += cell.jxw[q] * dot(dg, grads[i]);
                        }
                    }
                }
            }
            for (a, &ga) in ids.iter().enumerate() {
                r[ga] += (0..nloc).map(|k| c[(k, a)] * rm[k]).sum::<f64>();
            }
            if with_jacobian {
                // Cᵀ J C
                let mut jc = vec![0.0; nloc * nloc];
                for i in 0..nloc {
                    for b in 0..nloc {
                        jc[i * nloc + b] = (0..nloc).map(|j| jm[i * nloc + j] * c[(j, b)]).sum();
                    }
                }
                for (a, &ga) in ids.iter().enumerate() {
                    if numbering.is_boundary(ga) {
                        continue;
                    }
                    for (b, &gb) in ids.iter().enumerate() {
                        if numbering.is_boundary(gb) {
                            continue;
                        }
                        let v: f64 = (0..nloc).map(|i| c[(i, a)] * jc[i * nloc + b]).sum();
                        trip.push((ga, gb, v));
                    }
                }
            }
        }
        for g in 0..nn {
            if numbering.is_boundary(g) {
                r[g] = nodal[g];
                if with_jacobian {
                    trip.push((g, g, 1.0));
                }
            }
        }
        let j = if with_jacobian {
            Some(CsrMatrix::from_triplets(nn, nn, trip))
        } else {
            None
        };
        (r, j)
    };
    let mut nodal = vec![0.0; nn];
    let (mut r, _) = evaluate(&nodal, false);
    let mut rn = max_norm(&r);
    let mut report = NewtonReport {
        iterations: 0,
        residuals: vec![rn],
    };
    while rn > newton.tolerance {
        if report.iterations == newton.max_iterations || !rn.is_finite() {
            return Err(Error::NewtonDivergence {
                iterations: report.iterations,
                residual: rn,
            });
        }
        let (_, j) = evaluate(&nodal, true);
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        let delta = solve_linear(&j.expect("jacobian requested"), &neg)?;
        let mut lambda = 1.0;
        let mut halvings = 0;
        loop {
            let trial: Vec<f64> = nodal.iter().zip(&delta).map(|(u, d)| u + lambda * d).collect();
            let (rt, _) = evaluate(&trial, false);
            let tn = max_norm(&rt);
            if tn < rn || halvings == newton.max_halvings {
                nodal = trial;
                r = rt;
                rn = tn;
                break;
            }
            lambda *= 0.5;
            halvings += 1;
        }
        report.iterations += 1;
        report.residuals.push(rn);
    }
    let mut coeffs = Vec::with_capacity(fine.num_dofs());
    for e in 0..mesh.num_elements() {
        let local: Vec<f64> = numbering.element_nodes(e).iter().map(|&g| nodal[g]).collect();
        coeffs.extend(conv.nodal_to_modal(&local));
    }
    field.modal = DgFunction::from_coeffs(&fine, coeffs)?;
    field.nodal = nodal;
    field.newton = report;
    Ok(field)
}
