//! Quasilinear model problem `u_t − ∇·(a(t, x, |∇u|)∇u) = f` with
//! homogeneous Dirichlet data: coefficient presets, hypothesis checks and
//! manufactured solutions.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use core::f64::consts::PI;
use libm::{atan, cos, exp, sin};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::mesh::Rectangle;
use crate::{dot, norm, Error, Point, Result};

/// The scalar coefficient `μ(t, x, s)` of the flux `α(∇u) = μ(t, x, |∇u|)∇u`.
///
/// Implementors certify a strong monotonicity constant `a_lower` and a
/// Lipschitz constant `a_upper` of the flux map `y ↦ μ(|y|) y`.
pub trait Nonlinearity: Send + Sync {
    fn mu(&self, t: f64, x: Point, s: f64) -> f64;
    fn dmu_ds(&self, t: f64, x: Point, s: f64) -> f64;
    /// Spatial gradient of `μ` at fixed `s`; zero for the presets.
    fn dmu_dx(&self, _t: f64, _x: Point, _s: f64) -> Point {
        [0.0, 0.0]
    }
    fn a_lower(&self) -> f64;
    fn a_upper(&self) -> f64;
    fn name(&self) -> &str {
        "custom"
    }
}

/// Built-in coefficients depending on `s = |∇u|` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// `μ ≡ 1`
    Linear,
    /// `μ(s) = 2 + 1/(1 + s)`
    Hrs,
    /// `μ(s) = 1 + (2/π) arctan(s²)`
    Arctan,
}

/// Upper bound of `μ(s) + μ'(s)s` for the arctan preset; the supremum is
/// ≈ 2.21800 near `s ≈ 1.316`.
const ARCTAN_UPPER: f64 = 2.22;

impl Nonlinearity for Preset {
    fn mu(&self, _t: f64, _x: Point, s: f64) -> f64 {
        match self {
            Preset::Linear => 1.0,
            Preset::Hrs => 2.0 + 1.0 / (1.0 + s),
            Preset::Arctan => 1.0 + 2.0 / PI * atan(s * s),
        }
    }

    fn dmu_ds(&self, _t: f64, _x: Point, s: f64) -> f64 {
        match self {
            Preset::Linear => 0.0,
            Preset::Hrs => -1.0 / ((1.0 + s) * (1.0 + s)),
            Preset::Arctan => 4.0 / PI * s / (1.0 + s * s * s * s),
        }
    }

    fn a_lower(&self) -> f64 {
        match self {
            Preset::Linear => 1.0,
            Preset::Hrs => 2.0,
            Preset::Arctan => 1.0,
        }
    }

    fn a_upper(&self) -> f64 {
        match self {
            Preset::Linear => 1.0,
            Preset::Hrs => 3.0,
            Preset::Arctan => ARCTAN_UPPER,
        }
    }

    fn name(&self) -> &str {
        match self {
            Preset::Linear => "linear",
            Preset::Hrs => "hrs",
            Preset::Arctan => "arctan",
        }
    }
}

pub fn preset_nonlinearity(name: &str) -> Result<Preset> {
    match name {
        "linear" => Ok(Preset::Linear),
        "hrs" => Ok(Preset::Hrs),
        "arctan" => Ok(Preset::Arctan),
        other => Err(Error::UnknownPreset(other.to_string())),
    }
}

/// `α = μ(|g|) g`
#[inline]
pub fn flux(nl: &dyn Nonlinearity, t: f64, x: Point, g: Point) -> Point {
    let m = nl.mu(t, x, norm(g));
    [m * g[0], m * g[1]]
}

/// `Dα(g) = μ(s) I + μ'(s) s ĝ⊗ĝ`, reducing to `μ(0) I` at `s = 0`.
#[inline]
pub fn flux_derivative(nl: &dyn Nonlinearity, t: f64, x: Point, g: Point) -> [[f64; 2]; 2] {
    let s = norm(g);
    let m = nl.mu(t, x, s);
    if s == 0.0 {
        return [[m, 0.0], [0.0, m]];
    }
    let c = nl.dmu_ds(t, x, s) / s;
    [
        [m + c * g[0] * g[0], c * g[0] * g[1]],
        [c * g[1] * g[0], m + c * g[1] * g[1]],
    ]
}

/// `∇·α(u)` from the gradient and Hessian of `u` (chain rule).
#[inline]
pub fn flux_divergence(nl: &dyn Nonlinearity, t: f64, x: Point, g: Point, hess: [[f64; 2]; 2]) -> f64 {
    let d = flux_derivative(nl, t, x, g);
    let mut tr = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            tr += d[a][b] * hess[b][a];
        }
    }
    tr + dot(nl.dmu_dx(t, x, norm(g)), g)
}

/// Sampled check of the Lipschitz and strong monotonicity inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisReport {
    /// `max |Φ(y) − Φ(z)| / |y − z|`
    pub worst_lipschitz: f64,
    /// `min (Φ(y) − Φ(z))·(y − z) / |y − z|²`
    pub worst_monotonicity: f64,
    pub pairs_checked: usize,
    pub pairs_skipped: usize,
    pub passed: bool,
}

/// Ratios for one pair, `None` when `y = z`.
pub fn hypothesis_ratios(nl: &dyn Nonlinearity, t: f64, x: Point, y: Point, z: Point) -> Option<(f64, f64)> {
    let d = [y[0] - z[0], y[1] - z[1]];
    let dn = norm(d);
    if dn == 0.0 {
        return None;
    }
    let (fy, fz) = (flux(nl, t, x, y), flux(nl, t, x, z));
    let df = [fy[0] - fz[0], fy[1] - fz[1]];
    Some((norm(df) / dn, dot(df, d) / (dn * dn)))
}

/// Evaluates the hypothesis ratios on explicit pairs.
pub fn check_pairs(nl: &dyn Nonlinearity, pairs: impl IntoIterator<Item = (Point, Point)>) -> HypothesisReport {
    let mut lip = 0.0f64;
    let mut mono = f64::INFINITY;
    let (mut checked, mut skipped) = (0, 0);
    for (y, z) in pairs {
        match hypothesis_ratios(nl, 0.0, [0.5, 0.5], y, z) {
            Some((l, m)) => {
                lip = lip.max(l);
                mono = mono.min(m);
                checked += 1;
            }
            None => skipped += 1,
        }
    }
    let passed = checked > 0 && lip <= nl.a_upper() * (1.0 + 1e-9) && mono >= nl.a_lower() * (1.0 - 1e-9);
    HypothesisReport {
        worst_lipschitz: lip,
        worst_monotonicity: mono,
        pairs_checked: checked,
        pairs_skipped: skipped,
        passed,
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Random pairs with `|y|, |z| <= radius`. Magnitudes are drawn with a
/// cubic bias towards zero, and every other `z` is a small perturbation of
/// `y` so that the local flux derivative is probed as well.
pub fn sample_pairs(samples: usize, radius: f64, seed: u64) -> impl Iterator<Item = (Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(move |k| {
        let point = |rng: &mut ChaCha8Rng| {
            let r = {
                let u = uniform(rng);
                radius * u * u * u
            };
            let th = 2.0 * PI * uniform(rng);
            [r * cos(th), r * sin(th)]
        };
        let y = point(&mut rng);
        let z = if k % 2 == 0 {
            point(&mut rng)
        } else {
            let eps = 1e-4 * (1.0 + norm(y)) * uniform(&mut rng);
            let th = 2.0 * PI * uniform(&mut rng);
            let z = [y[0] + eps * cos(th), y[1] + eps * sin(th)];
            if norm(z) > radius {
                y
            } else {
                z
            }
        };
        (y, z)
    })
}

pub fn check_hypotheses(nl: &dyn Nonlinearity, samples: usize, radius: f64, seed: u64) -> HypothesisReport {
    check_pairs(nl, sample_pairs(samples, radius, seed))
}

pub type ScalarField = Box<dyn Fn(f64, Point) -> f64 + Send + Sync>;
pub type VectorField = Box<dyn Fn(f64, Point) -> Point + Send + Sync>;

pub struct ExactSolution {
    pub u: ScalarField,
    pub grad: VectorField,
    pub u_t: ScalarField,
}

pub struct ProblemSpec {
    pub name: String,
    pub domain: Rectangle,
    pub final_time: f64,
    pub source: ScalarField,
    pub initial: Box<dyn Fn(Point) -> f64 + Send + Sync>,
    pub nonlinearity: Box<dyn Nonlinearity>,
    pub exact: Option<ExactSolution>,
    /// Time independent problem (solved as `B(U, V) = ⟨f, V⟩`).
    pub steady: bool,
}

impl core::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("final_time", &self.final_time)
            .field("nonlinearity", &self.nonlinearity.name())
            .field("steady", &self.steady)
            .finish()
    }
}

impl ProblemSpec {
    /// Largest `|u|` of the exact solution sampled along the boundary at
    /// `times`; zero for homogeneous Dirichlet solutions.
    pub fn boundary_violation(&self, times: &[f64], points_per_side: usize) -> Result<f64> {
        let exact = self.exact.as_ref().ok_or(Error::MissingExactSolution)?;
        let (a, b) = (self.domain.min, self.domain.max);
        let mut worst = 0.0f64;
        for &t in times {
            for k in 0..=points_per_side {
                let s = k as f64 / points_per_side as f64;
                let x = a[0] + s * (b[0] - a[0]);
                let y = a[1] + s * (b[1] - a[1]);
                for p in [[x, a[1]], [x, b[1]], [a[0], y], [b[0], y]] {
                    worst = worst.max((exact.u)(t, p).abs());
                }
            }
        }
        Ok(worst)
    }
}

fn sine_mode(x: Point) -> f64 {
    sin(PI * x[0]) * sin(PI * x[1])
}

fn sine_mode_grad(x: Point) -> Point {
    [
        PI * cos(PI * x[0]) * sin(PI * x[1]),
        PI * sin(PI * x[0]) * cos(PI * x[1]),
    ]
}

fn sine_mode_hessian(x: Point) -> [[f64; 2]; 2] {
    let s = sine_mode(x);
    let c = PI * PI * cos(PI * x[0]) * cos(PI * x[1]);
    [[-PI * PI * s, c], [c, -PI * PI * s]]
}

/// Names accepted by [`manufactured_problem`].
pub const MANUFACTURED: [&str; 3] = ["heat_decay", "quasilinear_smooth", "steady_quasilinear"];

/// Manufactured problems on the unit square with `u = sin(πx) sin(πy) · T(t)`.
pub fn manufactured_problem(name: &str) -> Result<ProblemSpec> {
    let spec = match name {
        "heat_decay" => {
            let k = 2.0 * PI * PI;
            ProblemSpec {
                name: name.to_string(),
                domain: Rectangle::UNIT_SQUARE,
                final_time: 0.1,
                source: Box::new(|_, _| 0.0),
                initial: Box::new(sine_mode),
                nonlinearity: Box::new(Preset::Linear),
                exact: Some(ExactSolution {
                    u: Box::new(move |t, x| sine_mode(x) * exp(-k * t)),
                    grad: Box::new(move |t, x| {
                        let g = sine_mode_grad(x);
                        let d = exp(-k * t);
                        [g[0] * d, g[1] * d]
                    }),
                    u_t: Box::new(move |t, x| -k * sine_mode(x) * exp(-k * t)),
                }),
                steady: false,
            }
        }
        "quasilinear_smooth" => ProblemSpec {
            name: name.to_string(),
            domain: Rectangle::UNIT_SQUARE,
            final_time: 0.1,
            source: Box::new(|t, x| {
                let d = exp(-t);
                let g = sine_mode_grad(x);
                let h = sine_mode_hessian(x);
                let g = [g[0] * d, g[1] * d];
                let h = [[h[0][0] * d, h[0][1] * d], [h[1][0] * d, h[1][1] * d]];
                -sine_mode(x) * d - flux_divergence(&Preset::Hrs, t, x, g, h)
            }),
            initial: Box::new(sine_mode),
            nonlinearity: Box::new(Preset::Hrs),
            exact: Some(ExactSolution {
                u: Box::new(|t, x| sine_mode(x) * exp(-t)),
                grad: Box::new(|t, x| {
                    let g = sine_mode_grad(x);
                    [g[0] * exp(-t), g[1] * exp(-t)]
                }),
                u_t: Box::new(|t, x| -sine_mode(x) * exp(-t)),
            }),
            steady: false,
        },
        "steady_quasilinear" => ProblemSpec {
            name: name.to_string(),
            domain: Rectangle::UNIT_SQUARE,
            final_time: 0.0,
            source: Box::new(|t, x| -flux_divergence(&Preset::Hrs, t, x, sine_mode_grad(x), sine_mode_hessian(x))),
            initial: Box::new(sine_mode),
            nonlinearity: Box::new(Preset::Hrs),
            exact: Some(ExactSolution {
                u: Box::new(|_, x| sine_mode(x)),
                grad: Box::new(|_, x| sine_mode_grad(x)),
                u_t: Box::new(|_, _| 0.0),
            }),
            steady: true,
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn preset_constants() {
        let l = preset_nonlinearity("linear").unwrap();
        assert_eq!((l.a_lower(), l.a_upper()), (1.0, 1.0));
        let h = preset_nonlinearity("hrs").unwrap();
        assert_eq!((h.a_lower(), h.a_upper()), (2.0, 3.0));
        assert_eq!(h.mu(0.0, [0.0, 0.0], 0.0), 3.0);
        assert!(matches!(preset_nonlinearity("plaplace"), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn linear_ratios_are_one() {
        let r = check_hypotheses(&Preset::Linear, 10_000, 1e3, 1);
        assert!((r.worst_lipschitz - 1.0).abs() <= 1e-12);
        assert!((r.worst_monotonicity - 1.0).abs() <= 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn presets_pass_their_hypotheses() {
        for p in [Preset::Linear, Preset::Hrs, Preset::Arctan] {
            let r = check_hypotheses(&p, 10_000, 1e3, 42);
            assert!(r.passed, "{:?}: {:?}", p, r);
            assert_eq!(r.pairs_checked + r.pairs_skipped, 10_000);
        }
        let r = check_hypotheses(&Preset::Hrs, 10_000, 1e3, 7);
        assert!(r.worst_lipschitz <= 3.0 * (1.0 + 1e-9));
        assert!(r.worst_monotonicity >= 2.0 * (1.0 - 1e-9));
        // the bounds are nearly attained near s = 0
        assert!(r.worst_lipschitz > 2.9);
    }

    #[test]
    fn arctan_upper_bound_is_tight() {
        // radial eigenvalue μ + μ's of the flux derivative on a fine grid
        let mut sup = 0.0f64;
        for k in 0..200_000 {
            let s = k as f64 * 1e-4;
            sup = sup.max(Preset::Arctan.mu(0.0, [0.0; 2], s) + Preset::Arctan.dmu_ds(0.0, [0.0; 2], s) * s);
        }
        assert!(sup < ARCTAN_UPPER && sup > 2.2179);
    }

    #[test]
    fn degenerate_pair_is_skipped() {
        let r = check_pairs(&Preset::Hrs, [([1.0, 2.0], [1.0, 2.0]), ([0.0, 0.0], [1.0, 0.0])]);
        assert_eq!(r.pairs_skipped, 1);
        assert_eq!(r.pairs_checked, 1);
    }

    #[test]
    fn flux_derivative_matches_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for p in [Preset::Hrs, Preset::Arctan] {
            for _ in 0..50 {
                let g = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let d = flux_derivative(&p, 0.0, [0.0; 2], g);
                let h = 1e-6;
                for b in 0..2 {
                    let mut gp = g;
                    let mut gm = g;
                    gp[b] += h;
                    gm[b] -= h;
                    let (fp, fm) = (flux(&p, 0.0, [0.0; 2], gp), flux(&p, 0.0, [0.0; 2], gm));
                    for a in 0..2 {
                        assert!(((fp[a] - fm[a]) / (2.0 * h) - d[a][b]).abs() < 1e-7);
                    }
                }
            }
        }
        assert_eq!(
            flux_derivative(&Preset::Hrs, 0.0, [0.0; 2], [0.0, 0.0]),
            [[3.0, 0.0], [0.0, 3.0]]
        );
    }

    /// Fourth-order central differences of the exact solution, nested to
    /// form `u_t − ∇·(μ(|∇u|)∇u)` without using any closed-form derivative.
    fn fd_source(spec: &ProblemSpec, t: f64, x: Point) -> f64 {
        let ex = spec.exact.as_ref().unwrap();
        let h = 1e-3;
        let d4 = |f: &dyn Fn(f64) -> f64| (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
        let grad = |p: Point| -> Point {
            [
                d4(&|s| (ex.u)(t, [p[0] + s, p[1]])),
                d4(&|s| (ex.u)(t, [p[0], p[1] + s])),
            ]
        };
        let fl = |p: Point| flux(spec.nonlinearity.as_ref(), t, p, grad(p));
        let div = d4(&|s| fl([x[0] + s, x[1]])[0]) + d4(&|s| fl([x[0], x[1] + s])[1]);
        let ut = if spec.steady { 0.0 } else { d4(&|s| (ex.u)(t + s, x)) };
        ut - div
    }

    #[test]
    fn manufactured_sources_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for name in MANUFACTURED {
            let spec = manufactured_problem(name).unwrap();
            for _ in 0..25 {
                let x = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
                let t = rng.gen_range(0.0..0.1);
                let f = (spec.source)(t, x);
                let fd = fd_source(&spec, t, x);
                let scale = f.abs().max(1.0);
                assert!((f - fd).abs() <= 1e-6 * scale, "{name}: {f} vs {fd}");
            }
        }
    }

    #[test]
    fn heat_decay_facts() {
        let spec = manufactured_problem("heat_decay").unwrap();
        assert_eq!((spec.source)(0.05, [0.3, 0.4]), 0.0);
        assert!(spec.boundary_violation(&[0.0, 0.05, 0.1], 50).unwrap() < 1e-15);
        // ‖u(t)‖ = e^{−2π²t}/2: tensor Gauss quadrature of sin² sin²
        let rule = crate::fespace::gauss_legendre(20);
        let t = 0.1;
        let mut s = 0.0;
        for (i, &xi) in rule.points.iter().enumerate() {
            for (j, &eta) in rule.points.iter().enumerate() {
                let x = [0.5 * (xi + 1.0), 0.5 * (eta + 1.0)];
                s += 0.25 * rule.weights[i] * rule.weights[j] * (spec.exact.as_ref().unwrap().u)(t, x).powi(2);
            }
        }
        assert_relative_eq!(s.sqrt(), 0.5 * (-2.0 * PI * PI * t).exp(), max_relative = 1e-12);
    }

    #[test]
    fn stationary_point_source_is_finite() {
        let spec = manufactured_problem("quasilinear_smooth").unwrap();
        let f = (spec.source)(0.0, [0.5, 0.5]);
        assert!(f.is_finite());
        // at the center ∇u = 0, so f = u_t − μ(0)Δu = −1 + 3·2π²
        assert_relative_eq!(f, -1.0 + 6.0 * PI * PI, max_relative = 1e-12);
        assert!(manufactured_problem("nope").is_err());
    }
}
