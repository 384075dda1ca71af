//! One-dimensional Gauss-Legendre and Gauss-Lobatto rules on `(-1, 1)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::basis::legendre_with_derivatives;

/// Points and weights on the reference interval; tensorized for cells.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrates `f` over `(-1, 1)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Tensor-product points `(ξ_i, η_j)` with index `j * n + i`.
    pub fn tensor_points(&self) -> Vec<([f64; 2], f64)> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push(([self.points[i], self.points[j]], self.weights[i] * self.weights[j]));
            }
        }
        out
    }
}

/// `n`-point Gauss-Legendre rule, exact for polynomials of degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1, "at least one quadrature point");
    let mut points = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let mut x = -libm::cos(PI * (k as f64 + 0.75) / (n as f64 + 0.5));
        for _ in 0..100 {
            let (p, dp, _) = legendre_with_derivatives(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp, _) = legendre_with_derivatives(n, x);
        points.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    QuadratureRule { points, weights }
}

/// Gauss-Lobatto rule with `degree + 1` points (endpoints included).
pub fn gauss_lobatto(degree: usize) -> QuadratureRule {
    assert!(degree >= 1, "Lobatto rule needs at least two points");
    let p = degree;
    let mut points = Vec::with_capacity(p + 1);
    let mut weights = Vec::with_capacity(p + 1);
    let pf = p as f64;
    for k in 0..=p {
        let x = if k == 0 {
            -1.0
        } else if k == p {
            1.0
        } else {
            let mut x = -libm::cos(PI * k as f64 / pf);
            for _ in 0..100 {
                let (_, dp, d2p) = legendre_with_derivatives(p, x);
                let dx = dp / d2p;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            x
        };
        let (pv, _, _) = legendre_with_derivatives(p, x);
        points.push(x);
        weights.push(2.0 / (pf * (pf + 1.0) * pv * pv));
    }
    QuadratureRule { points, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monomial_moment(k: i32) -> f64 {
        if k % 2 == 1 {
            0.0
        } else {
            2.0 / (k as f64 + 1.0)
        }
    }

    #[test]
    fn gauss_legendre_monomial_moments() {
        for n in 1..=12 {
            let rule = gauss_legendre(n);
            for k in 0..(2 * n as i32) {
                let q = rule.integrate(|x| x.powi(k));
                assert!((q - monomial_moment(k)).abs() < 1e-13, "n={n} k={k}");
            }
            // one degree beyond exactness is not integrated exactly
            let k = 2 * n as i32;
            assert!((rule.integrate(|x| x.powi(k)) - monomial_moment(k)).abs() > 1e-12);
        }
    }

    #[test]
    fn gauss_lobatto_moments_and_symmetry() {
        for p in 1..=10 {
            let rule = gauss_lobatto(p);
            assert_eq!(rule.points[0], -1.0);
            assert_eq!(rule.points[p], 1.0);
            for k in 0..=p {
                assert!((rule.points[k] + rule.points[p - k]).abs() < 1e-15);
            }
            for k in 0..(2 * p as i32) {
                let q = rule.integrate(|x| x.powi(k));
                assert!((q - monomial_moment(k)).abs() < 1e-13, "p={p} k={k}");
            }
        }
    }
}
