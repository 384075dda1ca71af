//! Tensor-product Legendre basis on the reference square.

use alloc::vec;
use alloc::vec::Vec;

use crate::Point;

/// `(P_n(x), P_n'(x), P_n''(x))`.
pub fn legendre_with_derivatives(n: usize, x: f64) -> (f64, f64, f64) {
    let mut p = [1.0, x];
    let mut dp = [0.0, 1.0];
    let mut d2p = [0.0, 0.0];
    if n == 0 {
        return (1.0, 0.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * p[1] - kf * p[0]) / (kf + 1.0);
        let dnext = dp[0] + (2.0 * kf + 1.0) * p[1];
        let d2next = d2p[0] + (2.0 * kf + 1.0) * dp[1];
        p = [p[1], next];
        dp = [dp[1], dnext];
        d2p = [d2p[1], d2next];
    }
    (p[1], dp[1], d2p[1])
}

/// Values and first two derivatives of `P_0..=P_degree` at `x`.
pub fn legendre_table(degree: usize, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = vec![0.0; degree + 1];
    let mut dp = vec![0.0; degree + 1];
    let mut d2p = vec![0.0; degree + 1];
    p[0] = 1.0;
    if degree >= 1 {
        p[1] = x;
        dp[1] = 1.0;
    }
    for k in 1..degree {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
        dp[k + 1] = dp[k - 1] + (2.0 * kf + 1.0) * p[k];
        d2p[k + 1] = d2p[k - 1] + (2.0 * kf + 1.0) * dp[k];
    }
    (p, dp, d2p)
}

/// Basis index of `P_i(ξ) P_j(η)` for degree `p`.
#[inline]
pub fn basis_index(degree: usize, i: usize, j: usize) -> usize {
    j * (degree + 1) + i
}

/// Tabulated basis at one reference point.
#[derive(Debug, Clone)]
pub struct PointTable {
    pub values: Vec<f64>,
    pub grads: Vec<Point>,
    /// `[∂ξξ, ∂ξη, ∂ηη]`
    pub hessians: Vec<[f64; 3]>,
}

pub fn tabulate(degree: usize, r: Point) -> PointTable {
    let n = degree + 1;
    let (px, dpx, d2px) = legendre_table(degree, r[0]);
    let (py, dpy, d2py) = legendre_table(degree, r[1]);
    let mut values = Vec::with_capacity(n * n);
    let mut grads = Vec::with_capacity(n * n);
    let mut hessians = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            values.push(px[i] * py[j]);
            grads.push([dpx[i] * py[j], px[i] * dpy[j]]);
            hessians.push([d2px[i] * py[j], dpx[i] * dpy[j], px[i] * d2py[j]]);
        }
    }
    PointTable {
        values,
        grads,
        hessians,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_legendre_values() {
        let x: f64 = 0.3;
        let (p2, dp2, d2p2) = legendre_with_derivatives(2, x);
        assert!((p2 - 0.5 * (3.0 * x * x - 1.0)).abs() < 1e-15);
        assert!((dp2 - 3.0 * x).abs() < 1e-15);
        assert!((d2p2 - 3.0).abs() < 1e-15);
        let (p3, dp3, d2p3) = legendre_with_derivatives(3, x);
        assert!((p3 - 0.5 * (5.0 * x.powi(3) - 3.0 * x)).abs() < 1e-15);
        assert!((dp3 - 0.5 * (15.0 * x * x - 3.0)).abs() < 1e-15);
        assert!((d2p3 - 15.0 * x).abs() < 1e-14);
        let (t, dt, d2t) = legendre_table(5, x);
        for n in 0..=5 {
            let (a, b, c) = legendre_with_derivatives(n, x);
            assert!((t[n] - a).abs() < 1e-15 && (dt[n] - b).abs() < 1e-14 && (d2t[n] - c).abs() < 1e-13);
        }
    }
}
