//! Interior penalty discontinuous Galerkin discretization of strictly monotone
//! quasilinear parabolic problems on quadrilateral meshes, together with an
//! hp-explicit a posteriori bound for the energy-norm error built on the
//! elliptic reconstruction of the discrete solution.
//!
//! The crate is `no_std` and only needs `alloc`. All IO, configuration and
//! command line handling lives in the `qpdg-std` companion crate.
//!
//! Module map:
//! * [`mesh`]: conforming quadrilateral meshes, face topology, meshsize.
//! * [`fespace`]: the broken tensor-product `Q_p` space, quadrature, projections,
//!   traces, norms and the Oswald averaging operator.
//! * [`problem`]: nonlinearity presets and manufactured problems.
//! * [`ipdg`]: the semilinear form, residual/Jacobian assembly, the discrete
//!   operator and the reconstruction datum.
//! * [`solver`]: Newton, backward Euler marching and the reconstruction oracle.
//! * [`estimator`]: elliptic estimator, oscillation, constants and the
//!   time-accumulated bound.
#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimator;
pub mod fespace;
pub mod ipdg;
pub mod linalg;
pub mod mesh;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    libm::hypot(a[0], a[1])
}
