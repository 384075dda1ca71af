//! The broken tensor-product polynomial space and its operators.

pub mod basis;
pub mod nodal;
pub mod quadrature;
mod space;

pub use nodal::{oswald_interpolate, oswald_ratios, oswald_with, NodalConversion, NodeNumbering, OswaldRatios};
pub use quadrature::{gauss_legendre, gauss_lobatto, QuadratureRule};
pub use space::{
    face_project, l2_project_lower, penalty, scalar_jump, vector_average, vector_jump, CellData, DgFunction, DgSpace,
    FaceData, FaceTrace, FaceWeight, SideData,
};
