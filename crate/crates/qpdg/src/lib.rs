//! Command line harness for `qpdg-core`: configuration files, convergence
//! studies, the verification suites and CSV/SVG output.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dense;
pub mod error;
pub mod oswald;
pub mod output;
pub mod study;
pub mod verify;

pub use error::{exit, Error, Result};
