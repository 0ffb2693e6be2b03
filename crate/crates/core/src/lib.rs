//! A posteriori control of combined modelling and discretization errors for
//! `−div(A₀∇u) = f` with discontinuous coefficients on planar domains.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// local element indices read more clearly as loops over 0..3
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod coeff;
pub mod config;
pub mod constants;
pub mod error;
pub mod estimator;
pub mod fem;
pub mod linalg;
pub mod majorant;
pub mod mesh;
pub mod par;
pub mod problems;
pub mod quadrature;
pub mod sparse;
pub mod strategy;

pub use error::{Error, Result};
pub use linalg::{Point, SymMat2};
pub use mesh::TriangleMesh;
