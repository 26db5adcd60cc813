//! Profit-maximizing price optimization with a cap on the number of price
//! changes and a minimum size for every change.
//!
//! Demand is linear in prices. The crate provides the model and its
//! assumption checks ([`model`]), the exact projection onto the nonconvex
//! feasible set ([`projection`]), a gradient projection solver with
//! stationarity certificates and suboptimality bounds ([`gpa`]), exhaustive
//! ground truth for small instances ([`oracle`]), a seeded instance generator
//! ([`gen`]) and file formats including an LP-format MIP export ([`io`]).
//!
//! Hot loops run on rayon when the `parallel` feature is enabled (default);
//! results are bitwise identical either way.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gen;
pub mod gpa;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod par;
pub mod projection;
pub mod sparse;

pub use error::{Error, Result};
pub use gpa::{gpa_solve, multi_start, Partition, SolveReport, SolverParams};
pub use model::{Bounds, Instance, SpectralMode};
pub use sparse::CsrMatrix;
