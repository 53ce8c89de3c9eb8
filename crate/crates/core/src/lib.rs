//! Numerical toolkit for indicial families, trace fibers, boundary pairings
//! and variable-order Sobolev norms of edge-degenerate operators.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod config;
pub mod contour;
pub mod error;
pub mod family;
pub mod fixtures;
pub mod grid;
pub mod linalg;
pub mod output;
pub mod pairing;
pub mod pipeline;
pub mod spectra;
pub mod trace;
pub mod varorder;
pub mod wedge;

pub use error::{Error, Result};
