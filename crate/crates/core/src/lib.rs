//! Hyperbolic fillings of finite metric spaces, combinatorial modulus,
//! conformal dimension estimates and the weight construction that produces
//! a new metric in the conformal gauge, with certificates.

// `!(x > 0.0)` is how parameter checks reject NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod gauge;
pub mod graph;
pub mod metric;
pub mod modulus;
pub mod nets;
pub mod params;
pub mod pipeline;
pub mod space;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
