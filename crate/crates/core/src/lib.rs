//! Self-similar profiles for `u_t = u_xx - u^p` on the half-line with a boundary flux,
//! and the numerical checks that relate them to the evolution problem.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod numerics;
pub mod pde;
pub mod profile;
pub mod similarity;

pub use error::{Error, Result};
pub use model::{ClosedFormStationary, ModelParams};
