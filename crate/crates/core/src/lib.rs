//! Simulation of random fields, point processes and Lévy-driven processes on
//! planar domains.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circulant;
pub mod dense;
pub mod error;
pub mod fractional;
pub mod gmrf;
pub mod grid;
pub mod levy;
pub mod mcmc;
pub mod pointproc;
pub mod quad;
pub mod rng;
pub mod special;
pub mod validate;

pub use error::{Error, Result};
pub use grid::{CovarianceModel, Field, Grid2D, MaskedField};
pub use rng::RngStream;
