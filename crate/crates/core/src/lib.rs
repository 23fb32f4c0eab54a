// NaN-rejecting checks are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cli;
pub mod cox;
pub mod curve;
pub mod error;
pub mod io;
pub mod contiguity;
pub mod leastfav;
pub mod model;
pub mod montecarlo;
pub mod plm;
pub mod quad;

pub use error::{Error, Result};
