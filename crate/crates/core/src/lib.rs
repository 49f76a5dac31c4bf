//! Indifference prices of income streams in a Merton jump-diffusion market
//! for agents with different information about the jumps, and the value of
//! that information.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agents;
pub mod cli;
pub mod defaults;
pub mod error;
pub mod interp;
pub mod model;
pub mod optimize;
pub mod pricing;
pub mod quadrature;
pub mod simulate;
pub mod validation;

pub use error::{Error, Result};
pub use model::{IncomeStream, ModelParams};
