//! Rotational-state qudits in pairs of polar molecules: spectrum, dipolar
//! coupling, trajectory-driven dynamics, gate synthesis and circuit simulation.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angular;
pub mod circuitsim;
pub mod cli;
pub mod ddi;
pub mod dynamics;
pub mod encodings;
pub mod error;
pub mod gates;
pub mod molecule;
pub mod optimize;
pub mod trajectory;

pub use error::{Error, Result};
