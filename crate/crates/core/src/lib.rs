//! Confidence densities and confidence statements built from pivots.

pub mod error;
pub mod gamma;
pub mod harness;
pub mod higher_order;
pub mod linear;
pub mod numerics;
pub mod pivot;

pub use error::{Error, Result};
