//! Numerical laboratory for rough differential equations driven by cadlag
//! paths with the Riemann-integrability-of-extension (RIE) property.
//!
//! The crate is organized bottom-up: [`paths`] holds partitions and cadlag
//! paths on a fixed master grid, [`variation`] measures them, [`lift`] builds
//! second-level rough paths and the RIE diagnostic, [`processes`] samples
//! driving signals, [`schemes`] solves the equations, and [`lab`] runs
//! convergence experiments over seeds and levels.

// NaN-rejecting `!(a > b)` guards and index loops over parallel flat buffers are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod lab;
pub mod lift;
pub mod paths;
pub mod processes;
pub mod schemes;
pub mod variation;

pub use error::{Error, Result};
