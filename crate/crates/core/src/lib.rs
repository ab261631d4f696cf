//! Receiver-optimal aggregation of many biased senders' reports.
//!
//! [`finite`] solves the exact finite-N problem as a linear program,
//! [`interval`] the large-economy interval mechanism, [`hetero`] and
//! [`linear`] the observable-bias and linear-payoff extensions, and
//! [`simulate`] provides Monte Carlo incentive checks.

pub mod error;
pub mod finite;
pub mod grid;
pub mod hetero;
pub mod interval;
pub mod linear;
pub mod model;
pub mod numerics;
pub mod sampling;
pub mod simulate;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
