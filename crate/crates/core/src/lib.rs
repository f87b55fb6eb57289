//! Non-stationary Student-t model of intraday index returns.
//!
//! The library covers the full pipeline: ingesting ten-minute price bars,
//! simulating the model as a Monte Carlo oracle, calibrating the parameter
//! triple (alpha, beta, D), counting aftershocks behind large opening
//! returns, fitting the Omori law to the resulting curves, and computing the
//! analytic parameter-free prediction of cumulative aftershock counts.

pub mod calibrate;
pub mod error;
pub mod market;
pub mod model;
pub mod numeric;
pub mod omori;

pub use error::{Error, Result};
