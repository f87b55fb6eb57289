//! Numerical building blocks: quadrature, regression, nonlinear fitting.

pub mod linreg;
pub mod lm;
pub mod nelder;
pub mod quad;
pub mod stats;
