//! Simulation and verification toolkit for fractional martingales
//! `M_t = ∫_0^t (t-s)^α ξ_s dW_s`.
//!
//! The crate is organised bottom-up:
//!
//! * [`paths`] builds time grids, reproducible random streams and the driving
//!   processes (Brownian motion, fractional Brownian motion, integrands).
//! * [`fractional`] forms the singular stochastic convolution, its running
//!   supremum, the β-variation estimator and the numerical `c_α` estimate.
//! * [`bounds`] evaluates the closed-form deviation inequalities and their
//!   constants.
//! * [`deterministic`] holds product-integration quadrature, the fractional
//!   Toeplitz ratio and the closed-form oracles.
//! * [`experiments`] runs the Monte Carlo verification of each bound and
//!   limit theorem and renders CSV/JSON reports.
//! * [`cli`] is the command-line surface over all of the above.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod deterministic;
pub mod experiments;
pub mod fractional;
pub mod parallel;
pub mod paths;
pub mod stats;

mod error;

pub use error::{Error, Result};
