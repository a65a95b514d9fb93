//! Numerical realisation of the interpolated-Gaussian covariance
//! representation
//!
//! ```text
//! Cov(f(X), g(X)) = int_0^1 E<Sigma grad f(X_a), grad g(Y_a)> da,
//! (X_a, Y_a) ~ N((mu, mu), [[Sigma, a Sigma], [a Sigma, Sigma]])
//! ```
//!
//! and of the Gaussian concentration bound it yields,
//! `P(f(X) - E f(X) >= x) <= exp(-x^2 / (2 sup_x <grad f, Sigma grad f>))`.
//!
//! Monte Carlo loops are cut into fixed chunks with one counter-based random
//! stream each, so every estimate is bit-identical for any worker count. The
//! `parallel` feature (on by default) runs chunks on rayon.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfn;
pub mod concentration;
pub mod covrep;
pub mod empirics;
pub mod error;
pub mod exec;
pub mod fields;
pub mod gaussian;
pub mod generators;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use fields::{ComplexExponentialField, ScalarField};
pub use gaussian::{CoupledSampleBatch, Draws, GaussianModel};
pub use quadrature::QuadratureRule;
pub use rng::RngStream;
pub use stats::MCEstimate;
