//! Closed-form characteristic functions of `X ~ N(mu, Sigma)` and of the
//! interpolated pair `(X_alpha, Y_alpha)`.
//!
//! Everything is computed on the log scale: `phi_X(t) = exp(z(t))` with
//! `z(t) = i<mu, t> - <Sigma t, t>/2`, and
//! `phi_alpha(t, s) = exp(alpha z(t + s) + (1 - alpha)(z(t) + z(s)))`.
//! Fractional powers of complex values never appear.

use crate::error::{Error, Result};
use crate::gaussian::{check_alpha, GaussianModel};
use crate::quadrature::QuadratureRule;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPair {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
}

impl FrequencyPair {
    pub fn new(t: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if t.len() != s.len() {
            return Err(Error::DimensionMismatch { expected: t.len(), found: s.len() });
        }
        if t.iter().chain(&s).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult("frequency entries must be finite".into()));
        }
        Ok(Self { t, s })
    }

    fn sum(&self) -> Vec<f64> {
        self.t.iter().zip(&self.s).map(|(a, b)| a + b).collect()
    }
}

/// `z(t) = i<mu, t> - <Sigma t, t>/2`.
pub fn log_phi_x(model: &GaussianModel, t: &[f64]) -> Complex64 {
    let drift: f64 = model.mean().iter().zip(t).map(|(m, t)| m * t).sum();
    Complex64::new(-0.5 * model.cov_inner(t, t), drift)
}

pub fn phi_x(model: &GaussianModel, t: &[f64]) -> Complex64 {
    log_phi_x(model, t).exp()
}

/// `phi_0(t, s) = phi_X(t) phi_X(s)`, the independent coupling.
pub fn phi_independent(model: &GaussianModel, pair: &FrequencyPair) -> Complex64 {
    (log_phi_x(model, &pair.t) + log_phi_x(model, &pair.s)).exp()
}

/// `phi_1(t, s) = phi_X(t + s)`, the identical coupling.
pub fn phi_identical(model: &GaussianModel, pair: &FrequencyPair) -> Complex64 {
    phi_x(model, &pair.sum())
}

pub fn phi_alpha(model: &GaussianModel, alpha: f64, pair: &FrequencyPair) -> Result<Complex64> {
    check_alpha(alpha)?;
    if alpha == 0.0 {
        return Ok(phi_independent(model, pair));
    }
    if alpha == 1.0 {
        return Ok(phi_identical(model, pair));
    }
    let joint = log_phi_x(model, &pair.sum());
    let split = log_phi_x(model, &pair.t) + log_phi_x(model, &pair.s);
    Ok((joint * alpha + split * (1.0 - alpha)).exp())
}

/// `d/dalpha phi_alpha = -<Sigma t, s> phi_alpha`.
pub fn phi_alpha_derivative(model: &GaussianModel, alpha: f64, pair: &FrequencyPair) -> Result<Complex64> {
    let phi = phi_alpha(model, alpha, pair)?;
    Ok(phi * -model.cov_inner(&pair.t, &pair.s))
}

/// `phi_1 - phi_0 - int_0^1 dphi_alpha/dalpha` with the integral taken by `quad`.
pub fn verify_interpolation_identity(model: &GaussianModel, pair: &FrequencyPair, quad: &QuadratureRule) -> Complex64 {
    let integral: Complex64 =
        quad.integrate(|a| phi_alpha_derivative(model, a, pair).expect("quadrature nodes lie in (0, 1)"));
    phi_identical(model, pair) - phi_independent(model, pair) - integral
}
