//! Random models, smooth expressions and trigonometric polynomials for
//! property sweeps.

use crate::covrep::TrigPolynomial;
use crate::error::Result;
use crate::fields::ScalarField;
use crate::gaussian::GaussianModel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

/// `N(mu, A^T A / d)` with uniform entries, scaled so the spectral norm is at
/// most `max_norm`.
pub fn random_model<R: Rng>(rng: &mut R, dim: usize, max_norm: f64) -> Result<GaussianModel> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let mut sigma = a.transpose() * &a / dim as f64;
    let spectral = sigma.symmetric_eigenvalues().amax();
    if spectral > max_norm {
        sigma *= max_norm / spectral;
    }
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let mu = DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    GaussianModel::new(mu, sigma)
}

fn coef<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo..hi) * 1000.0).round() / 1000.0
}

fn linear_form<R: Rng>(rng: &mut R, dim: usize) -> String {
    let terms: Vec<String> = (1..=dim).map(|i| format!("{}*x{i}", coef(rng, -1.0, 1.0))).collect();
    format!("({})", terms.join(" + "))
}

/// Source text of a random smooth expression on `R^dim`: a short sum of
/// terms like `c*sin(<a,x> + b)`, `c*tanh(...)`, `c*exp(-(<a,x>)^2/2)`,
/// `c*x_i` and products of bounded terms.
pub fn random_smooth_expression<R: Rng>(rng: &mut R, dim: usize) -> String {
    let n_terms = rng.random_range(1..=3);
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let c = coef(rng, 0.2, 1.5);
        let lin = linear_form(rng, dim);
        let b = coef(rng, -1.0, 1.0);
        let term = match rng.random_range(0..6) {
            0 => format!("{c}*sin({lin} + {b})"),
            1 => format!("{c}*tanh({lin} + {b})"),
            2 => format!("{c}*cos({lin})"),
            3 => format!("{c}*exp(-({lin})^2/2)"),
            4 => format!("{c}*x{}", rng.random_range(1..=dim)),
            _ => {
                let other = linear_form(rng, dim);
                format!("{c}*tanh({lin})*sin({other} + {b})")
            }
        };
        terms.push(term);
    }
    terms.join(" + ")
}

pub fn random_smooth_field<R: Rng>(rng: &mut R, dim: usize) -> Result<ScalarField> {
    ScalarField::parse(&random_smooth_expression(rng, dim), dim)
}

/// Random vector with Euclidean norm at most `radius`.
pub fn random_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let r = radius * rng.random_range(0.0..1.0f64);
    v.iter().map(|x| x * r / norm).collect()
}

/// Trigonometric polynomial with `terms` frequencies in the ball of `radius`.
pub fn random_trig_polynomial<R: Rng>(rng: &mut R, dim: usize, terms: usize, radius: f64) -> TrigPolynomial {
    let frequencies = (0..terms).map(|_| random_ball(rng, dim, radius)).collect();
    let coefficients = (0..terms)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    TrigPolynomial { frequencies, coefficients }
}
