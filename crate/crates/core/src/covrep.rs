//! Both sides of the covariance representation
//! `Cov(f(X), g(X)) = int_0^1 E<Sigma grad f(X_alpha), grad g(Y_alpha)> dalpha`,
//! its Ornstein–Uhlenbeck form, and the closed-form check on trigonometric
//! polynomials.

use crate::charfn::{phi_alpha, phi_identical, phi_independent, FrequencyPair};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::gaussian::GaussianModel;
use crate::quadrature::QuadratureRule;
use crate::rng::RngStream;
use crate::stats::{block_ranges, jackknife_se, MCEstimate, JACKKNIFE_BLOCKS};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const DEFAULT_CI_LEVEL: f64 = 0.95;

/// Per-node result of an alpha-integral estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeEstimate {
    pub alpha: f64,
    pub weight: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate {
    pub estimate: MCEstimate,
    pub nodes: Vec<NodeEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub lhs: MCEstimate,
    pub rhs: MCEstimate,
    pub rhs_ou: Option<MCEstimate>,
    pub gap: f64,
    pub consistent: bool,
    /// `|rhs_ou - rhs|` against the joint half-width, when the OU form ran.
    pub ou_gap: Option<f64>,
    pub ou_consistent: Option<bool>,
    pub rhs_nodes: Vec<NodeEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationConfig {
    /// Samples for the covariance side.
    pub samples: usize,
    /// Samples per quadrature node on the integral side(s).
    pub samples_per_node: usize,
    pub quad: QuadratureRule,
    pub include_ou: bool,
    pub ci_level: f64,
}

impl RepresentationConfig {
    /// `samples` on each side, split evenly across the quadrature nodes.
    pub fn balanced(samples: usize, quad: QuadratureRule) -> Self {
        let per_node = samples.div_ceil(quad.len().max(1)).max(2);
        Self { samples, samples_per_node: per_node, quad, include_ou: false, ci_level: DEFAULT_CI_LEVEL }
    }

    pub fn with_ou(mut self, on: bool) -> Self {
        self.include_ou = on;
        self
    }
}

fn check_fields(model: &GaussianModel, f: &ScalarField, g: &ScalarField) -> Result<()> {
    for h in [f, g] {
        if h.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), found: h.dim() });
        }
    }
    Ok(())
}

/// `Cov(f(X), g(X))` from one batch, jackknife standard error over 50 blocks.
pub fn covariance_mc(model: &GaussianModel, f: &ScalarField, g: &ScalarField, n: usize, rng: RngStream) -> Result<MCEstimate> {
    check_fields(model, f, g)?;
    if n < 2 {
        return Err(Error::InvalidArgument("covariance needs at least two samples".into()));
    }
    let pairs = model.map_draws(n, rng, |x| (f.evaluate(x), g.evaluate(x)));
    if pairs.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::NonFiniteResult("field value in covariance batch".into()));
    }
    // shift by the first pair so constant fields give exactly zero
    let (f0, g0) = pairs[0];
    let blocks: Vec<[f64; 4]> = block_ranges(n, JACKKNIFE_BLOCKS)
        .map(|r| {
            let mut s = [0.0; 4];
            for &(a, b) in &pairs[r] {
                let (a, b) = (a - f0, b - g0);
                s[0] += a;
                s[1] += b;
                s[2] += a * b;
                s[3] += 1.0;
            }
            s
        })
        .collect();
    let stat = |s: &[f64; 4]| s[2] / s[3] - (s[0] / s[3]) * (s[1] / s[3]);
    let mut total = [0.0; 4];
    for b in &blocks {
        for (t, v) in total.iter_mut().zip(b) {
            *t += v;
        }
    }
    let mean = stat(&total);
    let se = jackknife_se(&blocks, stat);
    Ok(MCEstimate::new(mean, se, n, DEFAULT_CI_LEVEL))
}

/// MC estimate of `E<Sigma grad f(X_alpha), grad g(Y_alpha)>` at one alpha.
pub fn integrand_mc(
    model: &GaussianModel,
    f: &ScalarField,
    g: &ScalarField,
    alpha: f64,
    n: usize,
    rng: RngStream,
) -> Result<MCEstimate> {
    check_fields(model, f, g)?;
    let d = model.dim();
    let values = model.map_coupled(alpha, n, rng, |x, y| {
        let mut gf = vec![0.0; d];
        let mut gg = vec![0.0; d];
        f.gradient_into(x, &mut gf);
        g.gradient_into(y, &mut gg);
        model.cov_inner(&gf, &gg)
    })?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResult(format!("gradient inner product at alpha={alpha}")));
    }
    MCEstimate::from_samples(&values, DEFAULT_CI_LEVEL)
}

fn combine_nodes(quad: &QuadratureRule, per_node: Vec<Result<MCEstimate>>) -> Result<IntegralEstimate> {
    let mut nodes = Vec::with_capacity(quad.len());
    let (mut mean, mut var, mut n) = (0.0, 0.0, 0);
    for ((&alpha, &weight), est) in quad.nodes.iter().zip(&quad.weights).zip(per_node) {
        let est = est?;
        mean += weight * est.mean;
        var += weight * weight * est.std_error * est.std_error;
        n += est.n;
        nodes.push(NodeEstimate { alpha, weight, mean: est.mean, std_error: est.std_error, n: est.n });
    }
    Ok(IntegralEstimate { estimate: MCEstimate::new(mean, var.sqrt(), n, DEFAULT_CI_LEVEL), nodes })
}

/// `sum_k w_k * mean_k` over fresh coupled batches, one stream per node.
pub fn representation_rhs(
    model: &GaussianModel,
    f: &ScalarField,
    g: &ScalarField,
    quad: &QuadratureRule,
    n_per_node: usize,
    rng: RngStream,
) -> Result<IntegralEstimate> {
    check_fields(model, f, g)?;
    let per_node = crate::exec::map_tasks(quad.len(), |k| {
        integrand_mc(model, f, g, quad.nodes[k], n_per_node, rng.child(k as u64))
    });
    combine_nodes(quad, per_node)
}

/// `int_0^inf e^{-t} E<grad f~(Z), P_t grad g~(Z)> dt` for the whitened
/// fields `f~(z) = f(mu + S z)`, with `P_t` realised by the Mehler coupling
/// `(Z, e^{-t} Z + sqrt(1 - e^{-2t}) W)` and `t = -ln(alpha)` over a
/// Gauss–Legendre rule on `[0, 1]`.
pub fn representation_rhs_ou(
    model: &GaussianModel,
    f: &ScalarField,
    g: &ScalarField,
    t_quad_nodes: usize,
    n_per_node: usize,
    rng: RngStream,
) -> Result<IntegralEstimate> {
    check_fields(model, f, g)?;
    let quad = QuadratureRule::gauss_legendre(t_quad_nodes)?;
    let d = model.dim();
    let white = GaussianModel::standard(d)?;
    let per_node = crate::exec::map_tasks(quad.len(), |k| {
        let t = -quad.nodes[k].ln();
        let decay = (-t).exp();
        let values = white.map_coupled(decay.min(1.0), n_per_node, rng.child(k as u64), |z, u| {
            let mut x = vec![0.0; d];
            let mut gf = vec![0.0; d];
            let mut gg = vec![0.0; d];
            model.transform_into(z, &mut x);
            f.gradient_into(&x, &mut gf);
            model.transform_into(u, &mut x);
            g.gradient_into(&x, &mut gg);
            // <S grad f, S grad g> = <Sigma grad f, grad g> for symmetric S
            model.cov_inner(&gf, &gg)
        })?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult(format!("OU integrand at t={t}")));
        }
        MCEstimate::from_samples(&values, DEFAULT_CI_LEVEL)
    });
    combine_nodes(&quad, per_node)
}

/// Runs both sides on independent streams (and the OU form on a third).
pub fn verify_representation(
    model: &GaussianModel,
    f: &ScalarField,
    g: &ScalarField,
    config: &RepresentationConfig,
    rng: RngStream,
) -> Result<RepresentationReport> {
    let level = config.ci_level;
    let lhs = covariance_mc(model, f, g, config.samples, rng.child(0))?.at_level(level);
    let rhs_full = representation_rhs(model, f, g, &config.quad, config.samples_per_node, rng.child(1))?;
    let rhs = rhs_full.estimate.at_level(level);
    let gap = (lhs.mean - rhs.mean).abs();
    let consistent = gap <= lhs.ci_half_width + rhs.ci_half_width;
    let (rhs_ou, ou_gap, ou_consistent) = if config.include_ou {
        let ou = representation_rhs_ou(model, f, g, config.quad.len(), config.samples_per_node, rng.child(2))?
            .estimate
            .at_level(level);
        let gap = (ou.mean - rhs.mean).abs();
        (Some(ou), Some(gap), Some(gap <= ou.ci_half_width + rhs.ci_half_width))
    } else {
        (None, None, None)
    };
    Ok(RepresentationReport { lhs, rhs, rhs_ou, gap, consistent, ou_gap, ou_consistent, rhs_nodes: rhs_full.nodes })
}

/// `f(x) = sum_j c_j e^{i<t_j, x>}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub frequencies: Vec<Vec<f64>>,
    pub coefficients: Vec<Complex64>,
}

impl TrigPolynomial {
    pub fn new(frequencies: Vec<Vec<f64>>, coefficients: Vec<Complex64>) -> Result<Self> {
        if frequencies.len() != coefficients.len() {
            return Err(Error::DimensionMismatch { expected: frequencies.len(), found: coefficients.len() });
        }
        Ok(Self { frequencies, coefficients })
    }

    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        self.frequencies
            .iter()
            .zip(&self.coefficients)
            .map(|(t, c)| c * Complex64::from_polar(1.0, t.iter().zip(x).map(|(a, b)| a * b).sum()))
            .sum()
    }
}

/// Both sides of the representation for trigonometric polynomials, in
/// closed form: the covariance from `phi_1 - phi_0` and the integral from
/// the quadrature of `-<Sigma t_j, s_k> phi_alpha(t_j, s_k)`. Returns lhs - rhs.
pub fn trig_polynomial_check(
    model: &GaussianModel,
    f: &TrigPolynomial,
    g: &TrigPolynomial,
    quad: &QuadratureRule,
) -> Result<Complex64> {
    let d = model.dim();
    let mut lhs = Complex64::new(0.0, 0.0);
    let mut rhs = Complex64::new(0.0, 0.0);
    for (t, a) in f.frequencies.iter().zip(&f.coefficients) {
        for (s, b) in g.frequencies.iter().zip(&g.coefficients) {
            if t.len() != d || s.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: t.len().min(s.len()) });
            }
            let pair = FrequencyPair::new(t.clone(), s.clone())?;
            let ab = a * b;
            lhs += ab * (phi_identical(model, &pair) - phi_independent(model, &pair));
            let inner = model.cov_inner(t, s);
            let integral: Complex64 = quad.integrate(|alpha| {
                // grad f = i t e^{i<t,x>}, grad g = i s e^{i<s,y>}: i * i = -1
                phi_alpha(model, alpha, &pair).expect("nodes in (0, 1)") * -inner
            });
            rhs += ab * integral;
        }
    }
    Ok(lhs - rhs)
}
