//! The energy seminorm `sup_x <grad f(x), Sigma grad f(x)>`, the tail and
//! MGF bound family, and the empirical check of the Herbst differential
//! inequality `h'(t) <= t s h(t)` for `h(t) = E e^{t (f - E f)}`.

use crate::error::{Error, Result};
use crate::fields::{argmax, FieldBody, ScalarField};
use crate::gaussian::GaussianModel;
use crate::rng::RngStream;
use crate::stats::{mean_var, MCEstimate};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// `<grad f(x), Sigma grad f(x)> = |Sigma^{1/2} grad f(x)|^2`.
pub fn energy_seminorm_at(model: &GaussianModel, f: &ScalarField, x: &[f64]) -> Result<f64> {
    let g = f.gradient(x)?;
    if g.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: g.len() });
    }
    Ok(model.cov_inner(&g, &g))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormMethod {
    Analytic,
    MultistartAscent,
    RandomSearch,
}

/// Best value found for the seminorm. Unless `is_exact`, `value` is only a
/// lower bound on the supremum, attained at `witness`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub witness: Vec<f64>,
    pub method: SeminormMethod,
    pub is_exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentConfig {
    pub starts: usize,
    pub max_steps: usize,
    pub probes: usize,
    pub grad_tol: f64,
    /// Starts and probes are drawn from `N(mu, spread^2 Sigma)`.
    pub spread: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self { starts: 64, max_steps: 500, probes: 10_000, grad_tol: 1e-9, spread: 2.0 }
    }
}

/// Closed form of the seminorm under `metric`, for fields whose gradient
/// range is known: affine, coordinate max and Euclidean norm (and their
/// truncations). Returns `(value, witness)`.
fn analytic_seminorm(model: &GaussianModel, f: &ScalarField, metric: Metric) -> Option<(f64, Vec<f64>)> {
    let d = f.dim();
    let (inner, level) = match f.body() {
        FieldBody::Truncated { inner, level } => (inner.as_ref(), Some(*level)),
        _ => (f, None),
    };
    if matches!(inner.body(), FieldBody::Truncated { .. }) {
        return None;
    }
    let witness = if let Some((a, c)) = inner.affine() {
        let norm_sq: f64 = a.iter().map(|v| v * v).sum();
        if norm_sq == 0.0 {
            if level.is_some_and(|l| c.abs() >= l) {
                return None;
            }
            vec![0.0; d]
        } else {
            // a point where <a, x> + c = 0, inside any truncation band
            a.iter().map(|v| -c * v / norm_sq).collect()
        }
    } else {
        match inner.body() {
            FieldBody::MaxCoord => {
                let diag: Vec<f64> = (0..d).map(|i| metric.diag(model, i)).collect();
                let top = argmax(&diag);
                let mut x = vec![-1.0; d];
                x[top] = 0.0;
                x
            }
            FieldBody::EuclideanNorm => {
                let c = 0.5 * level.unwrap_or(1.0).min(1.0);
                match metric {
                    Metric::Covariance => model.top_eigenvector().iter().map(|v| c * v).collect(),
                    Metric::Identity => {
                        let mut x = vec![0.0; d];
                        x[0] = c;
                        x
                    }
                }
            }
            _ => return None,
        }
    };
    let g = f.gradient(&witness).ok()?;
    Some((metric.quad(model, &g), witness))
}

#[derive(Debug, Clone, Copy)]
enum Metric {
    Covariance,
    Identity,
}

impl Metric {
    fn quad(self, model: &GaussianModel, g: &[f64]) -> f64 {
        match self {
            Metric::Covariance => model.cov_inner(g, g),
            Metric::Identity => g.iter().map(|v| v * v).sum(),
        }
    }

    fn diag(self, model: &GaussianModel, i: usize) -> f64 {
        match self {
            Metric::Covariance => model.cov()[(i, i)],
            Metric::Identity => 1.0,
        }
    }
}

/// `sup_x <grad f(x), Sigma grad f(x)>`: exact for affine fields, the
/// coordinate max (`max_i Sigma_ii`) and the Euclidean norm (`lambda*`);
/// otherwise multi-start gradient ascent plus random probes, reported as a
/// lower bound.
pub fn estimate_sup_seminorm(
    model: &GaussianModel,
    f: &ScalarField,
    config: &AscentConfig,
    rng: RngStream,
) -> Result<SeminormEstimate> {
    estimate_sup(model, f, config, rng, Metric::Covariance)
}

/// `sup_x |grad f(x)|^2`, by the same machinery with the identity metric.
pub fn estimate_sup_gradient_norm_sq(
    model: &GaussianModel,
    f: &ScalarField,
    config: &AscentConfig,
    rng: RngStream,
) -> Result<SeminormEstimate> {
    estimate_sup(model, f, config, rng, Metric::Identity)
}

fn estimate_sup(
    model: &GaussianModel,
    f: &ScalarField,
    config: &AscentConfig,
    rng: RngStream,
    metric: Metric,
) -> Result<SeminormEstimate> {
    if f.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: f.dim() });
    }
    if let Some((value, witness)) = analytic_seminorm(model, f, metric) {
        return Ok(SeminormEstimate { value, witness, method: SeminormMethod::Analytic, is_exact: true });
    }
    let d = model.dim();
    let objective = |x: &[f64]| -> f64 {
        let mut g = vec![0.0; d];
        f.gradient_into(x, &mut g);
        let v = metric.quad(model, &g);
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    };
    let mean = model.mean().as_slice().to_vec();
    let spread = config.spread;
    let widen = |x: &[f64]| -> Vec<f64> { x.iter().zip(&mean).map(|(x, m)| m + spread * (x - m)).collect() };

    let starts = model.map_draws(config.starts, rng.child(0), widen);
    let climbed = crate::exec::map_tasks(starts.len(), |k| ascend(&objective, starts[k].clone(), config));
    let probes = model.map_draws(config.probes, rng.child(1), |x| {
        let p = widen(x);
        let v = objective(&p);
        (v, p)
    });

    let mut best: Option<(f64, Vec<f64>, SeminormMethod)> = None;
    let candidates = climbed
        .into_iter()
        .map(|(v, x)| (v, x, SeminormMethod::MultistartAscent))
        .chain(probes.into_iter().map(|(v, x)| (v, x, SeminormMethod::RandomSearch)));
    for (v, x, method) in candidates {
        if best.as_ref().is_none_or(|(bv, _, _)| v > *bv) {
            best = Some((v, x, method));
        }
    }
    let (value, witness, method) = match best {
        Some(b) if b.0.is_finite() => b,
        _ => return Err(Error::NonFiniteResult(format!("seminorm objective of {f}"))),
    };
    Ok(SeminormEstimate { value, witness, method, is_exact: false })
}

const MAX_STEP: f64 = 1e3;

/// Gradient ascent with central-difference gradients and backtracking.
fn ascend(objective: &impl Fn(&[f64]) -> f64, mut x: Vec<f64>, config: &AscentConfig) -> (f64, Vec<f64>) {
    let mut value = objective(&x);
    if !value.is_finite() {
        return (value, x);
    }
    let mut step: f64 = 1.0;
    let mut g = vec![0.0; x.len()];
    for _ in 0..config.max_steps {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = 1e-5 * (1.0 + norm);
        let mut p = x.clone();
        for k in 0..x.len() {
            p[k] = x[k] + h;
            let up = objective(&p);
            p[k] = x[k] - h;
            let down = objective(&p);
            p[k] = x[k];
            g[k] = (up - down) / (2.0 * h);
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !gnorm.is_finite() || gnorm < config.grad_tol {
            break;
        }
        let mut accepted = false;
        step = step.min(MAX_STEP);
        for _ in 0..80 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(x, g)| x + step * g).collect();
            let v = objective(&trial);
            // sufficient increase; the 1/2 factor stops two-point oscillation
            if v >= value + 0.5 * step * gnorm * gnorm && v > value {
                x = trial;
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step *= 2.0;
    }
    (value, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `exp(-x^2 / 2s)`.
    Basic,
    /// `E(f - Ef)^+ / x * exp(-x^2 / 2s)`.
    ImprovedMean,
    /// `sqrt(pi) / (2 sqrt(2) x) * sqrt(s) * exp(-x^2 / 2s)`.
    ImprovedConst,
    /// Basic bound with `s = lambda* sup|grad f|^2`.
    GenericLambda,
    /// Basic bound with `s = max_i Sigma_ii`, coordinate max only.
    StrongMoment,
}

impl BoundKind {
    pub const ALL: [BoundKind; 5] =
        [BoundKind::Basic, BoundKind::ImprovedMean, BoundKind::ImprovedConst, BoundKind::GenericLambda, BoundKind::StrongMoment];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::Basic => "basic",
            BoundKind::ImprovedMean => "improved_mean",
            BoundKind::ImprovedConst => "improved_const",
            BoundKind::GenericLambda => "generic_lambda",
            BoundKind::StrongMoment => "strong_moment",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub kind: BoundKind,
    pub seminorm_sq: f64,
    pub mean_pos_part: Option<MCEstimate>,
}

impl BoundSpec {
    pub fn new(kind: BoundKind, seminorm_sq: f64) -> Result<Self> {
        if !(seminorm_sq > 0.0) {
            return Err(Error::NonPositiveInput("seminorm_sq"));
        }
        Ok(Self { kind, seminorm_sq, mean_pos_part: None })
    }

    pub fn with_mean_pos_part(mut self, estimate: MCEstimate) -> Self {
        self.mean_pos_part = Some(estimate);
        self
    }

    /// `lambda* * sup |grad f|^2`.
    pub fn generic_lambda(model: &GaussianModel, sup_gradient_norm_sq: f64) -> Result<Self> {
        Self::new(BoundKind::GenericLambda, model.max_eigenvalue() * sup_gradient_norm_sq)
    }

    /// `max_i Sigma_ii`; rejected unless `field` is the coordinate max.
    pub fn strong_moment(model: &GaussianModel, field: &ScalarField) -> Result<Self> {
        if !field.is_max_coord() {
            return Err(Error::InvalidBoundForField { bound: "strong_moment".into(), field: field.to_string() });
        }
        Self::new(BoundKind::StrongMoment, model.strong_second_moment())
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        match self.kind {
            BoundKind::Basic | BoundKind::GenericLambda | BoundKind::StrongMoment => tail_bound(self.seminorm_sq, x),
            kind => improved_tail_bound(kind, self.seminorm_sq, x, self.mean_pos_part.as_ref()),
        }
    }
}

fn check_positive(seminorm_sq: f64, x: f64) -> Result<()> {
    if !(seminorm_sq > 0.0) {
        return Err(Error::NonPositiveInput("seminorm_sq"));
    }
    if !(x > 0.0) {
        return Err(Error::NonPositiveInput("deviation x"));
    }
    Ok(())
}

/// `min(1, exp(-x^2 / (2 s)))`.
pub fn tail_bound(seminorm_sq: f64, x: f64) -> Result<f64> {
    check_positive(seminorm_sq, x)?;
    Ok((-x * x / (2.0 * seminorm_sq)).exp().min(1.0))
}

/// The two refined bounds. `improved_mean` needs an estimate of `E(f - Ef)^+`.
pub fn improved_tail_bound(kind: BoundKind, seminorm_sq: f64, x: f64, mean_pos_part: Option<&MCEstimate>) -> Result<f64> {
    check_positive(seminorm_sq, x)?;
    let gauss = (-x * x / (2.0 * seminorm_sq)).exp();
    let prefactor = match kind {
        BoundKind::ImprovedMean => mean_pos_part.ok_or(Error::MissingMeanPosPart)?.mean.max(0.0) / x,
        BoundKind::ImprovedConst => PI.sqrt() / (2.0 * 2f64.sqrt() * x) * seminorm_sq.sqrt(),
        other => {
            return Err(Error::InvalidArgument(format!("{} is not an improved bound", other.name())));
        }
    };
    Ok((prefactor * gauss).min(1.0))
}

/// `exp(t^2 s / 2)`.
pub fn mgf_bound(seminorm_sq: f64, t: f64) -> f64 {
    (t * t * seminorm_sq / 2.0).exp()
}

/// `t* = x / s`, the minimiser of `e^{-t x} mgf_bound(s, t)`.
pub fn chernoff_optimal_t(seminorm_sq: f64, x: f64) -> Result<f64> {
    check_positive(seminorm_sq, x)?;
    Ok(x / seminorm_sq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerbstPoint {
    pub t: f64,
    /// `E e^{t f_c}`.
    pub h: MCEstimate,
    /// `E f_c e^{t f_c}`.
    pub h_prime: MCEstimate,
    /// `t s h(t)`.
    pub rhs: f64,
    /// Per-sample `f_c e^{t f_c} - t s e^{t f_c}`, same batch.
    pub difference: MCEstimate,
    /// `h' <= t s h + 3 se`.
    pub holds: bool,
    /// `|h' - t s h| <= 3 se`.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HerbstReport {
    pub seminorm: SeminormEstimate,
    pub mean_estimate: MCEstimate,
    pub points: Vec<HerbstPoint>,
}

/// Estimates `h` and `h'` on one batch for a bounded `f`, centred at its
/// sample mean, and checks `h'(t) <= t s h(t)` at each `t`.
pub fn herbst_differential_check(
    model: &GaussianModel,
    f: &ScalarField,
    t_grid: &[f64],
    n: usize,
    rng: RngStream,
) -> Result<HerbstReport> {
    let seminorm = estimate_sup_seminorm(model, f, &AscentConfig::default(), rng.child(1))?;
    herbst_with_seminorm(model, f, seminorm, t_grid, n, rng.child(0))
}

pub fn herbst_with_seminorm(
    model: &GaussianModel,
    f: &ScalarField,
    seminorm: SeminormEstimate,
    t_grid: &[f64],
    n: usize,
    rng: RngStream,
) -> Result<HerbstReport> {
    if f.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: f.dim() });
    }
    let values = model.map_draws(n, rng, |x| f.evaluate(x));
    let mean_estimate = MCEstimate::from_samples(&values, crate::covrep::DEFAULT_CI_LEVEL)?;
    let centred: Vec<f64> = values.iter().map(|v| v - mean_estimate.mean).collect();
    let s = seminorm.value;
    let mut points = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let e: Vec<f64> = centred.iter().map(|v| (t * v).exp()).collect();
        let fe: Vec<f64> = centred.iter().zip(&e).map(|(v, e)| v * e).collect();
        let diff: Vec<f64> = fe.iter().zip(&e).map(|(a, e)| a - t * s * e).collect();
        let h = estimate(&e, t)?;
        let h_prime = estimate(&fe, t)?;
        let difference = estimate(&diff, t)?;
        let slack = 3.0 * difference.std_error;
        points.push(HerbstPoint {
            t,
            rhs: t * s * h.mean,
            holds: difference.mean <= slack,
            saturated: difference.mean.abs() <= slack,
            h,
            h_prime,
            difference,
        });
    }
    Ok(HerbstReport { seminorm, mean_estimate, points })
}

fn estimate(values: &[f64], t: f64) -> Result<MCEstimate> {
    let (mean, var) = mean_var(values).map_err(|_| Error::NonFiniteResult(format!("exp(t f) overflow at t={t}")))?;
    if !var.is_finite() {
        return Err(Error::NonFiniteResult(format!("exp(t f) variance at t={t}")));
    }
    Ok(MCEstimate::new(mean, (var / values.len() as f64).sqrt(), values.len(), crate::covrep::DEFAULT_CI_LEVEL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m22() -> GaussianModel {
        GaussianModel::from_rows(&[0.0, 0.0], &[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()
    }

    #[test]
    fn pointwise_seminorm() {
        let m = m22();
        let a = ScalarField::linear(vec![1.0, -2.0]);
        for x in [[0.0, 0.0], [5.0, 1.0]] {
            assert_eq!(energy_seminorm_at(&m, &a, &x).unwrap(), m.cov_inner(&[1.0, -2.0], &[1.0, -2.0]));
        }
        let d = GaussianModel::diagonal(&[0.0; 3], &[1.0, 5.0, 2.0]).unwrap();
        let mx = ScalarField::max_coord(3);
        assert_eq!(energy_seminorm_at(&d, &mx, &[0.0, 1.0, 0.5]).unwrap(), 5.0);
        let t = ScalarField::parse("tanh(x1)", 2).unwrap();
        assert_abs_diff_eq!(energy_seminorm_at(&m, &t, &[0.0, 0.0]).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_seminorms() {
        let m = m22();
        let rng = RngStream::new(1, 0);
        let cfg = AscentConfig::default();
        let lin = estimate_sup_seminorm(&m, &ScalarField::linear(vec![1.0, 1.0]), &cfg, rng).unwrap();
        assert!(lin.is_exact);
        assert_eq!(lin.value, 6.0);
        let parsed = estimate_sup_seminorm(&m, &ScalarField::parse("2*x1 - x2/2 + 3", 2).unwrap(), &cfg, rng).unwrap();
        assert!(parsed.is_exact);
        assert_abs_diff_eq!(parsed.value, m.cov_inner(&[2.0, -0.5], &[2.0, -0.5]), epsilon = 1e-14);

        let d = GaussianModel::diagonal(&[0.0, 0.0], &[1.0, 4.0]).unwrap();
        let mx = estimate_sup_seminorm(&d, &ScalarField::max_coord(2), &cfg, rng).unwrap();
        assert!(mx.is_exact);
        assert_eq!(mx.value, 4.0);
        assert_eq!(energy_seminorm_at(&d, &ScalarField::max_coord(2), &mx.witness).unwrap(), 4.0);
        let tr = estimate_sup_seminorm(&d, &ScalarField::max_coord(2).truncate(10.0).unwrap(), &cfg, rng).unwrap();
        assert_eq!(tr.value, 4.0);

        let norm = estimate_sup_seminorm(&m, &ScalarField::euclidean_norm(2), &cfg, rng).unwrap();
        assert!(norm.is_exact);
        assert_abs_diff_eq!(norm.value, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ascent_finds_tanh_peak() {
        let m = GaussianModel::standard(2).unwrap();
        let f = ScalarField::parse("tanh(x1)+tanh(x2)", 2).unwrap();
        let est = estimate_sup_seminorm(&m, &f, &AscentConfig::default(), RngStream::new(9, 0)).unwrap();
        assert!(!est.is_exact);
        assert!((est.value - 2.0).abs() < 1e-6, "{est:?}");
        let again = energy_seminorm_at(&m, &f, &est.witness).unwrap();
        assert!((again - est.value).abs() < 1e-12);
    }

    #[test]
    fn bound_examples() {
        assert_abs_diff_eq!(tail_bound(1.0, 1.0).unwrap(), 0.6065306597126334, epsilon = 1e-15);
        assert_eq!(tail_bound(1.0, 10.0).unwrap(), (-50.0f64).exp());
        assert_eq!(tail_bound(4.0, 2.0).unwrap(), tail_bound(1.0, 1.0).unwrap());
        assert!(matches!(tail_bound(0.0, 1.0), Err(Error::NonPositiveInput(_))));
        assert!(matches!(tail_bound(1.0, -1.0), Err(Error::NonPositiveInput(_))));

        let c = improved_tail_bound(BoundKind::ImprovedConst, 1.0, 1.0, None).unwrap();
        let prefactor = PI.sqrt() / (2.0 * 2f64.sqrt());
        assert_abs_diff_eq!(prefactor, 0.6266570686577501, epsilon = 1e-15);
        assert_abs_diff_eq!(c, 0.6266570686577501 * 0.6065306597126334, epsilon = 1e-15);
        assert_abs_diff_eq!(c, 0.3800867252665702, epsilon = 1e-15);
        assert!(c < tail_bound(1.0, 1.0).unwrap());

        assert!(matches!(
            improved_tail_bound(BoundKind::ImprovedMean, 1.0, 1.0, None),
            Err(Error::MissingMeanPosPart)
        ));
        let tiny = MCEstimate::exact(1e-12, 10, 0.95);
        assert!(improved_tail_bound(BoundKind::ImprovedMean, 1.0, 1.0, Some(&tiny)).unwrap() < 1e-12);
    }

    #[test]
    fn mgf_and_chernoff() {
        assert_eq!(mgf_bound(1.0, 0.0), 1.0);
        assert_eq!(mgf_bound(1.0, 1.0), 0.5f64.exp());
        assert_eq!(mgf_bound(2.0, -1.0), 1f64.exp());
        let t = chernoff_optimal_t(1.0, 1.0).unwrap();
        assert_eq!(t, 1.0);
        assert_abs_diff_eq!((-t).exp() * mgf_bound(1.0, t), (-0.5f64).exp(), epsilon = 1e-16);
        assert_eq!(chernoff_optimal_t(4.0, 2.0).unwrap(), 0.5);
        assert!(chernoff_optimal_t(1.0, 0.0).is_err());
    }

    #[test]
    fn bound_spec_validation() {
        let m = m22();
        assert!(matches!(
            BoundSpec::strong_moment(&m, &ScalarField::euclidean_norm(2)),
            Err(Error::InvalidBoundForField { .. })
        ));
        let s = BoundSpec::strong_moment(&m, &ScalarField::max_coord(2)).unwrap();
        assert_eq!(s.seminorm_sq, 2.0);
        let g = BoundSpec::generic_lambda(&m, 1.0).unwrap();
        assert_abs_diff_eq!(g.seminorm_sq, 3.0, epsilon = 1e-12);
        assert!(BoundSpec::new(BoundKind::Basic, 0.0).is_err());
        assert_eq!(BoundKind::from_name("improved_const"), Some(BoundKind::ImprovedConst));
    }

    #[test]
    fn herbst_at_zero_is_centred() {
        let m = GaussianModel::standard(1).unwrap();
        let f = ScalarField::coordinate(1, 0);
        let r = herbst_differential_check(&m, &f, &[0.0, 0.5], 20_000, RngStream::new(3, 0)).unwrap();
        assert!(r.points[0].h_prime.mean.abs() < 1e-15);
        assert!(r.points[0].holds);
        assert!(r.points.iter().all(|p| p.saturated));
    }
}
