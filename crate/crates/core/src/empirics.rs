//! Empirical tail probabilities and certification of the bound family.

use crate::concentration::{
    estimate_sup_gradient_norm_sq, estimate_sup_seminorm, mgf_bound, AscentConfig, BoundKind, BoundSpec,
    SeminormEstimate,
};
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::gaussian::GaussianModel;
use crate::rng::RngStream;
use crate::stats::{clopper_pearson, mean_var, normal_quantile_two_sided, MCEstimate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const TAIL_CI_LEVEL: f64 = 0.99;
pub const MIN_TAIL_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

impl Verdict {
    /// Holds when the whole interval lies below the bound, violated when it
    /// lies strictly above.
    pub fn from_interval(lower: f64, upper: f64, bound: f64) -> Self {
        if upper <= bound {
            Verdict::Holds
        } else if lower > bound {
            Verdict::Violated
        } else {
            Verdict::Inconclusive
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub x: f64,
    /// Frequency of `f(X) - E^f >= x` on the indicator half.
    pub empirical: MCEstimate,
    pub count: usize,
    pub cp_lower: f64,
    pub cp_upper: f64,
    pub bounds: BTreeMap<BoundKind, f64>,
    pub verdicts: BTreeMap<BoundKind, Verdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSweep {
    /// `E^f` from the first half of the batch.
    pub mean_estimate: MCEstimate,
    pub points: Vec<TailPoint>,
}

/// One batch of `n` draws: the first half estimates `E f`, the second half
/// (disjoint) counts exceedances of every level in `x_levels`.
pub fn empirical_tail(model: &GaussianModel, f: &ScalarField, x_levels: &[f64], n: usize, rng: RngStream) -> Result<TailSweep> {
    if n < MIN_TAIL_SAMPLES {
        return Err(Error::InvalidArgument(format!("tail estimation needs n >= {MIN_TAIL_SAMPLES}, got {n}")));
    }
    if f.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: f.dim() });
    }
    if let Some(x) = x_levels.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("deviation level {x} must be finite and nonnegative")));
    }
    let values = model.map_draws(n, rng, |x| f.evaluate(x));
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteResult(format!("value of {f} in tail batch")));
    }
    let (head, tail) = values.split_at(n / 2);
    let mean_estimate = MCEstimate::from_samples(head, crate::covrep::DEFAULT_CI_LEVEL)?;
    let m = tail.len();
    let z = normal_quantile_two_sided(TAIL_CI_LEVEL);
    let points = x_levels
        .iter()
        .map(|&x| {
            let threshold = mean_estimate.mean + x;
            let count = tail.iter().filter(|&&v| v >= threshold).count();
            let p = count as f64 / m as f64;
            let se = (p * (1.0 - p) / m as f64).sqrt();
            let (cp_lower, cp_upper) = clopper_pearson(count, m, TAIL_CI_LEVEL);
            TailPoint {
                x,
                empirical: MCEstimate { mean: p, std_error: se, n: m, ci_level: TAIL_CI_LEVEL, ci_half_width: z * se },
                count,
                cp_lower,
                cp_upper,
                bounds: BTreeMap::new(),
                verdicts: BTreeMap::new(),
            }
        })
        .collect();
    Ok(TailSweep { mean_estimate, points })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub dim: usize,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub lambda_star: f64,
    pub sigma_star_sq: f64,
}

impl ModelSummary {
    pub fn of(model: &GaussianModel) -> Self {
        let d = model.dim();
        Self {
            dim: d,
            mean: model.mean().as_slice().to_vec(),
            covariance: (0..d).map(|i| (0..d).map(|j| model.cov()[(i, j)]).collect()).collect(),
            lambda_star: model.max_eigenvalue(),
            sigma_star_sq: model.strong_second_moment(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub model: ModelSummary,
    pub field: String,
    pub seminorm: SeminormEstimate,
    /// Bounds from a non-exact seminorm may be optimistic.
    pub possibly_optimistic: bool,
    /// Seminorm value each bound kind was evaluated with.
    pub bound_seminorms: BTreeMap<BoundKind, f64>,
    pub mean_estimate: MCEstimate,
    pub mean_pos_part: Option<MCEstimate>,
    pub points: Vec<TailPoint>,
    pub overall: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CertifyOptions {
    pub ascent: AscentConfig,
    /// Overrides the estimated seminorm for the basic and improved bounds.
    pub seminorm_override: Option<f64>,
}


/// Evaluates every requested bound at every level against the empirical
/// tail. Fails overall only on a `Violated` verdict.
pub fn certify(
    model: &GaussianModel,
    f: &ScalarField,
    x_levels: &[f64],
    bound_kinds: &[BoundKind],
    n: usize,
    rng: RngStream,
) -> Result<CertificationReport> {
    certify_with(model, f, x_levels, bound_kinds, n, rng, &CertifyOptions::default())
}

pub fn certify_with(
    model: &GaussianModel,
    f: &ScalarField,
    x_levels: &[f64],
    bound_kinds: &[BoundKind],
    n: usize,
    rng: RngStream,
    options: &CertifyOptions,
) -> Result<CertificationReport> {
    if bound_kinds.contains(&BoundKind::StrongMoment) && !f.is_max_coord() {
        return Err(Error::InvalidBoundForField { bound: "strong_moment".into(), field: f.to_string() });
    }
    if x_levels.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::NonPositiveInput("deviation x"));
    }
    let mut seminorm = estimate_sup_seminorm(model, f, &options.ascent, rng.child(3))?;
    if let Some(s) = options.seminorm_override {
        seminorm.value = s;
    }
    let sweep = empirical_tail(model, f, x_levels, n, rng.child(1))?;

    let mut specs = Vec::new();
    let mut mean_pos_part = None;
    for &kind in bound_kinds {
        let spec = match kind {
            BoundKind::Basic | BoundKind::ImprovedConst => BoundSpec::new(kind, seminorm.value)?,
            BoundKind::ImprovedMean => {
                let est = mean_positive_part(model, f, n, rng.child(2))?;
                mean_pos_part = Some(est);
                BoundSpec::new(kind, seminorm.value)?.with_mean_pos_part(est)
            }
            BoundKind::GenericLambda => {
                let g = estimate_sup_gradient_norm_sq(model, f, &options.ascent, rng.child(4))?;
                BoundSpec::generic_lambda(model, g.value)?
            }
            BoundKind::StrongMoment => BoundSpec::strong_moment(model, f)?,
        };
        specs.push(spec);
    }

    let mut points = sweep.points;
    for p in &mut points {
        for spec in &specs {
            let b = spec.evaluate(p.x)?;
            p.bounds.insert(spec.kind, b);
            p.verdicts.insert(spec.kind, Verdict::from_interval(p.cp_lower, p.cp_upper, b));
        }
    }
    let overall = points.iter().all(|p| p.verdicts.values().all(|v| *v != Verdict::Violated));
    Ok(CertificationReport {
        model: ModelSummary::of(model),
        field: f.to_string(),
        possibly_optimistic: !seminorm.is_exact,
        bound_seminorms: specs.iter().map(|s| (s.kind, s.seminorm_sq)).collect(),
        seminorm,
        mean_estimate: sweep.mean_estimate,
        mean_pos_part,
        points,
        overall,
    })
}

/// `E(f - E f)^+` with the centring mean from the same batch.
pub fn mean_positive_part(model: &GaussianModel, f: &ScalarField, n: usize, rng: RngStream) -> Result<MCEstimate> {
    let values = model.map_draws(n, rng, |x| f.evaluate(x));
    let (mean, _) = mean_var(&values)?;
    let pos: Vec<f64> = values.iter().map(|v| (v - mean).max(0.0)).collect();
    MCEstimate::from_samples(&pos, crate::covrep::DEFAULT_CI_LEVEL)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MgfPoint {
    pub t: f64,
    /// `E^ e^{t (f - E^f)}` with a normal interval at the tail level.
    pub empirical: MCEstimate,
    pub bound: f64,
    pub verdict: Verdict,
    /// `|empirical - bound| <= 3 se`.
    pub saturated: bool,
}

/// Compares the empirical MGF of the centred field with `exp(t^2 s / 2)`.
pub fn mgf_empirical_check(
    model: &GaussianModel,
    f: &ScalarField,
    seminorm_sq: f64,
    t_grid: &[f64],
    n: usize,
    rng: RngStream,
) -> Result<Vec<MgfPoint>> {
    if f.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: f.dim() });
    }
    let values = model.map_draws(n, rng, |x| f.evaluate(x));
    let (mean, _) = mean_var(&values)?;
    t_grid
        .iter()
        .map(|&t| {
            let e: Vec<f64> = values.iter().map(|v| (t * (v - mean)).exp()).collect();
            let est = MCEstimate::from_samples(&e, TAIL_CI_LEVEL)
                .map_err(|_| Error::NonFiniteResult(format!("empirical MGF at t={t}")))?;
            if !est.std_error.is_finite() {
                return Err(Error::NonFiniteResult(format!("empirical MGF variance at t={t}")));
            }
            let bound = mgf_bound(seminorm_sq, t);
            Ok(MgfPoint {
                t,
                verdict: Verdict::from_interval(est.lower(), est.upper(), bound),
                saturated: (est.mean - bound).abs() <= 3.0 * est.std_error,
                empirical: est,
                bound,
            })
        })
        .collect()
}
