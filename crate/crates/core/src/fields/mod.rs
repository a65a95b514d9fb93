//! Scalar fields `f: R^d -> R` with gradients, the expression language,
//! truncation, and the complex exponentials `x -> e^{i<t,x>}`.

pub mod dual;
pub mod expr;
pub mod parser;

use crate::error::{Error, Result};
use dual::Dual;
pub use expr::Expr;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    Analytic,
    ForwardAutodiff,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldBody {
    Constant(f64),
    Linear(Vec<f64>),
    MaxCoord,
    EuclideanNorm,
    Expression(Expr),
    /// `clamp(f, -level, level)`.
    Truncated { inner: Box<ScalarField>, level: f64 },
}

/// Differentiable `f: R^d -> R`. Immutable and shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    dim: usize,
    body: FieldBody,
    mode: GradientMode,
}

impl ScalarField {
    pub fn constant(dim: usize, value: f64) -> Self {
        Self { dim, body: FieldBody::Constant(value), mode: GradientMode::Analytic }
    }

    /// `x -> <a, x>`.
    pub fn linear(a: Vec<f64>) -> Self {
        Self { dim: a.len(), body: FieldBody::Linear(a), mode: GradientMode::Analytic }
    }

    /// `x -> <e_i, x>` for zero-based `i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut a = vec![0.0; dim];
        a[i] = 1.0;
        Self::linear(a)
    }

    pub fn max_coord(dim: usize) -> Self {
        Self { dim, body: FieldBody::MaxCoord, mode: GradientMode::Analytic }
    }

    pub fn euclidean_norm(dim: usize) -> Self {
        Self { dim, body: FieldBody::EuclideanNorm, mode: GradientMode::Analytic }
    }

    /// Parses an expression; gradients use forward-mode autodiff.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        Ok(Self::from_expr(parser::parse(text, dim)?, dim))
    }

    pub fn from_expr(expr: Expr, dim: usize) -> Self {
        Self { dim, body: FieldBody::Expression(expr), mode: GradientMode::ForwardAutodiff }
    }

    /// Same field with gradients taken by central differences.
    pub fn with_finite_differences(mut self) -> Self {
        self.mode = GradientMode::FiniteDifference;
        self
    }

    /// `x -> clamp(f(x), -level, level)`.
    pub fn truncate(&self, level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(Error::NonPositiveInput("truncation level"));
        }
        let mode = match self.mode {
            GradientMode::FiniteDifference => GradientMode::FiniteDifference,
            _ => GradientMode::Analytic,
        };
        Ok(Self { dim: self.dim, body: FieldBody::Truncated { inner: Box::new(self.clone()), level }, mode })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn body(&self) -> &FieldBody {
        &self.body
    }

    pub fn gradient_mode(&self) -> GradientMode {
        self.mode
    }

    pub fn is_max_coord(&self) -> bool {
        match &self.body {
            FieldBody::MaxCoord => true,
            FieldBody::Truncated { inner, .. } => inner.is_max_coord(),
            _ => false,
        }
    }

    /// `(a, c)` when `f(x) = <a, x> + c` structurally.
    pub fn affine(&self) -> Option<(Vec<f64>, f64)> {
        match &self.body {
            FieldBody::Constant(c) => Some((vec![0.0; self.dim], *c)),
            FieldBody::Linear(a) => Some((a.clone(), 0.0)),
            FieldBody::Expression(e) => e.affine(self.dim),
            _ => None,
        }
    }

    /// Value at `x`. Non-finite values are returned as-is; see
    /// [`try_evaluate`](Self::try_evaluate).
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match &self.body {
            FieldBody::Constant(c) => *c,
            FieldBody::Linear(a) => a.iter().zip(x).map(|(a, x)| a * x).sum(),
            FieldBody::MaxCoord => x[argmax(x)],
            FieldBody::EuclideanNorm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            FieldBody::Expression(e) => e.eval::<f64>(&|i| x[i]),
            FieldBody::Truncated { inner, level } => inner.evaluate(x).clamp(-level, *level),
        }
    }

    pub fn try_evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        finite(self.evaluate(x), "field value")
    }

    /// Gradient at `x` written into `out`. At kinks of `max`/`abs` the
    /// lowest-index / sign-zero subgradient is used.
    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        if self.mode == GradientMode::FiniteDifference {
            central_difference(|p| self.evaluate(p), x, out);
            return;
        }
        match &self.body {
            FieldBody::Constant(_) => out.fill(0.0),
            FieldBody::Linear(a) => out.copy_from_slice(a),
            FieldBody::MaxCoord => {
                out.fill(0.0);
                out[argmax(x)] = 1.0;
            }
            FieldBody::EuclideanNorm => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (o, v) in out.iter_mut().zip(x) {
                    *o = if r > 0.0 { v / r } else { 0.0 };
                }
            }
            FieldBody::Expression(e) => {
                for (k, o) in out.iter_mut().enumerate() {
                    let d = e.eval::<Dual>(&|i| Dual::new(x[i], if i == k { 1.0 } else { 0.0 }));
                    *o = d.d;
                }
            }
            FieldBody::Truncated { inner, level } => {
                if inner.evaluate(x).abs() < *level {
                    inner.gradient_into(x, out);
                } else {
                    out.fill(0.0);
                }
            }
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut g = vec![0.0; self.dim];
        self.gradient_into(x, &mut g);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult(format!("gradient of {self} at {x:?}")));
        }
        Ok(g)
    }

    /// Central-difference gradient with step `1e-5 (1 + |x|)`, regardless of mode.
    pub fn finite_difference_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        central_difference(|p| self.evaluate(p), x, &mut g);
        g
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.len() });
        }
        Ok(())
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            FieldBody::Constant(c) => write!(f, "constant({c})"),
            FieldBody::Linear(a) => {
                write!(f, "linear(")?;
                for (k, v) in a.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            FieldBody::MaxCoord => write!(f, "max_coord"),
            FieldBody::EuclideanNorm => write!(f, "euclidean_norm"),
            FieldBody::Expression(e) => write!(f, "{e}"),
            FieldBody::Truncated { inner, level } => write!(f, "truncate({inner}, {level})"),
        }
    }
}

/// Lowest index attaining the maximum.
pub fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate().skip(1) {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], out: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let h = 1e-5 * (1.0 + norm);
    let mut p = x.to_vec();
    for (k, o) in out.iter_mut().enumerate() {
        p[k] = x[k] + h;
        let up = f(&p);
        p[k] = x[k] - h;
        let down = f(&p);
        p[k] = x[k];
        *o = (up - down) / (2.0 * h);
    }
}

pub(crate) fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteResult(format!("{what} is {v}")))
    }
}

/// Parses `text` as a field on `R^dim`.
pub fn parse_expression(text: &str, dim: usize) -> Result<ScalarField> {
    ScalarField::parse(text, dim)
}

pub fn truncate(field: &ScalarField, level: f64) -> Result<ScalarField> {
    field.truncate(level)
}

/// `(sum_i df/dx_i, sum_i (df/dx_i)^2)` for the coordinate max at `x`.
pub fn max_coord_gradient_identity(dim: usize, x: &[f64]) -> Result<(f64, f64)> {
    let g = ScalarField::max_coord(dim).gradient(x)?;
    Ok((g.iter().sum(), g.iter().map(|v| v * v).sum()))
}

/// `x -> e^{i<t, x>}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexExponentialField {
    pub frequency: Vec<f64>,
}

impl ComplexExponentialField {
    pub fn new(frequency: Vec<f64>) -> Self {
        Self { frequency }
    }

    pub fn evaluate(&self, x: &[f64]) -> Complex64 {
        let phase: f64 = self.frequency.iter().zip(x).map(|(t, x)| t * x).sum();
        Complex64::from_polar(1.0, phase)
    }

    /// `i t e^{i<t, x>}`.
    pub fn gradient(&self, x: &[f64]) -> Vec<Complex64> {
        let v = self.evaluate(x) * Complex64::i();
        self.frequency.iter().map(|t| v * t).collect()
    }
}
