//! TOML run configuration. Command-line flags override file values.

use gaussrep::concentration::BoundKind;
use gaussrep::{GaussianModel, ScalarField};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub mean: Option<Vec<f64>>,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub identity: Option<usize>,
    pub diagonal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    /// `linear`, `coordinate`, `max_coord`, `euclidean_norm` or `constant`.
    pub builtin: Option<String>,
    pub expression: Option<String>,
    pub coefficients: Option<Vec<f64>>,
    /// One-based coordinate for `coordinate`.
    pub index: Option<usize>,
    pub value: Option<f64>,
    pub truncate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub t: Vec<f64>,
    pub s: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelSpec>,
    pub f: Option<FieldSpec>,
    pub g: Option<FieldSpec>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub samples_per_node: Option<usize>,
    pub quad_nodes: Option<usize>,
    pub ci_level: Option<f64>,
    /// verify-representation: also evaluate the Ornstein–Uhlenbeck form.
    pub ou: Option<bool>,
    /// charfn-check: explicit frequency pairs.
    pub pairs: Option<Vec<PairSpec>>,
    /// charfn-check: additional random pairs in the ball of `radius`.
    pub random_pairs: Option<usize>,
    pub radius: Option<f64>,
    /// tail-certify: deviation levels.
    pub x_levels: Option<Vec<f64>>,
    pub bounds: Option<Vec<String>>,
    /// herbst: MGF parameters.
    pub t_grid: Option<Vec<f64>>,
    /// seminorm ascent settings.
    pub starts: Option<usize>,
    pub probes: Option<usize>,
    pub max_steps: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<String>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn build_model(&self) -> Result<GaussianModel, ConfigError> {
        let Some(spec) = &self.model else {
            return err("missing [model] table");
        };
        let given = [spec.covariance.is_some(), spec.identity.is_some(), spec.diagonal.is_some()];
        if given.iter().filter(|b| **b).count() != 1 {
            return err("[model] needs exactly one of `covariance`, `identity`, `diagonal`");
        }
        let dim = spec
            .covariance
            .as_ref()
            .map(Vec::len)
            .or(spec.identity)
            .or(spec.diagonal.as_ref().map(Vec::len))
            .unwrap_or(0);
        if dim == 0 {
            return err("[model] dimension must be positive");
        }
        let mean = spec.mean.clone().unwrap_or_else(|| vec![0.0; dim]);
        if mean.len() != dim {
            return err(format!("[model] mean has length {}, covariance has dimension {dim}", mean.len()));
        }
        let rows: Vec<Vec<f64>> = if let Some(c) = &spec.covariance {
            c.clone()
        } else if let Some(v) = &spec.diagonal {
            (0..dim).map(|i| (0..dim).map(|j| if i == j { v[i] } else { 0.0 }).collect()).collect()
        } else {
            (0..dim).map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
        };
        GaussianModel::from_rows(&mean, &rows).map_err(|e| ConfigError(format!("[model] {e}")))
    }

    pub fn build_f(&self, dim: usize) -> Result<ScalarField, ConfigError> {
        match &self.f {
            Some(spec) => build_field(spec, dim, "f"),
            None => err("missing [f] table"),
        }
    }

    /// `[g]`, defaulting to `[f]`.
    pub fn build_g(&self, dim: usize) -> Result<ScalarField, ConfigError> {
        match &self.g {
            Some(spec) => build_field(spec, dim, "g"),
            None => self.build_f(dim),
        }
    }

    pub fn bound_kinds(&self) -> Result<Vec<BoundKind>, ConfigError> {
        let names = self.bounds.clone().unwrap_or_else(|| vec!["basic".into(), "improved_const".into()]);
        names
            .iter()
            .map(|n| BoundKind::from_name(n).ok_or_else(|| ConfigError(format!("unknown bound kind `{n}`"))))
            .collect()
    }

    pub fn ci_level(&self) -> Result<f64, ConfigError> {
        let level = self.ci_level.unwrap_or(0.95);
        if !(level > 0.0 && level < 1.0) {
            return err(format!("ci_level {level} must lie in (0, 1)"));
        }
        Ok(level)
    }

    pub fn quad_nodes(&self) -> Result<usize, ConfigError> {
        match self.quad_nodes.unwrap_or(gaussrep::quadrature::DEFAULT_NODES) {
            0 => err("quad_nodes must be positive"),
            k => Ok(k),
        }
    }

    pub fn samples(&self, default: usize) -> Result<usize, ConfigError> {
        match self.samples.unwrap_or(default) {
            n if n < 2 => err("samples must be at least 2"),
            n => Ok(n),
        }
    }
}

fn build_field(spec: &FieldSpec, dim: usize, name: &str) -> Result<ScalarField, ConfigError> {
    let wrap = |e: gaussrep::Error| ConfigError(format!("[{name}] {e}"));
    let field = match (&spec.builtin, &spec.expression) {
        (Some(_), Some(_)) => return err(format!("[{name}] give either `builtin` or `expression`, not both")),
        (None, None) => return err(format!("[{name}] needs `builtin` or `expression`")),
        (None, Some(text)) => ScalarField::parse(text, dim).map_err(wrap)?,
        (Some(b), None) => match b.as_str() {
            "linear" => {
                let Some(a) = spec.coefficients.clone() else {
                    return err(format!("[{name}] linear needs `coefficients`"));
                };
                if a.len() != dim {
                    return err(format!("[{name}] coefficients have length {}, model dimension is {dim}", a.len()));
                }
                ScalarField::linear(a)
            }
            "coordinate" => match spec.index {
                Some(i) if (1..=dim).contains(&i) => ScalarField::coordinate(dim, i - 1),
                _ => return err(format!("[{name}] coordinate needs `index` in 1..={dim}")),
            },
            "max_coord" => ScalarField::max_coord(dim),
            "euclidean_norm" => ScalarField::euclidean_norm(dim),
            "constant" => ScalarField::constant(dim, spec.value.unwrap_or(0.0)),
            other => return err(format!("[{name}] unknown builtin `{other}`")),
        },
    };
    match spec.truncate {
        Some(level) => field.truncate(level).map_err(wrap),
        None => Ok(field),
    }
}
