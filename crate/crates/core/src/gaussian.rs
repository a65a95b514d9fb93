//! Gaussian models `N(mu, Sigma)` with a cached PSD square root, spectral
//! summaries, and plain or interpolated (coupled) sampling.

use crate::error::{Error, Result};
use crate::exec;
use crate::rng::RngStream;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_REL_TOL: f64 = 1e-10;

/// Immutable `N(mu, Sigma)` with `Sigma^{1/2}`, `lambda*` and `sigma*^2` cached.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    dim: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    sqrt_cov: DMatrix<f64>,
    lambda_star: f64,
    sigma_star_sq: f64,
    top_eigenvector: DVector<f64>,
    // row-major copies for the sampling hot loops
    cov_rows: Vec<f64>,
    sqrt_rows: Vec<f64>,
}

impl GaussianModel {
    /// Validates `sigma` (symmetric, PSD up to `1e-10 * |Sigma|_F`) and caches
    /// its square root from the symmetric eigendecomposition.
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let dim = mu.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if sigma.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: sigma.nrows() });
        }
        if sigma.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: sigma.ncols() });
        }
        if mu.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteResult("model parameters must be finite".into()));
        }
        let asymmetry = (&sigma - sigma.transpose()).amax();
        if asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let sigma = (&sigma + sigma.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sigma.clone());
        let tol = PSD_REL_TOL * sigma.norm();
        let mut values = eig.eigenvalues.clone();
        for v in values.iter_mut() {
            if *v < -tol {
                return Err(Error::NotPsd { eigenvalue: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let q = &eig.eigenvectors;
        let root = DMatrix::from_diagonal(&values.map(f64::sqrt));
        let sqrt_cov = q * root * q.transpose();
        let sqrt_cov = (&sqrt_cov + sqrt_cov.transpose()) * 0.5;

        let (top, lambda_star) = values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        let sigma_star_sq = sigma.diagonal().max();
        let top_eigenvector = q.column(top).into_owned();

        let cov_rows = row_major(&sigma);
        let sqrt_rows = row_major(&sqrt_cov);
        Ok(Self {
            dim,
            mean: mu,
            cov: sigma,
            sqrt_cov,
            lambda_star,
            sigma_star_sq,
            top_eigenvector,
            cov_rows,
            sqrt_rows,
        })
    }

    /// Convenience constructor from plain slices; `sigma` is given row by row.
    pub fn from_rows(mu: &[f64], sigma: &[Vec<f64>]) -> Result<Self> {
        let d = mu.len();
        if sigma.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: sigma.len() });
        }
        for row in sigma {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: row.len() });
            }
        }
        let m = DMatrix::from_fn(d, d, |i, j| sigma[i][j]);
        Self::new(DVector::from_column_slice(mu), m)
    }

    pub fn standard(dim: usize) -> Result<Self> {
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim))
    }

    pub fn diagonal(mu: &[f64], variances: &[f64]) -> Result<Self> {
        if mu.len() != variances.len() {
            return Err(Error::DimensionMismatch { expected: mu.len(), found: variances.len() });
        }
        Self::new(
            DVector::from_column_slice(mu),
            DMatrix::from_diagonal(&DVector::from_column_slice(variances)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn sqrt_cov(&self) -> &DMatrix<f64> {
        &self.sqrt_cov
    }

    /// Largest eigenvalue of `Sigma`, the weak second moment
    /// `sup_{|u|=1} E<X - mu, u>^2`.
    pub fn max_eigenvalue(&self) -> f64 {
        self.lambda_star
    }

    /// `max_i Var X_i`.
    pub fn strong_second_moment(&self) -> f64 {
        self.sigma_star_sq
    }

    /// Unit eigenvector for `lambda*`.
    pub fn top_eigenvector(&self) -> &DVector<f64> {
        &self.top_eigenvector
    }

    /// `<Sigma a, b>`.
    pub fn cov_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim;
        let mut acc = 0.0;
        for (row, bi) in self.cov_rows.chunks_exact(d).zip(b) {
            let sa: f64 = row.iter().zip(a).map(|(s, x)| s * x).sum();
            acc += sa * bi;
        }
        acc
    }

    /// `Sigma v`.
    pub fn apply_cov(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        mat_vec(&self.cov_rows, v, &mut out);
        out
    }

    /// `Sigma^{1/2} v`.
    pub fn apply_sqrt(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        mat_vec(&self.sqrt_rows, v, &mut out);
        out
    }

    /// `mu + Sigma^{1/2} z`, written into `out`.
    pub fn transform_into(&self, z: &[f64], out: &mut [f64]) {
        mat_vec(&self.sqrt_rows, z, out);
        for (o, m) in out.iter_mut().zip(self.mean.iter()) {
            *o += m;
        }
    }

    /// Draws `n` rows of `X ~ N(mu, Sigma)` and maps each through `f`.
    /// Row order and values depend only on `rng` and `n`.
    pub fn map_draws<T, F>(&self, n: usize, rng: RngStream, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync + Send,
    {
        let d = self.dim;
        exec::map_rows(n, |chunk, range| {
            let mut r = rng.chunk_rng(chunk);
            let mut z = vec![0.0; d];
            let mut x = vec![0.0; d];
            range
                .map(|_| {
                    fill_normal(&mut r, &mut z);
                    self.transform_into(&z, &mut x);
                    f(&x)
                })
                .collect()
        })
    }

    /// Draws `n` pairs from the interpolated coupling
    /// `X = mu + S Z1`, `Y = mu + S (alpha Z1 + sqrt(1 - alpha^2) Z2)` and maps
    /// each pair through `f`. At `alpha = 1` the pair is bit-identical.
    pub fn map_coupled<T, F>(&self, alpha: f64, n: usize, rng: RngStream, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&[f64], &[f64]) -> T + Sync + Send,
    {
        check_alpha(alpha)?;
        let d = self.dim;
        let beta = (1.0 - alpha * alpha).max(0.0).sqrt();
        Ok(exec::map_rows(n, |chunk, range| {
            let mut r = rng.chunk_rng(chunk);
            let mut z1 = vec![0.0; d];
            let mut z2 = vec![0.0; d];
            let mut w = vec![0.0; d];
            let mut x = vec![0.0; d];
            let mut y = vec![0.0; d];
            range
                .map(|_| {
                    fill_normal(&mut r, &mut z1);
                    fill_normal(&mut r, &mut z2);
                    self.transform_into(&z1, &mut x);
                    if alpha == 1.0 {
                        y.copy_from_slice(&x);
                    } else {
                        for i in 0..d {
                            w[i] = alpha * z1[i] + beta * z2[i];
                        }
                        self.transform_into(&w, &mut y);
                    }
                    f(&x, &y)
                })
                .collect()
        }))
    }

    /// `n x d` matrix of draws from `N(mu, Sigma)`.
    pub fn sample(&self, n: usize, rng: RngStream) -> Draws {
        let rows = self.map_draws(n, rng, |x| x.to_vec());
        Draws::from_rows(self.dim, rows)
    }

    /// Paired draws from the coupling at `alpha`.
    pub fn sample_coupled(&self, alpha: f64, n: usize, rng: RngStream) -> Result<CoupledSampleBatch> {
        let pairs = self.map_coupled(alpha, n, rng, |x, y| (x.to_vec(), y.to_vec()))?;
        let (xs, ys): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        Ok(CoupledSampleBatch {
            alpha,
            x_samples: Draws::from_rows(self.dim, xs),
            y_samples: Draws::from_rows(self.dim, ys),
            seed: rng.seed,
        })
    }
}

/// Builds a model; see [`GaussianModel::new`].
pub fn build_model(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<GaussianModel> {
    GaussianModel::new(mu, sigma)
}

pub fn sample_gaussian(model: &GaussianModel, n: usize, rng: RngStream) -> Draws {
    model.sample(n, rng)
}

pub fn sample_coupled(model: &GaussianModel, alpha: f64, n: usize, rng: RngStream) -> Result<CoupledSampleBatch> {
    model.sample_coupled(alpha, n, rng)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

fn fill_normal<R: Rng>(rng: &mut R, z: &mut [f64]) {
    for v in z.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

fn mat_vec(rows: &[f64], v: &[f64], out: &mut [f64]) {
    let d = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = rows[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum();
    }
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Row-major `n x d` sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Draws {
    dim: usize,
    data: Vec<f64>,
}

impl Draws {
    fn from_rows(dim: usize, rows: Vec<Vec<f64>>) -> Self {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            data.extend(r);
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Sample cross-covariance `Cov(self_i, other_j)` (divisor `n`).
    pub fn cross_covariance(&self, other: &Draws) -> DMatrix<f64> {
        let (ma, mb) = (self.mean(), other.mean());
        let n = self.len() as f64;
        let mut c = DMatrix::zeros(self.dim, other.dim);
        for (ra, rb) in self.rows().zip(other.rows()) {
            for i in 0..self.dim {
                for j in 0..other.dim {
                    c[(i, j)] += (ra[i] - ma[i]) * (rb[j] - mb[j]);
                }
            }
        }
        c / n
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.cross_covariance(self)
    }
}

/// Paired draws `(X_alpha, Y_alpha)`.
#[derive(Debug, Clone)]
pub struct CoupledSampleBatch {
    pub alpha: f64,
    pub x_samples: Draws,
    pub y_samples: Draws,
    pub seed: u64,
}
