//! Linear/logistic regression data with optional covariate missingness.
//!
//! A dataset has columns `(y, 1, x1, .., xm)` and, when missingness is
//! enabled, two trailing indicator columns `(m1, m2)` marking the entries of
//! `x1` and `x2` that were overwritten with 0.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Linear,
    Logistic,
}

/// Logistic models for the missingness of `x1` and `x2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingnessSpec {
    /// Applied to `(1, x2)`.
    pub beta_m1: [f64; 2],
    /// Applied to `(1, x1, x3, x1·x3)`.
    pub beta_m2: [f64; 4],
}

impl Default for MissingnessSpec {
    fn default() -> Self {
        Self {
            beta_m1: [-1.0, 0.5],
            beta_m2: [0.0, 0.5, 0.25, 0.5],
        }
    }
}

fn default_n_covariates() -> usize {
    3
}
fn default_offdiag() -> f64 {
    0.1
}
fn default_one() -> f64 {
    1.0
}
fn default_prior_sd() -> f64 {
    std::f64::consts::SQRT_2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionSpec {
    pub outcome: Outcome,
    #[serde(default = "default_n_covariates")]
    pub n_covariates: usize,
    #[serde(default = "default_offdiag")]
    pub covariate_offdiag: f64,
    #[serde(default = "default_one")]
    pub covariate_var: f64,
    #[serde(default = "default_one")]
    pub error_sd: f64,
    #[serde(default = "default_prior_sd")]
    pub param_prior_sd: f64,
    #[serde(default)]
    pub missingness: Option<MissingnessSpec>,
}

impl RegressionSpec {
    pub fn linear() -> Self {
        Self {
            outcome: Outcome::Linear,
            n_covariates: 3,
            covariate_offdiag: 0.1,
            covariate_var: 1.0,
            error_sd: 1.0,
            param_prior_sd: std::f64::consts::SQRT_2,
            missingness: None,
        }
    }

    pub fn linear_missing() -> Self {
        Self {
            missingness: Some(MissingnessSpec::default()),
            ..Self::linear()
        }
    }

    pub fn logistic() -> Self {
        Self {
            outcome: Outcome::Logistic,
            ..Self::linear()
        }
    }

    pub fn param_dim(&self) -> usize {
        self.n_covariates + 1
    }

    pub fn dataset_cols(&self) -> usize {
        let base = 1 + self.param_dim();
        if self.missingness.is_some() {
            base + 2
        } else {
            base
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec!["y".to_string(), "intercept".to_string()];
        names.extend((1..=self.n_covariates).map(|i| format!("x{i}")));
        if self.missingness.is_some() {
            names.push("m1".into());
            names.push("m2".into());
        }
        names
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_covariates == 0 {
            return Err(Error::config("n_covariates", "must be at least 1"));
        }
        if self.missingness.is_some() && self.n_covariates != 3 {
            return Err(Error::config(
                "n_covariates",
                "the missingness model is defined for exactly 3 covariates",
            ));
        }
        if !(self.error_sd >= 0.0 && self.error_sd.is_finite()) {
            return Err(Error::config("error_sd", "must be non-negative"));
        }
        if !(self.param_prior_sd > 0.0 && self.param_prior_sd.is_finite()) {
            return Err(Error::config("param_prior_sd", "must be positive"));
        }
        self.covariate_cholesky().map(|_| ())
    }

    /// Lower Cholesky factor of the exchangeable covariate covariance.
    pub fn covariate_cholesky(&self) -> Result<DMatrix<f64>> {
        let m = self.n_covariates;
        let cov = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.covariate_var
            } else {
                self.covariate_offdiag
            }
        });
        cov.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::config("covariate_offdiag", "covariance matrix is not positive definite"))
    }
}

pub fn inv_logit(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Independent `N(0, param_prior_sd²)` coefficients (intercept first).
pub fn draw_regression_params<R: Rng + ?Sized>(spec: &RegressionSpec, rng: &mut R) -> Vec<f64> {
    (0..spec.param_dim())
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            spec.param_prior_sd * z
        })
        .collect()
}

/// `n × (m+1)` design: an intercept column of ones followed by exchangeable
/// multivariate normal covariates.
pub fn simulate_covariates<R: Rng + ?Sized>(
    n: usize,
    spec: &RegressionSpec,
    rng: &mut R,
) -> Result<Matrix2> {
    if n == 0 {
        return Err(Error::Input("sample size must be at least 1".into()));
    }
    let chol = spec.covariate_cholesky()?;
    let m = spec.n_covariates;
    let mut values = Vec::with_capacity(n * (m + 1));
    for _ in 0..n {
        let z = DVector::from_fn(m, |_, _| StandardNormal.sample(rng));
        let x = &chol * z;
        values.push(1.0);
        values.extend(x.iter());
    }
    Matrix2::new(n, m + 1, values)
}

pub fn simulate_outcome<R: Rng + ?Sized>(
    design: &Matrix2,
    theta: &[f64],
    spec: &RegressionSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if theta.len() != design.cols() {
        return Err(Error::Dimension {
            axis: "coefficients",
            expected: design.cols(),
            got: theta.len(),
        });
    }
    let mut y = Vec::with_capacity(design.rows());
    for r in 0..design.rows() {
        let eta: f64 = design.row(r).iter().zip(theta).map(|(x, t)| x * t).sum();
        y.push(match spec.outcome {
            Outcome::Linear => {
                let e: f64 = StandardNormal.sample(rng);
                eta + spec.error_sd * e
            }
            Outcome::Logistic => {
                let u: f64 = rng.random();
                if u < inv_logit(eta) {
                    1.0
                } else {
                    0.0
                }
            }
        });
    }
    Ok(y)
}

/// Mask `x1`/`x2` with probabilities computed from the pre-masking values and
/// append indicator columns. Draws two uniforms per row (`x1` first).
pub fn apply_missingness<R: Rng + ?Sized>(
    design: &Matrix2,
    mspec: &MissingnessSpec,
    rng: &mut R,
) -> Result<Matrix2> {
    let uniforms: Vec<f64> = (0..2 * design.rows()).map(|_| rng.random()).collect();
    apply_missingness_with_uniforms(design, mspec, &uniforms)
}

/// Deterministic core of [`apply_missingness`]; `uniforms` holds
/// `(u1, u2)` per row.
pub fn apply_missingness_with_uniforms(
    design: &Matrix2,
    mspec: &MissingnessSpec,
    uniforms: &[f64],
) -> Result<Matrix2> {
    if design.cols() != 4 {
        return Err(Error::Dimension {
            axis: "design columns",
            expected: 4,
            got: design.cols(),
        });
    }
    if uniforms.len() != 2 * design.rows() {
        return Err(Error::Dimension {
            axis: "uniform draws",
            expected: 2 * design.rows(),
            got: uniforms.len(),
        });
    }
    let mut values = Vec::with_capacity(design.rows() * 6);
    for r in 0..design.rows() {
        let row = design.row(r);
        let (x1, x2, x3) = (row[1], row[2], row[3]);
        let p1 = inv_logit(mspec.beta_m1[0] + mspec.beta_m1[1] * x2);
        let b = &mspec.beta_m2;
        let p2 = inv_logit(b[0] + b[1] * x1 + b[2] * x3 + b[3] * x1 * x3);
        let m1 = uniforms[2 * r] < p1;
        let m2 = uniforms[2 * r + 1] < p2;
        values.extend_from_slice(&[
            row[0],
            if m1 { 0.0 } else { x1 },
            if m2 { 0.0 } else { x2 },
            x3,
            f64::from(u8::from(m1)),
            f64::from(u8::from(m2)),
        ]);
    }
    Matrix2::new(design.rows(), 6, values)
}

/// Prepend the outcome as the first column.
pub fn assemble_regression_dataset(y: &[f64], covariates: &Matrix2) -> Result<Matrix2> {
    if y.len() != covariates.rows() {
        return Err(Error::Dimension {
            axis: "rows",
            expected: covariates.rows(),
            got: y.len(),
        });
    }
    let cols = covariates.cols() + 1;
    let mut values = Vec::with_capacity(y.len() * cols);
    for (r, &yr) in y.iter().enumerate() {
        values.push(yr);
        values.extend_from_slice(covariates.row(r));
    }
    Matrix2::new(y.len(), cols, values)
}

/// One full dataset at coefficients `theta`.
pub fn simulate_regression_dataset<R: Rng + ?Sized>(
    spec: &RegressionSpec,
    theta: &[f64],
    n: usize,
    rng: &mut R,
) -> Result<Matrix2> {
    let design = simulate_covariates(n, spec, rng)?;
    let y = simulate_outcome(&design, theta, spec, rng)?;
    let covariates = match &spec.missingness {
        Some(m) => apply_missingness(&design, m, rng)?,
        None => design,
    };
    assemble_regression_dataset(&y, &covariates)
}
