//! Generative models yielding `(parameter, dataset)` pairs.

pub mod genetics;
pub mod regression;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Matrix2, Tensor3};

pub use genetics::{
    bin2int, int2bin, project_to_simplex, simulate_genotypes, simulate_htfs, GeneticsSpec,
    GenotypeMatrix,
};
pub use regression::{
    apply_missingness, apply_missingness_with_uniforms, assemble_regression_dataset,
    draw_regression_params, simulate_covariates, simulate_outcome, MissingnessSpec, Outcome,
    RegressionSpec,
};

fn default_prior_sd() -> f64 {
    std::f64::consts::SQRT_2
}
fn default_noise_sd() -> f64 {
    1.0
}

/// Normal location model: `θ ~ N(0, prior_sd²)`, samples `x ~ N(θ, noise_sd²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalMeanSpec {
    #[serde(default = "default_prior_sd")]
    pub prior_sd: f64,
    #[serde(default = "default_noise_sd")]
    pub noise_sd: f64,
}

impl Default for NormalMeanSpec {
    fn default() -> Self {
        Self {
            prior_sd: default_prior_sd(),
            noise_sd: default_noise_sd(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SimulatorSpec {
    NormalMean(NormalMeanSpec),
    Regression(RegressionSpec),
    Genetics(GeneticsSpec),
}

/// Datasets at a common sample size with their generating parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedBatch {
    pub data: Tensor3,
    pub params: Matrix2,
    pub sample_size: usize,
}

fn normal_density(x: f64, sd: f64) -> f64 {
    (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

impl SimulatorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            SimulatorSpec::NormalMean(s) => {
                if !(s.prior_sd > 0.0 && s.prior_sd.is_finite()) {
                    return Err(Error::config("prior_sd", "must be positive"));
                }
                if !(s.noise_sd >= 0.0 && s.noise_sd.is_finite()) {
                    return Err(Error::config("noise_sd", "must be non-negative"));
                }
                Ok(())
            }
            SimulatorSpec::Regression(s) => s.validate(),
            SimulatorSpec::Genetics(s) => s.validate(),
        }
    }

    /// Columns of one simulated dataset.
    pub fn input_cols(&self) -> usize {
        match self {
            SimulatorSpec::NormalMean(_) => 1,
            SimulatorSpec::Regression(s) => s.dataset_cols(),
            SimulatorSpec::Genetics(s) => s.n_loci,
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            SimulatorSpec::NormalMean(_) => 1,
            SimulatorSpec::Regression(s) => s.param_dim(),
            SimulatorSpec::Genetics(s) => s.n_haplotypes(),
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        match self {
            SimulatorSpec::NormalMean(_) => vec!["x".into()],
            SimulatorSpec::Regression(s) => s.column_names(),
            SimulatorSpec::Genetics(s) => s.column_names(),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match self {
            SimulatorSpec::NormalMean(_) => vec!["theta".into()],
            SimulatorSpec::Regression(s) => (0..s.param_dim()).map(|i| format!("beta{i}")).collect(),
            SimulatorSpec::Genetics(s) => (0..s.n_haplotypes()).map(|i| format!("htf_{i}")).collect(),
        }
    }

    /// Draw from the training distribution of the parameters.
    pub fn draw_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            SimulatorSpec::NormalMean(s) => {
                let z: f64 = StandardNormal.sample(rng);
                Ok(vec![s.prior_sd * z])
            }
            SimulatorSpec::Regression(s) => Ok(draw_regression_params(s, rng)),
            SimulatorSpec::Genetics(s) => simulate_htfs(s, rng),
        }
    }

    /// Density of the training distribution. Haplotype frequencies use the
    /// Dirichlet density on the simplex and 0 off it.
    pub fn prior_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.param_dim() {
            return 0.0;
        }
        match self {
            SimulatorSpec::NormalMean(s) => normal_density(theta[0], s.prior_sd),
            SimulatorSpec::Regression(s) => theta.iter().map(|&t| normal_density(t, s.param_prior_sd)).product(),
            SimulatorSpec::Genetics(s) => {
                if genetics::check_simplex(theta, 1e-9).is_err() {
                    return 0.0;
                }
                let d = theta.len() as f64;
                let a = s.alpha;
                let log_norm = libm::lgamma(d * a) - d * libm::lgamma(a);
                let log_kernel: f64 = theta.iter().map(|&p| (a - 1.0) * p.ln()).sum();
                let v = (log_norm + log_kernel).exp();
                if v.is_nan() {
                    0.0
                } else {
                    v
                }
            }
        }
    }

    /// Parameter value usable for simulation: haplotype frequency estimates
    /// are projected onto the simplex, others pass through.
    pub fn simulation_params(&self, estimate: &[f64]) -> Result<Vec<f64>> {
        if estimate.len() != self.param_dim() {
            return Err(Error::Dimension {
                axis: "parameter",
                expected: self.param_dim(),
                got: estimate.len(),
            });
        }
        match self {
            SimulatorSpec::Genetics(_) => project_to_simplex(estimate),
            _ => Ok(estimate.to_vec()),
        }
    }

    /// Whether `theta` can be passed to [`Self::simulate_dataset`].
    pub fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == self.param_dim()
            && match self {
                SimulatorSpec::Genetics(_) => genetics::check_simplex(theta, 1e-9).is_ok(),
                _ => theta.iter().all(|t| t.is_finite()),
            }
    }

    /// One `n × input_cols` dataset at parameter `theta`.
    pub fn simulate_dataset<R: Rng + ?Sized>(
        &self,
        theta: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<Matrix2> {
        if theta.len() != self.param_dim() {
            return Err(Error::Dimension {
                axis: "parameter",
                expected: self.param_dim(),
                got: theta.len(),
            });
        }
        match self {
            SimulatorSpec::NormalMean(s) => {
                let values = (0..n)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        theta[0] + s.noise_sd * z
                    })
                    .collect();
                Matrix2::new(n, 1, values)
            }
            SimulatorSpec::Regression(s) => regression::simulate_regression_dataset(s, theta, n, rng),
            SimulatorSpec::Genetics(s) => Ok(simulate_genotypes(n, s, theta, rng)?.to_matrix()),
        }
    }
}

/// `b` independent `(θ, dataset)` pairs sharing sample size `n`.
pub fn draw_training_batch<R: Rng + ?Sized>(
    spec: &SimulatorSpec,
    b: usize,
    n: usize,
    rng: &mut R,
) -> Result<SimulatedBatch> {
    let k = spec.input_cols();
    let p = spec.param_dim();
    let mut data = Vec::with_capacity(b * n * k);
    let mut params = Vec::with_capacity(b * p);
    for _ in 0..b {
        let theta = spec.draw_params(rng)?;
        let d = spec.simulate_dataset(&theta, n, rng)?;
        data.extend_from_slice(d.values());
        params.extend_from_slice(&theta);
    }
    Ok(SimulatedBatch {
        data: Tensor3::new(b, n, k, data)?,
        params: Matrix2::new(b, p, params)?,
        sample_size: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn specs() -> Vec<SimulatorSpec> {
        vec![
            SimulatorSpec::NormalMean(NormalMeanSpec::default()),
            SimulatorSpec::Regression(RegressionSpec::linear()),
            SimulatorSpec::Regression(RegressionSpec::linear_missing()),
            SimulatorSpec::Regression(RegressionSpec::logistic()),
            SimulatorSpec::Genetics(GeneticsSpec::default()),
        ]
    }

    #[test]
    fn batch_shapes() {
        for spec in specs() {
            let batch = draw_training_batch(&spec, 300, 37, &mut rng::stream(1, 0)).unwrap();
            assert_eq!(batch.data.batch(), 300);
            assert_eq!(batch.data.samples(), 37);
            assert_eq!(batch.data.cols(), spec.input_cols());
            assert_eq!(batch.params.rows(), 300);
            assert_eq!(batch.params.cols(), spec.param_dim());
            assert_eq!(batch.sample_size, 37);

            let one = draw_training_batch(&spec, 1, 10, &mut rng::stream(1, 0)).unwrap();
            assert_eq!((one.data.batch(), one.params.rows()), (1, 1));
        }
    }

    #[test]
    fn batches_are_seeded() {
        for spec in specs() {
            let a = draw_training_batch(&spec, 5, 20, &mut rng::stream(9, 2)).unwrap();
            let b = draw_training_batch(&spec, 5, 20, &mut rng::stream(9, 2)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn genetics_params_on_simplex() {
        let spec = SimulatorSpec::Genetics(GeneticsSpec { n_loci: 3, alpha: 0.5 });
        let batch = draw_training_batch(&spec, 200, 5, &mut rng::stream(2, 0)).unwrap();
        for r in 0..200 {
            let row = batch.params.row(r);
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn prior_densities() {
        let nm = SimulatorSpec::NormalMean(NormalMeanSpec::default());
        let v = nm.prior_density(&[0.0]);
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI * 2.0).sqrt()).abs() < 1e-15);
        // Dirichlet(1,1,1,1) is uniform with density Γ(4) = 6 on the simplex
        let g = SimulatorSpec::Genetics(GeneticsSpec::default());
        assert!((g.prior_density(&[0.1, 0.2, 0.3, 0.4]) - 6.0).abs() < 1e-12);
        assert_eq!(g.prior_density(&[0.5, 0.6, -0.1, 0.0]), 0.0);
        assert_eq!(g.prior_density(&[0.5, 0.6, 0.1, 0.0]), 0.0);
    }

    #[test]
    fn spec_json_is_tagged() {
        let spec: SimulatorSpec = serde_json::from_str(r#"{"type":"genetics","n_loci":3}"#).unwrap();
        assert_eq!(spec, SimulatorSpec::Genetics(GeneticsSpec { n_loci: 3, alpha: 1.0 }));
        let bad = serde_json::from_str::<SimulatorSpec>(r#"{"type":"genetics","loci":3}"#);
        assert!(bad.is_err());
    }
}
