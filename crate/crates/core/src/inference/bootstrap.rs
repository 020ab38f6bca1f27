use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::simulate::SimulatorSpec;
use crate::tensor::Matrix2;

use super::{estimate_one, simulate_and_estimate};

fn default_level() -> f64 {
    0.95
}
fn default_replicates() -> usize {
    5000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { level: default_level(), replicates: default_replicates() }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::config("level", "must lie in (0, 1)"));
        }
        if self.replicates < 10 {
            return Err(Error::config(
                "replicates",
                format!("need at least 10 bootstrap replicates, got {}", self.replicates),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceResult {
    pub point: Vec<f64>,
    pub replicates: Matrix2,
    pub level: f64,
    pub intervals: Vec<(f64, f64)>,
    pub sample_size: usize,
}

impl ConfidenceResult {
    /// Percentile intervals at another level from the same replicates.
    pub fn intervals_at(&self, level: f64) -> Result<Vec<(f64, f64)>> {
        percentile_intervals(&self.replicates, level)
    }
}

/// Linear interpolation between order statistics (the usual "type 7" rule).
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Equal-tailed percentile interval per column.
pub fn percentile_intervals(replicates: &Matrix2, level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::config("level", "must lie in (0, 1)"));
    }
    if replicates.rows() == 0 {
        return Err(Error::InsufficientSamples { kind: "bootstrap replicates", n: 0 });
    }
    let alpha = (1.0 - level) / 2.0;
    Ok((0..replicates.cols())
        .map(|c| {
            let mut col = replicates.column(c);
            col.sort_unstable_by(f64::total_cmp);
            (quantile_type7(&col, alpha), quantile_type7(&col, 1.0 - alpha))
        })
        .collect())
}

/// Parametric bootstrap at the point estimate of `data`. Replicate `i` is
/// simulated from stream `i` of `seed`.
pub fn bootstrap_confidence<E: Estimator + ?Sized>(
    estimator: &E,
    spec: &SimulatorSpec,
    data: &Matrix2,
    cfg: &BootstrapConfig,
    seed: u64,
) -> Result<ConfidenceResult> {
    cfg.validate()?;
    if estimator.output_dim() != spec.param_dim() {
        return Err(Error::Dimension {
            axis: "output dimension",
            expected: spec.param_dim(),
            got: estimator.output_dim(),
        });
    }
    let n = data.rows();
    let point = estimate_one(estimator, data)?;
    let theta = spec.simulation_params(&point)?;
    let params = vec![theta; cfg.replicates];
    let replicates = simulate_and_estimate(estimator, spec, &params, n, seed, 0)?;
    let intervals = percentile_intervals(&replicates, cfg.level)?;
    Ok(ConfidenceResult { point, replicates, level: cfg.level, intervals, sample_size: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::SampleMean;
    use crate::rng;
    use crate::simulate::{GeneticsSpec, NormalMeanSpec};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_data(n: usize, seed: u64) -> Matrix2 {
        let mut r = rng::stream(seed, 0);
        let v = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
        Matrix2::new(n, 1, v).unwrap()
    }

    #[test]
    fn quantile_rule() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_type7(&xs, 0.0), 1.0);
        assert_eq!(quantile_type7(&xs, 1.0), 4.0);
        assert_eq!(quantile_type7(&xs, 0.5), 2.5);
        assert!((quantile_type7(&xs, 0.25) - 1.75).abs() < 1e-15);
        assert_eq!(quantile_type7(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn zero_noise_collapses_interval() {
        let spec = SimulatorSpec::NormalMean(NormalMeanSpec { prior_sd: 1.0, noise_sd: 0.0 });
        let data = Matrix2::new(5, 1, vec![0.3; 5]).unwrap();
        let cfg = BootstrapConfig { level: 0.9, replicates: 50 };
        let res = bootstrap_confidence(&SampleMean::single_column(), &spec, &data, &cfg, 1).unwrap();
        for &(lo, hi) in &res.intervals {
            assert_eq!(lo, hi);
        }
        assert_eq!(res.sample_size, 5);
    }

    #[test]
    fn half_width_matches_normal_theory() {
        let spec = SimulatorSpec::NormalMean(NormalMeanSpec::default());
        let data = normal_data(100, 3);
        let res = bootstrap_confidence(&SampleMean::single_column(), &spec, &data, &BootstrapConfig::default(), 5)
            .unwrap();
        let (lo, hi) = res.intervals[0];
        let half = (hi - lo) / 2.0;
        assert!((half / 0.196 - 1.0).abs() < 0.15, "half width {half}");
        assert_eq!(res.replicates.rows(), 5000);
    }

    #[test]
    fn too_few_replicates_is_config_error() {
        let spec = SimulatorSpec::NormalMean(NormalMeanSpec::default());
        let cfg = BootstrapConfig { level: 0.95, replicates: 9 };
        let err = bootstrap_confidence(&SampleMean::single_column(), &spec, &normal_data(10, 1), &cfg, 1);
        assert!(matches!(err, Err(Error::Config { .. })));
    }

    #[test]
    fn negative_genetics_estimate_cannot_be_projected() {
        // a fake estimator that always returns negative frequencies
        struct Negative;
        impl Estimator for Negative {
            fn input_cols(&self) -> usize {
                2
            }
            fn output_dim(&self) -> usize {
                4
            }
            fn estimate(&self, b: &crate::tensor::Tensor3) -> Result<Matrix2> {
                Matrix2::new(b.batch(), 4, vec![-0.1; 4 * b.batch()])
            }
        }
        let spec = SimulatorSpec::Genetics(GeneticsSpec::default());
        let data = Matrix2::new(3, 2, vec![0.0, 1.0, 2.0, 1.0, 1.0, 1.0]).unwrap();
        let err = bootstrap_confidence(&Negative, &spec, &data, &BootstrapConfig::default(), 1);
        assert!(matches!(err, Err(Error::Degenerate(_))));
    }

    #[test]
    fn batched_equals_individual() {
        let spec = SimulatorSpec::NormalMean(NormalMeanSpec::default());
        let data = normal_data(30, 8);
        let cfg = BootstrapConfig { level: 0.95, replicates: 600 };
        let est = SampleMean::single_column();
        let res = bootstrap_confidence(&est, &spec, &data, &cfg, 2).unwrap();
        for i in [0usize, 249, 250, 599] {
            let d = spec.simulate_dataset(&res.point, 30, &mut rng::stream(2, i as u64)).unwrap();
            assert_eq!(estimate_one(&est, &d).unwrap()[0], res.replicates.get(i, 0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn intervals_nest_by_level(seed in any::<u64>(), rows in 10usize..200) {
            let mut r = rng::stream(seed, 0);
            let v: Vec<f64> = (0..rows * 2).map(|_| r.random_range(-5.0..5.0)).collect();
            let reps = Matrix2::new(rows, 2, v).unwrap();
            let narrow = percentile_intervals(&reps, 0.95).unwrap();
            let wide = percentile_intervals(&reps, 0.99).unwrap();
            for (a, b) in narrow.iter().zip(&wide) {
                prop_assert!(a.0 <= a.1);
                prop_assert!(b.0 <= a.0 && a.1 <= b.1);
            }
        }
    }
}
