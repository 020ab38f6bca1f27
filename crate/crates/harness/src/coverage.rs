//! Monte-Carlo coverage of bootstrap intervals.

use std::collections::BTreeMap;

use rayon::prelude::*;
use simest_core::inference::bootstrap_confidence;
use simest_core::rng::{self, derive_seed};
use simest_core::simulate::SimulatorSpec;
use simest_core::{Estimator, Matrix2};

use crate::config::{ScenarioConfig, SeedTag};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRow {
    pub parameter_index: usize,
    pub sample_size: usize,
    pub coverage: f64,
    pub mc_se: f64,
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub scenario: String,
    pub replications: usize,
    pub rows: Vec<CoverageRow>,
    pub metadata: BTreeMap<String, String>,
}

impl CoverageReport {
    pub fn row(&self, parameter_index: usize, sample_size: usize) -> Option<&CoverageRow> {
        self.rows
            .iter()
            .find(|r| r.parameter_index == parameter_index && r.sample_size == sample_size)
    }

    /// Coverage averaged over parameters at one sample size.
    pub fn mean_coverage(&self, sample_size: usize) -> Option<f64> {
        let cells: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.sample_size == sample_size)
            .map(|r| r.coverage)
            .collect();
        (!cells.is_empty()).then(|| cells.iter().sum::<f64>() / cells.len() as f64)
    }
}

/// Sample sizes, replication count and seed of a coverage run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSettings {
    pub scenario: String,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
}

/// Point estimate and one interval per parameter for a dataset; the second
/// argument is a seed reserved for that dataset.
pub type IntervalFn<'a> =
    dyn Fn(&Matrix2, u64) -> simest_core::Result<(Vec<f64>, Vec<(f64, f64)>)> + Sync + 'a;

struct Cell {
    covered: Vec<bool>,
    error: Vec<f64>,
}

/// Replication `r` draws θ and then one dataset per sample size, in order,
/// from stream `r` of the seed. Replications run in parallel and are merged
/// in index order.
pub fn coverage_experiment_with(
    settings: &CoverageSettings,
    spec: &SimulatorSpec,
    interval: &IntervalFn<'_>,
) -> Result<CoverageReport> {
    let sizes = &settings.sample_sizes;
    let p = spec.param_dim();
    let per_rep: Vec<Vec<Cell>> = (0..settings.replications)
        .into_par_iter()
        .map(|r| -> Result<Vec<Cell>> {
            let mut rng = rng::stream(settings.seed, r as u64);
            let theta = spec.draw_params(&mut rng)?;
            let mut cells = Vec::with_capacity(sizes.len());
            for (j, &n) in sizes.iter().enumerate() {
                let data = spec.simulate_dataset(&theta, n, &mut rng)?;
                let tag = (r * sizes.len() + j) as u64;
                let (point, ivs) = interval(&data, derive_seed(settings.seed, tag))?;
                cells.push(Cell {
                    covered: ivs
                        .iter()
                        .zip(&theta)
                        .map(|(&(lo, hi), &t)| lo <= t && t <= hi)
                        .collect(),
                    error: point.iter().zip(&theta).map(|(e, t)| e - t).collect(),
                });
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    let reps = settings.replications as f64;
    let mut rows = Vec::with_capacity(p * sizes.len());
    for k in 0..p {
        for (j, &n) in sizes.iter().enumerate() {
            let hits = per_rep.iter().filter(|cells| cells[j].covered[k]).count();
            let errs: Vec<f64> = per_rep.iter().map(|cells| cells[j].error[k]).collect();
            let c = hits as f64 / reps;
            rows.push(CoverageRow {
                parameter_index: k,
                sample_size: n,
                coverage: c,
                mc_se: (c * (1.0 - c) / reps).sqrt(),
                bias: errs.iter().sum::<f64>() / reps,
                rmse: (errs.iter().map(|e| e * e).sum::<f64>() / reps).sqrt(),
            });
        }
    }
    let mut metadata = BTreeMap::new();
    metadata.insert("seed".to_string(), settings.seed.to_string());
    Ok(CoverageReport {
        scenario: settings.scenario.clone(),
        replications: settings.replications,
        rows,
        metadata,
    })
}

/// Coverage of parametric-bootstrap percentile intervals for `estimator`
/// under the scenario's simulator, sample sizes and budgets.
pub fn coverage_experiment<E: Estimator + ?Sized>(
    cfg: &ScenarioConfig,
    estimator: &E,
) -> Result<CoverageReport> {
    let settings = CoverageSettings {
        scenario: cfg.scenario.clone(),
        sample_sizes: cfg.eval_sample_sizes.clone(),
        replications: cfg.replications,
        seed: cfg.derived_seed(SeedTag::Coverage),
    };
    let boot = cfg.bootstrap_config();
    let spec = &cfg.simulator;
    let interval = |data: &Matrix2, seed: u64| {
        let res = bootstrap_confidence(estimator, spec, data, &boot, seed)?;
        Ok((res.point, res.intervals))
    };
    let mut report = coverage_experiment_with(&settings, spec, &interval)?;
    report.metadata.insert("master_seed".into(), cfg.seed.to_string());
    report.metadata.insert("level".into(), boot.level.to_string());
    report.metadata.insert("bootstrap_replicates".into(), boot.replicates.to_string());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use simest_core::simulate::{NormalMeanSpec, RegressionSpec};

    fn settings(reps: usize) -> CoverageSettings {
        CoverageSettings { scenario: "t".into(), sample_sizes: vec![10, 40], replications: reps, seed: 3 }
    }

    #[test]
    fn always_covering_interval_gives_full_coverage() {
        let spec = SimulatorSpec::Regression(RegressionSpec::linear());
        let p = spec.param_dim();
        let interval = |_: &Matrix2, _: u64| Ok((vec![0.0; p], vec![(f64::NEG_INFINITY, f64::INFINITY); p]));
        let rep = coverage_experiment_with(&settings(25), &spec, &interval).unwrap();
        assert_eq!(rep.rows.len(), p * 2);
        for row in &rep.rows {
            assert_eq!(row.coverage, 1.0);
            assert_eq!(row.mc_se, 0.0);
        }
    }

    #[test]
    fn never_covering_interval_and_error_summaries() {
        let spec = SimulatorSpec::NormalMean(NormalMeanSpec::default());
        let interval = |_: &Matrix2, _: u64| Ok((vec![1.0], vec![(f64::NAN, f64::NAN)]));
        let rep = coverage_experiment_with(&settings(40), &spec, &interval).unwrap();
        // errors are 1 − θ, recompute from the same streams
        let thetas: Vec<f64> = (0..40)
            .map(|r| spec.draw_params(&mut rng::stream(3, r)).unwrap()[0])
            .collect();
        let bias = thetas.iter().map(|t| 1.0 - t).sum::<f64>() / 40.0;
        for row in &rep.rows {
            assert_eq!(row.coverage, 0.0);
            assert!((row.bias - bias).abs() < 1e-12);
        }
    }

    #[test]
    fn mc_se_is_binomial() {
        let spec = SimulatorSpec::NormalMean(NormalMeanSpec::default());
        let interval = |_: &Matrix2, s: u64| {
            let hit = s % 3 == 0;
            Ok((vec![0.0], vec![if hit { (f64::NEG_INFINITY, f64::INFINITY) } else { (f64::NAN, f64::NAN) }]))
        };
        let rep = coverage_experiment_with(&settings(60), &spec, &interval).unwrap();
        for row in &rep.rows {
            let c = row.coverage;
            assert_eq!(row.mc_se, (c * (1.0 - c) / 60.0).sqrt());
        }
    }
}
