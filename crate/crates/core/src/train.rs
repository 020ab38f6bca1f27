//! Simulation-driven training loop.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::layers::{mse_grad, mse_loss};
use crate::network::{Loss, NetworkModel};
use crate::optim::{adam_step, AdamState};
use crate::rng;
use crate::simulate::{draw_training_batch, SimulatorSpec};
use crate::tensor::Matrix2;

fn default_lr() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub datasets_per_batch: usize,
    pub sample_size_range: (usize, usize),
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub loss: Loss,
}

impl TrainingConfig {
    /// 1000 epochs of 100 batches with 300 datasets each.
    pub fn full_scale(sample_size_range: (usize, usize), seed: u64) -> Self {
        Self {
            epochs: 1000,
            batches_per_epoch: 100,
            datasets_per_batch: 300,
            sample_size_range,
            learning_rate: default_lr(),
            seed,
            loss: Loss::Mse,
        }
    }

    /// 100 epochs of 20 batches with 200 datasets each.
    pub fn desk_scale(sample_size_range: (usize, usize), seed: u64) -> Self {
        Self {
            epochs: 100,
            batches_per_epoch: 20,
            datasets_per_batch: 200,
            ..Self::full_scale(sample_size_range, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.sample_size_range;
        if lo < 2 {
            return Err(Error::config("sample_size_range", "minimum sample size must be at least 2"));
        }
        if lo > hi {
            return Err(Error::config("sample_size_range", format!("n_min {lo} exceeds n_max {hi}")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if self.epochs > 0 && self.batches_per_epoch > 0 && self.datasets_per_batch == 0 {
            return Err(Error::config("datasets_per_batch", "must be positive"));
        }
        Ok(())
    }

    pub fn total_datasets(&self) -> u64 {
        self.epochs as u64 * self.batches_per_epoch as u64 * self.datasets_per_batch as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchRecord {
    pub epoch: usize,
    pub batch: usize,
    pub n: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub batches: Vec<BatchRecord>,
    pub epoch_means: Vec<f64>,
    pub wall_time_secs: f64,
    pub total_datasets: u64,
}

impl TrainingTrace {
    pub fn losses(&self) -> Vec<f64> {
        self.batches.iter().map(|b| b.loss).collect()
    }
}

fn check_dims(model: &NetworkModel, spec: &SimulatorSpec) -> Result<()> {
    if model.input_cols() != spec.input_cols() {
        return Err(Error::Dimension {
            axis: "input columns",
            expected: spec.input_cols(),
            got: model.input_cols(),
        });
    }
    if model.output_dim() != spec.param_dim() {
        return Err(Error::Dimension {
            axis: "output dimension",
            expected: spec.param_dim(),
            got: model.output_dim(),
        });
    }
    Ok(())
}

/// Train `model` on freshly simulated batches. Batch `t` (counted across
/// epochs) draws its sample size and data from stream `t` of `cfg.seed`.
pub fn train(
    mut model: NetworkModel,
    spec: &SimulatorSpec,
    cfg: &TrainingConfig,
) -> Result<(NetworkModel, TrainingTrace)> {
    cfg.validate()?;
    spec.validate()?;
    check_dims(&model, spec)?;
    let start = Instant::now();
    let mut params = model.params();
    let mut adam = AdamState::with_defaults(params.len(), cfg.learning_rate)?;
    let mut batches = Vec::with_capacity(cfg.epochs * cfg.batches_per_epoch);
    let mut epoch_means = Vec::with_capacity(cfg.epochs);
    let (lo, hi) = cfg.sample_size_range;

    for epoch in 0..cfg.epochs {
        let mut epoch_sum = 0.0;
        for b in 0..cfg.batches_per_epoch {
            let t = (epoch * cfg.batches_per_epoch + b) as u64;
            let mut r = rng::stream(cfg.seed, t);
            let n = r.random_range(lo..=hi);
            let batch = draw_training_batch(spec, cfg.datasets_per_batch, n, &mut r)?;
            let (pred, tape) = model.forward_recorded(&batch.data)?;
            let loss = mse_loss(&pred, &batch.params)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { batch: t as usize, n });
            }
            let grad = model.backward(&tape, &mse_grad(&pred, &batch.params)?)?;
            adam_step(&mut params, &grad, &mut adam)?;
            if params.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("weights after update"));
            }
            model.set_params(&params)?;
            epoch_sum += loss;
            batches.push(BatchRecord { epoch, batch: b, n, loss });
        }
        if cfg.batches_per_epoch > 0 {
            let mean = epoch_sum / cfg.batches_per_epoch as f64;
            epoch_means.push(mean);
            log::info!("epoch {}/{}: mean loss {mean:.6}", epoch + 1, cfg.epochs);
        }
    }
    if cfg.epochs > 0 && cfg.batches_per_epoch > 0 {
        model.set_trained_sample_range(Some(cfg.sample_size_range));
    }
    let trace = TrainingTrace {
        batches,
        epoch_means,
        wall_time_secs: start.elapsed().as_secs_f64(),
        total_datasets: cfg.total_datasets(),
    };
    Ok((model, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Root mean squared error and mean error per parameter coordinate over
/// `n_datasets` fresh pairs at sample size `n`.
pub fn evaluate_mse<E: Estimator + ?Sized>(
    estimator: &E,
    spec: &SimulatorSpec,
    n_datasets: usize,
    n: usize,
    seed: u64,
) -> Result<EvalReport> {
    if n_datasets == 0 {
        return Err(Error::InsufficientSamples { kind: "evaluation datasets", n: 0 });
    }
    let p = spec.param_dim();
    let mut sq = vec![0.0; p];
    let mut err = vec![0.0; p];
    let chunk = 256;
    let mut done = 0;
    let mut part = 0u64;
    while done < n_datasets {
        let b = chunk.min(n_datasets - done);
        let batch = draw_training_batch(spec, b, n, &mut rng::stream(seed, part))?;
        let est = estimator.estimate(&batch.data)?;
        accumulate(&est, &batch.params, &mut sq, &mut err)?;
        done += b;
        part += 1;
    }
    let m = n_datasets as f64;
    Ok(EvalReport {
        rmse: sq.iter().map(|s| (s / m).sqrt()).collect(),
        bias: err.iter().map(|e| e / m).collect(),
    })
}

fn accumulate(est: &Matrix2, truth: &Matrix2, sq: &mut [f64], err: &mut [f64]) -> Result<()> {
    if est.cols() != truth.cols() || est.rows() != truth.rows() {
        return Err(Error::Dimension {
            axis: "estimate columns",
            expected: truth.cols(),
            got: est.cols(),
        });
    }
    for r in 0..est.rows() {
        for (c, (e, t)) in est.row(r).iter().zip(truth.row(r)).enumerate() {
            let d = e - t;
            sq[c] += d * d;
            err[c] += d;
        }
    }
    Ok(())
}
