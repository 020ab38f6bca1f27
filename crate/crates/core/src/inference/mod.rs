//! Uncertainty quantification on top of an [`Estimator`](crate::Estimator).

mod abc;
mod bootstrap;

pub use abc::{
    abc_importance_refine, abc_sample, importance_sample, mixture_proposal, weighted_quantile,
    weighted_summary, AbcConfig, AbcPosterior, MixtureProposal, ParamDistribution, ProposalKind,
    SpecPrior, WeightedSummary,
};
pub use bootstrap::{
    bootstrap_confidence, percentile_intervals, quantile_type7, BootstrapConfig, ConfidenceResult,
};

use crate::error::Result;
use crate::estimator::Estimator;
use crate::rng;
use crate::simulate::SimulatorSpec;
use crate::tensor::{Matrix2, Tensor3};

/// Datasets estimated together by the inference routines.
const CHUNK: usize = 250;

/// Simulate one dataset per parameter row, dataset `i` from stream `i` of
/// `seed`, and estimate them in chunks.
pub(crate) fn simulate_and_estimate<E: Estimator + ?Sized>(
    estimator: &E,
    spec: &SimulatorSpec,
    params: &[Vec<f64>],
    n: usize,
    seed: u64,
    stream_offset: u64,
) -> Result<Matrix2> {
    let mut parts = Vec::with_capacity(params.len().div_ceil(CHUNK));
    for (c, group) in params.chunks(CHUNK).enumerate() {
        let mut values = Vec::with_capacity(group.len() * n * spec.input_cols());
        for (j, theta) in group.iter().enumerate() {
            let i = (c * CHUNK + j) as u64;
            let mut r = rng::stream(seed, stream_offset + i);
            values.extend_from_slice(spec.simulate_dataset(theta, n, &mut r)?.values());
        }
        let batch = Tensor3::new(group.len(), n, spec.input_cols(), values)?;
        parts.push(estimator.estimate(&batch)?);
    }
    if parts.is_empty() {
        return Ok(Matrix2::zeros(0, estimator.output_dim()));
    }
    Matrix2::vstack(&parts)
}

pub(crate) fn estimate_one<E: Estimator + ?Sized>(estimator: &E, data: &Matrix2) -> Result<Vec<f64>> {
    if data.cols() != estimator.input_cols() {
        return Err(crate::Error::Dimension {
            axis: "columns",
            expected: estimator.input_cols(),
            got: data.cols(),
        });
    }
    Ok(estimator.estimate(&data.clone().into_batch())?.into_values())
}
