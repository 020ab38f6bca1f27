//! The estimator abstraction shared by training, bootstrap, ABC and the
//! coverage harness.

use crate::error::{Error, Result};
use crate::layers::ordered_sum;
use crate::network::NetworkModel;
use crate::tensor::{Matrix2, Tensor3};

/// Maps each dataset of a batch to a parameter estimate.
pub trait Estimator: Sync {
    fn input_cols(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn estimate(&self, batch: &Tensor3) -> Result<Matrix2>;
}

impl Estimator for NetworkModel {
    fn input_cols(&self) -> usize {
        NetworkModel::input_cols(self)
    }

    fn output_dim(&self) -> usize {
        NetworkModel::output_dim(self)
    }

    fn estimate(&self, batch: &Tensor3) -> Result<Matrix2> {
        NetworkModel::estimate(self, batch)
    }
}

/// Column means of a fixed set of columns; the closed-form estimator for a
/// normal location model.
#[derive(Debug, Clone)]
pub struct SampleMean {
    pub input_cols: usize,
    pub columns: Vec<usize>,
}

impl SampleMean {
    pub fn single_column() -> Self {
        Self {
            input_cols: 1,
            columns: vec![0],
        }
    }
}

impl Estimator for SampleMean {
    fn input_cols(&self) -> usize {
        self.input_cols
    }

    fn output_dim(&self) -> usize {
        self.columns.len()
    }

    fn estimate(&self, batch: &Tensor3) -> Result<Matrix2> {
        if batch.cols() != self.input_cols {
            return Err(Error::Dimension {
                axis: "columns",
                expected: self.input_cols,
                got: batch.cols(),
            });
        }
        let n = batch.samples();
        let mut out = Vec::with_capacity(batch.batch() * self.columns.len());
        let mut scratch = vec![0.0; n];
        for d in 0..batch.batch() {
            for &c in &self.columns {
                for (s, v) in scratch.iter_mut().enumerate() {
                    *v = batch.get(d, s, c);
                }
                out.push(ordered_sum(&mut scratch) / n as f64);
            }
        }
        Matrix2::new(batch.batch(), self.columns.len(), out)
    }
}

/// Estimate a large batch in chunks of at most `chunk` datasets.
pub fn estimate_chunked<E: Estimator + ?Sized>(
    estimator: &E,
    datasets: &[Matrix2],
    chunk: usize,
) -> Result<Matrix2> {
    let mut parts = Vec::new();
    for group in datasets.chunks(chunk.max(1)) {
        let batch = Tensor3::stack(group)?;
        parts.push(estimator.estimate(&batch)?);
    }
    if parts.is_empty() {
        return Ok(Matrix2::zeros(0, estimator.output_dim()));
    }
    Matrix2::vstack(&parts)
}
