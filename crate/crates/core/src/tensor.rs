//! Dense row-major containers used throughout the engine.

use crate::error::{Error, Result};

/// A batch of datasets: `b` datasets of `n` samples with `k` columns,
/// stored row-major as (dataset, sample, column).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    b: usize,
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn new(b: usize, n: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != b * n * k {
            return Err(Error::Dimension {
                axis: "tensor values",
                expected: b * n * k,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor values"));
        }
        Ok(Self { b, n, k, values })
    }

    pub fn zeros(b: usize, n: usize, k: usize) -> Self {
        Self {
            b,
            n,
            k,
            values: vec![0.0; b * n * k],
        }
    }

    /// Stack equally shaped `n × k` datasets into one batch.
    pub fn stack(datasets: &[Matrix2]) -> Result<Self> {
        let Some(first) = datasets.first() else {
            return Ok(Self::zeros(0, 0, 0));
        };
        let (n, k) = (first.rows(), first.cols());
        let mut values = Vec::with_capacity(datasets.len() * n * k);
        for d in datasets {
            if d.rows() != n {
                return Err(Error::Dimension {
                    axis: "samples",
                    expected: n,
                    got: d.rows(),
                });
            }
            if d.cols() != k {
                return Err(Error::Dimension {
                    axis: "columns",
                    expected: k,
                    got: d.cols(),
                });
            }
            values.extend_from_slice(d.values());
        }
        Ok(Self {
            b: datasets.len(),
            n,
            k,
            values,
        })
    }

    pub fn batch(&self) -> usize {
        self.b
    }

    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// The `n × k` block of dataset `i`.
    pub fn dataset(&self, i: usize) -> &[f64] {
        let len = self.n * self.k;
        &self.values[i * len..(i + 1) * len]
    }

    pub fn dataset_matrix(&self, i: usize) -> Matrix2 {
        Matrix2 {
            rows: self.n,
            cols: self.k,
            values: self.dataset(i).to_vec(),
        }
    }

    pub fn get(&self, dataset: usize, sample: usize, col: usize) -> f64 {
        self.values[(dataset * self.n + sample) * self.k + col]
    }

    /// Reorder the samples of every dataset: sample `s` of the result is
    /// sample `perm[s]` of `self`.
    pub fn permute_samples(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::Dimension {
                axis: "permutation length",
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut values = Vec::with_capacity(self.values.len());
        for d in 0..self.b {
            let block = self.dataset(d);
            for &src in perm {
                values.extend_from_slice(&block[src * self.k..(src + 1) * self.k]);
            }
        }
        Ok(Self { values, ..*self })
    }
}

/// Row-major matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix2 {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix2 {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension {
                axis: "matrix values",
                expected: rows * cols,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix values"));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    axis: "row length",
                    expected: cols,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, values)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), rows * cols);
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// The matrix viewed as a batch holding a single dataset.
    pub fn into_batch(self) -> Tensor3 {
        Tensor3 {
            b: 1,
            n: self.rows,
            k: self.cols,
            values: self.values,
        }
    }

    /// Vertically stack matrices with equal column counts.
    pub fn vstack(parts: &[Matrix2]) -> Result<Self> {
        let cols = parts.first().map_or(0, |m| m.cols);
        let mut values = Vec::new();
        let mut rows = 0;
        for p in parts {
            if p.cols != cols {
                return Err(Error::Dimension {
                    axis: "columns",
                    expected: cols,
                    got: p.cols,
                });
            }
            rows += p.rows;
            values.extend_from_slice(&p.values);
        }
        Ok(Self { rows, cols, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_length() {
        assert!(matches!(
            Tensor3::new(2, 3, 4, vec![0.0; 23]),
            Err(Error::Dimension { .. })
        ));
        assert!(Matrix2::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Tensor3::new(1, 1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(Matrix2::new(1, 1, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn indexing_is_row_major() {
        let t = Tensor3::new(2, 2, 3, (0..12).map(f64::from).collect()).unwrap();
        assert_eq!(t.get(1, 0, 2), 8.0);
        assert_eq!(t.dataset(1), &[6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
    }

    #[test]
    fn permute_samples_moves_whole_rows() {
        let t = Tensor3::new(1, 3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let p = t.permute_samples(&[2, 0, 1]).unwrap();
        assert_eq!(p.values(), &[5.0, 6.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn stack_checks_shapes() {
        let a = Matrix2::zeros(3, 2);
        let b = Matrix2::zeros(2, 2);
        assert!(Tensor3::stack(&[a.clone(), b]).is_err());
        let t = Tensor3::stack(&[a.clone(), a]).unwrap();
        assert_eq!((t.batch(), t.samples(), t.cols()), (2, 3, 2));
    }
}
