//! Layer kinds and their forward/backward passes.
//!
//! Two parametrised maps exist: [`Affine`] (shared weights plus bias plus an
//! activation) and [`Collapse`] (pooling over the sample axis). An affine map
//! is a *coordinate-dense* layer when applied to every sample row of a
//! [`Tensor3`], and a *dense* layer when applied to the per-dataset rows of a
//! [`Matrix2`].
//!
//! Sums over the sample axis are evaluated in sorted order, which makes every
//! collapse output bit-identical under any permutation of the samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Matrix2, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output; relu at 0 gets 0.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollapseKind {
    Mean,
    Sdev,
    Cov,
    Projection,
}

impl CollapseKind {
    pub fn name(self) -> &'static str {
        match self {
            CollapseKind::Mean => "mean",
            CollapseKind::Sdev => "sdev",
            CollapseKind::Cov => "cov",
            CollapseKind::Projection => "projection",
        }
    }
}

/// `output = activation(input · weights + bias)` with `weights` stored
/// `inputs × outputs` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    inputs: usize,
    outputs: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl Affine {
    pub fn new(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::Dimension {
                axis: "weights",
                expected: inputs * outputs,
                got: weights.len(),
            });
        }
        if bias.len() != outputs {
            return Err(Error::Dimension {
                axis: "bias",
                expected: outputs,
                got: bias.len(),
            });
        }
        Ok(Self {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights in ±√(6/(fan_in+fan_out)), zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub(crate) fn push_params(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.weights);
        out.extend_from_slice(&self.bias);
    }

    pub(crate) fn load_params(&mut self, src: &[f64]) -> usize {
        let nw = self.weights.len();
        let nb = self.bias.len();
        self.weights.copy_from_slice(&src[..nw]);
        self.bias.copy_from_slice(&src[nw..nw + nb]);
        nw + nb
    }

    /// Apply the map to `rows` consecutive input rows.
    pub(crate) fn forward_rows(&self, input: &[f64], rows: usize) -> Vec<f64> {
        debug_assert_eq!(input.len(), rows * self.inputs);
        let mut out = Vec::with_capacity(rows * self.outputs);
        for r in 0..rows {
            let x = &input[r * self.inputs..(r + 1) * self.inputs];
            let start = out.len();
            out.extend_from_slice(&self.bias);
            let o = &mut out[start..];
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let w = &self.weights[i * self.outputs..(i + 1) * self.outputs];
                for (oj, &wj) in o.iter_mut().zip(w) {
                    *oj += xi * wj;
                }
            }
            for oj in o.iter_mut() {
                *oj = self.activation.apply(*oj);
            }
        }
        out
    }

    /// Accumulate parameter gradients into `grad` (weights then bias) and
    /// return the gradient with respect to the input rows when requested.
    pub(crate) fn backward_rows(
        &self,
        input: &[f64],
        output: &[f64],
        rows: usize,
        grad_out: &[f64],
        grad: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let (gw, gb) = grad.split_at_mut(self.weights.len());
        let mut delta = vec![0.0; self.outputs];
        let mut grad_in = want_input_grad.then(|| vec![0.0; rows * self.inputs]);
        for r in 0..rows {
            let o = &output[r * self.outputs..(r + 1) * self.outputs];
            let g = &grad_out[r * self.outputs..(r + 1) * self.outputs];
            let mut any = false;
            for j in 0..self.outputs {
                delta[j] = g[j] * self.activation.derivative_from_output(o[j]);
                any |= delta[j] != 0.0;
            }
            if !any {
                continue;
            }
            for (bj, &dj) in gb.iter_mut().zip(&delta) {
                *bj += dj;
            }
            let x = &input[r * self.inputs..(r + 1) * self.inputs];
            for (i, &xi) in x.iter().enumerate() {
                let w = &self.weights[i * self.outputs..(i + 1) * self.outputs];
                if let Some(gi) = grad_in.as_mut() {
                    gi[r * self.inputs + i] = w.iter().zip(&delta).map(|(a, b)| a * b).sum();
                }
                if xi != 0.0 {
                    let gwi = &mut gw[i * self.outputs..(i + 1) * self.outputs];
                    for (gwj, &dj) in gwi.iter_mut().zip(&delta) {
                        *gwj += xi * dj;
                    }
                }
            }
        }
        grad_in
    }
}

/// Pooling over the sample axis of each dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Collapse {
    kind: CollapseKind,
    inputs: usize,
    /// Per-sample relu functionals for [`CollapseKind::Projection`].
    projection: Option<Affine>,
}

impl Collapse {
    pub fn new(kind: CollapseKind, inputs: usize) -> Result<Self> {
        if kind == CollapseKind::Projection {
            return Err(Error::config(
                "collapsing",
                "projection collapsing needs weights; use Collapse::projection",
            ));
        }
        Ok(Self {
            kind,
            inputs,
            projection: None,
        })
    }

    pub fn projection(functionals: Affine) -> Result<Self> {
        if functionals.activation() != Activation::Relu {
            return Err(Error::config(
                "collapsing",
                "projection functionals use relu activation",
            ));
        }
        Ok(Self {
            kind: CollapseKind::Projection,
            inputs: functionals.inputs(),
            projection: Some(functionals),
        })
    }

    pub fn random_projection<R: Rng + ?Sized>(inputs: usize, n_proj: usize, rng: &mut R) -> Self {
        Self {
            kind: CollapseKind::Projection,
            inputs,
            projection: Some(Affine::glorot(inputs, n_proj, Activation::Relu, rng)),
        }
    }

    pub fn kind(&self) -> CollapseKind {
        self.kind
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn functionals(&self) -> Option<&Affine> {
        self.projection.as_ref()
    }

    pub fn outputs(&self) -> usize {
        let k = self.inputs;
        match self.kind {
            CollapseKind::Mean | CollapseKind::Sdev => k,
            CollapseKind::Cov => k * (k + 1) / 2,
            CollapseKind::Projection => self.projection.as_ref().map_or(0, Affine::outputs),
        }
    }

    pub fn param_count(&self) -> usize {
        self.projection.as_ref().map_or(0, Affine::param_count)
    }

    pub(crate) fn push_params(&self, out: &mut Vec<f64>) {
        if let Some(p) = &self.projection {
            p.push_params(out);
        }
    }

    pub(crate) fn load_params(&mut self, src: &[f64]) -> usize {
        self.projection.as_mut().map_or(0, |p| p.load_params(src))
    }

    fn check_samples(&self, n: usize) -> Result<()> {
        match self.kind {
            CollapseKind::Sdev | CollapseKind::Cov if n < 2 => Err(Error::InsufficientSamples {
                kind: self.kind.name(),
                n,
            }),
            _ if n == 0 => Err(Error::InsufficientSamples {
                kind: self.kind.name(),
                n,
            }),
            _ => Ok(()),
        }
    }

    /// Forward over a flat `b × n × inputs` block. Returns the `b × outputs`
    /// pooled values and, for projections, the per-sample activations.
    pub(crate) fn forward_raw(
        &self,
        input: &[f64],
        b: usize,
        n: usize,
    ) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
        self.check_samples(n)?;
        let k = self.inputs;
        let d = self.outputs();
        let mut out = Vec::with_capacity(b * d);
        let mut scratch = vec![0.0; n];
        match self.kind {
            CollapseKind::Mean => {
                for ds in 0..b {
                    let block = &input[ds * n * k..(ds + 1) * n * k];
                    for c in 0..k {
                        out.push(column_mean(block, k, c, &mut scratch));
                    }
                }
                Ok((out, None))
            }
            CollapseKind::Sdev => {
                let denom = (n - 1) as f64;
                for ds in 0..b {
                    let block = &input[ds * n * k..(ds + 1) * n * k];
                    for c in 0..k {
                        let m = column_mean(block, k, c, &mut scratch);
                        for (s, v) in scratch.iter_mut().enumerate() {
                            let dev = block[s * k + c] - m;
                            *v = dev * dev;
                        }
                        out.push((ordered_sum(&mut scratch) / denom).sqrt());
                    }
                }
                Ok((out, None))
            }
            CollapseKind::Cov => {
                let denom = (n - 1) as f64;
                let mut means = vec![0.0; k];
                for ds in 0..b {
                    let block = &input[ds * n * k..(ds + 1) * n * k];
                    for (c, m) in means.iter_mut().enumerate() {
                        *m = column_mean(block, k, c, &mut scratch);
                    }
                    for a in 0..k {
                        for bb in a..k {
                            for (s, v) in scratch.iter_mut().enumerate() {
                                *v = (block[s * k + a] - means[a]) * (block[s * k + bb] - means[bb]);
                            }
                            out.push(ordered_sum(&mut scratch) / denom);
                        }
                    }
                }
                Ok((out, None))
            }
            CollapseKind::Projection => {
                let proj = self.projection.as_ref().expect("projection weights");
                let acts = proj.forward_rows(input, b * n);
                for ds in 0..b {
                    let block = &acts[ds * n * d..(ds + 1) * n * d];
                    for j in 0..d {
                        out.push(column_mean(block, d, j, &mut scratch));
                    }
                }
                Ok((out, Some(acts)))
            }
        }
    }

    /// Gradient with respect to the `b × n × inputs` input; projection
    /// parameter gradients are accumulated into `grad`.
    pub(crate) fn backward_raw(
        &self,
        input: &[f64],
        b: usize,
        n: usize,
        activations: Option<&[f64]>,
        grad_out: &[f64],
        grad: &mut [f64],
        want_input_grad: bool,
    ) -> Option<Vec<f64>> {
        let k = self.inputs;
        let d = self.outputs();
        let nf = n as f64;
        match self.kind {
            CollapseKind::Projection => {
                let proj = self.projection.as_ref().expect("projection weights");
                let acts = activations.expect("projection activations");
                let mut grad_act = vec![0.0; b * n * d];
                for ds in 0..b {
                    let g = &grad_out[ds * d..(ds + 1) * d];
                    for s in 0..n {
                        let row = &mut grad_act[(ds * n + s) * d..(ds * n + s + 1) * d];
                        for (r, &gj) in row.iter_mut().zip(g) {
                            *r = gj / nf;
                        }
                    }
                }
                proj.backward_rows(input, acts, b * n, &grad_act, grad, want_input_grad)
            }
            _ if !want_input_grad => None,
            CollapseKind::Mean => {
                let mut gx = vec![0.0; b * n * k];
                for ds in 0..b {
                    let g = &grad_out[ds * d..(ds + 1) * d];
                    for s in 0..n {
                        let row = &mut gx[(ds * n + s) * k..(ds * n + s + 1) * k];
                        for (r, &gc) in row.iter_mut().zip(g) {
                            *r = gc / nf;
                        }
                    }
                }
                Some(gx)
            }
            CollapseKind::Sdev => {
                let denom = nf - 1.0;
                let mut gx = vec![0.0; b * n * k];
                let mut scratch = vec![0.0; n];
                for ds in 0..b {
                    let block = &input[ds * n * k..(ds + 1) * n * k];
                    for c in 0..k {
                        let m = column_mean(block, k, c, &mut scratch);
                        let sd = {
                            for (s, v) in scratch.iter_mut().enumerate() {
                                let dev = block[s * k + c] - m;
                                *v = dev * dev;
                            }
                            (ordered_sum(&mut scratch) / denom).sqrt()
                        };
                        if sd <= 0.0 {
                            continue;
                        }
                        let scale = grad_out[ds * d + c] / (denom * sd);
                        for s in 0..n {
                            gx[(ds * n + s) * k + c] = scale * (block[s * k + c] - m);
                        }
                    }
                }
                Some(gx)
            }
            CollapseKind::Cov => {
                let denom = nf - 1.0;
                let mut gx = vec![0.0; b * n * k];
                let mut scratch = vec![0.0; n];
                let mut means = vec![0.0; k];
                for ds in 0..b {
                    let block = &input[ds * n * k..(ds + 1) * n * k];
                    for (c, m) in means.iter_mut().enumerate() {
                        *m = column_mean(block, k, c, &mut scratch);
                    }
                    let mut idx = ds * d;
                    for a in 0..k {
                        for bb in a..k {
                            let g = grad_out[idx] / denom;
                            idx += 1;
                            for s in 0..n {
                                let base = (ds * n + s) * k;
                                gx[base + a] += g * (block[s * k + bb] - means[bb]);
                                gx[base + bb] += g * (block[s * k + a] - means[a]);
                            }
                        }
                    }
                }
                Some(gx)
            }
        }
    }
}

/// Sum after sorting; the result does not depend on the input order.
pub(crate) fn ordered_sum(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(f64::total_cmp);
    values.iter().sum()
}

fn column_mean(block: &[f64], k: usize, c: usize, scratch: &mut [f64]) -> f64 {
    for (s, v) in scratch.iter_mut().enumerate() {
        *v = block[s * k + c];
    }
    ordered_sum(scratch) / scratch.len() as f64
}

/// One step of a network's layer chain.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// Affine map shared across every sample row of every dataset.
    CoordinateDense(Affine),
    /// Pooling over samples.
    Collapse(Collapse),
    /// Affine map on per-dataset feature rows.
    Dense(Affine),
}

impl Layer {
    pub fn param_count(&self) -> usize {
        match self {
            Layer::CoordinateDense(a) | Layer::Dense(a) => a.param_count(),
            Layer::Collapse(c) => c.param_count(),
        }
    }
}

pub fn coordinate_dense_forward(input: &Tensor3, layer: &Layer) -> Result<Tensor3> {
    let Layer::CoordinateDense(affine) = layer else {
        return Err(Error::Input("expected a coordinate-dense layer".into()));
    };
    if input.cols() != affine.inputs() {
        return Err(Error::Dimension {
            axis: "columns",
            expected: affine.inputs(),
            got: input.cols(),
        });
    }
    let rows = input.batch() * input.samples();
    let out = affine.forward_rows(input.values(), rows);
    Tensor3::new(input.batch(), input.samples(), affine.outputs(), out)
}

pub fn collapse_forward(input: &Tensor3, layer: &Layer) -> Result<Matrix2> {
    let Layer::Collapse(collapse) = layer else {
        return Err(Error::Input("expected a collapse layer".into()));
    };
    if input.cols() != collapse.inputs() {
        return Err(Error::Dimension {
            axis: "columns",
            expected: collapse.inputs(),
            got: input.cols(),
        });
    }
    let (out, _) = collapse.forward_raw(input.values(), input.batch(), input.samples())?;
    Matrix2::new(input.batch(), collapse.outputs(), out)
}

pub fn dense_forward(input: &Matrix2, layer: &Layer) -> Result<Matrix2> {
    let Layer::Dense(affine) = layer else {
        return Err(Error::Input("expected a dense layer".into()));
    };
    if input.cols() != affine.inputs() {
        return Err(Error::Dimension {
            axis: "columns",
            expected: affine.inputs(),
            got: input.cols(),
        });
    }
    let out = affine.forward_rows(input.values(), input.rows());
    Matrix2::new(input.rows(), affine.outputs(), out)
}

fn check_same_shape(pred: &Matrix2, target: &Matrix2) -> Result<()> {
    if pred.rows() != target.rows() {
        return Err(Error::Dimension {
            axis: "rows",
            expected: pred.rows(),
            got: target.rows(),
        });
    }
    if pred.cols() != target.cols() {
        return Err(Error::Dimension {
            axis: "columns",
            expected: pred.cols(),
            got: target.cols(),
        });
    }
    Ok(())
}

/// Mean squared error over all entries.
pub fn mse_loss(pred: &Matrix2, target: &Matrix2) -> Result<f64> {
    check_same_shape(pred, target)?;
    let len = pred.values().len();
    if len == 0 {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / len as f64)
}

/// Gradient of [`mse_loss`] with respect to `pred`.
pub fn mse_grad(pred: &Matrix2, target: &Matrix2) -> Result<Matrix2> {
    check_same_shape(pred, target)?;
    let scale = 2.0 / pred.values().len().max(1) as f64;
    let g = pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(p, t)| scale * (p - t))
        .collect();
    Ok(Matrix2::from_raw(pred.rows(), pred.cols(), g))
}
