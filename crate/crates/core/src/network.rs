//! Branched permutation-invariant estimator network.
//!
//! The input batch feeds `n_branches` branches. Each branch applies a stack
//! of coordinate-dense layers to every sample, pools the sample axis with
//! one or more collapse layers (outputs concatenated), and transforms the
//! pooled features with a dense stack. Branch outputs are concatenated and a
//! dense head maps them to the parameter vector; the last head layer has an
//! identity activation.
//!
//! Parameters are ordered branch by branch (coordinate-dense layers,
//! projection functionals, post-collapse layers), then the head; within a
//! layer weights come before bias.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{Activation, Affine, Collapse, CollapseKind};
use crate::rng;
use crate::tensor::{Matrix2, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    #[default]
    Mse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub n_branches: usize,
    pub n_dense_branch: Vec<usize>,
    pub collapsing: Vec<CollapseKind>,
    pub n_dense_post_coll: usize,
    pub n_dense_post_concat: usize,
    pub n_features_branch: usize,
    pub n_features_post: usize,
    pub n_features_post_concat: usize,
    pub n_proj: usize,
    #[serde(default)]
    pub loss: Loss,
}

impl HyperParams {
    /// Network used for the regression scenarios.
    pub fn regression() -> Self {
        Self {
            n_branches: 3,
            n_dense_branch: vec![0, 2, 4],
            collapsing: vec![CollapseKind::Projection],
            n_dense_post_coll: 0,
            n_dense_post_concat: 3,
            n_features_branch: 32,
            n_features_post: 32,
            n_features_post_concat: 32,
            n_proj: 3,
            loss: Loss::Mse,
        }
    }

    /// Network used for haplotype-frequency estimation.
    pub fn genetics() -> Self {
        Self {
            n_branches: 3,
            n_dense_branch: vec![0, 2, 4],
            collapsing: vec![CollapseKind::Mean, CollapseKind::Sdev],
            n_dense_post_coll: 2,
            n_dense_post_concat: 0,
            n_features_branch: 16,
            n_features_post: 16,
            n_features_post_concat: 16,
            n_proj: 3,
            loss: Loss::Mse,
        }
    }

    /// One branch, no hidden layers, mean pooling.
    pub fn minimal() -> Self {
        Self {
            n_branches: 1,
            n_dense_branch: vec![0],
            collapsing: vec![CollapseKind::Mean],
            n_dense_post_coll: 0,
            n_dense_post_concat: 0,
            n_features_branch: 1,
            n_features_post: 1,
            n_features_post_concat: 1,
            n_proj: 1,
            loss: Loss::Mse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.n_branches) {
            return Err(Error::config("n_branches", "must lie in 1..=3"));
        }
        if self.n_dense_branch.len() != self.n_branches {
            return Err(Error::config(
                "n_dense_branch",
                format!("needs one entry per branch ({})", self.n_branches),
            ));
        }
        if self.n_dense_branch.iter().any(|&d| d > 8) {
            return Err(Error::config("n_dense_branch", "entries must lie in 0..=8"));
        }
        if self.collapsing.is_empty() {
            return Err(Error::config("collapsing", "at least one collapse kind is required"));
        }
        for (i, c) in self.collapsing.iter().enumerate() {
            if self.collapsing[..i].contains(c) {
                return Err(Error::config("collapsing", format!("duplicate kind {}", c.name())));
            }
        }
        for (field, v) in [
            ("n_features_branch", self.n_features_branch),
            ("n_features_post", self.n_features_post),
            ("n_features_post_concat", self.n_features_post_concat),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        if self.collapsing.contains(&CollapseKind::Projection) && self.n_proj == 0 {
            return Err(Error::config("n_proj", "must be at least 1 with projection collapsing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub(crate) pre: Vec<Affine>,
    pub(crate) collapses: Vec<Collapse>,
    pub(crate) post: Vec<Affine>,
}

impl Branch {
    pub fn coordinate_layers(&self) -> &[Affine] {
        &self.pre
    }

    pub fn collapses(&self) -> &[Collapse] {
        &self.collapses
    }

    pub fn post_layers(&self) -> &[Affine] {
        &self.post
    }

    fn collapse_width(&self) -> usize {
        self.collapses.iter().map(Collapse::outputs).sum()
    }

    pub fn output_width(&self) -> usize {
        self.post.last().map_or_else(|| self.collapse_width(), Affine::outputs)
    }

    fn param_count(&self) -> usize {
        self.pre.iter().map(Affine::param_count).sum::<usize>()
            + self.collapses.iter().map(Collapse::param_count).sum::<usize>()
            + self.post.iter().map(Affine::param_count).sum::<usize>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub(crate) hyperparams: HyperParams,
    pub(crate) input_cols: usize,
    pub(crate) output_dim: usize,
    pub(crate) branches: Vec<Branch>,
    pub(crate) head: Vec<Affine>,
    pub(crate) seed: u64,
    pub(crate) trained_sample_range: Option<(usize, usize)>,
    pub(crate) metadata: BTreeMap<String, String>,
}

/// Assemble a network and draw its initial weights from `seed`.
pub fn build_network(
    hp: &HyperParams,
    input_cols: usize,
    output_dim: usize,
    seed: u64,
) -> Result<NetworkModel> {
    hp.validate()?;
    if input_cols == 0 {
        return Err(Error::config("input_cols", "must be at least 1"));
    }
    if output_dim == 0 {
        return Err(Error::config("output_dim", "must be at least 1"));
    }
    let mut rng = rng::stream(seed, 0);
    let mut branches = Vec::with_capacity(hp.n_branches);
    for &depth in &hp.n_dense_branch {
        let mut width = input_cols;
        let mut pre = Vec::with_capacity(depth);
        for _ in 0..depth {
            pre.push(Affine::glorot(width, hp.n_features_branch, Activation::Relu, &mut rng));
            width = hp.n_features_branch;
        }
        let mut collapses = Vec::with_capacity(hp.collapsing.len());
        for &kind in &hp.collapsing {
            collapses.push(match kind {
                CollapseKind::Projection => Collapse::random_projection(width, hp.n_proj, &mut rng),
                other => Collapse::new(other, width)?,
            });
        }
        let mut width: usize = collapses.iter().map(Collapse::outputs).sum();
        let mut post = Vec::with_capacity(hp.n_dense_post_coll);
        for _ in 0..hp.n_dense_post_coll {
            post.push(Affine::glorot(width, hp.n_features_post, Activation::Relu, &mut rng));
            width = hp.n_features_post;
        }
        branches.push(Branch { pre, collapses, post });
    }
    let mut width: usize = branches.iter().map(Branch::output_width).sum();
    let mut head = Vec::with_capacity(hp.n_dense_post_concat + 1);
    for _ in 0..hp.n_dense_post_concat {
        head.push(Affine::glorot(width, hp.n_features_post_concat, Activation::Relu, &mut rng));
        width = hp.n_features_post_concat;
    }
    head.push(Affine::glorot(width, output_dim, Activation::Identity, &mut rng));
    Ok(NetworkModel {
        hyperparams: hp.clone(),
        input_cols,
        output_dim,
        branches,
        head,
        seed,
        trained_sample_range: None,
        metadata: BTreeMap::new(),
    })
}

/// Intermediates of a recorded forward pass, consumed by
/// [`NetworkModel::backward`].
#[derive(Debug, Default)]
pub struct Tape {
    record: Option<Record>,
}

#[derive(Debug)]
struct Record {
    b: usize,
    n: usize,
    input: Vec<f64>,
    branches: Vec<BranchRecord>,
    concat: Vec<f64>,
    head: Vec<Vec<f64>>,
}

#[derive(Debug)]
struct BranchRecord {
    pre: Vec<Vec<f64>>,
    collapse_acts: Vec<Option<Vec<f64>>>,
    collapsed: Vec<f64>,
    post: Vec<Vec<f64>>,
}

impl Tape {
    pub fn is_recorded(&self) -> bool {
        self.record.is_some()
    }
}

/// Concatenate row-major blocks `b × w_i` column-wise.
fn hconcat(parts: &[&[f64]], widths: &[usize], rows: usize) -> Vec<f64> {
    let total: usize = widths.iter().sum();
    let mut out = Vec::with_capacity(rows * total);
    for r in 0..rows {
        for (p, &w) in parts.iter().zip(widths) {
            out.extend_from_slice(&p[r * w..(r + 1) * w]);
        }
    }
    out
}

/// Split a row-major `rows × Σw` block into its column groups.
fn hsplit(values: &[f64], widths: &[usize], rows: usize) -> Vec<Vec<f64>> {
    let total: usize = widths.iter().sum();
    let mut parts: Vec<Vec<f64>> = widths.iter().map(|w| Vec::with_capacity(rows * w)).collect();
    for r in 0..rows {
        let mut off = r * total;
        for (p, &w) in parts.iter_mut().zip(widths) {
            p.extend_from_slice(&values[off..off + w]);
            off += w;
        }
    }
    parts
}

impl NetworkModel {
    pub fn hyperparams(&self) -> &HyperParams {
        &self.hyperparams
    }

    pub fn input_cols(&self) -> usize {
        self.input_cols
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn head(&self) -> &[Affine] {
        &self.head
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trained_sample_range(&self) -> Option<(usize, usize)> {
        self.trained_sample_range
    }

    pub fn set_trained_sample_range(&mut self, range: Option<(usize, usize)>) {
        self.trained_sample_range = range;
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn metadata_mut(&mut self) -> &mut BTreeMap<String, String> {
        &mut self.metadata
    }

    /// Width of the concatenated branch outputs fed to the head.
    pub fn concat_width(&self) -> usize {
        self.branches.iter().map(Branch::output_width).sum()
    }

    pub fn param_count(&self) -> usize {
        self.branches.iter().map(Branch::param_count).sum::<usize>()
            + self.head.iter().map(Affine::param_count).sum::<usize>()
    }

    /// All trainable values in canonical order.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for br in &self.branches {
            br.pre.iter().for_each(|l| l.push_params(&mut out));
            br.collapses.iter().for_each(|c| c.push_params(&mut out));
            br.post.iter().for_each(|l| l.push_params(&mut out));
        }
        self.head.iter().for_each(|l| l.push_params(&mut out));
        out
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::Dimension {
                axis: "parameter vector",
                expected: self.param_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        let mut off = 0;
        for br in &mut self.branches {
            for l in &mut br.pre {
                off += l.load_params(&values[off..]);
            }
            for c in &mut br.collapses {
                off += c.load_params(&values[off..]);
            }
            for l in &mut br.post {
                off += l.load_params(&values[off..]);
            }
        }
        for l in &mut self.head {
            off += l.load_params(&values[off..]);
        }
        Ok(())
    }

    /// One parameter estimate per dataset of `batch`.
    pub fn estimate(&self, batch: &Tensor3) -> Result<Matrix2> {
        self.run(batch, false).map(|(out, _)| out)
    }

    /// Forward pass that keeps the intermediates needed by [`Self::backward`].
    pub fn forward_recorded(&self, batch: &Tensor3) -> Result<(Matrix2, Tape)> {
        self.run(batch, true)
    }

    fn run(&self, batch: &Tensor3, record: bool) -> Result<(Matrix2, Tape)> {
        if batch.cols() != self.input_cols {
            return Err(Error::Dimension {
                axis: "columns",
                expected: self.input_cols,
                got: batch.cols(),
            });
        }
        let (b, n) = (batch.batch(), batch.samples());
        if b == 0 {
            return Ok((Matrix2::zeros(0, self.output_dim), Tape::default()));
        }
        let mut branch_records = Vec::with_capacity(self.branches.len());
        let mut branch_outputs = Vec::with_capacity(self.branches.len());
        for br in &self.branches {
            let mut pre_out: Vec<Vec<f64>> = Vec::with_capacity(br.pre.len());
            for layer in &br.pre {
                let src = pre_out.last().map_or(batch.values(), Vec::as_slice);
                let out = layer.forward_rows(src, b * n);
                pre_out.push(out);
            }
            let pooled_input = pre_out.last().map_or(batch.values(), Vec::as_slice);
            let mut pooled = Vec::with_capacity(br.collapses.len());
            let mut acts = Vec::with_capacity(br.collapses.len());
            for c in &br.collapses {
                let (o, a) = c.forward_raw(pooled_input, b, n)?;
                pooled.push(o);
                acts.push(a);
            }
            let widths: Vec<usize> = br.collapses.iter().map(Collapse::outputs).collect();
            let refs: Vec<&[f64]> = pooled.iter().map(Vec::as_slice).collect();
            let collapsed = hconcat(&refs, &widths, b);
            let mut post_out: Vec<Vec<f64>> = Vec::with_capacity(br.post.len());
            for layer in &br.post {
                let src = post_out.last().unwrap_or(&collapsed);
                let out = layer.forward_rows(src, b);
                post_out.push(out);
            }
            branch_outputs.push(post_out.last().unwrap_or(&collapsed).clone());
            if record {
                branch_records.push(BranchRecord {
                    pre: pre_out,
                    collapse_acts: acts,
                    collapsed,
                    post: post_out,
                });
            }
        }
        let widths: Vec<usize> = self.branches.iter().map(Branch::output_width).collect();
        let refs: Vec<&[f64]> = branch_outputs.iter().map(Vec::as_slice).collect();
        let concat = hconcat(&refs, &widths, b);
        let mut head_out: Vec<Vec<f64>> = Vec::with_capacity(self.head.len());
        for layer in &self.head {
            let src = head_out.last().unwrap_or(&concat);
            let out = layer.forward_rows(src, b);
            head_out.push(out);
        }
        let result = head_out.last().expect("head has an output layer").clone();
        if result.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network output"));
        }
        let out = Matrix2::from_raw(b, self.output_dim, result);
        let tape = Tape {
            record: record.then(|| Record {
                b,
                n,
                input: batch.values().to_vec(),
                branches: branch_records,
                concat,
                head: head_out,
            }),
        };
        Ok((out, tape))
    }

    /// Gradient of a loss with respect to every parameter (canonical order),
    /// given the loss gradient with respect to the network output.
    pub fn backward(&self, tape: &Tape, grad_output: &Matrix2) -> Result<Vec<f64>> {
        let rec = tape
            .record
            .as_ref()
            .ok_or_else(|| Error::State("backward called without a recorded forward pass".into()))?;
        let (b, n) = (rec.b, rec.n);
        if grad_output.rows() != b || grad_output.cols() != self.output_dim {
            return Err(Error::Dimension {
                axis: "output gradient",
                expected: b * self.output_dim,
                got: grad_output.rows() * grad_output.cols(),
            });
        }
        let mut grad = vec![0.0; self.param_count()];

        // Offsets of each branch and of the head in the parameter vector.
        let mut branch_offsets = Vec::with_capacity(self.branches.len());
        let mut off = 0;
        for br in &self.branches {
            branch_offsets.push(off);
            off += br.param_count();
        }
        let head_offset = off;

        let mut layer_offsets = Vec::with_capacity(self.head.len());
        let mut o = head_offset;
        for l in &self.head {
            layer_offsets.push(o);
            o += l.param_count();
        }
        let mut g = grad_output.values().to_vec();
        for (i, layer) in self.head.iter().enumerate().rev() {
            let input = if i == 0 { &rec.concat } else { &rec.head[i - 1] };
            let slot = &mut grad[layer_offsets[i]..layer_offsets[i] + layer.param_count()];
            g = layer
                .backward_rows(input, &rec.head[i], b, &g, slot, true)
                .expect("input gradient requested");
        }

        let widths: Vec<usize> = self.branches.iter().map(Branch::output_width).collect();
        let per_branch = hsplit(&g, &widths, b);
        for (bi, (br, g_branch)) in self.branches.iter().zip(per_branch).enumerate() {
            let brec = &rec.branches[bi];
            let mut offsets = Vec::new();
            let mut o = branch_offsets[bi];
            for l in &br.pre {
                offsets.push(o);
                o += l.param_count();
            }
            let mut collapse_offsets = Vec::new();
            for c in &br.collapses {
                collapse_offsets.push(o);
                o += c.param_count();
            }
            let mut post_offsets = Vec::new();
            for l in &br.post {
                post_offsets.push(o);
                o += l.param_count();
            }

            let mut g = g_branch;
            for (i, layer) in br.post.iter().enumerate().rev() {
                let input = if i == 0 { &brec.collapsed } else { &brec.post[i - 1] };
                let slot = &mut grad[post_offsets[i]..post_offsets[i] + layer.param_count()];
                g = layer
                    .backward_rows(input, &brec.post[i], b, &g, slot, true)
                    .expect("input gradient requested");
            }

            let need_input_grad = !br.pre.is_empty();
            let pooled_input = brec.pre.last().unwrap_or(&rec.input);
            let cwidths: Vec<usize> = br.collapses.iter().map(Collapse::outputs).collect();
            let per_collapse = hsplit(&g, &cwidths, b);
            let mut g_pooled: Option<Vec<f64>> = None;
            for (ci, (c, gc)) in br.collapses.iter().zip(per_collapse).enumerate() {
                let slot = &mut grad[collapse_offsets[ci]..collapse_offsets[ci] + c.param_count()];
                let gi = c.backward_raw(
                    pooled_input,
                    b,
                    n,
                    brec.collapse_acts[ci].as_deref(),
                    &gc,
                    slot,
                    need_input_grad,
                );
                if let Some(gi) = gi {
                    match g_pooled.as_mut() {
                        None => g_pooled = Some(gi),
                        Some(acc) => acc.iter_mut().zip(gi).for_each(|(a, v)| *a += v),
                    }
                }
            }
            if let Some(mut g) = g_pooled {
                for (i, layer) in br.pre.iter().enumerate().rev() {
                    let input = if i == 0 { &rec.input } else { &brec.pre[i - 1] };
                    let slot = &mut grad[offsets[i]..offsets[i] + layer.param_count()];
                    match layer.backward_rows(input, &brec.pre[i], b * n, &g, slot, i > 0) {
                        Some(next) => g = next,
                        None => break,
                    }
                }
            }
        }
        Ok(grad)
    }
}

/// Largest relative gap between [`NetworkModel::backward`] and central finite
/// differences of `Σ weights ⊙ estimate(batch)` with step `h`, measured as
/// `|a − b| / max(|a|, |b|, floor)`.
pub fn gradient_check(
    model: &NetworkModel,
    batch: &Tensor3,
    weights: &Matrix2,
    h: f64,
    floor: f64,
) -> Result<f64> {
    let (_, tape) = model.forward_recorded(batch)?;
    let analytic = model.backward(&tape, weights)?;
    let objective = |m: &NetworkModel| -> Result<f64> {
        let out = m.estimate(batch)?;
        Ok(out.values().iter().zip(weights.values()).map(|(o, w)| o * w).sum())
    };
    let base = model.params();
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    for (i, &a) in analytic.iter().enumerate() {
        let mut p = base.clone();
        p[i] = base[i] + h;
        probe.set_params(&p)?;
        let up = objective(&probe)?;
        p[i] = base[i] - h;
        probe.set_params(&p)?;
        let down = objective(&probe)?;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(floor));
    }
    Ok(worst)
}
