use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Estimator;
use crate::rng::{self, StreamRng};
use crate::simulate::SimulatorSpec;
use crate::tensor::Matrix2;

use super::{estimate_one, simulate_and_estimate};

/// A distribution over the parameter space that can be sampled and evaluated.
pub trait ParamDistribution {
    fn dim(&self) -> usize;
    fn sample(&self, rng: &mut StreamRng) -> Result<Vec<f64>>;
    fn density(&self, theta: &[f64]) -> f64;
}

/// The training distribution of a simulator, used as ABC prior.
#[derive(Debug, Clone, Copy)]
pub struct SpecPrior<'a>(pub &'a SimulatorSpec);

impl ParamDistribution for SpecPrior<'_> {
    fn dim(&self) -> usize {
        self.0.param_dim()
    }

    fn sample(&self, rng: &mut StreamRng) -> Result<Vec<f64>> {
        self.0.draw_params(rng)
    }

    fn density(&self, theta: &[f64]) -> f64 {
        self.0.prior_density(theta)
    }
}

/// Equal-weight mixture of normals with a shared covariance.
#[derive(Debug, Clone)]
pub struct MixtureProposal {
    centers: Matrix2,
    scale: f64,
    /// lower Cholesky factor, row-major p×p
    chol: Vec<f64>,
    log_norm: f64,
    ridge: f64,
}

/// Mixture centred on the rows of `centers` with covariance
/// `s · cov(centers)` (centred, divisor `A − 1`).
pub fn mixture_proposal(centers: &Matrix2, s: f64) -> Result<MixtureProposal> {
    let a = centers.rows();
    let p = centers.cols();
    if a < 2 {
        return Err(Error::InsufficientSamples { kind: "mixture centers", n: a });
    }
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::config("scale", "must be positive"));
    }
    let mean: Vec<f64> = (0..p)
        .map(|c| centers.column(c).iter().sum::<f64>() / a as f64)
        .collect();
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for r in 0..a {
        let row = centers.row(r);
        for i in 0..p {
            for j in 0..=i {
                cov[(i, j)] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..p {
        for j in 0..=i {
            let v = s * cov[(i, j)] / (a - 1) as f64;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let (factor, ridge) = match Cholesky::new(cov.clone()) {
        Some(ch) => (ch, 0.0),
        None => {
            let trace = cov.trace();
            let ridge = if trace > 0.0 { 1e-8 * trace / p as f64 } else { 1e-8 };
            log::warn!("mixture covariance is singular, adding ridge {ridge:e}");
            let mut reg = cov;
            for i in 0..p {
                reg[(i, i)] += ridge;
            }
            let ch = Cholesky::new(reg)
                .ok_or_else(|| Error::Degenerate("mixture covariance not positive definite".into()))?;
            (ch, ridge)
        }
    };
    let l = factor.l();
    let mut chol = vec![0.0; p * p];
    let mut log_det = 0.0;
    for i in 0..p {
        for j in 0..=i {
            chol[i * p + j] = l[(i, j)];
        }
        log_det += 2.0 * l[(i, i)].ln();
    }
    let log_norm = -0.5 * (p as f64 * (2.0 * std::f64::consts::PI).ln() + log_det);
    Ok(MixtureProposal { centers: centers.clone(), scale: s, chol, log_norm, ridge })
}

impl MixtureProposal {
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn components(&self) -> usize {
        self.centers.rows()
    }

    /// Ridge added to the diagonal, 0 when the covariance was regular.
    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// Shared component covariance `L Lᵀ`.
    pub fn covariance(&self) -> Matrix2 {
        let p = self.centers.cols();
        let mut out = Matrix2::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                let v: f64 = (0..=i.min(j)).map(|k| self.chol[i * p + k] * self.chol[j * p + k]).sum();
                out.set(i, j, v);
            }
        }
        out
    }

    fn log_component(&self, theta: &[f64], c: usize, z: &mut [f64]) -> f64 {
        let p = theta.len();
        let center = self.centers.row(c);
        // forward substitution L z = θ − c
        for i in 0..p {
            let mut v = theta[i] - center[i];
            for k in 0..i {
                v -= self.chol[i * p + k] * z[k];
            }
            z[i] = v / self.chol[i * p + i];
        }
        self.log_norm - 0.5 * z.iter().map(|v| v * v).sum::<f64>()
    }
}

impl ParamDistribution for MixtureProposal {
    fn dim(&self) -> usize {
        self.centers.cols()
    }

    fn sample(&self, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let p = self.dim();
        let c = rng.random_range(0..self.components());
        let z: Vec<f64> = (0..p).map(|_| StandardNormal.sample(rng)).collect();
        let center = self.centers.row(c);
        Ok((0..p)
            .map(|i| center[i] + (0..=i).map(|k| self.chol[i * p + k] * z[k]).sum::<f64>())
            .collect())
    }

    fn density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.dim() {
            return 0.0;
        }
        let mut z = vec![0.0; theta.len()];
        let logs: Vec<f64> = (0..self.components())
            .map(|c| self.log_component(theta, c, &mut z))
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return 0.0;
        }
        let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        (max + (sum / self.components() as f64).ln()).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProposalKind {
    Prior,
    Mixture { scale: f64, centers: usize },
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbcPosterior {
    pub draws: Matrix2,
    pub weights: Vec<f64>,
    pub epsilon: f64,
    pub acceptance_rate: f64,
    pub n_proposed: usize,
    pub proposal: ProposalKind,
    /// Summary statistic of the observed dataset.
    pub observed: Vec<f64>,
}

fn default_accept_quantile() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbcConfig {
    pub n_draws: usize,
    #[serde(default = "default_accept_quantile")]
    pub accept_quantile: f64,
}

impl AbcConfig {
    pub fn accepted_count(&self) -> Result<usize> {
        if !(self.accept_quantile > 0.0 && self.accept_quantile <= 1.0) {
            return Err(Error::config("accept_quantile", "must lie in (0, 1]"));
        }
        if (self.n_draws as f64) * self.accept_quantile < 1.0 {
            return Err(Error::config(
                "accept_quantile",
                format!(
                    "{} draws at quantile {} accept no draw",
                    self.n_draws, self.accept_quantile
                ),
            ));
        }
        Ok(((self.n_draws as f64 * self.accept_quantile).round() as usize).clamp(1, self.n_draws))
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn check_dims<E: Estimator + ?Sized>(estimator: &E, spec: &SimulatorSpec, dim: usize) -> Result<()> {
    if dim != spec.param_dim() {
        return Err(Error::Dimension { axis: "parameter", expected: spec.param_dim(), got: dim });
    }
    if estimator.input_cols() != spec.input_cols() {
        return Err(Error::Dimension {
            axis: "columns",
            expected: spec.input_cols(),
            got: estimator.input_cols(),
        });
    }
    Ok(())
}

/// Rejection ABC with the estimator as summary statistic. Draws are
/// generated from stream `i` of `seed` and the `round(q · n_draws)` closest
/// summaries are kept; ε is the largest accepted distance.
pub fn abc_sample<E: Estimator + ?Sized, P: ParamDistribution + ?Sized>(
    estimator: &E,
    spec: &SimulatorSpec,
    data: &Matrix2,
    prior: &P,
    cfg: &AbcConfig,
    seed: u64,
) -> Result<AbcPosterior> {
    let accept = cfg.accepted_count()?;
    check_dims(estimator, spec, prior.dim())?;
    let observed = estimate_one(estimator, data)?;
    let n = data.rows();
    let thetas = (0..cfg.n_draws)
        .map(|i| prior.sample(&mut rng::stream(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    // dataset streams follow the parameter streams
    let summaries = simulate_and_estimate(estimator, spec, &thetas, n, seed, cfg.n_draws as u64)?;
    let dist: Vec<f64> = (0..cfg.n_draws).map(|i| distance(summaries.row(i), &observed)).collect();
    let mut order: Vec<usize> = (0..cfg.n_draws).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    order.truncate(accept);
    let epsilon = dist[order[accept - 1]];
    order.sort_unstable();
    let p = prior.dim();
    let mut values = Vec::with_capacity(accept * p);
    for &i in &order {
        values.extend_from_slice(&thetas[i]);
    }
    Ok(AbcPosterior {
        draws: Matrix2::new(accept, p, values)?,
        weights: vec![1.0; accept],
        epsilon,
        acceptance_rate: accept as f64 / cfg.n_draws as f64,
        n_proposed: cfg.n_draws,
        proposal: ProposalKind::Prior,
        observed,
    })
}

/// Importance-sampling ABC at a fixed tolerance: draws from `proposal` with
/// summary within `epsilon` are kept with weight `prior / proposal`.
/// Draws outside the prior support are rejected without simulation.
#[allow(clippy::too_many_arguments)]
pub fn importance_sample<E, P, Q>(
    estimator: &E,
    spec: &SimulatorSpec,
    data: &Matrix2,
    prior: &P,
    proposal: &Q,
    epsilon: f64,
    n_draws: usize,
    seed: u64,
) -> Result<AbcPosterior>
where
    E: Estimator + ?Sized,
    P: ParamDistribution + ?Sized,
    Q: ParamDistribution + ?Sized,
{
    if n_draws == 0 {
        return Err(Error::config("n_draws", "must be positive"));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::config("epsilon", "must be non-negative"));
    }
    check_dims(estimator, spec, proposal.dim())?;
    let observed = estimate_one(estimator, data)?;
    let n = data.rows();
    let mut kept = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n_draws {
        let theta = proposal.sample(&mut rng::stream(seed, i as u64))?;
        let prior_d = prior.density(&theta);
        if prior_d > 0.0 && spec.in_support(&theta) {
            kept.push(theta);
            weights.push(prior_d / proposal.density(&kept[kept.len() - 1]));
        }
    }
    let summaries = simulate_and_estimate(estimator, spec, &kept, n, seed, n_draws as u64)?;
    let p = proposal.dim();
    let mut values = Vec::new();
    let mut acc_weights = Vec::new();
    for (i, theta) in kept.iter().enumerate() {
        if distance(summaries.row(i), &observed) <= epsilon {
            values.extend_from_slice(theta);
            acc_weights.push(weights[i]);
        }
    }
    let accepted = acc_weights.len();
    if accepted == 0 {
        return Err(Error::Degenerate(format!(
            "no proposal draw out of {n_draws} fell within epsilon {epsilon}"
        )));
    }
    if acc_weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Degenerate("proposal density vanished at an accepted draw".into()));
    }
    Ok(AbcPosterior {
        draws: Matrix2::new(accepted, p, values)?,
        weights: acc_weights,
        epsilon,
        acceptance_rate: accepted as f64 / n_draws as f64,
        n_proposed: n_draws,
        proposal: ProposalKind::Custom,
        observed,
    })
}

/// One refinement stage: mixture proposal around the draws of `initial`
/// with scale `s`, at the tolerance of `initial`.
#[allow(clippy::too_many_arguments)]
pub fn abc_importance_refine<E, P>(
    estimator: &E,
    spec: &SimulatorSpec,
    data: &Matrix2,
    prior: &P,
    initial: &AbcPosterior,
    s: f64,
    n_draws: usize,
    seed: u64,
) -> Result<AbcPosterior>
where
    E: Estimator + ?Sized,
    P: ParamDistribution + ?Sized,
{
    let proposal = mixture_proposal(&initial.draws, s)?;
    let mut post =
        importance_sample(estimator, spec, data, prior, &proposal, initial.epsilon, n_draws, seed)?;
    post.proposal = ProposalKind::Mixture { scale: s, centers: initial.draws.rows() };
    Ok(post)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSummary {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// `(level, per-coordinate quantile)` pairs.
    pub quantiles: Vec<(f64, Vec<f64>)>,
    /// Kish effective sample size `(Σw)² / Σw²`.
    pub ess: f64,
}

impl WeightedSummary {
    /// Monte-Carlo standard error of each mean, `sd / √ess`.
    pub fn mean_se(&self) -> Vec<f64> {
        self.sd.iter().map(|s| s / self.ess.sqrt()).collect()
    }
}

/// Smallest value whose normalised cumulative weight reaches `q`.
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::Dimension { axis: "weights", expected: values.len(), got: weights.len() });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Degenerate("total weight is zero".into()));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut cum = 0.0;
    for &i in &idx {
        cum += weights[i];
        if cum / total >= q {
            return Ok(values[i]);
        }
    }
    Ok(values[idx[idx.len() - 1]])
}

/// Self-normalised weighted mean, sd (population divisor) and quantiles at
/// 2.5%, 50% and 97.5%.
pub fn weighted_summary(post: &AbcPosterior) -> Result<WeightedSummary> {
    let w = &post.weights;
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || w.len() != post.draws.rows() {
        return Err(Error::Degenerate("posterior has zero total weight".into()));
    }
    let p = post.draws.cols();
    let mut mean = Vec::with_capacity(p);
    let mut sd = Vec::with_capacity(p);
    let levels = [0.025, 0.5, 0.975];
    let mut quantiles: Vec<(f64, Vec<f64>)> = levels.iter().map(|&l| (l, Vec::new())).collect();
    for c in 0..p {
        let col = post.draws.column(c);
        let m = col.iter().zip(w).map(|(x, wi)| x * wi).sum::<f64>() / total;
        let var = col.iter().zip(w).map(|(x, wi)| wi * (x - m) * (x - m)).sum::<f64>() / total;
        mean.push(m);
        sd.push(var.sqrt());
        for (l, out) in quantiles.iter_mut() {
            out.push(weighted_quantile(&col, w, *l)?);
        }
    }
    let ess = total * total / w.iter().map(|x| x * x).sum::<f64>();
    Ok(WeightedSummary { mean, sd, quantiles, ess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::SampleMean;
    use crate::simulate::{GeneticsSpec, NormalMeanSpec};
    use proptest::prelude::*;

    fn toy() -> SimulatorSpec {
        SimulatorSpec::NormalMean(NormalMeanSpec::default())
    }

    fn toy_data(theta: f64, n: usize, seed: u64) -> Matrix2 {
        toy().simulate_dataset(&[theta], n, &mut rng::stream(seed, 0)).unwrap()
    }

    fn posterior(draws: Vec<f64>, weights: Vec<f64>) -> AbcPosterior {
        AbcPosterior {
            draws: Matrix2::new(draws.len(), 1, draws).unwrap(),
            weights,
            epsilon: 0.0,
            acceptance_rate: 1.0,
            n_proposed: 1,
            proposal: ProposalKind::Prior,
            observed: vec![0.0],
        }
    }

    #[test]
    fn weighted_summary_hand_values() {
        let s = weighted_summary(&posterior(vec![0.0, 1.0], vec![1.0, 3.0])).unwrap();
        assert_eq!(s.mean, vec![0.75]);
        assert_eq!(s.quantiles[1].1, vec![1.0]);
        assert!(weighted_summary(&posterior(vec![0.0, 1.0], vec![0.0, 0.0])).is_err());
    }

    #[test]
    fn equal_weights_match_unweighted() {
        let xs = vec![0.3, -1.2, 2.5, 0.7, 0.1];
        let s = weighted_summary(&posterior(xs.clone(), vec![2.0; 5])).unwrap();
        let m = xs.iter().sum::<f64>() / 5.0;
        assert_eq!(s.mean[0], m);
        assert_eq!(s.quantiles[1].1[0], 0.3);
        assert!((s.ess - 5.0).abs() < 1e-12);
    }

    #[test]
    fn full_acceptance_keeps_every_draw() {
        let data = toy_data(0.5, 20, 1);
        let cfg = AbcConfig { n_draws: 300, accept_quantile: 1.0 };
        let post = abc_sample(&SampleMean::single_column(), &toy(), &data, &SpecPrior(&toy()), &cfg, 4).unwrap();
        assert_eq!(post.draws.rows(), 300);
        assert_eq!(post.acceptance_rate, 1.0);
        for i in 0..300 {
            let theta = toy().draw_params(&mut rng::stream(4, i as u64)).unwrap();
            assert_eq!(post.draws.row(i), &theta[..]);
        }
    }

    #[test]
    fn acceptance_set_is_the_smallest_distances() {
        let data = toy_data(-0.4, 25, 2);
        let est = SampleMean::single_column();
        let cfg = AbcConfig { n_draws: 1000, accept_quantile: 0.07 };
        let post = abc_sample(&est, &toy(), &data, &SpecPrior(&toy()), &cfg, 6).unwrap();
        assert_eq!(post.draws.rows(), 70);
        assert!((post.acceptance_rate - 0.07).abs() <= 1.0 / 1000.0);
        // recompute every distance and compare with a full sort
        let thetas: Vec<Vec<f64>> =
            (0..1000).map(|i| toy().draw_params(&mut rng::stream(6, i)).unwrap()).collect();
        let summaries = simulate_and_estimate(&est, &toy(), &thetas, 25, 6, 1000).unwrap();
        let mut d: Vec<(f64, usize)> =
            (0..1000).map(|i| ((summaries.get(i, 0) - post.observed[0]).abs(), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut expected: Vec<usize> = d[..70].iter().map(|x| x.1).collect();
        expected.sort_unstable();
        let got: Vec<f64> = post.draws.column(0);
        let want: Vec<f64> = expected.iter().map(|&i| thetas[i][0]).collect();
        assert_eq!(got, want);
        assert_eq!(post.epsilon, d[69].0);
    }

    #[test]
    fn too_small_quantile_is_config_error() {
        let cfg = AbcConfig { n_draws: 10, accept_quantile: 0.05 };
        assert!(matches!(cfg.accepted_count(), Err(Error::Config { .. })));
    }

    #[test]
    fn prior_as_proposal_gives_unit_weights() {
        let data = toy_data(0.2, 30, 3);
        let prior = SpecPrior(&toy());
        let post = importance_sample(&SampleMean::single_column(), &toy(), &data, &prior, &prior, 0.2, 2000, 9)
            .unwrap();
        assert!(post.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn identical_centers_collapse_to_one_normal() {
        let centers = Matrix2::new(2, 1, vec![1.5, 1.5]).unwrap();
        let prop = mixture_proposal(&centers, 1.0).unwrap();
        assert!(prop.ridge() > 0.0);
        let mut r = rng::stream(1, 0);
        for _ in 0..20 {
            assert!((prop.sample(&mut r).unwrap()[0] - 1.5).abs() < 1e-3);
        }
    }

    #[test]
    fn mixture_density_bounds_and_mass() {
        let centers = Matrix2::new(4, 1, vec![-1.0, 0.0, 0.5, 2.0]).unwrap();
        let prop = mixture_proposal(&centers, 0.5).unwrap();
        let var = prop.covariance().get(0, 0);
        let lower = 0.25 / (2.0 * std::f64::consts::PI * var).sqrt();
        for c in [-1.0, 0.0, 0.5, 2.0] {
            assert!(prop.density(&[c]) >= lower);
        }
        let h = 1e-3;
        let mass: f64 = (-10_000..10_000).map(|i| prop.density(&[i as f64 * h]) * h).sum();
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }

    #[test]
    fn mixture_moments_match_monte_carlo() {
        let centers = Matrix2::new(5, 2, vec![0.0, 0.0, 1.0, 0.5, -1.0, 2.0, 0.5, -0.5, 2.0, 1.0]).unwrap();
        let s = 0.7;
        let prop = mixture_proposal(&centers, s).unwrap();
        let sigma = prop.covariance();
        // total covariance = Σ + between-centre covariance (divisor A)
        let mean: Vec<f64> = (0..2).map(|c| centers.column(c).iter().sum::<f64>() / 5.0).collect();
        let mut between = [[0.0; 2]; 2];
        for r in 0..5 {
            for i in 0..2 {
                for j in 0..2 {
                    between[i][j] += (centers.get(r, i) - mean[i]) * (centers.get(r, j) - mean[j]) / 5.0;
                }
            }
        }
        let mut r = rng::stream(3, 0);
        let m = 200_000;
        let draws: Vec<Vec<f64>> = (0..m).map(|_| prop.sample(&mut r).unwrap()).collect();
        let emp_mean: Vec<f64> = (0..2).map(|c| draws.iter().map(|d| d[c]).sum::<f64>() / m as f64).collect();
        for i in 0..2 {
            assert!((emp_mean[i] - mean[i]).abs() < 0.01);
            for j in 0..2 {
                let emp = draws.iter().map(|d| (d[i] - emp_mean[i]) * (d[j] - emp_mean[j])).sum::<f64>()
                    / m as f64;
                let want = sigma.get(i, j) + between[i][j];
                assert!((emp - want).abs() < 0.02, "({i},{j}) {emp} vs {want}");
            }
        }
    }

    #[test]
    fn mixture_needs_two_centers() {
        let one = Matrix2::new(1, 1, vec![0.0]).unwrap();
        assert!(mixture_proposal(&one, 1.0).is_err());
        let two = Matrix2::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(mixture_proposal(&two, 0.0).is_err());
    }

    #[test]
    fn refinement_on_simplex_rejects_off_support_draws() {
        let spec = SimulatorSpec::Genetics(GeneticsSpec::default());
        let est = crate::estimator::SampleMean { input_cols: 2, columns: vec![0, 1, 0, 1] };
        let truth = [0.4, 0.1, 0.2, 0.3];
        let data = spec.simulate_dataset(&truth, 80, &mut rng::stream(1, 0)).unwrap();
        let prior = SpecPrior(&spec);
        let init = abc_sample(&est, &spec, &data, &prior, &AbcConfig { n_draws: 2000, accept_quantile: 0.05 }, 2)
            .unwrap();
        let refined = abc_importance_refine(&est, &spec, &data, &prior, &init, 1.0, 2000, 3).unwrap();
        for r in 0..refined.draws.rows() {
            let row = refined.draws.row(r);
            assert!(row.iter().all(|&v| v >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(refined.weights.iter().all(|&w| w > 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ess_bounded_by_count(ws in prop::collection::vec(0.01f64..10.0, 1..50)) {
            let n = ws.len();
            let s = weighted_summary(&posterior(vec![0.0; n], ws.clone())).unwrap();
            prop_assert!(s.ess <= n as f64 * (1.0 + 1e-12));
            let constant = ws.iter().all(|&w| w == ws[0]);
            if !constant {
                prop_assert!(s.ess < n as f64);
            }
        }
    }
}
