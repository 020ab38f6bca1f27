//! EM estimation of haplotype frequencies from unphased genotypes.
//!
//! Diplotypes are unordered haplotype pairs `(i, j)` with `i <= j`, indexed
//! by `j(j+1)/2 + i`. Homozygous pairs are part of the pair space.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::ordered_sum;
use crate::simulate::genetics::{check_simplex, MAX_LOCI};

pub use crate::simulate::genetics::GenotypeMatrix;

/// Unordered pairs with repetition over `m` objects.
pub fn npairs(m: usize) -> Result<usize> {
    if m == 0 {
        return Err(Error::Input("npairs needs at least one object".into()));
    }
    Ok(m * (m + 1) / 2)
}

pub fn diplotype_index(i: usize, j: usize) -> Result<usize> {
    if i > j {
        return Err(Error::Input(format!("diplotype ({i}, {j}) is not canonical: i > j")));
    }
    Ok(j * (j + 1) / 2 + i)
}

/// Inverse of [`diplotype_index`].
pub fn diplotype_pair(index: usize) -> (usize, usize) {
    // largest j with j(j+1)/2 <= index
    let mut j = ((((8 * index + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
    while j * (j + 1) / 2 > index {
        j -= 1;
    }
    while (j + 1) * (j + 2) / 2 <= index {
        j += 1;
    }
    (index - j * (j + 1) / 2, j)
}

fn check_genotype(g: &[u8], k: usize) -> Result<()> {
    if g.len() != k {
        return Err(Error::Dimension { axis: "loci", expected: k, got: g.len() });
    }
    if k == 0 || k > MAX_LOCI {
        return Err(Error::config("n_loci", format!("must be in 1..={MAX_LOCI}, got {k}")));
    }
    if let Some(v) = g.iter().find(|&&v| v > 2) {
        return Err(Error::Input(format!("genotype entry {v} outside {{0,1,2}}")));
    }
    Ok(())
}

/// Diplotype indices whose locus-wise allele sums equal `g`, ascending.
pub fn compatible_diplotypes(g: &[u8], k: usize) -> Result<Vec<usize>> {
    check_genotype(g, k)?;
    let mut base = 0usize;
    let mut het = Vec::new();
    for (locus, &v) in g.iter().enumerate() {
        let bit = 1usize << (k - 1 - locus);
        match v {
            2 => base |= bit,
            1 => het.push(bit),
            _ => {}
        }
    }
    if het.is_empty() {
        return Ok(vec![diplotype_index(base, base)?]);
    }
    let all_het: usize = het.iter().sum();
    // first heterozygous locus fixed to 0 on h1 enumerates each unordered pair once
    let free = &het[1..];
    let mut out = Vec::with_capacity(1 << free.len());
    for mask in 0..(1usize << free.len()) {
        let mut h1 = base;
        for (b, &bit) in free.iter().enumerate() {
            if mask >> b & 1 == 1 {
                h1 |= bit;
            }
        }
        let h2 = base | (all_het & !(h1 & all_het));
        out.push(diplotype_index(h1.min(h2), h1.max(h2))?);
    }
    out.sort_unstable();
    Ok(out)
}

/// Haplotype counts carried by a diplotype.
pub fn dt_contrib(index: usize, n_haplotypes: usize) -> Result<Vec<u32>> {
    let total = npairs(n_haplotypes)?;
    if index >= total {
        return Err(Error::Input(format!(
            "diplotype index {index} out of range for {n_haplotypes} haplotypes"
        )));
    }
    let (i, j) = diplotype_pair(index);
    let mut v = vec![0; n_haplotypes];
    v[i] += 1;
    v[j] += 1;
    Ok(v)
}

fn pair_prob(htfs: &[f64], i: usize, j: usize) -> f64 {
    if i == j {
        htfs[i] * htfs[i]
    } else {
        2.0 * htfs[i] * htfs[j]
    }
}

/// Hardy-Weinberg diplotype probabilities in index order.
pub fn hwe_diplotype_freqs(htfs: &[f64]) -> Result<Vec<f64>> {
    check_simplex(htfs, 1e-9)?;
    let m = htfs.len();
    let mut out = Vec::with_capacity(npairs(m)?);
    for j in 0..m {
        for i in 0..=j {
            out.push(pair_prob(htfs, i, j));
        }
    }
    Ok(out)
}

/// Haplotype frequencies on the simplex, indexed by the binary haplotype code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HaplotypeFreqs {
    values: Vec<f64>,
}

impl HaplotypeFreqs {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(Error::Input(format!(
                "{} frequencies is not a power of two",
                values.len()
            )));
        }
        check_simplex(&values, 1e-9)?;
        Ok(Self { values })
    }

    pub fn uniform(n_loci: usize) -> Self {
        let m = 1usize << n_loci;
        Self { values: vec![1.0 / m as f64; m] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmConfig {
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { eps: 1e-5, max_iter: 100 }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::config("eps", "must be finite and non-negative"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmResult {
    pub htfs: HaplotypeFreqs,
    pub converged: bool,
    pub iterations: usize,
    pub eps: f64,
}

/// Distinct genotype rows in first-appearance order.
struct Patterns {
    compat: Vec<Vec<usize>>,
    counts: Vec<f64>,
}

impl Patterns {
    fn new(g: &GenotypeMatrix) -> Result<Self> {
        let k = g.loci();
        let mut seen: HashMap<&[u8], usize> = HashMap::new();
        let mut compat = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for r in 0..g.individuals() {
            let row = g.row(r);
            match seen.get(row) {
                Some(&p) => counts[p] += 1.0,
                None => {
                    seen.insert(row, compat.len());
                    compat.push(compatible_diplotypes(row, k)?);
                    counts.push(1.0);
                }
            }
        }
        Ok(Self { compat, counts })
    }
}

/// Log-likelihood of unphased genotypes under HWE; `-inf` when some genotype
/// has probability zero.
pub fn observed_loglik(g: &GenotypeMatrix, htfs: &[f64]) -> f64 {
    if htfs.len() != 1 << g.loci() {
        return f64::NAN;
    }
    let Ok(patterns) = Patterns::new(g) else {
        return f64::NAN;
    };
    loglik_patterns(&patterns, htfs)
}

fn loglik_patterns(patterns: &Patterns, htfs: &[f64]) -> f64 {
    let mut terms = Vec::with_capacity(patterns.compat.len());
    let mut probs = Vec::new();
    for (dts, &c) in patterns.compat.iter().zip(&patterns.counts) {
        probs.clear();
        probs.extend(dts.iter().map(|&d| {
            let (i, j) = diplotype_pair(d);
            pair_prob(htfs, i, j)
        }));
        let total = ordered_sum(&mut probs);
        if total <= 0.0 {
            return f64::NEG_INFINITY;
        }
        terms.push(c * total.ln());
    }
    terms.iter().sum()
}

fn em_step(patterns: &Patterns, htfs: &[f64], n_individuals: usize) -> Vec<f64> {
    let mut counts = vec![0.0; htfs.len()];
    let mut probs = Vec::new();
    let mut scratch = Vec::new();
    for (dts, &c) in patterns.compat.iter().zip(&patterns.counts) {
        probs.clear();
        probs.extend(dts.iter().map(|&d| {
            let (i, j) = diplotype_pair(d);
            pair_prob(htfs, i, j)
        }));
        scratch.clear();
        scratch.extend_from_slice(&probs);
        let total = ordered_sum(&mut scratch);
        let uniform = 1.0 / dts.len() as f64;
        for (&d, &p) in dts.iter().zip(&probs) {
            let post = if total > 0.0 { p / total } else { uniform };
            let (i, j) = diplotype_pair(d);
            counts[i] += c * post;
            counts[j] += c * post;
        }
    }
    let denom = 2.0 * n_individuals as f64;
    counts.into_iter().map(|v| v / denom).collect()
}

/// EM from uniform frequencies; stops once the largest componentwise change
/// is at most `eps` or after `max_iter` updates.
pub fn em_estimate(g: &GenotypeMatrix, cfg: &EmConfig) -> Result<EmResult> {
    em_run(g, cfg, None)
}

/// As [`em_estimate`], also returning the frequencies before the first and
/// after every update.
pub fn em_estimate_traced(g: &GenotypeMatrix, cfg: &EmConfig) -> Result<(EmResult, Vec<Vec<f64>>)> {
    let mut trace = Vec::new();
    let res = em_run(g, cfg, Some(&mut trace))?;
    Ok((res, trace))
}

fn em_run(g: &GenotypeMatrix, cfg: &EmConfig, mut trace: Option<&mut Vec<Vec<f64>>>) -> Result<EmResult> {
    cfg.validate()?;
    if g.individuals() == 0 {
        return Err(Error::InsufficientSamples { kind: "em", n: 0 });
    }
    let patterns = Patterns::new(g)?;
    let mut htfs = HaplotypeFreqs::uniform(g.loci()).into_values();
    if let Some(t) = trace.as_deref_mut() {
        t.push(htfs.clone());
    }
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let next = em_step(&patterns, &htfs, g.individuals());
        iterations += 1;
        let delta = next
            .iter()
            .zip(&htfs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        htfs = next;
        if let Some(t) = trace.as_deref_mut() {
            t.push(htfs.clone());
        }
        if delta <= cfg.eps {
            converged = true;
            break;
        }
    }
    log::debug!("em: {iterations} iterations, converged {converged}");
    Ok(EmResult {
        htfs: HaplotypeFreqs { values: htfs },
        converged,
        iterations,
        eps: cfg.eps,
    })
}

/// Exhaustive maximum of the two-locus likelihood over the grid
/// `{ (a,b,c,d)/steps : a+b+c+d = steps }`. Returns the maximiser and its
/// log-likelihood.
///
/// For fixed `p00` and `p11` the likelihood is concave along the remaining
/// edge, so each slice is maximised by bisection on forward differences.
pub fn grid_mle_two_locus(g: &GenotypeMatrix, steps: usize) -> Result<(Vec<f64>, f64)> {
    if g.loci() != 2 {
        return Err(Error::Dimension { axis: "loci", expected: 2, got: g.loci() });
    }
    if steps == 0 {
        return Err(Error::config("steps", "must be positive"));
    }
    // genotype class counts, index 3*g1 + g2
    let mut c = [0.0f64; 9];
    for r in 0..g.individuals() {
        let row = g.row(r);
        c[3 * row[0] as usize + row[1] as usize] += 1.0;
    }
    // exponents of log p_h collected from unambiguous classes
    let a = [
        2.0 * c[0] + c[1] + c[3],
        c[1] + 2.0 * c[2] + c[5],
        c[3] + 2.0 * c[6] + c[7],
        c[5] + c[7] + 2.0 * c[8],
    ];
    let constant = std::f64::consts::LN_2 * (c[1] + c[3] + c[5] + c[7] + c[4]);
    let inv = 1.0 / steps as f64;
    let logs: Vec<f64> = (0..=steps).map(|i| (i as f64 * inv).ln()).collect();
    let term = |coef: f64, i: usize| if coef == 0.0 { 0.0 } else { coef * logs[i] };
    let f = |i0: usize, i1: usize, i2: usize, i3: usize| -> f64 {
        let mix = (i0 * i3 + i1 * i2) as f64 * inv * inv;
        let m = if c[4] == 0.0 { 0.0 } else { c[4] * mix.ln() };
        term(a[0], i0) + term(a[1], i1) + term(a[2], i2) + term(a[3], i3) + m + constant
    };
    let mut best = (f64::NEG_INFINITY, [steps, 0, 0, 0]);
    let mut consider = |v: f64, idx: [usize; 4]| {
        if v > best.0 {
            best = (v, idx);
        }
    };
    for i0 in 0..=steps {
        for i3 in 0..=(steps - i0) {
            let s = steps - i0 - i3;
            consider(f(i0, 0, s, i3), [i0, 0, s, i3]);
            if s >= 1 {
                consider(f(i0, s, 0, i3), [i0, s, 0, i3]);
            }
            if s >= 2 {
                // interior points 1..s-1 are finite, bisect on the sign of f(x+1) - f(x)
                let (mut lo, mut hi) = (1usize, s - 1);
                while lo < hi {
                    let mid = (lo + hi) / 2;
                    if f(i0, mid + 1, s - mid - 1, i3) > f(i0, mid, s - mid, i3) {
                        lo = mid + 1;
                    } else {
                        hi = mid;
                    }
                }
                consider(f(i0, lo, s - lo, i3), [i0, lo, s - lo, i3]);
            }
        }
    }
    let (v, idx) = best;
    Ok((idx.iter().map(|&i| i as f64 * inv).collect(), v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::simulate::genetics::{simulate_genotypes, simulate_htfs, GeneticsSpec};
    use proptest::prelude::*;
    use rand::Rng;

    fn gm(rows: &[&[u8]]) -> GenotypeMatrix {
        GenotypeMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn pairs(g: &[u8]) -> Vec<(usize, usize)> {
        compatible_diplotypes(g, g.len()).unwrap().into_iter().map(diplotype_pair).collect()
    }

    #[test]
    fn npairs_values() {
        assert_eq!(npairs(4).unwrap(), 10);
        assert_eq!(npairs(1).unwrap(), 1);
        assert_eq!(npairs(8).unwrap(), 36);
        assert!(npairs(0).is_err());
    }

    #[test]
    fn diplotype_indexing() {
        assert_eq!(diplotype_index(0, 0).unwrap(), 0);
        assert_eq!(diplotype_index(1, 2).unwrap(), 4);
        assert!(diplotype_index(2, 1).is_err());
        for k in 1..=3 {
            let m = 1usize << k;
            for idx in 0..npairs(m).unwrap() {
                let (i, j) = diplotype_pair(idx);
                assert!(i <= j && j < m);
                assert_eq!(diplotype_index(i, j).unwrap(), idx);
            }
        }
        for idx in [1000, 12345, 32895] {
            let (i, j) = diplotype_pair(idx);
            assert_eq!(diplotype_index(i, j).unwrap(), idx);
        }
    }

    #[test]
    fn compatible_two_locus() {
        // haplotype codes: 00=0, 01=1, 10=2, 11=3
        assert_eq!(pairs(&[0, 0]), vec![(0, 0)]);
        let mut amb = pairs(&[1, 1]);
        amb.sort();
        assert_eq!(amb, vec![(0, 3), (1, 2)]);
        assert_eq!(pairs(&[2, 1]), vec![(2, 3)]);
    }

    #[test]
    fn compatible_count_and_sums_exhaustive() {
        for k in 1..=3usize {
            let m = 1usize << k;
            for code in 0..3usize.pow(k as u32) {
                let g: Vec<u8> = (0..k).map(|l| (code / 3usize.pow(l as u32) % 3) as u8).collect();
                let h = g.iter().filter(|&&v| v == 1).count();
                let dts = compatible_diplotypes(&g, k).unwrap();
                assert_eq!(dts.len(), 1.max(1 << h.saturating_sub(1)));
                // brute force over every pair
                let mut brute = Vec::new();
                for j in 0..m {
                    for i in 0..=j {
                        let sums: Vec<u8> = (0..k)
                            .map(|l| ((i >> (k - 1 - l) & 1) + (j >> (k - 1 - l) & 1)) as u8)
                            .collect();
                        if sums == g {
                            brute.push(diplotype_index(i, j).unwrap());
                        }
                    }
                }
                assert_eq!(dts, brute);
            }
        }
        assert!(compatible_diplotypes(&[3, 0], 2).is_err());
    }

    #[test]
    fn dt_contrib_cases() {
        assert_eq!(dt_contrib(diplotype_index(2, 2).unwrap(), 4).unwrap(), vec![0, 0, 2, 0]);
        assert_eq!(dt_contrib(diplotype_index(0, 3).unwrap(), 4).unwrap(), vec![1, 0, 0, 1]);
        for k in 1..=3 {
            let m = 1 << k;
            for idx in 0..npairs(m).unwrap() {
                assert_eq!(dt_contrib(idx, m).unwrap().iter().sum::<u32>(), 2);
            }
        }
        assert!(dt_contrib(10, 4).is_err());
    }

    #[test]
    fn hwe_cases() {
        assert_eq!(hwe_diplotype_freqs(&[0.5, 0.5]).unwrap(), vec![0.25, 0.5, 0.25]);
        let d = hwe_diplotype_freqs(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(d[0], 1.0);
        assert!(d[1..].iter().all(|&v| v == 0.0));
        assert!(hwe_diplotype_freqs(&[0.5, 0.6]).is_err());
        let spec = GeneticsSpec { n_loci: 3, alpha: 1.0 };
        let mut r = rng::stream(4, 0);
        for _ in 0..50 {
            let p = simulate_htfs(&spec, &mut r).unwrap();
            let total: f64 = hwe_diplotype_freqs(&p).unwrap().iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_locus_counts_in_one_step() {
        let g = gm(&[&[0], &[1], &[1], &[2]]);
        let res = em_estimate(&g, &EmConfig::default()).unwrap();
        assert_eq!(res.htfs.values(), &[0.5, 0.5]);
        assert!(res.converged);
        assert_eq!(res.iterations, 1);

        let g = gm(&[&[0], &[0], &[1], &[2], &[0]]);
        let (res, trace) = em_estimate_traced(&g, &EmConfig::default()).unwrap();
        assert_eq!(trace[1], vec![0.7, 0.3]);
        assert_eq!(res.htfs.values(), &[0.7, 0.3]);
    }

    #[test]
    fn unambiguous_genotypes_match_phased_counting() {
        let g = gm(&[&[0, 0], &[0, 1], &[2, 1], &[1, 0], &[2, 2], &[0, 2], &[1, 2]]);
        let (_, trace) = em_estimate_traced(&g, &EmConfig::default()).unwrap();
        // phased pairs: (0,0) (0,1) (2,3) (0,2) (3,3) (1,1) (1,3)
        let counts = [4.0, 4.0, 2.0, 4.0];
        let expected: Vec<f64> = counts.iter().map(|c| c / 14.0).collect();
        for (a, b) in trace[1].iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_oracle_example() {
        let mut rows: Vec<&[u8]> = vec![&[1, 1]; 6];
        rows.extend([&[0u8, 0][..], &[0, 0], &[2, 2], &[2, 2]]);
        let g = gm(&rows);
        let res = em_estimate(&g, &EmConfig { eps: 1e-7, max_iter: 100_000 }).unwrap();
        let (grid, grid_ll) = grid_mle_two_locus(&g, 1000).unwrap();
        let em_ll = observed_loglik(&g, res.htfs.values());
        let linf = res.htfs.values().iter().zip(&grid).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(linf <= 2e-3 || em_ll >= grid_ll, "{:?} vs {grid:?}", res.htfs.values());
        assert!(em_ll >= grid_ll - 1e-6);
    }

    #[test]
    fn grid_bisection_matches_full_enumeration() {
        let spec = GeneticsSpec { n_loci: 2, alpha: 1.0 };
        let mut r = rng::stream(8, 0);
        for _ in 0..10 {
            let p = simulate_htfs(&spec, &mut r).unwrap();
            let n = r.random_range(1..40);
            let g = simulate_genotypes(n, &spec, &p, &mut r).unwrap();
            let steps = 60;
            let (_, fast) = grid_mle_two_locus(&g, steps).unwrap();
            let mut full = f64::NEG_INFINITY;
            for a in 0..=steps {
                for b in 0..=(steps - a) {
                    for c in 0..=(steps - a - b) {
                        let q = [a, b, c, steps - a - b - c].map(|i| i as f64 / steps as f64);
                        full = full.max(observed_loglik(&g, &q));
                    }
                }
            }
            assert!((fast - full).abs() < 1e-9 * full.abs().max(1.0), "{fast} vs {full}");
        }
    }

    #[test]
    fn loglik_values() {
        assert_eq!(observed_loglik(&gm(&[&[0]]), &[1.0, 0.0]), 0.0);
        assert!((observed_loglik(&gm(&[&[1]]), &[0.5, 0.5]) - 0.5f64.ln()).abs() < 1e-15);
        assert_eq!(observed_loglik(&gm(&[&[2]]), &[1.0, 0.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn zero_probability_fallback_is_uniform() {
        let g = gm(&[&[1, 1]]);
        let patterns = Patterns::new(&g).unwrap();
        let next = em_step(&patterns, &[1.0, 0.0, 0.0, 0.0], 1);
        assert_eq!(next, vec![0.25; 4]);
    }

    #[test]
    fn config_errors() {
        let g = gm(&[&[1]]);
        assert!(em_estimate(&g, &EmConfig { eps: -1.0, max_iter: 10 }).is_err());
        assert!(em_estimate(&g, &EmConfig { eps: 1e-5, max_iter: 0 }).is_err());
        let res = em_estimate(&gm(&[&[1, 1], &[1, 0]]), &EmConfig { eps: 0.0, max_iter: 3 }).unwrap();
        assert!(res.iterations <= 3);
    }

    fn random_instance(seed: u64, max_k: usize, max_n: usize) -> GenotypeMatrix {
        let mut r = rng::stream(seed, 0);
        let k = r.random_range(1..=max_k);
        let spec = GeneticsSpec { n_loci: k, alpha: 1.0 };
        let p = simulate_htfs(&spec, &mut r).unwrap();
        let n = r.random_range(1..=max_n);
        simulate_genotypes(n, &spec, &p, &mut r).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn iterates_stay_on_simplex_and_loglik_is_monotone(seed in any::<u64>()) {
            let g = random_instance(seed, 3, 50);
            let (res, trace) = em_estimate_traced(&g, &EmConfig { eps: 1e-9, max_iter: 200 }).unwrap();
            prop_assert_eq!(trace.len(), res.iterations + 1);
            let mut prev = f64::NEG_INFINITY;
            for p in &trace {
                prop_assert!(p.iter().all(|&v| v >= 0.0));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                let ll = observed_loglik(&g, p);
                prop_assert!(ll >= prev - 1e-10, "{} < {}", ll, prev);
                prev = ll;
            }
            let last = &trace[trace.len() - 1];
            let prior = &trace[trace.len() - 2];
            let delta = last.iter().zip(prior).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            prop_assert_eq!(res.converged, delta <= res.eps);
        }

        #[test]
        fn allele_relabelling_permutes_estimates(seed in any::<u64>(), locus_pick in any::<usize>()) {
            let g = random_instance(seed, 3, 40);
            let k = g.loci();
            let locus = locus_pick % k;
            let flipped: Vec<u8> = (0..g.individuals())
                .flat_map(|r| {
                    let mut row = g.row(r).to_vec();
                    row[locus] = 2 - row[locus];
                    row
                })
                .collect();
            let gf = GenotypeMatrix::new(g.individuals(), k, flipped).unwrap();
            let cfg = EmConfig { eps: 1e-7, max_iter: 500 };
            let a = em_estimate(&g, &cfg).unwrap();
            let b = em_estimate(&gf, &cfg).unwrap();
            let bit = 1 << (k - 1 - locus);
            for h in 0..(1 << k) {
                prop_assert_eq!(a.htfs.values()[h], b.htfs.values()[h ^ bit]);
            }
            prop_assert_eq!(a.iterations, b.iterations);
        }
    }
}
