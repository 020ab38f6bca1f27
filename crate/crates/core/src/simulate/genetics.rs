//! Haplotype frequencies and genotypes at bi-allelic loci.
//!
//! Haplotype `h` over `K` loci is the integer whose binary digits, most
//! significant first, are the alleles at loci `1..=K`.

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Matrix2;

pub const MAX_LOCI: usize = 8;

fn default_loci() -> usize {
    2
}
fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneticsSpec {
    #[serde(default = "default_loci")]
    pub n_loci: usize,
    /// Concentration of the symmetric Dirichlet over haplotype frequencies.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for GeneticsSpec {
    fn default() -> Self {
        Self {
            n_loci: 2,
            alpha: 1.0,
        }
    }
}

impl GeneticsSpec {
    pub fn n_haplotypes(&self) -> usize {
        1 << self.n_loci
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_LOCI).contains(&self.n_loci) {
            return Err(Error::config("n_loci", format!("must lie in 1..={MAX_LOCI}")));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be positive"));
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        (1..=self.n_loci).map(|i| format!("g{i}")).collect()
    }
}

/// Genotypes of `n` individuals at `k` loci, entries in {0, 1, 2}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenotypeMatrix {
    n: usize,
    k: usize,
    entries: Vec<u8>,
}

impl GenotypeMatrix {
    pub fn new(n: usize, k: usize, entries: Vec<u8>) -> Result<Self> {
        if entries.len() != n * k {
            return Err(Error::Dimension {
                axis: "genotype entries",
                expected: n * k,
                got: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|&&g| g > 2) {
            return Err(Error::Input(format!("genotype {bad} is not in {{0, 1, 2}}")));
        }
        if !(1..=MAX_LOCI).contains(&k) {
            return Err(Error::Input(format!("number of loci must lie in 1..={MAX_LOCI}")));
        }
        Ok(Self { n, k, entries })
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::Input("genotype rows differ in length".into()));
        }
        Self::new(rows.len(), k, rows.concat())
    }

    pub fn individuals(&self) -> usize {
        self.n
    }

    pub fn loci(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn entries(&self) -> &[u8] {
        &self.entries
    }

    /// Genotypes as reals, the network's input layout.
    pub fn to_matrix(&self) -> Matrix2 {
        Matrix2::from_raw(self.n, self.k, self.entries.iter().map(|&g| f64::from(g)).collect())
    }

    /// Inverse of [`Self::to_matrix`]; entries must be exactly 0, 1 or 2.
    pub fn from_matrix(m: &Matrix2) -> Result<Self> {
        let entries = m
            .values()
            .iter()
            .map(|&v| match v {
                0.0 => Ok(0u8),
                1.0 => Ok(1),
                2.0 => Ok(2),
                other => Err(Error::Input(format!("genotype {other} is not in {{0, 1, 2}}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(m.rows(), m.cols(), entries)
    }
}

/// Binary digits of `i`, most significant first.
pub fn int2bin(i: usize, digits: usize) -> Result<Vec<u8>> {
    if digits < usize::BITS as usize && i >> digits != 0 {
        return Err(Error::Input(format!("{i} does not fit in {digits} binary digits")));
    }
    Ok((0..digits).rev().map(|d| ((i >> d) & 1) as u8).collect())
}

pub fn bin2int(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | usize::from(b))
}

/// Symmetric Dirichlet(α) draw via normalised Gamma(α, 1) variates.
pub fn simulate_htfs<R: Rng + ?Sized>(spec: &GeneticsSpec, rng: &mut R) -> Result<Vec<f64>> {
    spec.validate()?;
    let gamma = Gamma::new(spec.alpha, 1.0).map_err(|e| Error::config("alpha", e.to_string()))?;
    loop {
        let draws: Vec<f64> = (0..spec.n_haplotypes()).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        // all-zero draws only happen for tiny α through underflow
        if total > 0.0 && total.is_finite() {
            return Ok(draws.into_iter().map(|g| g / total).collect());
        }
    }
}

pub(crate) fn check_simplex(p: &[f64], tol: f64) -> Result<()> {
    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Input("frequencies must be finite and non-negative".into()));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::Input(format!("frequencies sum to {s}, not 1")));
    }
    Ok(())
}

/// Draw `2n` haplotypes from `htfs`; consecutive pairs form individuals whose
/// genotype is the locus-wise allele sum.
pub fn simulate_genotypes<R: Rng + ?Sized>(
    n: usize,
    spec: &GeneticsSpec,
    htfs: &[f64],
    rng: &mut R,
) -> Result<GenotypeMatrix> {
    spec.validate()?;
    if htfs.len() != spec.n_haplotypes() {
        return Err(Error::Dimension {
            axis: "haplotype frequencies",
            expected: spec.n_haplotypes(),
            got: htfs.len(),
        });
    }
    check_simplex(htfs, 1e-9)?;
    let k = spec.n_loci;
    let dist = WeightedIndex::new(htfs).map_err(|e| Error::Input(e.to_string()))?;
    let mut entries = Vec::with_capacity(n * k);
    for _ in 0..n {
        let h1 = dist.sample(rng);
        let h2 = dist.sample(rng);
        for d in (0..k).rev() {
            entries.push((((h1 >> d) & 1) + ((h2 >> d) & 1)) as u8);
        }
    }
    GenotypeMatrix::new(n, k, entries)
}

/// Clamp negative entries to 0 and renormalise onto the simplex.
pub fn project_to_simplex(p: &[f64]) -> Result<Vec<f64>> {
    let clamped: Vec<f64> = p.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Degenerate(format!(
            "estimate {p:?} has no positive entry and cannot be projected onto the simplex"
        )));
    }
    Ok(clamped.into_iter().map(|v| v / total).collect())
}
