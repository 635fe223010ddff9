//! Recombination distributions, recombinators, sampling functions and
//! linkage-disequilibrium (correlation) operators.

use std::collections::HashMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::measure::{tensor_site_ordered, Measure};
use crate::partition::{
    coarsenings, is_ordered_le2, mobius_unchecked, ordered_partitions_le2, refinements, Partition,
    SiteSet,
};

/// Slack allowed when checking that crossover probabilities sum to at most 1.
const SIMPLEX_SLACK: f64 = 1e-12;

/// Default cap on the population size accepted by [`sampling_oracle`].
pub const DEFAULT_ORACLE_CAP: usize = 12;

/// Cap on the number of label tuples visited by [`sampling_oracle`].
const ORACLE_TUPLE_CAP: u128 = 50_000_000;

/// Sum of `cuts[i-1]` over the gaps `i` (split after site `i`) that separate
/// `u` according to `b`. For `b = 𝟏|_u` these are the gaps outside the span
/// of `u`; for a split between consecutive sites `s < t` of `u` they are the
/// gaps `s..t`.
fn cut_mass(cuts: &[f64], u: SiteSet, b: &Partition) -> Result<f64> {
    let n = cuts.len() + 1;
    if u.is_empty() || b.ground() != u || !is_ordered_le2(b) {
        return Err(Error::NotOrderedPartition(b.to_string()));
    }
    if u.max_site().unwrap_or(0) > n {
        return Err(Error::NotSubset {
            sub: u.to_string(),
            sup: SiteSet::full(n)?.to_string(),
        });
    }
    let gap = |i: usize| cuts[i - 1];
    if b.len() == 1 {
        let lo = u.min_site().expect("nonempty");
        let hi = u.max_site().expect("nonempty");
        Ok((1..lo).map(gap).sum::<f64>() + (hi..n).map(gap).sum::<f64>())
    } else {
        let s = b.block(0).max_site().expect("nonempty");
        let t = b.block(1).min_site().expect("nonempty");
        Ok((s..t).map(gap).sum())
    }
}

fn check_cuts(values: &[f64], what: &str) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidDistribution(format!(
                "{what} for the gap after site {} is {v}; must be finite and nonnegative",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Probabilities `r_A` for `A ∈ O≤2(S)`, stored as the `n − 1` crossover
/// probabilities (entry `i − 1` is the probability of a split after site `i`).
#[derive(Clone, Debug, PartialEq)]
pub struct RecombinationDistribution {
    crossover: Vec<f64>,
}

impl RecombinationDistribution {
    /// Distribution on `crossover.len() + 1` sites.
    pub fn new(crossover: Vec<f64>) -> Result<Self> {
        check_cuts(&crossover, "crossover probability")?;
        let total: f64 = crossover.iter().sum();
        if total > 1.0 + SIMPLEX_SLACK {
            return Err(Error::InvalidDistribution(format!(
                "crossover probabilities sum to {total}, exceeding 1"
            )));
        }
        Ok(RecombinationDistribution { crossover })
    }

    /// `r_𝟏 = 1` on `n` sites.
    pub fn none(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Shape("at least one site is required".into()));
        }
        Self::new(vec![0.0; n - 1])
    }

    pub fn n_sites(&self) -> usize {
        self.crossover.len() + 1
    }

    pub fn crossover_probs(&self) -> &[f64] {
        &self.crossover
    }

    /// `r_𝟏 = 1 − Σ_{A ∈ O₂(S)} r_A`.
    pub fn r_one(&self) -> f64 {
        (1.0 - self.crossover.iter().sum::<f64>()).max(0.0)
    }

    /// `r_A` for `A ∈ O≤2(S)`.
    pub fn prob(&self, a: &Partition) -> Result<f64> {
        let s = SiteSet::full(self.n_sites())?;
        if a.ground() != s {
            return Err(Error::GroundMismatch {
                left: a.ground().to_string(),
                right: s.to_string(),
            });
        }
        if !is_ordered_le2(a) {
            return Err(Error::NotOrderedPartition(a.to_string()));
        }
        Ok(if a.len() == 1 {
            self.r_one()
        } else {
            self.crossover[a.block(0).max_site().expect("nonempty") - 1]
        })
    }

    /// `(A, r_A)` for all `A ∈ O≤2(S)`, `𝟏` first, then splits left to right.
    pub fn table(&self) -> Vec<(Partition, f64)> {
        let s = SiteSet::full(self.n_sites()).expect("validated");
        ordered_partitions_le2(s)
            .into_iter()
            .map(|a| {
                let p = self.prob(&a).expect("ordered");
                (a, p)
            })
            .collect()
    }

    /// Marginal recombination probability `r_b^u`: the total probability of
    /// all `A ∈ O≤2(S)` with `A|_u = b`.
    pub fn marginal(&self, u: SiteSet, b: &Partition) -> Result<f64> {
        let mass = cut_mass(&self.crossover, u, b)?;
        Ok(if b.len() == 1 { self.r_one() + mass } else { mass })
    }

    /// `(b, r_b^u)` for all `b ∈ O≤2(u)`, in the order of
    /// [`ordered_partitions_le2`].
    pub fn marginal_table(&self, u: SiteSet) -> Result<Vec<(Partition, f64)>> {
        ordered_partitions_le2(u)
            .into_iter()
            .map(|b| self.marginal(u, &b).map(|p| (b, p)))
            .collect()
    }

    /// The same distribution with every crossover probability multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.crossover.iter().map(|c| c * factor).collect())
    }
}

/// Recombination rates `ϱ_A`, `A ∈ O₂(S)`, of the diffusion limit; entry
/// `i − 1` is the rate of a split after site `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionRates {
    rho: Vec<f64>,
}

impl DiffusionRates {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        check_cuts(&rho, "recombination rate")?;
        Ok(DiffusionRates { rho })
    }

    pub fn n_sites(&self) -> usize {
        self.rho.len() + 1
    }

    pub fn rates(&self) -> &[f64] {
        &self.rho
    }

    /// Marginal rate `ϱ_b^u` for `b ∈ O₂(u)`.
    pub fn marginal(&self, u: SiteSet, b: &Partition) -> Result<f64> {
        if b.len() != 2 {
            return Err(Error::NotOrderedPartition(b.to_string()));
        }
        cut_mass(&self.rho, u, b)
    }

    /// Total splitting rate of a block `u`: `Σ_{b ∈ O₂(u)} ϱ_b^u`.
    pub fn total_split_rate(&self, u: SiteSet) -> f64 {
        let lo = u.min_site().unwrap_or(1);
        let hi = u.max_site().unwrap_or(1);
        self.rho[lo - 1..hi - 1].iter().sum()
    }

    /// The finite-population distribution `r = ϱ / N`.
    pub fn at_population_size(&self, n_pop: f64) -> Result<RecombinationDistribution> {
        RecombinationDistribution::new(self.rho.iter().map(|r| r / n_pop).collect())
    }
}

/// Contents of a recombination file: TOML with `crossover_probs` and an
/// optional `rho` list, both of length `n − 1`.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RecombinationFile {
    pub crossover_probs: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
}

impl RecombinationFile {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: RecombinationFile =
            toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        if file.crossover_probs.is_none() && file.rho.is_none() {
            return Err(Error::InvalidDistribution(
                "recombination file needs crossover_probs or rho".into(),
            ));
        }
        if let (Some(c), Some(r)) = (&file.crossover_probs, &file.rho) {
            if c.len() != r.len() {
                return Err(Error::InvalidDistribution(format!(
                    "crossover_probs has {} entries but rho has {}",
                    c.len(),
                    r.len()
                )));
            }
        }
        Ok(file)
    }

    pub fn distribution(&self) -> Result<Option<RecombinationDistribution>> {
        self.crossover_probs
            .clone()
            .map(RecombinationDistribution::new)
            .transpose()
    }

    pub fn diffusion_rates(&self) -> Result<Option<DiffusionRates>> {
        self.rho.clone().map(DiffusionRates::new).transpose()
    }
}

fn check_partition_of(a: &Partition, m: &Measure) -> Result<()> {
    if a.ground() != m.sites() {
        return Err(Error::GroundMismatch {
            left: a.ground().to_string(),
            right: m.sites().to_string(),
        });
    }
    Ok(())
}

/// Evaluates recombinators of one measure for many partitions, reusing block
/// marginals.
#[derive(Debug)]
pub struct MarginalCache<'a> {
    measure: &'a Measure,
    marginals: HashMap<SiteSet, Measure>,
}

impl<'a> MarginalCache<'a> {
    pub fn new(measure: &'a Measure) -> Self {
        MarginalCache {
            measure,
            marginals: HashMap::new(),
        }
    }

    pub fn measure(&self) -> &Measure {
        self.measure
    }

    pub fn marginal(&mut self, v: SiteSet) -> Result<&Measure> {
        if !self.marginals.contains_key(&v) {
            let m = self.measure.marginalize(v)?;
            self.marginals.insert(v, m);
        }
        Ok(&self.marginals[&v])
    }

    /// `R̄_a(m)`.
    pub fn recombinator_bar(&mut self, a: &Partition) -> Result<Measure> {
        check_partition_of(a, self.measure)?;
        if a.len() == 1 {
            return Ok(self.measure.clone());
        }
        for &b in a.blocks() {
            self.marginal(b)?;
        }
        let factors: Vec<&Measure> = a.blocks().iter().map(|b| &self.marginals[b]).collect();
        tensor_site_ordered(&factors)
    }

    /// `H̄_a(m) = Σ_{b ≽ a} μ(a, b) R̄_b(m)`.
    pub fn sampling_bar(&mut self, a: &Partition) -> Result<Measure> {
        check_partition_of(a, self.measure)?;
        let mut out = self.measure.zeros_like();
        for b in coarsenings(a)? {
            let mu = mobius_unchecked(a, &b) as f64;
            let rb = self.recombinator_bar(&b)?;
            out.add_scaled(&rb, mu)?;
        }
        Ok(out)
    }
}

/// Non-normalised recombinator `R̄_a(m)`: the site-ordered product of the
/// block marginals of `m`.
pub fn recombinator_bar(a: &Partition, m: &Measure) -> Result<Measure> {
    MarginalCache::new(m).recombinator_bar(a)
}

/// `R_a(m) = R̄_a(m) / ‖m‖^|a|`.
pub fn recombinator(a: &Partition, m: &Measure) -> Result<Measure> {
    let norm = m.norm();
    if norm == 0.0 {
        return Err(Error::ZeroMeasure);
    }
    Ok(recombinator_bar(a, m)?.scaled(norm.powi(-(a.len() as i32))))
}

/// `H̄_a(z) = Σ_{b ≽ a} μ(a, b) R̄_b(z)`.
pub fn sampling_bar(a: &Partition, z: &Measure) -> Result<Measure> {
    MarginalCache::new(z).sampling_bar(a)
}

/// `N (N − 1) ⋯ (N − m + 1)`, zero when `m > N`.
pub fn falling_factorial(n: f64, m: usize) -> f64 {
    (0..m).map(|i| n - i as f64).map(|f| f.max(0.0)).product()
}

/// Population size `‖z‖` of a counting measure.
fn counting_size(z: &Measure) -> Result<usize> {
    if let Some((x, &w)) = z
        .weights()
        .iter()
        .enumerate()
        .find(|(_, &w)| w < 0.0 || w.fract() != 0.0)
    {
        return Err(Error::NotCounting(format!(
            "weight {w} at type {}",
            z.format_type(x)
        )));
    }
    Ok(z.norm() as usize)
}

/// `H_a(z) = H̄_a(z) (N − m)! / N!`: the type distribution of a sequence
/// assembled from `|a|` distinct individuals of `z`.
pub fn sampling(a: &Partition, z: &Measure) -> Result<Measure> {
    let n = counting_size(z)?;
    if a.len() > n {
        return Err(Error::SampleTooLarge {
            blocks: a.len(),
            individuals: n,
        });
    }
    Ok(sampling_bar(a, z)?.scaled(1.0 / falling_factorial(n as f64, a.len())))
}

/// `H̄_a(z)` by enumerating all ordered tuples of distinct individuals, one
/// per block of `a`.
pub fn sampling_oracle(a: &Partition, z: &Measure) -> Result<Measure> {
    sampling_oracle_capped(a, z, DEFAULT_ORACLE_CAP)
}

pub fn sampling_oracle_capped(a: &Partition, z: &Measure, cap: usize) -> Result<Measure> {
    check_partition_of(a, z)?;
    let n = counting_size(z)?;
    if n > cap {
        return Err(Error::SizeCap {
            what: "population for brute-force sampling",
            size: n,
            cap,
            hint: "use a smaller population",
        });
    }
    let m = a.len();
    let tuples: u128 = (0..m).map(|i| n.saturating_sub(i) as u128).product();
    if tuples > ORACLE_TUPLE_CAP {
        return Err(Error::SizeCap {
            what: "number of label tuples for brute-force sampling",
            size: tuples.min(usize::MAX as u128) as usize,
            cap: ORACLE_TUPLE_CAP as usize,
            hint: "use a smaller population or fewer blocks",
        });
    }
    let mut out = z.zeros_like();
    if m > n {
        return Ok(out);
    }
    let individuals: Vec<Vec<usize>> = z
        .weights()
        .iter()
        .enumerate()
        .flat_map(|(x, &c)| std::iter::repeat_n(z.decode(x), c as usize))
        .collect();
    // For each site position of the ground set, the block that owns it.
    let owner: Vec<usize> = z
        .sites()
        .iter()
        .map(|s| a.block_index_of(s).expect("a covers its ground"))
        .collect();
    let mut labels = vec![0usize; m];
    let mut used = vec![false; n];
    let mut letters = vec![0usize; owner.len()];
    fn rec(
        depth: usize,
        labels: &mut [usize],
        used: &mut [bool],
        letters: &mut [usize],
        individuals: &[Vec<usize>],
        owner: &[usize],
        out: &mut Measure,
    ) {
        if depth == labels.len() {
            for (k, &j) in owner.iter().enumerate() {
                letters[k] = individuals[labels[j]][k];
            }
            let x = out.encode(letters);
            out.weights_mut()[x] += 1.0;
            return;
        }
        for l in 0..used.len() {
            if !used[l] {
                used[l] = true;
                labels[depth] = l;
                rec(depth + 1, labels, used, letters, individuals, owner, out);
                used[l] = false;
            }
        }
    }
    rec(
        0,
        &mut labels,
        &mut used,
        &mut letters,
        &individuals,
        &owner,
        &mut out,
    );
    Ok(out)
}

/// Correlation operator `L_a(m) = Σ_{b ≼ a} μ(b, a) R_b(m)`.
pub fn lde_operator(a: &Partition, m: &Measure) -> Result<Measure> {
    check_partition_of(a, m)?;
    let norm = m.norm();
    if norm == 0.0 {
        return Err(Error::ZeroMeasure);
    }
    let mut cache = MarginalCache::new(m);
    let mut out = m.zeros_like().into_signed();
    for b in refinements(a)? {
        let mu = mobius_unchecked(&b, a) as f64;
        let rb = cache.recombinator_bar(&b)?;
        out.add_scaled(&rb, mu * norm.powi(-(b.len() as i32)))?;
    }
    Ok(out.into_signed())
}

/// `L_𝟏^u(z)` for a counting measure on `u`, `|u| = k ≤ 3`, through sampling
/// functions: `N! / (N^k (N − k)!) Σ_{a ∈ P(u)} μ(a, 𝟏) H_a(z)`.
pub fn lde_from_sampling(z: &Measure) -> Result<Measure> {
    let u = z.sites();
    let k = u.len();
    if k == 0 || k > 3 {
        return Err(Error::SizeCap {
            what: "site set for the explicit LDE formula",
            size: k,
            cap: 3,
            hint: "use lde_operator for larger site sets",
        });
    }
    let n = counting_size(z)?;
    if k > n {
        return Err(Error::SampleTooLarge {
            blocks: k,
            individuals: n,
        });
    }
    let one = Partition::coarsest(u)?;
    let coeff = falling_factorial(n as f64, k) / (n as f64).powi(k as i32);
    let mut cache = MarginalCache::new(z);
    let mut out = z.zeros_like().into_signed();
    for a in refinements(&one)? {
        let mu = mobius_unchecked(&a, &one) as f64;
        let h = cache.sampling_bar(&a)?;
        out.add_scaled(&h, coeff * mu / falling_factorial(n as f64, a.len()))?;
    }
    Ok(out.into_signed())
}

/// Offspring type distribution `Σ_{A ∈ O≤2(S)} r_A R_A(z)`.
pub fn offspring_distribution(r: &RecombinationDistribution, z: &Measure) -> Result<Measure> {
    if z.sites() != SiteSet::full(r.n_sites())? {
        return Err(Error::GroundMismatch {
            left: z.sites().to_string(),
            right: SiteSet::full(r.n_sites())?.to_string(),
        });
    }
    let norm = z.norm();
    if norm == 0.0 {
        return Err(Error::ZeroMeasure);
    }
    let mut cache = MarginalCache::new(z);
    let mut out = z.zeros_like();
    for (a, p) in r.table() {
        if p == 0.0 {
            continue;
        }
        let ra = cache.recombinator_bar(&a)?;
        out.add_scaled(&ra, p * norm.powi(-(a.len() as i32)))?;
    }
    Ok(out)
}
