//! The partitioning process on the set partitions of the sites, backward in
//! time: finite population, deterministic limit and diffusion limit.

use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::generator::GeneratorMatrix;
use crate::partition::{
    enumerate_partitions_capped, is_ordered_le2, Partition, SiteSet, DEFAULT_PARTITION_CAP,
};
use crate::recombination::{falling_factorial, DiffusionRates, RecombinationDistribution};
use crate::rng::{replicate_rng, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    FiniteN,
    DeterministicLimit,
    DiffusionLimit,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finite" | "finite_n" | "finite-n" => Ok(Variant::FiniteN),
            "deterministic" | "deterministic_limit" | "deterministic-limit" => {
                Ok(Variant::DeterministicLimit)
            }
            "diffusion" | "diffusion_limit" | "diffusion-limit" => Ok(Variant::DiffusionLimit),
            other => Err(Error::Parse(format!(
                "unknown variant {other:?}; expected finite, deterministic or diffusion"
            ))),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::FiniteN => "finite",
            Variant::DeterministicLimit => "deterministic",
            Variant::DiffusionLimit => "diffusion",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Finite {
        n_pop: u32,
        recomb: RecombinationDistribution,
    },
    Deterministic {
        recomb: RecombinationDistribution,
    },
    Diffusion {
        rates: DiffusionRates,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackwardModel {
    sites: SiteSet,
    kind: Kind,
}

/// `(N − (m − 1))! / (N − |B|)!`, the number of ways the new blocks can
/// choose distinct empty parents; zero when `|B| > N`.
pub fn combinatorial_weight(n_pop: u32, m: usize, b_len: usize) -> f64 {
    if b_len + 1 < m {
        return 0.0;
    }
    falling_factorial(n_pop as f64 - (m as f64 - 1.0), b_len + 1 - m)
}

/// True if a transition from `a` to `b` via splitting block `j` into `jj` is
/// possible: `b|_{A_j} ≽ jj` and `b` restricted to the other blocks equals
/// `a` without block `j`.
pub fn admissible(a: &Partition, j: usize, jj: &Partition, b: &Partition) -> bool {
    let aj = a.block(j);
    if b.ground() != a.ground() || jj.ground() != aj {
        return false;
    }
    if !jj.refines_unchecked(&b.restrict_unchecked(aj)) {
        return false;
    }
    match a.without_block(j) {
        None => true,
        Some(rest) => b.restrict_unchecked(rest.ground()) == rest,
    }
}

impl BackwardModel {
    pub fn finite(recomb: RecombinationDistribution, n_pop: u32) -> Result<Self> {
        if n_pop == 0 {
            return Err(Error::InvalidInitial("population size must be at least 1".into()));
        }
        Ok(BackwardModel {
            sites: SiteSet::full(recomb.n_sites())?,
            kind: Kind::Finite { n_pop, recomb },
        })
    }

    pub fn deterministic(recomb: RecombinationDistribution) -> Result<Self> {
        Ok(BackwardModel {
            sites: SiteSet::full(recomb.n_sites())?,
            kind: Kind::Deterministic { recomb },
        })
    }

    pub fn diffusion(rates: DiffusionRates) -> Result<Self> {
        Ok(BackwardModel {
            sites: SiteSet::full(rates.n_sites())?,
            kind: Kind::Diffusion { rates },
        })
    }

    pub fn variant(&self) -> Variant {
        match self.kind {
            Kind::Finite { .. } => Variant::FiniteN,
            Kind::Deterministic { .. } => Variant::DeterministicLimit,
            Kind::Diffusion { .. } => Variant::DiffusionLimit,
        }
    }

    pub fn sites(&self) -> SiteSet {
        self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Population size for the finite variant.
    pub fn population_size(&self) -> Option<u32> {
        match self.kind {
            Kind::Finite { n_pop, .. } => Some(n_pop),
            _ => None,
        }
    }

    pub fn recombination(&self) -> Option<&RecombinationDistribution> {
        match &self.kind {
            Kind::Finite { recomb, .. } | Kind::Deterministic { recomb } => Some(recomb),
            Kind::Diffusion { .. } => None,
        }
    }

    fn check_partition(&self, a: &Partition) -> Result<()> {
        if a.ground() != self.sites {
            return Err(Error::GroundMismatch {
                left: a.ground().to_string(),
                right: self.sites.to_string(),
            });
        }
        Ok(())
    }

    /// `ϑ_{j, jj; a, b}` for the finite variant:
    /// `r_jj^{A_j} N^{−|jj|} (N − (m − 1))! / (N − |b|)!` when admissible.
    pub fn theta_rate(&self, j: usize, jj: &Partition, a: &Partition, b: &Partition) -> Result<f64> {
        let Kind::Finite { n_pop, recomb } = &self.kind else {
            return Err(Error::Shape("theta_rate is defined for the finite variant".into()));
        };
        self.check_partition(a)?;
        self.check_partition(b)?;
        if j >= a.len() {
            return Err(Error::Shape(format!("block index {j} out of range")));
        }
        if jj.ground() != a.block(j) || !is_ordered_le2(jj) {
            return Err(Error::NotOrderedPartition(jj.to_string()));
        }
        let m = a.len();
        if m > *n_pop as usize || !admissible(a, j, jj, b) {
            return Ok(0.0);
        }
        let r = recomb.marginal(a.block(j), jj)?;
        Ok(r * (*n_pop as f64).powi(-(jj.len() as i32)) * combinatorial_weight(*n_pop, m, b.len()))
    }

    /// All transition terms out of `a`, one per outcome of the event
    /// narrative, including silent ones (`b = a`). Terms are not aggregated.
    pub fn transition_terms(&self, a: &Partition) -> Result<Vec<(Partition, f64)>> {
        self.check_partition(a)?;
        let m = a.len();
        let mut out = Vec::new();
        match &self.kind {
            Kind::Finite { n_pop, recomb } => {
                let n = *n_pop as f64;
                if m > *n_pop as usize {
                    return Ok(out);
                }
                let free = n - (m as f64 - 1.0);
                for j in 0..m {
                    let aj = a.block(j);
                    let others: Vec<usize> = (0..m).filter(|&k| k != j).collect();
                    for (jj, r) in recomb.marginal_table(aj)? {
                        if r == 0.0 {
                            continue;
                        }
                        if jj.len() == 1 {
                            out.push((a.clone(), r * free / n));
                            for &k in &others {
                                out.push((a.merge_pair(j, k), r / n));
                            }
                            continue;
                        }
                        let (j1, j2) = (jj.block(0), jj.block(1));
                        let split = a.replace_block(j, &jj);
                        let n2 = n * n;
                        // both fragments found new ancestors
                        out.push((split.clone(), r * free * (free - 1.0) / n2));
                        // fragments join each other in a new ancestor
                        out.push((a.clone(), r * free / n2));
                        for &k in &others {
                            let ak = a.block(k);
                            // one fragment joins A_k, the other is alone
                            out.push((join_blocks(&split, &[j1, ak]), r * free / n2));
                            out.push((join_blocks(&split, &[j2, ak]), r * free / n2));
                            // both join A_k
                            out.push((a.merge_pair(j, k), r / n2));
                            for &l in &others {
                                if l != k {
                                    let al = a.block(l);
                                    let b = join_blocks(&join_blocks(&split, &[j1, ak]), &[j2, al]);
                                    out.push((b, r / n2));
                                }
                            }
                        }
                    }
                }
            }
            Kind::Deterministic { recomb } => {
                for j in 0..m {
                    for (jj, r) in recomb.marginal_table(a.block(j))?.into_iter().skip(1) {
                        if r > 0.0 {
                            out.push((a.replace_block(j, &jj), r));
                        }
                    }
                }
            }
            Kind::Diffusion { rates } => {
                for j in 0..m {
                    let aj = a.block(j);
                    for jj in crate::partition::ordered_partitions_le2(aj).into_iter().skip(1) {
                        let rho = rates.marginal(aj, &jj)?;
                        if rho > 0.0 {
                            out.push((a.replace_block(j, &jj), rho));
                        }
                    }
                }
                for j in 0..m {
                    for k in j + 1..m {
                        out.push((a.merge_pair(j, k), 2.0));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Effective transitions out of `a`, aggregated by target.
    pub fn transitions_from(&self, a: &Partition) -> Result<Vec<(Partition, f64)>> {
        let mut agg: Vec<(Partition, f64)> = Vec::new();
        for (b, r) in self.transition_terms(a)? {
            if &b == a || r == 0.0 {
                continue;
            }
            match agg.iter_mut().find(|(c, _)| *c == b) {
                Some(e) => e.1 += r,
                None => agg.push((b, r)),
            }
        }
        Ok(agg)
    }

    /// The generator over all partitions of the sites, in restricted-growth
    /// order: `Θ`, `Θ′` or `Θ″` depending on the variant.
    pub fn generator(&self) -> Result<GeneratorMatrix<Partition>> {
        self.generator_capped(DEFAULT_PARTITION_CAP)
    }

    pub fn generator_capped(&self, cap: usize) -> Result<GeneratorMatrix<Partition>> {
        let states = enumerate_partitions_capped(self.sites, cap)?;
        let rates = states
            .iter()
            .map(|a| self.transitions_from(a))
            .collect::<Result<Vec<_>>>()?;
        GeneratorMatrix::from_rates(states, rates)
    }

    /// Simulates one path on `[0, t_end]` with stream `replicate` of `seed`.
    /// Silent events are recorded only when `record_silent` is set.
    pub fn simulate(
        &self,
        sigma0: &Partition,
        t_end: f64,
        seed: u64,
        replicate: u64,
        record_silent: bool,
    ) -> Result<PartitionTrajectory> {
        self.check_partition(sigma0)?;
        if let Kind::Finite { n_pop, .. } = self.kind {
            if sigma0.len() > n_pop as usize {
                return Err(Error::InvalidInitial(format!(
                    "initial partition has {} blocks but the population has {} individuals",
                    sigma0.len(),
                    n_pop
                )));
            }
        }
        if !(t_end >= 0.0) {
            return Err(Error::InvalidInitial(format!("t_end = {t_end} must be >= 0")));
        }
        let mut rng = replicate_rng(seed, replicate);
        let mut a = sigma0.clone();
        let mut t = 0.0;
        let mut events = Vec::new();
        while let Some((dt, b)) = self.next_event(&a, &mut rng)? {
            t += dt;
            if t > t_end {
                break;
            }
            if b != a || record_silent {
                events.push(BackwardEvent {
                    time: t,
                    partition: b.clone(),
                });
            }
            a = b;
        }
        Ok(PartitionTrajectory {
            initial: sigma0.clone(),
            events,
            seed,
            replicate,
            t_end,
        })
    }

    /// Waiting time and next state (possibly equal to `a`), or `None` if
    /// `a` is absorbing.
    pub fn next_event(&self, a: &Partition, rng: &mut Rng) -> Result<Option<(f64, Partition)>> {
        match &self.kind {
            Kind::Finite { n_pop, recomb } => {
                let m = a.len();
                let dt = Exp::new(m as f64).expect("m >= 1").sample(rng);
                let j = rng.random_range(0..m);
                let table = recomb.marginal_table(a.block(j))?;
                let idx = WeightedIndex::new(table.iter().map(|(_, p)| *p))
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?
                    .sample(rng);
                let jj = &table[idx].0;
                // Parent labels 0..m-2 carry the other blocks; the rest are empty.
                let others: Vec<SiteSet> = (0..m).filter(|&k| k != j).map(|k| a.block(k)).collect();
                let mut groups: Vec<(usize, SiteSet)> = Vec::new();
                for &frag in jj.blocks() {
                    let label = rng.random_range(0..*n_pop as usize);
                    match groups.iter_mut().find(|(l, _)| *l == label) {
                        Some(g) => g.1 = g.1.union(frag),
                        None => groups.push((label, frag)),
                    }
                }
                let mut blocks: Vec<SiteSet> = Vec::with_capacity(m + 1);
                for (k, &ak) in others.iter().enumerate() {
                    match groups.iter().position(|(l, _)| *l == k) {
                        Some(g) => blocks.push(ak.union(groups[g].1)),
                        None => blocks.push(ak),
                    }
                }
                blocks.extend(
                    groups
                        .iter()
                        .filter(|(l, _)| *l >= others.len())
                        .map(|(_, g)| *g),
                );
                Ok(Some((dt, Partition::new(blocks)?)))
            }
            _ => {
                let moves = self.transitions_from(a)?;
                let total: f64 = moves.iter().map(|(_, r)| r).sum();
                if total <= 0.0 {
                    return Ok(None);
                }
                let dt = Exp::new(total).expect("positive").sample(rng);
                let idx = WeightedIndex::new(moves.iter().map(|(_, r)| *r))
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?
                    .sample(rng);
                Ok(Some((dt, moves[idx].0.clone())))
            }
        }
    }
}

/// Merges the blocks of `p` that meet any of `parts` into one block.
fn join_blocks(p: &Partition, parts: &[SiteSet]) -> Partition {
    let labels: Vec<usize> = p
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if parts.iter().any(|q| !q.is_disjoint(*b)) {
                usize::MAX
            } else {
                i
            }
        })
        .collect();
    let first = labels.iter().position(|&l| l == usize::MAX);
    match first {
        None => p.clone(),
        Some(f) => p.merge_by_labels(
            &labels
                .iter()
                .map(|&l| if l == usize::MAX { f } else { l })
                .collect::<Vec<_>>(),
        ),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackwardEvent {
    pub time: f64,
    pub partition: Partition,
}

/// A simulated path of the partitioning process.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionTrajectory {
    pub initial: Partition,
    pub events: Vec<BackwardEvent>,
    pub seed: u64,
    pub replicate: u64,
    pub t_end: f64,
}

impl PartitionTrajectory {
    /// `Σ_t` (right-continuous).
    pub fn state_at(&self, t: f64) -> &Partition {
        self.events
            .iter()
            .take_while(|e| e.time <= t)
            .last()
            .map_or(&self.initial, |e| &e.partition)
    }

    pub fn final_state(&self) -> &Partition {
        self.state_at(f64::INFINITY)
    }

    /// CSV with header `time,partition`; the first row is the initial state
    /// at time 0.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "partition"])?;
        w.write_record([format!("{:.16e}", 0.0), self.initial.to_string()])?;
        for e in &self.events {
            w.write_record([format!("{:.16e}", e.time), e.partition.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}
