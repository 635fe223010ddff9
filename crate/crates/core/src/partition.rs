//! Set partitions of a finite ordered site set and the refinement lattice.
//!
//! Sites are numbered from 1. A [`SiteSet`] is a bitmask over sites 1..=64, so
//! iteration is always in increasing site order. A [`Partition`] keeps its
//! blocks sorted by their minimum site, which makes equality and hashing
//! canonical.
//!
//! Enumeration of all partitions of a set uses restricted-growth strings in
//! lexicographic order. That order is the row/column order of every generator
//! matrix over partitions in this crate. For three sites it reads
//! `1,2,3`, `1,2|3`, `1,3|2`, `1|2,3`, `1|2|3`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default cap on the number of sites for exhaustive partition enumeration
/// (Bell(8) = 4140 partitions).
pub const DEFAULT_PARTITION_CAP: usize = 8;

/// Largest representable site number.
pub const MAX_SITE: usize = 64;

/// A set of sites, stored as a bitmask (bit `i - 1` for site `i`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SiteSet(u64);

impl SiteSet {
    pub const EMPTY: SiteSet = SiteSet(0);

    pub fn from_sites<I: IntoIterator<Item = usize>>(sites: I) -> Result<Self> {
        let mut bits = 0u64;
        for s in sites {
            if s == 0 || s > MAX_SITE {
                return Err(Error::InvalidSite(s));
            }
            bits |= 1 << (s - 1);
        }
        Ok(SiteSet(bits))
    }

    /// `{lo, lo+1, ..., hi}`; empty when `lo > hi`.
    pub fn interval(lo: usize, hi: usize) -> Result<Self> {
        if lo > hi {
            return Ok(Self::EMPTY);
        }
        Self::from_sites(lo..=hi)
    }

    /// `{1, ..., n}`.
    pub fn full(n: usize) -> Result<Self> {
        Self::interval(1, n)
    }

    pub fn singleton(site: usize) -> Result<Self> {
        Self::from_sites([site])
    }

    pub const fn from_bits(bits: u64) -> Self {
        SiteSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, site: usize) -> bool {
        site >= 1 && site <= MAX_SITE && self.0 & (1 << (site - 1)) != 0
    }

    pub fn min_site(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize + 1)
    }

    pub fn max_site(self) -> Option<usize> {
        (self.0 != 0).then(|| 64 - self.0.leading_zeros() as usize)
    }

    pub fn iter(self) -> SiteIter {
        SiteIter(self.0)
    }

    pub fn union(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 | other.0)
    }

    pub fn intersection(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & other.0)
    }

    pub fn difference(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: SiteSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: SiteSet) -> bool {
        self.0 & other.0 == 0
    }

    /// True if `self` is ordered (contiguous) in `ground`: every element of
    /// `ground` between `min(self)` and `max(self)` belongs to `self`.
    pub fn is_interval_in(self, ground: SiteSet) -> bool {
        match (self.min_site(), self.max_site()) {
            (Some(lo), Some(hi)) => {
                let span = ground.intersection(SiteSet::interval(lo, hi).expect("valid sites"));
                self.is_subset(ground) && span == self
            }
            _ => true,
        }
    }

    /// Position of `site` within this set (0-based), if present.
    pub fn rank_of(self, site: usize) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let below = self.0 & ((1u64 << (site - 1)) - 1);
        Some(below.count_ones() as usize)
    }
}

/// Iterator over the sites of a [`SiteSet`] in increasing order.
#[derive(Clone, Debug)]
pub struct SiteIter(u64);

impl Iterator for SiteIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let tz = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(tz + 1)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for SiteIter {}

impl IntoIterator for SiteSet {
    type Item = usize;
    type IntoIter = SiteIter;

    fn into_iter(self) -> SiteIter {
        self.iter()
    }
}

impl fmt::Display for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl FromStr for SiteSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(SiteSet::EMPTY);
        }
        let mut set = SiteSet::EMPTY;
        for tok in s.split(',') {
            let site: usize = tok
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("invalid site {tok:?} in {s:?}")))?;
            let single = SiteSet::singleton(site)?;
            if !set.is_disjoint(single) {
                return Err(Error::Parse(format!("site {site} repeated in {s:?}")));
            }
            set = set.union(single);
        }
        Ok(set)
    }
}

/// A set partition in canonical form: nonempty, pairwise disjoint blocks
/// sorted by their minimum site.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    blocks: Vec<SiteSet>,
    ground: SiteSet,
}

/// Sort blocks by minimum and validate disjointness.
pub fn canonicalize(blocks: Vec<SiteSet>) -> Result<Partition> {
    Partition::new(blocks)
}

impl Partition {
    pub fn new(mut blocks: Vec<SiteSet>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::EmptyBlock);
        }
        let mut ground = SiteSet::EMPTY;
        for &b in &blocks {
            if b.is_empty() {
                return Err(Error::EmptyBlock);
            }
            if !ground.is_disjoint(b) {
                return Err(Error::Overlap(ground.intersection(b).to_string()));
            }
            ground = ground.union(b);
        }
        blocks.sort_by_key(|b| b.min_site());
        Ok(Partition { blocks, ground })
    }

    /// Builds a partition of `ground` from one label per site (in increasing
    /// site order); sites sharing a label share a block.
    pub fn from_labels(ground: SiteSet, labels: &[usize]) -> Result<Self> {
        if labels.len() != ground.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} sites",
                labels.len(),
                ground.len()
            )));
        }
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![SiteSet::EMPTY; k];
        for (site, &l) in ground.iter().zip(labels) {
            blocks[l] = blocks[l].union(SiteSet::singleton(site)?);
        }
        blocks.retain(|b| !b.is_empty());
        Partition::new(blocks)
    }

    /// The single-block partition 𝟏 of `ground`.
    pub fn coarsest(ground: SiteSet) -> Result<Self> {
        Partition::new(vec![ground])
    }

    /// The all-singletons partition 𝟎 of `ground`.
    pub fn finest(ground: SiteSet) -> Result<Self> {
        Partition::new(
            ground
                .iter()
                .map(|s| SiteSet::singleton(s).expect("site from a valid set"))
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[SiteSet] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> SiteSet {
        self.blocks[j]
    }

    pub fn ground(&self) -> SiteSet {
        self.ground
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_coarsest(&self) -> bool {
        self.blocks.len() == 1
    }

    pub fn is_finest(&self) -> bool {
        self.blocks.len() == self.ground.len()
    }

    pub fn block_index_of(&self, site: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.contains(site))
    }

    /// Every block is contiguous in the ground set.
    pub fn is_ordered(&self) -> bool {
        self.blocks.iter().all(|b| b.is_interval_in(self.ground))
    }

    fn check_ground(&self, other: &Partition) -> Result<()> {
        if self.ground != other.ground {
            return Err(Error::GroundMismatch {
                left: self.ground.to_string(),
                right: other.ground.to_string(),
            });
        }
        Ok(())
    }

    /// `self ≼ other`: every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &Partition) -> Result<bool> {
        self.check_ground(other)?;
        Ok(self.refines_unchecked(other))
    }

    pub(crate) fn refines_unchecked(&self, other: &Partition) -> bool {
        self.blocks
            .iter()
            .all(|a| other.blocks.iter().any(|b| a.is_subset(*b)))
    }

    /// Greatest lower bound: all nonempty pairwise block intersections.
    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        self.check_ground(other)?;
        let mut blocks = Vec::new();
        for a in &self.blocks {
            for b in &other.blocks {
                let c = a.intersection(*b);
                if !c.is_empty() {
                    blocks.push(c);
                }
            }
        }
        Partition::new(blocks)
    }

    /// Least upper bound: connected components of the block-overlap relation.
    pub fn join(&self, other: &Partition) -> Result<Partition> {
        self.check_ground(other)?;
        let mut merged: Vec<SiteSet> = Vec::new();
        for &b in self.blocks.iter().chain(other.blocks.iter()) {
            let mut acc = b;
            merged.retain(|m| {
                if m.is_disjoint(acc) {
                    true
                } else {
                    acc = acc.union(*m);
                    false
                }
            });
            merged.push(acc);
        }
        // A merge may bridge two earlier components; repeat until stable.
        loop {
            let before = merged.len();
            let mut next: Vec<SiteSet> = Vec::new();
            for b in merged {
                let mut acc = b;
                next.retain(|m| {
                    if m.is_disjoint(acc) {
                        true
                    } else {
                        acc = acc.union(*m);
                        false
                    }
                });
                next.push(acc);
            }
            merged = next;
            if merged.len() == before {
                break;
            }
        }
        Partition::new(merged)
    }

    /// Restriction `self|_u`: all nonempty `A_i ∩ u`.
    pub fn restrict(&self, u: SiteSet) -> Result<Partition> {
        if u.is_empty() {
            return Err(Error::EmptyBlock);
        }
        if !u.is_subset(self.ground) {
            return Err(Error::NotSubset {
                sub: u.to_string(),
                sup: self.ground.to_string(),
            });
        }
        Ok(self.restrict_unchecked(u))
    }

    pub(crate) fn restrict_unchecked(&self, u: SiteSet) -> Partition {
        let mut blocks: Vec<SiteSet> = self
            .blocks
            .iter()
            .map(|b| b.intersection(u))
            .filter(|b| !b.is_empty())
            .collect();
        blocks.sort_by_key(|b| b.min_site());
        Partition {
            blocks,
            ground: u,
        }
    }

    /// `self ∪ other` for partitions of disjoint ground sets.
    pub fn disjoint_union(&self, other: &Partition) -> Result<Partition> {
        if !self.ground.is_disjoint(other.ground) {
            return Err(Error::Overlap(
                self.ground.intersection(other.ground).to_string(),
            ));
        }
        let mut blocks = self.blocks.clone();
        blocks.extend_from_slice(&other.blocks);
        Partition::new(blocks)
    }

    /// The partition `A_{M∖j}` of `ground ∖ A_j`; `None` if `self` has one block.
    pub fn without_block(&self, j: usize) -> Option<Partition> {
        if self.blocks.len() <= 1 {
            return None;
        }
        let mut blocks = self.blocks.clone();
        let removed = blocks.remove(j);
        Some(Partition {
            blocks,
            ground: self.ground.difference(removed),
        })
    }

    /// Coarsening obtained by merging blocks that share a label
    /// (`labels[j]` is the label of block `j`).
    pub fn merge_by_labels(&self, labels: &[usize]) -> Partition {
        debug_assert_eq!(labels.len(), self.blocks.len());
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![SiteSet::EMPTY; k];
        for (b, &l) in self.blocks.iter().zip(labels) {
            blocks[l] = blocks[l].union(*b);
        }
        blocks.retain(|b| !b.is_empty());
        blocks.sort_by_key(|b| b.min_site());
        Partition {
            blocks,
            ground: self.ground,
        }
    }

    /// Merge blocks `i` and `j`.
    pub fn merge_pair(&self, i: usize, j: usize) -> Partition {
        let labels: Vec<usize> = (0..self.blocks.len())
            .map(|k| if k == j { i } else { k })
            .collect();
        self.merge_by_labels(&labels)
    }

    /// Replace block `j` by the blocks of `sub`, a partition of that block.
    pub fn replace_block(&self, j: usize, sub: &Partition) -> Partition {
        debug_assert_eq!(sub.ground, self.blocks[j]);
        let mut blocks: Vec<SiteSet> = self
            .blocks
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != j)
            .map(|(_, b)| *b)
            .collect();
        blocks.extend_from_slice(&sub.blocks);
        blocks.sort_by_key(|b| b.min_site());
        Partition {
            blocks,
            ground: self.ground,
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{b:?}")?;
        }
        f.write_str("}")
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses the `"1,3,4|2,5"` text format.
    fn from_str(s: &str) -> Result<Self> {
        let blocks = s
            .split('|')
            .map(|b| b.parse::<SiteSet>())
            .collect::<Result<Vec<_>>>()?;
        Partition::new(blocks).map_err(|e| match e {
            Error::EmptyBlock => Error::Parse(format!("empty block in {s:?}")),
            other => other,
        })
    }
}

/// Möbius function μ(a, b) of the partition lattice for `a ≼ b`:
/// `Π_j (−1)^(n_j−1) (n_j−1)!`, with `n_j` the number of blocks of `a`
/// inside block `j` of `b`.
pub fn mobius(a: &Partition, b: &Partition) -> Result<i64> {
    if !a.refines(b)? {
        return Err(Error::NotComparable {
            finer: a.to_string(),
            coarser: b.to_string(),
        });
    }
    Ok(mobius_unchecked(a, b))
}

pub(crate) fn mobius_unchecked(a: &Partition, b: &Partition) -> i64 {
    b.blocks()
        .iter()
        .map(|bj| {
            let nj = a.blocks().iter().filter(|ai| ai.is_subset(*bj)).count() as i64;
            mobius_chain(nj)
        })
        .product()
}

/// μ(𝟎, 𝟏) on a set of `k` elements: `(−1)^(k−1) (k−1)!`.
pub(crate) fn mobius_chain(k: i64) -> i64 {
    let f: i64 = (1..k).product();
    if (k - 1) % 2 == 0 {
        f
    } else {
        -f
    }
}

/// Restricted-growth strings of length `k` in lexicographic order.
pub fn restricted_growth_strings(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let mut cur = vec![0usize; k];
    fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=max + 1 {
            cur[i] = v;
            rec(i + 1, max.max(v), cur, out);
        }
    }
    // the first entry is always 0
    rec(1, 0, &mut cur, &mut out);
    out
}

/// Bell number B(k).
pub fn bell(k: usize) -> u64 {
    // Bell triangle.
    let mut row = vec![1u64];
    for _ in 0..k {
        let mut next = vec![*row.last().expect("nonempty")];
        for &v in &row {
            let last = *next.last().expect("nonempty");
            next.push(last + v);
        }
        row = next;
    }
    row[0]
}

/// All partitions of `w`, in restricted-growth order, subject to the default cap.
pub fn enumerate_partitions(w: SiteSet) -> Result<Vec<Partition>> {
    enumerate_partitions_capped(w, DEFAULT_PARTITION_CAP)
}

pub fn enumerate_partitions_capped(w: SiteSet, cap: usize) -> Result<Vec<Partition>> {
    if w.is_empty() {
        return Err(Error::EmptyBlock);
    }
    if w.len() > cap {
        return Err(Error::SizeCap {
            what: "site set for partition enumeration",
            size: w.len(),
            cap,
            hint: "use fewer sites or raise the partition cap",
        });
    }
    Ok(restricted_growth_strings(w.len())
        .iter()
        .map(|labels| Partition::from_labels(w, labels).expect("labels cover w"))
        .collect())
}

/// All `b` with `a ≼ b`, in restricted-growth order over the blocks of `a`.
pub fn coarsenings(a: &Partition) -> Result<Vec<Partition>> {
    coarsenings_capped(a, DEFAULT_PARTITION_CAP)
}

pub fn coarsenings_capped(a: &Partition, cap: usize) -> Result<Vec<Partition>> {
    if a.len() > cap {
        return Err(Error::SizeCap {
            what: "block count for coarsening enumeration",
            size: a.len(),
            cap,
            hint: "use fewer sites or raise the partition cap",
        });
    }
    Ok(restricted_growth_strings(a.len())
        .iter()
        .map(|labels| a.merge_by_labels(labels))
        .collect())
}

/// All `b` with `b ≼ a`: products of partitions of the individual blocks.
pub fn refinements(a: &Partition) -> Result<Vec<Partition>> {
    refinements_capped(a, DEFAULT_PARTITION_CAP)
}

pub fn refinements_capped(a: &Partition, cap: usize) -> Result<Vec<Partition>> {
    if a.ground().len() > cap {
        return Err(Error::SizeCap {
            what: "site set for refinement enumeration",
            size: a.ground().len(),
            cap,
            hint: "use fewer sites or raise the partition cap",
        });
    }
    let per_block: Vec<Vec<Partition>> = a
        .blocks()
        .iter()
        .map(|&b| enumerate_partitions_capped(b, cap))
        .collect::<Result<_>>()?;
    let mut acc: Vec<Vec<SiteSet>> = vec![Vec::new()];
    for choices in &per_block {
        let mut next = Vec::with_capacity(acc.len() * choices.len());
        for prefix in &acc {
            for c in choices {
                let mut v = prefix.clone();
                v.extend_from_slice(c.blocks());
                next.push(v);
            }
        }
        acc = next;
    }
    acc.into_iter().map(Partition::new).collect()
}

/// `{𝟏|_u} ∪ O₂(u)`: the coarsest partition of `u` followed by the splits of
/// `u` at each of its `|u| − 1` internal gaps, left to right.
pub fn ordered_partitions_le2(u: SiteSet) -> Vec<Partition> {
    if u.is_empty() {
        return Vec::new();
    }
    let sites: Vec<usize> = u.iter().collect();
    let mut out = vec![Partition::coarsest(u).expect("nonempty")];
    for cut in 1..sites.len() {
        let lead = SiteSet::from_sites(sites[..cut].iter().copied()).expect("valid");
        let trail = u.difference(lead);
        out.push(Partition::new(vec![lead, trail]).expect("disjoint nonempty"));
    }
    out
}

/// True if `p` lies in `O≤2` of its ground set.
pub fn is_ordered_le2(p: &Partition) -> bool {
    p.len() <= 2 && p.is_ordered()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Partition {
        s.parse().unwrap()
    }

    fn set(s: &str) -> SiteSet {
        s.parse().unwrap()
    }

    #[test]
    fn canonicalize_sorts_by_minimum() {
        let a = canonicalize(vec![set("2,4"), set("1"), set("3,5")]).unwrap();
        assert_eq!(a.blocks(), &[set("1"), set("2,4"), set("3,5")]);
        assert_eq!(a.ground(), SiteSet::full(5).unwrap());
        let one = canonicalize(vec![set("1,2,3")]).unwrap();
        assert!(one.is_coarsest());
        assert!(matches!(
            canonicalize(vec![set("1"), set("1,2")]),
            Err(Error::Overlap(_))
        ));
        assert_eq!(
            canonicalize(vec![set("1"), SiteSet::EMPTY]),
            Err(Error::EmptyBlock)
        );
    }

    #[test]
    fn refinement_examples() {
        let zero = Partition::finest(set("1,2,3")).unwrap();
        for b in enumerate_partitions(set("1,2,3")).unwrap() {
            assert!(zero.refines(&b).unwrap());
        }
        let one5 = Partition::coarsest(SiteSet::full(5).unwrap()).unwrap();
        assert!(p("1,3,4|2,5").refines(&one5).unwrap());
        assert!(!p("1,4|2,3|5").refines(&p("1,3,4|2,5")).unwrap());
        assert!(matches!(
            p("1,2").refines(&p("1,3")),
            Err(Error::GroundMismatch { .. })
        ));
    }

    #[test]
    fn meet_join_restrict_worked_example() {
        let a = p("1,3,4|2,5");
        let b = p("1,4|2,3|5");
        assert_eq!(a.meet(&b).unwrap(), p("1,4|2|3|5"));
        assert_eq!(a.join(&b).unwrap(), p("1,2,3,4,5"));
        assert_eq!(a.restrict(set("1,2,4")).unwrap(), p("1,4|2"));
        assert_eq!(a.restrict(a.ground()).unwrap(), a);
        let one = Partition::coarsest(SiteSet::full(5).unwrap()).unwrap();
        assert_eq!(one.restrict(set("2,4")).unwrap(), p("2,4"));
        assert_eq!(a.meet(&one).unwrap(), a);
        let zero = Partition::finest(a.ground()).unwrap();
        assert_eq!(a.join(&zero).unwrap(), a);
        assert!(matches!(
            a.restrict(set("1,6")),
            Err(Error::NotSubset { .. })
        ));
    }

    #[test]
    fn join_bridges_chains() {
        // {1,2},{3,4},{5,6} joined with {2,3},{4,5} collapses to one block.
        let a = p("1,2|3,4|5,6");
        let b = p("1|2,3|4,5|6");
        assert_eq!(a.join(&b).unwrap(), p("1,2,3,4,5,6"));
        let c = p("1,6|2|3|4|5");
        let d = p("1|2,6|3|4,5");
        assert_eq!(c.join(&d).unwrap(), p("1,2,6|3|4,5"));
    }

    #[test]
    fn mobius_examples() {
        let a = p("1,3|2");
        assert_eq!(mobius(&a, &a).unwrap(), 1);
        let zero = Partition::finest(set("1,2,3")).unwrap();
        let one = Partition::coarsest(set("1,2,3")).unwrap();
        assert_eq!(mobius(&zero, &one).unwrap(), 2);
        assert_eq!(mobius(&p("1|2"), &p("1,2")).unwrap(), -1);
        assert!(matches!(
            mobius(&one, &zero),
            Err(Error::NotComparable { .. })
        ));
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_partitions(set("1,2,3")).unwrap().len(), 5);
        assert_eq!(enumerate_partitions(SiteSet::full(4).unwrap()).unwrap().len(), 15);
        let order: Vec<String> = enumerate_partitions(set("1,2,3"))
            .unwrap()
            .iter()
            .map(|q| q.to_string())
            .collect();
        assert_eq!(order, ["1,2,3", "1,2|3", "1,3|2", "1|2,3", "1|2|3"]);
        let one = Partition::coarsest(set("1,2,3")).unwrap();
        assert_eq!(coarsenings(&one).unwrap(), vec![one.clone()]);
        assert!(matches!(
            enumerate_partitions(SiteSet::full(9).unwrap()),
            Err(Error::SizeCap { .. })
        ));
        assert_eq!(
            enumerate_partitions_capped(SiteSet::full(9).unwrap(), 9)
                .unwrap()
                .len() as u64,
            bell(9)
        );
    }

    #[test]
    fn bell_numbers() {
        let expect = [1u64, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (k, &b) in expect.iter().enumerate() {
            assert_eq!(bell(k), b);
        }
    }

    #[test]
    fn ordered_le2_examples() {
        let got = ordered_partitions_le2(set("1,2,3"));
        assert_eq!(got, vec![p("1,2,3"), p("1|2,3"), p("1,2|3")]);
        let got = ordered_partitions_le2(set("1,4,5"));
        assert!(got.contains(&p("1|4,5")));
        assert!(got.contains(&p("1,4|5")));
        assert_eq!(got.len(), 3);
        assert_eq!(ordered_partitions_le2(set("3")), vec![p("3")]);
    }

    #[test]
    fn ordered_in_ground() {
        assert!(set("1,2,5").is_interval_in(set("1,2,5,7,9")));
        assert!(!set("1,2,7").is_interval_in(set("1,2,5,7,9")));
        assert!(p("1,2,5|7,9").is_ordered());
        assert!(!p("1,2,7|5,9").is_ordered());
    }

    #[test]
    fn text_format() {
        let a = p("2,5|1,3,4");
        assert_eq!(a.to_string(), "1,3,4|2,5");
        assert!(matches!("1,2|".parse::<Partition>(), Err(Error::Parse(_))));
        assert!(matches!("1,1".parse::<Partition>(), Err(Error::Parse(_))));
        assert!(matches!("1,x".parse::<Partition>(), Err(Error::Parse(_))));
        assert!(matches!("1|1".parse::<Partition>(), Err(Error::Overlap(_))));
    }

    #[test]
    fn site_set_basics() {
        let s = set("3,1,7");
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1, 3, 7]);
        assert_eq!(s.min_site(), Some(1));
        assert_eq!(s.max_site(), Some(7));
        assert_eq!(s.rank_of(7), Some(2));
        assert_eq!(s.rank_of(2), None);
        assert_eq!(SiteSet::singleton(0), Err(Error::InvalidSite(0)));
        assert_eq!(SiteSet::singleton(65), Err(Error::InvalidSite(65)));
        assert!(SiteSet::singleton(64).unwrap().contains(64));
    }
}
