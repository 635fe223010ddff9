//! Finite measures on product type spaces.
//!
//! A type on the site set `u` is a tuple of letters, one per site of `u`,
//! with letters of site `i` in `0..|X_i|`. Types are indexed in mixed radix
//! with the lowest-numbered site as the most significant digit, so the types
//! of two binary sites are ordered `00, 01, 10, 11`.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::partition::SiteSet;

/// Default cap on the number of types `Π |X_i|`.
pub const DEFAULT_TYPE_STATE_CAP: usize = 1 << 20;

/// Alphabet sizes of the sites `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SiteSpace {
    cardinalities: Vec<usize>,
}

impl SiteSpace {
    pub fn new(cardinalities: Vec<usize>) -> Result<Self> {
        Self::with_cap(cardinalities, DEFAULT_TYPE_STATE_CAP)
    }

    pub fn with_cap(cardinalities: Vec<usize>, cap: usize) -> Result<Self> {
        if cardinalities.is_empty() {
            return Err(Error::Shape("a site space needs at least one site".into()));
        }
        if cardinalities.len() > crate::partition::MAX_SITE {
            return Err(Error::InvalidSite(cardinalities.len()));
        }
        if let Some(pos) = cardinalities.iter().position(|&c| c == 0) {
            return Err(Error::Shape(format!("site {} has an empty alphabet", pos + 1)));
        }
        let mut total = 1usize;
        for &c in &cardinalities {
            total = total.checked_mul(c).unwrap_or(usize::MAX);
        }
        if total > cap {
            return Err(Error::SizeCap {
                what: "type space",
                size: total,
                cap,
                hint: "use fewer sites or smaller alphabets",
            });
        }
        Ok(SiteSpace { cardinalities })
    }

    /// `n` sites with two letters each.
    pub fn binary(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn n_sites(&self) -> usize {
        self.cardinalities.len()
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    /// Alphabet size of `site` (1-based).
    pub fn cardinality(&self, site: usize) -> usize {
        self.cardinalities[site - 1]
    }

    /// The full site set `S = {1..n}`.
    pub fn sites(&self) -> SiteSet {
        SiteSet::full(self.n_sites()).expect("validated site count")
    }

    /// Alphabet sizes of the sites of `u`, in increasing site order.
    pub fn radices(&self, u: SiteSet) -> Vec<usize> {
        u.iter().map(|s| self.cardinality(s)).collect()
    }

    /// Number of types on the full site set.
    pub fn num_types(&self) -> usize {
        self.cardinalities.iter().product()
    }

    pub fn encode(&self, letters: &[usize]) -> usize {
        encode(&self.cardinalities, letters)
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        decode(&self.cardinalities, index)
    }

    pub fn format_type(&self, index: usize) -> String {
        format_letters(&self.decode(index))
    }

    pub fn parse_type(&self, s: &str) -> Result<usize> {
        parse_letters(s, &self.cardinalities).map(|l| self.encode(&l))
    }

    pub fn zero_measure(&self, u: SiteSet) -> Result<Measure> {
        if !u.is_subset(self.sites()) {
            return Err(Error::NotSubset {
                sub: u.to_string(),
                sup: self.sites().to_string(),
            });
        }
        let radices = self.radices(u);
        let len = radices.iter().product();
        Ok(Measure {
            sites: u,
            radices,
            weights: vec![0.0; len],
            signed: false,
        })
    }
}

/// Mixed-radix index of `letters`, first letter most significant.
pub fn encode(radices: &[usize], letters: &[usize]) -> usize {
    debug_assert_eq!(radices.len(), letters.len());
    radices
        .iter()
        .zip(letters)
        .fold(0, |acc, (&r, &l)| acc * r + l)
}

/// Inverse of [`encode`].
pub fn decode(radices: &[usize], mut index: usize) -> Vec<usize> {
    let mut letters = vec![0; radices.len()];
    for (slot, &r) in letters.iter_mut().zip(radices).rev() {
        *slot = index % r;
        index /= r;
    }
    letters
}

fn format_letters(letters: &[usize]) -> String {
    letters
        .iter()
        .map(|&l| char::from_digit(l as u32, 10).unwrap_or('?'))
        .collect()
}

fn parse_letters(s: &str, radices: &[usize]) -> Result<Vec<usize>> {
    let s = s.trim();
    if s.chars().count() != radices.len() {
        return Err(Error::Parse(format!(
            "type {s:?} should have {} letters",
            radices.len()
        )));
    }
    s.chars()
        .zip(radices)
        .map(|(c, &r)| match c.to_digit(10) {
            Some(d) if (d as usize) < r => Ok(d as usize),
            _ => Err(Error::Parse(format!("invalid letter {c:?} in type {s:?}"))),
        })
        .collect()
}

/// For every type index on `from_sites`, the index of its projection onto
/// `to_sites ⊆ from_sites`.
pub(crate) fn projector(from_sites: SiteSet, from_radices: &[usize], to_sites: SiteSet) -> Vec<usize> {
    let len: usize = from_radices.iter().product();
    let keep: Vec<bool> = from_sites.iter().map(|s| to_sites.contains(s)).collect();
    // Stride of each kept site in the target index.
    let mut strides = vec![0usize; from_radices.len()];
    let mut stride = 1;
    for k in (0..from_radices.len()).rev() {
        if keep[k] {
            strides[k] = stride;
            stride *= from_radices[k];
        }
    }
    let mut out = Vec::with_capacity(len);
    let mut digits = vec![0usize; from_radices.len()];
    let mut target = 0usize;
    for _ in 0..len {
        out.push(target);
        // odometer increment, last digit fastest
        for k in (0..from_radices.len()).rev() {
            digits[k] += 1;
            target += strides[k];
            if digits[k] < from_radices[k] {
                break;
            }
            target -= strides[k] * digits[k];
            digits[k] = 0;
        }
    }
    out
}

/// A finite measure on the types of a site set, stored densely.
///
/// `signed` marks outputs of linkage-disequilibrium operators, which may have
/// negative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Measure {
    sites: SiteSet,
    radices: Vec<usize>,
    weights: Vec<f64>,
    signed: bool,
}

impl Measure {
    pub fn new(sites: SiteSet, radices: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if radices.len() != sites.len() {
            return Err(Error::Shape(format!(
                "{} radices for {} sites",
                radices.len(),
                sites.len()
            )));
        }
        let len: usize = radices.iter().product();
        if weights.len() != len {
            return Err(Error::Shape(format!(
                "{} weights for {len} types",
                weights.len()
            )));
        }
        Ok(Measure {
            sites,
            radices,
            weights,
            signed: false,
        })
    }

    pub fn on_space(space: &SiteSpace, u: SiteSet, weights: Vec<f64>) -> Result<Self> {
        if !u.is_subset(space.sites()) {
            return Err(Error::NotSubset {
                sub: u.to_string(),
                sup: space.sites().to_string(),
            });
        }
        Self::new(u, space.radices(u), weights)
    }

    /// A measure on the empty site set, i.e. a scalar.
    pub fn scalar(value: f64) -> Self {
        Measure {
            sites: SiteSet::EMPTY,
            radices: Vec::new(),
            weights: vec![value],
            signed: false,
        }
    }

    /// Point mass `δ_x` on type index `x`.
    pub fn delta(sites: SiteSet, radices: Vec<usize>, x: usize) -> Result<Self> {
        let len: usize = radices.iter().product();
        let mut w = vec![0.0; len];
        *w.get_mut(x)
            .ok_or_else(|| Error::Shape(format!("type index {x} out of range")))? = 1.0;
        Self::new(sites, radices, w)
    }

    pub fn zeros_like(&self) -> Self {
        Measure {
            sites: self.sites,
            radices: self.radices.clone(),
            weights: vec![0.0; self.weights.len()],
            signed: self.signed,
        }
    }

    pub fn sites(&self) -> SiteSet {
        self.sites
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn into_signed(mut self) -> Self {
        self.signed = true;
        self
    }

    /// Total mass `‖m‖ = Σ_x m(x)`.
    pub fn norm(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    pub fn encode(&self, letters: &[usize]) -> usize {
        encode(&self.radices, letters)
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        decode(&self.radices, index)
    }

    pub fn format_type(&self, index: usize) -> String {
        format_letters(&self.decode(index))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= factor);
        out
    }

    /// `m / ‖m‖`.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroMeasure);
        }
        Ok(self.scaled(1.0 / n))
    }

    fn check_same_shape(&self, other: &Measure) -> Result<()> {
        if self.sites != other.sites || self.radices != other.radices {
            return Err(Error::Shape(format!(
                "measures live on {:?} and {:?}",
                self.sites, other.sites
            )));
        }
        Ok(())
    }

    /// `self + factor · other`.
    pub fn add_scaled(&mut self, other: &Measure, factor: f64) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += factor * b;
        }
        self.signed |= other.signed;
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Measure) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Pushforward `π_v . m` onto `v ⊆ sites(m)`. Projecting onto the empty
    /// set yields the scalar `‖m‖`.
    pub fn marginalize(&self, v: SiteSet) -> Result<Measure> {
        if !v.is_subset(self.sites) {
            return Err(Error::NotSubset {
                sub: v.to_string(),
                sup: self.sites.to_string(),
            });
        }
        if v == self.sites {
            return Ok(self.clone());
        }
        let radices: Vec<usize> = self
            .sites
            .iter()
            .zip(&self.radices)
            .filter(|(s, _)| v.contains(*s))
            .map(|(_, &r)| r)
            .collect();
        let len: usize = radices.iter().product();
        let mut weights = vec![0.0; len];
        let proj = projector(self.sites, &self.radices, v);
        for (x, &w) in self.weights.iter().enumerate() {
            weights[proj[x]] += w;
        }
        Ok(Measure {
            sites: v,
            radices,
            weights,
            signed: self.signed,
        })
    }
}

/// Site-ordered product measure of factors on pairwise disjoint site sets.
pub fn tensor_site_ordered(factors: &[&Measure]) -> Result<Measure> {
    let mut sites = SiteSet::EMPTY;
    for f in factors {
        if !sites.is_disjoint(f.sites) {
            return Err(Error::Overlap(sites.intersection(f.sites).to_string()));
        }
        sites = sites.union(f.sites);
    }
    // Radix of each site of the union, taken from the factor that owns it.
    let radices: Vec<usize> = sites
        .iter()
        .map(|s| {
            let f = factors
                .iter()
                .find(|f| f.sites.contains(s))
                .expect("site belongs to a factor");
            f.radices[f.sites.rank_of(s).expect("contained")]
        })
        .collect();
    let len: usize = radices.iter().product();
    let mut weights = vec![1.0; len];
    let mut signed = false;
    for f in factors {
        signed |= f.signed;
        let proj = projector(sites, &radices, f.sites);
        for (w, &p) in weights.iter_mut().zip(&proj) {
            *w *= f.weights[p];
        }
    }
    Ok(Measure {
        sites,
        radices,
        weights,
        signed,
    })
}

/// Writes a measure as CSV with header `type,weight`, rows in mixed-radix
/// order, weights with 17 significant digits.
pub fn write_measure_csv<W: Write>(m: &Measure, out: W) -> Result<()> {
    if m.radices.iter().any(|&r| r > 10) {
        return Err(Error::Shape(
            "the CSV type format supports alphabets of at most 10 letters".into(),
        ));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["type", "weight"])?;
    for (x, &v) in m.weights.iter().enumerate() {
        w.write_record([m.format_type(x), format_weight(v)])?;
    }
    w.flush()?;
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_weight(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads the CSV format written by [`write_measure_csv`] for a measure on
/// `sites` with the given alphabet sizes.
pub fn read_measure_csv<R: Read>(input: R, sites: SiteSet, radices: &[usize]) -> Result<Measure> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["type", "weight"] {
        return Err(Error::Parse(format!(
            "expected header \"type,weight\", found {:?}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let len: usize = radices.iter().product();
    let mut weights = Vec::with_capacity(len);
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        if rec.len() != 2 {
            return Err(Error::Parse(format!("line {line}: expected 2 fields")));
        }
        let letters = parse_letters(&rec[0], radices)
            .map_err(|e| Error::Parse(format!("line {line}: {e}")))?;
        if encode(radices, &letters) != row {
            return Err(Error::Parse(format!(
                "line {line}: type {} out of mixed-radix order",
                &rec[0]
            )));
        }
        let w: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: invalid weight {:?}", &rec[1])))?;
        weights.push(w);
    }
    if weights.len() != len {
        return Err(Error::Parse(format!(
            "expected {len} rows, found {}",
            weights.len()
        )));
    }
    Measure::new(sites, radices.to_vec(), weights)
}

/// A population of `N` individuals as a counting measure on the full type space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PopulationState {
    space: SiteSpace,
    counts: Vec<u32>,
}

impl PopulationState {
    pub fn new(space: SiteSpace, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != space.num_types() {
            return Err(Error::Shape(format!(
                "{} counts for {} types",
                counts.len(),
                space.num_types()
            )));
        }
        Ok(PopulationState { space, counts })
    }

    /// Builds a state from `(type index, count)` pairs.
    pub fn from_types(space: SiteSpace, types: &[(usize, u32)]) -> Result<Self> {
        let mut counts = vec![0u32; space.num_types()];
        for &(x, c) in types {
            *counts
                .get_mut(x)
                .ok_or_else(|| Error::Shape(format!("type index {x} out of range")))? += c;
        }
        Self::new(space, counts)
    }

    /// Parses the `type:count` list written by `Display`, e.g. `00:2 11:1`.
    pub fn parse(space: SiteSpace, s: &str) -> Result<Self> {
        let mut counts = vec![0u32; space.num_types()];
        for tok in s.split_whitespace() {
            let (ty, c) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected type:count, got {tok:?}")))?;
            let c: u32 = c
                .parse()
                .map_err(|_| Error::Parse(format!("bad count in {tok:?}")))?;
            counts[space.parse_type(ty)?] += c;
        }
        Self::new(space, counts)
    }

    /// Validates that `m` is a nonnegative integer measure on the full space.
    pub fn from_measure(space: SiteSpace, m: &Measure) -> Result<Self> {
        if m.sites() != space.sites() || m.radices() != space.cardinalities() {
            return Err(Error::Shape("measure does not live on the full type space".into()));
        }
        let counts = m
            .weights()
            .iter()
            .enumerate()
            .map(|(x, &w)| {
                if w < 0.0 || w.fract() != 0.0 || w > u32::MAX as f64 {
                    Err(Error::NotCounting(format!(
                        "weight {w} at type {}",
                        space.format_type(x)
                    )))
                } else {
                    Ok(w as u32)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(space, counts)
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn count(&self, x: usize) -> u32 {
        self.counts[x]
    }

    /// Population size `N = ‖z‖`.
    pub fn size(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn measure(&self) -> Measure {
        Measure {
            sites: self.space.sites(),
            radices: self.space.cardinalities().to_vec(),
            weights: self.counts.iter().map(|&c| c as f64).collect(),
            signed: false,
        }
    }

    /// Marginal counting measure `π_u . z`.
    pub fn marginal(&self, u: SiteSet) -> Result<Measure> {
        self.measure().marginalize(u)
    }

    /// `z + δ_x`.
    pub fn add_delta(&self, x: usize) -> Result<Measure> {
        let mut m = self.measure();
        *m.weights
            .get_mut(x)
            .ok_or_else(|| Error::Shape(format!("type index {x} out of range")))? += 1.0;
        Ok(m)
    }

    /// `z − δ_y`; fails if no individual of type `y` is present.
    pub fn sub_delta(&self, y: usize) -> Result<Measure> {
        let c = *self
            .counts
            .get(y)
            .ok_or_else(|| Error::Shape(format!("type index {y} out of range")))?;
        if c == 0 {
            return Err(Error::NegativeWeight { type_index: y });
        }
        let mut m = self.measure();
        m.weights[y] -= 1.0;
        Ok(m)
    }

    /// `z + δ_x − δ_y`: an individual of type `y` is replaced by one of type `x`.
    pub fn replace(&self, y: usize, x: usize) -> Result<PopulationState> {
        if self.counts.get(y).copied().unwrap_or(0) == 0 {
            return Err(Error::NegativeWeight { type_index: y });
        }
        if x >= self.counts.len() {
            return Err(Error::Shape(format!("type index {x} out of range")));
        }
        let mut next = self.clone();
        next.counts[y] -= 1;
        next.counts[x] += 1;
        Ok(next)
    }

    pub(crate) fn replace_in_place(&mut self, y: usize, x: usize) {
        self.counts[y] -= 1;
        self.counts[x] += 1;
    }

    /// The single type present, if the population is monomorphic.
    pub fn monomorphic_type(&self) -> Option<usize> {
        let mut present = self.counts.iter().enumerate().filter(|(_, &c)| c > 0);
        match (present.next(), present.next()) {
            (Some((x, _)), None) => Some(x),
            _ => None,
        }
    }

    /// One type index per individual, grouped by type.
    pub fn individuals(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(x, &c)| std::iter::repeat_n(x, c as usize))
            .collect()
    }
}
