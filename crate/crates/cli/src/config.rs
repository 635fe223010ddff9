//! Run configuration: a TOML file plus command-line overrides.
//!
//! ```toml
//! sites = 2
//! alphabet = [2, 2]              # optional, binary by default
//! population_size = 10
//! crossover_probs = [0.2]        # finite and deterministic variants
//! rho = [2.0]                    # diffusion variant
//! variant = "finite"             # finite | deterministic | diffusion
//! initial_population = "00:5 11:5"
//! # initial_population_file = "z0.csv"   (CSV `type,weight`)
//! initial_partition = "1,2"      # coarsest by default
//! lde_sites = "1,2"              # all sites by default
//! t_end = 1.0
//! grid = 11                      # time points in [0, t_end]
//! replicates = 100
//! seed = 1
//! output = "out"
//! exact_events = false
//! write_trajectories = true
//! state_cap = 20000
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Spanned;

use moranrec::backward::{BackwardModel, Variant};
use moranrec::forward::{ForwardModel, DEFAULT_STATE_CAP};
use moranrec::measure::{read_measure_csv, PopulationState, SiteSpace};
use moranrec::partition::{Partition, SiteSet};
use moranrec::recombination::{DiffusionRates, RecombinationDistribution};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sites: Spanned<usize>,
    alphabet: Option<Spanned<Vec<usize>>>,
    population_size: Option<Spanned<u32>>,
    crossover_probs: Option<Spanned<Vec<f64>>>,
    rho: Option<Spanned<Vec<f64>>>,
    variant: Option<Spanned<String>>,
    initial_population: Option<Spanned<String>>,
    initial_population_file: Option<Spanned<String>>,
    initial_partition: Option<Spanned<String>>,
    lde_sites: Option<Spanned<String>>,
    t_end: Option<Spanned<f64>>,
    grid: Option<Spanned<usize>>,
    replicates: Option<Spanned<u64>>,
    seed: Option<Spanned<u64>>,
    output: Option<Spanned<String>>,
    exact_events: Option<bool>,
    write_trajectories: Option<bool>,
    state_cap: Option<Spanned<usize>>,
}

/// Values that take precedence over the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    pub t_end: Option<f64>,
    pub grid: Option<usize>,
    pub output: Option<PathBuf>,
    pub variant: Option<String>,
    pub exact_events: bool,
    pub summary_only: bool,
}

/// The validated configuration. Its TOML serialisation is what gets hashed.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub sites: usize,
    pub alphabet: Vec<usize>,
    pub population_size: Option<u32>,
    pub crossover_probs: Option<Vec<f64>>,
    pub rho: Option<Vec<f64>>,
    pub variant: String,
    pub initial_population: Option<String>,
    pub initial_partition: String,
    pub lde_sites: String,
    pub t_end: f64,
    pub grid: usize,
    pub replicates: u64,
    pub seed: u64,
    pub output: PathBuf,
    pub exact_events: bool,
    pub write_trajectories: bool,
    pub state_cap: usize,
    #[serde(skip)]
    origins: Origins,
}

/// Where a key's value came from, for error messages.
#[derive(Debug, Clone, Default)]
struct Origins {
    file: String,
    lines: Vec<(&'static str, usize)>,
    flags: Vec<(&'static str, &'static str)>,
}

impl Origins {
    fn locate(&self, key: &'static str) -> String {
        if let Some((_, flag)) = self.flags.iter().find(|(k, _)| *k == key) {
            return format!("{flag}");
        }
        match self.lines.iter().find(|(k, _)| *k == key) {
            Some((_, line)) => format!("{}:{line}: `{key}`", self.file),
            None => format!("{}: `{key}`", self.file),
        }
    }
}

fn line_of(src: &str, span: Range<usize>) -> usize {
    src[..span.start.min(src.len())].matches('\n').count() + 1
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        Self::from_toml(&src, &path.display().to_string(), overrides)
    }

    pub fn from_toml(src: &str, file: &str, overrides: &Overrides) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| format!(":{}", line_of(src, s))).unwrap_or_default();
            CliError::Validation(format!("{file}{line}: {}", e.message()))
        })?;
        let mut origins = Origins {
            file: file.to_string(),
            ..Default::default()
        };
        macro_rules! take {
            ($field:ident, $key:literal) => {
                raw.$field.map(|s| {
                    origins.lines.push(($key, line_of(src, s.span())));
                    s.into_inner()
                })
            };
        }
        let sites = {
            origins.lines.push(("sites", line_of(src, raw.sites.span())));
            raw.sites.into_inner()
        };
        let alphabet = take!(alphabet, "alphabet");
        let population_size = take!(population_size, "population_size");
        let crossover_probs = take!(crossover_probs, "crossover_probs");
        let rho = take!(rho, "rho");
        let variant = take!(variant, "variant");
        let initial_population = take!(initial_population, "initial_population");
        let initial_population_file = take!(initial_population_file, "initial_population_file");
        let initial_partition = take!(initial_partition, "initial_partition");
        let lde_sites = take!(lde_sites, "lde_sites");
        let t_end = take!(t_end, "t_end");
        let grid = take!(grid, "grid");
        let replicates = take!(replicates, "replicates");
        let seed = take!(seed, "seed");
        let output = take!(output, "output");
        let state_cap = take!(state_cap, "state_cap");

        let mut flag = |key: &'static str, name: &'static str, set: bool| {
            if set {
                origins.flags.push((key, name));
            }
        };
        flag("seed", "--seed", overrides.seed.is_some());
        flag("replicates", "--reps", overrides.replicates.is_some());
        flag("t_end", "--t-end", overrides.t_end.is_some());
        flag("grid", "--grid", overrides.grid.is_some());
        flag("variant", "--variant", overrides.variant.is_some());

        let alphabet = alphabet.unwrap_or_else(|| vec![2; sites]);
        let initial_partition = initial_partition.unwrap_or_else(|| {
            (1..=sites).map(|s| s.to_string()).collect::<Vec<_>>().join(",")
        });
        let lde_sites = lde_sites.unwrap_or_else(|| {
            (1..=sites).map(|s| s.to_string()).collect::<Vec<_>>().join(",")
        });

        let base_dir = Path::new(file).parent().unwrap_or(Path::new("."));
        let initial_population = match (initial_population, initial_population_file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(format!(
                    "{}: give either `initial_population` or `initial_population_file`, not both",
                    origins.locate("initial_population_file")
                )))
            }
            (Some(s), None) => Some(s),
            (None, Some(f)) => Some(read_population_file(&base_dir.join(&f), &alphabet, sites)
                .map_err(|e| CliError::Validation(format!("{}: {e}", origins.locate("initial_population_file"))))?),
            (None, None) => None,
        };

        let cfg = RunConfig {
            sites,
            alphabet,
            population_size,
            crossover_probs,
            rho,
            variant: overrides
                .variant
                .clone()
                .or(variant)
                .unwrap_or_else(|| "finite".into()),
            initial_population,
            initial_partition,
            lde_sites,
            t_end: overrides.t_end.or(t_end).unwrap_or(1.0),
            grid: overrides.grid.or(grid).unwrap_or(11),
            replicates: overrides.replicates.or(replicates).unwrap_or(100),
            seed: overrides.seed.or(seed).unwrap_or(1),
            output: overrides
                .output
                .clone()
                .or_else(|| output.map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out")),
            exact_events: overrides.exact_events || raw.exact_events.unwrap_or(false),
            write_trajectories: !overrides.summary_only && raw.write_trajectories.unwrap_or(true),
            state_cap: state_cap.unwrap_or(DEFAULT_STATE_CAP),
            origins,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn invalid(&self, key: &'static str, msg: impl std::fmt::Display) -> CliError {
        CliError::Validation(format!("{}: {msg}", self.origins.locate(key)))
    }

    fn missing(&self, key: &'static str, why: &str) -> CliError {
        CliError::Validation(format!(
            "{}: missing key `{key}` ({why})",
            self.origins.file
        ))
    }

    fn validate(&self) -> CliResult<()> {
        if self.sites == 0 || self.sites > 64 {
            return Err(self.invalid("sites", "must be between 1 and 64"));
        }
        if self.alphabet.len() != self.sites || self.alphabet.iter().any(|&c| c < 1) {
            return Err(self.invalid("alphabet", format!("needs {} entries, each at least 1", self.sites)));
        }
        for (key, v) in [("crossover_probs", &self.crossover_probs), ("rho", &self.rho)] {
            if let Some(v) = v {
                if v.len() + 1 != self.sites {
                    return Err(self.invalid(key, format!("needs {} entries (one per gap)", self.sites - 1)));
                }
            }
        }
        if let Some(c) = &self.crossover_probs {
            RecombinationDistribution::new(c.clone()).map_err(|e| self.invalid("crossover_probs", e))?;
        }
        if let Some(r) = &self.rho {
            DiffusionRates::new(r.clone()).map_err(|e| self.invalid("rho", e))?;
        }
        self.variant().map_err(|e| self.invalid("variant", e))?;
        if self.population_size == Some(0) {
            return Err(self.invalid("population_size", "must be at least 1"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(self.invalid("t_end", "must be finite and nonnegative"));
        }
        if self.grid == 0 {
            return Err(self.invalid("grid", "must be at least 1"));
        }
        let sigma0 = self.initial_partition().map_err(|e| self.invalid("initial_partition", e))?;
        if sigma0.ground() != SiteSet::full(self.sites).expect("checked") {
            return Err(self.invalid("initial_partition", format!("must partition all {} sites", self.sites)));
        }
        if let (Ok(Variant::FiniteN), Some(n)) = (self.variant(), self.population_size) {
            if sigma0.len() > n as usize {
                return Err(self.invalid(
                    "initial_partition",
                    format!("has {} blocks but the population has {n} individuals", sigma0.len()),
                ));
            }
        }
        let u: SiteSet = self.lde_sites.parse().map_err(|e| self.invalid("lde_sites", e))?;
        if u.is_empty() || !u.is_subset(SiteSet::full(self.sites).expect("checked")) {
            return Err(self.invalid("lde_sites", "must be a nonempty subset of the sites"));
        }
        if self.initial_population.is_some() {
            let z = self.population().map_err(|e| self.invalid("initial_population", e))?;
            if let Some(n) = self.population_size {
                if z.size() != n {
                    return Err(self.invalid(
                        "initial_population",
                        format!("has {} individuals, population_size is {n}", z.size()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> CliResult<SiteSpace> {
        Ok(SiteSpace::new(self.alphabet.clone())?)
    }

    pub fn variant(&self) -> moranrec::Result<Variant> {
        self.variant.parse()
    }

    pub fn initial_partition(&self) -> moranrec::Result<Partition> {
        self.initial_partition.parse()
    }

    pub fn lde_sites(&self) -> SiteSet {
        self.lde_sites.parse().expect("validated")
    }

    pub fn population(&self) -> CliResult<PopulationState> {
        let text = self
            .initial_population
            .as_ref()
            .ok_or_else(|| self.missing("initial_population", "needed by this command"))?;
        Ok(PopulationState::parse(self.space()?, text)?)
    }

    pub fn population_size(&self) -> CliResult<u32> {
        self.population_size
            .ok_or_else(|| self.missing("population_size", "needed by this command"))
    }

    pub fn recombination(&self) -> CliResult<RecombinationDistribution> {
        let c = self
            .crossover_probs
            .as_ref()
            .ok_or_else(|| self.missing("crossover_probs", "needed by this command"))?;
        Ok(RecombinationDistribution::new(c.clone())?)
    }

    pub fn forward(&self) -> CliResult<ForwardModel> {
        Ok(ForwardModel::new(self.space()?, self.population_size()?, self.recombination()?)?)
    }

    pub fn backward(&self) -> CliResult<BackwardModel> {
        Ok(match self.variant()? {
            Variant::FiniteN => BackwardModel::finite(self.recombination()?, self.population_size()?)?,
            Variant::DeterministicLimit => BackwardModel::deterministic(self.recombination()?)?,
            Variant::DiffusionLimit => {
                let rho = self
                    .rho
                    .as_ref()
                    .ok_or_else(|| self.missing("rho", "needed by the diffusion variant"))?;
                BackwardModel::diffusion(DiffusionRates::new(rho.clone())?)?
            }
        })
    }

    /// `grid` evenly spaced times ending at `t_end` (starting at 0 when
    /// `grid ≥ 2`).
    pub fn times(&self) -> Vec<f64> {
        if self.grid == 1 {
            return vec![self.t_end];
        }
        (0..self.grid)
            .map(|k| self.t_end * k as f64 / (self.grid - 1) as f64)
            .collect()
    }

    /// SHA-256 of the resolved configuration.
    /// Hash of the resolved run parameters; the output directory is left out.
    pub fn hash(&self) -> String {
        let mut value = toml::Table::try_from(self).expect("serialisable");
        value.remove("output");
        let text = toml::to_string(&value).expect("serialisable");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn read_population_file(path: &Path, alphabet: &[usize], sites: usize) -> CliResult<String> {
    let f = std::fs::File::open(path).map_err(|e| CliError::io(format!("opening {}", path.display()), e))?;
    let space = SiteSpace::new(alphabet.to_vec())?;
    let m = read_measure_csv(f, SiteSet::full(sites)?, alphabet)?;
    Ok(PopulationState::from_measure(space, &m)?.to_string())
}
