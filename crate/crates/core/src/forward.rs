//! The Moran model with single-crossover recombination, forward in time.

use std::fmt;
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use rand_distr::Exp;

use crate::error::{Error, Result};
use crate::generator::GeneratorMatrix;
use crate::measure::{Measure, PopulationState, SiteSpace};
use crate::recombination::{offspring_distribution, recombinator, RecombinationDistribution};
use crate::rng::{replicate_rng, Rng};

/// Default cap on the number of population states `|E|`.
pub const DEFAULT_STATE_CAP: usize = 20_000;

/// Default step of the deterministic RK4 integrator.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct ForwardModel {
    space: SiteSpace,
    n_pop: u32,
    recomb: RecombinationDistribution,
}

/// How silent events (offspring type equal to the dying type) are handled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EventMode {
    /// Only effective events are generated, at the effective rate.
    #[default]
    Thinned,
    /// Literal rate-`N` stepping; silent events are recorded.
    Exact,
}

impl ForwardModel {
    pub fn new(space: SiteSpace, n_pop: u32, recomb: RecombinationDistribution) -> Result<Self> {
        if n_pop == 0 {
            return Err(Error::InvalidInitial("population size must be at least 1".into()));
        }
        if recomb.n_sites() != space.n_sites() {
            return Err(Error::Shape(format!(
                "recombination distribution on {} sites, type space on {}",
                recomb.n_sites(),
                space.n_sites()
            )));
        }
        Ok(ForwardModel {
            space,
            n_pop,
            recomb,
        })
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }

    pub fn population_size(&self) -> u32 {
        self.n_pop
    }

    pub fn recombination(&self) -> &RecombinationDistribution {
        &self.recomb
    }

    fn check_state(&self, z: &PopulationState) -> Result<()> {
        if z.space() != &self.space || z.size() != self.n_pop {
            return Err(Error::InvalidInitial(format!(
                "state has {} individuals on {} sites, model expects {} on {}",
                z.size(),
                z.space().n_sites(),
                self.n_pop,
                self.space.n_sites()
            )));
        }
        Ok(())
    }

    /// Offspring type distribution `Q = Σ_A r_A R_A(z)`.
    pub fn offspring(&self, z: &PopulationState) -> Result<Measure> {
        offspring_distribution(&self.recomb, &z.measure())
    }

    /// Rate `λ(z; y, x) = Σ_A r_A R_A(z)(x) z(y)` at which an individual of
    /// type `y` is replaced by one of type `x`; includes `x = y`.
    pub fn rate_lambda(&self, z: &PopulationState, y: usize, x: usize) -> Result<f64> {
        self.check_state(z)?;
        let q = self.offspring(z)?;
        Ok(q.weight(x) * z.count(y) as f64)
    }

    /// `|E| = C(N + K − 1, K − 1)` for `K` types.
    pub fn state_count(&self) -> u128 {
        let k = self.space.num_types() as u128;
        let n = self.n_pop as u128;
        // C(n + k - 1, k - 1), multiplicatively with exact division.
        let mut c: u128 = 1;
        for i in 1..k {
            c = c.saturating_mul(n + i) / i;
        }
        c
    }

    /// All states of `E`, subject to `cap`.
    pub fn state_space(&self, cap: usize) -> Result<Vec<PopulationState>> {
        let count = self.state_count();
        if count > cap as u128 {
            return Err(Error::SizeCap {
                what: "population state space",
                size: count.min(usize::MAX as u128) as usize,
                cap,
                hint: "use a smaller population size or fewer types",
            });
        }
        let k = self.space.num_types();
        let mut out = Vec::with_capacity(count as usize);
        let mut counts = vec![0u32; k];
        fn rec(
            i: usize,
            left: u32,
            counts: &mut Vec<u32>,
            space: &SiteSpace,
            out: &mut Vec<PopulationState>,
        ) {
            if i + 1 == counts.len() {
                counts[i] = left;
                out.push(PopulationState::new(space.clone(), counts.clone()).expect("shape"));
                return;
            }
            for c in (0..=left).rev() {
                counts[i] = c;
                rec(i + 1, left - c, counts, space, out);
            }
        }
        rec(0, self.n_pop, &mut counts, &self.space, &mut out);
        Ok(out)
    }

    /// Effective transitions out of `z`: `(z + δ_x − δ_y, λ(z; y, x))`, `x ≠ y`.
    pub fn transitions_from(&self, z: &PopulationState) -> Result<Vec<(PopulationState, f64)>> {
        let q = self.offspring(z)?;
        let mut out = Vec::new();
        for (y, &cy) in z.counts().iter().enumerate() {
            if cy == 0 {
                continue;
            }
            for (x, &qx) in q.weights().iter().enumerate() {
                if x != y && qx > 0.0 {
                    out.push((z.replace(y, x)?, qx * cy as f64));
                }
            }
        }
        Ok(out)
    }

    /// The generator `Λ` on `E`.
    pub fn generator_lambda(&self, cap: usize) -> Result<GeneratorMatrix<PopulationState>> {
        let states = self.state_space(cap)?;
        let rates = states
            .iter()
            .map(|z| self.transitions_from(z))
            .collect::<Result<Vec<_>>>()?;
        GeneratorMatrix::from_rates(states, rates)
    }

    /// Simulates one path on `[0, t_end]` with stream `replicate` of `seed`.
    pub fn simulate(
        &self,
        z0: &PopulationState,
        t_end: f64,
        seed: u64,
        replicate: u64,
        mode: EventMode,
    ) -> Result<TrajectoryRecord> {
        self.check_state(z0)?;
        if !(t_end >= 0.0) {
            return Err(Error::InvalidInitial(format!("t_end = {t_end} must be >= 0")));
        }
        let mut rng = replicate_rng(seed, replicate);
        let mut z = z0.clone();
        let mut t = 0.0;
        let mut events = Vec::new();
        while let Some((dt, y, x)) = self.next_event(&z, &mut rng, mode)? {
            t += dt;
            if t > t_end {
                break;
            }
            z.replace_in_place(y, x);
            events.push(ForwardEvent {
                time: t,
                dying_type: y,
                new_type: x,
            });
        }
        Ok(TrajectoryRecord {
            initial: z0.clone(),
            events,
            seed,
            replicate,
            t_end,
        })
    }

    /// Runs until the population is monomorphic; returns the fixed type and
    /// the absorption time.
    pub fn simulate_until_absorbed(
        &self,
        z0: &PopulationState,
        seed: u64,
        replicate: u64,
        max_events: u64,
    ) -> Result<(usize, f64)> {
        self.check_state(z0)?;
        let mut rng = replicate_rng(seed, replicate);
        let mut z = z0.clone();
        let mut t = 0.0;
        for _ in 0..=max_events {
            if let Some(x) = z.monomorphic_type() {
                return Ok((x, t));
            }
            match self.next_event(&z, &mut rng, EventMode::Thinned)? {
                Some((dt, y, x)) => {
                    t += dt;
                    z.replace_in_place(y, x);
                }
                None => break,
            }
        }
        Err(Error::InvalidInitial(format!(
            "no absorption within {max_events} events"
        )))
    }

    /// Waiting time, dying type and new type of the next event, or `None`
    /// when no effective event can occur.
    fn next_event(
        &self,
        z: &PopulationState,
        rng: &mut Rng,
        mode: EventMode,
    ) -> Result<Option<(f64, usize, usize)>> {
        match mode {
            EventMode::Thinned => {
                let q = self.offspring(z)?;
                let out: Vec<f64> = z
                    .counts()
                    .iter()
                    .zip(q.weights())
                    .map(|(&c, &qy)| c as f64 * (1.0 - qy).max(0.0))
                    .collect();
                let total: f64 = out.iter().sum();
                if total <= 0.0 || !total.is_finite() {
                    return Ok(None);
                }
                let dt = exp_sample(rng, total);
                let y = WeightedIndex::new(&out)
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?
                    .sample(rng);
                let mut qx = q.into_weights();
                qx[y] = 0.0;
                let x = WeightedIndex::new(&qx)
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?
                    .sample(rng);
                Ok(Some((dt, y, x)))
            }
            EventMode::Exact => {
                let n = self.n_pop as usize;
                let dt = exp_sample(rng, n as f64);
                let individuals = z.individuals();
                let y = individuals[rng.random_range(0..n)];
                let table = self.recomb.table();
                let a = &table[WeightedIndex::new(table.iter().map(|(_, p)| *p))
                    .map_err(|e| Error::InvalidDistribution(e.to_string()))?
                    .sample(rng)]
                .0;
                let mut letters = vec![0usize; self.space.n_sites()];
                for &block in a.blocks() {
                    let parent = self.space.decode(individuals[rng.random_range(0..n)]);
                    for s in block.iter() {
                        letters[s - 1] = parent[s - 1];
                    }
                }
                Ok(Some((dt, y, self.space.encode(&letters))))
            }
        }
    }
}

fn exp_sample(rng: &mut Rng, rate: f64) -> f64 {
    Exp::new(rate).expect("positive rate").sample(rng)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForwardEvent {
    pub time: f64,
    pub dying_type: usize,
    pub new_type: usize,
}

/// A simulated path: the initial state and the timestamped replacements.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub initial: PopulationState,
    pub events: Vec<ForwardEvent>,
    pub seed: u64,
    pub replicate: u64,
    pub t_end: f64,
}

impl TrajectoryRecord {
    /// `Z_t` (right-continuous).
    pub fn state_at(&self, t: f64) -> PopulationState {
        let mut z = self.initial.clone();
        for e in self.events.iter().take_while(|e| e.time <= t) {
            z.replace_in_place(e.dying_type, e.new_type);
        }
        z
    }

    pub fn final_state(&self) -> PopulationState {
        self.state_at(f64::INFINITY)
    }

    /// CSV with header `time,dying_type,new_type`; types in letter notation.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let space = self.initial.space();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "dying_type", "new_type"])?;
        for e in &self.events {
            w.write_record([
                format!("{:.16e}", e.time),
                space.format_type(e.dying_type),
                space.format_type(e.new_type),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for PopulationState {
    /// Nonzero counts as `type:count`, space separated, e.g. `00:2 11:1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (x, &c) in self.counts().iter().enumerate() {
            if c > 0 {
                if !first {
                    f.write_str(" ")?;
                }
                write!(f, "{}:{}", self.space().format_type(x), c)?;
                first = false;
            }
        }
        Ok(())
    }
}

/// Right-hand side `Σ_{A ∈ O₂(S)} r_A (R_A(ω) − ω)` of the deterministic
/// single-crossover equation.
pub fn deterministic_rhs(recomb: &RecombinationDistribution, omega: &Measure) -> Result<Measure> {
    let norm = omega.norm();
    let mut out = omega.zeros_like();
    for (a, p) in recomb.table().into_iter().skip(1) {
        if p == 0.0 {
            continue;
        }
        out.add_scaled(&recombinator(&a, omega)?.scaled(norm), p)?;
        out.add_scaled(omega, -p)?;
    }
    Ok(out)
}

/// One RK4 step of the deterministic single-crossover equation.
pub fn deterministic_step(
    recomb: &RecombinationDistribution,
    omega: &Measure,
    dt: f64,
) -> Result<Measure> {
    let k1 = deterministic_rhs(recomb, omega)?;
    let mut y = omega.clone();
    y.add_scaled(&k1, dt / 2.0)?;
    let k2 = deterministic_rhs(recomb, &y)?;
    let mut y = omega.clone();
    y.add_scaled(&k2, dt / 2.0)?;
    let k3 = deterministic_rhs(recomb, &y)?;
    let mut y = omega.clone();
    y.add_scaled(&k3, dt)?;
    let k4 = deterministic_rhs(recomb, &y)?;
    let mut next = omega.clone();
    next.add_scaled(&k1, dt / 6.0)?;
    next.add_scaled(&k2, dt / 3.0)?;
    next.add_scaled(&k3, dt / 3.0)?;
    next.add_scaled(&k4, dt / 6.0)?;
    Ok(next)
}

/// `ω_t` at each time of `times` (nondecreasing), integrating with step at
/// most `dt`.
pub fn deterministic_path(
    recomb: &RecombinationDistribution,
    omega0: &Measure,
    times: &[f64],
    dt: f64,
) -> Result<Vec<Measure>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInitial(format!("dt = {dt} must be positive")));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut omega = omega0.clone();
    let mut t = 0.0;
    for &target in times {
        if target < t {
            return Err(Error::InvalidInitial("times must be nondecreasing".into()));
        }
        let span = target - t;
        let steps = (span / dt).ceil() as usize;
        for _ in 0..steps {
            omega = deterministic_step(recomb, &omega, span / steps as f64)?;
        }
        t = target;
        out.push(omega.clone());
    }
    Ok(out)
}
