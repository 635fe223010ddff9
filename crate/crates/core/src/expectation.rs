//! Exact expectations through the duality between the forward population
//! process and the partitioning process.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::backward::{BackwardModel, Variant};
use crate::error::{Error, Result};
use crate::forward::ForwardModel;
use crate::generator::{expm, rk4_linear};
use crate::measure::{format_weight, Measure, PopulationState};
use crate::partition::{enumerate_partitions, mobius_unchecked, refinements, Partition, SiteSet};
use crate::recombination::{falling_factorial, MarginalCache};

/// Tolerance for exact-identity defects.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Rows `H_A(z)` (one per partition, one column per type of `z`); rows with
/// `|A| > N` are zero.
pub fn sampling_matrix(partitions: &[Partition], z: &Measure) -> Result<DMatrix<f64>> {
    let n = z.norm();
    let mut cache = MarginalCache::new(z);
    let mut out = DMatrix::zeros(partitions.len(), z.len());
    for (i, a) in partitions.iter().enumerate() {
        if a.len() as f64 > n {
            continue;
        }
        let h = cache.sampling_bar(a)?;
        let scale = 1.0 / falling_factorial(n, a.len());
        for (x, w) in h.weights().iter().enumerate() {
            out[(i, x)] = w * scale;
        }
    }
    Ok(out)
}

/// Rows `R_A(ω)`, one per partition.
pub fn recombinator_matrix(partitions: &[Partition], omega: &Measure) -> Result<DMatrix<f64>> {
    let norm = omega.norm();
    if norm == 0.0 {
        return Err(Error::ZeroMeasure);
    }
    let mut cache = MarginalCache::new(omega);
    let mut out = DMatrix::zeros(partitions.len(), omega.len());
    for (i, a) in partitions.iter().enumerate() {
        let r = cache.recombinator_bar(a)?;
        let scale = norm.powi(-(a.len() as i32));
        for (x, w) in r.weights().iter().enumerate() {
            out[(i, x)] = w * scale;
        }
    }
    Ok(out)
}

/// The duality function on `E × P(S)`: for each population state the
/// matrix of `H_A(z)` over all partitions.
#[derive(Clone, Debug)]
pub struct DualityMatrixH {
    pub states: Vec<PopulationState>,
    pub partitions: Vec<Partition>,
    values: Vec<DMatrix<f64>>,
}

impl DualityMatrixH {
    pub fn build(states: Vec<PopulationState>, partitions: Vec<Partition>) -> Result<Self> {
        let values = states
            .iter()
            .map(|z| sampling_matrix(&partitions, &z.measure()))
            .collect::<Result<Vec<_>>>()?;
        Ok(DualityMatrixH {
            states,
            partitions,
            values,
        })
    }

    /// `H_A(z)` as a measure.
    pub fn get(&self, z: usize, a: usize) -> Measure {
        let space = self.states[z].space();
        Measure::on_space(
            space,
            space.sites(),
            self.values[z].row(a).iter().copied().collect(),
        )
        .expect("shape")
    }

    pub fn matrix(&self, z: usize) -> &DMatrix<f64> {
        &self.values[z]
    }
}

/// Outcome of comparing `ΛH` with `HΘᵀ` entrywise.
#[derive(Clone, Debug)]
pub struct DualityReport {
    pub defect: f64,
    pub n_states: usize,
    pub n_partitions: usize,
}

/// `max |Σ_{z′} Λ_{zz′} H_A(z′)(x) − Σ_B Θ_{AB} H_B(z)(x)|` over all
/// `(z, A, x)`.
pub fn check_generator_duality(
    forward: &ForwardModel,
    backward: &BackwardModel,
    state_cap: usize,
) -> Result<DualityReport> {
    if backward.variant() != Variant::FiniteN
        || backward.population_size() != Some(forward.population_size())
        || backward.recombination() != Some(forward.recombination())
    {
        return Err(Error::Shape(
            "duality needs a finite-population partitioning process with the same N and r".into(),
        ));
    }
    let lambda = forward.generator_lambda(state_cap)?;
    let theta = backward.generator()?;
    let h = DualityMatrixH::build(lambda.states().to_vec(), theta.states().to_vec())?;
    let theta_dense = theta.to_dense();
    let mut defect: f64 = 0.0;
    for i in 0..lambda.len() {
        let mut lhs = h.matrix(i) * lambda.diagonal(i);
        for &(j, rate) in lambda.row(i) {
            lhs += h.matrix(j) * rate;
        }
        let rhs = &theta_dense * h.matrix(i);
        defect = defect.max((lhs - rhs).amax());
    }
    Ok(DualityReport {
        defect,
        n_states: lambda.len(),
        n_partitions: theta.len(),
    })
}

/// Initial values of the ODE system: `H_A(z0)` for a finite population,
/// `R_A(z0 / N)` for the limit variants.
fn initial_values(
    backward: &BackwardModel,
    partitions: &[Partition],
    z0: &PopulationState,
) -> Result<DMatrix<f64>> {
    if z0.space().sites() != backward.sites() {
        return Err(Error::InvalidInitial(format!(
            "population on {} sites, partitioning process on {}",
            z0.space().n_sites(),
            backward.n_sites()
        )));
    }
    if let Some(n_pop) = backward.population_size() {
        if z0.size() != n_pop {
            return Err(Error::InvalidInitial(format!(
                "population has {} individuals, model expects {n_pop}",
                z0.size()
            )));
        }
        sampling_matrix(partitions, &z0.measure())
    } else {
        recombinator_matrix(partitions, &z0.measure())
    }
}

/// `E[H_A(Z_t)]` for all partitions at each time of a grid.
#[derive(Clone, Debug)]
pub struct ExpectationTrajectory {
    pub times: Vec<f64>,
    pub partitions: Vec<Partition>,
    pub sites: SiteSet,
    pub radices: Vec<usize>,
    /// One matrix per time: rows partitions, columns types.
    pub values: Vec<DMatrix<f64>>,
}

impl ExpectationTrajectory {
    pub fn partition_index(&self, a: &Partition) -> Option<usize> {
        self.partitions.iter().position(|p| p == a)
    }

    /// The value for partition `a` at time index `k`.
    pub fn measure(&self, k: usize, a: &Partition) -> Result<Measure> {
        let i = self
            .partition_index(a)
            .ok_or_else(|| Error::Shape(format!("partition {a} not tracked")))?;
        let m = Measure::new(
            self.sites,
            self.radices.clone(),
            self.values[k].row(i).iter().copied().collect(),
        )?;
        Ok(m)
    }

    /// CSV `time,partition,type,value`, rows by time, partition, type.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_series_csv(
            out,
            &self.times,
            &self.partitions,
            &self.radices,
            &self.values,
        )
    }
}

fn write_series_csv<W: Write>(
    out: W,
    times: &[f64],
    partitions: &[Partition],
    radices: &[usize],
    values: &[DMatrix<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "partition", "type", "value"])?;
    for (t, v) in times.iter().zip(values) {
        for (i, a) in partitions.iter().enumerate() {
            for x in 0..v.ncols() {
                let letters = crate::measure::decode(radices, x);
                let ty: String = letters
                    .iter()
                    .map(|&l| char::from_digit(l as u32, 10).unwrap_or('?'))
                    .collect();
                w.write_record([
                    format_weight(*t),
                    a.to_string(),
                    ty,
                    format_weight(v[(i, x)]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Solves `d/dt E[H] = Θ E[H]` through the matrix exponential.
pub fn expected_sampling_all(
    backward: &BackwardModel,
    z0: &PopulationState,
    times: &[f64],
) -> Result<ExpectationTrajectory> {
    let theta = backward.generator()?;
    let partitions = theta.states().to_vec();
    let h0 = initial_values(backward, &partitions, z0)?;
    let g = theta.to_dense();
    let values = times.iter().map(|&t| expm(&g, t) * &h0).collect();
    Ok(ExpectationTrajectory {
        times: times.to_vec(),
        partitions,
        sites: z0.space().sites(),
        radices: z0.space().cardinalities().to_vec(),
        values,
    })
}

/// The same system integrated with RK4, `steps_per_unit` steps per unit time.
pub fn expected_sampling_rk4(
    backward: &BackwardModel,
    z0: &PopulationState,
    times: &[f64],
    steps_per_unit: usize,
) -> Result<ExpectationTrajectory> {
    let theta = backward.generator()?;
    let partitions = theta.states().to_vec();
    let h0 = initial_values(backward, &partitions, z0)?;
    let g = theta.to_dense();
    let mut values = Vec::with_capacity(times.len());
    let mut y = h0;
    let mut t = 0.0;
    for &target in times {
        if target < t {
            return Err(Error::InvalidInitial("times must be nondecreasing".into()));
        }
        let steps = ((target - t) * steps_per_unit as f64).ceil() as usize;
        if steps > 0 {
            y = rk4_linear(&g, &y, target - t, steps);
        }
        t = target;
        values.push(y.clone());
    }
    Ok(ExpectationTrajectory {
        times: times.to_vec(),
        partitions,
        sites: z0.space().sites(),
        radices: z0.space().cardinalities().to_vec(),
        values,
    })
}

/// `E[H_{a0}(Z_t) | Z_0 = z0]` at each time.
pub fn expected_sampling(
    backward: &BackwardModel,
    z0: &PopulationState,
    a0: &Partition,
    times: &[f64],
) -> Result<Vec<Measure>> {
    if let Some(n_pop) = backward.population_size() {
        if a0.len() > n_pop as usize {
            return Err(Error::SampleTooLarge {
                blocks: a0.len(),
                individuals: n_pop as usize,
            });
        }
    }
    let traj = expected_sampling_all(backward, z0, times)?;
    (0..times.len()).map(|k| traj.measure(k, a0)).collect()
}

/// Coefficients expressing correlation functions in sampling functions on
/// the partitions `order` of one site set:
/// `T_{A,C} = Σ_{B ≼ A ∧ C} μ(B, A) N! / ((N − |C|)! N^{|B|})`.
/// With `n_pop = None` this is the limit `T_{A,C} = μ(C, A) [C ≼ A]`.
pub fn lde_transform_matrix(order: &[Partition], n_pop: Option<f64>) -> Result<DMatrix<f64>> {
    let k = order.len();
    let mut t = DMatrix::zeros(k, k);
    for (i, a) in order.iter().enumerate() {
        for (j, c) in order.iter().enumerate() {
            t[(i, j)] = match n_pop {
                None => {
                    if c.refines(a)? {
                        mobius_unchecked(c, a) as f64
                    } else {
                        0.0
                    }
                }
                Some(n) => {
                    let meet = a.meet(c)?;
                    let top = falling_factorial(n, c.len());
                    refinements(&meet)?
                        .iter()
                        .map(|b| mobius_unchecked(b, a) as f64 * top * n.powi(-(b.len() as i32)))
                        .sum()
                }
            };
        }
    }
    Ok(t)
}

/// `E[L_A^U(π_U . Z_t)]` for all `A ∈ P(U)` at each time.
#[derive(Clone, Debug)]
pub struct LdeTrajectory {
    pub times: Vec<f64>,
    pub partitions: Vec<Partition>,
    pub sites: SiteSet,
    pub radices: Vec<usize>,
    pub values: Vec<DMatrix<f64>>,
}

impl LdeTrajectory {
    pub fn measure(&self, k: usize, a: &Partition) -> Result<Measure> {
        let i = self
            .partitions
            .iter()
            .position(|p| p == a)
            .ok_or_else(|| Error::Shape(format!("partition {a} not tracked")))?;
        Ok(Measure::new(
            self.sites,
            self.radices.clone(),
            self.values[k].row(i).iter().copied().collect(),
        )?
        .into_signed())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_series_csv(
            out,
            &self.times,
            &self.partitions,
            &self.radices,
            &self.values,
        )
    }
}

/// Lifts a partition of `u ⊆ S` to `S` by adding `S ∖ u` to its first block,
/// so that the lift restricts to it and has the same number of blocks.
fn lift(c: &Partition, s: SiteSet) -> Partition {
    let rest = s.difference(c.ground());
    if rest.is_empty() {
        return c.clone();
    }
    let mut blocks = c.blocks().to_vec();
    blocks[0] = blocks[0].union(rest);
    Partition::new(blocks).expect("disjoint cover of s")
}

/// Expected correlation functions on the sites `u`, obtained from the
/// expected sampling functions on `S` by marginalisation and the transform
/// [`lde_transform_matrix`].
pub fn lde_trajectory(
    backward: &BackwardModel,
    z0: &PopulationState,
    u: SiteSet,
    times: &[f64],
) -> Result<LdeTrajectory> {
    let s = backward.sites();
    if u.is_empty() || !u.is_subset(s) {
        return Err(Error::NotSubset {
            sub: u.to_string(),
            sup: s.to_string(),
        });
    }
    let eh = expected_sampling_all(backward, z0, times)?;
    let order = enumerate_partitions(u)?;
    let lifted: Vec<usize> = order
        .iter()
        .map(|c| eh.partition_index(&lift(c, s)).expect("all partitions tracked"))
        .collect();
    let t = lde_transform_matrix(&order, backward.population_size().map(f64::from))?;
    let radices = z0.space().radices(u);
    let mut values = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let mut hu = DMatrix::zeros(order.len(), radices.iter().product());
        for (i, &li) in lifted.iter().enumerate() {
            let m = eh.measure(k, &eh.partitions[li])?.marginalize(u)?;
            for (x, w) in m.weights().iter().enumerate() {
                hu[(i, x)] = *w;
            }
        }
        values.push(&t * hu);
    }
    Ok(LdeTrajectory {
        times: times.to_vec(),
        partitions: order,
        sites: u,
        radices,
        values,
    })
}

/// The partitions of `{1, 2, 3}` in the display order
/// `𝟏, {1}{2,3}, {1,2}{3}, {1,3}{2}, 𝟎`.
pub fn display_order_3site() -> Vec<Partition> {
    ["1,2,3", "1|2,3", "1,2|3", "1,3|2", "1|2|3"]
        .iter()
        .map(|s| s.parse().expect("valid"))
        .collect()
}

/// Transform of the 3-site system to correlation functions, with its
/// diagonalisation `V M V⁻¹ = D` where `M = T Θ T⁻¹`. All matrices are in
/// [`display_order_3site`].
#[derive(Clone, Debug)]
pub struct LdeTransform {
    pub order: Vec<Partition>,
    pub theta: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub t_inv: DMatrix<f64>,
    pub conjugated: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub v_inv: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl LdeTransform {
    /// Largest magnitude above the diagonal of `T Θ T⁻¹`.
    pub fn max_upper(&self) -> f64 {
        let m = &self.conjugated;
        let mut worst: f64 = 0.0;
        for i in 0..m.nrows() {
            for j in i + 1..m.ncols() {
                worst = worst.max(m[(i, j)].abs());
            }
        }
        worst
    }

    /// `‖V M V⁻¹ − D‖_max`.
    pub fn diagonalization_residual(&self) -> f64 {
        (&self.v * &self.conjugated * &self.v_inv - DMatrix::from_diagonal(&self.d)).amax()
    }

    /// `‖T T⁻¹ − I‖_max`.
    pub fn inverse_residual(&self) -> f64 {
        (&self.t * &self.t_inv - DMatrix::identity(self.t.nrows(), self.t.ncols())).amax()
    }

    /// Plain-text report of eigenvalues and residuals.
    pub fn report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "eigenvalues (diagonal of T Theta T^-1):");
        for (a, d) in self.order.iter().zip(self.d.iter()) {
            let _ = writeln!(s, "  {a:<8} {d:.16e}");
        }
        let _ = writeln!(s, "max |upper triangle|: {:.3e}", self.max_upper());
        let _ = writeln!(s, "max |T T^-1 - I|: {:.3e}", self.inverse_residual());
        let _ = writeln!(s, "max |V M V^-1 - D|: {:.3e}", self.diagonalization_residual());
        s
    }
}

/// Rows of `V` are left eigenvectors of the lower-triangular `m`, scaled to
/// unit diagonal.
fn left_eigenvectors_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = m.nrows();
    let scale = m.amax().max(1.0);
    let mut v = DMatrix::zeros(k, k);
    for row in 0..k {
        let d = m[(row, row)];
        v[(row, row)] = 1.0;
        for j in (0..row).rev() {
            let num: f64 = (j + 1..=row).map(|i| v[(row, i)] * m[(i, j)]).sum();
            let den = d - m[(j, j)];
            if den.abs() <= 1e-13 * scale {
                if num.abs() <= 1e-12 * scale {
                    continue;
                }
                return Err(Error::Shape(
                    "T Theta T^-1 is not diagonalisable (repeated eigenvalue)".into(),
                ));
            }
            v[(row, j)] = num / den;
        }
    }
    Ok(v)
}

/// Builds `T`, `T Θ T⁻¹` and its diagonalisation for three sites.
pub fn lde_conjugation_3site(backward: &BackwardModel) -> Result<LdeTransform> {
    if backward.n_sites() != 3 {
        return Err(Error::Shape(format!(
            "the 3-site transform needs 3 sites, got {}",
            backward.n_sites()
        )));
    }
    let order = display_order_3site();
    let theta = backward.generator()?.dense_in_order(&order)?;
    let t = lde_transform_matrix(&order, backward.population_size().map(f64::from))?;
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Shape("T is singular for this population size".into()))?;
    let conjugated = &t * &theta * &t_inv;
    let v = left_eigenvectors_lower(&conjugated)?;
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Shape("V is singular".into()))?;
    let d = conjugated.diagonal();
    Ok(LdeTransform {
        order,
        theta,
        t,
        t_inv,
        conjugated,
        v,
        v_inv,
        d,
    })
}

/// Fixation probabilities of the two-site model:
/// `2/(2 + r(N−1)) z0/N + r(N−1)/(2 + r(N−1)) H_𝟎(z0)`.
pub fn fixation_2site(forward: &ForwardModel, z0: &PopulationState) -> Result<Measure> {
    if forward.space().n_sites() != 2 {
        return Err(Error::Shape(format!(
            "fixation formula needs 2 sites, got {}",
            forward.space().n_sites()
        )));
    }
    let n = forward.population_size() as f64;
    if z0.size() != forward.population_size() || z0.space() != forward.space() {
        return Err(Error::InvalidInitial("initial state does not match the model".into()));
    }
    let z = z0.measure();
    if n < 2.0 {
        return Ok(z);
    }
    let r = forward.recombination().crossover_probs()[0];
    let k = r * (n - 1.0);
    let zero: Partition = "1|2".parse().expect("valid");
    let h0 = crate::recombination::sampling(&zero, &z)?;
    let mut out = z.scaled(2.0 / (2.0 + k) / n);
    out.add_scaled(&h0, k / (2.0 + k))?;
    Ok(out)
}
