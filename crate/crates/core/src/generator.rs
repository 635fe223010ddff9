//! Generator matrices of finite continuous-time Markov chains, and the
//! linear-ODE solvers used on them.

use std::collections::HashMap;
use std::fmt::Display;
use std::hash::Hash;
use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A rate matrix over an explicitly enumerated state space. Off-diagonal
/// rates are stored sparsely per row; the diagonal is minus the row sum.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix<S> {
    states: Vec<S>,
    index: HashMap<S, usize>,
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl<S: Clone + Eq + Hash> GeneratorMatrix<S> {
    /// Builds the generator from off-diagonal rates given as `(target, rate)`
    /// lists per state. Rates to the same target are summed; entries with
    /// target equal to the source are ignored.
    pub fn from_rates(states: Vec<S>, rates: Vec<Vec<(S, f64)>>) -> Result<Self> {
        if rates.len() != states.len() {
            return Err(Error::Shape(format!(
                "{} rate rows for {} states",
                rates.len(),
                states.len()
            )));
        }
        let index: HashMap<S, usize> = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        if index.len() != states.len() {
            return Err(Error::Shape("duplicate states".into()));
        }
        let mut rows = Vec::with_capacity(states.len());
        let mut diag = Vec::with_capacity(states.len());
        for (i, row) in rates.into_iter().enumerate() {
            let mut acc: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (target, rate) in row {
                let j = *index
                    .get(&target)
                    .ok_or_else(|| Error::Shape("transition leaves the state space".into()))?;
                if j == i || rate == 0.0 {
                    continue;
                }
                match acc.iter_mut().find(|(k, _)| *k == j) {
                    Some(e) => e.1 += rate,
                    None => acc.push((j, rate)),
                }
            }
            acc.sort_by_key(|&(j, _)| j);
            diag.push(-acc.iter().map(|(_, r)| r).sum::<f64>());
            rows.push(acc);
        }
        Ok(GeneratorMatrix {
            states,
            index,
            rows,
            diag,
        })
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Off-diagonal entries of row `i` as `(column, rate)`.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else {
            self.rows[i]
                .iter()
                .find(|(k, _)| *k == j)
                .map_or(0.0, |&(_, r)| r)
        }
    }

    /// Entry between two states, zero if either is unknown.
    pub fn rate(&self, from: &S, to: &S) -> f64 {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => self.entry(i, j),
            _ => 0.0,
        }
    }

    /// Largest absolute row sum; zero for a proper generator.
    pub fn max_row_sum(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.diag)
            .map(|(row, d)| (row.iter().map(|(_, r)| r).sum::<f64>() + d).abs())
            .fold(0.0, f64::max)
    }

    /// `G · v` for a matrix `v` with one row per state.
    pub fn apply(&self, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if v.nrows() != self.len() {
            return Err(Error::Shape(format!(
                "vector has {} rows, generator has {} states",
                v.nrows(),
                self.len()
            )));
        }
        let mut out = DMatrix::zeros(v.nrows(), v.ncols());
        for i in 0..self.len() {
            let mut acc = v.row(i) * self.diag[i];
            for &(j, r) in &self.rows[i] {
                acc += v.row(j) * r;
            }
            out.set_row(i, &acc);
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for &(j, r) in &self.rows[i] {
                m[(i, j)] = r;
            }
        }
        m
    }

    /// Generator restricted to `order` (a permutation or subset of the
    /// states), as a dense matrix in that order.
    pub fn dense_in_order(&self, order: &[S]) -> Result<DMatrix<f64>> {
        let idx: Vec<usize> = order
            .iter()
            .map(|s| {
                self.index_of(s)
                    .ok_or_else(|| Error::Shape("state not in the generator".into()))
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(idx.len(), idx.len(), |a, b| {
            self.entry(idx[a], idx[b])
        }))
    }
}

impl<S: Clone + Eq + Hash + Display> GeneratorMatrix<S> {
    /// Dense CSV: a header row `state,<s_1>,…,<s_k>`, then one row per state.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["state".to_string()];
        header.extend(self.states.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for (i, s) in self.states.iter().enumerate() {
            let mut rec = vec![s.to_string()];
            rec.extend((0..self.len()).map(|j| format!("{:.16e}", self.entry(i, j))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `e^{tM}` by scaling and squaring with Padé approximation.
pub fn expm(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (m * t).exp()
}

/// Integrates `y' = M y` from `y0` over `[0, t]` with classical RK4 and
/// `steps` equal steps.
pub fn rk4_linear(m: &DMatrix<f64>, y0: &DMatrix<f64>, t: f64, steps: usize) -> DMatrix<f64> {
    let steps = steps.max(1);
    let h = t / steps as f64;
    let mut y = y0.clone();
    for _ in 0..steps {
        let k1 = m * &y;
        let k2 = m * (&y + &k1 * (h / 2.0));
        let k3 = m * (&y + &k2 * (h / 2.0));
        let k4 = m * (&y + &k3 * h);
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y
}
