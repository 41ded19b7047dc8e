//! Two-molecule product basis and the dipole–dipole coupling matrix.
//!
//! The matrix stored here is the dimensionless angular factor of each element;
//! multiplying by [`crate::molecule::ddi_strength`] at separation R gives the
//! physical element in rad/s. The factor is built once per basis and reused
//! at every time step.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::angular::{cg, enumerate_basis, RotState};
use crate::error::Result;

/// `|J₁ M₁> ⊗ |J₂ M₂>`, ordered lexicographically by (first, second).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairState {
    pub first: RotState,
    pub second: RotState,
}

impl PairState {
    pub const fn new(first: RotState, second: RotState) -> Self {
        PairState { first, second }
    }

    pub fn total_m(&self) -> i32 {
        self.first.m + self.second.m
    }
}

impl fmt::Display for PairState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.first, self.second)
    }
}

/// Canonical pair basis: the square of [`enumerate_basis`].
pub fn pair_basis(j_max: u32) -> Vec<PairState> {
    let single = enumerate_basis(j_max);
    single
        .iter()
        .flat_map(|&a| single.iter().map(move |&b| PairState::new(a, b)))
        .collect()
}

/// Dipole selection rules: each J changes by one and the projections move by
/// (0,0) or opposite units.
pub fn selection_allowed(q: &PairState, q_prime: &PairState) -> bool {
    let dj1 = q_prime.first.j as i64 - q.first.j as i64;
    let dj2 = q_prime.second.j as i64 - q.second.j as i64;
    let dm1 = q_prime.first.m - q.first.m;
    let dm2 = q_prime.second.m - q.second.m;
    dj1.abs() == 1 && dj2.abs() == 1 && matches!((dm1, dm2), (0, 0) | (1, -1) | (-1, 1))
}

fn cg_or_zero(j1: u32, m1: i32, j2: u32, m2: i32, j: u32, m: i32) -> f64 {
    if m1.unsigned_abs() > j1 || m2.unsigned_abs() > j2 || m.unsigned_abs() > j {
        return 0.0;
    }
    cg(j1, m1, j2, m2, j, m).unwrap_or(0.0)
}

/// Angular factor of `<q| V |q'>` in units of d²/(4πε₀R³).
///
/// Exactly zero whenever [`selection_allowed`] is false.
pub fn geometry_factor(q: &PairState, q_prime: &PairState) -> f64 {
    if !selection_allowed(q, q_prime) {
        return 0.0;
    }
    // Evaluate in a fixed argument order so the result is exactly symmetric.
    let (q, q_prime) = if q <= q_prime { (q, q_prime) } else { (q_prime, q) };
    let (j1, m1, j2, m2) = (q.first.j, q.first.m, q.second.j, q.second.m);
    let (j1p, m1p, j2p, m2p) = (q_prime.first.j, q_prime.first.m, q_prime.second.j, q_prime.second.m);

    let degeneracy = f64::from((2 * j1 + 1) * (2 * j2 + 1)) / f64::from((2 * j1p + 1) * (2 * j2p + 1));
    let reduced = cg_or_zero(1, 0, j1, 0, j1p, 0) * cg_or_zero(1, 0, j2, 0, j2p, 0);
    if reduced == 0.0 {
        return 0.0;
    }

    let mut angular: f64 = (-1..=1)
        .map(|k| cg_or_zero(1, k, j1, m1, j1p, m1p) * cg_or_zero(1, -k, j2, m2, j2p, m2p))
        .sum();
    angular += cg_or_zero(1, 0, j1, m1, j1p, m1p) * cg_or_zero(1, 0, j2, m2, j2p, m2p);

    degeneracy.sqrt() * reduced * angular
}

/// Sparse symmetric matrix of angular factors over a truncated pair basis,
/// stored in compressed-row form.
#[derive(Clone, Debug)]
pub struct DdiMatrix {
    basis: Vec<PairState>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl DdiMatrix {
    pub fn basis(&self) -> &[PairState] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn index_of(&self, state: &PairState) -> Option<usize> {
        self.basis.binary_search(state).ok()
    }

    /// Nonzero entries of row `i` as `(column, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    /// All nonzeros as `(row, column, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim()).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Keeps only the entries accepted by `keep(row, col)`.
    pub fn filtered(&self, mut keep: impl FnMut(usize, usize) -> bool) -> DdiMatrix {
        let mut row_ptr = Vec::with_capacity(self.dim() + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                if keep(i, j) {
                    cols.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        DdiMatrix {
            basis: self.basis.clone(),
            row_ptr,
            cols,
            values,
        }
    }

    /// Writes the nonzero entries as CSV: `q, q_prime, factor`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["q", "q_prime", "factor"])?;
        for (i, j, v) in self.triplets() {
            w.write_record([
                self.basis[i].to_string(),
                self.basis[j].to_string(),
                format!("{v:.17e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Builds the angular-factor matrix over `pair_basis(j_max)`.
///
/// Only the upper triangle is evaluated; the lower one is mirrored so the
/// result is exactly symmetric.
pub fn build_ddi_matrix(j_max: u32) -> DdiMatrix {
    let basis = pair_basis(j_max);
    let n = basis.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = geometry_factor(&basis[i], &basis[j]);
            if v != 0.0 {
                rows[i].push((j, v));
                rows[j].push((i, v));
            }
        }
    }

    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for mut row in rows {
        row.sort_by_key(|&(c, _)| c);
        for (c, v) in row {
            cols.push(c);
            values.push(v);
        }
        row_ptr.push(cols.len());
    }
    DdiMatrix {
        basis,
        row_ptr,
        cols,
        values,
    }
}
