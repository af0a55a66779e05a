//! Piecewise-constant Hermitian Hamiltonians stored as sparse slices.
//!
//! Units: ħ = 1 and energies in units of the model's characteristic
//! coupling. A model is a list of slices; slice `k` is in force on
//! `[start_k, start_{k+1})` and the last slice holds forever.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Entries with magnitude below this are structural zeros.
pub const ZERO_THRESHOLD: f64 = 1e-12;

/// Entrywise tolerance for the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Square complex matrix in coordinate form, sorted by `(row, col)`,
/// without structural zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Builds from triplets; duplicates are summed and structural zeros dropped.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut all: Vec<(usize, usize, C64)> = Vec::new();
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::InvalidParameter(format!(
                    "entry ({r}, {c}) outside a {dim}x{dim} matrix"
                )));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("Hamiltonian entry ({r}, {c}) = {v}"),
                });
            }
            all.push((r, c, v));
        }
        all.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(usize, usize, C64)> = Vec::with_capacity(all.len());
        for (r, c, v) in all {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|e| e.2.norm() >= ZERO_THRESHOLD);
        Ok(Self { dim, entries })
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let n = m.nrows();
        Self::from_triplets(
            n,
            (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| (r, c, m[(r, c)])),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries
            .binary_search_by_key(&(row, col), |&(r, c, _)| (r, c))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// `self + other`, dropping structural zeros.
    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.dim != other.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim,
            });
        }
        Self::from_triplets(self.dim, self.iter().chain(other.iter()))
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); self.dim];
        for &(r, c, h) in &self.entries {
            out[r] += h * v[c];
        }
        out
    }

    /// Largest entrywise deviation from Hermiticity, with its location.
    fn hermitian_defect(&self) -> Option<(usize, usize, f64)> {
        let mut worst: Option<(usize, usize, f64)> = None;
        for &(r, c, v) in &self.entries {
            let d = (v - self.get(c, r).conj()).norm();
            if d > HERMITIAN_TOL && worst.is_none_or(|w| d > w.2) {
                worst = Some((r, c, d));
            }
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub start: f64,
    pub matrix: SparseMatrix,
}

/// Hermitian Hamiltonian, optionally piecewise-constant in time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianModel {
    dim: usize,
    slices: Vec<Slice>,
    baseline_floor: f64,
}

impl HamiltonianModel {
    pub fn constant(matrix: SparseMatrix) -> Result<Self> {
        Self::piecewise(vec![(0.0, matrix)], 0.0)
    }

    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        Self::constant(SparseMatrix::from_dense(m)?)
    }

    /// Validates the slices and applies the baseline floor: every entry that
    /// is structurally nonzero in any slice gets magnitude at least
    /// `baseline_floor` in every slice (phase kept; zeros become real).
    pub fn piecewise(slices: Vec<(f64, SparseMatrix)>, baseline_floor: f64) -> Result<Self> {
        let Some(first) = slices.first() else {
            return Err(Error::InvalidParameter("a Hamiltonian needs at least one slice".into()));
        };
        if first.0 != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "first slice must start at t = 0, got {}",
                first.0
            )));
        }
        if !(baseline_floor >= 0.0 && baseline_floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "baseline floor must be finite and >= 0, got {baseline_floor}"
            )));
        }
        let dim = first.1.dim();
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        for (k, window) in slices.windows(2).enumerate() {
            if !(window[1].0 > window[0].0) || !window[1].0.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "slice start times must be strictly increasing (slice {} at {} after {})",
                    k + 1,
                    window[1].0,
                    window[0].0
                )));
            }
        }
        for (k, (_, m)) in slices.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: m.dim(),
                });
            }
            if let Some((row, col, _)) = m.hermitian_defect() {
                return Err(Error::NonHermitian {
                    slice: k,
                    row,
                    col,
                    value: m.get(row, col).to_string(),
                    mirror: m.get(col, row).conj().to_string(),
                });
            }
        }

        let mut slices: Vec<Slice> = slices
            .into_iter()
            .map(|(start, matrix)| Slice { start, matrix })
            .collect();

        if baseline_floor > 0.0 {
            let pattern: BTreeSet<(usize, usize)> = slices
                .iter()
                .flat_map(|s| s.matrix.iter().map(|(r, c, _)| (r, c)))
                .collect();
            for slice in &mut slices {
                let floored = pattern.iter().map(|&(r, c)| {
                    let v = slice.matrix.get(r, c);
                    let mag = v.norm();
                    let v = if mag >= baseline_floor {
                        v
                    } else if mag >= ZERO_THRESHOLD {
                        v * (baseline_floor / mag)
                    } else {
                        C64::new(baseline_floor, 0.0)
                    };
                    (r, c, v)
                });
                slice.matrix = SparseMatrix::from_triplets(dim, floored)?;
            }
        }

        Ok(Self {
            dim,
            slices,
            baseline_floor,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn baseline_floor(&self) -> f64 {
        self.baseline_floor
    }

    pub fn is_time_dependent(&self) -> bool {
        self.slices.len() > 1
    }

    /// Index of the slice in force at `t` (slice 0 for `t < 0`).
    pub fn slice_index(&self, t: f64) -> usize {
        self.slices
            .partition_point(|s| s.start <= t)
            .saturating_sub(1)
    }

    pub fn at(&self, t: f64) -> &SparseMatrix {
        &self.slices[self.slice_index(t)].matrix
    }

    pub fn entry(&self, t: f64, row: usize, col: usize) -> C64 {
        self.at(t).get(row, col)
    }

    /// Union over all slices of the structurally nonzero positions.
    pub fn pattern(&self) -> BTreeSet<(usize, usize)> {
        self.slices
            .iter()
            .flat_map(|s| s.matrix.iter().map(|(r, c, _)| (r, c)))
            .collect()
    }

    /// Slice boundaries strictly inside `(t0, t1)`.
    pub fn boundaries_between(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.slices
            .iter()
            .map(|s| s.start)
            .filter(|&s| s > t0 && s < t1)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn non_hermitian_slice_names_the_entry() {
        let m = SparseMatrix::from_triplets(2, [(0, 1, c(1.0, 0.0)), (1, 0, c(2.0, 0.0))]).unwrap();
        match HamiltonianModel::constant(m) {
            Err(Error::NonHermitian { slice, row, col, .. }) => {
                assert_eq!(slice, 0);
                assert_eq!((row.min(col), row.max(col)), (0, 1));
            }
            other => panic!("expected NonHermitian, got {other:?}"),
        }
    }

    #[test]
    fn entries_below_threshold_are_structural_zeros() {
        let m = SparseMatrix::from_triplets(2, [(0, 1, c(1e-13, 0.0)), (1, 0, c(1e-13, 0.0))]).unwrap();
        assert_eq!(m.nnz(), 0);
    }

    #[test]
    fn floor_fills_union_pattern_in_every_slice() {
        let a = SparseMatrix::from_triplets(3, [(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]).unwrap();
        let b = SparseMatrix::from_triplets(3, [(1, 2, c(0.0, 2.0)), (2, 1, c(0.0, -2.0))]).unwrap();
        let h = HamiltonianModel::piecewise(vec![(0.0, a), (1.0, b)], 1e-3).unwrap();
        for s in h.slices() {
            for (r, col) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
                assert!(s.matrix.get(r, col).norm() >= 1e-3 - 1e-15);
            }
            assert_eq!(s.matrix.get(0, 2), C64::default());
        }
        assert_eq!(h.entry(0.5, 1, 2), c(1e-3, 0.0));
        assert_eq!(h.entry(1.5, 1, 2), c(0.0, 2.0));
    }

    #[test]
    fn slice_lookup() {
        let z = SparseMatrix::zeros(1);
        let h = HamiltonianModel::piecewise(vec![(0.0, z.clone()), (1.0, z.clone()), (2.5, z)], 0.0).unwrap();
        assert_eq!(h.slice_index(-1.0), 0);
        assert_eq!(h.slice_index(0.0), 0);
        assert_eq!(h.slice_index(0.999), 0);
        assert_eq!(h.slice_index(1.0), 1);
        assert_eq!(h.slice_index(100.0), 2);
        assert_eq!(h.boundaries_between(0.5, 3.0), vec![1.0, 2.5]);
    }

    #[test]
    fn slices_must_start_at_zero_and_increase() {
        let z = SparseMatrix::zeros(1);
        assert!(HamiltonianModel::piecewise(vec![(0.5, z.clone())], 0.0).is_err());
        assert!(HamiltonianModel::piecewise(vec![(0.0, z.clone()), (0.0, z)], 0.0).is_err());
    }
}
