use serde::{Deserialize, Serialize};

use super::circuit::QubitRegister;
use crate::error::{Error, Result};

/// Per-qubit σ_z tallies over terminal nodes, plus the moments of each
/// trajectory's total spin for the error bar on `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinTally {
    pub n_qubits: usize,
    pub trajectories: u64,
    /// Count of `+1` (bit 0) outcomes per qubit.
    pub plus: Vec<u64>,
    sum_total: f64,
    sum_total_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinEstimate {
    pub m: f64,
    pub stderr: f64,
    /// `(⟨σ_z⟩, standard error)` per qubit.
    pub per_qubit: Vec<(f64, f64)>,
    pub trajectories: u64,
}

impl SpinTally {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            trajectories: 0,
            plus: vec![0; n_qubits],
            sum_total: 0.0,
            sum_total_sq: 0.0,
        }
    }

    pub fn record(&mut self, register: &QubitRegister, node: usize) {
        let mut total = 0.0;
        for q in 1..=self.n_qubits {
            if register.bit(node, q) {
                total -= 1.0;
            } else {
                self.plus[q - 1] += 1;
                total += 1.0;
            }
        }
        self.trajectories += 1;
        self.sum_total += total;
        self.sum_total_sq += total * total;
    }

    pub fn merge(mut self, other: &SpinTally) -> Self {
        for (a, b) in self.plus.iter_mut().zip(&other.plus) {
            *a += b;
        }
        self.trajectories += other.trajectories;
        self.sum_total += other.sum_total;
        self.sum_total_sq += other.sum_total_sq;
        self
    }
}

/// `M = Σ_i ⟨σ_z^i⟩` with `⟨σ_z^i⟩ = (N₊ - N₋)/N`.
pub fn total_spin(tally: &SpinTally) -> Result<SpinEstimate> {
    let n = tally.trajectories;
    if n == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let nf = n as f64;
    let per_qubit: Vec<(f64, f64)> = tally
        .plus
        .iter()
        .map(|&p| {
            let mean = (2.0 * p as f64 - nf) / nf;
            (mean, ((1.0 - mean * mean).max(0.0) / nf).sqrt())
        })
        .collect();
    let m: f64 = per_qubit.iter().map(|q| q.0).sum();
    let var = if n > 1 {
        ((tally.sum_total_sq - tally.sum_total * tally.sum_total / nf) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(SpinEstimate {
        m,
        stderr: (var / nf).sqrt(),
        per_qubit,
        trajectories: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally(reg: QubitRegister, nodes: &[usize]) -> SpinTally {
        let mut t = SpinTally::new(reg.n_qubits);
        for &n in nodes {
            t.record(&reg, n);
        }
        t
    }

    #[test]
    fn all_zero_gives_n() {
        let reg = QubitRegister::new(4).unwrap();
        let est = total_spin(&tally(reg, &[0; 10])).unwrap();
        assert_eq!(est.m, 4.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn even_cat_split_gives_zero() {
        let reg = QubitRegister::new(4).unwrap();
        let est = total_spin(&tally(reg, &[0, 15, 0, 15])).unwrap();
        assert_eq!(est.m, 0.0);
        // totals are ±4, sample sd = 4·sqrt(4/3)
        assert!((est.stderr - 4.0 * (4.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn three_to_one_split() {
        let reg = QubitRegister::new(2).unwrap();
        let est = total_spin(&tally(reg, &[0, 0, 0, 3])).unwrap();
        assert!((est.per_qubit[0].0 - 0.5).abs() < 1e-15);
        assert!((est.m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn merge_equals_single_pass() {
        let reg = QubitRegister::new(3).unwrap();
        let whole = tally(reg, &[0, 1, 5, 7, 2]);
        let split = tally(reg, &[0, 1]).merge(&tally(reg, &[5, 7, 2]));
        assert_eq!(whole, split);
        assert!(total_spin(&SpinTally::new(3)).is_err());
    }
}
