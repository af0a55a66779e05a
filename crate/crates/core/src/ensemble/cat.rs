use serde::{Deserialize, Serialize};

use super::{partition_outcomes, run_trajectories, TrajectorySetup};
use crate::engine::{evolve_with, EngineConfig};
use crate::error::{Error, Result};
use crate::models::{total_spin, CatStateCircuit, SpinTally};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatSweepPoint {
    pub hbar2: f64,
    pub m: f64,
    pub stderr: f64,
    pub per_qubit: Vec<(f64, f64)>,
    pub trajectories: u64,
    pub failures: usize,
    pub events_per_trajectory: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatSweep {
    pub n_qubits: usize,
    /// Sorted by increasing `ħ₂`.
    pub points: Vec<CatSweepPoint>,
    /// `ħ₂` where `M` crosses `n_qubits / 2`, interpolated in `log ħ₂`.
    pub crossover: Option<f64>,
}

impl CatSweep {
    /// `M` never drops by more than `sigmas` combined standard errors from
    /// one ladder point to the next larger `ħ₂`.
    pub fn monotone_within(&self, sigmas: f64) -> bool {
        self.points.windows(2).all(|w| {
            let tol = sigmas * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            w[1].m >= w[0].m - tol
        })
    }
}

fn crossover(points: &[CatSweepPoint], level: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0].m - level, w[1].m - level);
        if a == 0.0 {
            Some(w[0].hbar2)
        } else if a * b < 0.0 {
            let (la, lb) = (w[0].hbar2.ln(), w[1].hbar2.ln());
            Some((la + (lb - la) * a / (a - b)).exp())
        } else {
            None
        }
    })
}

/// Runs the circuit to the end of its schedule at each `ħ₂` and tallies the
/// total spin of the terminal nodes. The time-dependent update rule is
/// switched on regardless of `engine`.
pub fn cat_state_sweep(
    circuit: &CatStateCircuit,
    ladder: &[f64],
    n_trajectories: u64,
    base_seed: u64,
    epsilon_psi: f64,
    engine: &EngineConfig,
    workers: Option<usize>,
) -> Result<CatSweep> {
    if ladder.is_empty() {
        return Err(Error::InsufficientGrid("empty hbar2 ladder".into()));
    }
    let setup = TrajectorySetup::new(&circuit.model, &circuit.psi0, epsilon_psi)?;
    let t_end = circuit.end_time();
    let reg = circuit.register;
    let mut ladder = ladder.to_vec();
    ladder.sort_by(|a, b| a.total_cmp(b));
    let mut points = Vec::with_capacity(ladder.len());
    for &hbar2 in &ladder {
        let mut cfg = engine.clone();
        cfg.constants.hbar2 = hbar2;
        cfg.time_dependent_rule = true;
        cfg.validate()?;
        let outcomes = run_trajectories(n_trajectories, workers, |i| {
            let mut state = setup.start(base_seed, i);
            let events = evolve_with(&mut state, &setup.model, t_end, &cfg, |_, _, _| {})?;
            Ok((state.current.0, events))
        })?;
        let (ok, failures) = partition_outcomes(outcomes)?;
        let mut tally = SpinTally::new(reg.n_qubits);
        for &(node, _) in &ok {
            tally.record(&reg, node);
        }
        let est = total_spin(&tally)?;
        points.push(CatSweepPoint {
            hbar2,
            m: est.m,
            stderr: est.stderr,
            per_qubit: est.per_qubit,
            trajectories: est.trajectories,
            failures: failures.len(),
            events_per_trajectory: ok.iter().map(|o| o.1 as f64).sum::<f64>() / ok.len().max(1) as f64,
        });
    }
    Ok(CatSweep {
        n_qubits: reg.n_qubits,
        crossover: crossover(&points, reg.n_qubits as f64 / 2.0),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(hbar2: f64, m: f64, stderr: f64) -> CatSweepPoint {
        CatSweepPoint {
            hbar2,
            m,
            stderr,
            per_qubit: vec![],
            trajectories: 1,
            failures: 0,
            events_per_trajectory: 0.0,
        }
    }

    #[test]
    fn crossover_interpolates_in_log() {
        let pts = vec![point(1e-4, 0.0, 0.1), point(1e-2, 4.0, 0.1)];
        let c = crossover(&pts, 2.0).unwrap();
        assert!((c - 1e-3).abs() < 1e-15);
        let sweep = CatSweep {
            n_qubits: 4,
            points: pts,
            crossover: Some(c),
        };
        assert!(sweep.monotone_within(3.0));
    }

    #[test]
    fn non_monotone_detected() {
        let sweep = CatSweep {
            n_qubits: 4,
            points: vec![point(1e-4, 2.0, 0.05), point(1e-3, 1.0, 0.05)],
            crossover: None,
        };
        assert!(!sweep.monotone_within(3.0));
    }
}
