use serde::{Deserialize, Serialize};

use super::{partition_outcomes, run_trajectories, Estimate, TrajectorySetup};
use crate::engine::{evolve_with, EngineConfig};
use crate::error::Result;
use crate::models::{ApparatusModel, Branch};
use crate::oracle::WaveFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub d_env: usize,
    pub hbar2: f64,
    pub trajectories: u64,
    pub failures: usize,
    /// Terminal nodes per outcome.
    pub counts: Vec<u64>,
    /// Terminal nodes still at a branch root.
    pub undecided: u64,
    /// Outcome frequencies among decided trajectories, binomial errors.
    pub frequencies: Vec<Estimate>,
    /// Branch changes per trajectory per unit time after the first cascade
    /// pulse.
    pub switch_rate: Estimate,
    pub switches: u64,
    /// Fraction of trajectories that switched at least once.
    pub switching_fraction: f64,
}

impl MeasurementReport {
    /// Every frequency within `sigmas` standard errors of `expected`.
    pub fn matches(&self, expected: &[f64], sigmas: f64) -> bool {
        self.frequencies
            .iter()
            .zip(expected)
            .all(|(f, &p)| {
                let n = self.counts.iter().sum::<u64>().max(1) as f64;
                // error from the expected value, so exact agreement at p = 1 passes
                let se = (p * (1.0 - p) / n).sqrt().max(f.stderr);
                (f.value - p).abs() <= sigmas * se
            })
    }
}

struct Run {
    terminal: Branch,
    switches: u64,
}

/// Runs the apparatus schedule to its end for `n_trajectories` trajectories,
/// decoding the terminal branch and counting branch changes along the way.
/// The time-dependent update rule is switched on regardless of `engine`.
#[allow(clippy::too_many_arguments)]
pub fn measurement_statistics(
    app: &ApparatusModel,
    psi0: &WaveFunction,
    engine: &EngineConfig,
    n_trajectories: u64,
    base_seed: u64,
    epsilon_psi: f64,
    workers: Option<usize>,
) -> Result<MeasurementReport> {
    let mut cfg = engine.clone();
    cfg.time_dependent_rule = true;
    cfg.validate()?;
    let setup = TrajectorySetup::new(&app.model, psi0, epsilon_psi)?;
    let t_start = app.cascade_start();
    let t_end = app.end_time();
    let outcomes = run_trajectories(n_trajectories, workers, |i| {
        let mut state = setup.start(base_seed, i);
        evolve_with(&mut state, &setup.model, t_start, &cfg, |_, _, _| {})?;
        let mut decided = match app.branch(state.current.0) {
            Branch::Outcome(m) => Some(m),
            Branch::Undecided => None,
        };
        let mut switches = 0u64;
        evolve_with(&mut state, &setup.model, t_end, &cfg, |ev, _, _| {
            if let Branch::Outcome(m) = app.branch(ev.to.0) {
                if decided.is_some_and(|d| d != m) {
                    switches += 1;
                }
                decided = Some(m);
            }
        })?;
        Ok(Run {
            terminal: app.branch(state.current.0),
            switches,
        })
    })?;
    let (ok, failures) = partition_outcomes(outcomes)?;

    let mut counts = vec![0u64; app.pointer_dim()];
    let mut undecided = 0;
    for r in &ok {
        match r.terminal {
            Branch::Outcome(m) => counts[m] += 1,
            Branch::Undecided => undecided += 1,
        }
    }
    let decided: u64 = counts.iter().sum();
    let frequencies = counts
        .iter()
        .map(|&c| {
            let n = decided.max(1) as f64;
            let p = c as f64 / n;
            Estimate {
                value: p,
                stderr: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect();
    let window = (t_end - t_start).max(f64::MIN_POSITIVE);
    let rates: Vec<f64> = ok.iter().map(|r| r.switches as f64 / window).collect();
    Ok(MeasurementReport {
        d_env: app.d_env,
        hbar2: cfg.constants.hbar2,
        trajectories: ok.len() as u64,
        failures: failures.len(),
        counts,
        undecided,
        frequencies,
        switch_rate: Estimate::from_samples(&rates).unwrap_or(Estimate {
            value: 0.0,
            stderr: 0.0,
        }),
        switches: ok.iter().map(|r| r.switches).sum(),
        switching_fraction: ok.iter().filter(|r| r.switches > 0).count() as f64 / ok.len().max(1) as f64,
    })
}
