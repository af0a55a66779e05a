//! Independent trajectories run in parallel, and the statistics built on
//! them.
//!
//! Trajectory `i` draws every random number from its own ChaCha stream
//! `(base_seed, i)` and results are collected in index order, so an ensemble
//! is identical for any number of workers.

pub mod cat;
pub mod equivariance;
pub mod measurement;
pub mod recurrence;

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{evolve_with, trajectory_rng, EngineConfig, JumpModel, RecurrenceTracker, TrajectoryState};
use crate::error::{Error, Result};
use crate::graph::{init_potentials, regularize_psi, NodeId, PotentialTable};
use crate::hamiltonian::HamiltonianModel;
use crate::oracle::{SchrodingerOracle, WaveFunction};

pub use cat::{cat_state_sweep, CatSweep, CatSweepPoint};
pub use equivariance::{equivariance_distance, EquivarianceReport, SnapshotDistance};
pub use measurement::{measurement_statistics, MeasurementReport};
pub use recurrence::{measure_recurrence, recurrence_scaling_fit, RecurrenceSample, ScalingFit};

/// Above this fraction of failed trajectories an ensemble run fails.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

/// Default regularization floor for zero wavefunction components.
pub const DEFAULT_EPSILON_PSI: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_trajectories: u64,
    /// Trajectory `i` uses stream `i` of a ChaCha8 generator seeded with this.
    pub base_seed: u64,
    pub snapshot_times: Vec<f64>,
    pub epsilon_psi: f64,
    pub engine: EngineConfig,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(n_trajectories: u64, base_seed: u64, snapshot_times: Vec<f64>, engine: EngineConfig) -> Self {
        Self {
            n_trajectories,
            base_seed,
            snapshot_times,
            epsilon_psi: DEFAULT_EPSILON_PSI,
            engine,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParameter("n_trajectories must be >= 1".into()));
        }
        if self.snapshot_times.is_empty() {
            return Err(Error::InvalidParameter("at least one snapshot time is required".into()));
        }
        if self
            .snapshot_times
            .windows(2)
            .any(|w| !(w[1] >= w[0]))
            || self.snapshot_times.iter().any(|t| !(*t >= 0.0 && t.is_finite()))
        {
            return Err(Error::InvalidParameter(
                "snapshot times must be finite, >= 0 and non-decreasing".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be >= 1".into()));
        }
        self.engine.validate()
    }

    pub fn horizon(&self) -> f64 {
        self.snapshot_times.last().copied().unwrap_or(0.0)
    }
}

/// Estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// Sample mean and standard error of the mean.
    pub fn from_samples(xs: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n == 0 {
            return None;
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Self {
            value: mean,
            stderr: (var / n as f64).sqrt(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub snapshot_times: Vec<f64>,
    /// `occupancy[k][n]`: trajectories at node `n` at snapshot `k`.
    pub occupancy: Vec<Vec<u64>>,
    /// Trajectories that completed; each occupancy row sums to this.
    pub completed: u64,
    pub requested: u64,
    /// `(trajectory index, error message)`.
    pub failures: Vec<(u64, String)>,
    pub observables: BTreeMap<String, Estimate>,
    /// Per-trajectory recurrence time (trajectories with no repeat omitted).
    pub recurrence: Vec<f64>,
    /// First snapshot whose occupancy departs from `|psi|²` beyond 3σ of
    /// the sampling floor.
    pub deviation_time: Option<f64>,
}

impl EnsembleResult {
    pub fn empirical(&self, k: usize) -> Vec<f64> {
        let n = self.completed.max(1) as f64;
        self.occupancy[k].iter().map(|&c| c as f64 / n).collect()
    }
}

/// Runs `f(i)` for `i in 0..n`, in parallel, returning results in index
/// order.
pub fn run_trajectories<T, F>(n: u64, workers: Option<usize>, f: F) -> Result<Vec<Result<T>>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let run = || (0..n).into_par_iter().map(&f).collect::<Vec<_>>();
    match workers {
        None => Ok(run()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(run))
        }
    }
}

/// Splits per-trajectory results into successes and failures; errors when
/// more than [`MAX_FAILURE_FRACTION`] failed.
pub fn partition_outcomes<T>(outcomes: Vec<Result<T>>) -> Result<(Vec<T>, Vec<(u64, String)>)> {
    let total = outcomes.len();
    let mut ok = Vec::with_capacity(total);
    let mut failed = Vec::new();
    for (i, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => failed.push((i as u64, e.to_string())),
        }
    }
    if failed.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::EnsembleFailure {
            failed: failed.len(),
            total,
            first: failed[0].1.clone(),
        });
    }
    Ok((ok, failed))
}

/// Shared, read-only inputs for the trajectories of one ensemble.
#[derive(Clone, Debug)]
pub struct TrajectorySetup {
    pub model: JumpModel,
    pub table: PotentialTable,
    cumulative: Vec<f64>,
}

impl TrajectorySetup {
    pub fn new(h: &HamiltonianModel, psi0: &WaveFunction, epsilon_psi: f64) -> Result<Self> {
        let model = JumpModel::new(h)?;
        let table = init_potentials(model.graph(), h, &psi0.amplitudes, epsilon_psi)?;
        let cumulative = regularize_psi(&psi0.amplitudes, epsilon_psi)
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c.norm_sqr();
                Some(*acc)
            })
            .collect();
        Ok(Self {
            model,
            table,
            cumulative,
        })
    }

    /// Initial-node distribution: `|psi'|²` renormalized.
    pub fn initial_distribution(&self) -> Vec<f64> {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = (c - prev) / total;
                prev = c;
                p
            })
            .collect()
    }

    /// Fresh state for trajectory `index`, with its initial node drawn from
    /// the trajectory's own stream.
    pub fn start(&self, base_seed: u64, index: u64) -> TrajectoryState {
        let mut rng = trajectory_rng(base_seed, index);
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let u = rng.random::<f64>() * total;
        let node = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1);
        TrajectoryState::new(NodeId(node), self.table.clone(), rng)
    }
}

struct Outcome {
    nodes: Vec<usize>,
    events: u64,
    t_rec: Option<f64>,
}

/// Runs the ensemble and compares each snapshot with the exact `|psi(t)|²`.
pub fn run_ensemble(h: &HamiltonianModel, psi0: &WaveFunction, config: &EnsembleConfig) -> Result<EnsembleResult> {
    config.validate()?;
    let setup = TrajectorySetup::new(h, psi0, config.epsilon_psi)?;
    let directed = setup.model.graph().directed_count();
    let outcomes = run_trajectories(config.n_trajectories, config.workers, |i| {
        let mut state = setup.start(config.base_seed, i);
        let mut tracker = RecurrenceTracker::new(directed);
        let mut nodes = Vec::with_capacity(config.snapshot_times.len());
        let mut events = 0;
        for &t in &config.snapshot_times {
            events += evolve_with(&mut state, &setup.model, t, &config.engine, |ev, e, _| {
                tracker.observe(e, ev.at)
            })?;
            nodes.push(state.current.0);
        }
        Ok(Outcome {
            nodes,
            events,
            t_rec: tracker.t_rec(),
        })
    })?;
    let (ok, failures) = partition_outcomes(outcomes)?;

    let dim = h.dim();
    let mut occupancy = vec![vec![0u64; dim]; config.snapshot_times.len()];
    for o in &ok {
        for (k, &n) in o.nodes.iter().enumerate() {
            occupancy[k][n] += 1;
        }
    }
    let events: Vec<f64> = ok.iter().map(|o| o.events as f64).collect();
    let recurrence: Vec<f64> = ok.iter().filter_map(|o| o.t_rec).collect();
    let mut observables = BTreeMap::new();
    if let Some(e) = Estimate::from_samples(&events) {
        observables.insert("events_per_trajectory".to_string(), e);
    }
    if let Some(e) = Estimate::from_samples(&recurrence) {
        observables.insert("t_rec".to_string(), e);
    }
    let mut result = EnsembleResult {
        snapshot_times: config.snapshot_times.clone(),
        occupancy,
        completed: ok.len() as u64,
        requested: config.n_trajectories,
        failures,
        observables,
        recurrence,
        deviation_time: None,
    };
    if result.completed > 0 {
        let oracle = SchrodingerOracle::new(h);
        let probs = oracle
            .path(psi0, &config.snapshot_times)?
            .iter()
            .map(|p| p.probabilities())
            .collect::<Vec<_>>();
        let report = equivariance_distance(&result, &probs, 200, config.base_seed)?;
        result.deviation_time = report.deviation_time;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::two_level;

    #[test]
    fn single_trajectory_is_a_delta() {
        let h = two_level(1.0).unwrap();
        let psi = WaveFunction::normalized(vec![1.0.into(), 1.0.into()]).unwrap();
        let cfg = EnsembleConfig::new(1, 3, vec![0.5, 1.0], EngineConfig::new(1e-2).unwrap());
        let r = run_ensemble(&h, &psi, &cfg).unwrap();
        for row in &r.occupancy {
            assert_eq!(row.iter().sum::<u64>(), 1);
            assert_eq!(row.iter().filter(|&&c| c == 1).count(), 1);
        }
    }

    #[test]
    fn initial_distribution_is_floored() {
        let h = two_level(1.0).unwrap();
        let psi = WaveFunction::basis(2, 0);
        let s = TrajectorySetup::new(&h, &psi, 0.1).unwrap();
        let p = s.initial_distribution();
        assert!((p[1] - 0.01 / 1.01).abs() < 1e-15);
    }

    #[test]
    fn too_many_failures_is_an_error() {
        let outcomes: Vec<Result<()>> = (0..100)
            .map(|i| if i < 2 { Err(Error::EmptyEnsemble) } else { Ok(()) })
            .collect();
        assert!(matches!(partition_outcomes(outcomes), Err(Error::EnsembleFailure { failed: 2, .. })));
        let one: Vec<Result<()>> = (0..100).map(|i| if i < 1 { Err(Error::EmptyEnsemble) } else { Ok(()) }).collect();
        assert_eq!(partition_outcomes(one).unwrap().1.len(), 1);
    }

    #[test]
    fn estimate_of_constant_samples() {
        let e = Estimate::from_samples(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!((e.value, e.stderr), (2.0, 0.0));
        assert!(Estimate::from_samples(&[]).is_none());
    }
}
