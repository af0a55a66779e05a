use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{partition_outcomes, run_trajectories, Estimate, TrajectorySetup};
use crate::engine::{evolve_with, EngineConfig, RecurrenceTracker};
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::oracle::WaveFunction;

/// Recurrence time measured on one grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceSample {
    pub n_nodes: usize,
    pub hbar2: f64,
    /// Mean over trajectories of each trajectory's recurrence time.
    pub t_rec: Estimate,
    pub trajectories: usize,
    pub events: u64,
}

/// Runs `n_traj` trajectories, discards `[0, burn_in)`, and measures the
/// recurrence time over `[burn_in, burn_in + window]`.
#[allow(clippy::too_many_arguments)]
pub fn measure_recurrence(
    h: &HamiltonianModel,
    psi0: &WaveFunction,
    engine: &EngineConfig,
    burn_in: f64,
    window: f64,
    n_traj: u64,
    seed: u64,
    epsilon_psi: f64,
    workers: Option<usize>,
) -> Result<RecurrenceSample> {
    if !(window > 0.0 && burn_in >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need window > 0 and burn_in >= 0, got {window} and {burn_in}"
        )));
    }
    let setup = TrajectorySetup::new(h, psi0, epsilon_psi)?;
    let directed = setup.model.graph().directed_count();
    let outcomes = run_trajectories(n_traj, workers, |i| {
        let mut state = setup.start(seed, i);
        evolve_with(&mut state, &setup.model, burn_in, engine, |_, _, _| {})?;
        let mut tracker = RecurrenceTracker::new(directed);
        let events = evolve_with(&mut state, &setup.model, burn_in + window, engine, |ev, e, _| {
            tracker.observe(e, ev.at)
        })?;
        Ok((tracker.t_rec(), events))
    })?;
    let (ok, _) = partition_outcomes(outcomes)?;
    let values: Vec<f64> = ok.iter().filter_map(|o| o.0).collect();
    let t_rec = Estimate::from_samples(&values).ok_or_else(|| {
        Error::InvalidParameter("no transition repeated inside the window; lengthen it".into())
    })?;
    Ok(RecurrenceSample {
        n_nodes: h.dim(),
        hbar2: engine.constants.hbar2,
        t_rec,
        trajectories: values.len(),
        events: ok.iter().map(|o| o.1).sum(),
    })
}

/// Coefficient with its 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub value: f64,
    pub stderr: f64,
    pub ci: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Exponent of `|N|`.
    pub gamma: Coefficient,
    /// Exponent of `ħ₂`.
    pub hbar2_exponent: Coefficient,
    /// `c` in `t_rec = c · ħ₂^a · |N|^γ`.
    pub prefactor: f64,
    pub r_squared: f64,
    pub dof: usize,
    /// Slope of `log t_rec` against `log |N|` at each fixed `ħ₂`.
    pub gamma_by_hbar2: Vec<(f64, f64)>,
    /// Slope of `log t_rec` against `log ħ₂` at each fixed `|N|`.
    pub exponent_by_size: Vec<(usize, f64)>,
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares fit of `log t_rec = log c + a log ħ₂ + γ log |N|`.
pub fn recurrence_scaling_fit(samples: &[RecurrenceSample]) -> Result<ScalingFit> {
    let mut sizes: Vec<usize> = samples.iter().map(|s| s.n_nodes).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut hbar2s: Vec<f64> = samples.iter().map(|s| s.hbar2).collect();
    hbar2s.sort_by(|a, b| a.total_cmp(b));
    hbar2s.dedup();
    if sizes.len() < 3 || hbar2s.len() < 3 {
        return Err(Error::InsufficientGrid(format!(
            "need >= 3 sizes and >= 3 hbar2 values, got {} and {}",
            sizes.len(),
            hbar2s.len()
        )));
    }
    if samples.iter().any(|s| !(s.t_rec.value > 0.0)) {
        return Err(Error::InvalidParameter("recurrence times must be positive".into()));
    }
    let k = samples.len();
    let x = DMatrix::from_fn(k, 3, |r, c| match c {
        0 => 1.0,
        1 => samples[r].hbar2.ln(),
        _ => (samples[r].n_nodes as f64).ln(),
    });
    let y = DVector::from_iterator(k, samples.iter().map(|s| s.t_rec.value.ln()));
    let xtx_inv = (x.transpose() * &x)
        .try_inverse()
        .ok_or_else(|| Error::InsufficientGrid("degenerate design matrix".into()))?;
    let beta = &xtx_inv * x.transpose() * &y;
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let mean_y = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let dof = k - 3;
    let s2 = if dof > 0 { rss / dof as f64 } else { 0.0 };
    let tq = if dof > 0 {
        StudentsT::new(0.0, 1.0, dof as f64)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .inverse_cdf(0.975)
    } else {
        f64::INFINITY
    };
    let coef = |i: usize| {
        let se = (s2 * xtx_inv[(i, i)]).sqrt();
        let half = if se == 0.0 { 0.0 } else { tq * se };
        Coefficient {
            value: beta[i],
            stderr: se,
            ci: (beta[i] - half, beta[i] + half),
        }
    };

    let mut by_h: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    let mut by_n: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for s in samples {
        let ly = s.t_rec.value.ln();
        by_h.entry(s.hbar2.to_bits()).or_default().push(((s.n_nodes as f64).ln(), ly));
        by_n.entry(s.n_nodes).or_default().push((s.hbar2.ln(), ly));
    }
    let mut gamma_by_hbar2: Vec<(f64, f64)> = by_h
        .into_iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(h, v)| (f64::from_bits(h), slope(&v)))
        .collect();
    gamma_by_hbar2.sort_by(|a, b| a.0.total_cmp(&b.0));

    Ok(ScalingFit {
        gamma: coef(2),
        hbar2_exponent: coef(1),
        prefactor: beta[0].exp(),
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        dof,
        gamma_by_hbar2,
        exponent_by_size: by_n
            .into_iter()
            .filter(|(_, v)| v.len() >= 2)
            .map(|(n, v)| (n, slope(&v)))
            .collect(),
    })
}
