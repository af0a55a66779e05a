use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::EnsembleResult;
use crate::error::{Error, Result};

/// Snapshots whose distance exceeds the sampling floor by this many
/// standard deviations are flagged.
pub const FLAG_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDistance {
    pub t: f64,
    pub tv: f64,
    /// 95% bootstrap interval of the distance.
    pub ci: (f64, f64),
    /// Mean and spread of the distance when sampling exactly from the target.
    pub null_mean: f64,
    pub null_sd: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub snapshots: Vec<SnapshotDistance>,
    pub deviation_time: Option<f64>,
}

impl EquivarianceReport {
    pub fn all_within_floor(&self) -> bool {
        self.snapshots.iter().all(|s| !s.flagged)
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Multinomial counts by successive conditional binomials.
pub fn sample_multinomial<R: Rng + ?Sized>(n: u64, p: &[f64], rng: &mut R) -> Vec<u64> {
    let mut left = n;
    let mut mass = p.iter().sum::<f64>();
    let mut out = Vec::with_capacity(p.len());
    for (i, &pi) in p.iter().enumerate() {
        if i + 1 == p.len() {
            out.push(left);
            break;
        }
        let c = if left == 0 || mass <= 0.0 {
            0
        } else {
            let q = (pi / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).map(|b| b.sample(rng)).unwrap_or(0)
        };
        out.push(c);
        left -= c;
        mass -= pi;
    }
    out
}

fn tv_of_counts(counts: &[u64], n: u64, p: &[f64]) -> f64 {
    let nf = n as f64;
    0.5 * counts
        .iter()
        .zip(p)
        .map(|(&c, &q)| (c as f64 / nf - q).abs())
        .sum::<f64>()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Total-variation distance between each snapshot's occupancy and `probs[k]`,
/// with `bootstrap` resamples for both the interval and the null floor.
pub fn equivariance_distance(
    result: &EnsembleResult,
    probs: &[Vec<f64>],
    bootstrap: usize,
    seed: u64,
) -> Result<EquivarianceReport> {
    if result.completed == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if probs.len() != result.snapshot_times.len() {
        return Err(Error::Dimension {
            expected: result.snapshot_times.len(),
            got: probs.len(),
        });
    }
    if bootstrap < 2 {
        return Err(Error::InvalidParameter("bootstrap needs at least 2 resamples".into()));
    }
    let n = result.completed;
    let mut snapshots = Vec::with_capacity(probs.len());
    for (k, p) in probs.iter().enumerate() {
        if p.len() != result.occupancy[k].len() {
            return Err(Error::Dimension {
                expected: result.occupancy[k].len(),
                got: p.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1 << 32 | k as u64);
        let empirical = result.empirical(k);
        let tv = total_variation(&empirical, p);

        let null: Vec<f64> = (0..bootstrap)
            .map(|_| tv_of_counts(&sample_multinomial(n, p, &mut rng), n, p))
            .collect();
        let null_mean = null.iter().sum::<f64>() / bootstrap as f64;
        let null_sd = (null.iter().map(|x| (x - null_mean).powi(2)).sum::<f64>() / (bootstrap - 1) as f64).sqrt();

        let mut boot: Vec<f64> = (0..bootstrap)
            .map(|_| tv_of_counts(&sample_multinomial(n, &empirical, &mut rng), n, p))
            .collect();
        boot.sort_by(|a, b| a.total_cmp(b));

        snapshots.push(SnapshotDistance {
            t: result.snapshot_times[k],
            tv,
            ci: (quantile(&boot, 0.025), quantile(&boot, 0.975)),
            null_mean,
            null_sd,
            flagged: tv > null_mean + FLAG_SIGMAS * null_sd,
        });
    }
    let deviation_time = snapshots.iter().find(|s| s.flagged).map(|s| s.t);
    Ok(EquivarianceReport {
        snapshots,
        deviation_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn result_from(counts: Vec<Vec<u64>>) -> EnsembleResult {
        let n = counts[0].iter().sum();
        EnsembleResult {
            snapshot_times: (0..counts.len()).map(|k| k as f64).collect(),
            occupancy: counts,
            completed: n,
            requested: n,
            failures: vec![],
            observables: BTreeMap::new(),
            recurrence: vec![],
            deviation_time: None,
        }
    }

    #[test]
    fn multinomial_conserves_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = sample_multinomial(1000, &[0.1, 0.2, 0.3, 0.4], &mut rng);
            assert_eq!(c.iter().sum::<u64>(), 1000);
        }
    }

    #[test]
    fn exact_samples_sit_on_the_floor() {
        let p = vec![0.1, 0.2, 0.3, 0.4];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut floors = Vec::new();
        for n in [1_000u64, 16_000] {
            let counts: Vec<Vec<u64>> = (0..5).map(|_| sample_multinomial(n, &p, &mut rng)).collect();
            let report = equivariance_distance(&result_from(counts), &vec![p.clone(); 5], 300, 7).unwrap();
            assert!(report.all_within_floor());
            floors.push(report.snapshots[0].null_mean);
        }
        // floor scales as 1/sqrt(n): 16x more samples, 4x smaller
        let ratio = floors[0] / floors[1];
        assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
    }

    #[test]
    fn uniform_against_biased_is_flagged() {
        let p = vec![0.7, 0.1, 0.1, 0.1];
        let report = equivariance_distance(&result_from(vec![vec![250; 4]]), &[p], 200, 3).unwrap();
        assert!(report.snapshots[0].flagged);
        assert_eq!(report.deviation_time, Some(0.0));
    }
}
