use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ode::{integrate, OdeOptions, OdeSystem};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, C64};

/// Norm tolerance for states produced by the oracle.
pub const NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveFunction {
    pub amplitudes: Vec<C64>,
    pub time: f64,
}

impl WaveFunction {
    /// Wraps a normalized state; rejects states off the unit sphere.
    pub fn new(amplitudes: Vec<C64>, time: f64) -> Result<Self> {
        let psi = Self { amplitudes, time };
        let norm = psi.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!("state is not normalized: |psi| = {norm}")));
        }
        Ok(psi)
    }

    /// Normalizes `amplitudes` and places the state at `t = 0`.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter("cannot normalize a zero state".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|c| c / norm).collect(),
            time: 0.0,
        })
    }

    /// Computational basis state `|k>`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![C64::default(); dim];
        amplitudes[k] = C64::new(1.0, 0.0);
        Self { amplitudes, time: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `|<self|other>|²`.
    pub fn fidelity(&self, other: &WaveFunction) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }
}

/// Probability distribution over nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityVector {
    pub rho: Vec<f64>,
}

impl DensityVector {
    pub fn new(rho: Vec<f64>) -> Result<Self> {
        if rho.iter().any(|&r| !(r >= -1e-12) || !r.is_finite()) {
            return Err(Error::InvalidParameter("density must be non-negative".into()));
        }
        let total: f64 = rho.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("density sums to {total}, not 1")));
        }
        Ok(Self { rho })
    }

    pub fn from_psi(psi: &WaveFunction) -> Self {
        Self {
            rho: psi.probabilities(),
        }
    }

    pub fn total(&self) -> f64 {
        self.rho.iter().sum()
    }
}

struct Eigen {
    values: DVector<f64>,
    vectors: DMatrix<C64>,
}

/// Exact per-slice propagator: each slice is diagonalized once, lazily.
pub struct SchrodingerOracle {
    model: HamiltonianModel,
    eigen: Vec<OnceLock<Eigen>>,
}

impl SchrodingerOracle {
    pub fn new(model: &HamiltonianModel) -> Self {
        Self {
            model: model.clone(),
            eigen: (0..model.slices().len()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn model(&self) -> &HamiltonianModel {
        &self.model
    }

    fn eigen(&self, k: usize) -> &Eigen {
        self.eigen[k].get_or_init(|| {
            let dense = self.model.slices()[k].matrix.to_dense();
            let eig = dense.symmetric_eigen();
            Eigen {
                values: eig.eigenvalues,
                vectors: eig.eigenvectors,
            }
        })
    }

    fn propagate_in_slice(&self, k: usize, psi: &[C64], dt: f64) -> Vec<C64> {
        if dt == 0.0 {
            return psi.to_vec();
        }
        let eig = self.eigen(k);
        let v = DVector::from_column_slice(psi);
        let mut coeffs = eig.vectors.ad_mul(&v);
        for (c, &e) in coeffs.iter_mut().zip(eig.values.iter()) {
            *c *= C64::new(0.0, -e * dt).exp();
        }
        (&eig.vectors * coeffs).as_slice().to_vec()
    }

    /// `psi(t_end)` from `psi` at `psi.time`, crossing slice boundaries.
    pub fn evolve(&self, psi: &WaveFunction, t_end: f64) -> Result<WaveFunction> {
        if psi.dim() != self.model.dim() {
            return Err(Error::Dimension {
                expected: self.model.dim(),
                got: psi.dim(),
            });
        }
        if t_end < psi.time {
            return Err(Error::InvalidParameter(format!(
                "t_end = {t_end} precedes psi.time = {}",
                psi.time
            )));
        }
        let mut t = psi.time;
        let mut amps = psi.amplitudes.clone();
        let mut stops = self.model.boundaries_between(t, t_end);
        stops.push(t_end);
        for stop in stops {
            let k = self.model.slice_index(t);
            amps = self.propagate_in_slice(k, &amps, stop - t);
            t = stop;
        }
        Ok(WaveFunction {
            amplitudes: amps,
            time: t_end,
        })
    }

    /// States at each of `times` (non-decreasing, all `>= psi0.time`).
    pub fn path(&self, psi0: &WaveFunction, times: &[f64]) -> Result<Vec<WaveFunction>> {
        let mut out = Vec::with_capacity(times.len());
        let mut cur = psi0.clone();
        for &t in times {
            cur = self.evolve(&cur, t)?;
            out.push(cur.clone());
        }
        Ok(out)
    }
}

/// One-shot exact evolution.
pub fn schrodinger_evolve(h: &HamiltonianModel, psi: &WaveFunction, t_end: f64) -> Result<WaveFunction> {
    SchrodingerOracle::new(h).evolve(psi, t_end)
}

struct SchrodingerRhs<'a> {
    model: &'a HamiltonianModel,
    slice: usize,
}

impl OdeSystem<C64> for SchrodingerRhs<'_> {
    fn rhs(&mut self, _t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let hy = self.model.slices()[self.slice].matrix.mul_vec(y);
        for (d, v) in dy.iter_mut().zip(hy) {
            *d = C64::new(v.im, -v.re);
        }
        Ok(())
    }
}

/// Step-based integration of `i dpsi/dt = H psi`, slice by slice. Independent
/// of the eigendecomposition route; used to cross-check it.
pub fn schrodinger_integrate(
    h: &HamiltonianModel,
    psi: &WaveFunction,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<WaveFunction> {
    let mut t = psi.time;
    let mut y = psi.amplitudes.clone();
    let mut stops = h.boundaries_between(t, t_end);
    stops.push(t_end);
    for stop in stops {
        let mut sys = SchrodingerRhs {
            model: h,
            slice: h.slice_index(t),
        };
        integrate(&mut sys, t, stop, &mut y, opts)?;
        t = stop;
    }
    Ok(WaveFunction {
        amplitudes: y,
        time: t_end,
    })
}
