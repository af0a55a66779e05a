//! System, pointer and environment qubits for a measurement.
//!
//! Joint node `((s * P + p) << d_env) | e` holds system basis state `s`,
//! pointer state `p` and environment bits `e` (environment qubit 1 is the
//! most significant of the `d_env` bits). The schedule is:
//!
//! 1. a pointer pulse `|φ_n⟩|P_p⟩ -> |φ_n⟩|P_{p+n}⟩`, acting only where
//!    every environment bit is 0 (the branch roots);
//! 2. `d_env` cascade pulses, pulse `k` rotating environment qubit `k` by
//!    `±π/2` about X with the sign set by the pointer parity;
//! 3. a hold slice carrying only the system Hamiltonian.
//!
//! Only the pointer pulse changes the pointer coordinate, and only at the
//! roots, so the sub-networks of different outcomes meet nowhere else.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SparseMatrix, C64};
use crate::oracle::WaveFunction;

/// Orthonormality tolerance on the measured basis.
pub const BASIS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApparatusModel {
    pub system_dim: usize,
    pub d_env: usize,
    /// Measured basis; `basis[n]` is `|φ_n⟩` in system coordinates.
    pub basis: Vec<Vec<C64>>,
    pub omega_int: f64,
    pub hold: f64,
    pub model: HamiltonianModel,
}

/// Outcome of decoding a joint node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Undecided,
    Outcome(usize),
}

impl ApparatusModel {
    pub fn pointer_dim(&self) -> usize {
        self.system_dim
    }

    pub fn dim(&self) -> usize {
        self.system_dim * self.pointer_dim() << self.d_env
    }

    pub fn tau(&self) -> f64 {
        1.0 / self.omega_int
    }

    pub fn index(&self, system: usize, pointer: usize, env: usize) -> usize {
        ((system * self.pointer_dim() + pointer) << self.d_env) | env
    }

    /// `(system, pointer, env)` for a joint node.
    pub fn decode(&self, node: usize) -> (usize, usize, usize) {
        let env = node & ((1 << self.d_env) - 1);
        let rest = node >> self.d_env;
        (rest / self.pointer_dim(), rest % self.pointer_dim(), env)
    }

    /// Roots (all environment bits 0) are undecided unless there is no
    /// environment at all.
    pub fn branch(&self, node: usize) -> Branch {
        let (_, p, e) = self.decode(node);
        if self.d_env > 0 && e == 0 {
            Branch::Undecided
        } else {
            Branch::Outcome(p)
        }
    }

    /// Start of the first cascade pulse.
    pub fn cascade_start(&self) -> f64 {
        self.tau()
    }

    /// End of the last pulse.
    pub fn pulses_end(&self) -> f64 {
        (1 + self.d_env) as f64 * self.tau()
    }

    pub fn end_time(&self) -> f64 {
        self.pulses_end() + self.hold
    }

    /// `psi_sys ⊗ |P_0⟩ ⊗ |0…0⟩`.
    pub fn initial_state(&self, psi_sys: &[C64]) -> Result<WaveFunction> {
        if psi_sys.len() != self.system_dim {
            return Err(Error::Dimension {
                expected: self.system_dim,
                got: psi_sys.len(),
            });
        }
        let mut amps = vec![C64::default(); self.dim()];
        for (s, &a) in psi_sys.iter().enumerate() {
            amps[self.index(s, 0, 0)] = a;
        }
        WaveFunction::new(amps, 0.0)
    }

    /// `cos θ |φ₀⟩ + sin θ |φ₁⟩` in system coordinates.
    pub fn system_state(&self, theta: f64) -> Result<Vec<C64>> {
        if self.system_dim < 2 {
            return Err(Error::InvalidParameter("need at least two outcomes".into()));
        }
        let (s, c) = theta.sin_cos();
        Ok((0..self.system_dim)
            .map(|k| self.basis[0][k] * c + self.basis[1][k] * s)
            .collect())
    }

    /// Total weight of `psi` on each pointer value.
    pub fn pointer_populations(&self, psi: &WaveFunction) -> Vec<f64> {
        let mut out = vec![0.0; self.pointer_dim()];
        for (i, a) in psi.amplitudes.iter().enumerate() {
            out[self.decode(i).1] += a.norm_sqr();
        }
        out
    }

    /// Born weights `|⟨φ_m|psi_sys⟩|²`.
    pub fn born_weights(&self, psi_sys: &[C64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|phi| phi.iter().zip(psi_sys).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr())
            .collect()
    }
}

/// Computational basis of a `dim`-level system.
pub fn computational_basis(dim: usize) -> Vec<Vec<C64>> {
    (0..dim)
        .map(|k| (0..dim).map(|j| C64::new((j == k) as u8 as f64, 0.0)).collect())
        .collect()
}

fn check_basis(basis: &[Vec<C64>], dim: usize) -> Result<()> {
    if basis.len() != dim {
        return Err(Error::Dimension {
            expected: dim,
            got: basis.len(),
        });
    }
    for v in basis {
        if v.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: v.len(),
            });
        }
    }
    for r in 0..dim {
        for c in 0..dim {
            let g: C64 = basis[r].iter().zip(&basis[c]).map(|(a, b)| a.conj() * b).sum();
            let want = if r == c { 1.0 } else { 0.0 };
            let deviation = (g - want).norm();
            if !(deviation <= BASIS_TOL) {
                return Err(Error::NonOrthogonalBasis { deviation, row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Generator `G` on the pointer with `exp(-i G tau) = S^shift`, where
/// `S|p⟩ = |p+1 mod dim⟩`.
fn shift_generator(dim: usize, shift: usize, tau: f64) -> DMatrix<C64> {
    let norm = 1.0 / (dim as f64).sqrt();
    let mut g = DMatrix::zeros(dim, dim);
    for k in 0..dim {
        let theta = 2.0 * PI * ((k * shift) % dim) as f64 / dim as f64;
        if theta == 0.0 {
            continue;
        }
        let f: Vec<C64> = (0..dim)
            .map(|p| C64::from_polar(norm, 2.0 * PI * (k * p) as f64 / dim as f64))
            .collect();
        for a in 0..dim {
            for b in 0..dim {
                g[(a, b)] += f[a] * f[b].conj() * (theta / tau);
            }
        }
    }
    g
}

fn clean(v: C64) -> C64 {
    C64::new(
        if v.re.abs() < 1e-15 { 0.0 } else { v.re },
        if v.im.abs() < 1e-15 { 0.0 } else { v.im },
    )
}

/// Builds the apparatus around `system_h` (dimension = number of outcomes).
pub fn measurement_apparatus(
    system_h: &SparseMatrix,
    basis: Vec<Vec<C64>>,
    d_env: usize,
    omega_int: f64,
    hold: f64,
    baseline_floor: f64,
) -> Result<ApparatusModel> {
    let s = system_h.dim();
    if s < 2 {
        return Err(Error::InvalidParameter("the system needs at least 2 levels".into()));
    }
    check_basis(&basis, s)?;
    if !(omega_int > 0.0 && omega_int.is_finite()) {
        return Err(Error::InvalidParameter(format!("omega_int must be > 0, got {omega_int}")));
    }
    if !(hold >= 0.0 && hold.is_finite()) {
        return Err(Error::InvalidParameter(format!("hold must be >= 0, got {hold}")));
    }
    if d_env > 20 {
        return Err(Error::InvalidParameter(format!("d_env = {d_env} is too large")));
    }
    let mut app = ApparatusModel {
        system_dim: s,
        d_env,
        basis,
        omega_int,
        hold,
        model: HamiltonianModel::constant(SparseMatrix::zeros(1))?,
    };
    let tau = app.tau();
    let env_states = 1usize << d_env;
    let dim = app.dim();

    let mut background = Vec::new();
    for (a, b, v) in system_h.iter() {
        for p in 0..s {
            for e in 0..env_states {
                background.push((app.index(a, p, e), app.index(b, p, e), v));
            }
        }
    }
    let with_background = |mut t: Vec<(usize, usize, C64)>| {
        t.extend(background.iter().copied());
        SparseMatrix::from_triplets(dim, t)
    };

    // pointer pulse: Σ_n |φ_n⟩⟨φ_n| ⊗ G_n, only at env = 0
    let mut pulse = Vec::new();
    for (n, phi) in app.basis.iter().enumerate() {
        let g = shift_generator(s, n, tau);
        for a in 0..s {
            for b in 0..s {
                let proj = phi[a] * phi[b].conj();
                if proj.norm() < 1e-15 {
                    continue;
                }
                for p in 0..s {
                    for q in 0..s {
                        let v = clean(proj * g[(p, q)]);
                        if v != C64::default() {
                            pulse.push((app.index(a, p, 0), app.index(b, q, 0), v));
                        }
                    }
                }
            }
        }
    }
    let mut slices = vec![(0.0, with_background(pulse)?)];

    // cascade: (π/4τ) (-1)^p X on environment qubit k
    let w = PI / (4.0 * tau);
    for k in 1..=d_env {
        let bit = 1usize << (d_env - k);
        let mut t = Vec::new();
        for sys in 0..s {
            for p in 0..s {
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                for e in 0..env_states {
                    if e & bit == 0 {
                        let lo = app.index(sys, p, e);
                        let hi = app.index(sys, p, e | bit);
                        t.push((lo, hi, C64::new(w * sign, 0.0)));
                        t.push((hi, lo, C64::new(w * sign, 0.0)));
                    }
                }
            }
        }
        slices.push((k as f64 * tau, with_background(t)?));
    }
    slices.push(((1 + d_env) as f64 * tau, with_background(Vec::new())?));

    app.model = HamiltonianModel::piecewise(slices, baseline_floor)?;
    Ok(app)
}
