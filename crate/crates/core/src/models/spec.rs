//! Declarative model descriptions, as read from experiment config files.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::apparatus::{computational_basis, measurement_apparatus, ApparatusModel};
use super::basic::{complete_graph, random_hermitian, random_state, ring, two_level, uniform_state};
use super::circuit::{cat_state_circuit_with, CircuitLayout, QubitRegister};
use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SparseMatrix, C64};
use crate::oracle::WaveFunction;

/// Bumped whenever a field of [`ModelSpec`] or [`StateSpec`] changes meaning.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

fn one() -> f64 {
    1.0
}
fn default_floor() -> f64 {
    1e-6
}
fn default_min_magnitude() -> f64 {
    0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "topology", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    TwoLevel {
        #[serde(default = "one")]
        g: f64,
    },
    Ring {
        n: usize,
        #[serde(default = "one")]
        g: f64,
    },
    Complete {
        n: usize,
        #[serde(default = "one")]
        g: f64,
    },
    RandomHermitian {
        dim: usize,
        seed: u64,
    },
    /// Row-major real and imaginary parts of a constant Hamiltonian.
    Dense {
        re: Vec<Vec<f64>>,
        #[serde(default)]
        im: Option<Vec<Vec<f64>>>,
    },
    CatState {
        n_qubits: usize,
        #[serde(default = "one")]
        tau_gate: f64,
        #[serde(default = "default_floor")]
        baseline_floor: f64,
        #[serde(default)]
        layout: CircuitLayout,
    },
    /// One measured qubit; the measured basis is the computational basis
    /// rotated by `basis_angle` about Y.
    Apparatus {
        d_env: usize,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        basis_angle: f64,
        #[serde(default = "one")]
        omega_int: f64,
        #[serde(default = "one")]
        hold: f64,
        #[serde(default)]
        system_coupling: f64,
        #[serde(default = "default_floor")]
        baseline_floor: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Basis {
        index: usize,
    },
    Uniform,
    Random {
        seed: u64,
        #[serde(default = "default_min_magnitude")]
        min_magnitude: f64,
    },
    /// Normalized on load.
    Amplitudes {
        re: Vec<f64>,
        #[serde(default)]
        im: Option<Vec<f64>>,
    },
}

impl StateSpec {
    pub fn build(&self, dim: usize) -> Result<WaveFunction> {
        let psi = match self {
            StateSpec::Basis { index } => {
                if *index >= dim {
                    return Err(Error::InvalidParameter(format!("basis index {index} >= dimension {dim}")));
                }
                WaveFunction::basis(dim, *index)
            }
            StateSpec::Uniform => uniform_state(dim)?,
            StateSpec::Random { seed, min_magnitude } => {
                random_state(dim, *min_magnitude, &mut ChaCha8Rng::seed_from_u64(*seed))?
            }
            StateSpec::Amplitudes { re, im } => {
                let im = im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
                if re.len() != im.len() {
                    return Err(Error::Dimension {
                        expected: re.len(),
                        got: im.len(),
                    });
                }
                WaveFunction::normalized(re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect())?
            }
        };
        if psi.dim() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: psi.dim(),
            });
        }
        Ok(psi)
    }
}

/// A built model with its natural initial state.
#[derive(Clone, Debug)]
pub struct BuiltModel {
    pub hamiltonian: HamiltonianModel,
    pub psi0: WaveFunction,
    /// End of the schedule for driven models.
    pub horizon: Option<f64>,
    pub register: Option<QubitRegister>,
    pub apparatus: Option<ApparatusModel>,
}

impl BuiltModel {
    fn constant(hamiltonian: HamiltonianModel, psi0: WaveFunction) -> Self {
        Self {
            hamiltonian,
            psi0,
            horizon: None,
            register: None,
            apparatus: None,
        }
    }
}

fn dense(re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> Result<SparseMatrix> {
    let dim = re.len();
    let mut triplets = Vec::new();
    for (r, row) in re.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Dimension { expected: dim, got: row.len() });
        }
        for (c, &x) in row.iter().enumerate() {
            let y = match im {
                Some(m) => *m
                    .get(r)
                    .and_then(|row| row.get(c))
                    .ok_or(Error::Dimension { expected: dim, got: m.len() })?,
                None => 0.0,
            };
            triplets.push((r, c, C64::new(x, y)));
        }
    }
    SparseMatrix::from_triplets(dim, triplets)
}

impl ModelSpec {
    pub fn build(&self) -> Result<BuiltModel> {
        match self {
            ModelSpec::TwoLevel { g } => Ok(BuiltModel::constant(two_level(*g)?, uniform_state(2)?)),
            ModelSpec::Ring { n, g } => Ok(BuiltModel::constant(ring(*n, *g)?, uniform_state(*n)?)),
            ModelSpec::Complete { n, g } => {
                Ok(BuiltModel::constant(complete_graph(*n, *g)?, uniform_state(*n)?))
            }
            ModelSpec::RandomHermitian { dim, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let h = random_hermitian(*dim, &mut rng)?;
                let psi = random_state(*dim, default_min_magnitude(), &mut rng)?;
                Ok(BuiltModel::constant(h, psi))
            }
            ModelSpec::Dense { re, im } => {
                let h = HamiltonianModel::constant(dense(re, im.as_ref())?)?;
                let dim = h.dim();
                Ok(BuiltModel::constant(h, uniform_state(dim)?))
            }
            ModelSpec::CatState {
                n_qubits,
                tau_gate,
                baseline_floor,
                layout,
            } => {
                let cat = cat_state_circuit_with(*n_qubits, *tau_gate, *baseline_floor, *layout)?;
                Ok(BuiltModel {
                    horizon: Some(cat.end_time()),
                    register: Some(cat.register),
                    hamiltonian: cat.model,
                    psi0: cat.psi0,
                    apparatus: None,
                })
            }
            ModelSpec::Apparatus {
                d_env,
                theta,
                basis_angle,
                omega_int,
                hold,
                system_coupling,
                baseline_floor,
            } => {
                let (s, c) = (basis_angle / 2.0).sin_cos();
                let basis = if *basis_angle == 0.0 {
                    computational_basis(2)
                } else {
                    vec![
                        vec![C64::new(c, 0.0), C64::new(s, 0.0)],
                        vec![C64::new(-s, 0.0), C64::new(c, 0.0)],
                    ]
                };
                let h_sys = if *system_coupling != 0.0 {
                    let g = C64::new(*system_coupling, 0.0);
                    SparseMatrix::from_triplets(2, [(0, 1, g), (1, 0, g)])?
                } else {
                    SparseMatrix::zeros(2)
                };
                let app = measurement_apparatus(&h_sys, basis, *d_env, *omega_int, *hold, *baseline_floor)?;
                let psi0 = app.initial_state(&app.system_state(*theta)?)?;
                Ok(BuiltModel {
                    horizon: Some(app.end_time()),
                    register: None,
                    hamiltonian: app.model.clone(),
                    psi0,
                    apparatus: Some(app),
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds() {
        let spec: ModelSpec = serde_json::from_str(r#"{"topology":"complete","n":4}"#).unwrap();
        let built = spec.build().unwrap();
        assert_eq!(built.hamiltonian.dim(), 4);
        let cat: ModelSpec = serde_json::from_str(r#"{"topology":"cat_state","n_qubits":3,"layout":"fan_out"}"#).unwrap();
        assert_eq!(cat.build().unwrap().horizon, Some(2.0));
    }

    #[test]
    fn unknown_fields_rejected() {
        let r: std::result::Result<ModelSpec, _> =
            serde_json::from_str(r#"{"topology":"ring","n":4,"gg":1.0}"#);
        assert!(r.is_err());
    }

    #[test]
    fn dense_and_states() {
        let spec = ModelSpec::Dense {
            re: vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            im: Some(vec![vec![0.0, -0.5], vec![0.5, 0.0]]),
        };
        let h = spec.build().unwrap().hamiltonian;
        assert_eq!(h.at(0.0).get(0, 1), C64::new(1.0, -0.5));
        let psi = StateSpec::Amplitudes { re: vec![3.0, 4.0], im: None }.build(2).unwrap();
        assert!((psi.amplitudes[1].re - 0.8).abs() < 1e-15);
        assert!(StateSpec::Basis { index: 5 }.build(2).is_err());
    }

    #[test]
    fn apparatus_state_has_born_weights() {
        let spec = ModelSpec::Apparatus {
            d_env: 2,
            theta: 0.4,
            basis_angle: 0.7,
            omega_int: 1.0,
            hold: 0.0,
            system_coupling: 0.0,
            baseline_floor: 1e-6,
        };
        let built = spec.build().unwrap();
        let app = built.apparatus.unwrap();
        let psi_sys = app.system_state(0.4).unwrap();
        let w = app.born_weights(&psi_sys);
        assert!((w[0] - 0.4f64.cos().powi(2)).abs() < 1e-12);
    }
}
