//! Qubit registers and gate-pulse schedules.
//!
//! Node `k` of an `n`-qubit register is the bitstring of `k` with qubit 1 as
//! the most significant bit: for `n = 3`, node 4 = `|100⟩` has qubit 1 set.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SparseMatrix, C64};
use crate::oracle::WaveFunction;

/// Gate generators are checked against their unitaries to this operator-norm
/// tolerance.
pub const GATE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitRegister {
    pub n_qubits: usize,
}

impl QubitRegister {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 24 {
            return Err(Error::InvalidParameter(format!(
                "n_qubits must be in 1..=24, got {n_qubits}"
            )));
        }
        Ok(Self { n_qubits })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Bit position (from the least significant end) of 1-based `qubit`.
    fn shift(&self, qubit: usize) -> usize {
        self.n_qubits - qubit
    }

    /// State of 1-based `qubit` in `node`.
    pub fn bit(&self, node: usize, qubit: usize) -> bool {
        (node >> self.shift(qubit)) & 1 == 1
    }

    pub fn node_of(&self, bits: &[bool]) -> Result<usize> {
        if bits.len() != self.n_qubits {
            return Err(Error::Dimension {
                expected: self.n_qubits,
                got: bits.len(),
            });
        }
        Ok(bits.iter().fold(0, |acc, &b| (acc << 1) | b as usize))
    }

    pub fn bitstring(&self, node: usize) -> String {
        (1..=self.n_qubits)
            .map(|q| if self.bit(node, q) { '1' } else { '0' })
            .collect()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q == 0 || q > self.n_qubits {
            return Err(Error::InvalidParameter(format!(
                "qubit {q} outside 1..={}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Embeds an operator on `qubits` (first listed = most significant local
    /// bit) into the full register.
    pub fn embed(&self, qubits: &[usize], local: &DMatrix<C64>) -> Result<SparseMatrix> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let k = qubits.len();
        if local.nrows() != 1 << k || local.ncols() != 1 << k {
            return Err(Error::Dimension {
                expected: 1 << k,
                got: local.nrows(),
            });
        }
        let shifts: Vec<usize> = qubits.iter().map(|&q| self.shift(q)).collect();
        let mask: usize = shifts.iter().map(|s| 1 << s).sum();
        let extract = |j: usize| {
            shifts
                .iter()
                .fold(0usize, |acc, &s| (acc << 1) | ((j >> s) & 1))
        };
        let deposit = |base: usize, local_bits: usize| {
            shifts.iter().enumerate().fold(base & !mask, |acc, (i, &s)| {
                acc | (((local_bits >> (k - 1 - i)) & 1) << s)
            })
        };
        let mut triplets = Vec::new();
        for j in 0..self.dim() {
            let c = extract(j);
            for r in 0..(1 << k) {
                let v = local[(r, c)];
                if v != C64::default() {
                    triplets.push((deposit(j, r), j, v));
                }
            }
        }
        SparseMatrix::from_triplets(self.dim(), triplets)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    /// `exp(-i angle Y / 2)` on `target`.
    RotY { target: usize, angle: f64 },
    /// Controlled-not.
    Cnot { control: usize, target: usize },
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::RotY { target, .. } => vec![target],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn unitary(&self) -> DMatrix<C64> {
        match *self {
            Gate::RotY { angle, .. } => {
                let (s, co) = (angle / 2.0).sin_cos();
                DMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
            }
            Gate::Cnot { .. } => {
                let mut u = DMatrix::zeros(4, 4);
                u[(0, 0)] = c(1.0, 0.0);
                u[(1, 1)] = c(1.0, 0.0);
                u[(2, 3)] = c(1.0, 0.0);
                u[(3, 2)] = c(1.0, 0.0);
                u
            }
        }
    }

    /// Hermitian `K` with `exp(-i K tau) = U`.
    pub fn generator(&self, tau: f64) -> DMatrix<C64> {
        match *self {
            Gate::RotY { angle, .. } => {
                let w = angle / (2.0 * tau);
                DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -w), c(0.0, w), c(0.0, 0.0)])
            }
            Gate::Cnot { .. } => {
                // |1><1| ⊗ (I - X), eigenvalues 0 and 2
                let w = PI / (2.0 * tau);
                let mut k = DMatrix::zeros(4, 4);
                k[(2, 2)] = c(w, 0.0);
                k[(3, 3)] = c(w, 0.0);
                k[(2, 3)] = c(-w, 0.0);
                k[(3, 2)] = c(-w, 0.0);
                k
            }
        }
    }
}

/// `exp(-i K t)` for Hermitian `K`.
pub fn propagator(k: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    let eig = k.clone().symmetric_eigen();
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::new(0.0, -e * t).exp()));
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}

/// Largest singular value.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    m.clone().singular_values().max()
}

/// Gates applied together for `duration`; they must commute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub gates: Vec<Gate>,
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSchedule {
    pub register: QubitRegister,
    pub layers: Vec<Layer>,
}

impl GateSchedule {
    pub fn new(register: QubitRegister, layers: Vec<Layer>) -> Result<Self> {
        let s = Self { register, layers };
        s.validate()?;
        Ok(s)
    }

    pub fn duration(&self) -> f64 {
        self.layers.iter().map(|l| l.duration).sum()
    }

    /// Start time of each layer.
    pub fn starts(&self) -> Vec<f64> {
        self.layers
            .iter()
            .scan(0.0, |t, l| {
                let s = *t;
                *t += l.duration;
                Some(s)
            })
            .collect()
    }

    /// Generator of one layer on the full register.
    pub fn layer_generator(&self, layer: &Layer) -> Result<SparseMatrix> {
        let mut total = SparseMatrix::zeros(self.register.dim());
        for g in &layer.gates {
            let k = self.register.embed(&g.qubits(), &g.generator(layer.duration))?;
            total = total.add(&k)?;
        }
        Ok(total)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, layer) in self.layers.iter().enumerate() {
            if !(layer.duration > 0.0 && layer.duration.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "layer {i} has non-positive duration {}",
                    layer.duration
                )));
            }
            for g in &layer.gates {
                for q in g.qubits() {
                    self.register.check_qubit(q)?;
                }
                if let Gate::Cnot { control, target } = *g {
                    if control == target {
                        return Err(Error::InvalidParameter(format!(
                            "cnot control and target coincide (qubit {control})"
                        )));
                    }
                }
                let defect = operator_norm(&(propagator(&g.generator(layer.duration), layer.duration) - g.unitary()));
                if !(defect <= GATE_TOL) {
                    return Err(Error::InvalidParameter(format!(
                        "generator of {g:?} misses its unitary by {defect:e}"
                    )));
                }
            }
            let ks: Vec<DMatrix<C64>> = layer
                .gates
                .iter()
                .map(|g| Ok(self.register.embed(&g.qubits(), &g.generator(layer.duration))?.to_dense()))
                .collect::<Result<_>>()?;
            for a in 0..ks.len() {
                for b in a + 1..ks.len() {
                    let comm = &ks[a] * &ks[b] - &ks[b] * &ks[a];
                    if comm.iter().any(|v| v.norm() > 1e-12) {
                        return Err(Error::InvalidParameter(format!(
                            "gates {:?} and {:?} in layer {i} do not commute",
                            layer.gates[a], layer.gates[b]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// One slice per layer plus a trailing slice carrying only the floor.
    pub fn hamiltonian(&self, baseline_floor: f64) -> Result<HamiltonianModel> {
        let mut slices = Vec::with_capacity(self.layers.len() + 1);
        for (layer, start) in self.layers.iter().zip(self.starts()) {
            slices.push((start, self.layer_generator(layer)?));
        }
        slices.push((self.duration(), SparseMatrix::zeros(self.register.dim())));
        HamiltonianModel::piecewise(slices, baseline_floor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CircuitLayout {
    /// One gate per slice.
    #[default]
    Serial,
    /// All controlled-nots from qubit 1 share a slice.
    FanOut,
}

#[derive(Clone, Debug)]
pub struct CatStateCircuit {
    pub register: QubitRegister,
    pub schedule: GateSchedule,
    pub model: HamiltonianModel,
    pub psi0: WaveFunction,
}

impl CatStateCircuit {
    /// Time at which the last gate completes.
    pub fn end_time(&self) -> f64 {
        self.schedule.duration()
    }

    /// `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn target_state(&self) -> WaveFunction {
        let mut amps = vec![C64::default(); self.register.dim()];
        amps[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[self.register.dim() - 1] = amps[0];
        WaveFunction { amplitudes: amps, time: 0.0 }
    }
}

/// Rotation of qubit 1 into `(|0⟩+|1⟩)/√2`, then controlled-nots from qubit 1
/// onto every other qubit, each gate lasting `tau_gate`.
pub fn cat_state_circuit(n_qubits: usize, tau_gate: f64, baseline_floor: f64) -> Result<CatStateCircuit> {
    cat_state_circuit_with(n_qubits, tau_gate, baseline_floor, CircuitLayout::Serial)
}

pub fn cat_state_circuit_with(
    n_qubits: usize,
    tau_gate: f64,
    baseline_floor: f64,
    layout: CircuitLayout,
) -> Result<CatStateCircuit> {
    if n_qubits < 2 {
        return Err(Error::InvalidParameter(format!("a cat state needs >= 2 qubits, got {n_qubits}")));
    }
    if !(baseline_floor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "baseline floor must be > 0, got {baseline_floor}"
        )));
    }
    let register = QubitRegister::new(n_qubits)?;
    let mut layers = vec![Layer {
        gates: vec![Gate::RotY {
            target: 1,
            angle: PI / 2.0,
        }],
        duration: tau_gate,
    }];
    let cnots = (2..=n_qubits).map(|t| Gate::Cnot { control: 1, target: t });
    match layout {
        CircuitLayout::Serial => layers.extend(cnots.map(|g| Layer {
            gates: vec![g],
            duration: tau_gate,
        })),
        CircuitLayout::FanOut => layers.push(Layer {
            gates: cnots.collect(),
            duration: tau_gate,
        }),
    }
    let schedule = GateSchedule::new(register, layers)?;
    let model = schedule.hamiltonian(baseline_floor)?;
    Ok(CatStateCircuit {
        register,
        psi0: WaveFunction::basis(register.dim(), 0),
        schedule,
        model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::schrodinger_evolve;

    #[test]
    fn msb_is_qubit_one() {
        let r = QubitRegister::new(3).unwrap();
        assert!(r.bit(4, 1));
        assert!(!r.bit(4, 3));
        assert_eq!(r.bitstring(6), "110");
        assert_eq!(r.node_of(&[true, false, true]).unwrap(), 5);
    }

    #[test]
    fn generators_reproduce_gates() {
        for tau in [0.5, 1.0, 3.0] {
            for g in [
                Gate::RotY { target: 1, angle: PI / 2.0 },
                Gate::RotY { target: 1, angle: 1.234 },
                Gate::Cnot { control: 1, target: 2 },
            ] {
                let err = operator_norm(&(propagator(&g.generator(tau), tau) - g.unitary()));
                assert!(err < GATE_TOL, "{g:?}: {err:e}");
            }
        }
    }

    #[test]
    fn embedded_cnot_acts_on_named_qubits() {
        let r = QubitRegister::new(3).unwrap();
        let g = Gate::Cnot { control: 3, target: 1 };
        let u = r.embed(&g.qubits(), &g.unitary()).unwrap();
        // |001> -> |101>
        assert_eq!(u.get(0b101, 0b001), C64::new(1.0, 0.0));
        assert_eq!(u.get(0b010, 0b010), C64::new(1.0, 0.0));
    }

    #[test]
    fn two_qubit_cat_state() {
        let cat = cat_state_circuit(2, 1.0, 1e-6).unwrap();
        assert!((cat.end_time() - 2.0).abs() < 1e-15);
        let after_rot = schrodinger_evolve(&cat.model, &cat.psi0, 1.0).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = WaveFunction {
            amplitudes: vec![C64::new(s, 0.0), C64::default(), C64::new(s, 0.0), C64::default()],
            time: 1.0,
        };
        assert!(after_rot.fidelity(&want) > 1.0 - 1e-9);
        let fin = schrodinger_evolve(&cat.model, &cat.psi0, cat.end_time()).unwrap();
        assert!(fin.fidelity(&cat.target_state()) > 1.0 - 1e-9);
    }

    #[test]
    fn fan_out_matches_serial() {
        for layout in [CircuitLayout::Serial, CircuitLayout::FanOut] {
            let cat = cat_state_circuit_with(4, 1.0, 1e-6, layout).unwrap();
            let fin = schrodinger_evolve(&cat.model, &cat.psi0, cat.end_time()).unwrap();
            assert!(fin.fidelity(&cat.target_state()) > 1.0 - 1e-9, "{layout:?}");
        }
    }

    #[test]
    fn floor_reaches_every_slice() {
        let cat = cat_state_circuit(3, 1.0, 1e-4).unwrap();
        let pattern = cat.model.pattern();
        for s in cat.model.slices() {
            for &(r, c) in &pattern {
                assert!(s.matrix.get(r, c).norm() >= 1e-4 * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(cat_state_circuit(1, 1.0, 1e-6).is_err());
        assert!(cat_state_circuit(3, 1.0, 0.0).is_err());
        let r = QubitRegister::new(2).unwrap();
        let bad = GateSchedule::new(
            r,
            vec![Layer {
                gates: vec![Gate::Cnot { control: 1, target: 2 }, Gate::Cnot { control: 2, target: 1 }],
                duration: 1.0,
            }],
        );
        assert!(bad.is_err());
    }
}
