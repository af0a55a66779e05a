use super::ode::{integrate, OdeOptions, OdeSystem};
use super::schrodinger::WaveFunction;
use crate::error::{Error, Result};
use crate::graph::{potentials_for, EdgeId, PotentialTable, StateGraph};
use crate::hamiltonian::{HamiltonianModel, C64};

/// Integration stops once any |A| exceeds this: some amplitude is passing
/// through zero.
pub const POLE_GUARD: f64 = 1e12;

/// `A_nm = H_nm(t) psi'_m / psi'_n` at `psi.time`, with the same magnitude
/// floor as the engine's initialization. All `t̄` are zero.
pub fn potentials_from_psi(
    graph: &StateGraph,
    h: &HamiltonianModel,
    psi: &WaveFunction,
    epsilon_psi: f64,
) -> Result<PotentialTable> {
    potentials_for(graph, h.at(psi.time), &psi.amplitudes, epsilon_psi)
}

struct PotentialOde<'a> {
    graph: &'a StateGraph,
    hbar: f64,
    sums: Vec<C64>,
}

impl OdeSystem<C64> for PotentialOde<'_> {
    fn rhs(&mut self, _t: f64, a: &[C64], da: &mut [C64]) -> Result<()> {
        for n in 0..self.graph.node_count() {
            let range = self.graph.out_edges(crate::graph::NodeId(n));
            self.sums[n] = a[range].iter().sum();
        }
        // i ħ dA_nm/dt = A_nm (Σ_p A_mp - Σ_p A_np)
        for (i, e) in self.graph.directed_edges().iter().enumerate() {
            let rate = (self.sums[e.to.0] - self.sums[e.from.0]) / self.hbar;
            let v = a[i] * rate;
            da[i] = C64::new(v.im, -v.re);
        }
        Ok(())
    }

    fn accept(&mut self, t: f64, a: &[C64]) -> Result<()> {
        if let Some((i, v)) = a
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.norm() <= POLE_GUARD))
        {
            let e = self.graph.edge(EdgeId(i));
            return Err(Error::PoleBlowUp {
                from: e.from.0,
                to: e.to.0,
                magnitude: v.norm(),
                time: t,
            });
        }
        Ok(())
    }
}

fn ode_segment(
    graph: &StateGraph,
    a: &mut [C64],
    t0: f64,
    t1: f64,
    hbar: f64,
    opts: &OdeOptions,
) -> Result<()> {
    let mut sys = PotentialOde {
        graph,
        hbar,
        sums: vec![C64::default(); graph.node_count()],
    };
    integrate(&mut sys, t0, t1, a, opts).map(|_| ())
}

/// Integrates the potential ODE with a time-independent Hamiltonian (ħ = 1).
pub fn potential_ode_evolve(
    graph: &StateGraph,
    a0: &PotentialTable,
    t0: f64,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<PotentialTable> {
    check_table(graph, a0)?;
    let mut a = a0.values().to_vec();
    ode_segment(graph, &mut a, t0, t_end, 1.0, opts)?;
    PotentialTable::new(a, a0.last_jumps().to_vec())
}

/// As [`potential_ode_evolve`], for a piecewise-constant Hamiltonian: the
/// log-derivative term becomes a factor `H_nm(after) / H_nm(before)` at each
/// slice boundary.
pub fn potential_ode_evolve_driven(
    graph: &StateGraph,
    h: &HamiltonianModel,
    a0: &PotentialTable,
    t0: f64,
    t_end: f64,
    opts: &OdeOptions,
) -> Result<PotentialTable> {
    check_table(graph, a0)?;
    let mut a = a0.values().to_vec();
    let mut t = t0;
    for boundary in h.boundaries_between(t0, t_end) {
        ode_segment(graph, &mut a, t, boundary, 1.0, opts)?;
        let before = h.at(t);
        let after = h.at(boundary);
        for (i, e) in graph.directed_edges().iter().enumerate() {
            let old = before.get(e.from.0, e.to.0);
            if old.norm_sqr() == 0.0 {
                return Err(Error::ZeroCoupling {
                    from: e.from.0,
                    to: e.to.0,
                    time: t,
                });
            }
            a[i] *= after.get(e.from.0, e.to.0) / old;
        }
        t = boundary;
    }
    ode_segment(graph, &mut a, t, t_end, 1.0, opts)?;
    PotentialTable::new(a, a0.last_jumps().to_vec())
}

fn check_table(graph: &StateGraph, a: &PotentialTable) -> Result<()> {
    if a.len() != graph.directed_count() {
        return Err(Error::Dimension {
            expected: graph.directed_count(),
            got: a.len(),
        });
    }
    if a.values().iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite {
            what: "initial potential table".into(),
        });
    }
    Ok(())
}
