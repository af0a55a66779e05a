use super::ode::{integrate, OdeOptions, OdeSystem};
use super::schrodinger::{DensityVector, SchrodingerOracle, WaveFunction};
use crate::engine::EngineConfig;
use crate::error::{Error, Result};
use crate::graph::StateGraph;
use crate::hamiltonian::{HamiltonianModel, C64};

/// Densities more negative than this abort the integration.
pub const NEGATIVE_DENSITY_TOL: f64 = 1e-9;

/// Source of `psi(t)` for the rate law.
pub trait PsiPath {
    fn psi_at(&self, t: f64) -> Result<Vec<C64>>;
}

impl<F> PsiPath for F
where
    F: Fn(f64) -> Vec<C64>,
{
    fn psi_at(&self, t: f64) -> Result<Vec<C64>> {
        Ok(self(t))
    }
}

/// Exact Schrödinger path from a fixed initial state.
pub struct OraclePath<'a> {
    pub oracle: &'a SchrodingerOracle,
    pub psi0: WaveFunction,
}

impl PsiPath for OraclePath<'_> {
    fn psi_at(&self, t: f64) -> Result<Vec<C64>> {
        Ok(self.oracle.evolve(&self.psi0, t)?.amplitudes)
    }
}

struct MasterRhs<'a, P: ?Sized> {
    graph: &'a StateGraph,
    h: &'a HamiltonianModel,
    path: &'a P,
    config: &'a EngineConfig,
}

impl<P: PsiPath + ?Sized> OdeSystem<f64> for MasterRhs<'_, P> {
    fn rhs(&mut self, t: f64, rho: &[f64], drho: &mut [f64]) -> Result<()> {
        let psi = self.path.psi_at(t)?;
        let hm = self.h.at(t);
        drho.iter_mut().for_each(|d| *d = 0.0);
        for e in self.graph.directed_edges() {
            if e.is_loop() {
                continue;
            }
            let (n, m) = (e.from.0, e.to.0);
            let a = hm.get(n, m) * psi[m] / psi[n];
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(Error::NonFinite {
                    what: format!("potential {n}->{m} at t = {t} (psi_{n} = {})", psi[n]),
                });
            }
            let flow = self.config.effective_rate(a) * rho[n];
            drho[n] -= flow;
            drho[m] += flow;
        }
        Ok(())
    }

    fn accept(&mut self, t: f64, rho: &[f64]) -> Result<()> {
        if let Some((node, &value)) = rho
            .iter()
            .enumerate()
            .find(|(_, &r)| r < -NEGATIVE_DENSITY_TOL)
        {
            return Err(Error::NegativeDensity { node, value, time: t });
        }
        Ok(())
    }
}

/// Integrates `dρ_n/dt = Σ_m (T_mn ρ_m - T_nm ρ_n)` with rates built from
/// the potentials of `psi(t)` and the engine's rate law.
pub fn master_equation_evolve<P: PsiPath + ?Sized>(
    graph: &StateGraph,
    h: &HamiltonianModel,
    path: &P,
    rho0: &DensityVector,
    t0: f64,
    t_end: f64,
    config: &EngineConfig,
    opts: &OdeOptions,
) -> Result<DensityVector> {
    if rho0.rho.len() != graph.node_count() {
        return Err(Error::Dimension {
            expected: graph.node_count(),
            got: rho0.rho.len(),
        });
    }
    let mut rho = rho0.rho.clone();
    let mut t = t0;
    let mut stops = h.boundaries_between(t0, t_end);
    stops.push(t_end);
    for stop in stops {
        let mut sys = MasterRhs {
            graph,
            h,
            path,
            config,
        };
        integrate(&mut sys, t, stop, &mut rho, opts)?;
        t = stop;
    }
    Ok(DensityVector { rho })
}
