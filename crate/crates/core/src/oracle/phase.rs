//! Accumulated phases `S = ∫ A dt` by adaptive Gauss–Kronrod quadrature, and
//! the closed-form potential evolution built from them.

use super::schrodinger::SchrodingerOracle;
use super::schrodinger::WaveFunction;
use crate::error::{Error, Result};
use crate::graph::{potentials_for, NodeId, PotentialTable, StateGraph};
use crate::hamiltonian::C64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// 7-point Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

fn gk15<F>(f: &F, a: f64, b: f64, dim: usize) -> Result<(Vec<C64>, f64)>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = vec![C64::default(); dim];
    let mut gauss = vec![C64::default(); dim];
    for (i, &x) in XGK.iter().enumerate() {
        let points: &[f64] = if x == 0.0 { &[0.0] } else { &[-x, x] };
        for &s in points {
            let fx = f(center + half * s)?;
            for k in 0..dim {
                kronrod[k] += fx[k] * WGK[i];
                if i % 2 == 1 {
                    gauss[k] += fx[k] * WG[i / 2];
                }
            }
        }
    }
    let err = kronrod
        .iter()
        .zip(&gauss)
        .map(|(k, g)| ((k - g) * half).norm())
        .fold(0.0, f64::max);
    Ok((kronrod.into_iter().map(|v| v * half).collect(), err))
}

fn adapt<F>(f: &F, a: f64, b: f64, dim: usize, tol: f64, depth: u32) -> Result<Vec<C64>>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    let (value, err) = gk15(f, a, b, dim)?;
    let scale = value.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if err <= tol.max(1e-15 * scale) {
        return Ok(value);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Integration {
            time: a,
            reason: format!("quadrature did not converge on [{a}, {b}] (error {err:e})"),
        });
    }
    let mid = 0.5 * (a + b);
    let left = adapt(f, a, mid, dim, 0.5 * tol, depth + 1)?;
    let right = adapt(f, mid, b, dim, 0.5 * tol, depth + 1)?;
    Ok(left.into_iter().zip(right).map(|(l, r)| l + r).collect())
}

/// `∫_{t0}^{t1} f` for a vector-valued integrand, absolute tolerance `tol`.
pub fn integrate_path<F>(f: F, t0: f64, t1: f64, dim: usize, tol: f64) -> Result<Vec<C64>>
where
    F: Fn(f64) -> Result<Vec<C64>>,
{
    if t1 == t0 {
        return Ok(vec![C64::default(); dim]);
    }
    if t1 < t0 {
        return Ok(integrate_path(f, t1, t0, dim, tol)?.into_iter().map(|v| -v).collect());
    }
    adapt(&f, t0, t1, dim, tol, 0)
}

/// `S = ∫_{t0}^{t1} A(t') dt'` for one edge's potential path.
pub fn accumulated_phase<F>(path: F, t0: f64, t1: f64, tol: f64) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    Ok(integrate_path(|t| Ok(vec![path(t)]), t0, t1, 1, tol)?[0])
}

/// Per-node accumulated phases `Σ_p S_np` over `[t0, t1]` along the exact
/// Schrödinger path (time-independent Hamiltonian).
pub fn node_phase_sums(
    graph: &StateGraph,
    oracle: &SchrodingerOracle,
    psi0: &WaveFunction,
    t1: f64,
    tol: f64,
) -> Result<Vec<C64>> {
    let h = oracle.model();
    integrate_path(
        |t| {
            let psi = oracle.evolve(psi0, t)?;
            let table = potentials_for(graph, h.at(t), &psi.amplitudes, f64::MIN_POSITIVE)?;
            Ok((0..graph.node_count())
                .map(|n| table.values()[graph.out_edges(NodeId(n))].iter().sum())
                .collect())
        },
        psi0.time,
        t1,
        graph.node_count(),
        tol,
    )
}

/// `A_nm(t) = A_nm(0) exp(-i Σ_p S_mp / ħ) / exp(-i Σ_p S_np / ħ)` (ħ = 1).
pub fn closed_form_potentials(
    graph: &StateGraph,
    a0: &PotentialTable,
    node_sums: &[C64],
) -> Result<PotentialTable> {
    if node_sums.len() != graph.node_count() {
        return Err(Error::Dimension {
            expected: graph.node_count(),
            got: node_sums.len(),
        });
    }
    let values = graph
        .directed_edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let ds = node_sums[e.to.0] - node_sums[e.from.0];
            a0.values()[i] * C64::new(ds.im, -ds.re).exp()
        })
        .collect();
    PotentialTable::new(values, a0.last_jumps().to_vec())
}
