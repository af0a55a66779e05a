use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianModel, SparseMatrix, C64};
use crate::oracle::WaveFunction;

fn check_coupling(g: f64) -> Result<()> {
    if !(g > 0.0 && g.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling must be > 0, got {g}")));
    }
    Ok(())
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 nodes, got {n}")));
    }
    Ok(())
}

fn from_pairs(n: usize, g: f64, pairs: BTreeSet<(usize, usize)>) -> Result<HamiltonianModel> {
    let c = C64::new(g, 0.0);
    let triplets = pairs.into_iter().flat_map(|(a, b)| [(a, b, c), (b, a, c)]);
    HamiltonianModel::constant(SparseMatrix::from_triplets(n, triplets)?)
}

/// `[[0, g], [g, 0]]`.
pub fn two_level(g: f64) -> Result<HamiltonianModel> {
    check_coupling(g)?;
    from_pairs(2, g, [(0, 1)].into())
}

/// Cycle `0 - 1 - ... - (n-1) - 0` with hopping `g`.
pub fn ring(n: usize, g: f64) -> Result<HamiltonianModel> {
    check_size(n)?;
    check_coupling(g)?;
    let pairs = (0..n).map(|k| {
        let (a, b) = (k, (k + 1) % n);
        (a.min(b), a.max(b))
    });
    from_pairs(n, g, pairs.collect())
}

/// `K_n` with every off-diagonal entry equal to `g`.
pub fn complete_graph(n: usize, g: f64) -> Result<HamiltonianModel> {
    check_size(n)?;
    check_coupling(g)?;
    let pairs = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b)));
    from_pairs(n, g, pairs.collect())
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Dense Hermitian matrix with complex Gaussian entries scaled so the
/// typical coupling is O(1).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<HamiltonianModel> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let scale = 0.5 / (dim as f64).sqrt();
    let mut triplets = Vec::with_capacity(dim * dim);
    for r in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        triplets.push((r, r, C64::new(d * 2.0 * scale, 0.0)));
        for c in r + 1..dim {
            let v = gaussian_c64(rng) * scale;
            triplets.push((r, c, v));
            triplets.push((c, r, v.conj()));
        }
    }
    HamiltonianModel::constant(SparseMatrix::from_triplets(dim, triplets)?)
}

/// Normalized random state whose components all have magnitude at least
/// `min_magnitude / sqrt(dim)` before normalization.
pub fn random_state<R: Rng + ?Sized>(dim: usize, min_magnitude: f64, rng: &mut R) -> Result<WaveFunction> {
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let amps = (0..dim)
        .map(|_| {
            let mag = min_magnitude + rng.random::<f64>();
            let phase = rng.random::<f64>() * std::f64::consts::TAU;
            C64::from_polar(mag, phase)
        })
        .collect();
    WaveFunction::normalized(amps)
}

/// Equal-weight real superposition of all nodes.
pub fn uniform_state(dim: usize) -> Result<WaveFunction> {
    WaveFunction::normalized(vec![C64::new(1.0, 0.0); dim.max(1)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, NodeId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_level_matrix() {
        let h = two_level(1.0).unwrap();
        let m = h.at(0.0);
        assert_eq!(m.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(m.get(1, 0), C64::new(1.0, 0.0));
        assert_eq!(m.get(0, 0), C64::default());
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn ring_has_two_neighbors() {
        let g = build_graph(&ring(3, 1.0).unwrap()).unwrap();
        for n in 0..3 {
            assert_eq!(g.degree(NodeId(n)), 2);
        }
        assert_eq!(build_graph(&ring(2, 1.0).unwrap()).unwrap().edges().len(), 1);
    }

    #[test]
    fn complete_graph_edges() {
        let h = complete_graph(4, 1.0).unwrap();
        let g = build_graph(&h).unwrap();
        assert_eq!(g.edges().len(), 6);
        assert!(h.at(0.0).iter().all(|(_, _, v)| (v.norm() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn sizes_below_two_rejected() {
        assert!(complete_graph(1, 1.0).is_err());
        assert!(ring(1, 1.0).is_err());
        assert!(two_level(0.0).is_err());
    }

    #[test]
    fn random_models_are_hermitian_and_zero_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = random_hermitian(5, &mut rng).unwrap();
        assert_eq!(h.dim(), 5);
        let psi = random_state(5, 0.2, &mut rng).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert!(psi.amplitudes.iter().all(|c| c.norm() > 0.05));
    }
}
