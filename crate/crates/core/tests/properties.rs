use beable_core::models::{random_hermitian, random_state};
use beable_core::{
    build_graph, evolve_with, init_potentials, trajectory_rng, EdgeId, EngineConfig, HamiltonianModel, JumpModel,
    NodeId, SparseMatrix, TrajectoryState, WaveFunction, C64,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model_and_state(seed: u64, dim: usize) -> (HamiltonianModel, WaveFunction) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (random_hermitian(dim, &mut rng).unwrap(), random_state(dim, 0.1, &mut rng).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn initial_potentials_are_h_times_ratio(seed in any::<u64>(), dim in 2usize..7) {
        let (h, psi) = model_and_state(seed, dim);
        let graph = build_graph(&h).unwrap();
        let table = init_potentials(&graph, &h, &psi.amplitudes, 1e-6).unwrap();
        let m = h.at(0.0);
        for (i, e) in graph.directed_edges().iter().enumerate() {
            let want = m.get(e.from.0, e.to.0) * psi.amplitudes[e.to.0] / psi.amplitudes[e.from.0];
            prop_assert!((table.values()[i] - want).norm() <= 1e-12 * want.norm().max(1.0));
            prop_assert_eq!(table.last_jumps()[i], 0.0);
        }
    }

    #[test]
    fn relabelling_nodes_permutes_potentials(seed in any::<u64>(), dim in 2usize..6, shift in 1usize..5) {
        let (h, psi) = model_and_state(seed, dim);
        let perm: Vec<usize> = (0..dim).map(|k| (k + shift) % dim).collect();
        let m = h.at(0.0);
        let permuted = SparseMatrix::from_triplets(dim, m.iter().map(|(a, b, v)| (perm[a], perm[b], v))).unwrap();
        let hp = HamiltonianModel::constant(permuted).unwrap();
        let mut amps = vec![C64::default(); dim];
        for (k, a) in psi.amplitudes.iter().enumerate() {
            amps[perm[k]] = *a;
        }
        let g = build_graph(&h).unwrap();
        let gp = build_graph(&hp).unwrap();
        let t = init_potentials(&g, &h, &psi.amplitudes, 1e-6).unwrap();
        let tp = init_potentials(&gp, &hp, &amps, 1e-6).unwrap();
        for e in g.directed_edges() {
            let a = t.get(&g, e.from.0, e.to.0).unwrap();
            let b = tp.get(&gp, perm[e.from.0], perm[e.to.0]).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn pair_products_survive_any_trajectory(seed in any::<u64>(), dim in 2usize..6) {
        let (h, psi) = model_and_state(seed, dim);
        let model = JumpModel::new(&h).unwrap();
        let graph = model.graph();
        let table = init_potentials(graph, &h, &psi.amplitudes, 1e-6).unwrap();
        let before: Vec<C64> = (0..graph.directed_count())
            .map(|i| table.value(EdgeId(i)) * table.value(graph.reverse(EdgeId(i))))
            .collect();
        let mut state = TrajectoryState::new(NodeId(0), table, trajectory_rng(seed, 1));
        let cfg = EngineConfig::new(1e-3).unwrap();
        evolve_with(&mut state, &model, 0.5, &cfg, |_, _, _| {}).unwrap();
        for (i, p0) in before.iter().enumerate() {
            if graph.edge(EdgeId(i)).is_loop() {
                continue;
            }
            let p = state.potentials.value(EdgeId(i)) * state.potentials.value(graph.reverse(EdgeId(i)));
            prop_assert!((p - p0).norm() <= 1e-10 * p0.norm().max(1e-300));
        }
    }

    #[test]
    fn rates_are_never_negative_with_clamping(seed in any::<u64>(), dim in 2usize..6, hbar2 in 1e-3f64..10.0) {
        let (h, psi) = model_and_state(seed, dim);
        let graph = build_graph(&h).unwrap();
        let table = init_potentials(&graph, &h, &psi.amplitudes, 1e-6).unwrap();
        let cfg = EngineConfig::new(hbar2).unwrap();
        for a in table.values() {
            prop_assert!(cfg.effective_rate(*a) >= 0.0);
        }
    }
}
