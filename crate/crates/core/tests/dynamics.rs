use beable_core::ensemble::TrajectorySetup;
use beable_core::models::{ring, two_level};
use beable_core::oracle::potentials_from_psi;
use beable_core::{
    apply_jump, evolve_with, init_potentials, trajectory_rng, EngineConfig, Error, JumpEvent, JumpModel, NodeId,
    SchrodingerOracle, TrajectoryState, WaveFunction, C64,
};

fn start(model: &JumpModel, h: &beable_core::HamiltonianModel, psi: &WaveFunction, node: usize, seed: u64) -> TrajectoryState {
    let table = init_potentials(model.graph(), h, &psi.amplitudes, 1e-6).unwrap();
    TrajectoryState::new(NodeId(node), table, trajectory_rng(seed, 0))
}

#[test]
fn event_count_matches_stationary_rate() {
    // eigenstate: A = g on both edges, each node leaves at g / ħ₂
    let h = two_level(1.0).unwrap();
    let psi = WaveFunction::normalized(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
    let model = JumpModel::new(&h).unwrap();
    let cfg = EngineConfig::new(1e-3).unwrap();
    let mut state = start(&model, &h, &psi, 0, 1);
    let n = evolve_with(&mut state, &model, 10.0, &cfg, |_, _, _| {}).unwrap() as f64;
    let expected = 10.0 / 1e-3;
    assert!((n - expected).abs() < 0.2 * expected, "{n}");
}

#[test]
fn time_averaged_occupancy_tracks_oracle() {
    let h = two_level(1.0).unwrap();
    let psi = WaveFunction::normalized(vec![C64::new(0.8, 0.0), C64::new(0.6, 0.0)]).unwrap();
    let oracle = SchrodingerOracle::new(&h);
    let t_end = 10.0;
    let grid: Vec<f64> = (0..1000).map(|k| t_end * (k as f64 + 0.5) / 1000.0).collect();
    let want: f64 = grid
        .iter()
        .map(|&t| oracle.evolve(&psi, t).unwrap().probabilities()[0])
        .sum::<f64>()
        / grid.len() as f64;

    let setup = TrajectorySetup::new(&h, &psi, 1e-6).unwrap();
    let model = &setup.model;
    let cfg = EngineConfig::new(1e-4).unwrap();
    let mut at_zero = 0.0;
    let runs = 40;
    for i in 0..runs {
        let mut state = setup.start(3, i);
        let mut last = (0.0, state.current);
        let mut time_at_zero = 0.0;
        evolve_with(&mut state, model, t_end, &cfg, |ev, _, _| {
            if last.1 == NodeId(0) {
                time_at_zero += ev.at - last.0;
            }
            last = (ev.at, ev.to);
        })
        .unwrap();
        if last.1 == NodeId(0) {
            time_at_zero += t_end - last.0;
        }
        at_zero += time_at_zero / t_end;
    }
    let got = at_zero / runs as f64;
    assert!((got - want).abs() < 0.05 * want, "{got} vs {want}");
}

#[test]
fn history_changes_the_next_update() {
    // same node and time, different t̄ record
    let h = ring(3, 1.0).unwrap();
    let psi = WaveFunction::normalized(vec![
        C64::new(0.7, 0.1),
        C64::new(0.4, -0.3),
        C64::new(0.3, 0.4),
    ])
    .unwrap();
    let model = JumpModel::new(&h).unwrap();
    let cfg = EngineConfig::new(1e-3).unwrap();
    let ev = |from: usize, to: usize, at: f64| JumpEvent {
        from: NodeId(from),
        to: NodeId(to),
        at,
        waiting_time: 0.1,
        rate_total: 1.0,
    };

    let mut a = start(&model, &h, &psi, 0, 0);
    apply_jump(&mut a, &ev(0, 1, 0.1), &model, &cfg).unwrap();
    apply_jump(&mut a, &ev(1, 0, 0.3), &model, &cfg).unwrap();
    let mut b = start(&model, &h, &psi, 0, 0);
    apply_jump(&mut b, &ev(0, 2, 0.2), &model, &cfg).unwrap();
    apply_jump(&mut b, &ev(2, 0, 0.3), &model, &cfg).unwrap();
    assert_eq!((a.current, a.time), (b.current, b.time));

    apply_jump(&mut a, &ev(0, 1, 0.5), &model, &cfg).unwrap();
    apply_jump(&mut b, &ev(0, 1, 0.5), &model, &cfg).unwrap();
    let e01 = model.graph().find(NodeId(0), NodeId(1)).unwrap();
    assert!((a.potentials.value(e01) - b.potentials.value(e01)).norm() > 1e-6);
}

#[test]
fn potential_error_shrinks_with_hbar2() {
    let h = ring(3, 1.0).unwrap();
    let psi = WaveFunction::normalized(vec![
        C64::new(0.7, 0.0),
        C64::new(0.5, 0.2),
        C64::new(0.3, -0.4),
    ])
    .unwrap();
    let oracle = SchrodingerOracle::new(&h);
    let model = JumpModel::new(&h).unwrap();
    let graph = model.graph();
    let grid: Vec<f64> = (1..=40).map(|k| 0.02 * k as f64).collect();
    let exact: Vec<_> = grid
        .iter()
        .map(|&t| potentials_from_psi(graph, &h, &oracle.evolve(&psi, t).unwrap(), f64::MIN_POSITIVE).unwrap())
        .collect();
    let mut errors = Vec::new();
    for hbar2 in [1e-2, 1e-3, 1e-4, 1e-5] {
        let mut state = start(&model, &h, &psi, 0, 7);
        let cfg = EngineConfig::new(hbar2).unwrap();
        let mut worst = 0.0f64;
        for (&t, want) in grid.iter().zip(&exact) {
            evolve_with(&mut state, &model, t, &cfg, |_, _, _| {}).unwrap();
            for (x, y) in state.potentials.values().iter().zip(want.values()) {
                worst = worst.max((x - y).norm() / y.norm());
            }
        }
        errors.push(worst);
    }
    assert!(errors.windows(2).all(|w| w[1] < w[0]), "{errors:?}");
}

#[test]
fn backwards_horizon_is_rejected() {
    let h = two_level(1.0).unwrap();
    let psi = WaveFunction::basis(2, 0);
    let model = JumpModel::new(&h).unwrap();
    let mut state = start(&model, &h, &psi, 0, 0);
    state.time = 2.0;
    let cfg = EngineConfig::new(1e-2).unwrap();
    assert!(matches!(
        evolve_with(&mut state, &model, 1.0, &cfg, |_, _, _| {}),
        Err(Error::InvalidParameter(_))
    ));
}
