use beable_core::ensemble::TrajectorySetup;
use beable_core::models::{computational_basis, measurement_apparatus, Branch};
use beable_core::{evolve_with, C64, EngineConfig, SparseMatrix};

#[test]
fn abandoned_branches_stay_frozen() {
    let app = measurement_apparatus(&SparseMatrix::zeros(2), computational_basis(2), 2, 1.0, 1.0, 0.1).unwrap();
    let psi0 = app.initial_state(&app.system_state(std::f64::consts::PI / 4.0).unwrap()).unwrap();
    let setup = TrajectorySetup::new(&app.model, &psi0, 0.1).unwrap();
    let graph = setup.model.graph();
    let interior = |m: usize| -> Vec<usize> {
        graph
            .directed_edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                app.branch(e.from.0) == Branch::Outcome(m) && app.branch(e.to.0) == Branch::Outcome(m)
            })
            .map(|(i, _)| i)
            .collect()
    };
    let cfg = EngineConfig {
        time_dependent_rule: true,
        ..EngineConfig::new(1e-3).unwrap()
    };
    let mut audited = 0;
    for i in 0..20 {
        let mut state = setup.start(9, i);
        let mut history: Vec<(Branch, Vec<C64>)> = Vec::new();
        let ok = evolve_with(&mut state, &setup.model, app.end_time(), &cfg, |ev, _, s| {
            history.push((app.branch(ev.to.0), s.potentials.values().to_vec()));
        });
        if ok.is_err() {
            continue;
        }
        let last = state.potentials.values();
        for m in 0..2 {
            let Some(k) = history.iter().rposition(|h| h.0 == Branch::Outcome(m)) else {
                continue;
            };
            if k + 1 == history.len() {
                continue;
            }
            // potentials just after the final exit from branch m
            let frozen = &history[k + 1].1;
            for e in interior(m) {
                assert_eq!(frozen[e], last[e], "edge {e} in branch {m} moved after the exit");
            }
            audited += 1;
        }
    }
    assert!(audited > 0, "no trajectory left a branch");
}
