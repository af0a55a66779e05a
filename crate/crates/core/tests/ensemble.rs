use beable_core::ensemble::{run_ensemble, EnsembleConfig};
use beable_core::models::two_level;
use beable_core::{EngineConfig, Error, WaveFunction, C64};

#[test]
fn stationary_two_level_occupancy_is_binomial() {
    let h = two_level(1.0).unwrap();
    let psi = WaveFunction::normalized(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
    let n = 4000u64;
    let cfg = EnsembleConfig::new(n, 12, vec![0.5, 1.0, 2.0], EngineConfig::new(1e-3).unwrap());
    let result = run_ensemble(&h, &psi, &cfg).unwrap();
    assert_eq!(result.completed, n);
    let sd = (n as f64 * 0.25).sqrt();
    for row in &result.occupancy {
        assert_eq!(row.iter().sum::<u64>(), n);
        assert!((row[0] as f64 - n as f64 / 2.0).abs() < 3.0 * sd, "{row:?}");
    }
}

#[test]
fn same_seed_same_result() {
    let h = two_level(1.0).unwrap();
    let psi = WaveFunction::normalized(vec![C64::new(0.8, 0.0), C64::new(0.0, 0.6)]).unwrap();
    let cfg = EnsembleConfig::new(200, 3, vec![0.3, 0.6], EngineConfig::new(1e-2).unwrap());
    let a = run_ensemble(&h, &psi, &cfg).unwrap();
    let b = run_ensemble(&h, &psi, &cfg).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.base_seed = 4;
    assert_ne!(run_ensemble(&h, &psi, &other).unwrap().occupancy, a.occupancy);
}

#[test]
fn widespread_failures_fail_the_ensemble() {
    // a tiny event budget truncates every trajectory
    let h = two_level(1.0).unwrap();
    let psi = WaveFunction::normalized(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]).unwrap();
    let mut engine = EngineConfig::new(1e-3).unwrap();
    engine.max_events = 3;
    let cfg = EnsembleConfig::new(50, 1, vec![1.0], engine);
    match run_ensemble(&h, &psi, &cfg) {
        Err(Error::EnsembleFailure { .. }) => {}
        other => panic!("expected an ensemble failure, got {other:?}"),
    }
}
