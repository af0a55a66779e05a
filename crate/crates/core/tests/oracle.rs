use approx::assert_abs_diff_eq;
use beable_core::models::{random_hermitian, random_state, two_level};
use beable_core::oracle::{
    master_equation_evolve, potential_ode_evolve_driven, potentials_from_psi, schrodinger_integrate, OdeOptions,
    OraclePath,
};
use beable_core::{
    build_graph, DensityVector, EngineConfig, HamiltonianModel, SchrodingerOracle, SparseMatrix, WaveFunction, C64,
};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tight() -> OdeOptions {
    OdeOptions {
        rtol: 1e-12,
        atol: 1e-14,
        ..OdeOptions::default()
    }
}

#[test]
fn rabi_populations() {
    let g = 0.7;
    let h = two_level(g).unwrap();
    let oracle = SchrodingerOracle::new(&h);
    let psi0 = WaveFunction::basis(2, 0);
    for k in 0..50 {
        let t = 0.3 * k as f64;
        let p = oracle.evolve(&psi0, t).unwrap().probabilities();
        assert_abs_diff_eq!(p[1], (g * t).sin().powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(p[0] + p[1], 1.0, epsilon = 1e-12);
    }
}

#[test]
fn eigen_route_matches_step_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random_hermitian(5, &mut rng).unwrap();
    let psi0 = random_state(5, 0.0, &mut rng).unwrap();
    let oracle = SchrodingerOracle::new(&h);
    for t in [0.5, 3.0, 10.0] {
        let exact = oracle.evolve(&psi0, t).unwrap();
        let stepped = schrodinger_integrate(&h, &psi0, t, &tight()).unwrap();
        let diff = exact
            .amplitudes
            .iter()
            .zip(&stepped.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "t = {t}: {diff:e}");
        assert_abs_diff_eq!(exact.norm(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn piecewise_model_stays_unitary() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let a = random_hermitian(4, &mut rng).unwrap();
    let b = random_hermitian(4, &mut rng).unwrap();
    let h = HamiltonianModel::piecewise(
        vec![(0.0, a.at(0.0).clone()), (1.3, b.at(0.0).clone())],
        0.0,
    )
    .unwrap();
    let psi0 = random_state(4, 0.0, &mut rng).unwrap();
    let oracle = SchrodingerOracle::new(&h);
    let out = oracle.evolve(&psi0, 4.0).unwrap();
    assert_abs_diff_eq!(out.norm(), 1.0, epsilon = 1e-12);
    let stepped = schrodinger_integrate(&h, &psi0, 4.0, &tight()).unwrap();
    assert!(out.fidelity(&stepped) > 1.0 - 1e-10);
}

#[test]
fn master_equation_transports_born_density() {
    let h = two_level(1.0).unwrap();
    // (a, b) real stays zero-free under the two-level rotation
    let psi0 = WaveFunction::normalized(vec![C64::new(0.8, 0.0), C64::new(0.6, 0.0)]).unwrap();
    let graph = build_graph(&h).unwrap();
    let oracle = SchrodingerOracle::new(&h);
    let path = OraclePath {
        oracle: &oracle,
        psi0: psi0.clone(),
    };
    let cfg = EngineConfig::new(1e-2).unwrap();
    for t in [0.7, 2.0, 5.0] {
        let rho = master_equation_evolve(&graph, &h, &path, &DensityVector::from_psi(&psi0), 0.0, t, &cfg, &tight())
            .unwrap();
        let want = oracle.evolve(&psi0, t).unwrap().probabilities();
        for (r, w) in rho.rho.iter().zip(&want) {
            assert!((r - w).abs() < 1e-6, "t = {t}: {r} vs {w}");
        }
    }
}

#[test]
fn driven_potential_ode_follows_schrodinger() {
    let m1 = DMatrix::from_row_slice(
        3,
        3,
        &[
            C64::new(0.2, 0.0), C64::new(0.5, 0.1), C64::new(0.0, 0.3),
            C64::new(0.5, -0.1), C64::new(-0.1, 0.0), C64::new(0.4, 0.0),
            C64::new(0.0, -0.3), C64::new(0.4, 0.0), C64::new(0.1, 0.0),
        ],
    );
    let m2 = m1.map(|v| v * 1.7);
    let h = HamiltonianModel::piecewise(
        vec![
            (0.0, SparseMatrix::from_dense(&m1).unwrap()),
            (0.6, SparseMatrix::from_dense(&m2).unwrap()),
        ],
        0.0,
    )
    .unwrap();
    let psi0 = WaveFunction::normalized(vec![C64::new(0.6, 0.1), C64::new(0.5, -0.3), C64::new(0.4, 0.35)]).unwrap();
    let graph = build_graph(&h).unwrap();
    let oracle = SchrodingerOracle::new(&h);
    let t_end = 1.1;
    let min_amp = (0..=200)
        .map(|k| oracle.evolve(&psi0, t_end * k as f64 / 200.0).unwrap())
        .flat_map(|p| p.amplitudes)
        .map(|a| a.norm())
        .fold(f64::INFINITY, f64::min);
    assert!(min_amp > 0.05, "test state passes near a node: {min_amp}");

    let a0 = potentials_from_psi(&graph, &h, &psi0, f64::MIN_POSITIVE).unwrap();
    let a1 = potential_ode_evolve_driven(&graph, &h, &a0, 0.0, t_end, &tight()).unwrap();
    let want = potentials_from_psi(&graph, &h, &oracle.evolve(&psi0, t_end).unwrap(), f64::MIN_POSITIVE).unwrap();
    for (x, y) in a1.values().iter().zip(want.values()) {
        assert!((x - y).norm() / y.norm() < 1e-7, "{x} vs {y}");
    }
}
