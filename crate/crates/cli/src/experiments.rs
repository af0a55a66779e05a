use beable_core::ensemble::{
    cat_state_sweep, equivariance_distance, measure_recurrence, measurement_statistics, recurrence_scaling_fit,
    run_ensemble, EnsembleConfig, TrajectorySetup,
};
use beable_core::models::{
    cat_state_circuit_with, complete_graph, computational_basis, measurement_apparatus, uniform_state,
    ApparatusModel, BuiltModel,
};
use beable_core::oracle::{potentials_from_psi, schrodinger_integrate, OdeOptions};
use beable_core::{
    evolve_trajectory, regularize_psi, EngineConfig, GraphSnapshot, HamiltonianModel, SchrodingerOracle,
    SparseMatrix, WaveFunction,
};
use serde_json::json;

use crate::config::{ExperimentConfig, Kind};
use crate::error::CliError;
use crate::output::{Artifacts, Csv};

/// What a run reports back for the manifest.
pub struct Summary {
    pub check: Option<(bool, String)>,
    pub details: serde_json::Value,
}

fn engine(cfg: &ExperimentConfig, hbar2: f64, time_dependent: bool) -> Result<EngineConfig, CliError> {
    let mut e = EngineConfig::new(hbar2)?;
    e.rate_clamp = cfg.engine.rate_clamp;
    e.max_events = cfg.engine.max_events;
    e.time_dependent_rule = cfg.engine.time_dependent_rule.unwrap_or(time_dependent);
    Ok(e)
}

pub struct Prepared {
    pub h: HamiltonianModel,
    pub psi0: WaveFunction,
    pub horizon: f64,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let spec = cfg
        .model
        .as_ref()
        .ok_or_else(|| CliError::Config("no model configured".into()))?;
    let BuiltModel {
        hamiltonian,
        psi0,
        horizon,
        ..
    } = spec.build()?;
    let psi0 = match &cfg.state {
        Some(s) => s.build(hamiltonian.dim())?,
        None => psi0,
    };
    let horizon = cfg.run.horizon.or(horizon).unwrap_or(10.0);
    Ok(Prepared {
        h: hamiltonian,
        psi0,
        horizon,
    })
}

fn grid(horizon: f64, points: usize) -> Vec<f64> {
    (0..points).map(|k| horizon * k as f64 / (points - 1) as f64).collect()
}

fn snapshots(horizon: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| horizon * k as f64 / n as f64).collect()
}

/// Exact path from the floored initial state, the reference the ensemble
/// converges to.
fn regularized(psi0: &WaveFunction, eps: f64) -> Result<WaveFunction, CliError> {
    Ok(WaveFunction::normalized(regularize_psi(&psi0.amplitudes, eps))?)
}

pub fn run(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, CliError> {
    match cfg.kind()? {
        Kind::OracleCheck => oracle_check(cfg, out),
        Kind::Trajectory => trajectory(cfg, out),
        Kind::Ensemble => ensemble(cfg, out),
        Kind::Equivariance => equivariance(cfg, out),
        Kind::RecurrenceScaling => recurrence(cfg, out),
        Kind::CatState => cat_state(cfg, out),
        Kind::Measurement => measurement(cfg, out),
    }
}

fn oracle_check(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, CliError> {
    let p = prepare(cfg)?;
    let oracle = SchrodingerOracle::new(&p.h);
    let times = grid(p.horizon, cfg.run.grid_points);
    let opts = OdeOptions {
        rtol: 1e-12,
        atol: 1e-14,
        ..OdeOptions::default()
    };
    let mut csv = Csv::new("oracle", &["t", "node", "probability"]);
    let mut worst = 0.0f64;
    let mut stepped = p.psi0.clone();
    for (psi, &t) in oracle.path(&p.psi0, &times)?.iter().zip(&times) {
        for (n, prob) in psi.probabilities().iter().enumerate() {
            csv.row([format!("{t}"), n.to_string(), format!("{prob:e}")]);
        }
        if t > stepped.time {
            stepped = schrodinger_integrate(&p.h, &stepped, t, &opts)?;
        }
        let diff = psi
            .amplitudes
            .iter()
            .zip(&stepped.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    out.csv("oracle.csv", csv)?;
    let tol = cfg.tolerances.oracle_agreement;
    Ok(Summary {
        check: Some((
            worst <= tol,
            format!("eigen and step routes differ by at most {worst:e} (tolerance {tol:e})"),
        )),
        details: json!({ "max_route_difference": worst, "dim": p.h.dim(), "horizon": p.horizon }),
    })
}

fn trajectory(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, CliError> {
    let p = prepare(cfg)?;
    let eps = cfg.run.epsilon_psi;
    let setup = TrajectorySetup::new(&p.h, &p.psi0, eps)?;
    let mut eng = engine(cfg, cfg.engine.hbar2, p.h.is_time_dependent())?;
    eng.record_events = true;
    let graph = setup.model.graph();
    let times = grid(p.horizon, cfg.run.grid_points);
    let reference = regularized(&p.psi0, eps)?;
    let oracle = SchrodingerOracle::new(&p.h);

    let mut state = setup.start(cfg.seed, 0);
    let start_node = state.current.0;
    let mut log = Vec::new();
    let mut csv = Csv::new(
        "potentials",
        &["t", "from", "to", "re", "im", "oracle_re", "oracle_im"],
    );
    let tabulate = graph.directed_count() <= 512;
    for &t in &times {
        log.extend(evolve_trajectory(&mut state, &setup.model, t, &eng)?);
        if !tabulate {
            continue;
        }
        let psi = oracle.evolve(&reference, t)?;
        let exact = potentials_from_psi(graph, &p.h, &psi, f64::MIN_POSITIVE)?;
        for (i, e) in graph.directed_edges().iter().enumerate() {
            if e.is_loop() {
                continue;
            }
            let a = state.potentials.values()[i];
            let x = exact.values()[i];
            csv.row([
                format!("{t}"),
                e.from.0.to_string(),
                e.to.0.to_string(),
                format!("{:e}", a.re),
                format!("{:e}", a.im),
                format!("{:e}", x.re),
                format!("{:e}", x.im),
            ]);
        }
    }
    out.json_lines("events.jsonl", &log)?;
    if tabulate {
        out.csv("potentials.csv", csv)?;
    }
    out.json("final_state.json", &GraphSnapshot::capture(graph, &state.potentials))?;
    Ok(Summary {
        check: Some((true, format!("{} events to t = {}", log.len(), p.horizon))),
        details: json!({ "events": log.len(), "start_node": start_node, "final_node": state.current.0 }),
    })
}

fn ensemble_config(cfg: &ExperimentConfig, snaps: Vec<f64>, eng: EngineConfig) -> EnsembleConfig {
    let mut e = EnsembleConfig::new(cfg.run.trajectories, cfg.seed, snaps, eng);
    e.epsilon_psi = cfg.run.epsilon_psi;
    e.workers = cfg.workers;
    e
}

fn ensemble(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, CliError> {
    let p = prepare(cfg)?;
    let snaps = snapshots(p.horizon, cfg.run.snapshots);
    let eng = engine(cfg, cfg.engine.hbar2, p.h.is_time_dependent())?;
    let result = run_ensemble(&p.h, &p.psi0, &ensemble_config(cfg, snaps.clone(), eng))?;
    let reference = regularized(&p.psi0, cfg.run.epsilon_psi)?;
    let born = SchrodingerOracle::new(&p.h).path(&reference, &snaps)?;
    let mut csv = Csv::new("occupancy", &["t", "node", "count", "empirical", "born"]);
    for (k, &t) in snaps.iter().enumerate() {
        let emp = result.empirical(k);
        let probs = born[k].probabilities();
        for n in 0..p.h.dim() {
            csv.row([
                format!("{t}"),
                n.to_string(),
                result.occupancy[k][n].to_string(),
                format!("{:e}", emp[n]),
                format!("{:e}", probs[n]),
            ]);
        }
    }
    out.csv("occupancy.csv", csv)?;
    out.json("histogram.json", &result)?;
    Ok(Summary {
        check: Some((
            result.deviation_time.is_none(),
            match result.deviation_time {
                None => "occupancy within the sampling floor at every snapshot".into(),
                Some(t) => format!("occupancy departs from |psi|^2 at t = {t}"),
            },
        )),
        details: json!({
            "completed": result.completed,
            "failures": result.failures.len(),
            "deviation_time": result.deviation_time,
        }),
    })
}

fn equivariance(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, CliError> {
    let p = prepare(cfg)?;
    let snaps = snapshots(p.horizon, cfg.run.snapshots);
    let reference = regularized(&p.psi0, cfg.run.epsilon_psi)?;
    let probs: Vec<Vec<f64>> = SchrodingerOracle::new(&p.h)
        .path(&reference, &snaps)?
        .iter()
        .map(|w| w.probabilities())
        .collect();
    let ladder = if cfg.run.hbar2_grid.is_empty() {
        vec![cfg.engine.hbar2]
    } else {
        cfg.run.hbar2_grid.clone()
    };
    let mut csv = Csv::new(
        "equivariance",
        &["hbar2", "t", "tv", "ci_lo", "ci_hi", "null_mean", "null_sd", "flagged"],
    );
    let mut all_ok = true;
    let mut reports = Vec::new();
    for &hbar2 in &ladder {
        let eng = engine(cfg, hbar2, p.h.is_time_dependent())?;
        let result = run_ensemble(&p.h, &p.psi0, &ensemble_config(cfg, snaps.clone(), eng))?;
        let report = equivariance_distance(&result, &probs, cfg.run.bootstrap, cfg.seed)?;
        for s in &report.snapshots {
            csv.row([
                format!("{hbar2:e}"),
                format!("{}", s.t),
                format!("{:e}", s.tv),
                format!("{:e}", s.ci.0),
                format!("{:e}", s.ci.1),
                format!("{:e}", s.null_mean),
                format!("{:e}", s.null_sd),
                s.flagged.to_string(),
            ]);
        }
        all_ok &= report.all_within_floor();
        reports.push(json!({ "hbar2": hbar2, "report": report, "failures": result.failures.len() }));
    }
    out.csv("equivariance.csv", csv)?;
    out.json("equivariance.json", &reports)?;
    Ok(Summary {
        check: Some((
            all_ok,
            if all_ok {
                "every snapshot within 3 sd of the sampling floor".into()
            } else {
                "at least one snapshot beyond 3 sd of the sampling floor".into()
            },
        )),
        details: json!({ "hbar2": ladder }),
    })
}

pub fn recurrence_cells(cfg: &ExperimentConfig) -> Vec<(usize, f64)> {
    let r = &cfg.recurrence;
    r.sizes.iter().flat_map(|&n| r.hbar2.iter().map(move |&h| (n, h))).collect()
}

fn recurrence(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, CliError> {
    let r = &cfg.recurrence;
    let mut samples = Vec::new();
    let mut csv = Csv::new(
        "recurrence",
        &["n_nodes", "hbar2", "t_rec", "stderr", "trajectories", "events"],
    );
    for (n, hbar2) in recurrence_cells(cfg) {
        let h = complete_graph(n, r.coupling)?;
        let psi0 = uniform_state(n)?;
        let eng = engine(cfg, hbar2, false)?;
        let scale = n as f64 * hbar2;
        let s = measure_recurrence(
            &h,
            &psi0,
            &eng,
            r.burn_in * scale,
            r.window * scale,
            r.trajectories,
            cfg.seed,
            cfg.run.epsilon_psi,
            cfg.workers,
        )?;
        csv.row([
            n.to_string(),
            format!("{hbar2:e}"),
            format!("{:e}", s.t_rec.value),
            format!("{:e}", s.t_rec.stderr),
            s.trajectories.to_string(),
            s.events.to_string(),
        ]);
        samples.push(s);
    }
    out.csv("recurrence.csv", csv)?;
    let fit = recurrence_scaling_fit(&samples)?;
    out.json("fit.json", &fit)?;
    let t = &cfg.tolerances;
    let within = |v: f64, r: [f64; 2]| v >= r[0] && v <= r[1];
    let ok = within(fit.gamma.value, t.gamma)
        && within(fit.hbar2_exponent.value, t.hbar2_exponent)
        && fit.exponent_by_size.iter().all(|&(_, s)| within(s, t.hbar2_exponent));
    Ok(Summary {
        check: Some((
            ok,
            format!(
                "gamma {:.3} (allowed {:?}), hbar2 exponent {:.3} (allowed {:?})",
                fit.gamma.value, t.gamma, fit.hbar2_exponent.value, t.hbar2_exponent
            ),
        )),
        details: json!({ "gamma": fit.gamma, "hbar2_exponent": fit.hbar2_exponent, "r_squared": fit.r_squared }),
    })
}

fn cat_state(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, CliError> {
    let c = &cfg.cat;
    let circuit = cat_state_circuit_with(c.n_qubits, c.tau_gate, c.baseline_floor, c.layout)?;
    let eng = engine(cfg, c.ladder[0], true)?;
    let sweep = cat_state_sweep(
        &circuit,
        &c.ladder,
        cfg.run.trajectories,
        cfg.seed,
        c.epsilon_psi,
        &eng,
        cfg.workers,
    )?;
    let mut csv = Csv::new(
        "cat_state",
        &["hbar2", "m", "stderr", "trajectories", "failures", "events_per_trajectory"],
    );
    for p in &sweep.points {
        csv.row([
            format!("{:e}", p.hbar2),
            format!("{:e}", p.m),
            format!("{:e}", p.stderr),
            p.trajectories.to_string(),
            p.failures.to_string(),
            format!("{:e}", p.events_per_trajectory),
        ]);
    }
    out.csv("cat_state.csv", csv)?;
    out.json("sweep.json", &sweep)?;
    let sig = cfg.tolerances.sigmas;
    let first = &sweep.points[0];
    let last = &sweep.points[sweep.points.len() - 1];
    let quantum = first.m.abs() < sig * first.stderr;
    let classical = last.m > cfg.tolerances.classical_spin_fraction * c.n_qubits as f64;
    let monotone = sweep.monotone_within(sig);
    Ok(Summary {
        check: Some((
            quantum && classical && monotone,
            format!(
                "smallest hbar2 M = {:.3}±{:.3}, largest M = {:.3}, monotone {monotone}",
                first.m, first.stderr, last.m
            ),
        )),
        details: json!({ "crossover_hbar2": sweep.crossover }),
    })
}

fn apparatus(cfg: &ExperimentConfig, d_env: usize) -> Result<ApparatusModel, CliError> {
    let m = &cfg.measurement;
    Ok(measurement_apparatus(
        &SparseMatrix::zeros(2),
        computational_basis(2),
        d_env,
        m.omega_int,
        m.hold,
        m.baseline_floor,
    )?)
}

fn measurement(cfg: &ExperimentConfig, out: &mut Artifacts) -> Result<Summary, CliError> {
    let m = &cfg.measurement;
    let eng = engine(cfg, cfg.engine.hbar2, true)?;
    let mut csv = Csv::new(
        "measurement",
        &[
            "d_env",
            "theta",
            "hbar2",
            "trajectories",
            "failures",
            "undecided",
            "p0",
            "p0_err",
            "p1",
            "p1_err",
            "born0",
            "born1",
            "switch_rate",
            "switch_rate_err",
            "switching_fraction",
        ],
    );
    let mut reports = Vec::new();
    let mut row = |d: usize, theta: f64, r: &beable_core::ensemble::MeasurementReport, born: &[f64]| {
        csv.row([
            d.to_string(),
            format!("{theta}"),
            format!("{:e}", r.hbar2),
            r.trajectories.to_string(),
            r.failures.to_string(),
            r.undecided.to_string(),
            format!("{:e}", r.frequencies[0].value),
            format!("{:e}", r.frequencies[0].stderr),
            format!("{:e}", r.frequencies[1].value),
            format!("{:e}", r.frequencies[1].stderr),
            format!("{:e}", born[0]),
            format!("{:e}", born[1]),
            format!("{:e}", r.switch_rate.value),
            format!("{:e}", r.switch_rate.stderr),
            format!("{}", r.switching_fraction),
        ]);
    };
    let mut born_ok = true;
    let app = apparatus(cfg, m.outcome_d_env)?;
    for &theta in &m.theta {
        let sys = app.system_state(theta)?;
        let born = app.born_weights(&sys);
        let psi0 = app.initial_state(&sys)?;
        let r = measurement_statistics(&app, &psi0, &eng, cfg.run.trajectories, cfg.seed, m.epsilon_psi, cfg.workers)?;
        born_ok &= r.matches(&born, cfg.tolerances.sigmas) && r.undecided == 0;
        row(m.outcome_d_env, theta, &r, &born);
        reports.push(r);
    }
    let theta = m.theta[m.theta.len() - 1];
    let mut rates = Vec::new();
    for &d in &m.d_env {
        let app = apparatus(cfg, d)?;
        let sys = app.system_state(theta)?;
        let born = app.born_weights(&sys);
        let psi0 = app.initial_state(&sys)?;
        let r = measurement_statistics(&app, &psi0, &eng, cfg.run.trajectories, cfg.seed, m.epsilon_psi, cfg.workers)?;
        rates.push(r.switch_rate.value);
        row(d, theta, &r, &born);
        reports.push(r);
    }
    out.csv("measurement.csv", csv)?;
    out.json("measurement.json", &reports)?;
    let decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    Ok(Summary {
        check: Some((
            born_ok && decreasing,
            format!("outcome frequencies match Born weights: {born_ok}; switch rate decreasing: {decreasing}"),
        )),
        details: json!({ "switch_rates": rates }),
    })
}

/// Expected jumps per trajectory: `horizon · ⟨Σ_{n≠m} |H_nm||ψ_n||ψ_m|⟩ / ħ₂`,
/// the Born-weighted total rate averaged over the exact path.
pub fn estimate_events(h: &HamiltonianModel, psi0: &WaveFunction, eps: f64, horizon: f64, hbar2: f64) -> Result<f64, CliError> {
    let reference = regularized(psi0, eps)?;
    let oracle = SchrodingerOracle::new(h);
    let samples = 16;
    let mut total = 0.0;
    for k in 0..samples {
        let t = horizon * (k as f64 + 0.5) / samples as f64;
        let psi = oracle.evolve(&reference, t)?;
        let rate: f64 = h
            .at(t)
            .iter()
            .filter(|(a, b, _)| a != b)
            .map(|(a, b, v)| v.norm() * psi.amplitudes[a].norm() * psi.amplitudes[b].norm())
            .sum();
        total += rate;
    }
    Ok(horizon * total / samples as f64 / hbar2)
}

pub fn describe(cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    let kind = cfg.kind()?;
    let mut lines = vec![format!("experiment: {}", kind.name())];
    let n_traj = cfg.run.trajectories;
    let mut cells: Vec<(String, f64, u64)> = Vec::new();
    match kind {
        Kind::OracleCheck | Kind::Trajectory | Kind::Ensemble | Kind::Equivariance => {
            let p = prepare(cfg)?;
            lines.push(format!(
                "model: {} nodes, {} couplings, horizon {}",
                p.h.dim(),
                p.h.pattern().len(),
                p.horizon
            ));
            let ladder = if kind == Kind::Equivariance && !cfg.run.hbar2_grid.is_empty() {
                cfg.run.hbar2_grid.clone()
            } else {
                vec![cfg.engine.hbar2]
            };
            let runs = if kind == Kind::Trajectory { 1 } else { n_traj };
            for hbar2 in ladder {
                let ev = if kind == Kind::OracleCheck {
                    0.0
                } else {
                    estimate_events(&p.h, &p.psi0, cfg.run.epsilon_psi, p.horizon, hbar2)?
                };
                cells.push((format!("hbar2 {hbar2:e}"), ev, runs));
            }
        }
        Kind::RecurrenceScaling => {
            let r = &cfg.recurrence;
            for (n, hbar2) in recurrence_cells(cfg) {
                let span = (r.burn_in + r.window) * n as f64 * hbar2;
                let ev = span * (n - 1) as f64 * r.coupling / hbar2;
                cells.push((format!("N {n}, hbar2 {hbar2:e}"), ev, r.trajectories));
            }
        }
        Kind::CatState => {
            let c = &cfg.cat;
            let circuit = cat_state_circuit_with(c.n_qubits, c.tau_gate, c.baseline_floor, c.layout)?;
            lines.push(format!(
                "circuit: {} qubits, {} nodes, duration {}",
                c.n_qubits,
                circuit.register.dim(),
                circuit.end_time()
            ));
            for &hbar2 in &c.ladder {
                let ev = estimate_events(&circuit.model, &circuit.psi0, c.epsilon_psi, circuit.end_time(), hbar2)?;
                cells.push((format!("hbar2 {hbar2:e}"), ev, n_traj));
            }
        }
        Kind::Measurement => {
            let m = &cfg.measurement;
            let app = apparatus(cfg, m.outcome_d_env)?;
            for &theta in &m.theta {
                let psi0 = app.initial_state(&app.system_state(theta)?)?;
                let ev = estimate_events(&app.model, &psi0, m.epsilon_psi, app.end_time(), cfg.engine.hbar2)?;
                cells.push((format!("d_env {}, theta {theta:.4}", m.outcome_d_env), ev, n_traj));
            }
            let theta = m.theta[m.theta.len() - 1];
            for &d in &m.d_env {
                let app = apparatus(cfg, d)?;
                let psi0 = app.initial_state(&app.system_state(theta)?)?;
                let ev = estimate_events(&app.model, &psi0, m.epsilon_psi, app.end_time(), cfg.engine.hbar2)?;
                cells.push((format!("d_env {d}, theta {theta:.4}"), ev, n_traj));
            }
        }
    }
    lines.push(format!("cells: {}", cells.len()));
    let mut total = 0.0;
    for (label, ev, runs) in &cells {
        lines.push(format!(
            "  {label}: ~{ev:.3e} events per trajectory x {runs} trajectories"
        ));
        total += ev * *runs as f64;
    }
    lines.push(format!("estimated total events: {total:.3e}"));
    Ok(lines)
}
