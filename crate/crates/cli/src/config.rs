//! Experiment configuration: one TOML file per experiment, flags and
//! `--override key=value` layered on top, validated before anything runs.

use std::path::{Path, PathBuf};

use beable_core::models::{CircuitLayout, ModelSpec, StateSpec};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Trajectory,
    Ensemble,
    Equivariance,
    RecurrenceScaling,
    CatState,
    Measurement,
    OracleCheck,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Trajectory => "trajectory",
            Kind::Ensemble => "ensemble",
            Kind::Equivariance => "equivariance",
            Kind::RecurrenceScaling => "recurrence-scaling",
            Kind::CatState => "cat-state",
            Kind::Measurement => "measurement",
            Kind::OracleCheck => "oracle-check",
        }
    }
}

fn default_seed() -> u64 {
    1
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub kind: Option<Kind>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub model: Option<ModelSpec>,
    /// Replaces the model's default initial state.
    #[serde(default)]
    pub state: Option<StateSpec>,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub recurrence: RecurrenceSection,
    #[serde(default)]
    pub cat: CatSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineSection {
    /// ħ₂/ħ.
    pub hbar2: f64,
    pub rate_clamp: bool,
    /// Defaults to on for time-dependent models.
    pub time_dependent_rule: Option<bool>,
    pub max_events: u64,
}

impl Default for EngineSection {
    fn default() -> Self {
        Self {
            hbar2: 1e-3,
            rate_clamp: true,
            time_dependent_rule: None,
            max_events: 100_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub trajectories: u64,
    pub epsilon_psi: f64,
    /// Defaults to the model's schedule length, or 10.
    pub horizon: Option<f64>,
    pub snapshots: usize,
    pub bootstrap: usize,
    /// Extra ħ₂ values for equivariance sweeps; empty means `engine.hbar2`.
    pub hbar2_grid: Vec<f64>,
    /// Time points in oracle and potential tables.
    pub grid_points: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trajectories: 1000,
            epsilon_psi: 1e-6,
            horizon: None,
            snapshots: 5,
            bootstrap: 200,
            hbar2_grid: Vec::new(),
            grid_points: 101,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecurrenceSection {
    pub sizes: Vec<usize>,
    pub hbar2: Vec<f64>,
    pub coupling: f64,
    /// Burn-in and window, in units of `|N| · ħ₂`.
    pub burn_in: f64,
    pub window: f64,
    pub trajectories: u64,
}

impl Default for RecurrenceSection {
    fn default() -> Self {
        Self {
            sizes: vec![4, 8, 16],
            hbar2: vec![1e-4, 2e-4, 4e-4],
            coupling: 1.0,
            burn_in: 10.0,
            window: 200.0,
            trajectories: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatSection {
    pub n_qubits: usize,
    pub tau_gate: f64,
    pub baseline_floor: f64,
    pub layout: CircuitLayout,
    pub ladder: Vec<f64>,
    pub epsilon_psi: f64,
}

impl Default for CatSection {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            tau_gate: 1.0,
            baseline_floor: 0.01,
            layout: CircuitLayout::FanOut,
            ladder: vec![1e-2, 3e-2, 1e-1, 3e-1, 1.0],
            epsilon_psi: 0.03,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasurementSection {
    /// Environment sizes for the switch-rate sweep.
    pub d_env: Vec<usize>,
    /// Environment size for the outcome-frequency runs.
    pub outcome_d_env: usize,
    pub theta: Vec<f64>,
    pub omega_int: f64,
    pub hold: f64,
    pub baseline_floor: f64,
    pub epsilon_psi: f64,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            d_env: vec![2, 4, 6, 8],
            outcome_d_env: 6,
            theta: vec![std::f64::consts::FRAC_PI_8, std::f64::consts::FRAC_PI_4],
            omega_int: 1.0,
            hold: 1.0,
            baseline_floor: 0.03,
            epsilon_psi: 0.03,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub sigmas: f64,
    pub oracle_agreement: f64,
    pub gamma: [f64; 2],
    pub hbar2_exponent: [f64; 2],
    /// Largest-ħ₂ cat point must exceed this fraction of `n_qubits`.
    pub classical_spin_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            sigmas: 3.0,
            oracle_agreement: 1e-8,
            gamma: [0.7, 1.3],
            hbar2_exponent: [0.8, 1.2],
            classical_spin_fraction: 0.8,
        }
    }
}

/// Command-line settings that sit on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Layers {
    pub kind: Option<Kind>,
    pub model: Option<String>,
    pub hbar2: Option<f64>,
    pub trajectories: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub overrides: Vec<String>,
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed override key {key:?}")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads `path` (if any), applies `layers`, and validates the result.
pub fn load(path: Option<&Path>, layers: &Layers) -> Result<ExperimentConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => {
            let mut t = toml::Table::new();
            t.insert("schema_version".into(), toml::Value::Integer(CONFIG_SCHEMA_VERSION.into()));
            t
        }
    };
    if let Some(k) = layers.kind {
        table.insert("kind".into(), toml::Value::String(k.name().into()));
    }
    if let Some(m) = &layers.model {
        let same = table
            .get("model")
            .and_then(|v| v.get("topology"))
            .and_then(|v| v.as_str())
            == Some(m.as_str());
        if !same {
            let mut t = toml::Table::new();
            t.insert("topology".into(), toml::Value::String(m.clone()));
            table.insert("model".into(), toml::Value::Table(t));
        }
    }
    if let Some(h) = layers.hbar2 {
        set_path(&mut table, "engine.hbar2", toml::Value::Float(h))?;
    }
    if let Some(n) = layers.trajectories {
        set_path(&mut table, "run.trajectories", toml::Value::Integer(n as i64))?;
    }
    if let Some(s) = layers.seed {
        table.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    if let Some(w) = layers.workers {
        table.insert("workers".into(), toml::Value::Integer(w as i64));
    }
    if let Some(d) = &layers.out_dir {
        table.insert("out_dir".into(), toml::Value::String(d.display().to_string()));
    }
    for o in &layers.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
        set_path(&mut table, k.trim(), parse_value(v.trim()))?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn kind(&self) -> Result<Kind, CliError> {
        self.kind
            .ok_or_else(|| CliError::Config("no experiment kind given".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        let kind = self.kind()?;
        let e = &self.engine;
        if !(e.hbar2 > 0.0 && e.hbar2.is_finite()) {
            return bad(format!("engine.hbar2 must be > 0, got {}", e.hbar2));
        }
        if e.max_events == 0 {
            return bad("engine.max_events must be >= 1".into());
        }
        let r = &self.run;
        if r.trajectories == 0 {
            return bad("run.trajectories must be >= 1".into());
        }
        if !(r.epsilon_psi > 0.0) {
            return bad(format!("run.epsilon_psi must be > 0, got {}", r.epsilon_psi));
        }
        if let Some(h) = r.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("run.horizon must be > 0, got {h}"));
            }
        }
        if r.snapshots == 0 || r.grid_points < 2 {
            return bad("run.snapshots must be >= 1 and run.grid_points >= 2".into());
        }
        if r.hbar2_grid.iter().any(|h| !(*h > 0.0)) {
            return bad("run.hbar2_grid entries must be > 0".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        let needs_model = matches!(
            kind,
            Kind::Trajectory | Kind::Ensemble | Kind::Equivariance | Kind::OracleCheck
        );
        if needs_model && self.model.is_none() {
            return bad(format!("{} needs a [model] table or --model", kind.name()));
        }
        let rec = &self.recurrence;
        if rec.sizes.iter().any(|&n| n < 2) || rec.hbar2.iter().any(|h| !(*h > 0.0)) {
            return bad("recurrence.sizes must be >= 2 and recurrence.hbar2 > 0".into());
        }
        if !(rec.window > 0.0 && rec.burn_in >= 0.0) {
            return bad("recurrence.window must be > 0 and burn_in >= 0".into());
        }
        if self.cat.ladder.is_empty() || self.cat.ladder.iter().any(|h| !(*h > 0.0)) {
            return bad("cat.ladder must be non-empty with entries > 0".into());
        }
        if self.measurement.d_env.is_empty() || self.measurement.theta.is_empty() {
            return bad("measurement.d_env and measurement.theta must be non-empty".into());
        }
        Ok(())
    }
}
