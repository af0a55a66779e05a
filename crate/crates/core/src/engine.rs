//! Single-trajectory jump engine.
//!
//! A trajectory sits on one node and jumps along outgoing edges with rate
//!
//! ```text
//!     T(e) = -Im[A(e)]/ħ + |A(e)|/ħ₂
//! ```
//!
//! computed from the stored potential of each directed edge. Potentials
//! change only at jumps, so the process is a sequence of competing
//! exponentials with piecewise-constant rates and is sampled exactly.
//!
//! On a jump `n -> m` at `t`, with `Δ = t - t̄(n->m)` and `Φ` the sum of the
//! potentials on every directed edge leaving `m` (pre-update values, loop
//! included), `A(n->m)` is multiplied by `exp(-iΦΔ/ħ)` and `A(m->n)` by
//! `exp(+iΦΔ/ħ)`. With the time-dependent rule enabled, `A(m->n)` is
//! additionally rescaled by `H_mn(t) / H_mn(t̄(n->m))`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, DirectedEdge, EdgeId, NodeId, PotentialTable, StateGraph};
use crate::hamiltonian::{HamiltonianModel, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub hbar2: f64,
}

impl PhysicalConstants {
    /// Internal units: ħ = 1, so `hbar2` is the ratio ħ₂/ħ.
    pub fn new(hbar2: f64) -> Result<Self> {
        let c = Self { hbar: 1.0, hbar2 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {}", self.hbar)));
        }
        if !(self.hbar2 > 0.0 && self.hbar2.is_finite()) {
            return Err(Error::InvalidParameter(format!("hbar2 must be > 0, got {}", self.hbar2)));
        }
        Ok(())
    }

    /// Jump rate for a potential, before clamping.
    #[inline]
    pub fn raw_rate(&self, a: C64) -> f64 {
        -a.im / self.hbar + a.norm_sqr().sqrt() / self.hbar2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub constants: PhysicalConstants,
    pub time_dependent_rule: bool,
    pub rate_clamp: bool,
    pub max_events: u64,
    pub record_events: bool,
}

impl EngineConfig {
    pub fn new(hbar2: f64) -> Result<Self> {
        Ok(Self {
            constants: PhysicalConstants::new(hbar2)?,
            time_dependent_rule: false,
            rate_clamp: true,
            max_events: 100_000_000,
            record_events: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        if self.max_events == 0 {
            return Err(Error::InvalidParameter("max_events must be >= 1".into()));
        }
        Ok(())
    }

    /// Rate for `a` under this config, clamped at zero or left raw.
    pub fn effective_rate(&self, a: C64) -> f64 {
        let r = self.constants.raw_rate(a);
        if self.rate_clamp {
            r.max(0.0)
        } else {
            r
        }
    }

    #[inline]
    fn rate(&self, edge: DirectedEdge, a: C64) -> Result<f64> {
        let r = self.constants.raw_rate(a);
        if r >= 0.0 {
            Ok(r)
        } else if self.rate_clamp {
            Ok(0.0)
        } else {
            Err(Error::NegativeRate {
                from: edge.from.0,
                to: edge.to.0,
                potential: a.to_string(),
                rate: r,
            })
        }
    }
}

/// The graph plus per-slice couplings on each directed edge, which is all
/// the engine reads from a Hamiltonian.
#[derive(Clone, Debug)]
pub struct JumpModel {
    graph: StateGraph,
    slice_starts: Vec<f64>,
    couplings: Vec<Vec<C64>>,
}

impl JumpModel {
    pub fn new(h: &HamiltonianModel) -> Result<Self> {
        let graph = build_graph(h)?;
        let couplings = h
            .slices()
            .iter()
            .map(|s| {
                graph
                    .directed_edges()
                    .iter()
                    .map(|e| s.matrix.get(e.from.0, e.to.0))
                    .collect()
            })
            .collect();
        Ok(Self {
            graph,
            slice_starts: h.slices().iter().map(|s| s.start).collect(),
            couplings,
        })
    }

    pub fn graph(&self) -> &StateGraph {
        &self.graph
    }

    #[inline]
    fn slice_index(&self, t: f64) -> usize {
        self.slice_starts.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// `H_{from,to}(t)` for a directed edge.
    pub fn coupling(&self, e: EdgeId, t: f64) -> C64 {
        self.couplings[self.slice_index(t)][e.0]
    }
}

/// Derives an independent, reproducible stream for trajectory `index`.
pub fn trajectory_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryState {
    pub current: NodeId,
    pub time: f64,
    pub potentials: PotentialTable,
    pub rng: ChaCha8Rng,
}

impl TrajectoryState {
    pub fn new(current: NodeId, potentials: PotentialTable, rng: ChaCha8Rng) -> Self {
        Self {
            current,
            time: 0.0,
            potentials,
            rng,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub from: NodeId,
    pub to: NodeId,
    #[serde(rename = "t")]
    pub at: f64,
    #[serde(rename = "dt")]
    pub waiting_time: f64,
    #[serde(rename = "Lambda")]
    pub rate_total: f64,
}

/// Rates on every directed edge leaving the current node.
pub fn jump_rates(
    state: &TrajectoryState,
    model: &JumpModel,
    config: &EngineConfig,
) -> Result<Vec<(DirectedEdge, f64)>> {
    let graph = model.graph();
    graph
        .out_edges(state.current)
        .map(|i| {
            let e = graph.edge(EdgeId(i));
            Ok((e, config.rate(e, state.potentials.value(EdgeId(i)))?))
        })
        .collect()
}

/// Draws the waiting time and destination from a rate list.
pub fn sample_next_jump(state: &mut TrajectoryState, rates: &[(DirectedEdge, f64)]) -> Result<JumpEvent> {
    let total: f64 = rates.iter().map(|r| r.1).sum();
    if !(total > 0.0) {
        return Err(Error::FrozenTrajectory {
            node: state.current.0,
            time: state.time,
        });
    }
    let wait: f64 = state.rng.sample::<f64, _>(Exp1) / total;
    let pick = choose(&mut state.rng, rates.iter().map(|r| r.1), total);
    let edge = rates[pick].0;
    Ok(JumpEvent {
        from: edge.from,
        to: edge.to,
        at: state.time + wait,
        waiting_time: wait,
        rate_total: total,
    })
}

#[inline]
fn choose<I: Iterator<Item = f64>>(rng: &mut ChaCha8Rng, weights: I, total: f64) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Applies a sampled jump to the trajectory.
pub fn apply_jump(
    state: &mut TrajectoryState,
    event: &JumpEvent,
    model: &JumpModel,
    config: &EngineConfig,
) -> Result<()> {
    let e = model.graph().find(event.from, event.to).ok_or_else(|| {
        Error::InvalidParameter(format!(
            "jump {}->{} is not an edge of the graph",
            event.from.0, event.to.0
        ))
    })?;
    if event.from != state.current {
        return Err(Error::InvalidParameter(format!(
            "jump starts at {} but the trajectory is at {}",
            event.from.0, state.current.0
        )));
    }
    apply_on_edge(state, e, event, model, config)
}

#[inline]
fn apply_on_edge(
    state: &mut TrajectoryState,
    e: EdgeId,
    event: &JumpEvent,
    model: &JumpModel,
    config: &EngineConfig,
) -> Result<()> {
    let graph = model.graph();
    let t = event.at;
    let t_bar = state.potentials.last_jump(e);
    let rev = graph.reverse(e);
    let dest = event.to;

    if rev != e {
        let values = state.potentials.values_mut();
        let phi: C64 = values[graph.out_edges(dest)].iter().sum();
        let theta = phi * ((t - t_bar) / config.constants.hbar);
        let i_theta = C64::new(-theta.im, theta.re);
        values[e.0] *= (-i_theta).exp();
        values[rev.0] *= i_theta.exp();
    }

    if config.time_dependent_rule {
        let now = model.slice_index(t);
        let then = model.slice_index(t_bar);
        if now != then {
            let h_then = model.couplings[then][rev.0];
            if h_then.norm_sqr() == 0.0 {
                return Err(Error::ZeroCoupling {
                    from: dest.0,
                    to: event.from.0,
                    time: t_bar,
                });
            }
            let ratio = model.couplings[now][rev.0] / h_then;
            state.potentials.values_mut()[rev.0] *= ratio;
        }
    }

    for id in [e, rev] {
        let a = state.potentials.value(id);
        if !(a.re.is_finite() && a.im.is_finite()) {
            let edge = graph.edge(id);
            return Err(Error::NonFinitePotential {
                event: *event,
                from: edge.from.0,
                to: edge.to.0,
                value: a.to_string(),
            });
        }
    }

    state.potentials.set_last_jump(e, t);
    state.current = dest;
    state.time = t;
    Ok(())
}

/// Runs the trajectory to `t_end`, calling `observer` after every applied
/// jump. Returns the number of jumps. The final time is set to `t_end`;
/// nothing changes for the partial waiting interval.
pub fn evolve_with<F>(
    state: &mut TrajectoryState,
    model: &JumpModel,
    t_end: f64,
    config: &EngineConfig,
    mut observer: F,
) -> Result<u64>
where
    F: FnMut(&JumpEvent, EdgeId, &TrajectoryState),
{
    if t_end < state.time {
        return Err(Error::InvalidParameter(format!(
            "t_end = {t_end} precedes the trajectory time {}",
            state.time
        )));
    }
    if t_end == state.time {
        return Ok(0);
    }
    let graph = model.graph();
    let mut rates: Vec<f64> = Vec::new();
    let mut applied = 0u64;

    loop {
        let node = state.current;
        let range = graph.out_edges(node);
        if range.is_empty() {
            // isolated node: nothing can happen
            state.time = t_end;
            return Ok(applied);
        }
        rates.clear();
        let mut total = 0.0;
        for i in range.clone() {
            let r = config.rate(graph.edge(EdgeId(i)), state.potentials.value(EdgeId(i)))?;
            rates.push(r);
            total += r;
        }
        if !(total > 0.0) {
            return Err(Error::FrozenTrajectory {
                node: node.0,
                time: state.time,
            });
        }
        let wait: f64 = state.rng.sample::<f64, _>(Exp1) / total;
        let t = state.time + wait;
        if t > t_end {
            state.time = t_end;
            return Ok(applied);
        }
        if applied >= config.max_events {
            return Err(Error::Truncated {
                max_events: config.max_events,
                state: Box::new(state.clone()),
                events: Vec::new(),
            });
        }
        let pick = choose(&mut state.rng, rates.iter().copied(), total);
        let e = EdgeId(range.start + pick);
        let event = JumpEvent {
            from: node,
            to: graph.edge(e).to,
            at: t,
            waiting_time: wait,
            rate_total: total,
        };
        apply_on_edge(state, e, &event, model, config)?;
        applied += 1;
        observer(&event, e, state);
    }
}

/// Runs the trajectory to `t_end`; returns the event log when
/// `config.record_events` is set, otherwise an empty vector.
pub fn evolve_trajectory(
    state: &mut TrajectoryState,
    model: &JumpModel,
    t_end: f64,
    config: &EngineConfig,
) -> Result<Vec<JumpEvent>> {
    let mut log = Vec::new();
    let record = config.record_events;
    let result = evolve_with(state, model, t_end, config, |ev, _, _| {
        if record {
            log.push(*ev);
        }
    });
    match result {
        Ok(_) => Ok(log),
        Err(Error::Truncated { max_events, state, .. }) => Err(Error::Truncated {
            max_events,
            state,
            events: log,
        }),
        Err(e) => Err(e),
    }
}

/// Same-direction repeat intervals per directed edge.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RecurrenceReport {
    /// Keyed by `(from, to)`, in order of first repeat.
    pub intervals: std::collections::BTreeMap<(usize, usize), Vec<f64>>,
}

impl RecurrenceReport {
    /// Median over edges of the mean repeat interval.
    pub fn t_rec(&self) -> Option<f64> {
        let means: Vec<f64> = self
            .intervals
            .values()
            .filter(|v| !v.is_empty())
            .map(|v| v.iter().sum::<f64>() / v.len() as f64)
            .collect();
        median(means)
    }
}

pub fn recurrence_intervals(events: &[JumpEvent]) -> RecurrenceReport {
    let mut last: std::collections::HashMap<(usize, usize), f64> = Default::default();
    let mut report = RecurrenceReport::default();
    for ev in events {
        let key = (ev.from.0, ev.to.0);
        if let Some(prev) = last.insert(key, ev.at) {
            report.intervals.entry(key).or_default().push(ev.at - prev);
        }
    }
    report
}

/// Streaming version of [`recurrence_intervals`] that keeps only running
/// sums, for runs too long to log.
#[derive(Clone, Debug)]
pub struct RecurrenceTracker {
    last: Vec<f64>,
    sum: Vec<f64>,
    count: Vec<u32>,
}

impl RecurrenceTracker {
    pub fn new(directed_edges: usize) -> Self {
        Self {
            last: vec![f64::NAN; directed_edges],
            sum: vec![0.0; directed_edges],
            count: vec![0; directed_edges],
        }
    }

    #[inline]
    pub fn observe(&mut self, e: EdgeId, t: f64) {
        let prev = self.last[e.0];
        if !prev.is_nan() {
            self.sum[e.0] += t - prev;
            self.count[e.0] += 1;
        }
        self.last[e.0] = t;
    }

    pub fn t_rec(&self) -> Option<f64> {
        median(
            self.sum
                .iter()
                .zip(&self.count)
                .filter(|(_, &c)| c > 0)
                .map(|(s, &c)| s / c as f64)
                .collect(),
        )
    }
}

pub(crate) fn median(mut xs: Vec<f64>) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    Some(if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::init_potentials;
    use crate::hamiltonian::SparseMatrix;

    fn two_level(g: f64) -> HamiltonianModel {
        let m = SparseMatrix::from_triplets(2, [(0, 1, C64::new(g, 0.0)), (1, 0, C64::new(g, 0.0))]).unwrap();
        HamiltonianModel::constant(m).unwrap()
    }

    fn state_with(model: &JumpModel, node: usize, values: Vec<C64>, seed: u64) -> TrajectoryState {
        let n = values.len();
        let table = PotentialTable::new(values, vec![0.0; n]).unwrap();
        let _ = model;
        TrajectoryState::new(NodeId(node), table, trajectory_rng(seed, 0))
    }

    #[test]
    fn real_potential_rate() {
        let c = PhysicalConstants::new(1e-3).unwrap();
        assert!((c.raw_rate(C64::new(0.5, 0.0)) - 500.0).abs() < 1e-9);
    }

    #[test]
    fn imaginary_potential_rate() {
        let c = PhysicalConstants::new(1e-3).unwrap();
        let a = 0.25;
        assert!((c.raw_rate(C64::new(0.0, a)) - 999.0 * a).abs() < 1e-9);
    }

    #[test]
    fn bell_limit_rate() {
        // ħ₂ -> ∞ leaves only the first term
        let c = PhysicalConstants { hbar: 1.0, hbar2: f64::INFINITY };
        assert!((c.raw_rate(C64::new(0.0, -0.3)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn negative_rate_clamps_or_errors() {
        let h = two_level(1.0);
        let model = JumpModel::new(&h).unwrap();
        let mut cfg = EngineConfig::new(10.0).unwrap();
        // A = i: rate = -1 + 0.1 < 0
        let st = state_with(&model, 0, vec![C64::new(0.0, 1.0), C64::new(1.0, 0.0)], 1);
        let rates = jump_rates(&st, &model, &cfg).unwrap();
        assert_eq!(rates[0].1, 0.0);
        cfg.rate_clamp = false;
        assert!(matches!(jump_rates(&st, &model, &cfg), Err(Error::NegativeRate { .. })));
    }

    #[test]
    fn frozen_trajectory_is_an_error() {
        let h = two_level(1.0);
        let model = JumpModel::new(&h).unwrap();
        let cfg = EngineConfig::new(1e-3).unwrap();
        let mut st = state_with(&model, 0, vec![C64::default(), C64::new(1.0, 0.0)], 1);
        let rates = jump_rates(&st, &model, &cfg).unwrap();
        assert!(matches!(sample_next_jump(&mut st, &rates), Err(Error::FrozenTrajectory { .. })));
    }

    #[test]
    fn single_edge_destination_and_mean_wait() {
        let h = two_level(1.0);
        let model = JumpModel::new(&h).unwrap();
        let cfg = EngineConfig::new(0.5).unwrap();
        let mut st = state_with(&model, 0, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], 7);
        let rates = jump_rates(&st, &model, &cfg).unwrap();
        let r = rates[0].1;
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let ev = sample_next_jump(&mut st, &rates).unwrap();
            assert_eq!(ev.to, NodeId(1));
            sum += ev.waiting_time;
        }
        let mean = sum / n as f64;
        let sigma = (1.0 / r) / (n as f64).sqrt();
        assert!((mean - 1.0 / r).abs() < 3.0 * sigma, "mean {mean} vs {}", 1.0 / r);
    }

    #[test]
    fn categorical_split_one_to_three() {
        let mut st = TrajectoryState::new(
            NodeId(0),
            PotentialTable::new(vec![], vec![]).unwrap(),
            trajectory_rng(11, 3),
        );
        let e1 = DirectedEdge { from: NodeId(0), to: NodeId(1) };
        let e2 = DirectedEdge { from: NodeId(0), to: NodeId(2) };
        let rates = [(e1, 2.0), (e2, 6.0)];
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| sample_next_jump(&mut st, &rates).unwrap().to == NodeId(1))
            .count() as f64;
        let p = 0.25;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - n as f64 * p).abs() < 3.0 * sigma);
    }

    #[test]
    fn fixed_seed_gives_identical_event() {
        let h = two_level(1.0);
        let model = JumpModel::new(&h).unwrap();
        let cfg = EngineConfig::new(1e-2).unwrap();
        let st = state_with(&model, 1, vec![C64::new(0.3, 0.1), C64::new(0.2, -0.4)], 99);
        let rates = jump_rates(&st, &model, &cfg).unwrap();
        let a = sample_next_jump(&mut st.clone(), &rates).unwrap();
        let b = sample_next_jump(&mut st.clone(), &rates).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn first_jump_update_on_two_nodes() {
        let h = two_level(1.0);
        let model = JumpModel::new(&h).unwrap();
        let cfg = EngineConfig::new(1e-3).unwrap();
        let a01 = C64::new(0.4, 0.2);
        let a10 = C64::new(1.1, -0.3);
        let mut st = state_with(&model, 0, vec![a01, a10], 5);
        let t1 = 0.37;
        let ev = JumpEvent {
            from: NodeId(0),
            to: NodeId(1),
            at: t1,
            waiting_time: t1,
            rate_total: 1.0,
        };
        apply_jump(&mut st, &ev, &model, &cfg).unwrap();
        let i = C64::i();
        let want01 = a01 * (-i * a10 * t1).exp();
        let want10 = a10 * (i * a10 * t1).exp();
        assert!((st.potentials.value(EdgeId(0)) - want01).norm() < 1e-14);
        assert!((st.potentials.value(EdgeId(1)) - want10).norm() < 1e-14);
        assert_eq!(st.potentials.last_jump(EdgeId(0)), t1);
        assert_eq!(st.potentials.last_jump(EdgeId(1)), 0.0);
        assert_eq!(st.current, NodeId(1));
        assert_eq!(st.time, t1);
    }

    #[test]
    fn loop_jump_changes_nothing_but_t_bar() {
        let m = SparseMatrix::from_triplets(
            2,
            [
                (0, 0, C64::new(0.5, 0.0)),
                (0, 1, C64::new(1.0, 0.0)),
                (1, 0, C64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let h = HamiltonianModel::constant(m).unwrap();
        let model = JumpModel::new(&h).unwrap();
        let cfg = EngineConfig::new(1e-3).unwrap();
        let g = model.graph();
        let psi = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let table = init_potentials(g, &h, &psi, 1e-6).unwrap();
        let mut st = TrajectoryState::new(NodeId(0), table.clone(), trajectory_rng(1, 1));
        let ev = JumpEvent {
            from: NodeId(0),
            to: NodeId(0),
            at: 0.8,
            waiting_time: 0.8,
            rate_total: 1.0,
        };
        apply_jump(&mut st, &ev, &model, &cfg).unwrap();
        assert_eq!(st.potentials.values(), table.values());
        assert_eq!(st.current, NodeId(0));
        let loop_id = g.find(NodeId(0), NodeId(0)).unwrap();
        assert_eq!(st.potentials.last_jump(loop_id), 0.8);
    }

    #[test]
    fn zero_horizon_does_nothing() {
        let h = two_level(1.0);
        let model = JumpModel::new(&h).unwrap();
        let cfg = EngineConfig::new(1e-3).unwrap();
        let st0 = state_with(&model, 0, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], 3);
        let mut st = st0.clone();
        let log = evolve_trajectory(&mut st, &model, 0.0, &cfg).unwrap();
        assert!(log.is_empty());
        assert_eq!(st, st0);
    }

    #[test]
    fn event_budget_truncates_with_partial_log() {
        let h = two_level(1.0);
        let model = JumpModel::new(&h).unwrap();
        let mut cfg = EngineConfig::new(1e-3).unwrap();
        cfg.max_events = 10;
        cfg.record_events = true;
        let mut st = state_with(&model, 0, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], 3);
        match evolve_trajectory(&mut st, &model, 10.0, &cfg) {
            Err(Error::Truncated { events, state, .. }) => {
                assert_eq!(events.len(), 10);
                assert_eq!(state.time, events[9].at);
            }
            other => panic!("expected truncation, got {other:?}"),
        }
    }

    #[test]
    fn recurrence_intervals_per_direction() {
        let ev = |from: usize, to: usize, at: f64| JumpEvent {
            from: NodeId(from),
            to: NodeId(to),
            at,
            waiting_time: 0.0,
            rate_total: 0.0,
        };
        let log = [ev(0, 1, 1.0), ev(1, 0, 2.0), ev(0, 1, 3.0), ev(1, 0, 5.0), ev(0, 1, 7.0)];
        let rep = recurrence_intervals(&log);
        assert_eq!(rep.intervals[&(0, 1)], vec![2.0, 4.0]);
        assert_eq!(rep.intervals[&(1, 0)], vec![3.0]);
        assert_eq!(rep.t_rec(), Some(3.0));
    }

    #[test]
    fn tracker_matches_log() {
        let h = two_level(1.0);
        let model = JumpModel::new(&h).unwrap();
        let mut cfg = EngineConfig::new(1e-2).unwrap();
        cfg.record_events = true;
        let mut st = state_with(&model, 0, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)], 3);
        let mut tracker = RecurrenceTracker::new(2);
        let mut st2 = st.clone();
        let log = evolve_trajectory(&mut st, &model, 1.0, &cfg).unwrap();
        evolve_with(&mut st2, &model, 1.0, &cfg, |ev, e, _| tracker.observe(e, ev.at)).unwrap();
        let a = recurrence_intervals(&log).t_rec().unwrap();
        let b = tracker.t_rec().unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
