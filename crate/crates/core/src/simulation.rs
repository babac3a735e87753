//! Synchronous round engine and the envelope / tracking metrics computed from
//! its trajectories.
//!
//! Round `t` messages are the states at round `t`. Leaders hold `x_r[t]`,
//! adversaries send whatever their strategy dictates for round `t`, and every
//! normal agent computes `x_i[t+1]` from the values delivered to it at `t`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, Digraph, VertexSet};
use crate::protocol::{
    adversary_value, audit_weights, combine, validate_f_local_over, wmsr_filter, AdversaryStrategy, AgentRole,
    ReferenceSignal, RoleKind, WeightScheme,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_HORIZON: u64 = 500;
/// Floating-point slack for the envelope checks.
pub const ENVELOPE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStates {
    /// Independent uniform draws on `[lo, hi]` for every agent, in id order.
    Uniform { lo: f64, hi: f64 },
    /// One value per agent, indexed by `id - 1`.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub graph: Digraph,
    /// Role of agent `i` at index `i - 1`.
    pub roles: Vec<AgentRole>,
    pub f: usize,
    pub weights: WeightScheme,
    /// Required whenever any agent is a leader.
    pub reference: Option<ReferenceSignal>,
    pub horizon: u64,
    pub seed: u64,
    pub init: InitialStates,
    /// Reject adversary sets that are not F-local over the normal agents.
    pub strict_f_local: bool,
}

impl SimConfig {
    /// All-normal configuration with equal weights and uniform `[-25, 25]` initial states.
    pub fn new(graph: Digraph, f: usize) -> Self {
        let n = graph.n();
        SimConfig {
            weights: WeightScheme::equal_for(&graph),
            graph,
            roles: vec![AgentRole::Normal; n],
            f,
            reference: None,
            horizon: DEFAULT_HORIZON,
            seed: 0,
            init: InitialStates::Uniform { lo: -25.0, hi: 25.0 },
            strict_f_local: true,
        }
    }

    pub fn with_role(mut self, agent: AgentId, role: AgentRole) -> Self {
        self.roles[agent - 1] = role;
        self
    }

    pub fn with_leaders(mut self, leaders: VertexSet) -> Self {
        for i in leaders.iter() {
            self.roles[i - 1] = AgentRole::Leader;
        }
        self
    }

    pub fn with_reference(mut self, reference: ReferenceSignal) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: InitialStates) -> Self {
        self.init = init;
        self
    }

    pub fn agents_with(&self, kind: impl Fn(RoleKind) -> bool) -> VertexSet {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| kind(r.kind()))
            .map(|(idx, _)| idx + 1)
            .collect()
    }

    pub fn normals(&self) -> VertexSet {
        self.agents_with(|k| k == RoleKind::Normal)
    }

    pub fn leaders(&self) -> VertexSet {
        self.agents_with(|k| k == RoleKind::Leader)
    }

    pub fn adversaries(&self) -> VertexSet {
        self.agents_with(RoleKind::is_adversary)
    }

    pub fn has_byzantine(&self) -> bool {
        self.roles.iter().any(|r| r.kind() == RoleKind::Byzantine)
    }

    /// Checks every setup-time invariant of a run.
    pub fn validate(&self) -> Result<()> {
        let g = &self.graph;
        if self.roles.len() != g.n() {
            return Err(Error::config("/roles", format!("{} roles for {} agents", self.roles.len(), g.n())));
        }
        if self.horizon == 0 {
            return Err(Error::config("/horizon", "horizon must be positive"));
        }
        if !self.leaders().is_empty() && self.reference.is_none() {
            return Err(Error::config("/reference", "leaders need a reference signal"));
        }
        match &self.init {
            InitialStates::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::config("/init/uniform", "need finite lo <= hi"));
                }
            }
            InitialStates::Explicit(values) => {
                if values.len() != g.n() {
                    return Err(Error::config("/init/explicit", format!("{} values for {} agents", values.len(), g.n())));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config("/init/explicit", "values must be finite"));
                }
            }
        }
        for (idx, role) in self.roles.iter().enumerate() {
            if let AgentRole::Adversary(strategy) = role {
                strategy.validate(g, idx + 1)?;
            }
        }
        self.weights.validate(g, self.normals())?;
        if self.strict_f_local {
            let check = validate_f_local_over(g, self.adversaries(), self.f, self.normals());
            if let Some(i) = check.violator {
                return Err(Error::config(
                    "/roles",
                    format!("adversary set is not {}-local: agent {i} sees {} adversaries", self.f, check.count),
                ));
            }
        }
        Ok(())
    }

    fn initial_states(&self) -> Vec<f64> {
        match &self.init {
            InitialStates::Explicit(values) => values.clone(),
            InitialStates::Uniform { lo, hi } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                (0..self.graph.n())
                    .map(|_| if lo == hi { *lo } else { rng.gen_range(*lo..=*hi) })
                    .collect()
            }
        }
    }
}

/// States of every agent at every round `0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub roles: Vec<RoleKind>,
    /// `states[t][i - 1]`: the value agent `i` broadcasts at round `t`.
    /// Byzantine agents have no single broadcast; their entry is the value sent
    /// to their lowest-id out-neighbor.
    pub states: Vec<Vec<f64>>,
    /// `x_r[t]`, when the run has a reference.
    pub reference: Option<Vec<f64>>,
    /// Per-round values on edges out of Byzantine senders, keyed `(from, to)`.
    /// Empty when no Byzantine agent is present.
    pub byzantine_edges: Vec<BTreeMap<(AgentId, AgentId), f64>>,
}

impl Trajectory {
    pub fn rounds(&self) -> usize {
        self.states.len()
    }

    pub fn horizon(&self) -> u64 {
        self.states.len() as u64 - 1
    }

    pub fn n(&self) -> usize {
        self.roles.len()
    }

    pub fn value(&self, t: u64, agent: AgentId) -> f64 {
        self.states[t as usize][agent - 1]
    }

    pub fn reference_at(&self, t: u64) -> Option<f64> {
        self.reference.as_ref().map(|r| r[t as usize])
    }

    /// What `to` received from `from` at round `t`.
    pub fn delivered(&self, t: u64, from: AgentId, to: AgentId) -> f64 {
        if self.roles[from - 1] == RoleKind::Byzantine {
            if let Some(&v) = self.byzantine_edges[t as usize].get(&(from, to)) {
                return v;
            }
        }
        self.states[t as usize][from - 1]
    }

    fn agents(&self, pred: impl Fn(RoleKind) -> bool) -> Vec<AgentId> {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, &k)| pred(k))
            .map(|(idx, _)| idx + 1)
            .collect()
    }

    pub fn normal_agents(&self) -> Vec<AgentId> {
        self.agents(|k| k == RoleKind::Normal)
    }

    pub fn adversary_agents(&self) -> Vec<AgentId> {
        self.agents(RoleKind::is_adversary)
    }
}

/// Runs the configured scenario for `horizon` rounds.
pub fn run(config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    let g = &config.graph;
    let n = g.n();
    let kinds: Vec<RoleKind> = config.roles.iter().map(AgentRole::kind).collect();
    let normals: Vec<AgentId> = (1..=n).filter(|&i| kinds[i - 1] == RoleKind::Normal).collect();
    let byzantine = config.has_byzantine();
    let in_lists: Vec<Vec<AgentId>> = (1..=n).map(|i| g.in_neighbors(i).map(|s| s.to_vec()).unwrap_or_default()).collect();

    let mut states = Vec::with_capacity(config.horizon as usize + 1);
    let mut byzantine_edges = Vec::new();
    let mut current = config.initial_states();

    for t in 0..=config.horizon {
        // Leaders and adversaries overwrite whatever the previous round left.
        let mut edges = BTreeMap::new();
        for i in 1..=n {
            match &config.roles[i - 1] {
                AgentRole::Normal => {}
                AgentRole::Leader => {
                    current[i - 1] = config.reference.as_ref().expect("validated").value_at(t);
                }
                AgentRole::Adversary(strategy) => {
                    let outs = g.out_neighbors(i)?;
                    if let AdversaryStrategy::ByzantinePerEdge(_) = strategy {
                        for j in outs.iter() {
                            edges.insert((i, j), adversary_value(strategy, t, j));
                        }
                    }
                    let nominal = outs.iter().next().unwrap_or(i);
                    current[i - 1] = adversary_value(strategy, t, nominal);
                }
            }
        }
        if byzantine {
            byzantine_edges.push(edges);
        }
        states.push(current.clone());
        if t == config.horizon {
            break;
        }

        let snapshot = &states[t as usize];
        let edges = byzantine_edges.last();
        let delivered = |from: AgentId, to: AgentId| -> f64 {
            if kinds[from - 1] == RoleKind::Byzantine {
                if let Some(&v) = edges.and_then(|e| e.get(&(from, to))) {
                    return v;
                }
            }
            snapshot[from - 1]
        };
        let updates: Vec<(AgentId, f64)> = normals
            .par_iter()
            .map(|&i| {
                let incoming: Vec<(AgentId, f64)> = in_lists[i - 1].iter().map(|&j| (j, delivered(j, i))).collect();
                let retained = wmsr_filter(i, snapshot[i - 1], &incoming, config.f);
                let weights = config.weights.weights(i, &retained);
                (i, combine(i, &retained, &weights))
            })
            .collect();
        for (i, v) in updates {
            current[i - 1] = v;
        }
    }

    let reference = config
        .reference
        .as_ref()
        .map(|r| (0..=config.horizon).map(|t| r.value_at(t)).collect());
    Ok(Trajectory {
        roles: kinds,
        states,
        reference,
        byzantine_edges,
    })
}

/// Result of recomputing every normal transition from recorded deliveries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayReport {
    /// `(round, agent, stored, recomputed)` where the stored next state differs.
    pub mismatches: Vec<(u64, AgentId, f64, f64)>,
    /// `(round, agent)` where emitted weights break the weight conditions.
    pub weight_violations: Vec<(u64, AgentId)>,
    /// Non-Byzantine edges whose delivered value differs from the broadcast.
    pub delivery_violations: usize,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.weight_violations.is_empty() && self.delivery_violations == 0
    }
}

/// Replays a trajectory: filter + update on the delivered values must
/// reproduce each stored normal state exactly, and every weight vector must
/// pass [`audit_weights`].
pub fn replay(config: &SimConfig, traj: &Trajectory) -> ReplayReport {
    let g = &config.graph;
    let mut report = ReplayReport::default();
    for t in 0..traj.horizon() {
        for i in traj.normal_agents() {
            let inn = g.in_neighbors(i).unwrap_or_default();
            let incoming: Vec<(AgentId, f64)> = inn.iter().map(|j| (j, traj.delivered(t, j, i))).collect();
            for j in inn.iter() {
                if traj.roles[j - 1] != RoleKind::Byzantine && traj.delivered(t, j, i) != traj.value(t, j) {
                    report.delivery_violations += 1;
                }
            }
            let retained = wmsr_filter(i, traj.value(t, i), &incoming, config.f);
            let weights = config.weights.weights(i, &retained);
            if !audit_weights(g, i, &retained, &weights, config.weights.alpha) {
                report.weight_violations.push((t, i));
            }
            let next = combine(i, &retained, &weights);
            let stored = traj.value(t + 1, i);
            if next.to_bits() != stored.to_bits() {
                report.mismatches.push((t + 1, i, stored, next));
            }
        }
    }
    report
}

/// `(m̄[t], M̄[t])`: min and max over normal agents and the reference (when present).
pub fn envelope(traj: &Trajectory) -> (Vec<f64>, Vec<f64>) {
    let normals = traj.normal_agents();
    let mut lower = Vec::with_capacity(traj.rounds());
    let mut upper = Vec::with_capacity(traj.rounds());
    for t in 0..traj.rounds() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in &normals {
            lo = lo.min(traj.states[t][i - 1]);
            hi = hi.max(traj.states[t][i - 1]);
        }
        if let Some(r) = traj.reference_at(t as u64) {
            lo = lo.min(r);
            hi = hi.max(r);
        }
        lower.push(lo);
        upper.push(hi);
    }
    (lower, upper)
}

/// `e[t]`: with a reference, `max_i |x_i[t] - x_r[t]|` over normals; without
/// one, the spread `max_i x_i[t] - min_i x_i[t]`.
pub fn tracking_error(traj: &Trajectory) -> Vec<f64> {
    let normals = traj.normal_agents();
    (0..traj.rounds())
        .map(|t| {
            let row = &traj.states[t];
            match traj.reference_at(t as u64) {
                Some(r) => normals.iter().map(|&i| (row[i - 1] - r).abs()).fold(0.0, f64::max),
                None => {
                    let lo = normals.iter().map(|&i| row[i - 1]).fold(f64::INFINITY, f64::min);
                    let hi = normals.iter().map(|&i| row[i - 1]).fold(f64::NEG_INFINITY, f64::max);
                    if normals.is_empty() {
                        0.0
                    } else {
                        hi - lo
                    }
                }
            }
        })
        .collect()
}

/// Smallest `t` with `e[s] <= tol` for every `s` in `t..=horizon`.
pub fn convergence_round(traj: &Trajectory, tol: f64) -> Option<u64> {
    first_settled(&tracking_error(traj), tol)
}

fn first_settled(error: &[f64], tol: f64) -> Option<u64> {
    let mut start = None;
    for (t, &e) in error.iter().enumerate().rev() {
        if e <= tol {
            start = Some(t as u64);
        } else {
            break;
        }
    }
    start
}

/// Envelope behavior on one constant-reference interval `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSummary {
    pub start: u64,
    /// Exclusive.
    pub end: u64,
    pub reference: Option<f64>,
    /// `e[end - 1]`.
    pub final_error: f64,
    /// m̄ nondecreasing and M̄ nonincreasing throughout.
    pub envelope_monotone: bool,
    /// Every non-adversarial state stays inside `[m̄[start], M̄[start]]`.
    pub interval_invariant: bool,
    pub violations: usize,
}

/// Envelope monotonicity and hull invariance on every constant-reference
/// interval (the whole run when there is no reference).
pub fn interval_summaries(traj: &Trajectory, intervals: &[(u64, u64)]) -> Vec<IntervalSummary> {
    let (lower, upper) = envelope(traj);
    let error = tracking_error(traj);
    let honest: Vec<AgentId> = (1..=traj.n()).filter(|&i| !traj.roles[i - 1].is_adversary()).collect();
    intervals
        .iter()
        .map(|&(start, end)| {
            let (s, e) = (start as usize, end as usize);
            let mut monotone_breaks = 0;
            for t in s + 1..e {
                if lower[t] < lower[t - 1] - ENVELOPE_SLACK || upper[t] > upper[t - 1] + ENVELOPE_SLACK {
                    monotone_breaks += 1;
                }
            }
            let (lo, hi) = (lower[s] - ENVELOPE_SLACK, upper[s] + ENVELOPE_SLACK);
            let mut escapes = 0;
            for t in s..e {
                for &i in &honest {
                    let v = traj.states[t][i - 1];
                    if v < lo || v > hi {
                        escapes += 1;
                    }
                }
            }
            IntervalSummary {
                start,
                end,
                reference: traj.reference_at(start),
                final_error: error[e - 1],
                envelope_monotone: monotone_breaks == 0,
                interval_invariant: escapes == 0,
                violations: monotone_breaks + escapes,
            }
        })
        .collect()
}

/// Summary numbers for a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tol: f64,
    pub converged: bool,
    pub convergence_round: Option<u64>,
    pub final_error: f64,
    pub envelope_monotone: bool,
    pub interval_invariant: bool,
    pub intervals: Vec<IntervalSummary>,
    /// Min and max over all normal states in the run.
    pub normal_range: (f64, f64),
    /// Largest absolute value any adversary sent.
    pub max_adversary_abs: Option<f64>,
    #[serde(skip)]
    pub lower: Vec<f64>,
    #[serde(skip)]
    pub upper: Vec<f64>,
    #[serde(skip)]
    pub error: Vec<f64>,
}

impl Metrics {
    pub fn compute(traj: &Trajectory, reference: Option<&ReferenceSignal>, tol: f64) -> Metrics {
        let horizon = traj.horizon();
        let intervals = match reference {
            Some(r) => r.intervals(horizon),
            None => vec![(0, horizon + 1)],
        };
        let summaries = interval_summaries(traj, &intervals);
        let (lower, upper) = envelope(traj);
        let error = tracking_error(traj);
        let convergence_round = first_settled(&error, tol);

        let mut normal_range = (f64::INFINITY, f64::NEG_INFINITY);
        for i in traj.normal_agents() {
            for row in &traj.states {
                normal_range.0 = normal_range.0.min(row[i - 1]);
                normal_range.1 = normal_range.1.max(row[i - 1]);
            }
        }
        let adversaries = traj.adversary_agents();
        let max_adversary_abs = if adversaries.is_empty() {
            None
        } else {
            let mut m: f64 = 0.0;
            for (t, row) in traj.states.iter().enumerate() {
                for &a in &adversaries {
                    m = m.max(row[a - 1].abs());
                }
                if let Some(edges) = traj.byzantine_edges.get(t) {
                    for v in edges.values() {
                        m = m.max(v.abs());
                    }
                }
            }
            Some(m)
        };

        Metrics {
            tol,
            converged: convergence_round.is_some(),
            convergence_round,
            final_error: *error.last().unwrap_or(&0.0),
            envelope_monotone: summaries.iter().all(|s| s.envelope_monotone),
            interval_invariant: summaries.iter().all(|s| s.interval_invariant),
            intervals: summaries,
            normal_range,
            max_adversary_abs,
            lower,
            upper,
            error,
        }
    }
}
