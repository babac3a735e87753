//! Per-agent behavior: W-MSR filtering and weighted update for normal agents,
//! reference broadcasting for leaders, adversary signal generators, and the
//! F-local threat-model check.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, Digraph, VertexSet};

/// A scalar time series used by malicious agents (one value per round for all recipients).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signal {
    ConstantHold { value: f64 },
    /// `offset + amplitude * sin(2π t / period + phase)`.
    Sinusoid { amplitude: f64, period: f64, phase: f64, offset: f64 },
    /// `intercept + slope * t`.
    Ramp { slope: f64, intercept: f64 },
    /// Explicit per-round values; the last one is held once the script runs out.
    Scripted { values: Vec<f64> },
}

impl Signal {
    pub fn value_at(&self, t: u64) -> f64 {
        match self {
            Signal::ConstantHold { value } => *value,
            Signal::Sinusoid {
                amplitude,
                period,
                phase,
                offset,
            } => offset + amplitude * (TAU * t as f64 / period + phase).sin(),
            Signal::Ramp { slope, intercept } => intercept + slope * t as f64,
            Signal::Scripted { values } => {
                let idx = (t as usize).min(values.len().saturating_sub(1));
                values.get(idx).copied().unwrap_or(0.0)
            }
        }
    }

    fn validate(&self, at: &str) -> Result<()> {
        let finite = |x: f64, field: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{at}/{field}"), "must be finite"))
            }
        };
        match self {
            Signal::ConstantHold { value } => finite(*value, "value"),
            Signal::Sinusoid {
                amplitude,
                period,
                phase,
                offset,
            } => {
                finite(*amplitude, "amplitude")?;
                finite(*phase, "phase")?;
                finite(*offset, "offset")?;
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::config(format!("{at}/period"), "must be positive"));
                }
                Ok(())
            }
            Signal::Ramp { slope, intercept } => {
                finite(*slope, "slope")?;
                finite(*intercept, "intercept")
            }
            Signal::Scripted { values } => {
                if values.is_empty() {
                    return Err(Error::config(format!("{at}/values"), "script is empty"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config(format!("{at}/values"), "values must be finite"));
                }
                Ok(())
            }
        }
    }
}

/// How a misbehaving agent chooses what to send.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Malicious: the same signal value goes to every out-neighbor.
    Malicious(Signal),
    /// Byzantine: one signal per out-neighbor.
    ByzantinePerEdge(BTreeMap<AgentId, Signal>),
}

impl AdversaryStrategy {
    pub fn constant(value: f64) -> Self {
        AdversaryStrategy::Malicious(Signal::ConstantHold { value })
    }

    pub fn is_byzantine(&self) -> bool {
        matches!(self, AdversaryStrategy::ByzantinePerEdge(_))
    }

    /// Checks signal parameters, and for Byzantine agents that the recipient
    /// table covers exactly the out-neighbors of `agent`.
    pub fn validate(&self, g: &Digraph, agent: AgentId) -> Result<()> {
        let at = format!("/roles/{agent}/adversary");
        match self {
            AdversaryStrategy::Malicious(signal) => signal.validate(&format!("{at}/malicious")),
            AdversaryStrategy::ByzantinePerEdge(table) => {
                let outs = g.out_neighbors(agent)?;
                for j in outs.iter() {
                    if !table.contains_key(&j) {
                        return Err(Error::config(
                            format!("{at}/byzantine_per_edge"),
                            format!("missing signal for out-neighbor {j}"),
                        ));
                    }
                }
                for (&j, signal) in table {
                    if !outs.contains(j) {
                        return Err(Error::config(
                            format!("{at}/byzantine_per_edge/{j}"),
                            format!("agent {j} is not an out-neighbor of {agent}"),
                        ));
                    }
                    signal.validate(&format!("{at}/byzantine_per_edge/{j}"))?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Normal,
    Leader,
    Adversary(AdversaryStrategy),
}

impl AgentRole {
    pub fn kind(&self) -> RoleKind {
        match self {
            AgentRole::Normal => RoleKind::Normal,
            AgentRole::Leader => RoleKind::Leader,
            AgentRole::Adversary(s) if s.is_byzantine() => RoleKind::Byzantine,
            AgentRole::Adversary(_) => RoleKind::Malicious,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleKind {
    Normal,
    Leader,
    Malicious,
    Byzantine,
}

impl RoleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RoleKind::Normal => "normal",
            RoleKind::Leader => "leader",
            RoleKind::Malicious => "malicious",
            RoleKind::Byzantine => "byzantine",
        }
    }

    pub fn is_adversary(self) -> bool {
        matches!(self, RoleKind::Malicious | RoleKind::Byzantine)
    }
}

/// Right-continuous, piecewise-constant reference `x_r[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(u64, f64)>", into = "Vec<(u64, f64)>")]
pub struct ReferenceSignal {
    breakpoints: Vec<(u64, f64)>,
}

impl ReferenceSignal {
    pub fn new(breakpoints: Vec<(u64, f64)>) -> Result<Self> {
        let at = "/reference";
        match breakpoints.first() {
            None => return Err(Error::config(at, "needs at least one breakpoint")),
            Some(&(t0, _)) if t0 != 0 => return Err(Error::config(at, "first breakpoint must be at round 0")),
            _ => {}
        }
        if breakpoints.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::config(at, "breakpoint rounds must be strictly increasing"));
        }
        if breakpoints.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::config(at, "breakpoint values must be finite"));
        }
        Ok(ReferenceSignal { breakpoints })
    }

    pub fn constant(value: f64) -> Self {
        ReferenceSignal {
            breakpoints: vec![(0, value)],
        }
    }

    pub fn breakpoints(&self) -> &[(u64, f64)] {
        &self.breakpoints
    }

    /// Value of the last breakpoint at or before `t`.
    pub fn value_at(&self, t: u64) -> f64 {
        let idx = self.breakpoints.partition_point(|&(td, _)| td <= t);
        self.breakpoints[idx - 1].1
    }

    /// `C_L`, the value held forever after the last breakpoint.
    pub fn final_value(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1].1
    }

    /// Round after which the reference never changes.
    pub fn settle_round(&self) -> u64 {
        self.breakpoints[self.breakpoints.len() - 1].0
    }

    /// Constant intervals `[start, end)` clipped to rounds `0..=horizon`.
    pub fn intervals(&self, horizon: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for (idx, &(start, _)) in self.breakpoints.iter().enumerate() {
            if start > horizon {
                break;
            }
            let end = self
                .breakpoints
                .get(idx + 1)
                .map_or(horizon + 1, |&(next, _)| next.min(horizon + 1));
            out.push((start, end));
        }
        out
    }
}

impl TryFrom<Vec<(u64, f64)>> for ReferenceSignal {
    type Error = Error;

    fn try_from(value: Vec<(u64, f64)>) -> Result<Self> {
        ReferenceSignal::new(value)
    }
}

impl From<ReferenceSignal> for Vec<(u64, f64)> {
    fn from(value: ReferenceSignal) -> Self {
        value.breakpoints
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    /// `1 / |R_i[t]|` on every retained value.
    Equal,
    /// Per-agent weights over `J_i`, renormalized over the retained set each round.
    FixedTable(BTreeMap<AgentId, BTreeMap<AgentId, f64>>),
}

/// Weight rule plus the floor `alpha` it is certified against.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    pub alpha: f64,
    pub rule: WeightRule,
}

impl WeightScheme {
    /// Equal weights with `alpha = 1 / (max in-degree + 1)`.
    pub fn equal_for(g: &Digraph) -> Self {
        WeightScheme {
            alpha: default_alpha(g),
            rule: WeightRule::Equal,
        }
    }

    /// Checks `0 < alpha < 1` and that the rule meets the floor for every
    /// agent in `agents` under any retained subset of `J_i`.
    pub fn validate(&self, g: &Digraph, agents: VertexSet) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("/alpha_rule/alpha", format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        match &self.rule {
            WeightRule::Equal => {
                let bound = default_alpha(g);
                if self.alpha > bound {
                    return Err(Error::config(
                        "/alpha_rule/alpha",
                        format!(
                            "alpha {} exceeds 1/(max in-degree + 1) = {bound}; equal weights cannot meet it",
                            self.alpha
                        ),
                    ));
                }
            }
            WeightRule::FixedTable(table) => {
                for i in agents.iter() {
                    let at = format!("/alpha_rule/table/{i}");
                    let row = table
                        .get(&i)
                        .ok_or_else(|| Error::config(&at, "no weights for this normal agent"))?;
                    let inclusive = g.inclusive_neighbors(i)?;
                    for &j in row.keys() {
                        if !inclusive.contains(j) {
                            return Err(Error::config(format!("{at}/{j}"), format!("{j} is not an inclusive neighbor of {i}")));
                        }
                    }
                    let mut sum = 0.0;
                    for j in inclusive.iter() {
                        let w = *row
                            .get(&j)
                            .ok_or_else(|| Error::config(&at, format!("missing weight for neighbor {j}")))?;
                        if !(w.is_finite() && w >= self.alpha) {
                            return Err(Error::config(format!("{at}/{j}"), format!("weight {w} is below alpha {}", self.alpha)));
                        }
                        sum += w;
                    }
                    if (sum - 1.0).abs() > 1e-9 {
                        return Err(Error::config(&at, format!("weights sum to {sum}, expected 1")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Weights for `agent` over `retained`, in the same order.
    pub fn weights(&self, agent: AgentId, retained: &[(AgentId, f64)]) -> Vec<f64> {
        match &self.rule {
            WeightRule::Equal => vec![1.0 / retained.len() as f64; retained.len()],
            WeightRule::FixedTable(table) => {
                let row = &table[&agent];
                let raw: Vec<f64> = retained.iter().map(|(j, _)| row[j]).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|w| w / total).collect()
            }
        }
    }
}

/// `1 / (Δ_in + 1)`: the largest floor equal weighting always satisfies.
pub fn default_alpha(g: &Digraph) -> f64 {
    1.0 / (g.max_in_degree() + 1) as f64
}

/// W-MSR steps 1-2.
///
/// Among incoming values strictly above `own`, the `min(f, count)` largest are
/// dropped; likewise the smallest strictly below. Values equal to `own` and
/// the agent's own entry are always kept. Equal values are removed
/// larger-sender-id first. Returns the retained `(sender, value)` pairs
/// sorted by sender id, including `(own_id, own)`.
pub fn wmsr_filter(own_id: AgentId, own: f64, incoming: &[(AgentId, f64)], f: usize) -> Vec<(AgentId, f64)> {
    let mut above: Vec<(AgentId, f64)> = incoming.iter().copied().filter(|&(_, v)| v > own).collect();
    let mut below: Vec<(AgentId, f64)> = incoming.iter().copied().filter(|&(_, v)| v < own).collect();
    above.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
    below.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));

    let mut retained: Vec<(AgentId, f64)> = Vec::with_capacity(incoming.len() + 1);
    retained.push((own_id, own));
    retained.extend(incoming.iter().copied().filter(|&(_, v)| v == own));
    retained.extend_from_slice(&above[f.min(above.len())..]);
    retained.extend_from_slice(&below[f.min(below.len())..]);
    retained.sort_by_key(|&(id, _)| id);
    retained
}

/// W-MSR step 3: weighted average of the retained values.
///
/// Computed as `own + Σ w_j (x_j - own)` so an agent whose retained values all
/// equal its own state keeps that state bit-for-bit; the result is clamped to
/// the retained range to absorb rounding.
pub fn wmsr_update(agent: AgentId, retained: &[(AgentId, f64)], scheme: &WeightScheme) -> f64 {
    let weights = scheme.weights(agent, retained);
    combine(agent, retained, &weights)
}

pub(crate) fn combine(agent: AgentId, retained: &[(AgentId, f64)], weights: &[f64]) -> f64 {
    let own = retained
        .iter()
        .find(|(j, _)| *j == agent)
        .map(|&(_, v)| v)
        .expect("retained set always holds the agent's own value");
    let mut acc = 0.0;
    let mut lo = own;
    let mut hi = own;
    for (&(_, x), &w) in retained.iter().zip(weights) {
        acc += w * (x - own);
        lo = lo.min(x);
        hi = hi.max(x);
    }
    (own + acc).clamp(lo, hi)
}

/// True when `weights` over `retained` are zero outside `J_i`, at least `alpha`,
/// and sum to one within `1e-12`.
pub fn audit_weights(g: &Digraph, agent: AgentId, retained: &[(AgentId, f64)], weights: &[f64], alpha: f64) -> bool {
    let Ok(inclusive) = g.inclusive_neighbors(agent) else {
        return false;
    };
    retained.len() == weights.len()
        && retained.iter().all(|(j, _)| inclusive.contains(*j))
        && weights.iter().all(|&w| w >= alpha)
        && (weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12
}

/// Leaders broadcast the reference and ignore their inputs.
pub fn leader_value(reference: &ReferenceSignal, t: u64) -> f64 {
    reference.value_at(t)
}

/// What adversary running `strategy` sends to `recipient` at round `t`.
pub fn adversary_value(strategy: &AdversaryStrategy, t: u64, recipient: AgentId) -> f64 {
    match strategy {
        AdversaryStrategy::Malicious(signal) => signal.value_at(t),
        AdversaryStrategy::ByzantinePerEdge(table) => table.get(&recipient).map_or(0.0, |s| s.value_at(t)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FLocalCheck {
    pub ok: bool,
    /// First agent (ascending id) seeing more than `F` adversaries in `J_i`.
    pub violator: Option<AgentId>,
    pub count: usize,
}

/// `|J_i ∩ A| <= F` for every agent in `agents`.
pub fn validate_f_local_over(g: &Digraph, adversaries: VertexSet, f: usize, agents: VertexSet) -> FLocalCheck {
    for i in agents.iter() {
        let seen = g.inclusive_neighbors(i).map(|j| j.intersection(adversaries).len()).unwrap_or(0);
        if seen > f {
            return FLocalCheck {
                ok: false,
                violator: Some(i),
                count: seen,
            };
        }
    }
    FLocalCheck {
        ok: true,
        violator: None,
        count: 0,
    }
}

/// F-local check over every non-adversarial agent.
pub fn validate_f_local(g: &Digraph, adversaries: VertexSet, f: usize) -> FLocalCheck {
    validate_f_local_over(g, adversaries, f, adversaries.complement(g.n()))
}
