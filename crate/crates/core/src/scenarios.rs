//! Canned experiments.
//!
//! `sim1`..`sim4` rebuild the four circulant-network experiments; waveforms,
//! switch rounds, the constant reference of `sim2` and seeds are
//! reconstructions picked to make the qualitative behavior visible, not
//! values recovered from the original figures. The counterexample generators
//! search small random graphs that satisfy classical robustness yet keep the
//! followers away from the leaders, and `lemma1` shows that `F` leaders are
//! not enough.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, Digraph, VertexSet};
use crate::protocol::{validate_f_local_over, AdversaryStrategy, AgentRole, ReferenceSignal, Signal};
use crate::robustness::{
    circulant_certificate, is_r_robust, is_rs_robust, is_strongly_r_robust_peeling, is_tlf_robust_peeling,
    r_reachable_set, CertificateMode, EnumerationLimits, RobustnessReport,
};
use crate::simulation::{run, InitialStates, Metrics, SimConfig, Trajectory, DEFAULT_TOLERANCE};

/// Names accepted by [`by_name`].
pub const SCENARIO_NAMES: &[&str] = &[
    "sim1",
    "sim2",
    "sim3",
    "sim4",
    "counterexample-rs",
    "counterexample-2f1",
    "lemma1",
    "lemma1-contrast",
];

/// Attempt budget for the counterexample graph search.
pub const SEARCH_BUDGET: usize = 100_000;

/// Default values held by the leader group and the rest of the network in
/// the counterexamples and the leader-count demo.
pub const LEADER_VALUE: f64 = 0.0;
pub const FOLLOWER_VALUE: f64 = 10.0;

/// Constant reference used by `sim2`; it lies outside the initial range `[-25, 25]`.
pub const SIM2_REFERENCE: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedOutcome {
    /// Tracking error settles below `tol` before the horizon.
    ConvergesToReference { tol: f64 },
    /// No reference: normal agents agree within `tol`, inside `[lo, hi]`.
    Consensus { tol: f64, lo: f64, hi: f64 },
    /// Every normal agent holds `value` bit-exactly at every round.
    StaysAtValue { value: f64 },
    /// Tracking error equals `residual` exactly at every round.
    NoConvergence { residual: f64 },
}

/// A machine-checked claim about the scenario's graph, evaluated before running.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precondition {
    RRobust { r: usize },
    RsRobust { r: usize, s: usize },
    StronglyRobust { set: VertexSet, r: usize },
    Tlf { set: VertexSet, f: usize },
    Certificate { n: usize, k: usize, set: VertexSet, f: usize, mode: CertificateMode },
    FLocal { adversaries: VertexSet, f: usize },
    /// `|X^r_set| == count`.
    ReachableCount { set: VertexSet, r: usize, count: usize },
    /// At most `max` members of `candidates` have every agent of `group` as an in-neighbor.
    ExposedAtMost { group: VertexSet, candidates: VertexSet, max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreconditionResult {
    pub check: Precondition,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<RobustnessReport>,
}

impl Precondition {
    /// Pairwise checks run with forced enumeration: scenario graphs are fixed
    /// and small enough, even above the interactive cap.
    pub fn evaluate(&self, g: &Digraph) -> Result<PreconditionResult> {
        let forced = EnumerationLimits::forced();
        let (verdict, report) = match self {
            Precondition::RRobust { r } => {
                let rep = is_r_robust(g, *r, &forced)?;
                (rep.verdict, Some(rep))
            }
            Precondition::RsRobust { r, s } => {
                let rep = is_rs_robust(g, *r, *s, &forced)?;
                (rep.verdict, Some(rep))
            }
            Precondition::StronglyRobust { set, r } => {
                let rep = is_strongly_r_robust_peeling(g, *set, *r)?;
                (rep.verdict, Some(rep))
            }
            Precondition::Tlf { set, f } => {
                let rep = is_tlf_robust_peeling(g, *set, *f)?;
                (rep.verdict, Some(rep))
            }
            Precondition::Certificate { n, k, set, f, mode } => {
                let rep = circulant_certificate(*n, *k, *set, *f, *mode)?;
                (rep.verdict, Some(rep))
            }
            Precondition::FLocal { adversaries, f } => {
                let normals = adversaries.complement(g.n());
                (validate_f_local_over(g, *adversaries, *f, normals).ok, None)
            }
            Precondition::ReachableCount { set, r, count } => (r_reachable_set(g, *set, *r)?.len() == *count, None),
            Precondition::ExposedAtMost { group, candidates, max } => (exposed(g, *group, *candidates).len() <= *max, None),
        };
        Ok(PreconditionResult {
            check: self.clone(),
            verdict,
            report,
        })
    }
}

/// Members of `candidates` whose in-neighbors include all of `group`.
fn exposed(g: &Digraph, group: VertexSet, candidates: VertexSet) -> VertexSet {
    candidates
        .iter()
        .filter(|&i| group.is_subset(g.in_neighbors(i).unwrap_or_default()))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub config: SimConfig,
    pub expected: ExpectedOutcome,
    pub preconditions: Vec<Precondition>,
    /// Tolerance for the metrics' convergence round.
    pub tol: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub preconditions: Vec<PreconditionResult>,
    pub trajectory: Trajectory,
    pub metrics: Metrics,
    pub outcome_met: bool,
}

impl Scenario {
    /// Evaluates every precondition; fails with [`Error::Precondition`] on the first false one.
    pub fn check_preconditions(&self) -> Result<Vec<PreconditionResult>> {
        let mut out = Vec::with_capacity(self.preconditions.len());
        for p in &self.preconditions {
            let res = p.evaluate(&self.config.graph)?;
            if !res.verdict {
                return Err(Error::Precondition(format!("{}: {:?} does not hold", self.name, p)));
            }
            out.push(res);
        }
        Ok(out)
    }

    pub fn execute(&self) -> Result<ScenarioRun> {
        let preconditions = self.check_preconditions()?;
        let trajectory = run(&self.config)?;
        let metrics = Metrics::compute(&trajectory, self.config.reference.as_ref(), self.tol);
        let outcome_met = outcome_holds(&self.expected, &trajectory, &metrics);
        Ok(ScenarioRun {
            preconditions,
            trajectory,
            metrics,
            outcome_met,
        })
    }
}

/// Checks `expected` against a finished run.
pub fn outcome_holds(expected: &ExpectedOutcome, traj: &Trajectory, metrics: &Metrics) -> bool {
    let normals = traj.normal_agents();
    match *expected {
        ExpectedOutcome::ConvergesToReference { tol } => metrics.final_error < tol && metrics.converged,
        ExpectedOutcome::Consensus { tol, lo, hi } => {
            let last = traj.states.last().expect("nonempty trajectory");
            metrics.final_error < tol && normals.iter().all(|&i| (lo..=hi).contains(&last[i - 1]))
        }
        ExpectedOutcome::StaysAtValue { value } => traj
            .states
            .iter()
            .all(|row| normals.iter().all(|&i| row[i - 1].to_bits() == value.to_bits())),
        ExpectedOutcome::NoConvergence { residual } => metrics.error.iter().all(|&e| e == residual),
    }
}

/// Looks up a built-in scenario. `f` overrides the fault bound where the scenario
/// is parameterized by it; `seed` overrides the default seed.
pub fn by_name(name: &str, f: Option<usize>, seed: Option<u64>) -> Result<Scenario> {
    match name {
        "sim1" => sim1(seed.unwrap_or(1)),
        "sim2" => sim2(seed.unwrap_or(2)),
        "sim3" => sim3(seed.unwrap_or(3)),
        "sim4" => sim4(seed.unwrap_or(4)),
        "counterexample-rs" => counterexample_rs(f.unwrap_or(1), seed.unwrap_or(5)),
        "counterexample-2f1" => counterexample_2f1(f.unwrap_or(1), seed.unwrap_or(6)),
        "lemma1" => lemma1_scenario(f.unwrap_or(1), seed.unwrap_or(7)),
        "lemma1-contrast" => lemma1_contrast(f.unwrap_or(1), seed.unwrap_or(7)),
        other => Err(Error::InvalidParameter(format!(
            "unknown scenario {other:?}; expected one of {}",
            SCENARIO_NAMES.join(", ")
        ))),
    }
}

fn sinusoid(amplitude: f64, period: f64, phase: f64, offset: f64) -> AgentRole {
    AgentRole::Adversary(AdversaryStrategy::Malicious(Signal::Sinusoid {
        amplitude,
        period,
        phase,
        offset,
    }))
}

fn ramp(slope: f64, intercept: f64) -> AgentRole {
    AgentRole::Adversary(AdversaryStrategy::Malicious(Signal::Ramp { slope, intercept }))
}

/// Plain W-MSR resilient consensus: `C_20(1..15)`, `F = 3`, malicious agents
/// {1, 6, 15} oscillating, no leaders.
pub fn sim1(seed: u64) -> Result<Scenario> {
    let f = 3;
    let g = Digraph::k_circulant(20, 15)?;
    let adversaries = VertexSet::from_ids([1, 6, 15]);
    let config = SimConfig::new(g, f)
        .with_role(1, sinusoid(30.0, 40.0, 0.0, 0.0))
        .with_role(6, sinusoid(30.0, 55.0, PI / 2.0, 0.0))
        .with_role(15, sinusoid(30.0, 70.0, PI, 0.0))
        .with_seed(seed)
        .with_horizon(500);
    // the convex hull of the normal initial states
    let initial = crate::simulation::run(&config.clone().with_horizon(1))?;
    let normals = config.normals();
    let lo = normals.iter().map(|i| initial.value(0, i)).fold(f64::INFINITY, f64::min);
    let hi = normals.iter().map(|i| initial.value(0, i)).fold(f64::NEG_INFINITY, f64::max);
    Ok(Scenario {
        name: "sim1".into(),
        description: "W-MSR consensus without leaders on C_20(1..15), F=3, malicious {1,6,15}".into(),
        config,
        expected: ExpectedOutcome::Consensus {
            tol: DEFAULT_TOLERANCE,
            lo,
            hi,
        },
        preconditions: vec![
            Precondition::RRobust { r: 8 },
            Precondition::FLocal { adversaries, f },
        ],
        tol: DEFAULT_TOLERANCE,
    })
}

const SIM_LEADERS: std::ops::RangeInclusive<AgentId> = 22..=28;
const ATTACKED_LEADERS: [AgentId; 3] = [22, 26, 28];

fn attacked_leader_network(k: usize, seed: u64, reference: ReferenceSignal, horizon: u64, ramps: bool) -> Result<(SimConfig, Vec<Precondition>)> {
    let f = 3;
    let n = 30;
    let g = Digraph::k_circulant(n, k)?;
    let leaders = VertexSet::from_ids(SIM_LEADERS);
    let adversaries = VertexSet::from_ids(ATTACKED_LEADERS);
    let mut config = SimConfig::new(g, f)
        .with_leaders(leaders)
        .with_reference(reference)
        .with_seed(seed)
        .with_horizon(horizon);
    let roles = if ramps {
        [ramp(5.0, 0.0), ramp(-5.0, 0.0), ramp(4.0, 25.0)]
    } else {
        [
            sinusoid(50.0, 30.0, 0.0, 0.0),
            sinusoid(50.0, 45.0, PI / 3.0, 0.0),
            sinusoid(50.0, 60.0, PI, 0.0),
        ]
    };
    for (agent, role) in ATTACKED_LEADERS.into_iter().zip(roles) {
        config = config.with_role(agent, role);
    }
    let pre = vec![
        Precondition::Certificate {
            n,
            k,
            set: leaders,
            f,
            mode: CertificateMode::Strong,
        },
        Precondition::StronglyRobust {
            set: leaders,
            r: 2 * f + 1,
        },
        Precondition::FLocal { adversaries, f },
    ];
    Ok((config, pre))
}

/// Leaders {22..28} on `C_30(1..15)` with three of them attacked; constant reference outside the initial range.
pub fn sim2(seed: u64) -> Result<Scenario> {
    let (config, preconditions) =
        attacked_leader_network(15, seed, ReferenceSignal::constant(SIM2_REFERENCE), 500, false)?;
    Ok(Scenario {
        name: "sim2".into(),
        description: "C_30(1..15), F=3, leaders {22..28}, leaders {22,26,28} attacked, x_r = 40".into(),
        config,
        expected: ExpectedOutcome::ConvergesToReference { tol: DEFAULT_TOLERANCE },
        preconditions,
        tol: DEFAULT_TOLERANCE,
    })
}

/// Reference steps 30 -> -20 -> 0 used by `sim3` and `sim4`.
pub fn switching_reference() -> ReferenceSignal {
    ReferenceSignal::new(vec![(0, 30.0), (100, -20.0), (200, 0.0)]).expect("static breakpoints")
}

/// Switching reference on `C_30(1..12)` with oscillating attacked leaders.
pub fn sim3(seed: u64) -> Result<Scenario> {
    let (config, preconditions) = attacked_leader_network(12, seed, switching_reference(), 300, false)?;
    Ok(Scenario {
        name: "sim3".into(),
        description: "C_30(1..12), F=3, leaders {22..28}, {22,26,28} oscillating, x_r: 30 -> -20 -> 0".into(),
        config,
        expected: ExpectedOutcome::ConvergesToReference { tol: DEFAULT_TOLERANCE },
        preconditions,
        tol: DEFAULT_TOLERANCE,
    })
}

/// As `sim3`, with the attacked leaders ramping without bound.
pub fn sim4(seed: u64) -> Result<Scenario> {
    let (config, preconditions) = attacked_leader_network(12, seed, switching_reference(), 300, true)?;
    Ok(Scenario {
        name: "sim4".into(),
        description: "C_30(1..12), F=3, leaders {22..28}, {22,26,28} ramping, x_r: 30 -> -20 -> 0".into(),
        config,
        expected: ExpectedOutcome::ConvergesToReference { tol: DEFAULT_TOLERANCE },
        preconditions,
        tol: DEFAULT_TOLERANCE,
    })
}

/// Random digraph on `n` agents for the counterexample search. Agents
/// `1..=leaders` form the leader group `S1`; every other agent gets at most
/// `cap_from_s1` in-neighbors from `S1` except the `exposed` ones, which
/// receive all of `S1`.
fn random_split_graph(
    rng: &mut ChaCha8Rng,
    n: usize,
    leaders: usize,
    cap_from_s1: usize,
    min_into_s1: usize,
    exposed: &[AgentId],
) -> Result<Digraph> {
    let mut g = Digraph::empty(n)?;
    let s1: Vec<AgentId> = (1..=leaders).collect();
    let s2: Vec<AgentId> = (leaders + 1..=n).collect();
    let density: f64 = rng.gen_range(0.55..=1.0);
    for &i in &s2 {
        for &j in &s2 {
            if i != j && rng.gen_bool(density) {
                g.add_edge(i, j)?;
            }
        }
    }
    for &i in &s1 {
        for &j in &s1 {
            if i != j && rng.gen_bool(0.5) {
                g.add_edge(i, j)?;
            }
        }
        let mut sources = s2.clone();
        sources.shuffle(rng);
        let take = rng.gen_range(min_into_s1..=s2.len());
        for &src in &sources[..take] {
            g.add_edge(src, i)?;
        }
    }
    for &j in &s2 {
        let count = if exposed.contains(&j) {
            leaders
        } else {
            rng.gen_range(0..=cap_from_s1)
        };
        let mut sources = s1.clone();
        sources.shuffle(rng);
        for &src in &sources[..count] {
            g.add_edge(src, j)?;
        }
    }
    Ok(g)
}

/// Holds-at-value config: `S1` leads at [`LEADER_VALUE`], everyone else starts at [`FOLLOWER_VALUE`].
fn split_config(g: Digraph, f: usize, s1: VertexSet, seed: u64, horizon: u64) -> SimConfig {
    let n = g.n();
    let init = (1..=n)
        .map(|i| if s1.contains(i) { LEADER_VALUE } else { FOLLOWER_VALUE })
        .collect();
    SimConfig::new(g, f)
        .with_leaders(s1)
        .with_reference(ReferenceSignal::constant(LEADER_VALUE))
        .with_init(InitialStates::Explicit(init))
        .with_seed(seed)
        .with_horizon(horizon)
}

/// An (F+1, F+1)-robust graph whose `F+1` leaders cannot pull the rest of
/// the network: every follower sees at most `F` leaders, so W-MSR discards
/// them all.
pub fn counterexample_rs(f: usize, seed: u64) -> Result<Scenario> {
    if f == 0 {
        return Err(Error::InvalidParameter("counterexample needs F >= 1".into()));
    }
    let leaders = f + 1;
    let max_n = 4 * f + 6;
    let min_n = leaders + 2 * f + 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forced = EnumerationLimits::forced();
    for _ in 0..SEARCH_BUDGET {
        let n = rng.gen_range(min_n..=max_n);
        let g = random_split_graph(&mut rng, n, leaders, f, f + 1, &[])?;
        let s1 = VertexSet::from_ids(1..=leaders);
        let s2 = s1.complement(n);
        if r_reachable_set(&g, s1, f + 1)?.len() != leaders || !r_reachable_set(&g, s2, f + 1)?.is_empty() {
            continue;
        }
        if !is_rs_robust(&g, f + 1, f + 1, &forced)?.verdict {
            continue;
        }
        return Ok(Scenario {
            name: "counterexample-rs".into(),
            description: format!("({0},{0})-robust graph on {n} agents where {0} leaders never reach the followers", f + 1),
            config: split_config(g, f, s1, seed, 500),
            expected: ExpectedOutcome::NoConvergence {
                residual: (FOLLOWER_VALUE - LEADER_VALUE).abs(),
            },
            preconditions: vec![
                Precondition::RsRobust { r: f + 1, s: f + 1 },
                Precondition::ReachableCount {
                    set: s1,
                    r: f + 1,
                    count: leaders,
                },
                Precondition::ReachableCount {
                    set: s2,
                    r: f + 1,
                    count: 0,
                },
            ],
            tol: DEFAULT_TOLERANCE,
        });
    }
    Err(Error::SearchExhausted {
        attempts: SEARCH_BUDGET,
    })
}

/// A (2F+1)-robust graph with `F+1` leaders where the only followers that
/// hear every leader turn malicious and hold the followers' value.
pub fn counterexample_2f1(f: usize, seed: u64) -> Result<Scenario> {
    if f == 0 {
        return Err(Error::InvalidParameter("counterexample needs F >= 1".into()));
    }
    let leaders = f + 1;
    let r = 2 * f + 1;
    let max_n = 4 * f + 6;
    let min_n = leaders + 2 * r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forced = EnumerationLimits::forced();
    for _ in 0..SEARCH_BUDGET {
        let n = rng.gen_range(min_n.min(max_n)..=max_n);
        let exposed: Vec<AgentId> = (leaders + 1..=leaders + f).collect();
        let g = random_split_graph(&mut rng, n, leaders, f, r, &exposed)?;
        if !is_r_robust(&g, r, &forced)?.verdict {
            continue;
        }
        let s1 = VertexSet::from_ids(1..=leaders);
        let adversaries = VertexSet::from_ids(exposed.iter().copied());
        let mut config = split_config(g, f, s1, seed, 500);
        for &a in &exposed {
            config = config.with_role(a, AgentRole::Adversary(AdversaryStrategy::constant(FOLLOWER_VALUE)));
        }
        return Ok(Scenario {
            name: "counterexample-2f1".into(),
            description: format!(
                "{r}-robust graph on {n} agents; the {f} followers adjacent to all {leaders} leaders turn malicious"
            ),
            config,
            expected: ExpectedOutcome::NoConvergence {
                residual: (FOLLOWER_VALUE - LEADER_VALUE).abs(),
            },
            preconditions: vec![
                Precondition::RRobust { r },
                Precondition::FLocal { adversaries, f },
                Precondition::ExposedAtMost {
                    group: s1,
                    candidates: s1.complement(n),
                    max: f,
                },
            ],
            tol: DEFAULT_TOLERANCE,
        });
    }
    Err(Error::SearchExhausted {
        attempts: SEARCH_BUDGET,
    })
}

/// Circulant used by the leader-count demo: `C_n(1..k)` with `n = 4F + 8`, `k = 2F + 2`.
fn lemma1_graph(f: usize) -> Result<(Digraph, usize, usize)> {
    let n = 4 * f + 8;
    let k = 2 * f + 2;
    Ok((Digraph::k_circulant(n, k)?, n, k))
}

fn lemma1_adversaries(f: usize, n: usize) -> VertexSet {
    VertexSet::from_ids(n / 2 + 1..=n / 2 + f)
}

fn lemma1_config(f: usize, leader_count: usize, seed: u64) -> Result<(SimConfig, usize, usize, VertexSet)> {
    let (g, n, k) = lemma1_graph(f)?;
    let leaders = VertexSet::from_ids(1..=leader_count);
    let adversaries = lemma1_adversaries(f, n);
    let mut config = split_config(g, f, leaders, seed, 500);
    for a in adversaries.iter() {
        config = config.with_role(a, AgentRole::Adversary(AdversaryStrategy::constant(FOLLOWER_VALUE)));
    }
    Ok((config, n, k, adversaries))
}

/// Only `F` leaders on a strongly (2F+1)-robust circulant: with the
/// adversaries holding the followers' value, nobody ever moves.
pub fn lemma1_scenario(f: usize, seed: u64) -> Result<Scenario> {
    if f == 0 {
        return Err(Error::InvalidParameter("lemma1 scenario needs F >= 1".into()));
    }
    let (config, n, k, adversaries) = lemma1_config(f, f, seed)?;
    let window = VertexSet::from_ids(1..=2 * f + 1);
    Ok(Scenario {
        name: "lemma1".into(),
        description: format!("C_{n}(1..{k}), F={f}: only {f} leaders; followers stay at {FOLLOWER_VALUE}"),
        config,
        expected: ExpectedOutcome::StaysAtValue { value: FOLLOWER_VALUE },
        preconditions: vec![
            Precondition::StronglyRobust { set: window, r: 2 * f + 1 },
            Precondition::FLocal { adversaries, f },
        ],
        tol: DEFAULT_TOLERANCE,
    })
}

/// Same network as [`lemma1_scenario`] with `F+1` trusted leaders, which is
/// TLF robust and converges. With `F = 0` this is plain leader following.
pub fn lemma1_contrast(f: usize, seed: u64) -> Result<Scenario> {
    let (config, n, k, adversaries) = lemma1_config(f, f + 1, seed)?;
    let leaders = config.leaders();
    Ok(Scenario {
        name: "lemma1-contrast".into(),
        description: format!("C_{n}(1..{k}), F={f}: {} trusted leaders pull the followers to {LEADER_VALUE}", f + 1),
        config,
        expected: ExpectedOutcome::ConvergesToReference { tol: DEFAULT_TOLERANCE },
        preconditions: vec![
            Precondition::Certificate {
                n,
                k,
                set: leaders,
                f,
                mode: CertificateMode::Tlf,
            },
            Precondition::Tlf { set: leaders, f },
            Precondition::FLocal { adversaries, f },
        ],
        tol: DEFAULT_TOLERANCE,
    })
}
