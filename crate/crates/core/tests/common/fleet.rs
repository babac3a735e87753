//! Random configurations that satisfy the safety preconditions: either strong
//! (2F+1)-robustness w.r.t. the leaders (leaders may be attacked) or TLF
//! robustness with trusted leaders. Plus an envelope oracle.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rcl_core::protocol::{validate_f_local_over, AdversaryStrategy, AgentRole, ReferenceSignal, Signal};
use rcl_core::robustness::{is_strongly_r_robust_peeling, is_tlf_robust_peeling};
use rcl_core::simulation::{SimConfig, Trajectory};
use rcl_core::{Digraph, VertexSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Strongly (2F+1)-robust w.r.t. the leaders; adversaries may include leaders.
    Strong,
    /// TLF robust w.r.t. the leaders; leaders are never adversaries.
    Tlf,
}

fn random_signal(rng: &mut impl Rng) -> Signal {
    match rng.gen_range(0..4) {
        0 => Signal::ConstantHold {
            value: rng.gen_range(-200.0..200.0),
        },
        1 => Signal::Sinusoid {
            amplitude: rng.gen_range(1.0..100.0),
            period: rng.gen_range(5.0..80.0),
            phase: rng.gen_range(0.0..TAU),
            offset: rng.gen_range(-50.0..50.0),
        },
        2 => Signal::Ramp {
            slope: rng.gen_range(-10.0..10.0),
            intercept: rng.gen_range(-50.0..50.0),
        },
        _ => Signal::Scripted {
            values: (0..rng.gen_range(1..30)).map(|_| rng.gen_range(-300.0..300.0)).collect(),
        },
    }
}

fn random_reference(rng: &mut impl Rng, horizon: u64) -> ReferenceSignal {
    let mut points = vec![(0, rng.gen_range(-50.0..50.0))];
    let mut t = 0;
    for _ in 0..rng.gen_range(0..3) {
        t += rng.gen_range(10..=horizon / 2);
        if t >= horizon {
            break;
        }
        points.push((t, rng.gen_range(-50.0..50.0)));
    }
    ReferenceSignal::new(points).unwrap()
}

/// Draws configurations until one passes the robustness and F-local checks.
pub fn random_compliant(rng: &mut impl Rng, regime: Regime) -> SimConfig {
    loop {
        let f = rng.gen_range(0..=2);
        let n = rng.gen_range(6..=20);
        let undirected = rng.gen_bool(0.3);
        let g = if undirected {
            let kmax = (n - 1) / 2;
            let k = rng.gen_range(1..=kmax);
            Digraph::undirected_circulant(n, &(1..=k).collect::<Vec<_>>()).unwrap()
        } else {
            Digraph::k_circulant(n, rng.gen_range(1..n)).unwrap()
        };
        let mut g = g;
        for _ in 0..rng.gen_range(0..n) {
            let (i, j) = (rng.gen_range(1..=n), rng.gen_range(1..=n));
            if i != j {
                g.add_edge(i, j).unwrap();
            }
        }

        let min_leaders = match regime {
            Regime::Strong => 2 * f + 1,
            Regime::Tlf => f + 1,
        };
        if min_leaders + f >= n {
            continue;
        }
        let count = rng.gen_range(min_leaders..=(min_leaders + 3).min(n - f - 1));
        let start = rng.gen_range(1..=n);
        let leaders: VertexSet = (0..count).map(|d| rcl_core::graph::wrap(start, d as isize, n)).collect();
        let robust = match regime {
            Regime::Strong => is_strongly_r_robust_peeling(&g, leaders, 2 * f + 1).unwrap().verdict,
            Regime::Tlf => is_tlf_robust_peeling(&g, leaders, f).unwrap().verdict,
        };
        if !robust {
            continue;
        }

        let pool: Vec<usize> = match regime {
            Regime::Strong => (1..=n).collect(),
            Regime::Tlf => leaders.complement(n).to_vec(),
        };
        let adv_count = rng.gen_range(0..=f);
        let adversaries: VertexSet = pool.choose_multiple(rng, adv_count).copied().collect();
        let normals = leaders.union(adversaries).complement(n);
        if normals.is_empty() || !validate_f_local_over(&g, adversaries, f, normals).ok {
            continue;
        }

        let horizon = rng.gen_range(40..=160);
        let mut config = SimConfig::new(g.clone(), f)
            .with_leaders(leaders)
            .with_reference(random_reference(rng, horizon))
            .with_horizon(horizon)
            .with_seed(rng.gen());
        for a in adversaries.iter() {
            let strategy = if rng.gen_bool(0.4) {
                let table: BTreeMap<_, _> = g.out_neighbors(a).unwrap().iter().map(|j| (j, random_signal(rng))).collect();
                AdversaryStrategy::ByzantinePerEdge(table)
            } else {
                AdversaryStrategy::Malicious(random_signal(rng))
            };
            config = config.with_role(a, AgentRole::Adversary(strategy));
        }
        config.validate().unwrap();
        return config;
    }
}

/// Counts envelope violations on every constant-reference interval: the
/// min/max over non-adversarial agents and the reference must be monotone, and
/// every non-adversarial state must stay inside the envelope at the interval start.
pub fn safety_violations(traj: &Trajectory, reference: &ReferenceSignal, slack: f64) -> usize {
    let horizon = traj.states.len() as u64 - 1;
    let honest: Vec<usize> = (0..traj.n()).filter(|&i| !traj.roles[i].is_adversary()).collect();
    let bounds = |t: usize| {
        let r = reference.value_at(t as u64);
        honest
            .iter()
            .map(|&i| traj.states[t][i])
            .fold((r, r), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let points = reference.breakpoints();
    let mut violations = 0;
    for (d, &(start, _)) in points.iter().enumerate() {
        if start > horizon {
            break;
        }
        let end = points.get(d + 1).map_or(horizon + 1, |p| p.0.min(horizon + 1));
        let (lo0, hi0) = bounds(start as usize);
        let mut prev = (lo0, hi0);
        for t in start as usize..end as usize {
            let (lo, hi) = bounds(t);
            if lo < prev.0 - slack || hi > prev.1 + slack {
                violations += 1;
            }
            for &i in &honest {
                let v = traj.states[t][i];
                if v < lo0 - slack || v > hi0 + slack {
                    violations += 1;
                }
            }
            prev = (lo, hi);
        }
    }
    violations
}
