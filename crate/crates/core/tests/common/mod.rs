//! Reference implementations used as oracles. They follow the definitions
//! literally and share no code with the library checkers: explicit 3^n pair
//! enumeration, plain submask loops, sort-based filtering.

#![allow(dead_code)]

pub mod fleet;

use rand::Rng;
use rcl_core::{AgentId, Digraph, VertexSet};

pub fn in_set(g: &Digraph, i: AgentId) -> Vec<AgentId> {
    g.in_neighbors(i).unwrap().to_vec()
}

/// `|{ i in s : |V_i \ s| >= r }|`, straight from the definition.
pub fn reach_count(g: &Digraph, s: &[AgentId], r: usize) -> usize {
    s.iter()
        .filter(|&&i| in_set(g, i).iter().filter(|j| !s.contains(j)).count() >= r)
        .count()
}

fn ids_of(mask: u64) -> Vec<AgentId> {
    (0..64).filter(|b| mask >> b & 1 == 1).map(|b| b as AgentId + 1).collect()
}

/// Every assignment of vertices to (S1, S2, neither), i.e. 3^n ordered pairs.
/// Calls `visit(s1, s2)` for pairs with both sides nonempty; stops at the first `false`.
pub fn for_each_pair(n: usize, mut visit: impl FnMut(u64, u64) -> bool) -> Option<(u64, u64)> {
    let mut digits = vec![0u8; n];
    loop {
        let (mut s1, mut s2) = (0u64, 0u64);
        for (v, &d) in digits.iter().enumerate() {
            match d {
                1 => s1 |= 1 << v,
                2 => s2 |= 1 << v,
                _ => {}
            }
        }
        if s1 != 0 && s2 != 0 && !visit(s1, s2) {
            return Some((s1, s2));
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return None;
            }
            digits[pos] += 1;
            if digits[pos] == 3 {
                digits[pos] = 0;
                pos += 1;
            } else {
                break;
            }
        }
    }
}

/// Per-mask reachable counts, computed from the definition.
fn count_table(g: &Digraph, r: usize) -> Vec<usize> {
    (0..1u64 << g.n()).map(|m| reach_count(g, &ids_of(m), r)).collect()
}

pub fn oracle_r_robust(g: &Digraph, r: usize) -> bool {
    let counts = count_table(g, r);
    for_each_pair(g.n(), |a, b| counts[a as usize] > 0 || counts[b as usize] > 0).is_none()
}

pub fn oracle_rs_robust(g: &Digraph, r: usize, s: usize) -> bool {
    let counts = count_table(g, r);
    for_each_pair(g.n(), |a, b| {
        let (xa, xb) = (counts[a as usize], counts[b as usize]);
        xa == a.count_ones() as usize || xb == b.count_ones() as usize || xa + xb >= s
    })
    .is_none()
}

/// Every nonempty subset of `universe`, via the standard submask walk.
fn nonempty_subsets(universe: u64) -> impl Iterator<Item = u64> {
    let mut sub = universe;
    let mut done = universe == 0;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let cur = sub;
        if sub == 0 {
            done = true;
            return None;
        }
        sub = (sub - 1) & universe;
        Some(cur)
    })
}

pub fn oracle_strong(g: &Digraph, seed: VertexSet, r: usize) -> bool {
    let rest = seed.complement(g.n()).mask();
    nonempty_subsets(rest).all(|c| reach_count(g, &ids_of(c), r) > 0)
}

pub fn oracle_tlf(g: &Digraph, seed: VertexSet, f: usize) -> bool {
    let rest = seed.complement(g.n()).mask();
    nonempty_subsets(rest).all(|c| {
        let members = ids_of(c);
        let trusted = members
            .iter()
            .any(|&i| in_set(g, i).iter().filter(|&&j| seed.contains(j)).count() > f);
        trusted || reach_count(g, &members, 2 * f + 1) > 0
    })
}

pub fn random_digraph(rng: &mut impl Rng, n: usize, p: f64) -> Digraph {
    let mut g = Digraph::empty(n).unwrap();
    for i in 1..=n {
        for j in 1..=n {
            if i != j && rng.gen_bool(p) {
                g.add_edge(i, j).unwrap();
            }
        }
    }
    g
}

pub fn complete(n: usize) -> Digraph {
    let edges = (1..=n).flat_map(|i| (1..=n).filter(move |&j| j != i).map(move |j| (i, j)));
    Digraph::from_edges(n, edges).unwrap()
}

/// W-MSR filter written as sort-and-trim; returns retained values (own included), sorted.
pub fn oracle_filter(own: f64, incoming: &[f64], f: usize) -> Vec<f64> {
    let mut above: Vec<f64> = incoming.iter().copied().filter(|&v| v > own).collect();
    let mut below: Vec<f64> = incoming.iter().copied().filter(|&v| v < own).collect();
    let equal = incoming.iter().filter(|&&v| v == own).count();
    above.sort_by(f64::total_cmp);
    below.sort_by(f64::total_cmp);
    above.truncate(above.len().saturating_sub(f));
    let drop = f.min(below.len());
    let mut out: Vec<f64> = below[drop..].to_vec();
    out.extend(std::iter::repeat_n(own, equal + 1));
    out.extend(above);
    out.sort_by(f64::total_cmp);
    out
}

pub fn sorted_values(retained: &[(AgentId, f64)]) -> Vec<f64> {
    let mut v: Vec<f64> = retained.iter().map(|&(_, x)| x).collect();
    v.sort_by(f64::total_cmp);
    v
}
