//! Graph robustness checkers.
//!
//! Every checker returns a [`RobustnessReport`]. A `false` verdict carries a
//! witness that violates the property when re-checked with
//! [`verify_witness`]; a `true` verdict from a constructive check (peeling,
//! certificate) carries the admission order or the certifying window.
//!
//! Subsets are always visited by increasing cardinality, then
//! lexicographically by sorted agent ids, so the reported witness is the
//! smallest violating set under that order.

use std::env;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{wrap, AgentId, Digraph, VertexSet};

pub const DEFAULT_PAIRWISE_CAP: usize = 13;
pub const DEFAULT_SUBSET_CAP: usize = 20;
/// Environment variable that overrides both enumeration caps.
pub const ENUM_CAP_ENV: &str = "RCL_ENUM_CAP";

/// The pairwise checkers keep one byte per vertex subset.
const PAIRWISE_HARD_LIMIT: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Largest `n` for the subset-pair checkers (r- and (r,s)-robustness).
    pub pairwise_cap: usize,
    /// Largest `|V \ S|` for the brute-force strong/TLF checkers.
    pub subset_cap: usize,
    /// Ignore both caps.
    pub force: bool,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits {
            pairwise_cap: DEFAULT_PAIRWISE_CAP,
            subset_cap: DEFAULT_SUBSET_CAP,
            force: false,
        }
    }
}

impl EnumerationLimits {
    pub fn forced() -> Self {
        EnumerationLimits {
            force: true,
            ..Default::default()
        }
    }

    /// Defaults, with both caps replaced by `RCL_ENUM_CAP` when it parses.
    pub fn from_env() -> Self {
        let mut limits = EnumerationLimits::default();
        if let Some(cap) = env::var(ENUM_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            limits.pairwise_cap = cap;
            limits.subset_cap = cap;
        }
        limits
    }

    fn check_pairwise(&self, n: usize) -> Result<()> {
        if n > PAIRWISE_HARD_LIMIT || (!self.force && n > self.pairwise_cap) {
            let cap = if self.force { PAIRWISE_HARD_LIMIT } else { self.pairwise_cap };
            return Err(Error::CapExceeded { size: n, cap });
        }
        Ok(())
    }

    fn check_subsets(&self, size: usize) -> Result<()> {
        if size > 63 || (!self.force && size > self.subset_cap) {
            return Err(Error::CapExceeded {
                size,
                cap: self.subset_cap,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    RReach,
    RRobust,
    RsRobust,
    StrongR,
    Tlf,
    CirculantCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BruteForce,
    Peeling,
    Certificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateMode {
    Strong,
    Tlf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set: Option<VertexSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<CertificateMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub method: Option<Method>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    None,
    /// A single vertex set: the violating `C`, or the reachable members for `RReach`.
    Subset(VertexSet),
    /// Two disjoint sets violating a pairwise condition.
    Pair(VertexSet, VertexSet),
    /// Peeling succeeded; agents outside the seed set in admission order.
    AdmissionOrder(Vec<AgentId>),
    /// Peeling stalled; `remaining` is the set no rule could admit.
    Stalled {
        admitted: Vec<AgentId>,
        remaining: VertexSet,
    },
    /// Consecutive agents (circular order) satisfying a circulant certificate.
    Window(Vec<AgentId>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub property: Property,
    pub params: Params,
    pub verdict: bool,
    pub witness: Witness,
}

/// `X^r_S = { i ∈ S : |V_i \ S| >= r }`.
pub fn r_reachable_set(g: &Digraph, s: VertexSet, r: usize) -> Result<VertexSet> {
    validate_set(g, s)?;
    Ok(reachable_members(g, s, r))
}

pub fn is_r_reachable(g: &Digraph, s: VertexSet, r: usize) -> Result<bool> {
    Ok(!r_reachable_set(g, s, r)?.is_empty())
}

/// Report form of [`r_reachable_set`]; the witness is `X^r_S`.
pub fn r_reachability(g: &Digraph, s: VertexSet, r: usize) -> Result<RobustnessReport> {
    let x = r_reachable_set(g, s, r)?;
    Ok(RobustnessReport {
        property: Property::RReach,
        params: Params {
            r: Some(r),
            set: Some(s),
            ..Default::default()
        },
        verdict: !x.is_empty(),
        witness: Witness::Subset(x),
    })
}

fn validate_set(g: &Digraph, s: VertexSet) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    if !s.is_subset(g.vertices()) {
        let bad = s.difference(g.vertices()).iter().next().unwrap_or(0);
        return Err(Error::UnknownAgent { id: bad, n: g.n() });
    }
    Ok(())
}

fn validate_seed(g: &Digraph, s: VertexSet) -> Result<()> {
    validate_set(g, s)
}

#[inline]
fn reachable_members(g: &Digraph, s: VertexSet, r: usize) -> VertexSet {
    let outside = !s.mask();
    s.iter()
        .filter(|&i| (g.in_mask(i) & outside).count_ones() as usize >= r)
        .collect()
}

#[inline]
fn reachable_count(g: &Digraph, mask: u64, r: usize) -> usize {
    let outside = !mask;
    let mut bits = mask;
    let mut count = 0;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize + 1;
        bits &= bits - 1;
        if (g.in_mask(i) & outside).count_ones() as usize >= r {
            count += 1;
        }
    }
    count
}

#[inline]
fn is_reachable_mask(g: &Digraph, mask: u64, r: usize) -> bool {
    let outside = !mask;
    let mut bits = mask;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize + 1;
        bits &= bits - 1;
        if (g.in_mask(i) & outside).count_ones() as usize >= r {
            return true;
        }
    }
    false
}

/// Visits every nonempty subset of `universe` by increasing cardinality, then
/// lexicographically by sorted ids.
pub(crate) fn for_each_subset_ordered<F>(universe: VertexSet, mut visit: F) -> Option<VertexSet>
where
    F: FnMut(u64) -> ControlFlow<()>,
{
    let items: Vec<u64> = universe.iter().map(|id| 1u64 << (id - 1)).collect();
    let m = items.len();
    for k in 1..=m {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mask = idx.iter().fold(0u64, |acc, &p| acc | items[p]);
            if visit(mask).is_break() {
                return Some(VertexSet::from_mask(mask));
            }
            // advance to the next k-combination in lex order
            let mut p = k;
            while p > 0 && idx[p - 1] == m - k + p - 1 {
                p -= 1;
            }
            if p == 0 {
                break;
            }
            idx[p - 1] += 1;
            for q in p..k {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    None
}

/// Per-subset `|X^r_S|` for every mask over `0..n`.
fn reach_counts(g: &Digraph, r: usize) -> Vec<u8> {
    let n = g.n();
    (0..1u64 << n).map(|mask| reachable_count(g, mask, r) as u8).collect()
}

/// Subset-sum DP: `out[mask] = min over submasks T of mask of base[T]`.
fn submask_min(mut table: Vec<u8>, n: usize) -> Vec<u8> {
    for bit in 0..n {
        let b = 1usize << bit;
        for mask in 0..table.len() {
            if mask & b != 0 {
                let sub = table[mask ^ b];
                if sub < table[mask] {
                    table[mask] = sub;
                }
            }
        }
    }
    table
}

/// r-robustness: every pair of nonempty disjoint subsets has an r-reachable member.
///
/// Pairs are not enumerated explicitly. For each `S1` that is not r-reachable,
/// a submask table answers whether its complement contains another
/// non-reachable set, which keeps the check at `O(n 2^n)`.
pub fn is_r_robust(g: &Digraph, r: usize, limits: &EnumerationLimits) -> Result<RobustnessReport> {
    let mut report = RobustnessReport {
        property: Property::RRobust,
        params: Params {
            r: Some(r),
            method: Some(Method::BruteForce),
            ..Default::default()
        },
        verdict: true,
        witness: Witness::None,
    };
    if r == 0 {
        return Ok(report);
    }
    limits.check_pairwise(g.n())?;
    if let Some((s1, s2)) = find_violating_pair(g, r, usize::MAX)? {
        report.verdict = false;
        report.witness = Witness::Pair(s1, s2);
    }
    Ok(report)
}

/// (r,s)-robustness: for every pair of nonempty disjoint subsets, one is fully
/// r-reachable or together they hold at least `s` r-reachable members.
pub fn is_rs_robust(g: &Digraph, r: usize, s: usize, limits: &EnumerationLimits) -> Result<RobustnessReport> {
    if s == 0 || s > g.n() {
        return Err(Error::InvalidParameter(format!("s must lie in 1..={}, got {s}", g.n())));
    }
    let mut report = RobustnessReport {
        property: Property::RsRobust,
        params: Params {
            r: Some(r),
            s: Some(s),
            method: Some(Method::BruteForce),
            ..Default::default()
        },
        verdict: true,
        witness: Witness::None,
    };
    if r == 0 {
        return Ok(report);
    }
    limits.check_pairwise(g.n())?;
    if let Some((s1, s2)) = find_violating_pair(g, r, s)? {
        report.verdict = false;
        report.witness = Witness::Pair(s1, s2);
    }
    Ok(report)
}

/// Smallest pair `(S1, S2)` with `|X1| < |S1|`, `|X2| < |S2|` and
/// `|X1| + |X2| < s`. `s = usize::MAX` is read as plain r-robustness, where
/// the condition reduces to both sets being non-reachable.
fn find_violating_pair(g: &Digraph, r: usize, s: usize) -> Result<Option<(VertexSet, VertexSet)>> {
    let n = g.n();
    let s = if s == usize::MAX { 1 } else { s };
    let counts = reach_counts(g, r);
    // Candidate sets are those not fully reachable; store their reach count,
    // everything else gets a sentinel that never satisfies `< s`.
    const NONE: u8 = u8::MAX;
    let mut base = vec![NONE; counts.len()];
    for (mask, &c) in counts.iter().enumerate().skip(1) {
        if (c as u32) < (mask as u64).count_ones() {
            base[mask] = c;
        }
    }
    let best_within = submask_min(base.clone(), n);
    let full = VertexSet::full(n).mask();

    let mut found = None;
    for_each_subset_ordered(VertexSet::full(n), |m1| {
        let c1 = base[m1 as usize];
        if c1 == NONE {
            return ControlFlow::Continue(());
        }
        let rest = full & !m1;
        let budget = s.saturating_sub(c1 as usize);
        if budget > 0 && (best_within[rest as usize] as usize) < budget {
            found = Some(m1);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    });
    let Some(m1) = found else {
        return Ok(None);
    };
    let budget = s - base[m1 as usize] as usize;
    let m2 = for_each_subset_ordered(VertexSet::from_mask(full & !m1), |m2| {
        if base[m2 as usize] != NONE && (base[m2 as usize] as usize) < budget {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
    .expect("submask table promised a partner set");
    Ok(Some((VertexSet::from_mask(m1), m2)))
}

/// Largest `r` for which `g` is r-robust. No graph is more than `ceil(n/2)`-robust.
pub fn max_r_robustness(g: &Digraph, limits: &EnumerationLimits) -> Result<usize> {
    limits.check_pairwise(g.n())?;
    let mut best = 0;
    for r in 1..=g.n().div_ceil(2) {
        if find_violating_pair(g, r, usize::MAX)?.is_some() {
            break;
        }
        best = r;
    }
    Ok(best)
}

fn strong_params(r: usize, set: VertexSet, method: Method) -> Params {
    Params {
        r: Some(r),
        set: Some(set),
        method: Some(method),
        ..Default::default()
    }
}

fn tlf_params(f: usize, set: VertexSet, method: Method) -> Params {
    Params {
        f: Some(f),
        set: Some(set),
        method: Some(method),
        ..Default::default()
    }
}

/// Strong r-robustness w.r.t. `seed` by enumerating every nonempty `C ⊆ V \ seed`.
pub fn is_strongly_r_robust_bruteforce(
    g: &Digraph,
    seed: VertexSet,
    r: usize,
    limits: &EnumerationLimits,
) -> Result<RobustnessReport> {
    validate_seed(g, seed)?;
    let rest = seed.complement(g.n());
    limits.check_subsets(rest.len())?;
    let violation = for_each_subset_ordered(rest, |c| {
        if is_reachable_mask(g, c, r) {
            ControlFlow::Continue(())
        } else {
            ControlFlow::Break(())
        }
    });
    Ok(RobustnessReport {
        property: Property::StrongR,
        params: strong_params(r, seed, Method::BruteForce),
        verdict: violation.is_none(),
        witness: violation.map_or(Witness::None, Witness::Subset),
    })
}

/// Admission rule for the peeling closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeelRule {
    /// Admit `i` when at least `r` in-neighbors are already admitted.
    Strong { r: usize },
    /// Admit `i` when it has `f + 1` in-neighbors in the seed set or `2f + 1` admitted in-neighbors.
    Tlf { f: usize },
}

impl PeelRule {
    #[inline]
    fn admits(self, in_mask: u64, seed: u64, admitted: u64) -> bool {
        match self {
            PeelRule::Strong { r } => (in_mask & admitted).count_ones() as usize >= r,
            PeelRule::Tlf { f } => {
                (in_mask & seed).count_ones() as usize > f || (in_mask & admitted).count_ones() as usize > 2 * f
            }
        }
    }
}

/// Grows the admitted set from `seed` until no agent outside it satisfies `rule`.
///
/// `order` fixes the scan priority (default ascending ids); the closure itself
/// does not depend on it. Returns the final set and the admission sequence.
pub fn peel(g: &Digraph, seed: VertexSet, rule: PeelRule, order: Option<&[AgentId]>) -> (VertexSet, Vec<AgentId>) {
    let default_order: Vec<AgentId>;
    let order = match order {
        Some(o) => o,
        None => {
            default_order = (1..=g.n()).collect();
            &default_order
        }
    };
    let mut admitted = seed.mask();
    let mut sequence = Vec::new();
    loop {
        let next = order
            .iter()
            .copied()
            .find(|&i| admitted & (1u64 << (i - 1)) == 0 && rule.admits(g.in_mask(i), seed.mask(), admitted));
        match next {
            Some(i) => {
                admitted |= 1u64 << (i - 1);
                sequence.push(i);
            }
            None => break,
        }
    }
    (VertexSet::from_mask(admitted), sequence)
}

fn peeling_report(g: &Digraph, seed: VertexSet, rule: PeelRule, property: Property, params: Params) -> RobustnessReport {
    let (reached, admitted) = peel(g, seed, rule, None);
    let remaining = reached.complement(g.n());
    RobustnessReport {
        property,
        params,
        verdict: remaining.is_empty(),
        witness: if remaining.is_empty() {
            Witness::AdmissionOrder(admitted)
        } else {
            Witness::Stalled { admitted, remaining }
        },
    }
}

/// Strong r-robustness w.r.t. `seed` in polynomial time via the peeling closure.
pub fn is_strongly_r_robust_peeling(g: &Digraph, seed: VertexSet, r: usize) -> Result<RobustnessReport> {
    validate_seed(g, seed)?;
    Ok(peeling_report(
        g,
        seed,
        PeelRule::Strong { r },
        Property::StrongR,
        strong_params(r, seed, Method::Peeling),
    ))
}

/// TLF robustness with parameter `f` w.r.t. `seed`, by enumerating every nonempty `C ⊆ V \ seed`.
pub fn is_tlf_robust_bruteforce(
    g: &Digraph,
    seed: VertexSet,
    f: usize,
    limits: &EnumerationLimits,
) -> Result<RobustnessReport> {
    validate_seed(g, seed)?;
    let rest = seed.complement(g.n());
    limits.check_subsets(rest.len())?;
    let violation = for_each_subset_ordered(rest, |c| {
        if tlf_set_ok(g, seed.mask(), c, f) {
            ControlFlow::Continue(())
        } else {
            ControlFlow::Break(())
        }
    });
    Ok(RobustnessReport {
        property: Property::Tlf,
        params: tlf_params(f, seed, Method::BruteForce),
        verdict: violation.is_none(),
        witness: violation.map_or(Witness::None, Witness::Subset),
    })
}

#[inline]
fn tlf_set_ok(g: &Digraph, seed: u64, c: u64, f: usize) -> bool {
    let mut bits = c;
    while bits != 0 {
        let i = bits.trailing_zeros() as usize + 1;
        bits &= bits - 1;
        let in_mask = g.in_mask(i);
        if (in_mask & seed).count_ones() as usize > f || (in_mask & !c).count_ones() as usize > 2 * f {
            return true;
        }
    }
    false
}

/// TLF robustness with parameter `f` w.r.t. `seed` via the peeling closure.
pub fn is_tlf_robust_peeling(g: &Digraph, seed: VertexSet, f: usize) -> Result<RobustnessReport> {
    validate_seed(g, seed)?;
    Ok(peeling_report(
        g,
        seed,
        PeelRule::Tlf { f },
        Property::Tlf,
        tlf_params(f, seed, Method::Peeling),
    ))
}

/// Sufficient window condition for strong `(2F+1)`-robustness (`Strong`) or TLF
/// robustness (`Tlf`) of `C_n(1..k)` and `C_n(±1..±k)` w.r.t. `leaders`.
///
/// Searches circular windows of consecutive agents. `Strong` needs a window of
/// at most `k` agents holding `2F+1` leaders; `Tlf` needs at most `k - F`
/// agents holding `F+1` leaders. The reported window is the shortest one,
/// ties broken by smallest starting agent. A `false` verdict only means the
/// certificate does not apply.
pub fn circulant_certificate(
    n: usize,
    k: usize,
    leaders: VertexSet,
    f: usize,
    mode: CertificateMode,
) -> Result<RobustnessReport> {
    if n < 2 || k < 1 || k > n - 1 {
        return Err(Error::InvalidGraph(format!(
            "circulant needs n >= 2 and 1 <= k <= n-1, got n={n}, k={k}"
        )));
    }
    if !leaders.is_subset(VertexSet::full(n)) {
        let bad = leaders.difference(VertexSet::full(n)).iter().next().unwrap_or(0);
        return Err(Error::UnknownAgent { id: bad, n });
    }
    let (max_len, needed) = match mode {
        CertificateMode::Strong => (k, 2 * f + 1),
        CertificateMode::Tlf => (k.saturating_sub(f), f + 1),
    };
    let max_len = max_len.min(n);

    let mut best: Option<(usize, AgentId)> = None;
    for start in 1..=n {
        let mut count = 0;
        for len in 1..=max_len {
            if leaders.contains(wrap(start, len as isize - 1, n)) {
                count += 1;
            }
            if count >= needed {
                if best.is_none_or(|(l, _)| len < l) {
                    best = Some((len, start));
                }
                break;
            }
        }
    }

    Ok(RobustnessReport {
        property: Property::CirculantCertificate,
        params: Params {
            f: Some(f),
            k: Some(k),
            set: Some(leaders),
            mode: Some(mode),
            method: Some(Method::Certificate),
            ..Default::default()
        },
        verdict: best.is_some(),
        witness: match best {
            Some((len, start)) => Witness::Window((0..len).map(|o| wrap(start, o as isize, n)).collect()),
            None => Witness::None,
        },
    })
}

/// Re-checks a report's witness directly against the property definition.
///
/// For `false` verdicts this confirms the witness is a genuine violation; for
/// `true` verdicts with a constructive witness (admission order, window) it
/// confirms the construction. Reports without a checkable witness return `false`.
pub fn verify_witness(g: &Digraph, report: &RobustnessReport) -> bool {
    let p = &report.params;
    let full = g.vertices();
    match (&report.property, &report.witness, report.verdict) {
        (Property::RReach, Witness::Subset(x), verdict) => {
            let Some(s) = p.set else { return false };
            let Some(r) = p.r else { return false };
            *x == reachable_members(g, s, r) && verdict == !x.is_empty()
        }
        (Property::RRobust, Witness::Pair(a, b), false) => {
            let Some(r) = p.r else { return false };
            disjoint_nonempty(*a, *b, full)
                && reachable_members(g, *a, r).is_empty()
                && reachable_members(g, *b, r).is_empty()
        }
        (Property::RsRobust, Witness::Pair(a, b), false) => {
            let (Some(r), Some(s)) = (p.r, p.s) else { return false };
            let xa = reachable_members(g, *a, r).len();
            let xb = reachable_members(g, *b, r).len();
            disjoint_nonempty(*a, *b, full) && xa < a.len() && xb < b.len() && xa + xb < s
        }
        (Property::StrongR, Witness::Subset(c), false)
        | (Property::StrongR, Witness::Stalled { remaining: c, .. }, false) => {
            let (Some(r), Some(seed)) = (p.r, p.set) else { return false };
            !c.is_empty() && c.is_subset(seed.complement(g.n())) && reachable_members(g, *c, r).is_empty()
        }
        (Property::Tlf, Witness::Subset(c), false) | (Property::Tlf, Witness::Stalled { remaining: c, .. }, false) => {
            let (Some(f), Some(seed)) = (p.f, p.set) else { return false };
            !c.is_empty() && c.is_subset(seed.complement(g.n())) && !tlf_set_ok(g, seed.mask(), c.mask(), f)
        }
        (Property::StrongR, Witness::AdmissionOrder(order), true) => {
            let (Some(r), Some(seed)) = (p.r, p.set) else { return false };
            replay_admission(g, seed, PeelRule::Strong { r }, order)
        }
        (Property::Tlf, Witness::AdmissionOrder(order), true) => {
            let (Some(f), Some(seed)) = (p.f, p.set) else { return false };
            replay_admission(g, seed, PeelRule::Tlf { f }, order)
        }
        (Property::CirculantCertificate, Witness::Window(window), true) => {
            let (Some(f), Some(k), Some(leaders), Some(mode)) = (p.f, p.k, p.set, p.mode) else {
                return false;
            };
            let n = g.n();
            let consecutive = window.windows(2).all(|w| w[1] == wrap(w[0], 1, n));
            let distinct = VertexSet::from_ids(window.iter().copied()).len() == window.len();
            let held = window.iter().filter(|&&i| leaders.contains(i)).count();
            let ok = match mode {
                CertificateMode::Strong => window.len() <= k && held > 2 * f,
                CertificateMode::Tlf => window.len() + f <= k && held > f,
            };
            consecutive && distinct && !window.is_empty() && ok
        }
        _ => false,
    }
}

fn disjoint_nonempty(a: VertexSet, b: VertexSet, full: VertexSet) -> bool {
    !a.is_empty() && !b.is_empty() && a.intersection(b).is_empty() && a.union(b).is_subset(full)
}

fn replay_admission(g: &Digraph, seed: VertexSet, rule: PeelRule, order: &[AgentId]) -> bool {
    let mut admitted = seed.mask();
    for &i in order {
        if i == 0 || i > g.n() || admitted & (1u64 << (i - 1)) != 0 {
            return false;
        }
        if !rule.admits(g.in_mask(i), seed.mask(), admitted) {
            return false;
        }
        admitted |= 1u64 << (i - 1);
    }
    admitted == g.vertices().mask()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[usize]) -> VertexSet {
        VertexSet::from_ids(ids.iter().copied())
    }

    fn complete(n: usize) -> Digraph {
        Digraph::k_circulant(n, n - 1).unwrap()
    }

    #[test]
    fn subset_order_is_cardinality_then_lex() {
        let mut seen = Vec::new();
        for_each_subset_ordered(set(&[1, 2, 3, 4]), |m| {
            seen.push(VertexSet::from_mask(m).to_vec());
            ControlFlow::Continue(())
        });
        assert_eq!(seen.len(), 15);
        assert_eq!(seen[..4], [vec![1], vec![2], vec![3], vec![4]]);
        assert_eq!(seen[4..7], [vec![1, 2], vec![1, 3], vec![1, 4]]);
        assert_eq!(seen[7], vec![2, 3]);
        assert_eq!(seen[14], vec![1, 2, 3, 4]);
    }

    #[test]
    fn reachable_set_examples() {
        let g = Digraph::undirected_circulant(5, &[1, 2]).unwrap();
        let s = set(&[2, 4]);
        assert_eq!(r_reachable_set(&g, s, 0).unwrap(), s);

        let g = Digraph::k_circulant(5, 2).unwrap();
        assert_eq!(r_reachable_set(&g, set(&[1]), 2).unwrap(), set(&[1]));
        assert!(r_reachable_set(&g, VertexSet::full(5), 1).unwrap().is_empty());
        assert!(matches!(r_reachable_set(&g, VertexSet::empty(), 1), Err(Error::EmptySet)));
        let report = r_reachability(&g, set(&[1]), 2).unwrap();
        assert!(report.verdict);
        assert!(verify_witness(&g, &report));
    }

    #[test]
    fn r_robust_examples() {
        let limits = EnumerationLimits::default();
        assert!(is_r_robust(&complete(4), 2, &limits).unwrap().verdict);

        let ring = Digraph::k_circulant(6, 1).unwrap();
        let report = is_r_robust(&ring, 2, &limits).unwrap();
        assert!(!report.verdict);
        assert!(verify_witness(&ring, &report));
        assert_eq!(report.witness, Witness::Pair(set(&[1]), set(&[2])));

        assert!(is_r_robust(&Digraph::empty(5).unwrap(), 0, &limits).unwrap().verdict);
    }

    #[test]
    fn rs_robust_examples() {
        let limits = EnumerationLimits::default();
        assert!(is_rs_robust(&complete(5), 2, 2, &limits).unwrap().verdict);
        assert!(is_rs_robust(&complete(5), 2, 0, &limits).is_err());
        assert!(is_rs_robust(&complete(5), 2, 6, &limits).is_err());
    }

    #[test]
    fn pairwise_cap_enforced() {
        let g = Digraph::k_circulant(14, 3).unwrap();
        assert!(matches!(
            is_r_robust(&g, 2, &EnumerationLimits::default()),
            Err(Error::CapExceeded { size: 14, cap: 13 })
        ));
        assert!(is_r_robust(&g, 2, &EnumerationLimits::forced()).is_ok());
    }

    #[test]
    fn max_r_examples() {
        let limits = EnumerationLimits::default();
        assert_eq!(max_r_robustness(&complete(5), &limits).unwrap(), 3);
        assert!(max_r_robustness(&Digraph::k_circulant(6, 3).unwrap(), &limits).unwrap() >= 2);
        assert!(max_r_robustness(&Digraph::undirected_circulant(8, &[1, 2]).unwrap(), &limits).unwrap() >= 2);
    }

    #[test]
    fn strong_robust_examples() {
        let limits = EnumerationLimits::default();
        let g = Digraph::k_circulant(10, 7).unwrap();
        let all = VertexSet::full(10);
        assert!(is_strongly_r_robust_bruteforce(&g, all, 5, &limits).unwrap().verdict);

        let window = set(&[1, 2, 3, 4, 5, 6, 7]);
        assert!(is_strongly_r_robust_bruteforce(&g, window, 7, &limits).unwrap().verdict);
        assert!(is_strongly_r_robust_peeling(&g, window, 7).unwrap().verdict);

        let ring = Digraph::k_circulant(6, 1).unwrap();
        let report = is_strongly_r_robust_bruteforce(&ring, set(&[1]), 2, &limits).unwrap();
        assert!(!report.verdict);
        assert_eq!(report.witness, Witness::Subset(set(&[2])));
        assert!(verify_witness(&ring, &report));

        let report = is_strongly_r_robust_peeling(&ring, set(&[1]), 2).unwrap();
        assert!(!report.verdict);
        assert!(verify_witness(&ring, &report));
    }

    #[test]
    fn strong_robust_sim2_graph() {
        let g = Digraph::k_circulant(30, 15).unwrap();
        let leaders = VertexSet::from_ids(22..=28);
        let report = is_strongly_r_robust_peeling(&g, leaders, 7).unwrap();
        assert!(report.verdict);
        assert!(verify_witness(&g, &report));
    }

    #[test]
    fn peeling_with_zero_threshold_admits_everything() {
        let g = Digraph::empty(5).unwrap();
        let report = is_strongly_r_robust_peeling(&g, set(&[3]), 0).unwrap();
        assert!(report.verdict);
        assert_eq!(report.witness, Witness::AdmissionOrder(vec![1, 2, 4, 5]));
    }

    #[test]
    fn tlf_examples() {
        let limits = EnumerationLimits::default();
        let g = Digraph::k_circulant(10, 7).unwrap();
        let leaders = set(&[1, 4, 5]);
        assert!(is_tlf_robust_bruteforce(&g, leaders, 2, &limits).unwrap().verdict);
        assert!(is_tlf_robust_peeling(&g, leaders, 2).unwrap().verdict);

        // F = 0 collapses to strong 1-robustness
        let ring = Digraph::k_circulant(6, 1).unwrap();
        for seed in 1..=6 {
            let s = set(&[seed]);
            assert_eq!(
                is_tlf_robust_peeling(&ring, s, 0).unwrap().verdict,
                is_strongly_r_robust_peeling(&ring, s, 1).unwrap().verdict
            );
            assert!(is_tlf_robust_peeling(&ring, s, 0).unwrap().verdict);
        }
    }

    #[test]
    fn subset_cap_enforced() {
        let g = Digraph::k_circulant(24, 3).unwrap();
        assert!(matches!(
            is_strongly_r_robust_bruteforce(&g, set(&[1, 2]), 1, &EnumerationLimits::default()),
            Err(Error::CapExceeded { size: 22, cap: 20 })
        ));
    }

    #[test]
    fn certificate_examples() {
        let report = circulant_certificate(30, 15, VertexSet::from_ids(22..=28), 3, CertificateMode::Strong).unwrap();
        assert!(report.verdict);
        assert_eq!(report.witness, Witness::Window((22..=28).collect()));

        let report = circulant_certificate(10, 7, set(&[1, 4, 5]), 2, CertificateMode::Tlf).unwrap();
        assert!(report.verdict);
        assert_eq!(report.witness, Witness::Window(vec![1, 2, 3, 4, 5]));
        assert!(verify_witness(&Digraph::k_circulant(10, 7).unwrap(), &report));

        for f in 0..3 {
            for mode in [CertificateMode::Strong, CertificateMode::Tlf] {
                let report = circulant_certificate(10, 7, VertexSet::empty(), f, mode).unwrap();
                assert!(!report.verdict);
            }
        }
        assert!(circulant_certificate(10, 10, set(&[1]), 0, CertificateMode::Strong).is_err());
    }

    #[test]
    fn certificate_windows_wrap_around() {
        let report = circulant_certificate(15, 4, set(&[14, 15, 1, 2]), 1, CertificateMode::Strong).unwrap();
        assert!(report.verdict);
        assert_eq!(report.witness, Witness::Window(vec![14, 15, 1]));
    }

    #[test]
    fn report_json_shape() {
        let g = Digraph::k_circulant(6, 1).unwrap();
        let report = is_r_robust(&g, 2, &EnumerationLimits::default()).unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["property"], "r_robust");
        assert_eq!(json["verdict"], false);
        assert_eq!(json["witness"]["pair"][0], serde_json::json!([1]));
    }
}
