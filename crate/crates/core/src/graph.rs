//! Directed graphs over agents labeled `1..=n`, circulant constructors and the
//! plain-text / JSON graph formats.
//!
//! Adjacency is stored as one in-neighbor and one out-neighbor bitmask per
//! vertex, which caps graphs at [`MAX_AGENTS`] vertices. Every robustness
//! oracle in this crate is exponential in `n`, so the cap is never the
//! binding constraint.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based agent label.
pub type AgentId = usize;

pub const MAX_AGENTS: usize = 64;

/// A set of agents stored as a bitmask (bit `i - 1` is agent `i`).
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct VertexSet(u64);

impl VertexSet {
    pub const fn empty() -> Self {
        VertexSet(0)
    }

    pub const fn from_mask(mask: u64) -> Self {
        VertexSet(mask)
    }

    /// All agents `1..=n`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            VertexSet(u64::MAX)
        } else {
            VertexSet((1u64 << n) - 1)
        }
    }

    pub const fn mask(self) -> u64 {
        self.0
    }

    pub fn from_ids<I: IntoIterator<Item = AgentId>>(ids: I) -> Self {
        let mut s = VertexSet::empty();
        for id in ids {
            s.insert(id);
        }
        s
    }

    /// Like [`VertexSet::from_ids`] but rejects ids outside `1..=n`.
    pub fn checked<I: IntoIterator<Item = AgentId>>(n: usize, ids: I) -> Result<Self> {
        let mut s = VertexSet::empty();
        for id in ids {
            if id == 0 || id > n {
                return Err(Error::UnknownAgent { id, n });
            }
            s.insert(id);
        }
        Ok(s)
    }

    pub fn insert(&mut self, id: AgentId) {
        debug_assert!((1..=MAX_AGENTS).contains(&id));
        self.0 |= 1u64 << (id - 1);
    }

    pub fn remove(&mut self, id: AgentId) {
        self.0 &= !(1u64 << (id - 1));
    }

    pub fn contains(self, id: AgentId) -> bool {
        (1..=MAX_AGENTS).contains(&id) && self.0 & (1u64 << (id - 1)) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        VertexSet(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        VertexSet(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        VertexSet(self.0 & !other.0)
    }

    /// Complement within `1..=n`.
    pub fn complement(self, n: usize) -> Self {
        VertexSet::full(n).difference(self)
    }

    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Ascending agent ids.
    pub fn iter(self) -> impl Iterator<Item = AgentId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(tz + 1)
            }
        })
    }

    pub fn to_vec(self) -> Vec<AgentId> {
        self.iter().collect()
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<AgentId> for VertexSet {
    fn from_iter<I: IntoIterator<Item = AgentId>>(iter: I) -> Self {
        VertexSet::from_ids(iter)
    }
}

impl Serialize for VertexSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for VertexSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let ids = Vec::<AgentId>::deserialize(deserializer)?;
        if let Some(&bad) = ids.iter().find(|&&id| id == 0 || id > MAX_AGENTS) {
            return Err(serde::de::Error::custom(format!("agent id {bad} out of range")));
        }
        Ok(VertexSet::from_ids(ids))
    }
}

/// Directed graph on agents `1..=n`. An edge `(i, j)` means `i` transmits to `j`.
#[derive(Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    in_masks: Vec<u64>,
    out_masks: Vec<u64>,
}

impl fmt::Debug for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Digraph")
            .field("n", &self.n)
            .field("edges", &self.edges().collect::<Vec<_>>())
            .finish()
    }
}

impl Digraph {
    /// Graph with `n` agents and no edges.
    pub fn empty(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph(format!("need at least 2 agents, got {n}")));
        }
        if n > MAX_AGENTS {
            return Err(Error::InvalidGraph(format!(
                "at most {MAX_AGENTS} agents supported, got {n}"
            )));
        }
        Ok(Digraph {
            n,
            in_masks: vec![0; n],
            out_masks: vec![0; n],
        })
    }

    /// Builds a graph from an explicit edge list; duplicates are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (AgentId, AgentId)>,
    {
        let mut g = Digraph::empty(n)?;
        for (i, j) in edges {
            if !g.add_edge(i, j)? {
                return Err(Error::DuplicateEdge(i, j));
            }
        }
        Ok(g)
    }

    /// Inserts `(from, to)`. Returns `false` if the edge was already present.
    pub fn add_edge(&mut self, from: AgentId, to: AgentId) -> Result<bool> {
        self.check(from)?;
        self.check(to)?;
        if from == to {
            return Err(Error::SelfLoop(from));
        }
        let present = self.has_edge(from, to);
        self.out_masks[from - 1] |= 1u64 << (to - 1);
        self.in_masks[to - 1] |= 1u64 << (from - 1);
        Ok(!present)
    }

    /// k-circulant digraph `C_n(1, ..., k)`: every agent transmits to the next `k` agents.
    pub fn k_circulant(n: usize, k: usize) -> Result<Self> {
        if n < 2 || k < 1 || k > n - 1 {
            return Err(Error::InvalidGraph(format!(
                "k-circulant needs n >= 2 and 1 <= k <= n-1, got n={n}, k={k}"
            )));
        }
        let mut g = Digraph::empty(n)?;
        for i in 1..=n {
            for a in 1..=k {
                g.add_edge(i, wrap(i, a as isize, n))?;
            }
        }
        Ok(g)
    }

    /// Undirected circulant `C_n(±a_1, ..., ±a_l)` stored as a symmetric digraph.
    pub fn undirected_circulant(n: usize, offsets: &[usize]) -> Result<Self> {
        let mut g = Digraph::empty(n)?;
        if offsets.is_empty() {
            return Err(Error::InvalidGraph("offset list is empty".into()));
        }
        if offsets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGraph(format!(
                "offsets must be strictly increasing, got {offsets:?}"
            )));
        }
        if offsets[0] == 0 || offsets[offsets.len() - 1] >= n {
            return Err(Error::InvalidGraph(format!(
                "offsets must lie in 1..{n}, got {offsets:?}"
            )));
        }
        for i in 1..=n {
            for &a in offsets {
                g.add_edge(i, wrap(i, a as isize, n))?;
                g.add_edge(i, wrap(i, -(a as isize), n))?;
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertices(&self) -> VertexSet {
        VertexSet::full(self.n)
    }

    fn check(&self, id: AgentId) -> Result<()> {
        if id == 0 || id > self.n {
            Err(Error::UnknownAgent { id, n: self.n })
        } else {
            Ok(())
        }
    }

    pub fn has_edge(&self, from: AgentId, to: AgentId) -> bool {
        (1..=self.n).contains(&from)
            && (1..=self.n).contains(&to)
            && self.out_masks[from - 1] & (1u64 << (to - 1)) != 0
    }

    /// `V_i = { j : (j, i) ∈ E }`.
    pub fn in_neighbors(&self, i: AgentId) -> Result<VertexSet> {
        self.check(i)?;
        Ok(VertexSet::from_mask(self.in_masks[i - 1]))
    }

    /// `J_i = V_i ∪ {i}`.
    pub fn inclusive_neighbors(&self, i: AgentId) -> Result<VertexSet> {
        let mut s = self.in_neighbors(i)?;
        s.insert(i);
        Ok(s)
    }

    pub fn out_neighbors(&self, i: AgentId) -> Result<VertexSet> {
        self.check(i)?;
        Ok(VertexSet::from_mask(self.out_masks[i - 1]))
    }

    /// Unchecked in-neighbor mask for hot loops; `i` is 1-based.
    #[inline]
    pub(crate) fn in_mask(&self, i: AgentId) -> u64 {
        self.in_masks[i - 1]
    }

    pub fn in_degree(&self, i: AgentId) -> usize {
        self.in_masks[i - 1].count_ones() as usize
    }

    pub fn out_degree(&self, i: AgentId) -> usize {
        self.out_masks[i - 1].count_ones() as usize
    }

    pub fn max_in_degree(&self) -> usize {
        self.in_masks.iter().map(|m| m.count_ones() as usize).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.out_masks.iter().map(|m| m.count_ones() as usize).sum()
    }

    /// Edges in ascending `(from, to)` order.
    pub fn edges(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        (1..=self.n).flat_map(move |i| VertexSet::from_mask(self.out_masks[i - 1]).iter().map(move |j| (i, j)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(i, j)| self.has_edge(j, i))
    }

    /// Serializes to the edge-list text format: a `n <count>` header then one `i j` per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for (i, j) in self.edges() {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    /// Parses the edge-list text format. `source` is only used in error messages.
    /// Anything after `#` is a comment; blank lines are ignored.
    pub fn parse_edge_list(text: &str, source: &str) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse {
            path: source.to_string(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines.next().ok_or_else(|| perr(1, "missing `n <count>` header".into()))?;
        let mut parts = header.split_whitespace();
        let n = match (parts.next(), parts.next(), parts.next()) {
            (Some("n"), Some(count), None) => count
                .parse::<usize>()
                .map_err(|e| perr(hline, format!("bad agent count {count:?}: {e}")))?,
            _ => return Err(perr(hline, format!("expected `n <count>`, got {header:?}"))),
        };
        let mut g = Digraph::empty(n).map_err(|e| perr(hline, e.to_string()))?;

        for (lineno, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(perr(lineno, format!("expected `i j`, got {line:?}")));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| perr(lineno, format!("bad agent id {s:?}: {e}")))
            };
            let (i, j) = (parse(fields[0])?, parse(fields[1])?);
            match g.add_edge(i, j) {
                Ok(true) => {}
                Ok(false) => return Err(perr(lineno, Error::DuplicateEdge(i, j).to_string())),
                Err(e) => return Err(perr(lineno, e.to_string())),
            }
        }
        Ok(g)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_edge_list()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Digraph::parse_edge_list(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            n: self.n,
            edges: self.edges().map(|(i, j)| [i, j]).collect(),
        }
    }
}

/// JSON form `{ "n": .., "edges": [[i, j], ...] }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[AgentId; 2]>,
}

impl TryFrom<GraphJson> for Digraph {
    type Error = Error;

    fn try_from(value: GraphJson) -> Result<Self> {
        Digraph::from_edges(value.n, value.edges.into_iter().map(|[i, j]| (i, j)))
    }
}

/// `((i - 1 + offset) mod n) + 1`, i.e. modular arithmetic on 1-based labels.
pub fn wrap(i: AgentId, offset: isize, n: usize) -> AgentId {
    let n = n as isize;
    ((i as isize - 1 + offset).rem_euclid(n) + 1) as AgentId
}
