//! JSON run configuration.
//!
//! ```json
//! {
//!   "name": "demo",
//!   "graph": { "type": "k_circulant", "n": 30, "k": 15 },
//!   "f": 3,
//!   "alpha_rule": { "rule": "equal" },
//!   "roles": { "22": "leader", "26": { "adversary": { "malicious": { "ramp": { "slope": 1, "intercept": 0 } } } } },
//!   "reference": [[0, 40.0]],
//!   "horizon": 500,
//!   "seed": 7,
//!   "init": { "uniform": { "lo": -25, "hi": 25 } }
//! }
//! ```
//!
//! Schema errors carry the JSON-pointer path of the offending value.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AgentId, Digraph, GraphJson};
use crate::protocol::{default_alpha, AgentRole, ReferenceSignal, WeightRule, WeightScheme};
use crate::simulation::{InitialStates, SimConfig, DEFAULT_HORIZON, DEFAULT_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    KCirculant { n: usize, k: usize },
    UndirectedCirculant { n: usize, offsets: Vec<usize> },
    Edges { n: usize, edges: Vec<[AgentId; 2]> },
    /// Edge-list file, relative to the config file's directory.
    File { path: PathBuf },
}

impl GraphSpec {
    pub fn build(&self, base_dir: &Path) -> Result<Digraph> {
        let wrap = |e: Error| Error::config("/graph", e.to_string());
        match self {
            GraphSpec::KCirculant { n, k } => Digraph::k_circulant(*n, *k).map_err(wrap),
            GraphSpec::UndirectedCirculant { n, offsets } => Digraph::undirected_circulant(*n, offsets).map_err(wrap),
            GraphSpec::Edges { n, edges } => Digraph::try_from(GraphJson {
                n: *n,
                edges: edges.clone(),
            })
            .map_err(wrap),
            GraphSpec::File { path } => Digraph::load(base_dir.join(path)).map_err(wrap),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaRule {
    /// Equal weights; `alpha` defaults to `1 / (max in-degree + 1)`.
    Equal {
        #[serde(default)]
        alpha: Option<f64>,
    },
    FixedTable {
        alpha: f64,
        table: BTreeMap<AgentId, BTreeMap<AgentId, f64>>,
    },
}

impl Default for AlphaRule {
    fn default() -> Self {
        AlphaRule::Equal { alpha: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub graph: GraphSpec,
    pub f: usize,
    #[serde(default)]
    pub alpha_rule: AlphaRule,
    /// Agents not listed are normal.
    #[serde(default)]
    pub roles: BTreeMap<String, AgentRole>,
    #[serde(default)]
    pub reference: Option<ReferenceSignal>,
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_init")]
    pub init: InitialStates,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_true")]
    pub strict_f_local: bool,
}

fn default_name() -> String {
    "run".into()
}

fn default_horizon() -> u64 {
    DEFAULT_HORIZON
}

fn default_init() -> InitialStates {
    InitialStates::Uniform { lo: -25.0, hi: 25.0 }
}

fn default_tol() -> f64 {
    DEFAULT_TOLERANCE
}

fn default_true() -> bool {
    true
}

impl RunConfig {
    /// Parses a config, reporting schema errors with a JSON pointer.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let pointer = json_pointer(err.path());
            Error::config(pointer, err.into_inner().to_string())
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RunConfig::from_json(&text)
    }

    /// Builds a validated [`SimConfig`]. `base_dir` resolves relative graph files.
    pub fn to_sim_config(&self, base_dir: &Path) -> Result<SimConfig> {
        let graph = self.graph.build(base_dir)?;
        let n = graph.n();
        let mut roles = vec![AgentRole::Normal; n];
        for (key, role) in &self.roles {
            let pointer = format!("/roles/{}", escape_pointer(key));
            let id: AgentId = key
                .trim()
                .parse()
                .map_err(|_| Error::config(&pointer, format!("{key:?} is not an agent id")))?;
            if id == 0 || id > n {
                return Err(Error::config(&pointer, format!("agent {id} is outside 1..={n}")));
            }
            roles[id - 1] = role.clone();
        }
        let weights = match &self.alpha_rule {
            AlphaRule::Equal { alpha } => WeightScheme {
                alpha: alpha.unwrap_or_else(|| default_alpha(&graph)),
                rule: WeightRule::Equal,
            },
            AlphaRule::FixedTable { alpha, table } => WeightScheme {
                alpha: *alpha,
                rule: WeightRule::FixedTable(table.clone()),
            },
        };
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::config("/tol", "tolerance must be positive"));
        }
        let config = SimConfig {
            graph,
            roles,
            f: self.f,
            weights,
            reference: self.reference.clone(),
            horizon: self.horizon,
            seed: self.seed,
            init: self.init.clone(),
            strict_f_local: self.strict_f_local,
        };
        config.validate()?;
        Ok(config)
    }
}

fn escape_pointer(segment: &str) -> String {
    segment.replace('~', "~0").replace('/', "~1")
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape_pointer(key))),
            Segment::Enum { variant } => out.push_str(&format!("/{}", escape_pointer(variant))),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{AdversaryStrategy, Signal};

    const SAMPLE: &str = r#"{
        "name": "demo",
        "graph": { "type": "k_circulant", "n": 10, "k": 7 },
        "f": 2,
        "roles": {
            "1": "leader", "4": "leader", "5": "leader",
            "8": { "adversary": { "malicious": { "ramp": { "slope": 1.0, "intercept": 0.0 } } } }
        },
        "reference": [[0, 40.0]],
        "horizon": 100,
        "seed": 3
    }"#;

    #[test]
    fn parses_sample() {
        let cfg = RunConfig::from_json(SAMPLE).unwrap();
        let sim = cfg.to_sim_config(Path::new(".")).unwrap();
        assert_eq!(sim.leaders().to_vec(), vec![1, 4, 5]);
        assert_eq!(
            sim.roles[7],
            AgentRole::Adversary(AdversaryStrategy::Malicious(Signal::Ramp {
                slope: 1.0,
                intercept: 0.0
            }))
        );
        assert!((sim.weights.alpha - 0.125).abs() < 1e-15);
        assert_eq!(sim.horizon, 100);
    }

    #[test]
    fn schema_errors_have_pointers() {
        let bad = SAMPLE.replace(r#""slope": 1.0"#, r#""slope": "steep""#);
        match RunConfig::from_json(&bad) {
            Err(Error::Config { pointer, .. }) => {
                assert_eq!(pointer, "/roles/8/adversary/malicious/ramp/slope")
            }
            other => panic!("unexpected {other:?}"),
        }

        let bad = SAMPLE.replace(r#""reference": [[0, 40.0]]"#, r#""reference": [[5, 40.0]]"#);
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config { .. })));

        let bad = SAMPLE.replace(r#""8": {"#, r#""11": {"#);
        let cfg = RunConfig::from_json(&bad).unwrap();
        match cfg.to_sim_config(Path::new(".")) {
            Err(Error::Config { pointer, .. }) => assert_eq!(pointer, "/roles/11"),
            other => panic!("unexpected {other:?}"),
        }

        let bad = SAMPLE.replace(r#""f": 2"#, r#""f": 2, "bogus": 1"#);
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn leaders_without_reference_rejected() {
        let bad = SAMPLE.replace(r#""reference": [[0, 40.0]],"#, "");
        let cfg = RunConfig::from_json(&bad).unwrap();
        assert!(matches!(cfg.to_sim_config(Path::new(".")), Err(Error::Config { .. })));
    }
}
