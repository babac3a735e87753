//! Parameter sweep over circulant leader-follower networks.
//!
//! Each cell `(n, k, F, w)` uses leaders `1..=w` on `C_n(1..k)` (or the
//! undirected `C_n(±1..±k)`), evaluates the window certificate and the peeling
//! check for strong `(2F+1)`-robustness and for TLF robustness, then optionally
//! simulates with the top `F` non-leader agents as oscillating adversaries.

use std::f64::consts::PI;
use std::fmt::Write;

use rayon::prelude::*;

use rcl_core::protocol::{AdversaryStrategy, AgentRole, ReferenceSignal, Signal};
use rcl_core::robustness::{circulant_certificate, is_strongly_r_robust_peeling, is_tlf_robust_peeling, CertificateMode};
use rcl_core::simulation::{run, Metrics, SimConfig, DEFAULT_TOLERANCE};
use rcl_core::{Digraph, Result, VertexSet};

pub const HEADER: &str = "n,k,f,window,cert_strong,peel_strong,cert_tlf,peel_tlf,convergence_round,final_error";

/// Cells allowed without `--force`.
pub const DEFAULT_CELL_CAP: usize = 10_000;

pub const SWEEP_REFERENCE: f64 = 40.0;

#[derive(Debug, Clone)]
pub struct Grid {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub f: Vec<usize>,
    pub window: Vec<usize>,
    pub undirected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub n: usize,
    pub k: usize,
    pub f: usize,
    pub window: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SimSettings {
    pub enabled: bool,
    pub seed: u64,
    pub horizon: u64,
}

impl Grid {
    pub fn size(&self) -> usize {
        self.n.len() * self.k.len() * self.f.len() * self.window.len()
    }

    /// Cells in grid order (n, then k, then F, then window), with invalid combinations dropped.
    pub fn cells(&self) -> (Vec<Cell>, usize) {
        let mut cells = Vec::new();
        let mut skipped = 0;
        for &n in &self.n {
            for &k in &self.k {
                for &f in &self.f {
                    for &window in &self.window {
                        let k_ok = if self.undirected { k >= 1 && 2 * k < n } else { k >= 1 && k < n };
                        if (2..=64).contains(&n) && k_ok && (1..=n).contains(&window) {
                            cells.push(Cell { n, k, f, window });
                        } else {
                            skipped += 1;
                        }
                    }
                }
            }
        }
        (cells, skipped)
    }
}

pub fn evaluate(cell: Cell, undirected: bool, sim: SimSettings) -> Result<String> {
    let Cell { n, k, f, window } = cell;
    let g = if undirected {
        Digraph::undirected_circulant(n, &(1..=k).collect::<Vec<_>>())?
    } else {
        Digraph::k_circulant(n, k)?
    };
    let leaders = VertexSet::from_ids(1..=window);
    let cert_strong = circulant_certificate(n, k, leaders, f, CertificateMode::Strong)?.verdict;
    let peel_strong = is_strongly_r_robust_peeling(&g, leaders, 2 * f + 1)?.verdict;
    let cert_tlf = circulant_certificate(n, k, leaders, f, CertificateMode::Tlf)?.verdict;
    let peel_tlf = is_tlf_robust_peeling(&g, leaders, f)?.verdict;

    let (mut round, mut error) = (String::new(), String::new());
    if sim.enabled && window + f < n {
        let mut config = SimConfig::new(g, f)
            .with_leaders(leaders)
            .with_reference(ReferenceSignal::constant(SWEEP_REFERENCE))
            .with_horizon(sim.horizon)
            .with_seed(sim.seed);
        for (j, agent) in (n - f + 1..=n).enumerate() {
            config = config.with_role(
                agent,
                AgentRole::Adversary(AdversaryStrategy::Malicious(Signal::Sinusoid {
                    amplitude: 50.0,
                    period: 40.0 + 10.0 * j as f64,
                    phase: j as f64 * PI / 3.0,
                    offset: SWEEP_REFERENCE,
                })),
            );
        }
        // an adversary set that is not F-local leaves the simulation columns empty
        if config.validate().is_ok() {
            let traj = run(&config)?;
            let metrics = Metrics::compute(&traj, config.reference.as_ref(), DEFAULT_TOLERANCE);
            if let Some(r) = metrics.convergence_round {
                round = r.to_string();
            }
            error = format!("{:?}", metrics.final_error);
        }
    }
    Ok(format!(
        "{n},{k},{f},{window},{cert_strong},{peel_strong},{cert_tlf},{peel_tlf},{round},{error}"
    ))
}

/// Evaluates every cell in parallel; rows come back in grid order.
pub fn run_sweep(cells: &[Cell], undirected: bool, sim: SimSettings) -> Result<String> {
    let rows: Vec<String> = cells
        .par_iter()
        .map(|&cell| evaluate(cell, undirected, sim))
        .collect::<Result<_>>()?;
    let mut out = String::from(HEADER);
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{row}");
    }
    Ok(out)
}
