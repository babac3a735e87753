//! `rcl`: robustness checks, scenario runs, custom simulations and sweeps for
//! resilient leader-follower consensus.
//!
//! JSON goes to stdout, logs to stderr. Exit codes: 0 verdict true / converged,
//! 1 verdict false / not converged, 2 usage or configuration error,
//! 3 precondition failure.

mod bundle;
mod ids;
mod plot;
mod sweep;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rcl_core::config::RunConfig;
use rcl_core::graph::GraphJson;
use rcl_core::protocol::{validate_f_local_over, FLocalCheck};
use rcl_core::robustness::{self as rob, CertificateMode, EnumerationLimits, RobustnessReport};
use rcl_core::scenarios::{self, outcome_holds, PreconditionResult};
use rcl_core::simulation::{run, Metrics};
use rcl_core::{Digraph, Error, VertexSet};

use bundle::MetricsFile;

#[derive(Parser)]
#[command(name = "rcl", version, about = "Resilient leader-follower consensus toolkit")]
struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a robustness property of a graph.
    Check(CheckArgs),
    /// Run a simulation from a JSON config.
    Run(RunArgs),
    /// Run a built-in scenario.
    Scenario(ScenarioArgs),
    /// Write a circulant graph as an edge list or JSON.
    GenGraph(GenGraphArgs),
    /// Sweep circulant leader-follower networks and tabulate robustness and convergence.
    Sweep(SweepArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Edge-list file (`.json` files are read as `{"n": .., "edges": [[i, j], ..]}`).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Directed k-circulant C_n(1..k).
    #[arg(long, num_args = 2, value_names = ["N", "K"])]
    circulant: Option<Vec<usize>>,
    /// Undirected circulant C_n(±offsets), offsets like `1,2,3` or `1-3`.
    #[arg(long, num_args = 2, value_names = ["N", "OFFSETS"])]
    undirected: Option<Vec<String>>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("property").required(true)))]
struct CheckArgs {
    #[command(flatten)]
    source: GraphSource,
    /// r-robustness (exact, capped by `RCL_ENUM_CAP`).
    #[arg(long, value_name = "R", group = "property")]
    r_robust: Option<usize>,
    /// (r,s)-robustness (exact, capped by `RCL_ENUM_CAP`).
    #[arg(long, num_args = 2, value_names = ["R", "S"], group = "property")]
    rs_robust: Option<Vec<usize>>,
    /// Strong r-robustness w.r.t. `--set`.
    #[arg(long, value_name = "R", group = "property")]
    strong: Option<usize>,
    /// TLF robustness with parameter F w.r.t. `--set`.
    #[arg(long, value_name = "F", group = "property")]
    tlf: Option<usize>,
    /// Circulant window certificate w.r.t. `--set` and `--f`.
    #[arg(long, value_enum, value_name = "MODE", group = "property")]
    certificate: Option<ModeArg>,
    /// r-reachability of `--set`.
    #[arg(long, value_name = "R", group = "property")]
    r_reach: Option<usize>,
    /// Largest r for which the graph is r-robust.
    #[arg(long, group = "property")]
    max_r: bool,
    /// Agent set, e.g. `1,4,5` or `22-28`.
    #[arg(long, value_parser = ids::parse_id_list)]
    set: Option<ids::IdList>,
    /// Adversary bound F for `--certificate`.
    #[arg(long)]
    f: Option<usize>,
    /// Algorithm for `--strong` and `--tlf`.
    #[arg(long, value_enum, default_value = "peeling")]
    method: MethodArg,
    /// Ignore enumeration caps.
    #[arg(long)]
    force: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Strong,
    Tlf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Bruteforce,
    Peeling,
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ScenarioArgs {
    /// One of sim1..sim4, counterexample-rs, counterexample-2f1, lemma1, lemma1-contrast.
    name: String,
    #[arg(long)]
    f: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long, num_args = 2, value_names = ["N", "K"], required_unless_present = "undirected", conflicts_with = "undirected")]
    circulant: Option<Vec<usize>>,
    #[arg(long, num_args = 2, value_names = ["N", "OFFSETS"])]
    undirected: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "edge-list")]
    format: GraphFormat,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    EdgeList,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// Agent counts, e.g. `10` or `8-12`.
    #[arg(long, value_parser = ids::parse_id_list)]
    n: ids::IdList,
    #[arg(long, value_parser = ids::parse_id_list)]
    k: ids::IdList,
    #[arg(long, value_parser = ids::parse_id_list)]
    f: ids::IdList,
    /// Leader window sizes w (leaders 1..=w).
    #[arg(long, value_parser = ids::parse_id_list)]
    window: ids::IdList,
    /// Use undirected circulants C_n(±1..±k).
    #[arg(long)]
    undirected: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    horizon: u64,
    /// Skip the per-cell simulation.
    #[arg(long)]
    no_sim: bool,
    /// Allow grids above the cell cap.
    #[arg(long)]
    force: bool,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Check(args) => cmd_check(args),
        Command::Run(args) => cmd_run(args),
        Command::Scenario(args) => cmd_scenario(args),
        Command::GenGraph(args) => cmd_gen_graph(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::Precondition(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn verdict_code(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).map_err(Error::from)?);
    Ok(())
}

fn parse_undirected(spec: &[String]) -> Result<(usize, Vec<usize>), Failure> {
    let n = spec[0]
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("bad agent count {:?}", spec[0])))?;
    let offsets = ids::parse_list(&spec[1]).map_err(Failure::Usage)?;
    Ok((n, offsets))
}

/// The graph plus `k` when it is a circulant with offsets `1..=k`.
fn load_graph(source: &GraphSource) -> Result<(Digraph, Option<usize>), Failure> {
    if let Some(path) = &source.graph {
        let g = if path.extension().is_some_and(|e| e == "json") {
            let text = fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            Digraph::try_from(serde_json::from_str::<GraphJson>(&text).map_err(Error::from)?)?
        } else {
            Digraph::load(path)?
        };
        return Ok((g, None));
    }
    if let Some(nk) = &source.circulant {
        return Ok((Digraph::k_circulant(nk[0], nk[1])?, Some(nk[1])));
    }
    let spec = source.undirected.as_ref().expect("clap enforces one graph source");
    let (n, offsets) = parse_undirected(spec)?;
    let g = Digraph::undirected_circulant(n, &offsets)?;
    let contiguous = offsets.iter().enumerate().all(|(i, &o)| o == i + 1);
    Ok((g, contiguous.then_some(offsets.len())))
}

fn cmd_check(args: CheckArgs) -> CmdResult {
    let (g, circulant_k) = load_graph(&args.source)?;
    let mut limits = EnumerationLimits::from_env();
    limits.force = args.force;
    let set = || -> Result<VertexSet, Failure> {
        let ids = args.set.clone().map(|l| l.0).ok_or_else(|| Failure::Usage("this property needs --set".into()))?;
        Ok(VertexSet::checked(g.n(), ids)?)
    };
    let bruteforce = args.method == MethodArg::Bruteforce;
    let start = Instant::now();

    if args.max_r {
        let r = rob::max_r_robustness(&g, &limits)?;
        print_json(&json!({
            "property": "max_r_robust",
            "n": g.n(),
            "max_r": r,
            "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
        }))?;
        return Ok(ExitCode::SUCCESS);
    }

    let report: RobustnessReport = if let Some(r) = args.r_robust {
        rob::is_r_robust(&g, r, &limits)?
    } else if let Some(rs) = &args.rs_robust {
        rob::is_rs_robust(&g, rs[0], rs[1], &limits)?
    } else if let Some(r) = args.strong {
        if bruteforce {
            rob::is_strongly_r_robust_bruteforce(&g, set()?, r, &limits)?
        } else {
            rob::is_strongly_r_robust_peeling(&g, set()?, r)?
        }
    } else if let Some(f) = args.tlf {
        if bruteforce {
            rob::is_tlf_robust_bruteforce(&g, set()?, f, &limits)?
        } else {
            rob::is_tlf_robust_peeling(&g, set()?, f)?
        }
    } else if let Some(r) = args.r_reach {
        rob::r_reachability(&g, set()?, r)?
    } else if let Some(mode) = args.certificate {
        let k = circulant_k.ok_or_else(|| {
            Failure::Usage("--certificate needs --circulant N K or --undirected N 1..k".into())
        })?;
        let f = args.f.ok_or_else(|| Failure::Usage("--certificate needs --f".into()))?;
        let mode = match mode {
            ModeArg::Strong => CertificateMode::Strong,
            ModeArg::Tlf => CertificateMode::Tlf,
        };
        rob::circulant_certificate(g.n(), k, set()?, f, mode)?
    } else {
        unreachable!("clap requires a property")
    };

    let mut value = serde_json::to_value(&report).map_err(Error::from)?;
    value["elapsed_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    print_json(&value)?;
    Ok(verdict_code(report.verdict))
}

#[derive(Serialize)]
struct RunReport<'a> {
    name: &'a str,
    config: &'a RunConfig,
    f_local: FLocalCheck,
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(horizon) = args.horizon {
        cfg.horizon = horizon;
    }
    let strict = cfg.strict_f_local;
    let base = args.config.parent().unwrap_or(Path::new("."));
    // F-locality is checked here so a violation maps to the precondition exit code
    let mut relaxed = cfg.clone();
    relaxed.strict_f_local = false;
    let sim = relaxed.to_sim_config(base)?;
    let f_local = validate_f_local_over(&sim.graph, sim.adversaries(), sim.f, sim.normals());

    let dir = bundle::bundle_dir(&args.out, &cfg.name)?;
    bundle::write_json(
        &dir,
        "report.json",
        &RunReport {
            name: &cfg.name,
            config: &cfg,
            f_local,
        },
    )?;
    if strict && !f_local.ok {
        return Err(Error::Precondition(format!(
            "adversary set is not {}-local: agent {} sees {} adversaries",
            sim.f,
            f_local.violator.unwrap_or(0),
            f_local.count
        ))
        .into());
    }

    eprintln!("running {} ({} agents, horizon {})", cfg.name, sim.graph.n(), sim.horizon);
    let traj = run(&sim)?;
    let metrics = Metrics::compute(&traj, sim.reference.as_ref(), cfg.tol);
    let text = bundle::write_run(
        &dir,
        &sim,
        &traj,
        &MetricsFile {
            name: &cfg.name,
            seed: cfg.seed,
            expected: None,
            outcome_met: None,
            metrics: &metrics,
        },
    )?;
    eprintln!("wrote {}", dir.display());
    print!("{text}");
    Ok(verdict_code(metrics.converged))
}

#[derive(Serialize)]
struct ScenarioReport<'a> {
    name: &'a str,
    description: &'a str,
    seed: u64,
    f: usize,
    preconditions: &'a [PreconditionResult],
}

fn cmd_scenario(args: ScenarioArgs) -> CmdResult {
    let scenario = scenarios::by_name(&args.name, args.f, args.seed)?;
    let config = &scenario.config;
    let results = scenario
        .preconditions
        .iter()
        .map(|p| p.evaluate(&config.graph))
        .collect::<rcl_core::Result<Vec<_>>>()?;

    let dir = bundle::bundle_dir(&args.out, &scenario.name)?;
    bundle::write_json(
        &dir,
        "report.json",
        &ScenarioReport {
            name: &scenario.name,
            description: &scenario.description,
            seed: config.seed,
            f: config.f,
            preconditions: &results,
        },
    )?;
    if let Some(failed) = results.iter().find(|r| !r.verdict) {
        return Err(Error::Precondition(format!("{}: {:?} does not hold", scenario.name, failed.check)).into());
    }

    eprintln!("running scenario {} (seed {})", scenario.name, config.seed);
    let traj = run(config)?;
    let metrics = Metrics::compute(&traj, config.reference.as_ref(), scenario.tol);
    let outcome_met = outcome_holds(&scenario.expected, &traj, &metrics);
    let text = bundle::write_run(
        &dir,
        config,
        &traj,
        &MetricsFile {
            name: &scenario.name,
            seed: config.seed,
            expected: Some(&scenario.expected),
            outcome_met: Some(outcome_met),
            metrics: &metrics,
        },
    )?;
    eprintln!(
        "wrote {} (expected outcome {})",
        dir.display(),
        if outcome_met { "met" } else { "NOT met" }
    );
    print!("{text}");
    Ok(verdict_code(metrics.converged))
}

fn cmd_gen_graph(args: GenGraphArgs) -> CmdResult {
    let g = match (&args.circulant, &args.undirected) {
        (Some(nk), _) => Digraph::k_circulant(nk[0], nk[1])?,
        (None, Some(spec)) => {
            let (n, offsets) = parse_undirected(spec)?;
            Digraph::undirected_circulant(n, &offsets)?
        }
        (None, None) => unreachable!("clap requires a graph spec"),
    };
    let text = match args.format {
        GraphFormat::EdgeList => g.to_edge_list(),
        GraphFormat::Json => {
            let mut s = serde_json::to_string(&g.to_json()).map_err(Error::from)?;
            s.push('\n');
            s
        }
    };
    match &args.out {
        Some(path) => {
            fs::write(path, text).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            eprintln!("wrote {} ({} agents, {} edges)", path.display(), g.n(), g.edge_count());
        }
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let grid = sweep::Grid {
        n: args.n.0,
        k: args.k.0,
        f: args.f.0,
        window: args.window.0,
        undirected: args.undirected,
    };
    if grid.size() > sweep::DEFAULT_CELL_CAP && !args.force {
        return Err(Failure::Usage(format!(
            "grid has {} cells, above the cap of {} (use --force)",
            grid.size(),
            sweep::DEFAULT_CELL_CAP
        )));
    }
    let (cells, skipped) = grid.cells();
    if skipped > 0 {
        eprintln!("skipping {skipped} invalid cells");
    }
    let settings = sweep::SimSettings {
        enabled: !args.no_sim,
        seed: args.seed,
        horizon: args.horizon,
    };
    let csv = sweep::run_sweep(&cells, grid.undirected, settings)?;
    match &args.out {
        Some(path) => {
            fs::write(path, csv).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            eprintln!("wrote {} ({} rows)", path.display(), cells.len());
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}
