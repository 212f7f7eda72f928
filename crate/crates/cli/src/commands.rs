//! The `run`, `gen` and `bench` subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use dyncc::baseline::{clustering_from_state, compute_agreement_state_counted};
use dyncc::harness::{
    gen_ops, gen_planted, run_workload, ExperimentConfig, GeneratorParams, OpMix, Probability,
};
use dyncc::{
    Engine, EngineConfig, Epsilon, Maintenance, Neighborhood, Operation, Pruning, SignedGraph,
};

use crate::format::{parse_graph, parse_ops, serialize_graph, serialize_ops, FormatError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DIVERGENCE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

pub const BENCH_SCHEMA: &str = "dyncc-bench/1";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Format { path: PathBuf, source: FormatError },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        EXIT_INPUT
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dyncc",
    version,
    about = "Dynamic correlation clustering on signed graphs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply an operation file to a graph and write a JSON report.
    Run(RunConfig),
    /// Generate a planted-partition graph and a valid operation stream.
    Gen(GenConfig),
    /// Compare online work with a from-scratch recompute at every step.
    Bench(BenchConfig),
}

#[derive(Debug, Clone, Args)]
pub struct ModeArgs {
    /// Agreement threshold as an exact rational P/Q.
    #[arg(long = "epsilon", default_value = "2/5")]
    pub eps: Epsilon,
    #[arg(long, default_value = "corrected")]
    pub pruning: Pruning,
    #[arg(long, default_value = "frontier")]
    pub maintenance: Maintenance,
    #[arg(long, default_value = "open")]
    pub neighborhood: Neighborhood,
}

impl ModeArgs {
    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig::new(self.eps)
            .with_pruning(self.pruning)
            .with_maintenance(self.maintenance)
            .with_neighborhood(self.neighborhood)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long = "graph")]
    pub graph_path: PathBuf,
    #[arg(long = "ops")]
    pub ops_path: PathBuf,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Compare with the offline algorithm after every step.
    #[arg(long)]
    pub check: bool,
    /// Exit with status 1 if any checked step diverges.
    #[arg(long, requires = "check")]
    pub strict: bool,
    /// Write the report here instead of standard output.
    #[arg(long = "report")]
    pub report_path: Option<PathBuf>,
    /// Recorded in the report for bookkeeping.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value = "3/10")]
    pub p: Probability,
    #[arg(long, default_value = "1/100")]
    pub q: Probability,
    /// Number of operations to generate.
    #[arg(long = "ops", default_value_t = 200)]
    pub op_count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub flip_weight: u32,
    #[arg(long, default_value_t = 1)]
    pub add_weight: u32,
    #[arg(long, default_value_t = 1)]
    pub del_weight: u32,
}

impl GeneratorArgs {
    pub fn params(&self) -> Result<GeneratorParams, CliError> {
        let params = GeneratorParams {
            n: self.n,
            k: self.k,
            p: self.p,
            q: self.q,
            op_count: self.op_count,
            op_mix: OpMix {
                flip: self.flip_weight,
                add: self.add_weight,
                delete: self.del_weight,
            },
            seed: self.seed,
        };
        params
            .validate()
            .map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenConfig {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value = "graph.txt")]
    pub out_graph: PathBuf,
    #[arg(long, default_value = "ops.txt")]
    pub out_ops: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchConfig {
    /// Use this graph instead of generating one.
    #[arg(long = "graph", requires = "ops_path")]
    pub graph_path: Option<PathBuf>,
    #[arg(long = "ops-file", requires = "graph_path")]
    pub ops_path: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    pub modes: ModeArgs,
    /// Only flips by default, matching the benchmark setting.
    #[arg(long, default_value_t = false)]
    pub mixed: bool,
    #[arg(long = "report")]
    pub report_path: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(path: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize") + "\n";
    match path {
        Some(p) => write(p, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn load_inputs(graph: &Path, ops: &Path) -> Result<(SignedGraph, Vec<Operation>), CliError> {
    let g = parse_graph(&read(graph)?).map_err(|source| CliError::Format {
        path: graph.to_path_buf(),
        source,
    })?;
    let ops = parse_ops(&read(ops)?).map_err(|source| CliError::Format {
        path: ops.to_path_buf(),
        source,
    })?;
    Ok((g, ops))
}

/// Returns the process exit status.
pub fn cmd_run(cfg: &RunConfig) -> Result<u8, CliError> {
    let (g, ops) = load_inputs(&cfg.graph_path, &cfg.ops_path)?;
    let config = ExperimentConfig {
        engine: cfg.modes.engine_config(),
        generator: None,
        check: cfg.check,
    };
    let report = run_workload(config, g, &ops);
    let mut value = serde_json::to_value(&report).expect("reports serialize");
    value["config"]["seed"] = json!(cfg.seed);
    value["config"]["graph"] = json!(cfg.graph_path);
    value["config"]["ops"] = json!(cfg.ops_path);
    emit(cfg.report_path.as_deref(), &value)?;
    eprintln!(
        "{} steps, {} applied, {} rejected, {} divergences",
        report.totals.steps,
        report.totals.applied,
        report.totals.rejected,
        report.totals.divergences
    );
    if cfg.strict && !report.witnesses.is_empty() {
        return Ok(EXIT_DIVERGENCE);
    }
    Ok(EXIT_OK)
}

pub fn cmd_gen(cfg: &GenConfig) -> Result<u8, CliError> {
    let params = cfg.generator.params()?;
    let g = gen_planted(&params);
    let ops = gen_ops(&params, &g);
    write(&cfg.out_graph, &serialize_graph(&g))?;
    write(&cfg.out_ops, &serialize_ops(&ops))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchStep {
    pub t: u64,
    pub op: Operation,
    pub applied: bool,
    pub online_na_evaluations: u64,
    pub online_ns: u64,
    pub baseline_na_evaluations: u64,
    pub baseline_ns: u64,
    /// Online over baseline evaluations; `None` when the graph has no edges.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchTotals {
    pub steps: u64,
    pub flips: u64,
    pub online_na_evaluations: u64,
    pub baseline_na_evaluations: u64,
    pub online_ns: u64,
    pub baseline_ns: u64,
    pub ratio: Option<f64>,
    /// Every applied flip used strictly fewer evaluations than `|E⁺|`.
    pub online_below_baseline: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema: String,
    pub config: serde_json::Value,
    pub steps: Vec<BenchStep>,
    pub totals: BenchTotals,
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, CliError> {
    let (g, ops, source) = match (&cfg.graph_path, &cfg.ops_path) {
        (Some(gp), Some(op)) => {
            let (g, ops) = load_inputs(gp, op)?;
            (g, ops, json!({ "graph": gp, "ops": op }))
        }
        _ => {
            let mut params = cfg.generator.params()?;
            if !cfg.mixed {
                params.op_mix = OpMix::flips_only();
            }
            let g = gen_planted(&params);
            let ops = gen_ops(&params, &g);
            (
                g,
                ops,
                serde_json::to_value(params).expect("params serialize"),
            )
        }
    };
    let engine_cfg = cfg.modes.engine_config().with_track_cost(false);
    let mut engine = Engine::new(g, engine_cfg);
    let mut steps = Vec::with_capacity(ops.len());
    let mut totals = BenchTotals {
        online_below_baseline: true,
        ..BenchTotals::default()
    };
    for op in ops {
        let r = engine.apply(op);
        let started = Instant::now();
        let (state, evaluations) = compute_agreement_state_counted(
            engine.graph(),
            engine_cfg.eps,
            engine_cfg.neighborhood,
        );
        let offline = clustering_from_state(engine.graph(), &state, 0);
        let baseline_ns = started.elapsed().as_nanos() as u64;
        debug_assert_eq!(offline.len(), engine.clustering().len());
        let applied = r.status.is_applied();
        if applied && matches!(op, Operation::FlipSign { .. }) {
            totals.flips += 1;
            if r.na_evaluations >= evaluations {
                totals.online_below_baseline = false;
            }
        }
        totals.steps += 1;
        totals.online_na_evaluations += r.na_evaluations;
        totals.baseline_na_evaluations += evaluations;
        totals.online_ns += r.elapsed_ns;
        totals.baseline_ns += baseline_ns;
        steps.push(BenchStep {
            t: r.t,
            op,
            applied,
            online_na_evaluations: r.na_evaluations,
            online_ns: r.elapsed_ns,
            baseline_na_evaluations: evaluations,
            baseline_ns,
            ratio: (evaluations > 0).then(|| r.na_evaluations as f64 / evaluations as f64),
        });
    }
    totals.ratio = (totals.baseline_na_evaluations > 0)
        .then(|| totals.online_na_evaluations as f64 / totals.baseline_na_evaluations as f64);
    Ok(BenchReport {
        schema: BENCH_SCHEMA.to_string(),
        config: json!({ "engine": engine_cfg, "workload": source }),
        steps,
        totals,
    })
}

pub fn cmd_bench(cfg: &BenchConfig) -> Result<u8, CliError> {
    let report = run_bench(cfg)?;
    emit(cfg.report_path.as_deref(), &report)?;
    let t = &report.totals;
    eprintln!(
        "{} steps: online {} vs baseline {} evaluations (ratio {}), online {:.3} ms vs baseline {:.3} ms",
        t.steps,
        t.online_na_evaluations,
        t.baseline_na_evaluations,
        t.ratio.map_or("n/a".to_string(), |r| format!("{r:.5}")),
        t.online_ns as f64 / 1e6,
        t.baseline_ns as f64 / 1e6
    );
    Ok(EXIT_OK)
}

/// Runs a parsed command line and maps failures to exit status 2.
pub fn dispatch(cli: &Cli) -> u8 {
    let result = match &cli.command {
        Command::Run(cfg) => cmd_run(cfg),
        Command::Gen(cfg) => cmd_gen(cfg),
        Command::Bench(cfg) => cmd_bench(cfg),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}
