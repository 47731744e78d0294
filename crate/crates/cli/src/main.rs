//! `qtda` command-line front end.

mod config;

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qtda_core::complex::{build_epsilon_graph, clique_density, enumerate_cliques, grover_cost_model, Graph};
use qtda_core::emulator::{lgz_run, write_sample_stream, NoiseModel, SuesSampler, SwesSampler};
use qtda_core::estimators::{
    abne_estimate, hoeffding_samples, llsd_estimate, numerical_rank, renyi_entropy, spectral_entropy,
    subtrace_estimate, EntropyMethod, LlsdConfig,
};
use qtda_core::homology::{betti_exact, combinatorial_laplacian, hodge_nullity, pad_laplacian};
use qtda_core::io::{read_edge_list, read_point_cloud};
use qtda_core::pipeline::{barcode_profile, benchmark, phase_bits_for_threshold, resource_estimate, ResourceMode};
use qtda_core::sparse_access::{read_triple_list, SparseAccessOracle, TripleListStore};
use qtda_core::Error;
use serde::Serialize;
use serde_json::Value;

use config::{CommandName, Method, RunConfig};

const DEFAULT_EPSILON: f64 = 0.05;
const DEFAULT_MU: f64 = 0.95;
const DEFAULT_T: u32 = 8;
const DEFAULT_ENTROPY_T: u32 = 16;
const DEFAULT_ENTROPY_SAMPLES: usize = 100_000;
const DEFAULT_SWES_SAMPLES: usize = 1000;

#[derive(Parser)]
#[command(name = "qtda", version, about = "Clique-complex homology and sampled spectral estimators")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the merged configuration as TOML and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Cmd>,

    #[command(flatten)]
    opts: RunConfig,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Clique counts, density and sampling cost of a graph.
    Complex,
    /// Betti numbers by exact rank, Laplacian nullity, or sampled estimate.
    Betti,
    /// Sampled Betti-number ratio from the emulated phase-estimation loop.
    Lgz,
    /// Low-lying spectral density.
    Llsd,
    /// Numerical rank.
    Rank,
    /// Eigenvalue-weighted (or uniform) spectral samples.
    Swes,
    /// Spectral entropy or Renyi entropy.
    Entropy,
    /// Histogram estimate of the low-lying subtrace.
    Subtrace,
    /// Betti numbers across a grid of scales.
    Barcode,
    /// Logical qubit counts.
    Resources,
    /// Sampled estimators against exact and classical baselines.
    Bench,
}

impl From<Cmd> for CommandName {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Complex => CommandName::Complex,
            Cmd::Betti => CommandName::Betti,
            Cmd::Lgz => CommandName::Lgz,
            Cmd::Llsd => CommandName::Llsd,
            Cmd::Rank => CommandName::Rank,
            Cmd::Swes => CommandName::Swes,
            Cmd::Entropy => CommandName::Entropy,
            Cmd::Subtrace => CommandName::Subtrace,
            Cmd::Barcode => CommandName::Barcode,
            Cmd::Resources => CommandName::Resources,
            Cmd::Bench => CommandName::Bench,
        }
    }
}

enum Failure {
    Validation(String),
    Infeasible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(_) | Error::DenseTooLarge { .. } | Error::NoCliques { .. } => {
                Failure::Infeasible(e.to_string())
            }
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Validation(msg.into()))
}

enum Output {
    Json(Value),
    Csv(Vec<u8>, Vec<Vec<String>>),
}

fn json<T: Serialize>(v: &T) -> CliResult<Output> {
    serde_json::to_value(v)
        .map(Output::Json)
        .map_err(|e| Failure::Validation(e.to_string()))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn load_graph(cfg: &RunConfig) -> CliResult<Graph> {
    if let Some(path) = &cfg.edges {
        return Ok(read_edge_list(open(path)?)?);
    }
    if let Some(path) = &cfg.points {
        let cloud = read_point_cloud(open(path)?)?;
        let Some(scale) = cfg.scale else {
            return invalid("a point cloud needs --scale");
        };
        return Ok(build_epsilon_graph(&cloud, scale)?);
    }
    invalid("give --edges or --points with --scale")
}

fn require_k(cfg: &RunConfig) -> CliResult<usize> {
    cfg.k.map_or_else(|| invalid("--k is required"), Ok)
}

fn load_matrix(cfg: &RunConfig) -> CliResult<TripleListStore> {
    if let Some(path) = &cfg.matrix {
        return Ok(read_triple_list(open(path)?)?);
    }
    let g = load_graph(cfg)?;
    let k = require_k(cfg)?;
    if cfg.padded {
        Ok(TripleListStore::from_oracle(&pad_laplacian(&g, k)?)?)
    } else {
        Ok(combinatorial_laplacian(&g, k)?)
    }
}

fn llsd_config(cfg: &RunConfig) -> CliResult<LlsdConfig> {
    let (Some(b), Some(delta)) = (cfg.b, cfg.delta) else {
        return invalid("--b and --delta are required");
    };
    let mut c = LlsdConfig::new(b, delta, cfg.epsilon.unwrap_or(DEFAULT_EPSILON), cfg.mu.unwrap_or(DEFAULT_MU));
    c.t = cfg.t;
    Ok(c)
}

fn run_complex(cfg: &RunConfig) -> CliResult<Output> {
    let g = load_graph(cfg)?;
    let ks: Vec<usize> = match cfg.k {
        Some(k) => vec![k],
        None => (0..g.n()).collect(),
    };
    let mut cliques = Vec::new();
    for k in ks {
        let chi = enumerate_cliques(&g, k)?.chi();
        if chi == 0 && cfg.k.is_none() {
            break;
        }
        let mut row = serde_json::json!({
            "k": k,
            "chi": chi,
            "density": clique_density(&g, k)?,
        });
        if chi > 0 {
            let cost = grover_cost_model(g.n(), k, chi as u64)?;
            row["rejection_trials"] = cost.rejection_trials.into();
            row["grover_queries"] = cost.grover_queries.into();
        }
        cliques.push(row);
    }
    Ok(Output::Json(serde_json::json!({
        "n": g.n(),
        "edges": g.edge_count(),
        "scale": g.epsilon(),
        "cliques": cliques,
    })))
}

fn run_betti(cfg: &RunConfig) -> CliResult<Output> {
    let g = load_graph(cfg)?;
    let method = cfg.method.unwrap_or(Method::Rank);
    let ks: Vec<usize> = match (cfg.k, cfg.k_max) {
        (Some(k), _) => vec![k],
        (None, k_max) => (0..g.n().min(k_max.map_or(usize::MAX, |m| m + 1)))
            .take_while(|&k| enumerate_cliques(&g, k).is_ok_and(|c| !c.is_empty()))
            .collect(),
    };
    let mut out = Vec::new();
    for k in ks {
        let v = match method {
            Method::Rank | Method::Exact => serde_json::to_value(betti_exact(&g, k)?),
            Method::Hodge => serde_json::to_value(hodge_nullity(&g, k, cfg.tol)?),
            Method::Abne => {
                let Some(delta) = cfg.delta else {
                    return invalid("--delta is required for abne");
                };
                let est = abne_estimate(
                    &g,
                    k,
                    delta,
                    cfg.epsilon.unwrap_or(DEFAULT_EPSILON),
                    cfg.mu.unwrap_or(DEFAULT_MU),
                    cfg.seed.unwrap_or(0),
                )?;
                serde_json::to_value(est)
            }
            Method::Sampled => return invalid("betti methods are rank, hodge, abne"),
        }
        .map_err(|e| Failure::Validation(e.to_string()))?;
        out.push(v);
    }
    Ok(Output::Json(if cfg.k.is_some() {
        out.pop().unwrap_or(Value::Null)
    } else {
        Value::Array(out)
    }))
}

fn run_lgz(cfg: &RunConfig) -> CliResult<Output> {
    let g = load_graph(cfg)?;
    let k = require_k(cfg)?;
    let mu = cfg.mu.unwrap_or(DEFAULT_MU);
    let samples = match cfg.samples {
        Some(m) => m,
        None => hoeffding_samples(cfg.epsilon.unwrap_or(DEFAULT_EPSILON), mu)?,
    };
    let bound = combinatorial_laplacian(&g, k)?.gershgorin_bound()?;
    let model = NoiseModel::for_bound(cfg.t.unwrap_or(DEFAULT_T), bound, 1.0 - mu)?;
    json(&lgz_run(&g, k, model, samples, cfg.seed.unwrap_or(0))?)
}

fn run_llsd(cfg: &RunConfig, rank: bool) -> CliResult<Output> {
    let h = load_matrix(cfg)?;
    let c = llsd_config(cfg)?;
    let seed = cfg.seed.unwrap_or(0);
    if rank {
        json(&numerical_rank(&h, &c, seed)?)
    } else {
        json(&llsd_estimate(&h, &c, seed)?)
    }
}

fn run_swes(cfg: &RunConfig) -> CliResult<Output> {
    let h = load_matrix(cfg)?;
    let t = cfg.t.unwrap_or(DEFAULT_T);
    let samples = cfg.samples.unwrap_or(DEFAULT_SWES_SAMPLES);
    let seed = cfg.seed.unwrap_or(0);
    let miss = 1.0 - cfg.mu.unwrap_or(DEFAULT_MU);
    let (stream, model, cost) = if cfg.uniform {
        let model = NoiseModel::for_bound(t, h.gershgorin_bound()?, miss)?;
        (SuesSampler::new(&h, model)?.stream(samples, seed), model, None)
    } else {
        let model = NoiseModel::for_bound(t, 1.0, miss)?;
        let s = SwesSampler::new(&h, model)?;
        (s.stream(samples, seed), model, Some(s.amplification_cost()))
    };
    if let Some(path) = &cfg.stream {
        write_sample_stream(&stream, File::create(path)?)?;
    }
    let mean = stream.iter().map(|s| s.value).sum::<f64>() / samples as f64;
    let mut v = serde_json::json!({
        "source": if cfg.uniform { "sues" } else { "swes" },
        "samples": samples,
        "seed": seed,
        "t": t,
        "resolution": model.resolution(),
        "mean": mean,
    });
    if let Some(c) = cost {
        v["amplification_cost"] = c.into();
    }
    Ok(Output::Json(v))
}

fn run_entropy(cfg: &RunConfig) -> CliResult<Output> {
    let h = load_matrix(cfg)?;
    let method = match cfg.method.unwrap_or(Method::Exact) {
        Method::Exact => EntropyMethod::Exact,
        Method::Sampled => EntropyMethod::Sampled {
            samples: cfg.samples.unwrap_or(DEFAULT_ENTROPY_SAMPLES),
            t: cfg.t.unwrap_or(DEFAULT_ENTROPY_T),
            seed: cfg.seed.unwrap_or(0),
        },
        _ => return invalid("entropy methods are exact, sampled"),
    };
    let report = match cfg.alpha {
        Some(alpha) => renyi_entropy(&h, alpha, method)?,
        None => spectral_entropy(&h, method)?,
    };
    json(&if cfg.bits { report.in_bits() } else { report })
}

fn run_subtrace(cfg: &RunConfig) -> CliResult<Output> {
    let h = load_matrix(cfg)?;
    let Some(b) = cfg.b else {
        return invalid("--b is required");
    };
    let bins = cfg.bins.unwrap_or(8);
    let delta = cfg.delta.unwrap_or(b / bins as f64 / 2.0);
    json(&subtrace_estimate(
        &h,
        b,
        bins,
        delta,
        cfg.epsilon.unwrap_or(DEFAULT_EPSILON),
        cfg.mu.unwrap_or(DEFAULT_MU),
        cfg.seed.unwrap_or(0),
    )?)
}

fn run_barcode(cfg: &RunConfig) -> CliResult<Output> {
    let Some(path) = &cfg.points else {
        return invalid("--points is required");
    };
    let Some(scales) = &cfg.scales else {
        return invalid("--scales is required");
    };
    let cloud = read_point_cloud(open(path)?)?;
    let table = barcode_profile(&cloud, scales, cfg.k_max.unwrap_or(1))?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    let rows = String::from_utf8_lossy(&csv)
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok(Output::Csv(csv, rows))
}

fn run_resources(cfg: &RunConfig) -> CliResult<Output> {
    let Some(n) = cfg.n else {
        return invalid("--n is required");
    };
    let t = match (cfg.t, cfg.threshold) {
        (Some(t), _) => Some(t as u64),
        (None, Some(th)) => Some(phase_bits_for_threshold(th)? as u64),
        (None, None) => None,
    };
    match &cfg.mode {
        Some(name) => {
            let mode: ResourceMode = name.parse()?;
            json(&resource_estimate(n, cfg.r, t, cfg.m, mode)?)
        }
        None => {
            let all: Vec<_> = ResourceMode::ALL
                .into_iter()
                .filter_map(|mode| resource_estimate(n, cfg.r, t, cfg.m, mode).ok())
                .collect();
            json(&all)
        }
    }
}

fn run_bench(cfg: &RunConfig) -> CliResult<Output> {
    let Some(bench) = &cfg.bench else {
        return invalid("bench needs a [bench] table in the configuration file");
    };
    json(&benchmark(bench)?)
}

fn render_human(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_human(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k}: {}\n", scalar(val))),
                }
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                out.push_str(&format!("{pad}[{i}]\n"));
                render_human(item, indent + 1, out);
            }
        }
        _ => out.push_str(&format!("{pad}{}\n", scalar(v))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn render_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().enumerate().map(|(i, c)| format!("{c:>w$}", w = widths[i])).collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

fn emit(out: Output, cfg: &RunConfig) -> CliResult<()> {
    let bytes = match (out, cfg.human) {
        (Output::Json(v), false) => {
            let mut s = serde_json::to_string_pretty(&v).map_err(|e| Failure::Validation(e.to_string()))?;
            s.push('\n');
            s.into_bytes()
        }
        (Output::Json(v), true) => {
            let mut s = String::new();
            render_human(&v, 0, &mut s);
            s.into_bytes()
        }
        (Output::Csv(raw, _), false) => raw,
        (Output::Csv(_, rows), true) => render_table(&rows).into_bytes(),
    };
    match &cfg.output {
        Some(path) => File::create(path)?.write_all(&bytes)?,
        None => io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            RunConfig::from_toml(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let mut cfg = cli.opts.over(&file);
    if let Some(cmd) = cli.command {
        cfg.command = Some(cmd.into());
    }
    cfg.validate().map_err(Failure::Validation)?;
    if cli.print_config {
        let text = cfg.to_toml().map_err(Failure::Validation)?;
        io::stdout().lock().write_all(text.as_bytes())?;
        return Ok(());
    }
    let Some(command) = cfg.command else {
        return invalid("no command given");
    };
    let out = match command {
        CommandName::Complex => run_complex(&cfg)?,
        CommandName::Betti => run_betti(&cfg)?,
        CommandName::Lgz => run_lgz(&cfg)?,
        CommandName::Llsd => run_llsd(&cfg, false)?,
        CommandName::Rank => run_llsd(&cfg, true)?,
        CommandName::Swes => run_swes(&cfg)?,
        CommandName::Entropy => run_entropy(&cfg)?,
        CommandName::Subtrace => run_subtrace(&cfg)?,
        CommandName::Barcode => run_barcode(&cfg)?,
        CommandName::Resources => run_resources(&cfg)?,
        CommandName::Bench => run_bench(&cfg)?,
    };
    emit(out, &cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
