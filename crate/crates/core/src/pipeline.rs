//! Barcode profiles, qubit resource estimates, and benchmark orchestration.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{binomial, build_epsilon_graph, enumerate_cliques, grover_cost_model, Graph, PointCloud};
use crate::emulator::{lgz_run, NoiseModel};
use crate::error::{Error, Result};
use crate::estimators::{eigencount_exact, eigencount_stochastic, hoeffding_samples};
use crate::homology::{betti_exact, combinatorial_laplacian, spectral_extrema};
use crate::seed::{derive_seed, rng_from_seed};
use crate::sparse_access::SparseAccessOracle;
use crate::spectrum::DENSE_CEILING;

/// Marker written in place of a Betti number for oversize cells.
pub const SKIPPED: &str = "skipped";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarcodeRow {
    pub epsilon: f64,
    /// `None` where the clique basis exceeds the dense ceiling.
    pub betti: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarcodeTable {
    pub k_max: usize,
    pub rows: Vec<BarcodeRow>,
}

impl BarcodeTable {
    /// CSV with columns `epsilon,beta_0,…,beta_kmax`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["epsilon".to_string()];
        header.extend((0..=self.k_max).map(|k| format!("beta_{k}")));
        wr.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![format!("{:?}", row.epsilon)];
            rec.extend(
                row.betti
                    .iter()
                    .map(|b| b.map_or_else(|| SKIPPED.to_string(), |v| v.to_string())),
            );
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Exact `β_k` for every scale and `k ≤ k_max`. Dimensions without cliques
/// have `β_k = 0`; cells whose boundary matrices exceed the dense ceiling
/// are marked skipped.
pub fn barcode_profile(cloud: &PointCloud, epsilons: &[f64], k_max: usize) -> Result<BarcodeTable> {
    if epsilons.is_empty() {
        return Err(Error::EmptyInput);
    }
    if epsilons.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::InvalidParameter("scales must be finite and nonnegative".into()));
    }
    if epsilons.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("scales must be sorted ascending".into()));
    }
    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            let g = build_epsilon_graph(cloud, eps)?;
            let betti = (0..=k_max).map(|k| barcode_cell(&g, k)).collect::<Result<Vec<_>>>()?;
            Ok(BarcodeRow { epsilon: eps, betti })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BarcodeTable { k_max, rows })
}

fn barcode_cell(g: &Graph, k: usize) -> Result<Option<usize>> {
    if k >= g.n() {
        return Ok(Some(0));
    }
    let chi = enumerate_cliques(g, k)?.chi();
    if chi == 0 {
        return Ok(Some(0));
    }
    let up = if k + 1 < g.n() {
        enumerate_cliques(g, k + 1)?.chi()
    } else {
        0
    };
    if chi > DENSE_CEILING || up > DENSE_CEILING {
        return Ok(None);
    }
    Ok(Some(betti_exact(g, k)?.betti))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceMode {
    SparseAccess,
    Lcu,
    LocalTrotter,
    CounterRegister,
    SingleQubitRegister,
}

impl ResourceMode {
    pub const ALL: [ResourceMode; 5] = [
        ResourceMode::SparseAccess,
        ResourceMode::Lcu,
        ResourceMode::LocalTrotter,
        ResourceMode::CounterRegister,
        ResourceMode::SingleQubitRegister,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResourceMode::SparseAccess => "sparse_access",
            ResourceMode::Lcu => "lcu",
            ResourceMode::LocalTrotter => "local_trotter",
            ResourceMode::CounterRegister => "counter_register",
            ResourceMode::SingleQubitRegister => "single_qubit_register",
        }
    }
}

impl fmt::Display for ResourceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ResourceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ResourceMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown resource mode {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResourceReport {
    pub mode: ResourceMode,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u64>,
    pub qubit_count: u64,
}

fn ceil_log2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        (64 - (x - 1).leading_zeros()) as u64
    }
}

fn require(name: &str, v: Option<u64>, mode: ResourceMode) -> Result<u64> {
    match v {
        Some(0) => Err(Error::InvalidParameter(format!("{name} must be positive"))),
        Some(x) => Ok(x),
        None => Err(Error::InvalidParameter(format!("mode {mode} requires {name}"))),
    }
}

/// Logical qubit count for one simulation mode:
/// sparse access `2n+r+1+t`, LCU `n+⌈log₂m⌉+t`, local Trotter `n+t`,
/// counter register `n+⌈log₂t⌉`, single-qubit register `n+1`.
pub fn resource_estimate(
    n: u64,
    r: Option<u64>,
    t: Option<u64>,
    m: Option<u64>,
    mode: ResourceMode,
) -> Result<ResourceReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let qubit_count = match mode {
        ResourceMode::SparseAccess => 2 * n + require("r", r, mode)? + 1 + require("t", t, mode)?,
        ResourceMode::Lcu => n + ceil_log2(require("m", m, mode)?) + require("t", t, mode)?,
        ResourceMode::LocalTrotter => n + require("t", t, mode)?,
        ResourceMode::CounterRegister => n + ceil_log2(require("t", t, mode)?),
        ResourceMode::SingleQubitRegister => n + 1,
    };
    let keep = |name: &str, v: Option<u64>| -> Result<Option<u64>> {
        v.map(|x| require(name, Some(x), mode)).transpose()
    };
    Ok(ResourceReport {
        mode,
        n,
        r: keep("r", r)?,
        t: keep("t", t)?,
        m: keep("m", m)?,
        qubit_count,
    })
}

/// Phase bits resolving a relative threshold: `⌈log₂(1/threshold)⌉`.
pub fn phase_bits_for_threshold(threshold: f64) -> Result<u32> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in (0, 1), got {threshold}")));
    }
    Ok((1.0 / threshold).log2().ceil() as u32)
}

/// Graph family for a benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    Cycle { n: usize },
    Complete { n: usize },
    Path { n: usize },
    Empty { n: usize },
    /// `G(n, p)`, redrawn for every seed.
    Random { n: usize, p: f64 },
    Edges { n: usize, edges: Vec<(usize, usize)> },
}

impl Family {
    fn graph(&self, seed: u64) -> Result<Graph> {
        match self {
            Family::Cycle { n } => Graph::cycle(*n),
            Family::Complete { n } => Graph::complete(*n),
            Family::Path { n } => Graph::path(*n),
            Family::Empty { n } => Graph::empty(*n),
            Family::Random { n, p } => Graph::random(*n, *p, &mut rng_from_seed(derive_seed(seed, u64::MAX))),
            Family::Edges { n, edges } => Graph::from_edges(*n, edges),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub name: String,
    pub k: usize,
    #[serde(flatten)]
    pub family: Family,
}

fn default_seeds() -> u64 {
    20
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_confidence() -> f64 {
    0.95
}
fn default_t() -> u32 {
    8
}
fn default_degree() -> usize {
    300
}
fn default_probes() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_t")]
    pub t: u32,
    #[serde(default = "default_degree")]
    pub kpm_degree: usize,
    #[serde(default = "default_probes")]
    pub kpm_probes: usize,
    #[serde(rename = "instance")]
    pub instances: Vec<InstanceSpec>,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.instances.is_empty() {
            return Err(Error::InvalidParameter("benchmark needs at least one instance".into()));
        }
        if self.seeds == 0 {
            return Err(Error::InvalidParameter("seeds must be positive".into()));
        }
        if self.kpm_degree == 0 || self.kpm_probes == 0 {
            return Err(Error::InvalidParameter("kpm degree and probes must be positive".into()));
        }
        hoeffding_samples(self.epsilon, self.confidence)?;
        NoiseModel::for_bound(self.t, 1.0, 1.0 - self.confidence)?;
        Ok(())
    }
}

/// One `(instance, seed)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchCell {
    pub instance: String,
    pub seed: u64,
    pub k: usize,
    pub n: usize,
    pub chi: usize,
    pub density: f64,
    /// `β_k / χ_k` by exact rank.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lgz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lgz_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub within_epsilon: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kpm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kpm_matvecs: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min_nonzero: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection_trials: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grover_queries: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSummary {
    pub instance: String,
    pub cells: usize,
    pub evaluated: usize,
    /// Share of evaluated cells with the sampled estimate within `ε`.
    pub within_fraction: f64,
    pub mean_lgz_error: f64,
    pub mean_kpm_error: f64,
    pub total_samples: u64,
    pub total_matvecs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub epsilon: f64,
    pub confidence: f64,
    pub t: u32,
    pub summaries: Vec<InstanceSummary>,
    pub cells: Vec<BenchCell>,
}

fn run_cell(cfg: &BenchConfig, spec: &InstanceSpec, seed: u64) -> Result<BenchCell> {
    let g = spec.family.graph(seed)?;
    let k = spec.k;
    let mut cell = BenchCell {
        instance: spec.name.clone(),
        seed,
        k,
        n: g.n(),
        chi: 0,
        density: 0.0,
        exact: None,
        lgz: None,
        lgz_samples: None,
        within_epsilon: None,
        kpm: None,
        kpm_matvecs: None,
        lambda_min_nonzero: None,
        resolution: None,
        rejection_trials: None,
        grover_queries: None,
        skipped: None,
    };
    if k >= g.n() {
        cell.skipped = Some("k exceeds the vertex count".into());
        return Ok(cell);
    }
    let chi = enumerate_cliques(&g, k)?.chi();
    cell.chi = chi;
    cell.density = chi as f64 / binomial(g.n(), k + 1) as f64;
    if chi == 0 {
        cell.skipped = Some("no cliques".into());
        return Ok(cell);
    }
    if chi > DENSE_CEILING {
        cell.skipped = Some(SKIPPED.into());
        return Ok(cell);
    }
    let cost = grover_cost_model(g.n(), k, chi as u64)?;
    cell.rejection_trials = Some(cost.rejection_trials);
    cell.grover_queries = Some(cost.grover_queries);

    let report = betti_exact(&g, k)?;
    let exact = report.betti as f64 / chi as f64;
    cell.exact = Some(exact);

    let lap = combinatorial_laplacian(&g, k)?;
    let extrema = spectral_extrema(&lap)?;
    cell.lambda_min_nonzero = extrema.lambda_min_nonzero;
    let model = NoiseModel::for_bound(cfg.t, lap.gershgorin_bound()?, 1.0 - cfg.confidence)?;
    cell.resolution = Some(model.resolution());

    let m = hoeffding_samples(cfg.epsilon, cfg.confidence)?;
    let est = lgz_run(&g, k, model, m, seed)?;
    cell.lgz = Some(est.value);
    cell.lgz_samples = Some(m);
    cell.within_epsilon = Some((est.value - exact).abs() <= cfg.epsilon);

    let kpm = eigencount_stochastic(&lap, model.resolution() / 2.0, cfg.kpm_degree, cfg.kpm_probes, seed)?;
    cell.kpm = Some(kpm.value);
    cell.kpm_matvecs = Some(kpm.matvec_or_sample_count);
    debug_assert!((eigencount_exact(&lap, 0.0, 0.0)? - exact).abs() < 1e-12);
    Ok(cell)
}

/// Runs every `(instance, seed)` cell in parallel. Seeds are
/// `seed, seed+1, …`; output order follows the configuration.
pub fn benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let jobs: Vec<(&InstanceSpec, u64)> = cfg
        .instances
        .iter()
        .flat_map(|spec| (0..cfg.seeds).map(move |i| (spec, cfg.seed.wrapping_add(i))))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|(spec, seed)| run_cell(cfg, spec, *seed))
        .collect::<Result<Vec<_>>>()?;

    let summaries = cfg
        .instances
        .iter()
        .map(|spec| {
            let mine: Vec<&BenchCell> = cells.iter().filter(|c| c.instance == spec.name).collect();
            let done: Vec<&&BenchCell> = mine.iter().filter(|c| c.lgz.is_some()).collect();
            let count = done.len().max(1) as f64;
            InstanceSummary {
                instance: spec.name.clone(),
                cells: mine.len(),
                evaluated: done.len(),
                within_fraction: done.iter().filter(|c| c.within_epsilon == Some(true)).count() as f64 / count,
                mean_lgz_error: done.iter().map(|c| (c.lgz.unwrap() - c.exact.unwrap()).abs()).sum::<f64>() / count,
                mean_kpm_error: done.iter().map(|c| (c.kpm.unwrap() - c.exact.unwrap()).abs()).sum::<f64>() / count,
                total_samples: done.iter().map(|c| c.lgz_samples.unwrap() as u64).sum(),
                total_matvecs: done.iter().map(|c| c.kpm_matvecs.unwrap()).sum(),
            }
        })
        .collect();
    Ok(BenchReport {
        epsilon: cfg.epsilon,
        confidence: cfg.confidence,
        t: cfg.t,
        summaries,
        cells,
    })
}
