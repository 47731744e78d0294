//! Eigenvalue counting, low-lying spectral density, numerical rank,
//! approximate Betti numbers through padding, histogram subtraces,
//! spectral entropies, and a kernel-polynomial classical baseline.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::complex::{binomial, enumerate_cliques, Graph};
use crate::emulator::{EigenSample, NoiseModel, SuesSampler, SwesSampler};
use crate::error::{Error, Result};
use crate::homology::{pad_laplacian, zero_tolerance};
use crate::seed::sample_stream;
use crate::sparse_access::{SparseAccessOracle, TripleListStore};
use crate::spectrum;

/// Density below which padding amplifies the error enough to warn.
pub const SMALL_DENSITY: f64 = 0.5;

/// Estimate record emitted by every estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub value: f64,
    pub epsilon: f64,
    pub mu: f64,
    #[serde(rename = "M")]
    pub samples: usize,
    pub seed: u64,
    pub method: String,
    pub matvec_or_sample_count: u64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SpectralEstimate {
    pub fn new(
        value: f64,
        epsilon: f64,
        mu: f64,
        samples: usize,
        seed: u64,
        method: &str,
        matvec_or_sample_count: u64,
    ) -> Self {
        SpectralEstimate {
            value,
            epsilon,
            mu,
            samples,
            seed,
            method: method.to_string(),
            matvec_or_sample_count,
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }
}

fn check_unit_open(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {x}")))
    }
}

/// Hoeffding sample size `⌈ln(2/(1−μ)) / (2ε²)⌉` for additive error `ε`
/// with confidence `μ`.
pub fn hoeffding_samples(epsilon: f64, mu: f64) -> Result<usize> {
    check_unit_open("epsilon", epsilon)?;
    check_unit_open("mu", mu)?;
    Ok(((2.0 / (1.0 - mu)).ln() / (2.0 * epsilon * epsilon)).ceil() as usize)
}

/// Additive error guaranteed by `m` samples at confidence `μ`.
pub fn hoeffding_epsilon(m: usize, mu: f64) -> Result<f64> {
    check_unit_open("mu", mu)?;
    if m == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    Ok(((2.0 / (1.0 - mu)).ln() / (2.0 * m as f64)).sqrt())
}

/// `(1/dim)·#{λ : a ≤ λ ≤ b}` from a dense eigendecomposition. Interval
/// ends are widened by the relative zero tolerance to absorb roundoff.
pub fn eigencount_exact<A: SparseAccessOracle + ?Sized>(h: &A, a: f64, b: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidParameter(format!("need a <= b, got [{a}, {b}]")));
    }
    if h.dim() == 0 {
        return Err(Error::EmptyInput);
    }
    let tol = zero_tolerance(h.gershgorin_bound()?);
    let spec = spectrum::eigh(h, false)?;
    Ok(spec.count_in(a - tol, b + tol) as f64 / spec.dim() as f64)
}

/// Parameters of a low-lying spectral density query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlsdConfig {
    /// Threshold `b`.
    pub b: f64,
    /// Spectral resolution `δ`: eigenvalues in `(b, b+δ]` may count either way.
    pub delta: f64,
    pub epsilon: f64,
    /// Confidence.
    pub mu: f64,
    /// Phase-register bits; chosen automatically when absent.
    pub t: Option<u32>,
}

impl LlsdConfig {
    pub fn new(b: f64, delta: f64, epsilon: f64, mu: f64) -> Self {
        LlsdConfig {
            b,
            delta,
            epsilon,
            mu,
            t: None,
        }
    }

    pub fn with_t(mut self, t: u32) -> Self {
        self.t = Some(t);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.b >= 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter(format!("b must be nonnegative, got {}", self.b)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {}", self.delta)));
        }
        check_unit_open("epsilon", self.epsilon)?;
        check_unit_open("mu", self.mu)
    }
}

/// Share of the error budget spent on phase-estimation misses.
const QPE_MISS_SHARE: f64 = 0.1;

struct LlsdRun {
    samples: Vec<EigenSample>,
    model: NoiseModel,
    cutoff_slack: f64,
    warnings: Vec<String>,
}

impl LlsdRun {
    fn fraction_below(&self, b: f64) -> f64 {
        let cut = b + self.cutoff_slack;
        self.samples.iter().filter(|s| s.value <= cut).count() as f64 / self.samples.len() as f64
    }
}

/// Draws the uniform-spectrum stream for a query. Estimates land within
/// `δ/2` of their eigenvalue except with probability `ε/10`, and the
/// Hoeffding budget covers the remaining `0.9ε`.
fn llsd_run<A: SparseAccessOracle + ?Sized>(h: &A, cfg: &LlsdConfig, seed: u64) -> Result<LlsdRun> {
    cfg.validate()?;
    let bound = h.gershgorin_bound()?;
    let miss = QPE_MISS_SHARE * cfg.epsilon;
    let half = cfg.delta / 2.0;
    let mut warnings = Vec::new();
    let model = match cfg.t {
        None => NoiseModel::for_precision(half, miss, bound)?,
        Some(t) => {
            let probe = NoiseModel::for_bound(t, bound, miss)?;
            if probe.resolution() > half {
                return Err(Error::Infeasible(format!(
                    "t = {t} resolves {} but delta/2 = {half}",
                    probe.resolution()
                )));
            }
            let needed = NoiseModel::for_precision(half, miss, bound)?.t;
            if t < needed {
                warnings.push(format!(
                    "t = {t} is below the {needed} bits that bound phase-estimation misses by {miss}"
                ));
            }
            NoiseModel::new(t, half, miss, probe.scale)?
        }
    };
    let m = hoeffding_samples((1.0 - QPE_MISS_SHARE) * cfg.epsilon, cfg.mu)?;
    let sampler = SuesSampler::new(h, model)?;
    Ok(LlsdRun {
        samples: sampler.stream(m, seed),
        model,
        cutoff_slack: half,
        warnings,
    })
}

fn estimate_from_run(run: &LlsdRun, value: f64, cfg: &LlsdConfig, seed: u64, method: &str) -> SpectralEstimate {
    let m = run.samples.len();
    let mut est = SpectralEstimate::new(value, cfg.epsilon, cfg.mu, m, seed, method, m as u64);
    est.diagnostics.insert("t".into(), run.model.t as f64);
    est.diagnostics.insert("resolution".into(), run.model.resolution());
    est.warnings = run.warnings.clone();
    est
}

/// Fraction of uniform spectral samples at or below `b`. With probability
/// at least `μ` the value lies in `[N(0,b) − ε, N(0,b+δ) + ε]`.
pub fn llsd_estimate<A: SparseAccessOracle + ?Sized>(h: &A, cfg: &LlsdConfig, seed: u64) -> Result<SpectralEstimate> {
    let run = llsd_run(h, cfg, seed)?;
    Ok(estimate_from_run(&run, run.fraction_below(cfg.b), cfg, seed, "llsd"))
}

/// Normalized count of eigenvalues above `b`, `1 − N(0,b)`, from the same
/// sample stream as [`llsd_estimate`].
pub fn numerical_rank<A: SparseAccessOracle + ?Sized>(h: &A, cfg: &LlsdConfig, seed: u64) -> Result<SpectralEstimate> {
    let run = llsd_run(h, cfg, seed)?;
    let below = run.fraction_below(cfg.b);
    Ok(estimate_from_run(&run, 1.0 - below, cfg, seed, "rank"))
}

/// `N_Δ = (C/χ)·N_Γ − (C−χ)/χ` for `C` padded and `χ` genuine basis states.
pub fn padding_identity(n_gamma: f64, padded_dim: u64, chi: u64) -> f64 {
    let c = padded_dim as f64;
    let chi = chi as f64;
    (c / chi) * n_gamma - (c - chi) / chi
}

/// Approximate `β_k / χ_k` from the padded Laplacian at threshold zero.
/// The padded query runs at precision `ε·χ/C` so the returned value meets
/// the requested `ε`.
pub fn abne_estimate(
    g: &Graph,
    k: usize,
    delta: f64,
    epsilon: f64,
    mu: f64,
    seed: u64,
) -> Result<SpectralEstimate> {
    let chi = enumerate_cliques(g, k)?.chi() as u64;
    if chi == 0 {
        return Err(Error::EmptyBasis { k });
    }
    check_unit_open("epsilon", epsilon)?;
    let padded = binomial(g.n(), k + 1);
    let density = chi as f64 / padded as f64;
    let amplification = padded as f64 / chi as f64;
    let gamma = pad_laplacian(g, k)?;
    let cfg = LlsdConfig::new(0.0, delta, epsilon * density, mu);
    let run = llsd_run(&gamma, &cfg, seed)?;
    let value = padding_identity(run.fraction_below(0.0), padded, chi).clamp(0.0, 1.0);

    let mut est = estimate_from_run(&run, value, &cfg, seed, "abne");
    est.epsilon = epsilon;
    est.diagnostics.insert("density".into(), density);
    est.diagnostics.insert("amplification".into(), amplification);
    est.diagnostics.insert("padded_dim".into(), padded as f64);
    est.diagnostics.insert("chi".into(), chi as f64);
    if density < SMALL_DENSITY {
        est.warnings.push(format!(
            "clique density {density:.4} is small; padding amplifies error by {amplification:.2}"
        ));
    }
    Ok(est)
}

/// Histogram estimate of the normalized subtrace `(1/dim)·Σ_{λ≤b} λ`.
///
/// Counts at the boundaries `0, w, …, b` (`w = b/bins`) share one sample
/// stream; adjacent differences give bin masses, weighted by bin midpoints.
/// Mass at the zero boundary contributes nothing. `epsilon` on the result
/// is the bound `w + b·(bins+1)·ε`.
pub fn subtrace_estimate<A: SparseAccessOracle + ?Sized>(
    h: &A,
    b: f64,
    bins: usize,
    delta: f64,
    epsilon: f64,
    mu: f64,
    seed: u64,
) -> Result<SpectralEstimate> {
    if bins == 0 {
        return Err(Error::InvalidParameter("bins must be at least 1".into()));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("b must be positive, got {b}")));
    }
    let width = b / bins as f64;
    if delta > width {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} exceeds the bin width {width}"
        )));
    }
    let cfg = LlsdConfig::new(b, delta, epsilon, mu);
    let run = llsd_run(h, &cfg, seed)?;
    let counts: Vec<f64> = (0..=bins).map(|i| run.fraction_below(i as f64 * width)).collect();
    let value: f64 = counts
        .windows(2)
        .enumerate()
        .map(|(i, pair)| (i as f64 + 0.5) * width * (pair[1] - pair[0]))
        .sum();
    let mut est = estimate_from_run(&run, value, &cfg, seed, "subtrace");
    est.epsilon = width + b * (bins + 1) as f64 * epsilon;
    est.diagnostics.insert("bin_width".into(), width);
    est.diagnostics.insert("bins".into(), bins as f64);
    Ok(est)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyMethod {
    Exact,
    /// Plug-in from eigenvalue-weighted samples through a `t`-bit register.
    Sampled { samples: usize, t: u32, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyUnit {
    Nats,
    Bits,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub entropy: f64,
    /// Renyi order; `None` for the von Neumann entropy.
    pub alpha: Option<f64>,
    pub method: &'static str,
    pub unit: EntropyUnit,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Sampled mode: estimates that read zero and were dropped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discarded: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl EntropyReport {
    pub fn in_bits(mut self) -> Self {
        if self.unit == EntropyUnit::Nats {
            self.entropy /= std::f64::consts::LN_2;
            self.unit = EntropyUnit::Bits;
        }
        self
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha == 1.0 {
        return Err(Error::InvalidParameter(
            "alpha = 1 is the von Neumann limit; use spectral_entropy".into(),
        ));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be finite and nonnegative, got {alpha}")));
    }
    Ok(())
}

/// Normalized spectral weights `λ_j / Σλ`, with tiny negatives clamped.
fn spectral_weights<A: SparseAccessOracle + ?Sized>(h: &A) -> Result<Vec<f64>> {
    let values: Vec<f64> = spectrum::eigh(h, false)?.values.into_iter().map(|v| v.max(0.0)).collect();
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTrace);
    }
    Ok(values.into_iter().map(|v| v / total).collect())
}

struct WeightedDraws {
    /// `λ̃ / Tr` for each nonzero estimate.
    ratios: Vec<f64>,
    discarded: usize,
}

fn weighted_draws<A: SparseAccessOracle + ?Sized>(h: &A, samples: usize, t: u32, seed: u64) -> Result<WeightedDraws> {
    if samples == 0 {
        return Err(Error::InvalidParameter("sample budget must be positive".into()));
    }
    let bound = h.gershgorin_bound()?;
    if !(bound > 0.0) {
        return Err(Error::ZeroTrace);
    }
    let normalized = TripleListStore::from_oracle(h)?.scaled(1.0 / bound)?;
    let sampler = SwesSampler::new(&normalized, NoiseModel::for_bound(t, 1.0, 0.5)?)?;
    let trace = sampler.trace();
    let stream = sampler.stream(samples, seed);
    let ratios: Vec<f64> = stream.iter().filter(|s| s.value > 0.0).map(|s| s.value / trace).collect();
    let discarded = samples - ratios.len();
    if ratios.is_empty() {
        return Err(Error::InvalidParameter("every sampled estimate read zero".into()));
    }
    Ok(WeightedDraws { ratios, discarded })
}

/// `S = −Σ p_j ln p_j` with `p_j = λ_j / Tr H`.
///
/// Sampled mode averages `ln(Tr/λ̃)` over eigenvalue-weighted samples,
/// which is unbiased for `S` up to phase-estimation error.
pub fn spectral_entropy<A: SparseAccessOracle + ?Sized>(h: &A, method: EntropyMethod) -> Result<EntropyReport> {
    let max = (h.dim() as f64).ln();
    match method {
        EntropyMethod::Exact => {
            let p = spectral_weights(h)?;
            let s: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
            Ok(report(s.clamp(0.0, max), None, "exact", None))
        }
        EntropyMethod::Sampled { samples, t, seed } => {
            let d = weighted_draws(h, samples, t, seed)?;
            let s = d.ratios.iter().map(|r| -r.ln()).sum::<f64>() / d.ratios.len() as f64;
            let mut r = report(s.clamp(0.0, max), None, "sampled", Some(samples));
            r.discarded = Some(d.discarded);
            r.seed = Some(seed);
            Ok(r)
        }
    }
}

/// `S_α = ln(Σ p_j^α) / (1 − α)`. Sampled mode uses `Σ p^α = E_p[p^{α−1}]`.
pub fn renyi_entropy<A: SparseAccessOracle + ?Sized>(h: &A, alpha: f64, method: EntropyMethod) -> Result<EntropyReport> {
    check_alpha(alpha)?;
    let max = (h.dim() as f64).ln();
    match method {
        EntropyMethod::Exact => {
            let p = spectral_weights(h)?;
            let sum: f64 = p.iter().filter(|&&x| x > 0.0).map(|&x| x.powf(alpha)).sum();
            let s = sum.ln() / (1.0 - alpha);
            Ok(report(s.clamp(0.0, max), Some(alpha), "exact", None))
        }
        EntropyMethod::Sampled { samples, t, seed } => {
            let d = weighted_draws(h, samples, t, seed)?;
            let mean = d.ratios.iter().map(|r| r.powf(alpha - 1.0)).sum::<f64>() / d.ratios.len() as f64;
            let s = mean.ln() / (1.0 - alpha);
            let mut r = report(s.clamp(0.0, max), Some(alpha), "sampled", Some(samples));
            r.discarded = Some(d.discarded);
            r.seed = Some(seed);
            Ok(r)
        }
    }
}

fn report(entropy: f64, alpha: Option<f64>, method: &'static str, samples: Option<usize>) -> EntropyReport {
    EntropyReport {
        entropy,
        alpha,
        method,
        unit: EntropyUnit::Nats,
        samples,
        discarded: None,
        seed: None,
    }
}

/// Chebyshev coefficients of the indicator of `[−1, x0]`.
fn step_coefficients(x0: f64, degree: usize) -> Vec<f64> {
    let theta = x0.clamp(-1.0, 1.0).acos();
    (0..=degree)
        .map(|k| {
            if k == 0 {
                (PI - theta) / PI
            } else {
                -2.0 * (k as f64 * theta).sin() / (k as f64 * PI)
            }
        })
        .collect()
}

/// Jackson damping factors for `degree + 1` moments.
fn jackson(degree: usize) -> Vec<f64> {
    let m = (degree + 1) as f64;
    let a = PI / (m + 1.0);
    (0..=degree)
        .map(|k| {
            let k = k as f64;
            ((m - k + 1.0) * (a * k).cos() + (a * k).sin() / a.tan()) / (m + 1.0)
        })
        .collect()
}

/// Kernel-polynomial estimate of `N(0,b)` for a PSD matrix: a
/// Jackson-damped Chebyshev expansion of the step at `b`, traced with
/// Rademacher probes. The count is the multiply-adds spent in
/// matrix-vector products, `degree × probes × nnz`.
pub fn eigencount_stochastic<A: SparseAccessOracle + ?Sized>(
    h: &A,
    b: f64,
    degree: usize,
    probes: usize,
    seed: u64,
) -> Result<SpectralEstimate> {
    if degree == 0 || probes == 0 {
        return Err(Error::InvalidParameter("degree and probes must be positive".into()));
    }
    if h.dim() == 0 {
        return Err(Error::EmptyInput);
    }
    let store = TripleListStore::from_oracle(h)?;
    let dim = store.dim();
    let bound = store.gershgorin_bound()?;
    let span = if bound > 0.0 { 1.01 * bound } else { 1.0 };
    let x0 = 2.0 * b / span - 1.0;
    let coeffs: Vec<f64> = step_coefficients(x0, degree)
        .into_iter()
        .zip(jackson(degree))
        .map(|(c, g)| c * g)
        .collect();

    let per_probe: Vec<(f64, u64)> = sample_stream(probes, seed, |rng| {
        let z: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0))
            .collect();
        let mut madds = 0u64;
        let mut prev = z.clone();
        let mut cur = vec![Complex64::new(0.0, 0.0); dim];
        let mut scratch = vec![Complex64::new(0.0, 0.0); dim];
        let dot = |v: &[Complex64]| -> f64 { z.iter().zip(v).map(|(a, b)| (a.conj() * b).re).sum() };
        let mut acc = coeffs[0] * dot(&prev);
        if degree >= 1 {
            madds += store.matvec(&prev, &mut scratch);
            for i in 0..dim {
                cur[i] = scratch[i] * (2.0 / span) - prev[i];
            }
            acc += coeffs[1] * dot(&cur);
        }
        for &c in &coeffs[2.min(coeffs.len())..] {
            madds += store.matvec(&cur, &mut scratch);
            for i in 0..dim {
                let next = (scratch[i] * (2.0 / span) - cur[i]) * 2.0 - prev[i];
                prev[i] = cur[i];
                cur[i] = next;
            }
            acc += c * dot(&cur);
        }
        (acc / dim as f64, madds)
    });

    let values: Vec<f64> = per_probe.iter().map(|p| p.0).collect();
    let mean = values.iter().sum::<f64>() / probes as f64;
    let var = if probes > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (probes - 1) as f64
    } else {
        0.0
    };
    let cost: u64 = per_probe.iter().map(|p| p.1).sum();
    let mut est = SpectralEstimate::new(
        mean.clamp(0.0, 1.0),
        1.96 * (var / probes as f64).sqrt(),
        0.95,
        probes,
        seed,
        "kpm",
        cost,
    );
    est.diagnostics.insert("degree".into(), degree as f64);
    est.diagnostics.insert("nnz".into(), store.len() as f64);
    Ok(est)
}
