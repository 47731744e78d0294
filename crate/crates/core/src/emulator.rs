//! Distribution-level emulation of phase estimation, uniform and
//! eigenvalue-weighted spectral sampling, and the Betti-number loop.
//!
//! Operators are rescaled so every phase `λ·scale` lies in `[0, 1/2]`.
//! Outcomes in the upper quarter of the register (`m ≥ 3N/4`) are read as
//! small negative phases and clamp to zero.

use std::f64::consts::PI;
use std::io::Write;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::complex::{sample_clique_rejection, Graph};
use crate::error::{Error, Result};
use crate::estimators::{hoeffding_epsilon, SpectralEstimate};
use crate::homology::combinatorial_laplacian;
use crate::seed::{sample_stream, try_sample_stream, SeedRng};
use crate::sparse_access::SparseAccessOracle;
use crate::spectrum::{self, Spectrum};

/// Largest phase register supported by the samplers.
pub const MAX_PHASE_BITS: u32 = 52;

/// Largest register for which the full outcome distribution is materialized.
pub const MAX_DISTRIBUTION_BITS: u32 = 24;

/// Phase-estimation noise model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Phase-register bits.
    pub t: u32,
    /// Target precision on eigenvalue estimates.
    pub delta: f64,
    /// Probability an estimate misses `delta`.
    pub mu: f64,
    /// Multiplier taking eigenvalues to phases.
    pub scale: f64,
}

impl NoiseModel {
    pub fn new(t: u32, delta: f64, mu: f64, scale: f64) -> Result<Self> {
        let model = NoiseModel { t, delta, mu, scale };
        model.validate()?;
        Ok(model)
    }

    /// `t` bits with `scale = 1/(2λ̄)`; `delta` is set to the resolution.
    pub fn for_bound(t: u32, lambda_bar: f64, mu: f64) -> Result<Self> {
        let scale = scale_for(lambda_bar)?;
        let delta = resolution(t, scale);
        Self::new(t, delta, mu, scale)
    }

    /// Fewest bits such that each estimate lands within `delta` of its
    /// eigenvalue with probability at least `1 - mu`.
    pub fn for_precision(delta: f64, mu: f64, lambda_bar: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        check_mu(mu)?;
        let scale = scale_for(lambda_bar)?;
        let precision = (1.0 / (scale * delta)).log2().ceil().max(0.0) as u32;
        let t = precision + extra_bits(mu);
        if t > MAX_PHASE_BITS {
            return Err(Error::Infeasible(format!(
                "precision {delta} needs {t} phase bits, limit is {MAX_PHASE_BITS}"
            )));
        }
        Self::new(t, delta, mu, scale)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.t > MAX_PHASE_BITS {
            return Err(Error::InvalidParameter(format!(
                "t must be in 1..={MAX_PHASE_BITS}, got {}",
                self.t
            )));
        }
        check_mu(self.mu)?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {}", self.scale)));
        }
        let res = self.resolution();
        if !(self.delta.is_finite() && self.delta >= res * (1.0 - 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "delta {} is below the register resolution {res}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Eigenvalue spacing of adjacent outcomes, `1/(scale·2^t)`.
    pub fn resolution(&self) -> f64 {
        resolution(self.t, self.scale)
    }

    pub fn outcomes(&self) -> u64 {
        1u64 << self.t
    }

    /// Signed eigenvalue estimate for outcome `m`.
    pub fn decode(&self, m: u64) -> f64 {
        let n = self.outcomes();
        let signed = if m >= n - n / 4 { m as f64 - n as f64 } else { m as f64 };
        signed / (n as f64 * self.scale)
    }

    /// Errors unless every phase `λ·scale` lies in `[0, 1/2]`.
    pub fn check_spectrum(&self, lambda_max: f64) -> Result<()> {
        let top = lambda_max * self.scale;
        if top > 0.5 + 1e-12 {
            Err(Error::ScaleViolation(top))
        } else {
            Ok(())
        }
    }
}

fn resolution(t: u32, scale: f64) -> f64 {
    1.0 / (scale * (1u64 << t) as f64)
}

fn scale_for(lambda_bar: f64) -> Result<f64> {
    if !(lambda_bar >= 0.0 && lambda_bar.is_finite()) {
        return Err(Error::InvalidParameter(format!("bound must be nonnegative, got {lambda_bar}")));
    }
    Ok(if lambda_bar > 0.0 { 0.5 / lambda_bar } else { 0.5 })
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mu must lie in (0, 1), got {mu}")))
    }
}

/// Extra register bits bounding the miss probability by `mu`.
pub fn extra_bits(mu: f64) -> u32 {
    (2.0 + 1.0 / (2.0 * mu)).log2().ceil() as u32
}

fn check_phase(phase: f64, t: u32) -> Result<()> {
    if t == 0 || t > MAX_PHASE_BITS {
        return Err(Error::InvalidParameter(format!("t must be in 1..={MAX_PHASE_BITS}, got {t}")));
    }
    if !(0.0..1.0).contains(&phase) {
        return Err(Error::InvalidParameter(format!("phase must lie in [0, 1), got {phase}")));
    }
    Ok(())
}

/// Kernel value at distance `y = φN − m` in outcome units.
fn kernel(y: f64, n: f64) -> f64 {
    if y.fract() == 0.0 {
        return if (y / n).fract() == 0.0 { 1.0 } else { 0.0 };
    }
    let num = (PI * y).sin();
    let den = n * (PI * y / n).sin();
    (num * num) / (den * den)
}

/// Probability of outcome `m` for phase `phase` on a `t`-bit register.
pub fn qpe_outcome_probability(phase: f64, t: u32, m: u64) -> Result<f64> {
    check_phase(phase, t)?;
    let n = (1u64 << t) as f64;
    if m >= 1u64 << t {
        return Err(Error::InvalidParameter(format!("outcome {m} exceeds the register")));
    }
    Ok(kernel(phase * n - m as f64, n))
}

/// Full outcome distribution over `0..2^t`.
pub fn qpe_outcome_distribution(phase: f64, t: u32) -> Result<Vec<f64>> {
    check_phase(phase, t)?;
    if t > MAX_DISTRIBUTION_BITS {
        return Err(Error::InvalidParameter(format!(
            "distribution limited to {MAX_DISTRIBUTION_BITS} bits, got {t}"
        )));
    }
    let n = (1u64 << t) as f64;
    let pn = phase * n;
    Ok((0..1u64 << t).map(|m| kernel(pn - m as f64, n)).collect())
}

/// Draw one outcome exactly from the phase-estimation distribution.
///
/// Scans outcomes outward from the nearest bin, so the expected work is
/// logarithmic in `2^t`.
pub fn sample_qpe_outcome<R: Rng + ?Sized>(phase: f64, t: u32, rng: &mut R) -> u64 {
    debug_assert!(check_phase(phase, t).is_ok());
    let size = 1u64 << t;
    let n = size as f64;
    let pn = phase * n;
    let nearest = pn.round();
    let f = pn - nearest;
    let m0 = (nearest as u64) % size;
    if f == 0.0 {
        return m0;
    }
    let u: f64 = rng.random();
    let sin_f = (PI * f).sin();
    let numer = sin_f * sin_f;
    let mut cum = 0.0;
    for i in 0..size {
        let j = if i == 0 {
            0i64
        } else if i % 2 == 1 {
            (i as i64 + 1) / 2
        } else {
            -(i as i64 / 2)
        };
        let d = n * (PI * (f - j as f64) / n).sin();
        cum += numer / (d * d);
        if u < cum {
            return (m0 as i64 + j).rem_euclid(size as i64) as u64;
        }
    }
    m0
}

/// Total-variation distance between two distributions on the same support.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidParameter(format!(
            "support sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Empirical distribution of raw outcomes on a `t`-bit register.
pub fn empirical_outcome_distribution(raw: &[u64], t: u32) -> Result<Vec<f64>> {
    if t > MAX_DISTRIBUTION_BITS {
        return Err(Error::InvalidParameter(format!(
            "distribution limited to {MAX_DISTRIBUTION_BITS} bits, got {t}"
        )));
    }
    if raw.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts = vec![0.0; 1 << t];
    for &m in raw {
        *counts.get_mut(m as usize).ok_or_else(|| {
            Error::InvalidParameter(format!("outcome {m} exceeds the register"))
        })? += 1.0;
    }
    let total = raw.len() as f64;
    counts.iter_mut().for_each(|c| *c /= total);
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Sues,
    Swes,
    Lgz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenSample {
    pub iteration: usize,
    /// Raw register outcome.
    pub raw: u64,
    /// Rescaled estimate, clamped to `[0, gershgorin_bound]`.
    pub value: f64,
    /// Eigenvalue fed to the phase-estimation channel.
    pub drawn: f64,
    pub source: SampleSource,
    pub seed: u64,
}

struct Channel {
    spectrum: Spectrum,
    bound: f64,
    model: NoiseModel,
}

impl Channel {
    fn new<A: SparseAccessOracle + ?Sized>(h: &A, model: NoiseModel, vectors: bool) -> Result<Self> {
        model.validate()?;
        if h.dim() == 0 {
            return Err(Error::EmptyInput);
        }
        let bound = h.gershgorin_bound()?;
        let spectrum = spectrum::eigh(h, vectors)?;
        model.check_spectrum(spectrum.max())?;
        Ok(Channel {
            spectrum,
            bound,
            model,
        })
    }

    fn measure<R: Rng + ?Sized>(&self, index: usize, rng: &mut R) -> (f64, u64, f64) {
        let lambda = self.spectrum.values[index];
        let phase = (lambda * self.model.scale).clamp(0.0, 0.5);
        let raw = sample_qpe_outcome(phase, self.model.t, rng);
        let value = self.model.decode(raw).clamp(0.0, self.bound);
        (lambda, raw, value)
    }
}

/// Uniform spectral sampler: eigenvalues drawn uniformly with multiplicity,
/// as from the maximally mixed state.
pub struct SuesSampler {
    channel: Channel,
}

impl SuesSampler {
    pub fn new<A: SparseAccessOracle + ?Sized>(h: &A, model: NoiseModel) -> Result<Self> {
        Ok(SuesSampler {
            channel: Channel::new(h, model, false)?,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.channel.spectrum
    }

    pub fn model(&self) -> &NoiseModel {
        &self.channel.model
    }

    fn draw(&self, rng: &mut SeedRng) -> (f64, u64, f64) {
        let index = rng.random_range(0..self.channel.spectrum.dim());
        self.channel.measure(index, rng)
    }

    pub fn stream(&self, count: usize, seed: u64) -> Vec<EigenSample> {
        let mut out = sample_stream(count, seed, |rng| self.draw(rng));
        label(&mut out, SampleSource::Sues, seed)
    }
}

/// Eigenvalue-weighted sampler: `λ_j` drawn with probability `λ_j / Tr H`.
pub struct SwesSampler {
    channel: Channel,
    weights: WeightedIndex<f64>,
    trace: f64,
}

impl SwesSampler {
    pub fn new<A: SparseAccessOracle + ?Sized>(h: &A, model: NoiseModel) -> Result<Self> {
        let channel = Channel::new(h, model, false)?;
        let top = channel.spectrum.max();
        if top > 1.0 + 1e-12 {
            return Err(Error::NormViolation(top));
        }
        let trace = h.trace()?;
        let weights: Vec<f64> = channel.spectrum.values.iter().map(|v| v.max(0.0)).collect();
        if !(trace > 0.0) || weights.iter().all(|&w| w == 0.0) {
            return Err(Error::ZeroTrace);
        }
        let weights = WeightedIndex::new(&weights).map_err(|_| Error::ZeroTrace)?;
        Ok(SwesSampler {
            channel,
            weights,
            trace,
        })
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.channel.spectrum
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Amplitude-amplification cost figure `sqrt(dim / Tr H)`.
    pub fn amplification_cost(&self) -> f64 {
        (self.channel.spectrum.dim() as f64 / self.trace).sqrt()
    }

    fn draw(&self, rng: &mut SeedRng) -> (f64, u64, f64) {
        let index = self.weights.sample(rng);
        self.channel.measure(index, rng)
    }

    pub fn stream(&self, count: usize, seed: u64) -> Vec<EigenSample> {
        let mut out = sample_stream(count, seed, |rng| self.draw(rng));
        label(&mut out, SampleSource::Swes, seed)
    }
}

fn label(raw: &mut Vec<(f64, u64, f64)>, source: SampleSource, seed: u64) -> Vec<EigenSample> {
    raw.drain(..)
        .enumerate()
        .map(|(iteration, (drawn, raw, value))| EigenSample {
            iteration,
            raw,
            value,
            drawn,
            source,
            seed,
        })
        .collect()
}

/// One uniform spectral sample.
pub fn sues_sample<A: SparseAccessOracle + ?Sized>(h: &A, model: NoiseModel, seed: u64) -> Result<EigenSample> {
    Ok(SuesSampler::new(h, model)?.stream(1, seed)[0])
}

/// One eigenvalue-weighted sample and the amplification cost figure.
pub fn swes_sample<A: SparseAccessOracle + ?Sized>(
    h: &A,
    model: NoiseModel,
    seed: u64,
) -> Result<(EigenSample, f64)> {
    let sampler = SwesSampler::new(h, model)?;
    Ok((sampler.stream(1, seed)[0], sampler.amplification_cost()))
}

/// Fraction of `m` runs whose phase register reads exactly zero, where each
/// run prepares a uniformly random `(k+1)`-clique, projects it onto an
/// eigenvector of `Δ_k` by the Born rule, and estimates the phase.
/// Estimates `β_k / χ_k`.
pub fn lgz_run(g: &Graph, k: usize, model: NoiseModel, m: usize, seed: u64) -> Result<SpectralEstimate> {
    if m == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let laplacian = combinatorial_laplacian(g, k)?;
    let basis = crate::complex::enumerate_cliques(g, k)?;
    let channel = Channel::new(&laplacian, model, true)?;
    let vectors = channel.spectrum.vectors.as_ref().expect("eigenvectors requested");
    let dim = channel.spectrum.dim();

    let zeros = try_sample_stream(m, seed, |rng| -> Result<(bool, u64)> {
        let (clique, trials) = sample_clique_rejection(g, k, rng)?;
        let row = basis.index_of(clique).expect("sampled cliques are in the basis");
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut index = dim - 1;
        for i in 0..dim {
            cum += vectors.weight(row, i);
            if u < cum {
                index = i;
                break;
            }
        }
        let (_, raw, _) = channel.measure(index, rng);
        Ok((raw == 0, trials))
    })?;

    let hits = zeros.iter().filter(|(z, _)| *z).count();
    let trials: u64 = zeros.iter().map(|(_, t)| t).sum();
    let confidence = 1.0 - model.mu;
    let mut est = SpectralEstimate::new(
        hits as f64 / m as f64,
        hoeffding_epsilon(m, confidence)?,
        confidence,
        m,
        seed,
        "lgz",
        m as u64,
    );
    est.diagnostics.insert("rejection_trials".into(), trials as f64);
    est.diagnostics.insert("resolution".into(), model.resolution());
    Ok(est)
}

/// Write a sample stream as `iteration,raw,value` CSV.
pub fn write_sample_stream<W: Write>(samples: &[EigenSample], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["iteration", "raw", "value"])?;
    for s in samples {
        wr.write_record([s.iteration.to_string(), s.raw.to_string(), format!("{:?}", s.value)])?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::pad_laplacian;
    use crate::sparse_access::TripleListStore;
    use num_complex::Complex64;

    fn direct_kernel(phase: f64, t: u32, m: u64) -> f64 {
        let n = (1u64 << t) as f64;
        let s: Complex64 = (0..1u64 << t)
            .map(|x| Complex64::from_polar(1.0, 2.0 * PI * x as f64 * (phase - m as f64 / n)))
            .sum();
        (s / n).norm_sqr()
    }

    #[test]
    fn exact_phase_is_deterministic() {
        let d = qpe_outcome_distribution(3.0 / 8.0, 3).unwrap();
        assert_eq!(d[3], 1.0);
        assert_eq!(d.iter().sum::<f64>(), 1.0);
        for t in 1..10 {
            assert_eq!(qpe_outcome_distribution(0.0, t).unwrap()[0], 1.0);
        }
    }

    #[test]
    fn third_phase_matches_direct_sum() {
        let d = qpe_outcome_distribution(1.0 / 3.0, 4).unwrap();
        for (m, p) in d.iter().enumerate() {
            assert!((p - direct_kernel(1.0 / 3.0, 4, m as u64)).abs() < 1e-12);
        }
        let best = d.iter().cloned().fold(0.0, f64::max);
        assert!(best >= 4.0 / (PI * PI));
        assert_eq!(d.iter().cloned().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0, 5);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_matches_distribution() {
        let phase = 0.2345;
        let t = 5;
        let exact = qpe_outcome_distribution(phase, t).unwrap();
        let raw: Vec<u64> = sample_stream(200_000, 3, |rng| sample_qpe_outcome(phase, t, rng));
        let emp = empirical_outcome_distribution(&raw, t).unwrap();
        assert!(tv_distance(&exact, &emp).unwrap() < 0.01);
    }

    #[test]
    fn sampler_handles_wide_registers() {
        let raw: Vec<u64> = sample_stream(2000, 1, |rng| sample_qpe_outcome(0.1 + 1e-12, 40, rng));
        let target = (0.1f64 * (1u64 << 40) as f64).round() as i64;
        let near = raw.iter().filter(|&&m| (m as i64 - target).abs() <= 2).count();
        assert!(near > 1700);
    }

    #[test]
    fn model_validation() {
        assert!(NoiseModel::new(0, 1.0, 0.1, 0.5).is_err());
        assert!(NoiseModel::new(4, 1.0, 1.0, 0.5).is_err());
        assert!(NoiseModel::new(4, 1e-3, 0.1, 0.5).is_err());
        let m = NoiseModel::for_bound(4, 3.0, 0.1).unwrap();
        assert_eq!(m.resolution(), 6.0 / 16.0);
        assert_eq!(m.decode(0), 0.0);
        assert!(m.decode(15) < 0.0);
        assert_eq!(m.decode(8), 3.0);
        let p = NoiseModel::for_precision(0.01, 0.05, 1.0).unwrap();
        assert!(p.resolution() <= 0.01);
        assert!(NoiseModel::for_precision(1e-20, 0.05, 1.0).is_err());
    }

    #[test]
    fn scale_violation_is_reported() {
        let h = TripleListStore::diagonal(&[1.0, 2.0]);
        let model = NoiseModel::new(6, 1.0, 0.1, 0.5).unwrap();
        assert!(matches!(SuesSampler::new(&h, model), Err(Error::ScaleViolation(_))));
    }

    #[test]
    fn identity_samples_are_one() {
        let h = TripleListStore::identity(2);
        let model = NoiseModel::for_bound(12, 1.0, 0.1).unwrap();
        for s in SuesSampler::new(&h, model).unwrap().stream(100, 4) {
            assert!((s.value - 1.0).abs() <= model.resolution());
        }
    }

    #[test]
    fn padded_path_masses() {
        let gamma = pad_laplacian(&Graph::path(3).unwrap(), 1).unwrap();
        let model = NoiseModel::for_bound(10, 3.0, 0.1).unwrap();
        let samples = SuesSampler::new(&gamma, model).unwrap().stream(30_000, 9);
        for target in [0.0, 1.0, 3.0] {
            let frac = samples.iter().filter(|s| (s.value - target).abs() < 0.1).count() as f64 / 30_000.0;
            // binomial sd at p = 1/3 is about 0.0027
            assert!((frac - 1.0 / 3.0).abs() < 0.03, "{target}: {frac}");
        }
    }

    #[test]
    fn swes_weights() {
        let h = TripleListStore::diagonal(&[0.0, 1.0]);
        let model = NoiseModel::for_bound(8, 1.0, 0.1).unwrap();
        let s = SwesSampler::new(&h, model).unwrap();
        assert!(s.stream(1000, 2).iter().all(|x| x.drawn == 1.0));
        assert!((s.amplification_cost() - 2f64.sqrt()).abs() < 1e-12);

        assert_eq!(
            SwesSampler::new(&TripleListStore::zero(2), model).err(),
            Some(Error::ZeroTrace)
        );
        assert!(matches!(
            SwesSampler::new(&TripleListStore::diagonal(&[2.0]), NoiseModel::for_bound(8, 2.0, 0.1).unwrap()),
            Err(Error::NormViolation(_))
        ));
    }

    #[test]
    fn lgz_examples() {
        let c4 = Graph::cycle(4).unwrap();
        let model = NoiseModel::for_bound(4, 4.0, 0.05).unwrap();
        let est = lgz_run(&c4, 1, model, 4000, 11).unwrap();
        assert!((est.value - 0.25).abs() < 0.05, "{}", est.value);

        let k3 = Graph::complete(3).unwrap();
        let est = lgz_run(&k3, 1, NoiseModel::for_bound(6, 3.0, 0.05).unwrap(), 2000, 1).unwrap();
        assert!(est.value < 0.01);

        let empty = Graph::empty(4).unwrap();
        let est = lgz_run(&empty, 0, NoiseModel::for_bound(4, 0.0, 0.05).unwrap(), 100, 1).unwrap();
        assert_eq!(est.value, 1.0);

        assert_eq!(
            lgz_run(&c4, 2, model, 10, 1).unwrap_err(),
            Error::EmptyBasis { k: 2 }
        );
    }

    #[test]
    fn stream_csv() {
        let h = TripleListStore::identity(1);
        let model = NoiseModel::for_bound(2, 1.0, 0.1).unwrap();
        let s = SuesSampler::new(&h, model).unwrap().stream(2, 0);
        let mut out = Vec::new();
        write_sample_stream(&s, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "iteration,raw,value\n0,2,1.0\n1,2,1.0\n");
    }
}
