//! Run configuration shared by command-line flags and TOML files.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qtda_core::pipeline::BenchConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Complex,
    Betti,
    Lgz,
    Llsd,
    Rank,
    Swes,
    Entropy,
    Subtrace,
    Barcode,
    Resources,
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact rank / dense spectrum.
    Exact,
    /// Alias of exact for Betti numbers: integer rank of boundary maps.
    Rank,
    /// Nullity of the Laplacian.
    Hodge,
    /// Sampled estimate through the padded Laplacian.
    Abne,
    /// Sampled mode for entropies.
    Sampled,
}

/// Every option a command may read. Values given as flags override values
/// from the configuration file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Command to run when none is given on the command line.
    #[arg(skip)]
    pub command: Option<CommandName>,

    /// Point cloud CSV, one point per row.
    #[arg(long, global = true)]
    pub points: Option<PathBuf>,
    /// Edge list with an "n <count>" header.
    #[arg(long, global = true)]
    pub edges: Option<PathBuf>,
    /// Triple-list matrix file.
    #[arg(long, global = true)]
    pub matrix: Option<PathBuf>,
    /// Grouping scale for building a graph from points.
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    /// Ascending scale grid for barcodes.
    #[arg(long, global = true, value_delimiter = ',')]
    pub scales: Option<Vec<f64>>,
    /// Clique dimension (k+1 vertices per clique).
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Largest clique dimension for barcodes and Betti listings.
    #[arg(long, global = true)]
    pub k_max: Option<usize>,
    /// Use the zero-padded Laplacian of the graph as the matrix.
    #[arg(long, global = true)]
    pub padded: bool,

    #[arg(long, global = true, value_enum)]
    pub method: Option<Method>,
    /// Eigenvalue tolerance for the Hodge method.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Phase-register bits.
    #[arg(long, global = true)]
    pub t: Option<u32>,
    /// Threshold b for spectral density, rank and subtrace.
    #[arg(long, global = true)]
    pub b: Option<f64>,
    /// Spectral resolution delta.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Additive precision of estimates.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Confidence of estimates.
    #[arg(long, global = true)]
    pub mu: Option<f64>,
    /// Sample budget; defaults to the Hoeffding count where one applies.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    /// Renyi order.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Report entropies in bits.
    #[arg(long, global = true)]
    pub bits: bool,
    /// Sample eigenvalues uniformly instead of by weight.
    #[arg(long, global = true)]
    pub uniform: bool,
    /// Write the sample stream to this CSV file.
    #[arg(long, global = true)]
    pub stream: Option<PathBuf>,

    /// Baseline polynomial degree.
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    /// Baseline trace probes.
    #[arg(long, global = true)]
    pub probes: Option<usize>,

    /// System qubits.
    #[arg(long, global = true)]
    pub n: Option<u64>,
    /// Bits per matrix entry.
    #[arg(long, global = true)]
    pub r: Option<u64>,
    /// Number of local terms.
    #[arg(long, global = true)]
    pub m: Option<u64>,
    /// Resource mode; all applicable modes when absent.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    /// Relative eigenvalue threshold converted to phase bits.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,

    /// Output file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Human-readable output.
    #[arg(long, global = true)]
    pub human: bool,

    #[arg(skip)]
    pub bench: Option<BenchConfig>,
}

macro_rules! prefer {
    ($self:ident, $base:ident, $($field:ident),*) => {
        $( if $self.$field.is_none() { $self.$field = $base.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> Result<String, String> {
        toml::to_string(self).map_err(|e| e.to_string())
    }

    /// Fill unset values from `base`; values already set win.
    pub fn over(mut self, base: &RunConfig) -> Self {
        prefer!(
            self, base, command, points, edges, matrix, scale, scales, k, k_max, method, tol, t, b, delta,
            epsilon, mu, samples, seed, bins, alpha, stream, degree, probes, n, r, m, mode, threshold,
            output, bench
        );
        self.padded |= base.padded;
        self.bits |= base.bits;
        self.uniform |= base.uniform;
        self.human |= base.human;
        self
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<(), String> {
        let inputs = [self.points.is_some(), self.edges.is_some(), self.matrix.is_some()];
        if inputs.iter().filter(|&&x| x).count() > 1 {
            return Err("give at most one of points, edges, matrix".into());
        }
        let open_unit = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x < 1.0) => Err(format!("{name} must lie in (0, 1), got {x}")),
            _ => Ok(()),
        };
        open_unit("epsilon", self.epsilon)?;
        open_unit("mu", self.mu)?;
        open_unit("threshold", self.threshold)?;
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(format!("{name} must be positive, got {x}")),
            _ => Ok(()),
        };
        positive("delta", self.delta)?;
        positive("tol", self.tol)?;
        if let Some(b) = self.b {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(format!("b must be nonnegative, got {b}"));
            }
        }
        if let Some(s) = self.scale {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(format!("scale must be nonnegative, got {s}"));
            }
        }
        if self.t == Some(0) {
            return Err("t must be positive".into());
        }
        if self.samples == Some(0) {
            return Err("samples must be positive".into());
        }
        if self.bins == Some(0) {
            return Err("bins must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig {
            command: Some(CommandName::Llsd),
            matrix: Some("m.txt".into()),
            scales: Some(vec![0.5, 1.0]),
            b: Some(0.1),
            delta: Some(0.05),
            seed: Some(7),
            padded: true,
            ..Default::default()
        };
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn flags_win() {
        let file = RunConfig {
            seed: Some(1),
            b: Some(0.2),
            ..Default::default()
        };
        let flags = RunConfig {
            seed: Some(9),
            ..Default::default()
        };
        let merged = flags.over(&file);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.b, Some(0.2));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("sed = 3\n").is_err());
    }

    #[test]
    fn validation() {
        let bad = RunConfig {
            epsilon: Some(1.5),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let both = RunConfig {
            points: Some("a".into()),
            edges: Some("b".into()),
            ..Default::default()
        };
        assert!(both.validate().is_err());
    }
}
