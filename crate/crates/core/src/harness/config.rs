use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Estimator or learner an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    CoinList,
    CoinCert,
    ThresholdList,
    ThresholdCert,
    ThresholdAdaptiveCert,
    ThresholdAdaptiveList,
}

impl Algorithm {
    /// Whether the algorithm consumes a shared certificate.
    pub fn uses_certificate(self) -> bool {
        matches!(
            self,
            Algorithm::CoinCert | Algorithm::ThresholdCert | Algorithm::ThresholdAdaptiveCert
        )
    }

    pub fn is_threshold(self) -> bool {
        !matches!(self, Algorithm::CoinList | Algorithm::CoinCert)
    }
}

/// Which certificates a certificate experiment runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CertSweep {
    /// Every certificate; at most 16 bits in total.
    #[default]
    Exhaustive,
    /// `count` distinct certificates drawn from the master seed.
    Sample { count: usize },
    /// Explicit certificates, one `r` per block.
    Fixed { certificates: Vec<Vec<u64>> },
}

/// Largest total certificate length swept exhaustively.
pub const MAX_EXHAUSTIVE_BITS: u32 = 16;

fn default_promise() -> f64 {
    0.5
}

fn default_runs() -> u64 {
    20
}

/// A replication experiment. Doubles as the `--config` file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub dim: usize,
    /// Target accuracy: `ℓ∞` for coins, `err_unif` for thresholds.
    pub eps: f64,
    pub delta: f64,
    /// Query tolerance of threshold learners; derived from `eps` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Promise class `[c, 1]^d` of the threshold learners.
    #[serde(default = "default_promise")]
    pub promise_c: f64,
    /// Use the `d + 1` query threshold program valid on all of `[0,1]^d`.
    #[serde(default)]
    pub unrestricted: bool,
    /// Coin biases or threshold vector.
    pub truth: Vec<f64>,
    /// Runs of a list experiment, or runs per certificate.
    #[serde(default = "default_runs")]
    pub runs: u64,
    #[serde(default)]
    pub seed: u64,
    /// Partition spec file for list rounding; the built-in tiling if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PathBuf>,
    #[serde(default)]
    pub certificates: CertSweep,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, eps: f64, delta: f64, truth: Vec<f64>, runs: u64) -> Self {
        ExperimentConfig {
            algorithm,
            dim: truth.len(),
            eps,
            delta,
            nu: None,
            promise_c: default_promise(),
            unrestricted: false,
            truth,
            runs,
            seed: 0,
            partition: None,
            certificates: CertSweep::Exhaustive,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if self.truth.len() != self.dim {
            return bad(format!(
                "truth has {} coordinates, dim is {}",
                self.truth.len(),
                self.dim
            ));
        }
        if let Some(v) = self.truth.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return bad(format!("truth coordinate {v} outside [0, 1]"));
        }
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps = {} must be positive", self.eps));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return bad(format!("delta = {} must lie in (0, 1]", self.delta));
        }
        if let Some(nu) = self.nu {
            if !(nu > 0.0 && nu < 1.0) {
                return bad(format!("nu = {nu} must lie in (0, 1)"));
            }
        }
        if !(self.promise_c > 0.0 && self.promise_c < 1.0) {
            return bad(format!("promise_c = {} must lie in (0, 1)", self.promise_c));
        }
        if self.unrestricted
            && !matches!(
                self.algorithm,
                Algorithm::ThresholdList | Algorithm::ThresholdCert
            )
        {
            return bad("unrestricted applies to threshold-list and threshold-cert only".into());
        }
        if !self.algorithm.uses_certificate() && self.certificates != CertSweep::Exhaustive {
            return bad("certificate sweep given for a list algorithm".into());
        }
        Ok(())
    }
}
