use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::canonical::CanonicalId;
use crate::error::{Error, Result};

/// Schema tag written into every report.
pub const REPORT_SCHEMA: &str = "replicable-report";
/// Current report schema version.
pub const REPORT_VERSION: u32 = 1;

/// Quantities the algorithm derived from the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    /// Examples or tosses per coin drawn by one run.
    pub samples_per_run: u64,
    /// Rounding scale: `eps` for coins, `nu` for threshold learners.
    pub scale: f64,
    /// Accuracy the sampling stage targets per coordinate.
    pub eps0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub list_bound: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    /// `linf` or `err_unif`.
    pub error_metric: String,
}

/// One distinct canonical output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFrequency {
    pub id: CanonicalId,
    pub value: Vec<f64>,
    pub count: u64,
    pub error: f64,
}

/// An observed rate against its target with binomial slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub count: u64,
    pub total: u64,
    pub fraction: f64,
    /// Target fraction, `1 − δ`.
    pub target: f64,
    /// `3·sqrt(δ(1−δ)/total)`.
    pub slack: f64,
}

impl Rate {
    pub fn new(count: u64, total: u64, delta: f64) -> Self {
        Rate {
            count,
            total,
            fraction: count as f64 / total as f64,
            target: 1.0 - delta,
            slack: 3.0 * (delta * (1.0 - delta) / total as f64).sqrt(),
        }
    }

    pub fn met(&self) -> bool {
        self.fraction >= self.target - self.slack
    }
}

/// Outcome of `K` runs under one certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    /// One `r` per block.
    pub certificate: Vec<u64>,
    /// Whether the truth lies in the analytic bad set of the certificate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_bad: Option<bool>,
    pub outputs: Vec<(CanonicalId, u64)>,
    pub max_error: f64,
    /// All `K` runs agree and the common output is within `eps`.
    pub replicating: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub runs_per_certificate: u64,
    /// `K ≥ 5`; fewer runs cannot distinguish replicating certificates.
    pub evidentiary: bool,
    pub replicating: Rate,
    pub predicted_bad: Option<u64>,
    pub rows: Vec<CertificateRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    /// Hard assertions are invariants; a failure makes the CLI exit nonzero.
    pub hard: bool,
    pub passed: bool,
    pub detail: String,
}

/// Aggregate of a replication experiment. Deterministic in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub schema: String,
    pub version: u32,
    pub config: ExperimentConfig,
    pub parameters: Parameters,
    pub runs: u64,
    /// Distinct outputs, most frequent first.
    pub outputs: Vec<OutputFrequency>,
    pub list_size: usize,
    pub max_error: f64,
    /// Runs whose output is within `eps` of the truth.
    pub success: Rate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificates: Option<CertificateSummary>,
    pub assertions: Vec<Assertion>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_ms: Option<u64>,
}

impl ReplicationReport {
    /// All hard assertions hold.
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed || !a.hard)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: ReplicationReport = serde_json::from_str(text)?;
        if report.schema != REPORT_SCHEMA || report.version != REPORT_VERSION {
            return Err(Error::Config(format!(
                "unsupported report schema {} v{}",
                report.schema, report.version
            )));
        }
        Ok(report)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ReplicationReport::from_json(&std::fs::read_to_string(path)?)
    }

    /// Frequency table: `rank,id,count,frequency,error,x1..xd`.
    pub fn frequencies_csv(&self) -> Result<String> {
        let d = self.config.dim;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["rank".to_string(), "id".into(), "count".into()];
        header.extend(["frequency".into(), "error".into()]);
        header.extend((1..=d).map(|i| format!("x{i}")));
        w.write_record(&header)?;
        for (rank, o) in self.outputs.iter().enumerate() {
            let mut row = vec![
                (rank + 1).to_string(),
                o.id.to_string(),
                o.count.to_string(),
                (o.count as f64 / self.runs as f64).to_string(),
                o.error.to_string(),
            ];
            row.extend(o.value.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        csv_string(w)
    }

    /// Certificate table: `certificate,predicted_bad,distinct,top_count,max_error,replicating`.
    pub fn certificates_csv(&self) -> Result<Option<String>> {
        let Some(summary) = &self.certificates else {
            return Ok(None);
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "certificate",
            "predicted_bad",
            "distinct",
            "top_count",
            "max_error",
            "replicating",
        ])?;
        for row in &summary.rows {
            let cert: Vec<String> = row.certificate.iter().map(u64::to_string).collect();
            let top = row.outputs.iter().map(|o| o.1).max().unwrap_or(0);
            w.write_record([
                cert.join(" "),
                row.predicted_bad.map_or(String::new(), |b| b.to_string()),
                row.outputs.len().to_string(),
                top.to_string(),
                row.max_error.to_string(),
                row.replicating.to_string(),
            ])?;
        }
        csv_string(w).map(Some)
    }

    /// Human-readable digest.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(
            s,
            "{:?} d={} eps={} delta={} runs={} seed={}",
            c.algorithm, c.dim, c.eps, c.delta, self.runs, c.seed
        );
        let _ = writeln!(
            s,
            "samples/run={} list size={}{} max error={:.6} ({})",
            self.parameters.samples_per_run,
            self.list_size,
            self.parameters
                .list_bound
                .map_or(String::new(), |k| format!(" (bound {k})")),
            self.max_error,
            self.parameters.error_metric
        );
        let r = &self.success;
        let _ = writeln!(
            s,
            "success {}/{} = {:.4} (target {:.4} - slack {:.4})",
            r.count, r.total, r.fraction, r.target, r.slack
        );
        if let Some(cs) = &self.certificates {
            let r = &cs.replicating;
            let _ = writeln!(
                s,
                "replicating certificates {}/{} (target {:.4} - slack {:.4}), K={}",
                r.count, r.total, r.target, r.slack, cs.runs_per_certificate
            );
        }
        for o in self.outputs.iter().take(10) {
            let _ = writeln!(s, "  {:>6}  {}  {:?}", o.count, o.id, o.value);
        }
        if self.outputs.len() > 10 {
            let _ = writeln!(s, "  ... {} more", self.outputs.len() - 10);
        }
        for a in &self.assertions {
            let tag = match (a.passed, a.hard) {
                (true, _) => "ok  ",
                (false, true) => "FAIL",
                (false, false) => "warn",
            };
            let _ = writeln!(s, "[{tag}] {}: {}", a.name, a.detail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
