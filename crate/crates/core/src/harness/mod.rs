//! Replication experiments.
//!
//! An experiment executes one algorithm many times on fresh samples, groups
//! the canonical outputs and reports how many distinct outputs appeared,
//! how accurate they were and, for certificate algorithms, which
//! certificates made every run agree. Run `i` draws from
//! `derive_seed(seed, i, SAMPLES)`; runs execute on the rayon pool and are
//! folded in run-index order, so a report depends only on its config.

mod config;
mod report;

use std::collections::BTreeMap;

use rand::seq::index;
use rayon::prelude::*;

pub use config::{Algorithm, CertSweep, ExperimentConfig, MAX_EXHAUSTIVE_BITS};
pub use report::{
    Assertion, CertificateRow, CertificateSummary, OutputFrequency, Parameters, Rate,
    ReplicationReport, REPORT_SCHEMA, REPORT_VERSION,
};

use crate::canonical::CanonicalId;
use crate::coins::{
    cert_eps0, cert_estimate_coins, list_estimate_coins, BiasVector, SimulatedCoins,
};
use crate::error::{Error, Result};
use crate::geometry::{
    cert_bad_set, certificate_len, CertString, PartitionFile, VerifiedPartition,
};
use crate::point::Point;
use crate::rng::{derive_seed, stream, stream_rng};
use crate::sq::{
    adaptive_cert_sq_learn, adaptive_list_sq_learn, cert_sq_learn, err_unif, list_sq_learn,
    recommended_nu, threshold_sq_program, unrestricted_nu, unrestricted_threshold_sq_program,
    HypothesisValue, SqProgram, ThresholdSampler,
};

/// Runs below this many per certificate are flagged as non-evidentiary.
pub const MIN_EVIDENTIARY_RUNS: u64 = 5;

struct Outcome {
    id: CanonicalId,
    value: Vec<f64>,
    error: f64,
    samples: u64,
}

enum Source {
    Coins(SimulatedCoins),
    Threshold {
        sampler: ThresholdSampler,
        program: SqProgram,
    },
}

struct Setup<'a> {
    cfg: &'a ExperimentConfig,
    truth: Point,
    source: Source,
    partition: Option<VerifiedPartition>,
    /// Rounding scale: `eps` for coins, `nu` for thresholds.
    scale: f64,
    /// Exact answers the rounding stage targets.
    exact: Vec<f64>,
}

impl<'a> Setup<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let truth = Point::new(cfg.truth.clone())?;
        let d = cfg.dim;
        let (source, scale, exact) = if cfg.algorithm.is_threshold() {
            let vol: f64 = cfg.truth.iter().product();
            let mut exact: Vec<f64> = cfg.truth.iter().map(|t| vol * t / 2.0).collect();
            let (program, nu) = if cfg.unrestricted {
                exact.insert(0, vol);
                (
                    unrestricted_threshold_sq_program(d, cfg.eps.min(0.999))?,
                    cfg.nu.unwrap_or(unrestricted_nu(cfg.eps, d)),
                )
            } else {
                (
                    threshold_sq_program(d, cfg.promise_c)?,
                    cfg.nu
                        .map_or_else(|| recommended_nu(cfg.eps, d, cfg.promise_c), Ok)?,
                )
            };
            let sampler = ThresholdSampler::new(truth.clone())?;
            (Source::Threshold { sampler, program }, nu, exact)
        } else {
            let coins = SimulatedCoins::new(BiasVector::new(truth.clone())?);
            (Source::Coins(coins), cfg.eps, cfg.truth.clone())
        };
        let needs_partition = matches!(
            cfg.algorithm,
            Algorithm::CoinList | Algorithm::ThresholdList
        );
        let partition = if needs_partition {
            let q = exact.len();
            let vp = match &cfg.partition {
                Some(path) => PartitionFile::load(path)?.verified()?,
                None => VerifiedPartition::standard(q)?,
            };
            if vp.dim() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    found: vp.dim(),
                });
            }
            Some(vp)
        } else {
            None
        };
        Ok(Setup {
            cfg,
            truth,
            source,
            partition,
            scale,
            exact,
        })
    }

    /// Number of rounded answers.
    fn queries(&self) -> usize {
        self.exact.len()
    }

    fn blocks(&self) -> usize {
        match self.cfg.algorithm {
            Algorithm::ThresholdAdaptiveCert => self.queries(),
            _ => 1,
        }
    }

    fn ell(&self) -> Result<u32> {
        certificate_len(self.queries(), self.cfg.delta)
    }

    fn error_of(&self, value: &Point) -> Result<f64> {
        if self.cfg.algorithm.is_threshold() {
            err_unif(value, &self.truth)
        } else {
            Ok(value.linf_dist(&self.truth))
        }
    }

    fn run(&self, seed: u64, certs: &[CertString]) -> Result<Outcome> {
        let (eps, delta) = (self.cfg.eps, self.cfg.delta);
        let (value, id, samples) = match &self.source {
            Source::Coins(coins) => {
                let out = match self.cfg.algorithm {
                    Algorithm::CoinList => {
                        let vp = self
                            .partition
                            .as_ref()
                            .expect("list rounding has a partition");
                        list_estimate_coins(eps, delta, coins, vp, seed)?
                    }
                    _ => cert_estimate_coins(eps, delta, certs[0], coins, seed)?,
                };
                (out.value, out.canonical, out.params.n)
            }
            Source::Threshold { sampler, program } => {
                let nu = self.scale;
                let h = match self.cfg.algorithm {
                    Algorithm::ThresholdList => {
                        let vp = self
                            .partition
                            .as_ref()
                            .expect("list rounding has a partition");
                        list_sq_learn(program, nu, delta, sampler, vp, seed)?
                    }
                    Algorithm::ThresholdCert => {
                        cert_sq_learn(program, nu, delta, certs[0], sampler, seed)?
                    }
                    Algorithm::ThresholdAdaptiveCert => {
                        adaptive_cert_sq_learn(program, nu, delta, certs, sampler, seed)?
                    }
                    _ => adaptive_list_sq_learn(program, nu, delta, sampler, seed)?,
                };
                let t = match h.value {
                    HypothesisValue::Threshold { t } => t,
                    HypothesisValue::Answers { v } => v,
                };
                (t, h.id, h.samples)
            }
        };
        Ok(Outcome {
            error: self.error_of(&value)?,
            value: value.into_vec(),
            id,
            samples,
        })
    }

    fn parameters(&self, samples_per_run: u64) -> Result<Parameters> {
        let q = self.queries();
        let mut p = Parameters {
            samples_per_run,
            scale: self.scale,
            eps0: self.scale / 2.0,
            rho: None,
            list_bound: None,
            ell: None,
            blocks: None,
            error_metric: if self.cfg.algorithm.is_threshold() {
                "err_unif".into()
            } else {
                "linf".into()
            },
        };
        match self.cfg.algorithm {
            Algorithm::CoinList | Algorithm::ThresholdList => {
                let vp = self
                    .partition
                    .as_ref()
                    .expect("list rounding has a partition");
                p.rho = Some(vp.rho());
                p.eps0 = vp.rho() * self.scale;
                p.list_bound = Some(vp.list_bound());
                if self.cfg.algorithm == Algorithm::CoinList && self.scale >= 0.5 {
                    p.eps0 = self.scale;
                    p.list_bound = Some(1);
                }
            }
            Algorithm::ThresholdAdaptiveList => {
                p.list_bound = u32::try_from(q).ok().and_then(|q| 1usize.checked_shl(q));
            }
            _ => {
                let ell = self.ell()?;
                p.ell = Some(ell);
                p.blocks = Some(self.blocks());
                p.eps0 = cert_eps0(self.scale, ell);
            }
        }
        Ok(p)
    }

    fn notes(&self, p: &Parameters) -> Vec<String> {
        let mut notes = vec![
            "success slack = 3*sqrt(delta*(1-delta)/runs)".to_string(),
            format!(
                "results certify only n = {} samples per run",
                p.samples_per_run
            ),
        ];
        if self.cfg.algorithm.is_threshold() {
            if self.cfg.unrestricted {
                notes.push(
                    "unrestricted program: d+1 queries, so the list bound is d+2".to_string(),
                );
            } else if self.cfg.truth.iter().any(|&t| t < self.cfg.promise_c) {
                notes.push(format!(
                    "truth lies outside the promise class [{}, 1]^d; accuracy is not guaranteed",
                    self.cfg.promise_c
                ));
            }
        }
        notes
    }

    /// Certificates of the sweep, one `CertString` per block.
    fn certificates(&self) -> Result<Vec<Vec<CertString>>> {
        let ell = self.ell()?;
        let blocks = self.blocks();
        let bits = ell as u64 * blocks as u64;
        let decode = |idx: u64| -> Result<Vec<CertString>> {
            let mask = (1u64 << ell) - 1;
            (0..blocks)
                .map(|j| CertString::new(ell, ((idx >> (j as u32 * ell)) & mask) + 1))
                .collect()
        };
        match &self.cfg.certificates {
            CertSweep::Exhaustive => {
                if bits > u64::from(MAX_EXHAUSTIVE_BITS) {
                    return Err(Error::Config(format!(
                        "{bits} certificate bits are too many to sweep exhaustively; \
                         use a sampled sweep"
                    )));
                }
                (0..1u64 << bits).map(decode).collect()
            }
            CertSweep::Sample { count } => {
                if bits > 63 {
                    return Err(Error::Config(format!(
                        "{bits} certificate bits exceed the sampler range"
                    )));
                }
                let total = 1u64 << bits;
                if *count == 0 || *count as u64 > total {
                    return Err(Error::Config(format!(
                        "sample count {count} outside 1..={total}"
                    )));
                }
                let mut rng = stream_rng(derive_seed(self.cfg.seed, 0, stream::CERTS));
                let mut picks: Vec<u64> = index::sample(&mut rng, total as usize, *count)
                    .into_iter()
                    .map(|i| i as u64)
                    .collect();
                picks.sort_unstable();
                picks.into_iter().map(decode).collect()
            }
            CertSweep::Fixed { certificates } => certificates
                .iter()
                .map(|rs| {
                    if rs.len() != blocks {
                        return Err(Error::BlockCount {
                            expected: blocks,
                            found: rs.len(),
                        });
                    }
                    rs.iter().map(|&r| CertString::new(ell, r)).collect()
                })
                .collect(),
        }
    }

    /// Per-answer bad sets of the exact answers.
    fn bad_sets(&self, eps0: f64, ell: u32) -> Result<Vec<std::collections::BTreeSet<u64>>> {
        self.exact
            .iter()
            .map(|&v| cert_bad_set(&Point::new(vec![v])?, eps0, ell))
            .collect()
    }
}

fn frequencies(outcomes: &[Outcome]) -> Vec<OutputFrequency> {
    let mut groups: BTreeMap<&CanonicalId, OutputFrequency> = BTreeMap::new();
    for o in outcomes {
        groups
            .entry(&o.id)
            .or_insert_with(|| OutputFrequency {
                id: o.id.clone(),
                value: o.value.clone(),
                count: 0,
                error: o.error,
            })
            .count += 1;
    }
    let mut out: Vec<OutputFrequency> = groups.into_values().collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.id.cmp(&b.id)));
    out
}

fn base_report(setup: &Setup<'_>, outcomes: &[Outcome], runs: u64) -> Result<ReplicationReport> {
    let cfg = setup.cfg;
    let outputs = frequencies(outcomes);
    let parameters = setup.parameters(outcomes.first().map_or(0, |o| o.samples))?;
    let successes = outcomes.iter().filter(|o| o.error <= cfg.eps).count() as u64;
    let success = Rate::new(successes, runs, cfg.delta);
    let total: u64 = outputs.iter().map(|o| o.count).sum();
    let mut assertions = vec![
        Assertion {
            name: "frequencies-sum".into(),
            hard: true,
            passed: total == runs,
            detail: format!("frequencies sum to {total} of {runs} runs"),
        },
        Assertion {
            name: "accuracy".into(),
            hard: false,
            passed: success.met(),
            detail: format!(
                "{}/{} runs within eps = {}; need fraction >= {:.4}",
                success.count,
                success.total,
                cfg.eps,
                success.target - success.slack
            ),
        },
    ];
    let list_size = outputs.len();
    if let Some(bound) = parameters.list_bound {
        assertions.push(Assertion {
            name: "list-size".into(),
            hard: true,
            passed: list_size <= bound,
            detail: format!("{list_size} distinct outputs, bound {bound}"),
        });
    }
    let notes = setup.notes(&parameters);
    Ok(ReplicationReport {
        schema: REPORT_SCHEMA.into(),
        version: REPORT_VERSION,
        config: cfg.clone(),
        parameters,
        runs,
        max_error: outcomes.iter().map(|o| o.error).fold(0.0, f64::max),
        list_size,
        outputs,
        success,
        certificates: None,
        assertions,
        notes,
        wall_clock_ms: None,
    })
}

/// Runs a list algorithm `cfg.runs` times and checks the list bound.
pub fn run_list_experiment(cfg: &ExperimentConfig) -> Result<ReplicationReport> {
    if cfg.algorithm.uses_certificate() {
        return Err(Error::Config(format!(
            "{:?} is a certificate algorithm",
            cfg.algorithm
        )));
    }
    let setup = Setup::new(cfg)?;
    let outcomes: Vec<Outcome> = (0..cfg.runs)
        .into_par_iter()
        .map(|i| setup.run(derive_seed(cfg.seed, i, stream::SAMPLES), &[]))
        .collect::<Result<_>>()?;
    base_report(&setup, &outcomes, cfg.runs)
}

/// Runs a certificate algorithm `cfg.runs` times under every certificate of
/// the sweep. A certificate replicates iff all its runs agree and the common
/// output is within `eps`.
pub fn run_cert_experiment(cfg: &ExperimentConfig) -> Result<ReplicationReport> {
    if !cfg.algorithm.uses_certificate() {
        return Err(Error::Config(format!(
            "{:?} is not a certificate algorithm",
            cfg.algorithm
        )));
    }
    let setup = Setup::new(cfg)?;
    let certs = setup.certificates()?;
    let k = cfg.runs;
    let total = certs.len() as u64 * k;
    let outcomes: Vec<Outcome> = (0..total)
        .into_par_iter()
        .map(|i| {
            let c = &certs[(i / k) as usize];
            setup.run(derive_seed(cfg.seed, i, stream::SAMPLES), c)
        })
        .collect::<Result<_>>()?;
    let mut report = base_report(&setup, &outcomes, total)?;
    let ell = setup.ell()?;
    let bad = setup.bad_sets(cert_eps0(setup.scale, ell), ell)?;
    let mut rows = Vec::with_capacity(certs.len());
    for (cert, chunk) in certs.iter().zip(outcomes.chunks(k as usize)) {
        let freq = frequencies(chunk);
        let max_error = chunk.iter().map(|o| o.error).fold(0.0, f64::max);
        let rs: Vec<u64> = cert.iter().map(CertString::r).collect();
        let predicted_bad = if setup.blocks() == 1 {
            bad.iter().any(|b| b.contains(&rs[0]))
        } else {
            bad.iter().zip(&rs).any(|(b, r)| b.contains(r))
        };
        rows.push(CertificateRow {
            certificate: rs,
            predicted_bad: Some(predicted_bad),
            replicating: freq.len() == 1 && max_error <= cfg.eps,
            outputs: freq.into_iter().map(|o| (o.id, o.count)).collect(),
            max_error,
        });
    }
    let n = rows.len() as u64;
    let replicating = Rate::new(
        rows.iter().filter(|r| r.replicating).count() as u64,
        n,
        cfg.delta,
    );
    let rows_ok = rows
        .iter()
        .all(|r| r.outputs.iter().map(|o| o.1).sum::<u64>() == k);
    report.assertions.push(Assertion {
        name: "agreement-rows-sum".into(),
        hard: true,
        passed: rows_ok,
        detail: format!("every certificate row sums to K = {k}"),
    });
    report.assertions.push(Assertion {
        name: "replicating-certificates".into(),
        hard: false,
        passed: replicating.met(),
        detail: format!(
            "{}/{} certificates replicate; need fraction >= {:.4}",
            replicating.count,
            n,
            replicating.target - replicating.slack
        ),
    });
    report
        .notes
        .push("replicating slack = 3*sqrt(delta*(1-delta)/certificates)".into());
    let evidentiary = k >= MIN_EVIDENTIARY_RUNS;
    if !evidentiary {
        report.notes.push(format!(
            "K = {k} < {MIN_EVIDENTIARY_RUNS}: unanimity of so few runs is not evidence of replication"
        ));
    }
    report.certificates = Some(CertificateSummary {
        runs_per_certificate: k,
        evidentiary,
        predicted_bad: Some(
            rows.iter()
                .filter(|r| r.predicted_bad == Some(true))
                .count() as u64,
        ),
        replicating,
        rows,
    });
    Ok(report)
}

/// Dispatches on the algorithm mode.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ReplicationReport> {
    if cfg.algorithm.uses_certificate() {
        run_cert_experiment(cfg)
    } else {
        run_list_experiment(cfg)
    }
}

/// Bias vectors that stress a list estimator at scale `eps`, most
/// demanding first: points where the scaled tiling has the most members
/// meeting (a tile corner and the verifier's witness, translated near the
/// middle of the cube), then a tile center, which rounds to one output.
pub fn adversarial_biases(partition: &VerifiedPartition, eps: f64) -> Result<Vec<BiasVector>> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            expected: "0 < eps <= 1/2",
        });
    }
    let p = partition.partition();
    let d = p.dim();
    let mid = vec![0.5 / eps; d];
    let to_point = |v: Vec<f64>| Point::new(v);
    let home = p.locate(&to_point(mid.clone())?)?;
    let corner = p.anchor(&home);
    let w = partition.profile().witness.as_slice();
    let shifted: Vec<f64> = mid.iter().zip(w).map(|(m, w)| m - w).collect();
    let base = p.anchor(&p.locate(&to_point(shifted)?)?);
    let witness: Vec<f64> = base.iter().zip(w).map(|(b, w)| b + w).collect();
    let center = p.center(&home).into_vec();

    let mut scored = Vec::new();
    for (rank, raw) in [corner, witness, center].into_iter().enumerate() {
        let mult = p.members_near(&to_point(raw.clone())?, 1e-9)?.len();
        let scaled = raw.iter().map(|v| (v * eps).clamp(0.0, 1.0)).collect();
        scored.push((mult, rank, BiasVector::from_vec(scaled)?));
    }
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().map(|s| s.2).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_run_has_one_output() {
        let cfg = ExperimentConfig::new(Algorithm::CoinList, 0.1, 0.05, vec![0.3, 0.55], 1);
        let r = run_list_experiment(&cfg).unwrap();
        assert_eq!(r.list_size, 1);
        assert_eq!(r.outputs[0].count, 1);
        assert!(r.passed());
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let cfg = ExperimentConfig::new(Algorithm::CoinCert, 0.2, 0.25, vec![0.3, 0.55], 3);
        assert!(run_list_experiment(&cfg).is_err());
        let cfg = ExperimentConfig::new(Algorithm::CoinList, 0.2, 0.25, vec![0.3, 0.55], 3);
        assert!(run_cert_experiment(&cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::new(Algorithm::CoinList, 0.1, 0.05, vec![0.3, 0.55], 0);
        assert!(cfg.validate().is_err());
        cfg.runs = 5;
        cfg.dim = 3;
        assert!(cfg.validate().is_err());
        cfg.dim = 2;
        cfg.truth[0] = 1.5;
        assert!(cfg.validate().is_err());
        cfg.truth[0] = 0.5;
        cfg.unrestricted = true;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn exhaustive_sweep_limit() {
        // Four adaptive rounds at δ = 0.05 need 4 blocks of 7 bits.
        let mut cfg =
            ExperimentConfig::new(Algorithm::ThresholdAdaptiveCert, 0.4, 0.05, vec![0.8; 4], 1);
        assert!(matches!(run_cert_experiment(&cfg), Err(Error::Config(_))));
        cfg.certificates = CertSweep::Fixed {
            certificates: vec![vec![1, 2, 3]],
        };
        assert!(matches!(
            run_cert_experiment(&cfg),
            Err(Error::BlockCount {
                expected: 4,
                found: 3
            })
        ));
    }

    #[test]
    fn few_runs_are_flagged() {
        let cfg = ExperimentConfig::new(Algorithm::CoinCert, 0.2, 0.25, vec![0.3, 0.55], 1);
        let r = run_cert_experiment(&cfg).unwrap();
        let cs = r.certificates.as_ref().unwrap();
        assert!(!cs.evidentiary);
        assert_eq!(cs.rows.len(), 8);
        // A single run always agrees with itself.
        assert!(cs.rows.iter().all(|row| row.outputs.len() == 1));
        assert!(r.notes.iter().any(|n| n.contains("not evidence")));
    }

    #[test]
    fn sampled_sweep_is_sorted_and_distinct() {
        let mut cfg = ExperimentConfig::new(Algorithm::CoinCert, 0.2, 0.25, vec![0.3, 0.55], 2);
        cfg.certificates = CertSweep::Sample { count: 5 };
        let r = run_cert_experiment(&cfg).unwrap();
        let rs: Vec<u64> = r
            .certificates
            .unwrap()
            .rows
            .iter()
            .map(|r| r.certificate[0])
            .collect();
        assert_eq!(rs.len(), 5);
        assert!(rs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn adversarial_points() {
        let line = VerifiedPartition::standard(1).unwrap();
        let b = adversarial_biases(&line, 0.1).unwrap();
        // An interval endpoint first, a center last.
        assert!((b[0].as_point()[0] - 0.5).abs() < 1e-12);
        assert!((b[2].as_point()[0] - 0.55).abs() < 1e-12);
        let brick = VerifiedPartition::standard(2).unwrap();
        let b = adversarial_biases(&brick, 0.1).unwrap();
        let scaled =
            Point::new(b[0].as_point().as_slice().iter().map(|v| v / 0.1).collect()).unwrap();
        assert_eq!(
            brick.partition().members_near(&scaled, 1e-6).unwrap().len(),
            3
        );
        assert!(adversarial_biases(&brick, 0.0).is_err());
    }

    #[test]
    fn reports_round_trip() {
        let cfg = ExperimentConfig::new(Algorithm::CoinList, 0.1, 0.05, vec![0.3, 0.55], 4);
        let r = run_list_experiment(&cfg).unwrap();
        let back = ReplicationReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        let csv = r.frequencies_csv().unwrap();
        assert!(csv.starts_with("rank,id,count,frequency,error,x1,x2\n"));
        assert_eq!(csv.lines().count(), 1 + r.outputs.len());
        assert!(r.certificates_csv().unwrap().is_none());
    }
}
