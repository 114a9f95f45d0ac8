//! `replicate`: verify tilings, run replication experiments, inspect reports.
//!
//! Exit status: 0 on success, 1 when a hard assertion fails, 2 on invalid
//! input.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use replicable::geometry::{
    search_shifts, verify_secludedness, Partition, PartitionFile, PartitionSpec, ProbePlan,
    SearchBudget,
};
use replicable::harness::{
    run_experiment, Algorithm, CertSweep, ExperimentConfig, ReplicationReport,
};

#[derive(Parser)]
#[command(
    name = "replicate",
    version,
    about = "Replicable estimation experiments"
)]
struct Cli {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON result (or CSV table) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run the experiment described by this JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Record wall-clock time in reports, which makes them nondeterministic.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Tilings: verification and shift search.
    #[command(subcommand)]
    Partition(PartitionCmd),
    /// Coin bias estimation experiments.
    #[command(subcommand)]
    Coins(CoinsCmd),
    /// Statistical-query learning experiments.
    #[command(subcommand)]
    Learn(LearnCmd),
    /// Replication reports.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Subcommand)]
enum PartitionCmd {
    /// Check that every ball of radius rho meets at most k tiles.
    Verify {
        /// Partition spec file.
        #[arg(long, conflicts_with = "builtin")]
        spec: Option<PathBuf>,
        /// Built-in tiling of this dimension (1, 2 or 3).
        #[arg(long)]
        builtin: Option<usize>,
        /// Defaults to the spec profile, else dim + 1.
        #[arg(long)]
        k: Option<usize>,
        /// Defaults to the spec profile.
        #[arg(long)]
        rho: Option<f64>,
        /// Uniform random probes on top of the structured families.
        #[arg(long, default_value_t = 20_000)]
        probes: usize,
    },
    /// Random search for a shear with a large secluded radius.
    Search {
        #[arg(long)]
        dim: usize,
        /// Defaults to dim + 1.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 40)]
        candidates: usize,
        #[arg(long, default_value_t = 8)]
        max_den: i64,
        #[arg(long, default_value_t = 2_000)]
        probes: usize,
    },
}

#[derive(Args)]
struct Accuracy {
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
}

#[derive(Subcommand)]
enum CoinsCmd {
    /// (d+1)-list replicable estimator, repeated over fresh samples.
    EstimateList {
        /// Comma-separated biases.
        #[arg(long, value_delimiter = ',', required = true)]
        bias: Vec<f64>,
        #[command(flatten)]
        acc: Accuracy,
        #[arg(long, default_value_t = 300)]
        runs: u64,
        /// Partition spec file; the built-in tiling by default.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Certificate replicable estimator, swept over certificates.
    EstimateCert {
        #[arg(long, value_delimiter = ',', required = true)]
        bias: Vec<f64>,
        #[command(flatten)]
        acc: Accuracy,
        /// Runs per certificate.
        #[arg(long, default_value_t = 20)]
        runs: u64,
        /// Only this certificate.
        #[arg(long, conflicts_with = "sample")]
        cert: Option<u64>,
        /// A random subset of this many certificates.
        #[arg(long)]
        sample: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LearnMode {
    List,
    Cert,
    AdaptiveCert,
    AdaptiveList,
}

#[derive(Subcommand)]
enum LearnCmd {
    /// Axis-aligned thresholds under the uniform distribution.
    Threshold {
        #[arg(long)]
        dim: usize,
        #[command(flatten)]
        acc: Accuracy,
        #[arg(long, value_delimiter = ',', required = true)]
        truth: Vec<f64>,
        #[arg(long, value_enum, default_value = "list")]
        mode: LearnMode,
        /// Runs, or runs per certificate.
        #[arg(long, default_value_t = 200)]
        runs: u64,
        /// Promise class [c, 1]^d.
        #[arg(long, default_value_t = 0.5)]
        promise_c: f64,
        /// Query tolerance; derived from eps by default.
        #[arg(long)]
        nu: Option<f64>,
        /// Use the d + 1 query program valid on all of [0,1]^d.
        #[arg(long)]
        unrestricted: bool,
        /// Random subset of this many certificates.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Frequencies,
    Certificates,
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Print a summary, or export a table as CSV.
    Show {
        file: PathBuf,
        #[arg(long, value_enum)]
        csv: Option<Table>,
    },
}

enum Outcome {
    Pass,
    HardFailure,
}

fn emit(out: &Option<PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn experiment(cli: &Cli, mut cfg: ExperimentConfig) -> anyhow::Result<Outcome> {
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let start = Instant::now();
    let mut report = run_experiment(&cfg)?;
    if cli.timing {
        report.wall_clock_ms = Some(start.elapsed().as_millis() as u64);
    }
    eprint!("{}", report.summary());
    emit(&cli.out, &report.to_json()?)?;
    Ok(if report.passed() {
        Outcome::Pass
    } else {
        Outcome::HardFailure
    })
}

fn partition(cli: &Cli, cmd: &PartitionCmd) -> anyhow::Result<Outcome> {
    let seed = cli.seed.unwrap_or(0);
    let (file, passed) = match cmd {
        PartitionCmd::Verify {
            spec,
            builtin,
            k,
            rho,
            probes,
        } => {
            let (spec, recorded) = match (spec, builtin) {
                (Some(path), _) => {
                    let f = PartitionFile::load(path)?;
                    let rec = f.profile.as_ref().map(|p| p.k).zip(f.rho()?);
                    (f.spec()?, rec)
                }
                (None, Some(d)) => {
                    let s = PartitionSpec::standard(*d)
                        .with_context(|| format!("no built-in tiling for dimension {d}"))?;
                    let vp = replicable::geometry::VerifiedPartition::standard(*d)?;
                    (s, Some((vp.list_bound(), vp.rho())))
                }
                (None, None) => bail!("give --spec FILE or --builtin DIM"),
            };
            let k = k.or(recorded.map(|r| r.0)).unwrap_or(spec.dim() + 1);
            let Some(rho) = rho.or(recorded.map(|r| r.1)) else {
                bail!("no radius: give --rho or a spec file with a profile");
            };
            let p = Partition::new(spec.clone())?;
            let profile = verify_secludedness(&p, rho, k, &ProbePlan::standard(*probes, seed))?;
            eprintln!(
                "{}: max {} members within {rho} over {} probes{}",
                if profile.passed() { "PASS" } else { "FAIL" },
                profile.max_count,
                profile.probes,
                if profile.exhaustive {
                    " (exhaustive)"
                } else {
                    ""
                }
            );
            if let Some(v) = &profile.first_violation {
                eprintln!("witness {:?} meets {} members", v.probe.as_slice(), v.count);
            }
            (PartitionFile::new(&spec, Some(&profile)), profile.passed())
        }
        PartitionCmd::Search {
            dim,
            k,
            candidates,
            max_den,
            probes,
        } => {
            let budget = SearchBudget {
                candidates: *candidates,
                max_denominator: *max_den,
                probes: *probes,
                ..SearchBudget::default()
            };
            let found = search_shifts(*dim, k.unwrap_or(dim + 1), &budget, seed)?;
            eprintln!(
                "best radius {} after {} candidates: {}",
                found.radius, found.evaluated, found.spec
            );
            let passed = found.profile.passed();
            (
                PartitionFile::new(&found.spec, Some(&found.profile)),
                passed,
            )
        }
    };
    emit(&cli.out, &file.to_json()?)?;
    Ok(if passed {
        Outcome::Pass
    } else {
        Outcome::HardFailure
    })
}

fn coins(cli: &Cli, cmd: &CoinsCmd) -> anyhow::Result<Outcome> {
    let cfg = match cmd {
        CoinsCmd::EstimateList {
            bias,
            acc,
            runs,
            spec,
        } => {
            let mut cfg =
                ExperimentConfig::new(Algorithm::CoinList, acc.eps, acc.delta, bias.clone(), *runs);
            cfg.partition.clone_from(spec);
            cfg
        }
        CoinsCmd::EstimateCert {
            bias,
            acc,
            runs,
            cert,
            sample,
        } => {
            let mut cfg =
                ExperimentConfig::new(Algorithm::CoinCert, acc.eps, acc.delta, bias.clone(), *runs);
            cfg.certificates = sweep(cert.map(|r| vec![r]), *sample);
            cfg
        }
    };
    experiment(cli, cfg)
}

fn sweep(fixed: Option<Vec<u64>>, sample: Option<usize>) -> CertSweep {
    match (fixed, sample) {
        (Some(rs), _) => CertSweep::Fixed {
            certificates: vec![rs],
        },
        (None, Some(count)) => CertSweep::Sample { count },
        (None, None) => CertSweep::Exhaustive,
    }
}

fn learn(cli: &Cli, cmd: &LearnCmd) -> anyhow::Result<Outcome> {
    let LearnCmd::Threshold {
        dim,
        acc,
        truth,
        mode,
        runs,
        promise_c,
        nu,
        unrestricted,
        sample,
        spec,
    } = cmd;
    if truth.len() != *dim {
        bail!("--truth has {} values for --dim {dim}", truth.len());
    }
    let algorithm = match mode {
        LearnMode::List => Algorithm::ThresholdList,
        LearnMode::Cert => Algorithm::ThresholdCert,
        LearnMode::AdaptiveCert => Algorithm::ThresholdAdaptiveCert,
        LearnMode::AdaptiveList => Algorithm::ThresholdAdaptiveList,
    };
    let mut cfg = ExperimentConfig::new(algorithm, acc.eps, acc.delta, truth.clone(), *runs);
    cfg.promise_c = *promise_c;
    cfg.nu = *nu;
    cfg.unrestricted = *unrestricted;
    cfg.partition.clone_from(spec);
    cfg.certificates = sweep(None, *sample);
    experiment(cli, cfg)
}

fn report(cli: &Cli, cmd: &ReportCmd) -> anyhow::Result<Outcome> {
    let ReportCmd::Show { file, csv } = cmd;
    let report = ReplicationReport::load(file)?;
    let text = match csv {
        None => report.summary(),
        Some(Table::Frequencies) => report.frequencies_csv()?,
        Some(Table::Certificates) => report
            .certificates_csv()?
            .context("report has no certificate table")?,
    };
    emit(&cli.out, &text)?;
    Ok(if report.passed() {
        Outcome::Pass
    } else {
        Outcome::HardFailure
    })
}

fn dispatch(cli: &Cli) -> anyhow::Result<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match (&cli.command, &cli.config) {
        (None, Some(path)) => experiment(cli, ExperimentConfig::load(path)?),
        (None, None) => bail!("nothing to do: give a subcommand or --config FILE"),
        (Some(_), Some(_)) => bail!("--config runs an experiment on its own; drop the subcommand"),
        (Some(Command::Partition(c)), None) => partition(cli, c),
        (Some(Command::Coins(c)), None) => coins(cli, c),
        (Some(Command::Learn(c)), None) => learn(cli, c),
        (Some(Command::Report(c)), None) => report(cli, c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::HardFailure) => {
            eprintln!("hard assertion failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
