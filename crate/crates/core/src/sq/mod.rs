//! Replicable simulation of statistical-query learners.
//!
//! A statistical query `φ: (x, y) → [0, 1]` asks for `E[φ(x, y)]` within a
//! tolerance `ν`. An [`SqProgram`] is a list of queries (or a rule producing
//! them round by round) plus a deterministic postprocess from answers to a
//! hypothesis. The learners here answer the queries from samples and round
//! the answers before postprocessing, so the hypothesis inherits the
//! replicability of the rounding scheme:
//!
//! | learner | rounding | guarantee |
//! |---|---|---|
//! | [`list_sq_learn`] | secluded tiling in `R^d` | at most `d + 1` hypotheses |
//! | [`cert_sq_learn`] | grid, one certificate | canonical for most certificates |
//! | [`adaptive_cert_sq_learn`] | grid, one certificate per round | canonical for most certificate tuples |
//! | [`adaptive_list_sq_learn`] | unit grid per round | at most `2^d` hypotheses |

mod threshold;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalId;
use crate::coins::{cert_eps0, check_certificate, hoeffding_n};
use crate::error::{Error, Result};
use crate::geometry::{
    clamp_unit, grid_cert_round, scaled_list_round, CertString, Partition, PartitionSpec,
    VerifiedPartition,
};
use crate::point::Point;
use crate::rng::{derive_seed, stream};

pub use threshold::{
    err_unif, recommended_nu, threshold_postprocess, threshold_sq_program, unrestricted_nu,
    unrestricted_threshold_sq_program, ThresholdSampler,
};

/// One example `⟨x, y⟩` with `x ∈ [0,1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: Vec<f64>,
    pub y: bool,
}

/// Sample access to a labeled distribution.
pub trait ExampleSource: Sync {
    fn dim(&self) -> usize;

    /// Calls `visit` on `n` examples drawn from the stream seeded by `seed`.
    fn visit<F: FnMut(&[f64], bool)>(&self, n: u64, seed: u64, visit: F);

    fn sample(&self, n: u64, seed: u64) -> Vec<LabeledExample> {
        let mut out = Vec::with_capacity(n as usize);
        self.visit(n, seed, |x, y| {
            out.push(LabeledExample { x: x.to_vec(), y })
        });
        out
    }
}

/// Shared custom evaluator.
pub type QueryFn = Arc<dyn Fn(&[f64], bool) -> f64 + Send + Sync>;

/// A statistical query. Outputs are clamped to `[0, 1]`.
#[derive(Clone)]
pub enum Query {
    /// `φ = y`.
    Label,
    /// `φ = y · x_i`.
    LabelTimesCoord(usize),
    /// `φ ≡ c`.
    Constant(f64),
    Custom(QueryFn),
}

impl Query {
    pub fn custom(f: impl Fn(&[f64], bool) -> f64 + Send + Sync + 'static) -> Self {
        Query::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: &[f64], y: bool) -> f64 {
        let v = match self {
            Query::Label => f64::from(u8::from(y)),
            Query::LabelTimesCoord(i) => {
                if y {
                    x[*i]
                } else {
                    0.0
                }
            }
            Query::Constant(c) => *c,
            Query::Custom(f) => f(x, y),
        };
        v.clamp(0.0, 1.0)
    }
}

impl fmt::Debug for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Label => write!(f, "y"),
            Query::LabelTimesCoord(i) => write!(f, "y*x[{i}]"),
            Query::Constant(c) => write!(f, "{c}"),
            Query::Custom(_) => write!(f, "custom"),
        }
    }
}

/// Hypothesis payload built by a postprocess.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisValue {
    /// `h_t(x) = 1` iff `x_i ≤ t_i` for all `i`.
    Threshold { t: Point },
    /// The rounded answers themselves.
    Answers { v: Point },
}

/// A learned hypothesis. Equality and hashing use only the canonical id.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hypothesis {
    pub value: HypothesisValue,
    pub id: CanonicalId,
    /// Rounded answers, clamped to `[0, 1]`, as fed to the postprocess.
    pub answers: Point,
    /// Examples drawn in total.
    pub samples: u64,
}

impl PartialEq for Hypothesis {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Hypothesis {}

impl Hash for Hypothesis {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

/// Deterministic map from rounded answers to a hypothesis.
pub type Postprocess = Arc<dyn Fn(&[f64]) -> HypothesisValue + Send + Sync>;

/// Produces query `round` from the rounded answers of earlier rounds.
pub type NextQuery = Arc<dyn Fn(usize, &[f64]) -> Query + Send + Sync>;

#[derive(Clone)]
enum Queries {
    Fixed(Vec<Query>),
    Adaptive { rounds: usize, next: NextQuery },
}

#[derive(Clone)]
pub struct SqProgram {
    queries: Queries,
    postprocess: Postprocess,
}

impl SqProgram {
    pub fn nonadaptive(
        queries: Vec<Query>,
        postprocess: impl Fn(&[f64]) -> HypothesisValue + Send + Sync + 'static,
    ) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::EmptyQueryList);
        }
        Ok(SqProgram {
            queries: Queries::Fixed(queries),
            postprocess: Arc::new(postprocess),
        })
    }

    pub fn adaptive(
        rounds: usize,
        next: impl Fn(usize, &[f64]) -> Query + Send + Sync + 'static,
        postprocess: impl Fn(&[f64]) -> HypothesisValue + Send + Sync + 'static,
    ) -> Result<Self> {
        if rounds == 0 {
            return Err(Error::EmptyQueryList);
        }
        Ok(SqProgram {
            queries: Queries::Adaptive {
                rounds,
                next: Arc::new(next),
            },
            postprocess: Arc::new(postprocess),
        })
    }

    /// Number of queries, which is also the dimension of the answer vector.
    pub fn len(&self) -> usize {
        match &self.queries {
            Queries::Fixed(q) => q.len(),
            Queries::Adaptive { rounds, .. } => *rounds,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self.queries, Queries::Adaptive { .. })
    }

    /// The fixed queries of a nonadaptive program.
    pub fn queries(&self) -> Option<&[Query]> {
        match &self.queries {
            Queries::Fixed(q) => Some(q),
            Queries::Adaptive { .. } => None,
        }
    }

    /// Query of round `round` given the rounded answers so far. A nonadaptive
    /// program ignores the answers.
    pub fn query(&self, round: usize, previous: &[f64]) -> Query {
        match &self.queries {
            Queries::Fixed(q) => q[round].clone(),
            Queries::Adaptive { next, .. } => next(round, previous),
        }
    }

    pub fn postprocess(&self, answers: &[f64]) -> HypothesisValue {
        (self.postprocess)(answers)
    }

    fn fixed(&self) -> Result<&[Query]> {
        self.queries().ok_or(Error::ProgramMode {
            expected: "nonadaptive",
        })
    }
}

impl fmt::Debug for SqProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.queries {
            Queries::Fixed(q) => f.debug_struct("SqProgram").field("queries", q).finish(),
            Queries::Adaptive { rounds, .. } => {
                f.debug_struct("SqProgram").field("rounds", rounds).finish()
            }
        }
    }
}

/// Mean of every query over one shared batch of `n` examples drawn from the
/// stream seeded by `seed`.
pub fn empirical_sq_answers(
    queries: &[Query],
    n: u64,
    source: &impl ExampleSource,
    seed: u64,
) -> Result<Point> {
    if queries.is_empty() {
        return Err(Error::EmptyQueryList);
    }
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            expected: "n >= 1",
        });
    }
    let custom: Vec<(usize, &QueryFn)> = queries
        .iter()
        .enumerate()
        .filter_map(|(j, q)| match q {
            Query::Custom(f) => Some((j, f)),
            _ => None,
        })
        .collect();
    let mut positives = 0u64;
    let mut coord_sums = vec![0.0; source.dim()];
    let mut custom_sums = vec![0.0; custom.len()];
    source.visit(n, seed, |x, y| {
        // Branch-free: labels are close to coin flips.
        let w = f64::from(u8::from(y));
        positives += u64::from(y);
        for (s, v) in coord_sums.iter_mut().zip(x) {
            *s += w * v.clamp(0.0, 1.0);
        }
        for (s, (_, f)) in custom_sums.iter_mut().zip(&custom) {
            *s += f(x, y).clamp(0.0, 1.0);
        }
    });
    let mut custom_sums = custom_sums.into_iter();
    let mut answers = Vec::with_capacity(queries.len());
    for q in queries {
        answers.push(match q {
            Query::Label => positives as f64 / n as f64,
            Query::LabelTimesCoord(i) => {
                let s = coord_sums.get(*i).ok_or(Error::DimensionMismatch {
                    expected: *i + 1,
                    found: source.dim(),
                })?;
                s / n as f64
            }
            Query::Constant(c) => c.clamp(0.0, 1.0),
            Query::Custom(_) => custom_sums.next().expect("one sum per custom query") / n as f64,
        });
    }
    Point::new(answers)
}

fn check_tolerance(nu: f64, delta: f64) -> Result<()> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter {
            name: "nu",
            value: nu,
            expected: "0 < nu < 1",
        });
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            expected: "0 < delta <= 1",
        });
    }
    Ok(())
}

fn batch_seed(seed: u64, round: usize) -> u64 {
    derive_seed(seed, round as u64, stream::ROUND)
}

fn finish(prog: &SqProgram, rounded: Point, id: CanonicalId, samples: u64) -> Hypothesis {
    let answers = clamp_unit(&rounded);
    Hypothesis {
        value: prog.postprocess(answers.as_slice()),
        id,
        answers,
        samples,
    }
}

/// `(d+1)`-list replicable learner for a program of `d` nonadaptive queries.
///
/// Draws `n = hoeffding_n(ρν, δ/d)` examples once, answers every query on
/// that batch, rounds the answer vector with [`scaled_list_round`] at scale
/// `ν` and postprocesses the clamped result.
pub fn list_sq_learn(
    prog: &SqProgram,
    nu: f64,
    delta: f64,
    source: &impl ExampleSource,
    partition: &VerifiedPartition,
    seed: u64,
) -> Result<Hypothesis> {
    check_tolerance(nu, delta)?;
    let queries = prog.fixed()?;
    let d = queries.len();
    if partition.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: partition.dim(),
        });
    }
    let n = hoeffding_n(partition.rho() * nu, delta / d as f64)?;
    let answers = empirical_sq_answers(queries, n, source, batch_seed(seed, 0))?;
    let rounded = scaled_list_round(&answers, nu, partition.partition())?;
    Ok(finish(
        prog,
        rounded.value,
        CanonicalId::Member(rounded.id),
        n,
    ))
}

/// Certificate replicable learner for a program of `d` nonadaptive queries.
///
/// `ℓ = ⌈log₂(d/δ)⌉` must match `cert`. Answers every query within
/// `ν/(2^ℓ+1)` from one batch and rounds with [`grid_cert_round`].
pub fn cert_sq_learn(
    prog: &SqProgram,
    nu: f64,
    delta: f64,
    cert: CertString,
    source: &impl ExampleSource,
    seed: u64,
) -> Result<Hypothesis> {
    check_tolerance(nu, delta)?;
    let queries = prog.fixed()?;
    let d = queries.len();
    check_certificate(d, delta, &cert)?;
    let eps0 = cert_eps0(nu, cert.ell());
    let n = hoeffding_n(eps0, delta / d as f64)?;
    let answers = empirical_sq_answers(queries, n, source, batch_seed(seed, 0))?;
    let rounded = grid_cert_round(&answers, eps0, cert)?;
    Ok(finish(
        prog,
        rounded.value,
        CanonicalId::Grid(rounded.grid),
        n,
    ))
}

/// Certificate replicable learner for `d` adaptive rounds, one certificate
/// block per round.
///
/// Round `j` draws a fresh batch, answers its query within `ν/(2^ℓ+1)` and
/// rounds the answer with `certs[j]` before round `j + 1` is formed. The id
/// is the transcript of grid indices.
pub fn adaptive_cert_sq_learn(
    prog: &SqProgram,
    nu: f64,
    delta: f64,
    certs: &[CertString],
    source: &impl ExampleSource,
    seed: u64,
) -> Result<Hypothesis> {
    check_tolerance(nu, delta)?;
    let d = prog.len();
    if certs.len() != d {
        return Err(Error::BlockCount {
            expected: d,
            found: certs.len(),
        });
    }
    for cert in certs {
        check_certificate(d, delta, cert)?;
    }
    let eps0 = cert_eps0(nu, certs[0].ell());
    let n = hoeffding_n(eps0, delta / d as f64)?;
    let mut rounded = Vec::with_capacity(d);
    let mut transcript = Vec::with_capacity(d);
    for (round, cert) in certs.iter().enumerate() {
        let query = prog.query(round, &rounded);
        let answer = empirical_sq_answers(&[query], n, source, batch_seed(seed, round))?;
        let r = grid_cert_round(&answer, eps0, *cert)?;
        rounded.push(r.value[0].clamp(0.0, 1.0));
        transcript.push(r.grid[0]);
    }
    let rounded = Point::new(rounded)?;
    Ok(finish(
        prog,
        rounded,
        CanonicalId::Transcript(transcript),
        n * d as u64,
    ))
}

/// `2^d`-list replicable learner for `d` adaptive rounds.
///
/// Round `j` answers its query within `ν/2` from a fresh batch of
/// `hoeffding_n(ν/2, δ/d)` examples and rounds the answer to the nearest
/// point of `ν(Z + 1/2)`, which leaves at most two values per round.
pub fn adaptive_list_sq_learn(
    prog: &SqProgram,
    nu: f64,
    delta: f64,
    source: &impl ExampleSource,
    seed: u64,
) -> Result<Hypothesis> {
    check_tolerance(nu, delta)?;
    let d = prog.len();
    let line = Partition::new(PartitionSpec::grid(1)?)?;
    let n = hoeffding_n(nu / 2.0, delta / d as f64)?;
    let mut rounded = Vec::with_capacity(d);
    let mut transcript = Vec::with_capacity(d);
    for round in 0..d {
        let query = prog.query(round, &rounded);
        let answer = empirical_sq_answers(&[query], n, source, batch_seed(seed, round))?;
        let r = scaled_list_round(&answer, nu, &line)?;
        rounded.push(r.value[0].clamp(0.0, 1.0));
        transcript.push(r.id.as_slice()[0]);
    }
    let rounded = Point::new(rounded)?;
    Ok(finish(
        prog,
        rounded,
        CanonicalId::Transcript(transcript),
        n * d as u64,
    ))
}
