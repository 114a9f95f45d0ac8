//! Replicable estimation of the biases of `d` coins.
//!
//! Two estimators share one sampling model: `n` tosses of every coin, then
//! the vector of empirical head frequencies is rounded to a canonical value.
//!
//! * [`list_estimate_coins`] rounds with a `(d+1, ρ)`-secluded tiling. For any
//!   bias vector, with probability `1 − δ` the output is one of at most `d+1`
//!   fixed points, each within `ε` of the truth.
//! * [`cert_estimate_coins`] rounds to a grid offset by a shared certificate
//!   `r`. For all but a `δ` fraction of certificates the output is a single
//!   canonical point with probability `1 − δ`.

use rand::distributions::{Bernoulli, Distribution};
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalId;
use crate::error::{Error, Result};
use crate::geometry::{
    certificate_len, clamp_unit, grid_cert_round, scaled_list_round, CertString, Partition,
    VerifiedPartition,
};
use crate::point::{linf_dist, Point};
use crate::rng::{derive_seed, stream, stream_rng};

/// Tosses per coin so that one empirical frequency is within `eps0` of its
/// bias with probability `1 − delta0`: `⌈ln(2/δ₀) / (2ε₀²)⌉` (two-sided
/// Hoeffding), at least 1.
///
/// ```
/// assert_eq!(replicable::coins::hoeffding_n(0.025, 0.025).unwrap(), 3506);
/// ```
pub fn hoeffding_n(eps0: f64, delta0: f64) -> Result<u64> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps0",
            value: eps0,
            expected: "0 < eps0 < 1",
        });
    }
    if !(delta0 > 0.0 && delta0 <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "delta0",
            value: delta0,
            expected: "0 < delta0 <= 1",
        });
    }
    let n = ((2.0 / delta0).ln() / (2.0 * eps0 * eps0)).ceil();
    Ok((n as u64).max(1))
}

/// True biases, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Point", into = "Point")]
pub struct BiasVector(Point);

impl BiasVector {
    pub fn new(b: Point) -> Result<Self> {
        if let Some(&v) = b.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidParameter {
                name: "bias",
                value: v,
                expected: "0 <= b_i <= 1",
            });
        }
        Ok(BiasVector(b))
    }

    pub fn from_vec(b: Vec<f64>) -> Result<Self> {
        BiasVector::new(Point::new(b)?)
    }

    pub fn as_point(&self) -> &Point {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

impl TryFrom<Point> for BiasVector {
    type Error = Error;

    fn try_from(p: Point) -> Result<Self> {
        BiasVector::new(p)
    }
}

impl From<BiasVector> for Point {
    fn from(b: BiasVector) -> Point {
        b.0
    }
}

/// Head counts from `n` tosses of each coin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinSample {
    pub n: u64,
    pub heads: Vec<u64>,
    /// Seed the sample was drawn from.
    pub seed: u64,
}

impl CoinSample {
    pub fn empirical(&self) -> Point {
        Point::from_finite(
            self.heads
                .iter()
                .map(|&h| h as f64 / self.n as f64)
                .collect(),
        )
    }
}

/// Sample access to `d` coins.
pub trait CoinSource: Sync {
    fn dim(&self) -> usize;

    /// `n ≥ 1` tosses of every coin, determined by `seed`.
    fn toss(&self, n: u64, seed: u64) -> CoinSample;
}

/// Simulated coins with known biases.
#[derive(Debug, Clone)]
pub struct SimulatedCoins {
    bias: BiasVector,
}

impl SimulatedCoins {
    pub fn new(bias: BiasVector) -> Self {
        SimulatedCoins { bias }
    }

    pub fn bias(&self) -> &BiasVector {
        &self.bias
    }
}

impl CoinSource for SimulatedCoins {
    fn dim(&self) -> usize {
        self.bias.dim()
    }

    fn toss(&self, n: u64, seed: u64) -> CoinSample {
        let heads = self
            .bias
            .as_point()
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let coin = Bernoulli::new(p).expect("bias in [0, 1]");
                let mut rng = stream_rng(derive_seed(seed, i as u64, stream::COIN));
                (0..n).filter(|_| coin.sample(&mut rng)).count() as u64
            })
            .collect();
        CoinSample { n, heads, seed }
    }
}

/// `n` tosses of every coin. Coin `i` draws from the stream
/// `derive_seed(seed, i, COIN)`, so samples replay exactly.
pub fn sample_coins(b: &BiasVector, n: u64, seed: u64) -> Result<CoinSample> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            expected: "n >= 1",
        });
    }
    Ok(SimulatedCoins::new(b.clone()).toss(n, seed))
}

/// How an estimate was rounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    /// `ε ≥ 1/2`: the all-½ vector is always within `ε`.
    Trivial,
    List {
        rho: f64,
        k: usize,
    },
    Certificate {
        ell: u32,
        r: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateParams {
    pub eps: f64,
    pub delta: f64,
    /// Tosses per coin.
    pub n: u64,
    /// Per-coordinate accuracy targeted by the sampling step.
    pub eps0: f64,
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    pub value: Point,
    pub canonical: CanonicalId,
    pub params: EstimateParams,
}

impl EstimateOutcome {
    /// Rebuilds `value` from the canonical id and the parameters. List
    /// outcomes need the tiling they were rounded with.
    pub fn value_from_id(&self, partition: Option<&Partition>) -> Option<Point> {
        let d = self.value.dim();
        match (&self.canonical, &self.params.scheme) {
            (CanonicalId::Constant, _) => Point::splat(d, 0.5).ok(),
            (CanonicalId::Member(z), Scheme::List { .. }) => {
                let center = partition?.center(z);
                let scaled = center.as_slice().iter().map(|c| c * self.params.eps);
                Some(clamp_unit(&Point::new(scaled.collect()).ok()?))
            }
            (CanonicalId::Grid(k), Scheme::Certificate { .. }) => {
                let step = 2.0 * self.params.eps0;
                let raw = k.iter().map(|&k| k as f64 * step).collect();
                Some(clamp_unit(&Point::new(raw).ok()?))
            }
            _ => None,
        }
    }
}

fn check_accuracy(eps: f64, delta: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            expected: "eps > 0",
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

/// `(d+1)`-list replicable estimate.
///
/// With `ρ` the verified radius of `partition`: take `n = hoeffding_n(ρε, δ/d)`
/// tosses per coin, round the empirical biases with
/// [`scaled_list_round`] at scale `ε`, clamp to `[0,1]^d`.
pub fn list_estimate_coins(
    eps: f64,
    delta: f64,
    source: &impl CoinSource,
    partition: &VerifiedPartition,
    seed: u64,
) -> Result<EstimateOutcome> {
    check_accuracy(eps, delta)?;
    let d = source.dim();
    if partition.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: partition.dim(),
        });
    }
    if eps >= 0.5 {
        return Ok(EstimateOutcome {
            value: Point::splat(d, 0.5)?,
            canonical: CanonicalId::Constant,
            params: EstimateParams {
                eps,
                delta,
                n: 0,
                eps0: eps,
                scheme: Scheme::Trivial,
            },
        });
    }
    let eps0 = partition.rho() * eps;
    let n = hoeffding_n(eps0, delta / d as f64)?;
    let sample = source.toss(n, seed);
    let rounded = scaled_list_round(&sample.empirical(), eps, partition.partition())?;
    Ok(EstimateOutcome {
        value: clamp_unit(&rounded.value),
        canonical: CanonicalId::Member(rounded.id),
        params: EstimateParams {
            eps,
            delta,
            n,
            eps0,
            scheme: Scheme::List {
                rho: partition.rho(),
                k: partition.list_bound(),
            },
        },
    })
}

pub(crate) fn check_certificate(dim: usize, delta: f64, cert: &CertString) -> Result<()> {
    let expected = certificate_len(dim, delta)?;
    if cert.ell() != expected {
        return Err(Error::CertificateLength {
            expected,
            found: cert.ell(),
        });
    }
    Ok(())
}

/// Accuracy each coordinate needs before certificate rounding so that the
/// rounded value is within `eps`: `eps / (2^ℓ + 1)`.
pub fn cert_eps0(eps: f64, ell: u32) -> f64 {
    eps / ((1u64 << ell) as f64 + 1.0)
}

/// `⌈log₂(d/δ)⌉`-certificate replicable estimate.
///
/// `n = hoeffding_n(ε₀, δ/d)` tosses per coin with `ε₀ = ε/(2^ℓ+1)`, then
/// [`grid_cert_round`] with the shared certificate, clamped to `[0,1]^d`.
pub fn cert_estimate_coins(
    eps: f64,
    delta: f64,
    cert: CertString,
    source: &impl CoinSource,
    seed: u64,
) -> Result<EstimateOutcome> {
    check_accuracy(eps, delta)?;
    let d = source.dim();
    check_certificate(d, delta, &cert)?;
    let eps0 = cert_eps0(eps, cert.ell());
    let n = hoeffding_n(eps0, delta / d as f64)?;
    let sample = source.toss(n, seed);
    let rounded = grid_cert_round(&sample.empirical(), eps0, cert)?;
    Ok(EstimateOutcome {
        value: clamp_unit(&rounded.value),
        canonical: CanonicalId::Grid(rounded.grid),
        params: EstimateParams {
            eps,
            delta,
            n,
            eps0,
            scheme: Scheme::Certificate {
                ell: cert.ell(),
                r: cert.r(),
            },
        },
    })
}

/// Upper bound `min(1, n·d·‖b − a‖∞)` on the total variation distance
/// between `n` tosses of coins with biases `a` and with biases `b`.
pub fn tv_upper_bound(a: &BiasVector, b: &BiasVector, n: u64) -> Result<f64> {
    b.as_point().ensure_dim(a.dim())?;
    let dist = linf_dist(a.as_point().as_slice(), b.as_point().as_slice());
    Ok((n as f64 * a.dim() as f64 * dist).min(1.0))
}
