use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::partition::{MemberId, Partition, PartitionSpec};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::rng::{derive_seed, stream, stream_rng};

/// Which probes the secludedness verifier evaluates.
///
/// All probes live in the tile anchored at the origin, a fundamental domain
/// of the tiling's translation lattice. Families, in evaluation order:
///
/// * critical: along axis `i` the count `|N_eps(p)|` only changes where
///   `p_i ± eps` crosses the anchor grid `Z / q_i`. Each cell of that
///   axis-aligned arrangement gets one representative; if the product is at
///   most `critical_cap` every cell is visited (`exhaustive`), otherwise
///   `critical_cap` cells are sampled.
/// * corners: corners of the tiles around the origin, tile centers, and
///   each of them shifted by `{−eps, 0, +eps}` along every axis subset.
/// * random: `random` uniform points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub random: usize,
    pub seed: u64,
    pub corners: bool,
    pub critical_cap: usize,
}

impl ProbePlan {
    pub fn standard(random: usize, seed: u64) -> Self {
        ProbePlan {
            random,
            seed,
            corners: true,
            critical_cap: 250_000,
        }
    }

    /// Random probes only.
    pub fn random_only(random: usize, seed: u64) -> Self {
        ProbePlan {
            random,
            seed,
            corners: false,
            critical_cap: 0,
        }
    }
}

impl Default for ProbePlan {
    fn default() -> Self {
        ProbePlan::standard(20_000, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub probe: Point,
    pub count: usize,
}

/// Outcome of probing a tiling at radius `rho` against the bound `k`.
///
/// A pass is evidence, not proof: only probed points were checked, in
/// floating point. A violation is a concrete counterexample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecludedProfile {
    pub k: usize,
    pub rho: f64,
    pub probes: usize,
    /// Largest `|N_rho(p)|` over all probes.
    pub max_count: usize,
    /// First probe attaining `max_count`.
    pub witness: Point,
    /// Whether every cell of the critical arrangement was probed.
    pub exhaustive: bool,
    pub violations: usize,
    pub first_violation: Option<Violation>,
}

impl SecludedProfile {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn cyclic_representatives(mut critical: Vec<f64>) -> Vec<f64> {
    critical.sort_by(f64::total_cmp);
    critical.dedup();
    let m = critical.len();
    let mut reps = critical.clone();
    for w in critical.windows(2) {
        reps.push(0.5 * (w[0] + w[1]));
    }
    reps.push(0.5 * (critical[m - 1] - 1.0 + critical[0]));
    reps.push(0.5 * (critical[m - 1] + critical[0] + 1.0));
    reps
}

fn axis_representatives(spec: &PartitionSpec, axis: usize, eps: f64) -> Vec<f64> {
    let q = spec.axis_period(axis);
    let crit = (0..q)
        .flat_map(|k| {
            let g = k as f64 / q as f64;
            [g - eps, g + eps]
        })
        .map(|c| c.rem_euclid(1.0))
        .collect();
    cyclic_representatives(crit)
}

/// Flattened probe list (`d` coordinates per probe) and the exhaustive flag.
fn build_probes(p: &Partition, eps: f64, plan: &ProbePlan) -> (Vec<f64>, bool) {
    let d = p.dim();
    let mut probes = Vec::new();
    let mut exhaustive = false;

    if plan.critical_cap > 0 {
        let reps: Vec<Vec<f64>> = (0..d)
            .map(|i| axis_representatives(p.spec(), i, eps))
            .collect();
        let total = reps
            .iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r.len()));
        match total {
            Some(total) if total <= plan.critical_cap => {
                exhaustive = true;
                let mut idx = vec![0usize; d];
                'outer: loop {
                    probes.extend(idx.iter().enumerate().map(|(i, &j)| reps[i][j]));
                    for i in 0..d {
                        idx[i] += 1;
                        if idx[i] < reps[i].len() {
                            continue 'outer;
                        }
                        idx[i] = 0;
                    }
                    break;
                }
            }
            _ => {
                let mut rng = stream_rng(derive_seed(plan.seed, 1, stream::PROBES));
                for _ in 0..plan.critical_cap {
                    for r in &reps {
                        probes.push(r[rng.gen_range(0..r.len())]);
                    }
                }
            }
        }
    }

    if plan.corners {
        let mut base: Vec<Vec<f64>> = Vec::new();
        let window = 3usize.pow(d as u32);
        for w in 0..window {
            let z: Vec<i64> = (0..d)
                .map(|i| (w / 3usize.pow(i as u32) % 3) as i64 - 1)
                .collect();
            let anchor = p.anchor(&MemberId::new(z));
            for v in 0..(1usize << d) {
                base.push((0..d).map(|i| anchor[i] + ((v >> i) & 1) as f64).collect());
            }
        }
        for w in 0..window {
            base.push(
                (0..d)
                    .map(|i| (w / 3usize.pow(i as u32) % 3) as f64 * 0.5)
                    .collect(),
            );
        }
        let perturb = if base.len().saturating_mul(window) <= 1_000_000 {
            window
        } else {
            1
        };
        for c in &base {
            for w in 0..perturb {
                probes.extend(
                    (0..d).map(|i| c[i] + (w / 3usize.pow(i as u32) % 3) as f64 * eps - eps),
                );
            }
        }
    }

    let mut rng = stream_rng(derive_seed(plan.seed, 0, stream::PROBES));
    for _ in 0..plan.random * d {
        probes.push(rng.gen::<f64>());
    }
    (probes, exhaustive)
}

fn check_radius(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::NonPositiveRadius(eps));
    }
    Ok(())
}

/// Probes `|N_eps(p)| ≤ k`. Violations are reported in the profile, not as
/// errors.
pub fn verify_secludedness(
    p: &Partition,
    eps: f64,
    k: usize,
    plan: &ProbePlan,
) -> Result<SecludedProfile> {
    check_radius(eps)?;
    let d = p.dim();
    let (probes, exhaustive) = build_probes(p, eps, plan);

    #[derive(Clone, Copy)]
    struct Acc {
        max: usize,
        argmax: usize,
        violations: usize,
        first_violation: usize,
    }
    let merge = |a: Acc, b: Acc| Acc {
        max: a.max.max(b.max),
        argmax: match a.max.cmp(&b.max) {
            std::cmp::Ordering::Greater => a.argmax,
            std::cmp::Ordering::Less => b.argmax,
            std::cmp::Ordering::Equal => a.argmax.min(b.argmax),
        },
        violations: a.violations + b.violations,
        first_violation: a.first_violation.min(b.first_violation),
    };
    let empty = Acc {
        max: 0,
        argmax: usize::MAX,
        violations: 0,
        first_violation: usize::MAX,
    };
    let acc = probes
        .par_chunks(d)
        .enumerate()
        .fold(
            || (empty, vec![0i64; d]),
            |(acc, mut z), (idx, probe)| {
                let count = p.count_near(probe, eps, &mut z);
                let bad = count > k;
                let one = Acc {
                    max: count,
                    argmax: idx,
                    violations: bad as usize,
                    first_violation: if bad { idx } else { usize::MAX },
                };
                (merge(acc, one), z)
            },
        )
        .map(|(acc, _)| acc)
        .reduce(|| empty, merge);

    let point_at = |idx: usize| Point::from_finite(probes[idx * d..(idx + 1) * d].to_vec());
    let first_violation = (acc.violations > 0).then(|| {
        let probe = point_at(acc.first_violation);
        let mut z = vec![0; d];
        let count = p.count_near(probe.as_slice(), eps, &mut z);
        Violation { probe, count }
    });
    Ok(SecludedProfile {
        k,
        rho: eps,
        probes: probes.len() / d,
        max_count: acc.max,
        witness: point_at(acc.argmax),
        exhaustive,
        violations: acc.violations,
        first_violation,
    })
}

/// Pass/fail only, stopping at the first violation.
pub(crate) fn passes(p: &Partition, eps: f64, k: usize, plan: &ProbePlan) -> bool {
    let d = p.dim();
    let (probes, _) = build_probes(p, eps, plan);
    !probes.par_chunks(d).any(|probe| {
        let mut z = vec![0; d];
        p.count_near(probe, eps, &mut z) > k
    })
}

/// Largest radius, to within `tol`, at which the standard probe plan finds
/// no point meeting more than `k` tiles. Assumes the count is monotone in
/// the radius. Returns 0 when even tiny radii fail.
pub fn max_secluded_radius(p: &Partition, k: usize, tol: f64) -> Result<f64> {
    max_secluded_radius_with(p, k, tol, &ProbePlan::default(), 0.0)
}

pub(crate) fn max_secluded_radius_with(
    p: &Partition,
    k: usize,
    tol: f64,
    plan: &ProbePlan,
    floor: f64,
) -> Result<f64> {
    if k < 1 {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k as f64,
            expected: "k >= 1",
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            expected: "tol > 0",
        });
    }
    let (mut lo, mut hi) = (floor, 1.0);
    if passes(p, hi, k, plan) {
        return Ok(hi);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if passes(p, mid, k, plan) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// A tiling together with a passing profile. Estimators take this type so
/// their list bound `k` and radius `ρ` come from an actual verification.
#[derive(Debug, Clone)]
pub struct VerifiedPartition {
    partition: Partition,
    profile: SecludedProfile,
}

impl VerifiedPartition {
    pub fn verify(partition: Partition, k: usize, rho: f64, plan: &ProbePlan) -> Result<Self> {
        let profile = verify_secludedness(&partition, rho, k, plan)?;
        Self::from_profile(partition, profile)
    }

    pub fn from_profile(partition: Partition, profile: SecludedProfile) -> Result<Self> {
        if let Some(v) = &profile.first_violation {
            return Err(Error::VerificationFailed(format!(
                "{} meets {} tiles at radius {} (bound {})",
                serde_json::to_string(&v.probe)?,
                v.count,
                profile.rho,
                profile.k
            )));
        }
        if profile.rho.is_nan() || profile.rho <= 0.0 || profile.witness.dim() != partition.dim() {
            return Err(Error::Unverified {
                dim: partition.dim(),
            });
        }
        Ok(VerifiedPartition { partition, profile })
    }

    /// Built-in tilings with their verified radii: the grid at `1/2` for
    /// `d = 1`, the brick wall at `1/4` for `d = 2` and the searched shear
    /// at `0.165` for `d = 3`, all with `k = d + 1`.
    pub fn standard(dim: usize) -> Result<Self> {
        let spec = PartitionSpec::standard(dim).ok_or(Error::Unverified { dim })?;
        let rho = match dim {
            1 => 0.5,
            2 => 0.25,
            _ => 0.165,
        };
        Self::verify(Partition::new(spec)?, dim + 1, rho, &ProbePlan::default())
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn profile(&self) -> &SecludedProfile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn rho(&self) -> f64 {
        self.profile.rho
    }

    /// Maximum number of tiles a `rho`-ball can meet.
    pub fn list_bound(&self) -> usize {
        self.profile.k
    }
}
