use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::partition::{Partition, PartitionSpec, Shift};
use super::verify::{
    max_secluded_radius_with, passes, verify_secludedness, ProbePlan, SecludedProfile,
};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, stream_rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Number of random shift matrices to score.
    pub candidates: usize,
    /// Denominators of the sampled entries are drawn from `1..=max_denominator`
    /// (at most 64).
    pub max_denominator: i64,
    /// Random probes per verification; the critical and corner families are
    /// always included.
    pub probes: usize,
    /// Resolution of the radius binary search.
    pub tol: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            candidates: 40,
            max_denominator: 8,
            probes: 2_000,
            tol: 1.0 / 512.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub spec: PartitionSpec,
    /// Verification of `spec` at `radius` under the default probe plan.
    pub profile: SecludedProfile,
    /// Best verified radius; 0 when no candidate passed any radius.
    pub radius: f64,
    pub evaluated: usize,
}

fn random_spec(dim: usize, max_den: i64, rng: &mut impl Rng) -> PartitionSpec {
    let mut shifts = Vec::new();
    for row in 0..dim {
        for col in row + 1..dim {
            let q = rng.gen_range(1..=max_den);
            let p = rng.gen_range(0..q);
            shifts.push(Shift {
                row,
                col,
                value: Ratio::new(p, q),
            });
        }
    }
    PartitionSpec::new(dim, shifts).expect("sampled entries are valid")
}

/// Random search over shift matrices for the largest radius at which the
/// tiling stays `k`-secluded.
///
/// A candidate is only fully scored when it survives a quick check at the
/// current best radius, so most of the budget goes to promising matrices.
pub fn search_shifts(
    dim: usize,
    k: usize,
    budget: &SearchBudget,
    seed: u64,
) -> Result<SearchOutcome> {
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    if !(1..=64).contains(&budget.max_denominator) {
        return Err(Error::InvalidParameter {
            name: "max_denominator",
            value: budget.max_denominator as f64,
            expected: "1..=64",
        });
    }
    let plan = ProbePlan {
        random: budget.probes,
        seed,
        corners: true,
        critical_cap: 50_000,
    };
    let mut rng = stream_rng(derive_seed(seed, 0, stream::SEARCH));
    let mut best: Option<(PartitionSpec, f64)> = None;
    let mut evaluated = 0;
    let candidates = if dim == 1 {
        1
    } else {
        budget.candidates.max(1)
    };
    for _ in 0..candidates {
        let spec = random_spec(dim, budget.max_denominator, &mut rng);
        let partition = Partition::new(spec.clone())?;
        evaluated += 1;
        let floor = best.as_ref().map_or(0.0, |b| b.1);
        if floor > 0.0 && !passes(&partition, floor + budget.tol, k, &plan) {
            continue;
        }
        let r = max_secluded_radius_with(&partition, k, budget.tol, &plan, floor)?;
        if best.as_ref().is_none_or(|b| r > b.1) {
            best = Some((spec, r));
        }
    }
    let (spec, mut radius) = best.expect("at least one candidate");
    let partition = Partition::new(spec.clone())?;
    let check = ProbePlan::standard(20_000, seed);
    if radius > 0.0 && !passes(&partition, radius, k, &check) {
        radius = max_secluded_radius_with(&partition, k, budget.tol, &check, 0.0)?;
    }
    let profile = verify_secludedness(&partition, radius.max(budget.tol), k, &check)?;
    Ok(SearchOutcome {
        spec,
        profile,
        radius,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_search_recovers_the_half_shift() {
        let out = search_shifts(2, 3, &SearchBudget::default(), 3).unwrap();
        assert!((out.radius - 0.25).abs() <= 1.0 / 256.0, "{out:?}");
        assert!(out.profile.passed());
    }

    #[test]
    fn line_search_is_the_grid() {
        let out = search_shifts(1, 2, &SearchBudget::default(), 0).unwrap();
        assert_eq!(out.spec, PartitionSpec::grid(1).unwrap());
        assert!((out.radius - 0.5).abs() <= 1.0 / 256.0);
    }

    #[test]
    fn search_is_deterministic() {
        let budget = SearchBudget {
            candidates: 6,
            ..SearchBudget::default()
        };
        let a = search_shifts(3, 4, &budget, 11).unwrap();
        let b = search_shifts(3, 4, &budget, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_large_denominators() {
        let budget = SearchBudget {
            max_denominator: 65,
            ..SearchBudget::default()
        };
        assert!(search_shifts(3, 4, &budget, 0).is_err());
    }
}
