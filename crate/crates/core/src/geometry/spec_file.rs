use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::partition::{Partition, PartitionSpec, Shift};
use super::verify::{ProbePlan, SecludedProfile, VerifiedPartition};
use crate::error::{Error, Result};

/// On-disk form of a tiling:
///
/// ```json
/// {"dim": 2, "shifts": [[1, 2, "1/2"]],
///  "profile": {"k": 3, "rho": "0.25", "probes": 100000, "witness": [0.5, 0.75]}}
/// ```
///
/// Shift indices are 1-based (`[1, 2, "1/2"]` is `B₁₂ = 1/2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub dim: usize,
    pub shifts: Vec<(usize, usize, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub k: usize,
    /// Decimal string, e.g. `"0.25"`.
    pub rho: String,
    pub probes: usize,
    pub witness: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustive: Option<bool>,
}

impl PartitionFile {
    pub fn new(spec: &PartitionSpec, profile: Option<&SecludedProfile>) -> Self {
        PartitionFile {
            dim: spec.dim(),
            shifts: spec
                .shifts()
                .iter()
                .map(|s| (s.row + 1, s.col + 1, s.value.to_string()))
                .collect(),
            profile: profile.map(|p| ProfileRecord {
                k: p.k,
                rho: p.rho.to_string(),
                probes: p.probes,
                witness: p.witness.as_slice().to_vec(),
                max_count: Some(p.max_count),
                exhaustive: Some(p.exhaustive),
            }),
        }
    }

    pub fn spec(&self) -> Result<PartitionSpec> {
        let shifts = self
            .shifts
            .iter()
            .map(|(i, j, v)| {
                if *i == 0 || *j == 0 {
                    return Err(Error::SpecFile(format!(
                        "shift indices are 1-based, got [{i}, {j}]"
                    )));
                }
                let value: Ratio<i64> = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::SpecFile(format!("bad rational {v:?}")))?;
                Ok(Shift {
                    row: i - 1,
                    col: j - 1,
                    value,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PartitionSpec::new(self.dim, shifts)
    }

    pub fn rho(&self) -> Result<Option<f64>> {
        self.profile
            .as_ref()
            .map(|p| {
                p.rho
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::SpecFile(format!("bad rho {:?}", p.rho)))
            })
            .transpose()
    }

    /// Rebuilds the tiling and re-verifies the recorded `(k, rho)` with the
    /// default probe plan.
    pub fn verified(&self) -> Result<VerifiedPartition> {
        let profile = self
            .profile
            .as_ref()
            .ok_or(Error::Unverified { dim: self.dim })?;
        let rho = self.rho()?.expect("profile present");
        let partition = Partition::new(self.spec()?)?;
        VerifiedPartition::verify(partition, profile.k, rho, &ProbePlan::default())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_layout() {
        let text = r#"{"dim": 2, "shifts": [[1, 2, "1/2"]],
            "profile": {"k": 3, "rho": "0.25", "probes": 100000, "witness": [0.5, 0.75]}}"#;
        let f: PartitionFile = serde_json::from_str(text).unwrap();
        assert_eq!(f.spec().unwrap(), PartitionSpec::brick_wall());
        assert_eq!(f.rho().unwrap(), Some(0.25));
        let vp = f.verified().unwrap();
        assert_eq!(vp.list_bound(), 3);
    }

    #[test]
    fn rejects_bad_entries() {
        let zero_based: PartitionFile =
            serde_json::from_str(r#"{"dim": 2, "shifts": [[0, 1, "1/2"]]}"#).unwrap();
        assert!(zero_based.spec().is_err());
        let garbage: PartitionFile =
            serde_json::from_str(r#"{"dim": 2, "shifts": [[1, 2, "half"]]}"#).unwrap();
        assert!(garbage.spec().is_err());
        let lower: PartitionFile =
            serde_json::from_str(r#"{"dim": 2, "shifts": [[2, 1, "1/2"]]}"#).unwrap();
        assert!(matches!(lower.spec(), Err(Error::NotUnitriangular { .. })));
        let unverified: PartitionFile = serde_json::from_str(
            r#"{"dim": 2, "shifts": [[1, 2, "1/3"]],
            "profile": {"k": 3, "rho": "0.25", "probes": 1, "witness": [0, 0]}}"#,
        )
        .unwrap();
        assert!(matches!(
            unverified.verified(),
            Err(Error::VerificationFailed(_))
        ));
    }
}
