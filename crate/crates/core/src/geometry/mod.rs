//! Sheared unit-cube tilings of `R^d` and the rounding primitives built on
//! them.

mod partition;
mod rounding;
mod search;
mod spec_file;
mod verify;

pub use partition::{MemberId, Partition, PartitionSpec, Shift, MAX_DENOMINATOR};
pub use rounding::{
    cert_bad_set, certificate_len, clamp_unit, grid_cert_round, scaled_list_round, CertRounded,
    CertString, ListRounded,
};
pub use search::{search_shifts, SearchBudget, SearchOutcome};
pub use spec_file::{PartitionFile, ProfileRecord};
pub use verify::{
    max_secluded_radius, verify_secludedness, ProbePlan, SecludedProfile, VerifiedPartition,
    Violation,
};
