//! List- and certificate-replicable estimation and learning.
//!
//! The crate is organised around one idea: an algorithm that estimates a
//! vector from samples can be made (nearly) replicable by rounding its
//! estimate to a canonical value before returning it.
//!
//! * [`geometry`] builds sheared unit-cube tilings of `R^d`, checks how many
//!   tiles a small `ℓ∞` ball can touch, and provides the two rounding
//!   primitives: deterministic rounding to tile centers and certificate-driven
//!   grid rounding.
//! * [`coins`] estimates the biases of `d` coins with either a `(d+1)`-list
//!   replicable or a certificate replicable estimator.
//! * [`sq`] simulates statistical-query learners replicably and instantiates
//!   them for axis-aligned thresholds under the uniform distribution.
//! * [`harness`] runs many independent executions, groups their canonical
//!   outputs and writes JSON reports.
//!
//! ```
//! use replicable::geometry::{Partition, PartitionSpec};
//! use replicable::Point;
//!
//! let brick = Partition::new(PartitionSpec::brick_wall()).unwrap();
//! let x = Point::new(vec![0.6, 1.2]).unwrap();
//! assert_eq!(brick.locate(&x).unwrap().as_slice(), &[0, 1]);
//! assert_eq!(brick.round_point(&x).unwrap().as_slice(), &[1.0, 1.5]);
//! ```

pub mod canonical;
pub mod coins;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod point;
pub mod rng;
pub mod sq;

pub use canonical::CanonicalId;
pub use error::{Error, Result};
pub use point::Point;
