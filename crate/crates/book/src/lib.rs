//! Compiles and runs the code listings of the guide in `book/` as doctests.
//! One module per chapter, so a failure names its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/tilings.md")]
pub mod tilings {}
#[doc = include_str!("../../../book/src/rounding.md")]
pub mod rounding {}
#[doc = include_str!("../../../book/src/coins.md")]
pub mod coins {}
#[doc = include_str!("../../../book/src/sq.md")]
pub mod sq {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
