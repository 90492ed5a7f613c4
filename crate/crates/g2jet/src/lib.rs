//! Exact jet-space exterior calculus and G2-structure machinery on R^7.

pub mod deturck;
pub mod error;
pub mod form;
pub mod g2;
pub mod jet;
pub mod linalg;
pub mod report;
pub mod solver;
pub mod sample;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{BigFloat, Dual, Radical, RadicalRing, Rational, Scalar, Sign};
