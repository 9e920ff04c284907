//! Exact-arithmetic toolkit for Lebesgue differentiation at polynomial-space
//! random points: dyadic geometry and measure, simple step functions, dyadic
//! martingales, W-tests with their approximating arrays, dyadic tree
//! decompositions, and the oscillating counterexample functions built on them.

pub mod counterexample;
pub mod dyadic;
pub mod error;
pub mod martingale;
pub mod poly;
pub mod scalar;
pub mod stepfn;
pub mod tree;
pub mod wtest;

pub use error::{Error, Result};
pub use poly::Poly;
pub use scalar::ExactScalar;
