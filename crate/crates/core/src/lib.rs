//! Exact and numeric tools for noncommutative polynomials, tracial states,
//! orthogonal bases and Christoffel-Darboux kernels over matrix tuples.

pub mod error;
pub mod experiments;
pub mod functional;
pub mod gram;
pub mod kernel;
pub mod matpoly;
pub mod partition;
pub mod poly;
pub mod scalar;
pub mod sdp;
pub mod tensor;
pub mod traces;
pub mod word;

pub use error::{Error, Result};
pub use poly::NcPolynomial;
pub use scalar::{GaussianRational, Rational};
pub use word::{Letter, Word};
