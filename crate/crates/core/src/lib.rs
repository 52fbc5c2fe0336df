//! Finite-truncation toolkit for numerable principal bundles: smooth cutoff
//! functions, a zero-detecting functional, smooth partitions of unity, the
//! Milnor construction `EG -> BG`, cocycle bundles with their classifying
//! maps, and homotopy transport over cylinders.
//!
//! Everything that needs transcendental functions is generic over
//! [`Real`] (`f32`/`f64`); group arithmetic and the combinatorics of Milnor
//! points are generic over [`Scalar`], which also admits exact rationals.

pub mod bundle;
pub mod config;
pub mod error;
pub mod expr;
pub mod format;
pub mod group;
pub mod harness;
pub mod homotopy;
pub mod milnor;
pub mod partition;
pub mod report;
pub mod scalar;
pub mod smooth;
pub mod zero_detect;
pub mod zoo;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use scalar::{Rational, Real, Scalar};

pub type SmoothMapF64 = smooth::SmoothMap<f64>;
pub type SmoothMapF32 = smooth::SmoothMap<f32>;
pub type MilnorPointF64 = milnor::MilnorPoint<f64>;
pub type MilnorPointQ = milnor::MilnorPoint<Rational>;
