//! Packing and box pre-measures on finite metric spaces.
//!
//! The crate provides exact capacity, covering and weak-packing optimizers,
//! Method I / Method D constructions on finite set systems, symbolic
//! generators for digit-restricted Cantor sets and a nested-interval set, and
//! the scaling estimators and property suites built on top of them.

pub mod dimension;
pub mod error;
pub mod fractal;
pub mod gauge;
pub mod graph;
pub mod harness;
pub mod metric;
pub mod packing;
pub mod premeasure;
pub mod rng;

#[cfg(test)]
mod proptests;

pub use error::{Error, Result};
pub use metric::{FiniteMetricSpace, Metric, ProductSpace};
