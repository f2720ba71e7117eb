//! Symbolic generators with exact scaling oracles: digit-restricted Cantor
//! sets, the log-sequence set and the nested-interval set 𝕐 with ℤ = 𝕐^m.

pub mod digits;
pub mod logset;
pub mod schedule;
pub mod z;

pub use digits::{BlockRule, DigitBlocks, DigitSet, Variant};
pub use logset::LogSequenceSet;
pub use schedule::{exhaustion_schedule, Component, Schedule, ScheduleKind, Stage};
pub use z::{build_z, Depth, ZConstruction, ZRadius};



/// Default cap on materialized point counts.
pub const DEFAULT_POINT_CAP: usize = 1 << 20;

/// Closed bracket `[lower, upper]` on a count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountBracket<T> {
    pub lower: T,
    pub upper: T,
}

impl<T: PartialEq + Clone> CountBracket<T> {
    pub fn exact(v: T) -> Self {
        Self { lower: v.clone(), upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}
