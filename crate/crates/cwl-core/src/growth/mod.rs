//! Growth series, growth-class fitting, and the growth-based classification
//! predicates (subgroup growth, conjugate-intersection growth, covering
//! decompositions, verdict logic).

use std::fmt;
use std::io::{self, Write};

use thiserror::Error;

pub mod classify;
pub mod fit;

pub use classify::{
    conj_intersection_growth, covering_check, slc_verdict, subgroup_growth, CoveringCheck,
    SlcInputs, SlcReport, SlcVerdict,
};
pub use fit::{growth_fit, GrowthClass, GrowthLabel};

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("growth series must start at 1, got {got}")]
    BadStart { got: u64 },
    #[error("growth series decreases at radius {radius}: {prev} -> {next}")]
    NotMonotone { radius: usize, prev: u64, next: u64 },
    #[error("empty growth series")]
    Empty,
    #[error("fit window needs at least {need} points, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("fit window [{lo}, {hi}] out of range for series of length {len}")]
    BadWindow { lo: usize, hi: usize, len: usize },
    #[error(
        "verdict rules fired in both directions: {consistent_rule} vs {refuted_rule}"
    )]
    ConflictingEvidence {
        consistent_rule: &'static str,
        refuted_rule: &'static str,
    },
    #[error("no verdict inputs supplied")]
    NoInputs,
    #[error(transparent)]
    Group(#[from] crate::group::GroupError),
    #[error(transparent)]
    Coset(#[from] crate::coset::CosetError),
}

/// Where a ball count came from; carried through exports so reports stay
/// auditable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthSource {
    GroupBall,
    SchreierBall,
    SubgroupBall,
    IntersectionBall,
}

impl fmt::Display for GrowthSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GrowthSource::GroupBall => "group-ball",
            GrowthSource::SchreierBall => "schreier-ball",
            GrowthSource::SubgroupBall => "subgroup-ball",
            GrowthSource::IntersectionBall => "intersection-ball",
        };
        f.write_str(s)
    }
}

/// Cumulative ball sizes c_0 ≤ c_1 ≤ … ≤ c_R with c_0 = 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthSeries {
    counts: Vec<u64>,
    source: GrowthSource,
}

impl GrowthSeries {
    pub fn new(counts: Vec<u64>, source: GrowthSource) -> Result<Self, GrowthError> {
        let first = *counts.first().ok_or(GrowthError::Empty)?;
        if first != 1 {
            return Err(GrowthError::BadStart { got: first });
        }
        for (r, pair) in counts.windows(2).enumerate() {
            if pair[1] < pair[0] {
                return Err(GrowthError::NotMonotone {
                    radius: r + 1,
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        Ok(GrowthSeries { counts, source })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn source(&self) -> GrowthSource {
        self.source
    }

    /// Largest radius covered.
    pub fn max_radius(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn ball(&self, radius: usize) -> Option<u64> {
        self.counts.get(radius).copied()
    }

    pub fn sphere(&self, radius: usize) -> Option<u64> {
        if radius == 0 {
            return self.ball(0);
        }
        Some(self.ball(radius)? - self.ball(radius - 1)?)
    }

    /// CSV rows `radius,count,source`, one per radius.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "radius,count,source")?;
        for (r, c) in self.counts.iter().enumerate() {
            writeln!(out, "{r},{c},{}", self.source)?;
        }
        Ok(())
    }
}
