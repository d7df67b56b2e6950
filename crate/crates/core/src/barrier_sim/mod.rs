//! Left barriers and their Monte Carlo embedding: each path draws
//! `(U, X_0)` from the lift and runs a Gaussian walk until it meets the
//! section `R_U`.

mod compare;
mod walk;

pub use compare::{compare, open_vs_closed, CompareReport, OpenClosedReport};
pub use walk::{simulate, simulate_with, PathSample, Simulation, StopRule};

use serde::{Deserialize, Serialize};

use crate::closed_set::ClosedSet;
use crate::error::{Error, Result};
use crate::measure::EPS;

/// Sections `R_u` of a left barrier on an increasing grid of `u` values.
/// Sections shrink as `u` grows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBarrier")]
pub struct Barrier {
    grid: Vec<f64>,
    sections: Vec<ClosedSet>,
}

#[derive(Deserialize)]
struct RawBarrier {
    grid: Vec<f64>,
    sections: Vec<ClosedSet>,
}

impl TryFrom<RawBarrier> for Barrier {
    type Error = Error;

    fn try_from(raw: RawBarrier) -> Result<Self> {
        Barrier::new(raw.grid, raw.sections)
    }
}

impl Barrier {
    pub fn new(grid: Vec<f64>, sections: Vec<ClosedSet>) -> Result<Self> {
        if grid.is_empty() || grid.len() != sections.len() {
            return Err(Error::InvalidConfig(format!(
                "barrier needs one section per grid point, got {} and {}",
                grid.len(),
                sections.len()
            )));
        }
        if grid.iter().any(|u| !(0.0..=1.0).contains(u)) || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("barrier grid must increase strictly inside [0, 1]".into()));
        }
        let b = Barrier { grid, sections };
        if !b.is_nested() {
            return Err(Error::OrderViolation("barrier sections must shrink as u grows".into()));
        }
        Ok(b)
    }

    /// A barrier with the same section for every `u`.
    pub fn constant(section: ClosedSet) -> Self {
        Barrier { grid: vec![0.0], sections: vec![section] }
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn sections(&self) -> &[ClosedSet] {
        &self.sections
    }

    /// The section of the last grid point at or below `u`.
    pub fn section_at(&self, u: f64) -> &ClosedSet {
        let i = self.grid.partition_point(|&g| g <= u + EPS * 1e-3);
        &self.sections[i.saturating_sub(1)]
    }

    pub fn is_nested(&self) -> bool {
        self.sections.windows(2).all(|w| w[1].is_subset_of(&w[0]))
    }

    /// Whether every section is unbounded on both sides, which makes the
    /// hitting time finite almost surely.
    pub fn is_two_sided(&self) -> bool {
        self.sections.iter().all(|s| s.inf() == Some(f64::NEG_INFINITY) && s.sup() == Some(f64::INFINITY))
    }
}

/// Monte Carlo settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub paths: usize,
    pub step: f64,
    pub seed: u64,
    pub max_steps: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { paths: 100_000, step: 1e-3, seed: 0, max_steps: 1_000_000 }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidConfig("paths must be positive".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}
