//! Finite unions of closed pieces of the real line: points, bounded closed
//! intervals and rays. These are the sets a Kellerer dilation projects onto.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, EPS};

/// A closed set stored as sorted, disjoint, maximal closed intervals
/// `[lo, hi]`; `lo == hi` is a point, infinite endpoints are rays.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClosedSet {
    pieces: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Component {
    Point(f64),
    Interval(f64, f64),
    LeftRay(f64),
    RightRay(f64),
    Line,
}

impl ClosedSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pieces<I>(pieces: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in pieces {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::OutOfRange(format!("invalid closed piece [{lo}, {hi}]")));
            }
            raw.push((lo, hi));
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match pieces.last_mut() {
                Some(last) if lo <= last.1 + EPS => last.1 = last.1.max(hi),
                _ => pieces.push((lo, hi)),
            }
        }
        Ok(ClosedSet { pieces })
    }

    pub fn from_points<I: IntoIterator<Item = f64>>(points: I) -> Result<Self> {
        Self::from_pieces(points.into_iter().map(|y| (y, y)))
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn inf(&self) -> Option<f64> {
        self.pieces.first().map(|p| p.0)
    }

    pub fn sup(&self) -> Option<f64> {
        self.pieces.last().map(|p| p.1)
    }

    pub fn components(&self) -> Vec<Component> {
        self.pieces
            .iter()
            .map(|&(lo, hi)| match (lo.is_infinite(), hi.is_infinite()) {
                (true, true) => Component::Line,
                (true, false) => Component::LeftRay(hi),
                (false, true) => Component::RightRay(lo),
                _ if lo == hi => Component::Point(lo),
                _ => Component::Interval(lo, hi),
            })
            .collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|&(lo, hi)| x >= lo - EPS && x <= hi + EPS)
    }

    /// Membership in the topological interior.
    pub fn interior_contains(&self, x: f64) -> bool {
        self.pieces.iter().any(|&(lo, hi)| x > lo && x < hi)
    }

    /// `sup(T ∩ (-∞, x])`.
    pub fn nearest_below(&self, x: f64) -> Option<f64> {
        self.pieces.iter().rev().find(|p| p.0 <= x + EPS).map(|&(_, hi)| hi.min(x))
    }

    /// `inf(T ∩ [x, ∞))`.
    pub fn nearest_above(&self, x: f64) -> Option<f64> {
        self.pieces.iter().find(|p| p.1 >= x - EPS).map(|&(lo, _)| lo.max(x))
    }

    /// Gap `(a, b)` of the complement containing `x`, if `x` is not in the set.
    pub fn gap_around(&self, x: f64) -> Option<(f64, f64)> {
        if self.contains(x) {
            return None;
        }
        let lo = self.nearest_below(x).unwrap_or(f64::NEG_INFINITY);
        let hi = self.nearest_above(x).unwrap_or(f64::INFINITY);
        Some((lo, hi))
    }

    pub fn is_subset_of(&self, other: &ClosedSet) -> bool {
        self.pieces.iter().all(|&(lo, hi)| other.pieces.iter().any(|&(a, b)| lo >= a - EPS && hi <= b + EPS))
    }

    /// Adds the rays `(-∞, min(inf T, lo)]` and `[max(sup T, hi), ∞)`,
    /// producing an element of the family of sets unbounded on both sides.
    pub fn extend_to_unbounded(&self, lo: Option<f64>, hi: Option<f64>) -> Result<ClosedSet> {
        let left = match (self.inf(), lo) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return Err(Error::EmptySet),
        };
        let right = match (self.sup(), hi) {
            (Some(a), Some(b)) => a.max(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return Err(Error::EmptySet),
        };
        let mut pieces = self.pieces.clone();
        if left > f64::NEG_INFINITY {
            pieces.push((f64::NEG_INFINITY, left));
        }
        if right < f64::INFINITY {
            pieces.push((right, f64::INFINITY));
        }
        Self::from_pieces(pieces)
    }
}

/// Points carrying more than [`EPS`] mass.
pub fn closed_support(m: &DiscreteMeasure) -> ClosedSet {
    ClosedSet { pieces: m.atoms().iter().filter(|a| a.m > EPS).map(|a| (a.x, a.x)).collect() }
}

#[derive(Serialize, Deserialize, Default)]
struct RawRays {
    left: Option<f64>,
    right: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawClosedSet {
    #[serde(default)]
    points: Vec<f64>,
    #[serde(default)]
    intervals: Vec<[f64; 2]>,
    #[serde(default)]
    rays: RawRays,
}

impl Serialize for ClosedSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut raw = RawClosedSet { points: vec![], intervals: vec![], rays: RawRays::default() };
        for c in self.components() {
            match c {
                Component::Point(y) => raw.points.push(y),
                Component::Interval(a, b) => raw.intervals.push([a, b]),
                Component::LeftRay(a) => raw.rays.left = Some(a),
                Component::RightRay(b) => raw.rays.right = Some(b),
                Component::Line => {
                    raw.rays.left = Some(0.0);
                    raw.rays.right = Some(0.0);
                }
            }
        }
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ClosedSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawClosedSet::deserialize(d)?;
        let mut pieces: Vec<(f64, f64)> = raw.points.iter().map(|&y| (y, y)).collect();
        pieces.extend(raw.intervals.iter().map(|&[a, b]| (a, b)));
        if let Some(a) = raw.rays.left {
            pieces.push((f64::NEG_INFINITY, a));
        }
        if let Some(b) = raw.rays.right {
            pieces.push((b, f64::INFINITY));
        }
        ClosedSet::from_pieces(pieces).map_err(serde::de::Error::custom)
    }
}
