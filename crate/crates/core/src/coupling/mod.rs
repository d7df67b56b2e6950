//! Sparse couplings, lifted (u-sliced) couplings, the shadow coupling
//! constructor, and the checks that certify its characterizations.

mod classical;
mod construct;
mod verify;

pub use classical::{
    middle_slice_formula, product_coupling, quantile_coupling, stochastic_shadow, stochastic_shadow_coupling,
};
pub use construct::{barrier_family, shadow_coupling, shadow_coupling_with, shadow_curve, SlabRule};
pub use verify::{
    check_lipschitz, check_martingale, check_martingale_lifted, check_monotone, check_shadow_property, check_two_graph,
    LipschitzReport, MartingaleReport, MonotoneReport, MonotoneViolation, ShadowPropertyReport, TwoGraphReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{Atom, DiscreteMeasure, EPS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub x: f64,
    pub y: f64,
    pub mass: f64,
}

/// A finitely supported measure on `ℝ × ℝ`, sorted by `(x, y)` with
/// positions closer than [`EPS`] merged.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coupling {
    entries: Vec<Entry>,
}

/// Snaps each value to the first member of its `EPS`-cluster.
fn snap_clusters(values: &mut [f64]) {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut reps: Vec<f64> = Vec::new();
    for v in sorted {
        if reps.last().is_none_or(|&r| v - r > EPS) {
            reps.push(v);
        }
    }
    for v in values.iter_mut() {
        let i = reps.partition_point(|&r| r <= *v + EPS).saturating_sub(1);
        *v = reps[i];
    }
}

impl Coupling {
    pub fn new<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64, f64)>,
    {
        let mut raw = Vec::new();
        for (x, y, mass) in entries {
            if !(x.is_finite() && y.is_finite() && mass.is_finite()) || mass < 0.0 {
                return Err(Error::InvalidAtom(format!("coupling entry ({x}, {y}, {mass})")));
            }
            if mass > 0.0 {
                raw.push(Entry { x, y, mass });
            }
        }
        Ok(Self::from_entries(raw))
    }

    pub(crate) fn from_entries(mut raw: Vec<Entry>) -> Self {
        let mut xs: Vec<f64> = raw.iter().map(|e| e.x).collect();
        let mut ys: Vec<f64> = raw.iter().map(|e| e.y).collect();
        snap_clusters(&mut xs);
        snap_clusters(&mut ys);
        for (e, (x, y)) in raw.iter_mut().zip(xs.into_iter().zip(ys)) {
            e.x = x;
            e.y = y;
        }
        raw.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        let mut entries: Vec<Entry> = Vec::with_capacity(raw.len());
        for e in raw {
            match entries.last_mut() {
                Some(last) if last.x == e.x && last.y == e.y => last.mass += e.mass,
                _ => entries.push(e),
            }
        }
        Coupling { entries }
    }

    pub fn identity(m: &DiscreteMeasure) -> Self {
        Coupling { entries: m.atoms().iter().map(|a| Entry { x: a.x, y: a.x, mass: a.m }).collect() }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|e| e.mass).sum()
    }

    pub fn x_marginal(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_positive(self.entries.iter().map(|e| Atom { x: e.x, m: e.mass }).collect())
    }

    pub fn y_marginal(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_positive(self.entries.iter().map(|e| Atom { x: e.y, m: e.mass }).collect())
    }

    /// Distinct first coordinates, increasing.
    pub fn x_atoms(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = self.entries.iter().map(|e| e.x).collect();
        xs.dedup();
        xs
    }

    /// Unnormalized row of the coupling at `x`.
    pub fn row(&self, x: f64) -> DiscreteMeasure {
        DiscreteMeasure::from_positive(
            self.entries.iter().filter(|e| (e.x - x).abs() <= EPS).map(|e| Atom { x: e.y, m: e.mass }).collect(),
        )
    }

    /// The conditional law `π_x`.
    pub fn kernel(&self, x: f64) -> Result<DiscreteMeasure> {
        let row = self.row(x);
        let m = row.mass();
        if m <= 0.0 {
            return Err(Error::OutOfRange(format!("no coupling mass at x = {x}")));
        }
        row.scale(1.0 / m)
    }

    pub fn add(&self, other: &Coupling) -> Coupling {
        let mut all = self.entries.clone();
        all.extend_from_slice(&other.entries);
        Self::from_entries(all)
    }

    pub fn scale(&self, c: f64) -> Coupling {
        Coupling {
            entries: self.entries.iter().map(|e| Entry { mass: e.mass * c, ..*e }).filter(|e| e.mass > 0.0).collect(),
        }
    }

    /// Support points `(x, y)`.
    pub fn support(&self) -> Vec<(f64, f64)> {
        self.entries.iter().map(|e| (e.x, e.y)).collect()
    }

    /// `max_x |Σ_y y π(x, y) - x Σ_y π(x, y)|`.
    pub fn martingale_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut i = 0;
        while i < self.entries.len() {
            let x = self.entries[i].x;
            let (mut m, mut my) = (0.0, 0.0);
            while i < self.entries.len() && self.entries[i].x == x {
                m += self.entries[i].mass;
                my += self.entries[i].mass * self.entries[i].y;
                i += 1;
            }
            worst = worst.max((my - x * m).abs());
        }
        worst
    }
}

/// One `u`-slab `[u0, u1)` of a lifted coupling. The slab coupling carries
/// the full slab mass `u1 - u0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Slice {
    pub u0: f64,
    pub u1: f64,
    pub coupling: Coupling,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LiftedCoupling {
    slices: Vec<Slice>,
}

impl LiftedCoupling {
    pub fn new(slices: Vec<Slice>) -> Result<Self> {
        let mut u = 0.0;
        for s in &slices {
            if (s.u0 - u).abs() > EPS || !(s.u1 > s.u0) {
                return Err(Error::MassError(format!("slices must tile [0, 1]; found [{}, {}) after {u}", s.u0, s.u1)));
            }
            u = s.u1;
        }
        if !slices.is_empty() && (u - 1.0).abs() > EPS {
            return Err(Error::MassError(format!("slices end at {u}, not 1")));
        }
        Ok(LiftedCoupling { slices })
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }

    /// Slice boundaries `0 = u_0 < u_1 < ... < u_n = 1`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = vec![0.0];
        b.extend(self.slices.iter().map(|s| s.u1));
        b
    }

    /// The projection onto the last two coordinates.
    pub fn project(&self) -> Coupling {
        Coupling::from_entries(self.slices.iter().flat_map(|s| s.coupling.entries.iter().copied()).collect())
    }

    /// Second marginal of the first `i` slices.
    pub fn y_prefix(&self, i: usize) -> DiscreteMeasure {
        DiscreteMeasure::from_positive(
            self.slices[..i]
                .iter()
                .flat_map(|s| s.coupling.entries.iter().map(|e| Atom { x: e.y, m: e.mass }))
                .collect(),
        )
    }

    /// First marginal of the first `i` slices.
    pub fn x_prefix(&self, i: usize) -> DiscreteMeasure {
        DiscreteMeasure::from_positive(
            self.slices[..i]
                .iter()
                .flat_map(|s| s.coupling.entries.iter().map(|e| Atom { x: e.x, m: e.mass }))
                .collect(),
        )
    }

    /// Merges consecutive slices into blocks ending at the given boundaries,
    /// which must be a subset of the slice boundaries.
    pub fn coarsen(&self, bounds: &[f64]) -> Result<LiftedCoupling> {
        let mut out = Vec::new();
        let mut idx = 0;
        let mut u0 = 0.0;
        for &b in bounds.iter().filter(|&&b| b > EPS) {
            let mut acc: Vec<Entry> = Vec::new();
            while idx < self.slices.len() && self.slices[idx].u1 <= b + EPS {
                acc.extend_from_slice(&self.slices[idx].coupling.entries);
                idx += 1;
            }
            let reached = if idx == 0 { 0.0 } else { self.slices[idx - 1].u1 };
            if (reached - b).abs() > EPS || reached <= u0 {
                return Err(Error::BoundaryMismatch(b));
            }
            out.push(Slice { u0, u1: reached, coupling: Coupling::from_entries(acc) });
            u0 = reached;
        }
        LiftedCoupling::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_merge() {
        let c = Coupling::new([(0.0, 1.0, 0.25), (0.0, 1.0 + 1e-12, 0.25), (-1.0, 0.0, 0.5)]).unwrap();
        assert_eq!(c.entries().len(), 2);
        assert_eq!(c.entries()[0], Entry { x: -1.0, y: 0.0, mass: 0.5 });
        assert_eq!(c.entries()[1].mass, 0.5);
        assert!(Coupling::new([(0.0, 0.0, -1.0)]).is_err());
    }

    #[test]
    fn marginals_and_kernels() {
        let c = Coupling::new([(0.0, -1.0, 0.25), (0.0, 1.0, 0.25), (1.0, 1.0, 0.5)]).unwrap();
        assert_eq!(c.x_marginal(), DiscreteMeasure::new([(0.0, 0.5), (1.0, 0.5)]).unwrap());
        assert_eq!(c.y_marginal(), DiscreteMeasure::new([(-1.0, 0.25), (1.0, 0.75)]).unwrap());
        assert_eq!(c.kernel(0.0).unwrap(), DiscreteMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap());
        assert!(c.kernel(3.0).is_err());
        assert_eq!(c.martingale_defect(), 0.0);
        assert_eq!(c.x_atoms(), vec![0.0, 1.0]);
    }

    #[test]
    fn lifted_prefixes_and_projection() {
        let a = Coupling::new([(-1.0, -2.0, 0.375), (-1.0, 2.0, 0.125)]).unwrap();
        let b = Coupling::new([(1.0, -2.0, 0.125), (1.0, 2.0, 0.375)]).unwrap();
        let lc = LiftedCoupling::new(vec![
            Slice { u0: 0.0, u1: 0.5, coupling: a.clone() },
            Slice { u0: 0.5, u1: 1.0, coupling: b.clone() },
        ])
        .unwrap();
        assert_eq!(lc.project(), a.add(&b));
        assert_eq!(lc.y_prefix(1), a.y_marginal());
        assert_eq!(lc.boundaries(), vec![0.0, 0.5, 1.0]);
        let one = lc.coarsen(&[1.0]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.slices()[0].coupling, a.add(&b));
        assert!(LiftedCoupling::new(vec![Slice { u0: 0.1, u1: 1.0, coupling: a }]).is_err());
    }
}
