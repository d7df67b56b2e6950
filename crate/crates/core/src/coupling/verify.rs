//! Checks for the martingale property, monotone support, the shadow-marginal
//! property, Lipschitz kernels and the left-curtain two-graph shape.

use rayon::prelude::*;
use serde::Serialize;

use super::{Coupling, LiftedCoupling};
use crate::error::Result;
use crate::lift::Lift;
use crate::measure::{w1_unchecked, DiscreteMeasure};
use crate::shadow;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub max_defect: f64,
    pub pass: bool,
}

pub fn check_martingale(c: &Coupling, tol: f64) -> MartingaleReport {
    let max_defect = c.martingale_defect();
    MartingaleReport { max_defect, pass: max_defect <= tol }
}

/// Martingale check slice by slice.
pub fn check_martingale_lifted(lc: &LiftedCoupling, tol: f64) -> MartingaleReport {
    let max_defect = lc.slices().iter().map(|s| s.coupling.martingale_defect()).fold(0.0, f64::max);
    MartingaleReport { max_defect, pass: max_defect <= tol }
}

/// Triple `(s, x, y-, y+)`, `(t, x', y')` with `s < t` and
/// `y- < y' < y+`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneViolation {
    pub s: usize,
    pub x: f64,
    pub y_minus: f64,
    pub y_plus: f64,
    pub t: usize,
    pub x_prime: f64,
    pub y_prime: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub violations: Vec<MonotoneViolation>,
    pub count: usize,
    pub pass: bool,
}

const MAX_REPORTED: usize = 100;

/// Scans for forbidden triples. For fixed `(s, x)` it is enough to test the
/// outermost pair `min y < max y` of the row.
pub fn check_monotone(lc: &LiftedCoupling, tol: f64) -> MonotoneReport {
    let slices = lc.slices();
    // Rows per slice: (x, min y, max y).
    let rows: Vec<Vec<(f64, f64, f64)>> = slices
        .iter()
        .map(|s| {
            let mut out: Vec<(f64, f64, f64)> = Vec::new();
            for e in s.coupling.entries() {
                match out.last_mut() {
                    Some(r) if r.0 == e.x => {
                        r.1 = r.1.min(e.y);
                        r.2 = r.2.max(e.y);
                    }
                    _ => out.push((e.x, e.y, e.y)),
                }
            }
            out
        })
        .collect();
    // Sorted support points (y, t, x) of all slices after index s.
    let mut later: Vec<Vec<(f64, usize, f64)>> = vec![Vec::new(); slices.len()];
    let mut acc: Vec<(f64, usize, f64)> = Vec::new();
    for s in (0..slices.len()).rev() {
        later[s] = acc.clone();
        acc.extend(slices[s].coupling.entries().iter().map(|e| (e.y, s, e.x)));
        acc.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let found: Vec<Vec<MonotoneViolation>> = (0..slices.len())
        .into_par_iter()
        .map(|s| {
            let mut v = Vec::new();
            for &(x, lo, hi) in &rows[s] {
                if hi - lo <= 2.0 * tol {
                    continue;
                }
                let pts = &later[s];
                let start = pts.partition_point(|p| p.0 <= lo + tol);
                for p in &pts[start..] {
                    if p.0 >= hi - tol {
                        break;
                    }
                    v.push(MonotoneViolation { s, x, y_minus: lo, y_plus: hi, t: p.1, x_prime: p.2, y_prime: p.0 });
                }
            }
            v
        })
        .collect();
    let count = found.iter().map(Vec::len).sum();
    let violations = found.into_iter().flatten().take(MAX_REPORTED).collect();
    MonotoneReport { violations, count, pass: count == 0 }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShadowPropertyReport {
    /// `(u, W1 discrepancy)` per slice boundary.
    pub boundaries: Vec<(f64, f64)>,
    pub max_discrepancy: f64,
    pub pass: bool,
}

/// Compares the second-marginal prefix of `lc` at every slice boundary with
/// `S^ν(μ_{[0,u]})`.
pub fn check_shadow_property(
    lc: &LiftedCoupling,
    l: &Lift,
    nu: &DiscreteMeasure,
    tol: f64,
) -> Result<ShadowPropertyReport> {
    let bounds = lc.boundaries();
    let boundaries = (1..bounds.len())
        .into_par_iter()
        .map(|i| {
            let u = bounds[i];
            let prefix = lc.y_prefix(i);
            let target = shadow::shadow(nu, &l.prefix(u))?;
            let d = w1_unchecked(&prefix, &target) + (prefix.mass() - target.mass()).abs();
            Ok((u, d))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_discrepancy = boundaries.iter().map(|b| b.1).fold(0.0, f64::max);
    Ok(ShadowPropertyReport { boundaries, max_discrepancy, pass: max_discrepancy <= tol })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    /// Worst pair `(x, x', W1(π_x, π_x'), |x - x'|)`.
    pub worst: Option<(f64, f64, f64, f64)>,
    pub max_excess: f64,
    pub pass: bool,
}

/// `W1(π_x, π_x') <= |x - x'| + tol` for every pair of first-coordinate atoms.
pub fn check_lipschitz(c: &Coupling, tol: f64) -> Result<LipschitzReport> {
    let xs = c.x_atoms();
    let kernels = xs.iter().map(|&x| c.kernel(x)).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (i + 1..xs.len()).map(move |j| (i, j))).collect();
    let worst = pairs
        .par_iter()
        .map(|&(i, j)| {
            let d = w1_unchecked(&kernels[i], &kernels[j]);
            (xs[i], xs[j], d, (xs[j] - xs[i]).abs())
        })
        .max_by(|a, b| (a.2 - a.3).total_cmp(&(b.2 - b.3)));
    let max_excess = worst.map_or(f64::NEG_INFINITY, |w| w.2 - w.3);
    Ok(LipschitzReport { worst, max_excess, pass: max_excess <= tol })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoGraphReport {
    /// Largest number of y-points in one row of one slice.
    pub max_points: usize,
    /// Later rows whose upper point drops below an earlier one.
    pub upper_drops: usize,
    /// Pairs of rows, earlier then later, with the later lower point strictly
    /// inside the earlier `]T1, T2[`.
    pub exclusions: usize,
    pub pass: bool,
}

/// Left-curtain shape read along `u`: every slice row sits on at most two
/// points `T1 <= T2`, `T2` is nondecreasing in `u`, and a later `T1` never
/// falls strictly between an earlier `T1` and `T2`.
pub fn check_two_graph(lc: &LiftedCoupling, tol: f64) -> TwoGraphReport {
    let mut rows: Vec<(f64, f64)> = Vec::new();
    let mut max_points = 0;
    for s in lc.slices() {
        let entries = s.coupling.entries();
        let mut i = 0;
        while i < entries.len() {
            let x = entries[i].x;
            let mut ys: Vec<f64> = entries[i..].iter().take_while(|e| e.x == x).map(|e| e.y).collect();
            i += ys.len();
            ys.sort_by(f64::total_cmp);
            ys.dedup_by(|a, b| (*a - *b).abs() <= tol);
            max_points = max_points.max(ys.len());
            rows.push((ys[0], ys[ys.len() - 1]));
        }
    }
    let mut upper_drops = 0;
    let mut top = f64::NEG_INFINITY;
    for r in &rows {
        if r.1 < top - tol {
            upper_drops += 1;
        }
        top = top.max(r.1);
    }
    let exclusions = (0..rows.len())
        .into_par_iter()
        .map(|i| rows[i + 1..].iter().filter(|r| r.0 > rows[i].0 + tol && r.0 < rows[i].1 - tol).count())
        .sum();
    TwoGraphReport { max_points, upper_drops, exclusions, pass: max_points <= 2 && upper_drops == 0 && exclusions == 0 }
}
