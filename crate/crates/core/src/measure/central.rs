//! The curve `u -> S^m(u δ_c)` of shadows of a growing atom placed at the
//! barycenter `c` of a measure, tracked exactly through its breakpoints.
//!
//! The shadow at level `u` is the quantile window `]lo(u), lo(u) + u[` whose
//! barycenter equals `c`. Between breakpoints both window edges sit inside
//! fixed atoms `f < c < g`, and keeping the first moment equal to `u c`
//! forces the edges to move at constant rates `(g - c)/(g - f)` (left) and
//! `(c - f)/(g - f)` (right). Breakpoints occur whenever an edge exhausts its
//! atom.

use super::{slack, DiscreteMeasure};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CentralSegment {
    pub u0: f64,
    pub u1: f64,
    /// Lower window edge (in cumulative-mass coordinates) at `u0` and `u1`.
    pub lo0: f64,
    pub lo1: f64,
    /// Atom indices holding the left and right window edges. Equal when the
    /// window still sits inside an atom located at the barycenter.
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug)]
pub struct CentralCurve {
    measure: DiscreteMeasure,
    center: f64,
    segments: Vec<CentralSegment>,
}

impl CentralCurve {
    pub fn new(measure: &DiscreteMeasure) -> Result<Self> {
        let center = measure.barycenter()?;
        let total = measure.mass();
        let atoms = measure.atoms();
        let xs: Vec<f64> = atoms.iter().map(|a| a.x).collect();
        let cum = measure.cumulative();
        let n = xs.len();
        let tol = slack(center);

        let mut segments = Vec::new();
        let k = xs.iter().position(|&x| x >= center - tol).unwrap_or(n - 1);
        let (mut u, mut lo, mut hi, mut i, mut j);
        if (xs[k] - center).abs() <= tol {
            let w = atoms[k].m;
            segments.push(CentralSegment { u0: 0.0, u1: w, lo0: cum[k], lo1: cum[k], left: k, right: k });
            u = w;
            lo = cum[k];
            hi = cum[k + 1];
            i = k as isize - 1;
            j = k + 1;
        } else {
            u = 0.0;
            lo = cum[k];
            hi = cum[k];
            i = k as isize - 1;
            j = k;
        }

        let end_tol = 1e-13 * (1.0 + total);
        while u < total - end_tol && i >= 0 && j < n {
            let iu = i as usize;
            let (f, g) = (xs[iu], xs[j]);
            let rate_l = (g - center) / (g - f);
            let rate_r = (center - f) / (g - f);
            let du_l = if rate_l > 0.0 { (lo - cum[iu]) / rate_l } else { f64::INFINITY };
            let du_r = if rate_r > 0.0 { (cum[j + 1] - hi) / rate_r } else { f64::INFINITY };
            let du = du_l.min(du_r);
            let both = (du_l - du_r).abs() <= 1e-12 * (1.0 + du);
            let left_done = both || du_l < du_r;
            let right_done = both || du_r < du_l;
            let new_lo = if left_done { cum[iu] } else { lo - rate_l * du };
            let new_hi = if right_done { cum[j + 1] } else { hi + rate_r * du };
            segments.push(CentralSegment { u0: u, u1: u + du, lo0: lo, lo1: new_lo, left: iu, right: j });
            u += du;
            lo = new_lo;
            hi = new_hi;
            if left_done {
                i -= 1;
            }
            if right_done {
                j += 1;
            }
        }
        if let Some(last) = segments.last_mut() {
            // Absorb rounding at the very end: the full window is the measure.
            if (total - last.u1).abs() <= 1e-9 * (1.0 + total) {
                last.u1 = total;
                last.lo1 = 0.0;
            }
        }
        if segments.last().map(|s| s.u1) != Some(total) {
            return Err(Error::OutOfRange("central curve did not reach the full mass".into()));
        }
        Ok(CentralCurve { measure: measure.clone(), center, segments })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn segments(&self) -> &[CentralSegment] {
        &self.segments
    }

    /// Levels at which one of the window edges changes atom, including `0`
    /// and the total mass.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        out.extend(self.segments.iter().map(|s| s.u1));
        out.dedup();
        out
    }

    /// Lower window edge at level `u`.
    pub fn lower_edge(&self, u: f64) -> f64 {
        let seg = self.segments.iter().find(|s| u <= s.u1).unwrap_or_else(|| self.segments.last().unwrap());
        if seg.u1 <= seg.u0 {
            return seg.lo1;
        }
        let t = ((u - seg.u0) / (seg.u1 - seg.u0)).clamp(0.0, 1.0);
        seg.lo0 + (seg.lo1 - seg.lo0) * t
    }

    /// The shadow `S^m(u δ_c)`.
    pub fn window(&self, u: f64) -> Result<DiscreteMeasure> {
        let total = self.measure.mass();
        if u < 0.0 || u > total + slack(total) {
            return Err(Error::OutOfRange(format!("level {u} not in [0, {total}]")));
        }
        let u = u.min(total);
        let lo = self.lower_edge(u).clamp(0.0, total - u);
        self.measure.quantile_window(lo, u)
    }

    /// Edge positions `(f, g)` on the segment containing level `u`.
    pub fn edges_at(&self, u: f64) -> (f64, f64) {
        let seg = self.segments.iter().find(|s| u < s.u1).unwrap_or_else(|| self.segments.last().unwrap());
        let atoms = self.measure.atoms();
        (atoms[seg.left].x, atoms[seg.right].x)
    }
}
