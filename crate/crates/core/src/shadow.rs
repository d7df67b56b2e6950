//! Shadow projections and Kellerer dilations.
//!
//! The shadow of a single atom `a δ_x` in a target `ν` is the quantile window
//! `]s, s + a[` of `ν` whose barycenter is `x`. The first moment of that
//! window, `Φ(s) = P(s + a) - P(s)` with `P` the integrated quantile function,
//! is nondecreasing and piecewise linear with kinks at `C_k` and `C_k - a`
//! (the cumulative masses), so `s` is found by a breakpoint scan and one
//! linear interpolation.

use crate::closed_set::ClosedSet;
use crate::coupling::Coupling;
use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, EPS};

/// Kellerer dilation `P_T(x, ·)`.
pub fn dilation(t: &ClosedSet, x: f64) -> Result<DiscreteMeasure> {
    if t.is_empty() {
        return Err(Error::EmptySet);
    }
    if t.contains(x) {
        return Ok(DiscreteMeasure::dirac(x));
    }
    let hull = || Error::OutsideHull { x, lo: t.inf().unwrap_or(f64::NAN), hi: t.sup().unwrap_or(f64::NAN) };
    let lo = t.nearest_below(x).ok_or_else(hull)?;
    let hi = t.nearest_above(x).ok_or_else(hull)?;
    let w = hi - lo;
    DiscreteMeasure::new([(lo, (hi - x) / w), (hi, (x - lo) / w)])
}

/// `m(id × P_T)` as a sparse coupling.
pub fn dilation_coupling(m: &DiscreteMeasure, t: &ClosedSet) -> Result<Coupling> {
    let mut entries = Vec::new();
    for a in m.atoms() {
        for b in dilation(t, a.x)?.atoms() {
            entries.push((a.x, b.x, a.m * b.m));
        }
    }
    Coupling::new(entries)
}

/// `S^target(a δ_x)`.
pub fn shadow_atom(target: &DiscreteMeasure, x: f64, a: f64) -> Result<DiscreteMeasure> {
    if !(a > 0.0) || !x.is_finite() {
        return Err(Error::OutOfRange(format!("atom ({x}, {a})")));
    }
    let mut r = Residual::new(target);
    let taken = r.take_atom(x, a)?;
    Ok(r.measure_of(&taken))
}

/// `S^target(source)`, built atom by atom in increasing position.
pub fn shadow(target: &DiscreteMeasure, source: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let mut r = Residual::new(target);
    let mut acc = vec![0.0; r.len()];
    for atom in source.atoms() {
        for (j, w) in r.take_atom(atom.x, atom.m)? {
            acc[j] += w;
        }
    }
    Ok(r.measure_from_dense(&acc))
}

/// `target - S^target(source)`.
pub fn residual(target: &DiscreteMeasure, source: &DiscreteMeasure) -> Result<DiscreteMeasure> {
    let mut r = Residual::new(target);
    for atom in source.atoms() {
        r.take_atom(atom.x, atom.m)?;
    }
    Ok(r.measure())
}

/// A target measure being consumed by successive shadows. Masses stay
/// aligned with the original atom indices so fragments can be attributed
/// without re-matching positions.
#[derive(Clone, Debug)]
pub(crate) struct Residual {
    xs: Vec<f64>,
    ms: Vec<f64>,
    scale: f64,
}

impl Residual {
    pub(crate) fn new(target: &DiscreteMeasure) -> Self {
        let xs = target.positions();
        let scale = xs.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        Residual { ms: target.masses(), xs, scale }
    }

    pub(crate) fn len(&self) -> usize {
        self.xs.len()
    }

    pub(crate) fn positions(&self) -> &[f64] {
        &self.xs
    }

    pub(crate) fn masses(&self) -> &[f64] {
        &self.ms
    }

    pub(crate) fn measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_weights(&self.xs, &self.ms, 0.0)
    }

    pub(crate) fn measure_of(&self, taken: &[(usize, f64)]) -> DiscreteMeasure {
        let mut dense = vec![0.0; self.len()];
        for &(j, w) in taken {
            dense[j] += w;
        }
        self.measure_from_dense(&dense)
    }

    pub(crate) fn measure_from_dense(&self, dense: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::from_weights(&self.xs, dense, 0.0)
    }

    /// Subtracts `amount` from atom `j`, dropping a leftover below [`EPS`]
    /// and spreading it proportionally over the remaining atoms.
    pub(crate) fn consume(&mut self, j: usize, amount: f64) {
        self.ms[j] -= amount;
        if self.ms[j] < EPS {
            let dropped = self.ms[j];
            self.ms[j] = 0.0;
            let rest: f64 = self.ms.iter().sum();
            if rest > 0.0 && dropped != 0.0 {
                let f = (rest + dropped) / rest;
                self.ms.iter_mut().for_each(|m| *m *= f);
            }
        }
    }

    /// Plain subtraction, used by the exact flow which tracks exhaustion
    /// itself.
    pub(crate) fn reduce(&mut self, j: usize, amount: f64) {
        self.ms[j] -= amount;
    }

    /// Marks atom `j` as exhausted without redistributing anything.
    pub(crate) fn exhaust(&mut self, j: usize) {
        self.ms[j] = 0.0;
    }

    /// Shadows `a δ_x` into the current residual, removes it, and returns the
    /// per-atom fragments that were taken.
    pub(crate) fn take_atom(&mut self, x: f64, a: f64) -> Result<Vec<(usize, f64)>> {
        let (s, a) = self.solve_window(x, a)?;
        let mut taken = Vec::new();
        let mut c0 = 0.0;
        for (j, &m) in self.ms.iter().enumerate() {
            let c1 = c0 + m;
            let w = c1.min(s + a) - c0.max(s);
            if w > 0.0 {
                taken.push((j, w.min(m)));
            }
            c0 = c1;
        }
        for &(j, w) in &taken {
            self.consume(j, w);
        }
        Ok(taken)
    }

    /// Smallest `s` with `Φ(s) = a x`, returned together with the (possibly
    /// clamped) window length.
    fn solve_window(&self, x: f64, a: f64) -> Result<(f64, f64)> {
        let n = self.len();
        let mut cum = Vec::with_capacity(n + 1);
        let mut mom = Vec::with_capacity(n + 1);
        let (mut c, mut p) = (0.0, 0.0);
        cum.push(c);
        mom.push(p);
        for j in 0..n {
            c += self.ms[j];
            p += self.ms[j] * self.xs[j];
            cum.push(c);
            mom.push(p);
        }
        let total = c;
        let tol = EPS * (1.0 + a * (x.abs() + self.scale));
        if a > total + EPS * (1.0 + total) {
            return Err(Error::NotDominated);
        }
        let a = a.min(total);
        let span = total - a;
        // Integrated quantile function at cumulative level `s`.
        let big_p = |s: f64| -> f64 {
            let k = cum.partition_point(|&ck| ck < s).saturating_sub(1).min(n.saturating_sub(1));
            if n == 0 {
                return 0.0;
            }
            mom[k] + self.xs[k] * (s - cum[k]).max(0.0)
        };
        let phi = |s: f64| big_p(s + a) - big_p(s);
        let goal = a * x;

        let mut grid: Vec<f64> = cum.iter().flat_map(|&ck| [ck, ck - a]).filter(|&s| s > 0.0 && s < span).collect();
        grid.push(0.0);
        grid.push(span);
        grid.sort_by(f64::total_cmp);
        grid.dedup();

        let values: Vec<f64> = grid.iter().map(|&s| phi(s)).collect();
        if goal < values[0] - tol || goal > values[values.len() - 1] + tol {
            return Err(Error::NotDominated);
        }
        let i = values.partition_point(|&v| v < goal);
        let s = if i == 0 {
            0.0
        } else if i == values.len() {
            span
        } else {
            let (s0, s1) = (grid[i - 1], grid[i]);
            let (v0, v1) = (values[i - 1], values[i]);
            (s0 + (goal - v0) / (v1 - v0) * (s1 - s0)).clamp(s0, s1)
        };
        Ok((s, a))
    }
}
