//! Order relations between discrete measures.
//!
//! Every relation reduces to finitely many comparisons of piecewise-linear
//! functions whose kinks sit on the union of atom positions, so checking at
//! those positions (plus the asymptotic slopes, which are fixed by mass and
//! first moment) is exact.

use super::{slack, DiscreteMeasure};
use crate::error::{Error, Result};

/// Convex order: equal mass, equal first moment, dominated potential.
pub fn leq_convex(a: &DiscreteMeasure, b: &DiscreteMeasure) -> bool {
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > slack(ma.max(mb)) {
        return false;
    }
    let (fa, fb) = (a.first_moment(), b.first_moment());
    if (fa - fb).abs() > slack(fa.abs().max(fb.abs())) {
        return false;
    }
    a.union_positions(b).into_iter().all(|t| {
        let (pa, pb) = (a.potential(t), b.potential(t));
        pa <= pb + slack(pb)
    })
}

/// Convex-positive order, through the call/put generators of the positive
/// convex functions.
pub fn leq_convex_positive(a: &DiscreteMeasure, b: &DiscreteMeasure) -> bool {
    let (ma, mb) = (a.mass(), b.mass());
    if ma > mb + slack(mb) {
        return false;
    }
    a.union_positions(b).into_iter().all(|t| {
        let (ca, cb) = (a.call(t), b.call(t));
        let (qa, qb) = (a.put(t), b.put(t));
        ca <= cb + slack(cb) && qa <= qb + slack(qb)
    })
}

/// Stochastic order, as pointwise quantile dominance (equivalently
/// `F_a >= F_b` everywhere).
pub fn leq_stochastic(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<bool> {
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > slack(ma.max(mb)) {
        return Err(Error::MassMismatch { left: ma, right: mb });
    }
    Ok(a.union_positions(b).into_iter().all(|t| a.cdf(t) >= b.cdf(t) - slack(ma)))
}

/// Diatomic order: `S^a(u δ_m) <=_c S^b(u δ_m)` for every `u <= 1`.
///
/// Both shadow curves are affine in `u` between their breakpoints, so the
/// union of the two breakpoint sets is a sufficient grid.
pub fn leq_diatomic(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<bool> {
    let (ma, mb) = (a.mass(), b.mass());
    for m in [ma, mb] {
        if (m - 1.0).abs() > slack(1.0) {
            return Err(Error::MassMismatch { left: ma, right: mb });
        }
    }
    let (ca, cb) = (a.barycenter()?, b.barycenter()?);
    if (ca - cb).abs() > slack(ca.abs().max(cb.abs())) {
        return Err(Error::BarycenterMismatch { left: ca, right: cb });
    }
    let (curve_a, curve_b) = (a.central_curve()?, b.central_curve()?);
    let mut grid = curve_a.breakpoints();
    grid.extend(curve_b.breakpoints());
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
    for u in grid {
        let u = u.min(1.0);
        if u <= 0.0 {
            continue;
        }
        if !leq_convex(&curve_a.window(u)?, &curve_b.window(u)?) {
            return Ok(false);
        }
    }
    Ok(true)
}
