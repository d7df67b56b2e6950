//! Stochastic-order counterparts (quantile and product couplings) and the
//! explicit four-point slice of the middle curtain.

use super::{Coupling, Entry, LiftedCoupling, Slice};
use crate::error::{Error, Result};
use crate::lift::Lift;
use crate::measure::{slack, DiscreteMeasure, EPS};

/// The stochastic shadow of a mass-`u` sub-measure: the lowest quantile
/// window `(G_ν)_# λ|_{[0,u]}`.
pub fn stochastic_shadow(nu: &DiscreteMeasure, u: f64) -> Result<DiscreteMeasure> {
    nu.quantile_window(0.0, u)
}

/// Pairs the quantiles of `mu` and `nu`.
pub fn quantile_coupling(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<Coupling> {
    let (ma, mb) = (mu.mass(), nu.mass());
    if (ma - mb).abs() > slack(ma.max(mb)) {
        return Err(Error::MassMismatch { left: ma, right: mb });
    }
    let (a, b) = (mu.atoms(), nu.atoms());
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a.first().map_or(0.0, |t| t.m), b.first().map_or(0.0, |t| t.m));
    let mut entries = Vec::new();
    while i < a.len() && j < b.len() {
        let w = ra.min(rb);
        entries.push(Entry { x: a[i].x, y: b[j].x, mass: w });
        ra -= w;
        rb -= w;
        if ra <= EPS * 1e-3 {
            i += 1;
            ra = a.get(i).map_or(0.0, |t| t.m);
        }
        if rb <= EPS * 1e-3 {
            j += 1;
            rb = b.get(j).map_or(0.0, |t| t.m);
        }
    }
    Ok(Coupling::from_entries(entries))
}

/// Normalized product `μ ⊗ ν / mass(ν)`, so the first marginal is `μ`.
pub fn product_coupling(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Coupling {
    let total = nu.mass();
    Coupling::from_entries(
        mu.atoms()
            .iter()
            .flat_map(|a| nu.atoms().iter().map(move |b| Entry { x: a.x, y: b.x, mass: a.m * b.m / total }))
            .collect(),
    )
}

/// The lifted coupling obtained by replacing shadows with stochastic
/// shadows: `ν_{[0,u]} = (G_ν)_# λ|_{[0,u]}` and, on each piece, the
/// conditional is coupled independently with the matching quantile window.
pub fn stochastic_shadow_coupling(l: &Lift, nu: &DiscreteMeasure) -> Result<LiftedCoupling> {
    if (nu.mass() - 1.0).abs() > slack(1.0) {
        return Err(Error::MassMismatch { left: 1.0, right: nu.mass() });
    }
    let slices = l
        .pieces()
        .iter()
        .map(|p| {
            let window = nu.quantile_window(p.u0, p.width())?;
            let entries = p
                .conditional
                .atoms()
                .iter()
                .flat_map(|a| window.atoms().iter().map(move |b| Entry { x: a.x, y: b.x, mass: a.m * b.m }))
                .collect();
            Ok(Slice { u0: p.u0, u1: p.u1, coupling: Coupling::from_entries(entries) })
        })
        .collect::<Result<Vec<_>>>()?;
    LiftedCoupling::new(slices)
}

/// The unit-mass slice coupling of the middle curtain: `a δ_f + b δ_g`
/// (weights fixed by the barycenter `center`) sent by dilation onto the
/// outer pair `{f_out, g_out}`.
pub fn middle_slice_formula(f: f64, g: f64, f_out: f64, g_out: f64, center: f64) -> Result<Coupling> {
    if !(f_out <= f + EPS && f <= g + EPS && g <= g_out + EPS && f <= center + EPS && center <= g + EPS) {
        return Err(Error::OrderViolation(format!(
            "need f' <= f <= center <= g <= g', got {f_out}, {f}, {center}, {g}, {g_out}"
        )));
    }
    let (a, b) = if g - f > EPS { ((g - center) / (g - f), (center - f) / (g - f)) } else { (1.0, 0.0) };
    let spread = g_out - f_out;
    let send = |x: f64, w: f64| -> Vec<(f64, f64, f64)> {
        if spread <= EPS {
            return vec![(x, x, w)];
        }
        vec![(x, f_out, w * (g_out - x) / spread), (x, g_out, w * (x - f_out) / spread)]
    };
    let mut entries = send(f, a);
    entries.extend(send(g, b));
    Coupling::new(entries)
}
