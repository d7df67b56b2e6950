//! The lifted shadow coupling.
//!
//! Slabs are processed in increasing `u`, drawing from the running residual
//! `ν - ν_{[0,u]}`. Two slab rules are available:
//!
//! * [`SlabRule::Exact`] (default) integrates the shadow flow exactly. While no
//!   residual atom runs out, adding mass `Δ p` shadows onto `Δ p P_T` with
//!   `T` the current residual support, so each slab is split at the first
//!   `Δ` at which a residual atom is used up. The result does not depend on
//!   the refinement.
//! * [`SlabRule::Window`] shadows every atom of `Δ p` into the residual in
//!   increasing position, one slab at a time. Its error is of the order of the
//!   slab width.

use super::{Coupling, Entry, LiftedCoupling, Slice};
use crate::barrier_sim::Barrier;
use crate::closed_set::closed_support;
use crate::error::{Error, Result};
use crate::lift::Lift;
use crate::measure::{leq_convex, DiscreteMeasure, EPS};
use crate::shadow::{self, Residual};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SlabRule {
    #[default]
    Exact,
    Window,
}

impl std::str::FromStr for SlabRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SlabRule::Exact),
            "window" => Ok(SlabRule::Window),
            _ => Err(Error::InvalidConfig(format!("unknown slab rule {s:?}"))),
        }
    }
}

/// Residual masses below this are treated as used up by the exact flow.
const EXHAUSTED: f64 = 1e-13;

fn require_convex_order(l: &Lift, nu: &DiscreteMeasure) -> Result<()> {
    if !leq_convex(&l.marginal(), nu) {
        return Err(Error::NotInConvexOrder);
    }
    Ok(())
}

pub fn shadow_coupling(l: &Lift, nu: &DiscreteMeasure, k: usize) -> Result<LiftedCoupling> {
    shadow_coupling_with(l, nu, k, SlabRule::Exact)
}

pub fn shadow_coupling_with(l: &Lift, nu: &DiscreteMeasure, k: usize, rule: SlabRule) -> Result<LiftedCoupling> {
    require_convex_order(l, nu)?;
    let refined = l.refine(k)?;
    let mut r = Residual::new(nu);
    let mut slices = Vec::with_capacity(refined.len());
    for piece in refined.pieces() {
        match rule {
            SlabRule::Window => {
                let width = piece.width();
                let mut entries = Vec::new();
                for a in piece.conditional.atoms() {
                    for (j, w) in r.take_atom(a.x, a.m * width)? {
                        entries.push(Entry { x: a.x, y: r.positions()[j], mass: w });
                    }
                }
                slices.push(Slice { u0: piece.u0, u1: piece.u1, coupling: Coupling::from_entries(entries) });
            }
            SlabRule::Exact => exact_flow(&mut r, piece.u0, piece.u1, &piece.conditional, &mut slices),
        }
    }
    LiftedCoupling::new(slices)
}

/// Kernel `P_T(x, ·)` on residual indices, `T` the atoms still alive.
fn alive_kernel(r: &Residual, x: f64) -> Vec<(usize, f64)> {
    let xs = r.positions();
    let ms = r.masses();
    let mut below = None;
    let mut above = None;
    for j in 0..xs.len() {
        if ms[j] <= 0.0 {
            continue;
        }
        if (xs[j] - x).abs() <= EPS {
            return vec![(j, 1.0)];
        }
        if xs[j] < x {
            below = Some(j);
        } else if above.is_none() {
            above = Some(j);
        }
    }
    match (below, above) {
        (Some(i), Some(j)) => {
            let w = xs[j] - xs[i];
            vec![(i, (xs[j] - x) / w), (j, (x - xs[i]) / w)]
        }
        // Only reachable through rounding at the edge of the hull.
        (Some(i), None) => vec![(i, 1.0)],
        (None, Some(j)) => vec![(j, 1.0)],
        (None, None) => Vec::new(),
    }
}

fn exact_flow(r: &mut Residual, u0: f64, u1: f64, p: &DiscreteMeasure, out: &mut Vec<Slice>) {
    let n = r.len();
    let mut u = u0;
    while u < u1 {
        let kernels: Vec<Vec<(usize, f64)>> = p.atoms().iter().map(|a| alive_kernel(r, a.x)).collect();
        let mut rate = vec![0.0; n];
        for (a, ker) in p.atoms().iter().zip(&kernels) {
            for &(j, w) in ker {
                rate[j] += a.m * w;
            }
        }
        let remaining = u1 - u;
        let mut dstar = f64::INFINITY;
        for j in 0..n {
            if rate[j] > 0.0 {
                dstar = dstar.min(r.masses()[j] / rate[j]);
            }
        }
        let (delta, end) = if dstar >= remaining - 1e-15 { (remaining, u1) } else { (dstar, u + dstar) };
        let mut entries = Vec::new();
        for (a, ker) in p.atoms().iter().zip(&kernels) {
            for &(j, w) in ker {
                entries.push(Entry { x: a.x, y: r.positions()[j], mass: a.m * w * delta });
            }
        }
        for j in 0..n {
            if rate[j] > 0.0 {
                let left = r.masses()[j] - rate[j] * delta;
                if left <= EXHAUSTED || (delta == dstar && r.masses()[j] / rate[j] <= dstar * (1.0 + 1e-12)) {
                    r.exhaust(j);
                } else {
                    r.reduce(j, rate[j] * delta);
                }
            }
        }
        out.push(Slice { u0: u, u1: end, coupling: Coupling::from_entries(entries) });
        u = end;
        if kernels.iter().all(|k| k.is_empty()) {
            break;
        }
    }
}

/// `ν_{[0,u]} = S^ν(μ_{[0,u]})` at each grid level.
pub fn shadow_curve(l: &Lift, nu: &DiscreteMeasure, grid: &[f64]) -> Result<Vec<DiscreteMeasure>> {
    require_convex_order(l, nu)?;
    grid.iter().map(|&u| shadow::shadow(nu, &l.prefix(u))).collect()
}

/// Sections `R_u = T*(supp(ν - ν_{[0,u]}))`, closed with rays at the ends of
/// the support of `ν`.
pub fn barrier_family(l: &Lift, nu: &DiscreteMeasure, grid: &[f64]) -> Result<Barrier> {
    require_convex_order(l, nu)?;
    let lo = nu.min_position();
    let hi = nu.max_position();
    let sections = grid
        .iter()
        .map(|&u| {
            let rest = shadow::residual(nu, &l.prefix(u))?;
            closed_support(&rest).extend_to_unbounded(lo, hi)
        })
        .collect::<Result<Vec<_>>>()?;
    Barrier::new(grid.to_vec(), sections)
}
