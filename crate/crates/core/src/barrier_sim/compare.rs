use serde::Serialize;

use super::walk::{simulate_with, StopRule};
use super::{Barrier, SimConfig};
use crate::coupling::{Coupling, Entry, LiftedCoupling};
use crate::error::Result;
use crate::lift::Lift;
use crate::lp::plane_w1;
use crate::measure::{w1_unchecked, DiscreteMeasure, EPS};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    /// `W1` between the projected couplings as measures on the plane.
    pub plane_w1: f64,
    /// `Σ_x μ(x) W1(K_emp(x), K_ref(x))` over the atoms of the reference.
    pub kernel_distance: f64,
    /// `W1` between the `y`-marginals on `n` equal `u`-blocks, each
    /// renormalized to a probability.
    pub slab_distances: Vec<f64>,
    pub max_slab_distance: f64,
}

/// The part of `lc` over `[a, b]`, spreading each slice evenly in `u`.
fn restrict(lc: &LiftedCoupling, a: f64, b: f64) -> Coupling {
    let mut entries = Vec::new();
    for s in lc.slices() {
        let overlap = s.u1.min(b) - s.u0.max(a);
        if overlap <= 0.0 {
            continue;
        }
        let w = overlap / (s.u1 - s.u0);
        entries.extend(s.coupling.entries().iter().map(|e| Entry { mass: e.mass * w, ..*e }));
    }
    Coupling::from_entries(entries)
}

fn normalized(m: &DiscreteMeasure) -> Option<DiscreteMeasure> {
    (m.mass() > 0.0).then(|| m.scale(1.0 / m.mass()).ok()).flatten()
}

pub fn compare(emp: &LiftedCoupling, reference: &LiftedCoupling, n_slabs: usize) -> Result<CompareReport> {
    let (pe, pr) = (emp.project(), reference.project());
    let plane_w1 = plane_w1(&pe, &pr)?;
    let kernel_distance = pr
        .x_marginal()
        .atoms()
        .iter()
        .map(|a| {
            let near = pe.x_atoms().into_iter().find(|&x| (x - a.x).abs() <= EPS);
            match near.and_then(|x| normalized(&pe.row(x))).zip(normalized(&pr.row(a.x))) {
                Some((ke, kr)) => a.m * w1_unchecked(&ke, &kr),
                None => f64::INFINITY,
            }
        })
        .sum();
    let n = n_slabs.max(1);
    let slab_distances: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            let ye = restrict(emp, a, b).y_marginal();
            let yr = restrict(reference, a, b).y_marginal();
            match (normalized(&ye), normalized(&yr)) {
                (Some(e), Some(r)) => w1_unchecked(&e, &r),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            }
        })
        .collect();
    let max_slab_distance = slab_distances.iter().copied().fold(0.0, f64::max);
    Ok(CompareReport { plane_w1, kernel_distance, slab_distances, max_slab_distance })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OpenClosedReport {
    pub plane_w1: f64,
    pub kernel_distance: f64,
    pub closed_mean: f64,
    pub open_mean: f64,
    /// Paths whose stopped position differs between the two rules.
    pub differing_paths: usize,
}

/// Runs the same paths under both stopping rules and compares the results.
pub fn open_vs_closed(l: &Lift, b: &Barrier, cfg: &SimConfig) -> Result<OpenClosedReport> {
    let closed = simulate_with(l, b, cfg, StopRule::Closed)?;
    let open = simulate_with(l, b, cfg, StopRule::Open)?;
    let c = compare(&open.lifted, &closed.lifted, 1)?;
    let differing_paths = closed.samples.iter().zip(&open.samples).filter(|(a, b)| a.x_tau != b.x_tau).count();
    Ok(OpenClosedReport {
        plane_w1: c.plane_w1,
        kernel_distance: c.kernel_distance,
        closed_mean: closed.mean,
        open_mean: open.mean,
        differing_paths,
    })
}
