//! Optimality certificates for lifted couplings against the `c_{p,q}` family.

use rayon::prelude::*;
use serde::Serialize;

use super::cost::{cost, CostSpec};
use super::mot::cpq_value;
use crate::coupling::LiftedCoupling;
use crate::error::Result;
use crate::lift::Lift;
use crate::measure::DiscreteMeasure;

/// Default certification tolerance, scaled by the magnitude of each value.
pub const CERTIFY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CpqCheck {
    pub p: f64,
    pub q: f64,
    pub coupling_cost: f64,
    pub lp_value: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertifyReport {
    pub checks: Vec<CpqCheck>,
    pub pass: bool,
}

impl CertifyReport {
    /// Largest `coupling_cost - lp_value` over all checks.
    pub fn max_gap(&self) -> f64 {
        self.checks.iter().map(|c| c.coupling_cost - c.lp_value).fold(0.0, f64::max)
    }
}

/// For every slab boundary `p` of `lc` and every atom `q` of `nu`, compares
/// `∫ c_{p,q} dπ̂` with the lifted LP optimum. The LP only sees the split
/// of `l` at `p`, so each check is a small two-block problem.
pub fn certify_optimal(lc: &LiftedCoupling, l: &Lift, nu: &DiscreteMeasure, tol: f64) -> Result<CertifyReport> {
    let grid: Vec<(f64, f64)> = lc
        .boundaries()
        .into_iter()
        .filter(|&p| p > 0.0)
        .flat_map(|p| nu.positions().into_iter().map(move |q| (p, q)))
        .collect();
    let checks = grid
        .par_iter()
        .map(|&(p, q)| {
            let coupling_cost = cost(lc, &CostSpec::cpq(p.min(1.0), q)?)?;
            let lp_value = cpq_value(&l.prefix(p), &l.segment(p, 1.0), nu, q)?;
            let pass = coupling_cost <= lp_value + tol * (1.0 + lp_value.abs());
            Ok(CpqCheck { p, q, coupling_cost, lp_value, pass })
        })
        .collect::<Result<Vec<_>>>()?;
    let pass = checks.iter().all(|c| c.pass);
    Ok(CertifyReport { checks, pass })
}
