//! Linear-programming oracles: a dense simplex, martingale transport
//! problems and the `c_{p,q}` optimality certificate.

mod certify;
mod cost;
mod mot;
mod simplex;

pub use certify::{certify_optimal, CertifyReport, CpqCheck, CERTIFY_TOL};
pub use cost::{cost, CostSpec, Tabulated};
pub use mot::{cpq_extremes, lifted_mot_lp, mot_lp, mot_lp_fn, plane_w1, LiftedMotSolution, MotSolution};
pub use simplex::{solve_lp, LpProblem, LpSolution, LpStatus};
