//! Shadow martingale couplings between finitely-atomic measures on the line.
//!
//! A lift spreads the first marginal over `u ∈ [0, 1]`; feeding its prefixes
//! through shadows of the second marginal produces a lifted martingale
//! coupling. The crate builds these couplings and checks them four ways:
//! direct property checks, LP certificates, barrier simulation and explicit
//! formulas.

// `!(a < b)` is used on purpose so that NaN fails the check; index loops
// walk several parallel arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod barrier_sim;
pub mod cli;
pub mod closed_set;
pub mod coupling;
pub mod error;
pub mod io;
pub mod lift;
pub mod lp;
pub mod measure;
pub mod shadow;

pub use error::{Error, Result};
