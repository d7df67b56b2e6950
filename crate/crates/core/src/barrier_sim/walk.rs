use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::{Barrier, SimConfig};
use crate::closed_set::ClosedSet;
use crate::coupling::{Coupling, Entry, LiftedCoupling, Slice};
use crate::error::{Error, Result};
use crate::lift::Lift;
use crate::measure::EPS;

/// When a path starting on the barrier is stopped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StopRule {
    /// First time `t >= 0` the path touches the section.
    #[default]
    Closed,
    /// First time `t > 0` the path is in the section: a start on an
    /// isolated point or a boundary point only counts once the walk comes
    /// back to it or reaches the section elsewhere.
    Open,
}

impl FromStr for StopRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(StopRule::Closed),
            "open" => Ok(StopRule::Open),
            _ => Err(Error::InvalidConfig(format!("unknown stopping rule {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathSample {
    pub u: f64,
    pub x0: f64,
    pub x_tau: f64,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    /// Empirical lifted coupling on the lift pieces split at the barrier
    /// grid. Each slab holds the empirical conditional law of its paths,
    /// scaled to the slab width.
    pub lifted: LiftedCoupling,
    /// Stopped paths in path-index order.
    pub samples: Vec<PathSample>,
    pub failed: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// [`simulate_with`] under the closed rule.
pub fn simulate(l: &Lift, b: &Barrier, cfg: &SimConfig) -> Result<Simulation> {
    simulate_with(l, b, cfg, StopRule::Closed)
}

/// Runs `cfg.paths` independent walks. Path `i` draws from its own ChaCha8
/// stream `(seed, i)`, so results do not depend on the thread count.
pub fn simulate_with(l: &Lift, b: &Barrier, cfg: &SimConfig, rule: StopRule) -> Result<Simulation> {
    cfg.validate()?;
    if !b.is_two_sided() {
        return Err(Error::InvalidConfig("barrier sections must contain rays on both sides".into()));
    }
    let outcomes: Vec<Option<PathSample>> =
        (0..cfg.paths).into_par_iter().map(|i| run_path(l, b, cfg, rule, i as u64)).collect();
    let failed = outcomes.iter().filter(|o| o.is_none()).count();
    if failed * 1000 >= cfg.paths {
        return Err(Error::MaxStepsExceeded { failed, total: cfg.paths });
    }
    let samples: Vec<PathSample> = outcomes.into_iter().flatten().collect();
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s.x_tau).sum::<f64>() / n;
    let var = samples.iter().map(|s| (s.x_tau - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(Simulation { lifted: bin(l, b, &samples)?, samples, failed, mean, std_error: (var / n).sqrt() })
}

fn run_path(l: &Lift, b: &Barrier, cfg: &SimConfig, rule: StopRule, index: u64) -> Option<PathSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let u: f64 = rng.random();
    let pieces = l.pieces();
    let k = pieces.partition_point(|p| p.u1 <= u).min(pieces.len() - 1);
    let cond = &pieces[k].conditional;
    let v = 1.0 - rng.random::<f64>();
    let x0 = cond.quantile(v * cond.mass()).ok()?;
    let (x_tau, steps) = stop(b.section_at(u), x0, rule, cfg, &mut rng)?;
    Some(PathSample { u, x0, x_tau, steps })
}

/// Stopped position and number of steps, or `None` past the step cap.
fn stop(r: &ClosedSet, x0: f64, rule: StopRule, cfg: &SimConfig, rng: &mut ChaCha8Rng) -> Option<(f64, u64)> {
    let sd = cfg.step.sqrt();
    if r.interior_contains(x0) || (rule == StopRule::Closed && r.contains(x0)) {
        return Some((x0, 0));
    }
    if !r.contains(x0) {
        let (a, c) = r.gap_around(x0)?;
        return walk(x0, a, c, sd, cfg.max_steps, rng);
    }
    // Open rule on a boundary or isolated point: the first step picks the
    // side, and the walk runs in the gap adjacent on that side.
    let z: f64 = rng.sample(StandardNormal);
    let x1 = x0 + sd * z;
    let p = r.pieces().iter().position(|&(lo, hi)| x0 >= lo - EPS && x0 <= hi + EPS)?;
    let (lo, hi) = r.pieces()[p];
    let (a, c) = if z > 0.0 {
        if x0 < hi - EPS {
            return Some((x0, 1));
        }
        (hi, r.pieces().get(p + 1).map_or(f64::INFINITY, |q| q.0))
    } else {
        if x0 > lo + EPS {
            return Some((x0, 1));
        }
        (r.pieces()[..p].last().map_or(f64::NEG_INFINITY, |q| q.1), lo)
    };
    if x1 <= a {
        return Some((a, 1));
    }
    if x1 >= c {
        return Some((c, 1));
    }
    let (y, n) = walk(x1, a, c, sd, cfg.max_steps.saturating_sub(1), rng)?;
    Some((y, n + 1))
}

/// Walk inside the gap `(a, c)`, stopping at the first crossed endpoint and
/// snapping to it.
fn walk(mut x: f64, a: f64, c: f64, sd: f64, max_steps: u64, rng: &mut ChaCha8Rng) -> Option<(f64, u64)> {
    for n in 1..=max_steps {
        let z: f64 = rng.sample(StandardNormal);
        x += sd * z;
        if x <= a {
            return Some((a, n));
        }
        if x >= c {
            return Some((c, n));
        }
    }
    None
}

/// Slab boundaries: the lift boundaries together with the barrier grid.
fn bin_bounds(l: &Lift, b: &Barrier) -> Vec<f64> {
    let mut bounds = l.boundaries();
    bounds.extend(b.grid().iter().copied().filter(|&g| g > 0.0 && g < 1.0));
    bounds.sort_by(f64::total_cmp);
    bounds.dedup_by(|x, y| (*x - *y).abs() <= EPS);
    bounds
}

fn bin(l: &Lift, b: &Barrier, samples: &[PathSample]) -> Result<LiftedCoupling> {
    let bounds = bin_bounds(l, b);
    let n_bins = bounds.len() - 1;
    let mut groups: Vec<Vec<Entry>> = vec![Vec::new(); n_bins];
    for s in samples {
        let k = bounds[1..].partition_point(|&e| e <= s.u).min(n_bins - 1);
        groups[k].push(Entry { x: s.x0, y: s.x_tau, mass: 1.0 });
    }
    // An empty bin would silently drop its slab mass.
    if let Some(k) = groups.iter().position(Vec::is_empty) {
        return Err(Error::InvalidConfig(format!(
            "no path landed in u-bin [{}, {}]; raise the path count or lower the slice count",
            bounds[k],
            bounds[k + 1]
        )));
    }
    let slices = groups
        .into_iter()
        .enumerate()
        .map(|(k, entries)| {
            let (u0, u1) = (bounds[k], bounds[k + 1]);
            let count = entries.len() as f64;
            Slice { u0, u1, coupling: Coupling::from_entries(entries).scale((u1 - u0) / count) }
        })
        .collect();
    LiftedCoupling::new(slices)
}
