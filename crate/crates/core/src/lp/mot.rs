//! Martingale transport LPs, plain and lifted, plus the planar `W1`
//! transport distance used to compare couplings.

use super::cost::CostSpec;
use super::simplex::{solve_lp, LpProblem};
use crate::coupling::{Coupling, Entry, LiftedCoupling, Slice};
use crate::error::{Error, Result};
use crate::lift::Lift;
use crate::measure::{leq_convex, slack, DiscreteMeasure, EPS};

#[derive(Clone, Debug, PartialEq)]
pub struct MotSolution {
    pub value: f64,
    pub coupling: Coupling,
    pub duality_gap: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LiftedMotSolution {
    pub value: f64,
    pub coupling: LiftedCoupling,
    pub duality_gap: f64,
}

/// A group of `u`-slabs sharing one cost factor: its first marginal and the
/// factor multiplying `c(x, y)`.
struct Block {
    marginal: DiscreteMeasure,
    factor: f64,
}

struct BlockSolution {
    value: f64,
    duality_gap: f64,
    /// Per block, the coupling of its first marginal with its share of `ν`.
    couplings: Vec<Coupling>,
}

/// `min Σ_b factor_b ∫ c dπ_b` over martingale couplings `π_b` of the block
/// marginals whose second marginals add up to `ν`.
fn solve_blocks<F>(blocks: &[Block], nu: &DiscreteMeasure, cost: F) -> Result<BlockSolution>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    let ys = nu.positions();
    let ny = ys.len();
    let mut offsets = Vec::with_capacity(blocks.len());
    let mut n = 0;
    for b in blocks {
        offsets.push(n);
        n += b.marginal.len() * ny;
    }
    let mut c = vec![0.0; n];
    for (b, &off) in blocks.iter().zip(&offsets) {
        for (i, a) in b.marginal.atoms().iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                c[off + i * ny + j] = if b.factor == 0.0 { 0.0 } else { b.factor * cost(a.x, y)? };
            }
        }
    }
    let mut lp = LpProblem::new(n, c);
    for (b, &off) in blocks.iter().zip(&offsets) {
        for (i, a) in b.marginal.atoms().iter().enumerate() {
            lp.add_row((0..ny).map(|j| (off + i * ny + j, 1.0)).collect(), a.m);
            lp.add_row((0..ny).map(|j| (off + i * ny + j, ys[j] - a.x)).collect(), 0.0);
        }
    }
    for (j, atom) in nu.atoms().iter().enumerate() {
        let row = blocks
            .iter()
            .zip(&offsets)
            .flat_map(|(b, &off)| (0..b.marginal.len()).map(move |i| (off + i * ny + j, 1.0)))
            .collect();
        lp.add_row(row, atom.m);
    }
    let sol = solve_lp(&lp)?.optimal()?;
    let couplings = blocks
        .iter()
        .zip(&offsets)
        .map(|(b, &off)| {
            let mut entries = Vec::new();
            for (i, a) in b.marginal.atoms().iter().enumerate() {
                for (j, &y) in ys.iter().enumerate() {
                    let v = sol.x[off + i * ny + j];
                    if v > 0.0 {
                        entries.push(Entry { x: a.x, y, mass: v });
                    }
                }
            }
            Coupling::from_entries(entries)
        })
        .collect();
    Ok(BlockSolution { value: sol.objective, duality_gap: sol.duality_gap, couplings })
}

/// `min ∫ c dπ` over martingale couplings of `mu` and `nu`. Lifted cost
/// specifications are averaged over `u ∈ [0, 1]`.
pub fn mot_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<MotSolution> {
    cost.validate()?;
    if !leq_convex(mu, nu) {
        return Err(Error::NotInConvexOrder);
    }
    let block = Block { marginal: mu.clone(), factor: cost.u_average(0.0, 1.0) };
    let sol = solve_blocks(&[block], nu, |x, y| cost.xy_factor(x, y))?;
    Ok(MotSolution {
        value: sol.value,
        coupling: sol.couplings.into_iter().next().unwrap_or_default(),
        duality_gap: sol.duality_gap,
    })
}

/// [`mot_lp`] for a cost given as a function of `(x, y)`.
pub fn mot_lp_fn<F>(mu: &DiscreteMeasure, nu: &DiscreteMeasure, f: F) -> Result<MotSolution>
where
    F: Fn(f64, f64) -> f64,
{
    let spec = CostSpec::plain_from_fn(&mu.positions(), &nu.positions(), f)?;
    mot_lp(mu, nu, &spec)
}

/// Spreads each block coupling back over the lift pieces it aggregates,
/// using the block kernel `π_b(x, ·) / β_b(x)`.
fn disaggregate(l: &Lift, groups: &[(usize, usize)], couplings: &[Coupling]) -> Result<LiftedCoupling> {
    let mut slices = Vec::with_capacity(l.len());
    for (&(start, end), block) in groups.iter().zip(couplings) {
        let xs = block.x_atoms();
        let kernels = xs.iter().map(|&x| block.kernel(x)).collect::<Result<Vec<_>>>()?;
        for piece in &l.pieces()[start..end] {
            let w = piece.width();
            let mut entries = Vec::new();
            for a in piece.conditional.atoms() {
                let k = xs
                    .iter()
                    .position(|&x| (x - a.x).abs() <= EPS)
                    .ok_or_else(|| Error::MassError(format!("block lost atom {}", a.x)))?;
                entries.extend(kernels[k].atoms().iter().map(|b| Entry { x: a.x, y: b.x, mass: w * a.m * b.m }));
            }
            slices.push(Slice { u0: piece.u0, u1: piece.u1, coupling: Coupling::from_entries(entries) });
        }
    }
    LiftedCoupling::new(slices)
}

/// `min ∫ c dπ̂` over lifted martingale couplings whose slice couplings are
/// constant on each piece of `l`. Consecutive pieces with the same `u` cost
/// factor are solved as one block, which loses nothing: any block coupling
/// splits back into per-piece martingale couplings through its kernel.
pub fn lifted_mot_lp(l: &Lift, nu: &DiscreteMeasure, cost: &CostSpec) -> Result<LiftedMotSolution> {
    cost.validate()?;
    if !leq_convex(&l.marginal(), nu) {
        return Err(Error::NotInConvexOrder);
    }
    if let CostSpec::Cpq { p, .. } = cost {
        if !l.boundaries().iter().any(|&b| (b - p).abs() <= EPS) {
            return Err(Error::BoundaryMismatch(*p));
        }
    }
    let factors: Vec<f64> = l.pieces().iter().map(|p| cost.u_average(p.u0, p.u1)).collect();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for (i, &f) in factors.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (factors[g.0] - f).abs() <= 1e-15 * (1.0 + f.abs()) => g.1 = i + 1,
            _ => groups.push((i, i + 1)),
        }
    }
    let blocks: Vec<Block> = groups
        .iter()
        .map(|&(s, e)| Block { marginal: l.segment(l.pieces()[s].u0, l.pieces()[e - 1].u1), factor: factors[s] })
        .collect();
    let sol = solve_blocks(&blocks, nu, |x, y| cost.xy_factor(x, y))?;
    Ok(LiftedMotSolution {
        value: sol.value,
        coupling: disaggregate(l, &groups, &sol.couplings)?,
        duality_gap: sol.duality_gap,
    })
}

/// Extreme values of `∫ c_{p,q} dπ̂` over lifted martingale couplings of
/// `l` and `nu`, with `l` split at `p`. Returns `(min, max)` solutions.
pub fn cpq_extremes(l: &Lift, nu: &DiscreteMeasure, p: f64, q: f64) -> Result<(LiftedMotSolution, LiftedMotSolution)> {
    let split = l.split_at(p);
    let spec = CostSpec::cpq(p, q)?;
    let min = lifted_mot_lp(&split, nu, &spec)?;
    let blocks = [
        Block { marginal: split.segment(0.0, p), factor: -1.0 },
        Block { marginal: split.segment(p, 1.0), factor: 0.0 },
    ];
    let kept: Vec<usize> = (0..2).filter(|&i| !blocks[i].marginal.is_empty()).collect();
    let used: Vec<Block> =
        kept.iter().map(|&i| Block { marginal: blocks[i].marginal.clone(), factor: blocks[i].factor }).collect();
    let sol = solve_blocks(&used, nu, |_, y| Ok((y - q).abs()))?;
    let cut = split.pieces().iter().position(|piece| piece.u0 >= p - EPS).unwrap_or(split.len());
    let all_groups = [(0, cut), (cut, split.len())];
    let groups: Vec<(usize, usize)> = kept.iter().map(|&i| all_groups[i]).collect();
    let max = LiftedMotSolution {
        value: -sol.value,
        coupling: disaggregate(&split, &groups, &sol.couplings)?,
        duality_gap: sol.duality_gap,
    };
    Ok((min, max))
}

/// Value of the `c_{p,q}` lifted LP, which only depends on `μ_{[0,p]}`:
/// the first block carries `μ_{[0,p]}` at factor 1 and the second the rest at
/// factor 0.
pub(crate) fn cpq_value(head: &DiscreteMeasure, tail: &DiscreteMeasure, nu: &DiscreteMeasure, q: f64) -> Result<f64> {
    let mut blocks = Vec::new();
    if !head.is_empty() {
        blocks.push(Block { marginal: head.clone(), factor: 1.0 });
    }
    if !tail.is_empty() {
        blocks.push(Block { marginal: tail.clone(), factor: 0.0 });
    }
    Ok(solve_blocks(&blocks, nu, |_, y| Ok((y - q).abs()))?.value)
}

/// Wasserstein-1 distance between two couplings seen as measures on `ℝ²`
/// (Euclidean ground metric), by a transport LP.
pub fn plane_w1(a: &Coupling, b: &Coupling) -> Result<f64> {
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > slack(ma.max(mb)) {
        return Err(Error::MassMismatch { left: ma, right: mb });
    }
    let (pa, pb) = (a.entries(), b.entries());
    if pa.is_empty() || pb.is_empty() {
        return Ok(0.0);
    }
    let nb = pb.len();
    let cost: Vec<f64> = pa.iter().flat_map(|e| pb.iter().map(move |f| (e.x - f.x).hypot(e.y - f.y))).collect();
    let mut lp = LpProblem::new(pa.len() * nb, cost);
    for (i, e) in pa.iter().enumerate() {
        lp.add_row((0..nb).map(|j| (i * nb + j, 1.0)).collect(), e.mass);
    }
    let rescale = ma / mb;
    for (j, f) in pb.iter().enumerate() {
        lp.add_row((0..pa.len()).map(|i| (i * nb + j, 1.0)).collect(), f.mass * rescale);
    }
    Ok(solve_lp(&lp)?.optimal()?.objective.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_set::ClosedSet;
    use crate::coupling::shadow_coupling;
    use crate::lift::{lift_product, lift_quantile};
    use crate::lp::cost::{cost, Tabulated};
    use crate::measure::w1;
    use crate::shadow::{dilation_coupling, shadow};

    fn m(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(atoms.iter().copied()).unwrap()
    }

    fn rows_close(a: &Coupling, b: &Coupling, tol: f64) -> bool {
        a.x_atoms().len() == b.x_atoms().len()
            && a.x_atoms().iter().all(|&x| w1(&a.row(x), &b.row(x)).map(|d| d <= tol).unwrap_or(false))
    }

    #[test]
    fn unique_feasible_point() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let s = mot_lp_fn(&mu, &nu, |x, y| (x - y).powi(3)).unwrap();
        assert_eq!(s.coupling, Coupling::new([(0.0, -1.0, 0.5), (0.0, 1.0, 0.5)]).unwrap());
        let zero = mot_lp_fn(&mu, &nu, |_, _| 0.0).unwrap();
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn left_curtain_minimizes_decreasing_times_convex() {
        let mu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let nu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let s = mot_lp_fn(&mu, &nu, |x, y| (-x).exp() * y * y).unwrap();
        let lc = shadow_coupling(&lift_quantile(&mu).unwrap(), &nu, 1).unwrap().project();
        assert!(rows_close(&s.coupling, &lc, 1e-12));
        assert!(s.duality_gap < 1e-12);
    }

    #[test]
    fn convex_order_required() {
        let mu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let nu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(mot_lp_fn(&mu, &nu, |_, _| 0.0), Err(Error::NotInConvexOrder));
    }

    #[test]
    fn dilation_targets_have_one_coupling() {
        let mu = m(&[(-1.0, 0.3), (0.5, 0.4), (2.0, 0.3)]);
        let t = ClosedSet::from_points([-2.0, 0.0, 1.0, 3.0]).unwrap();
        let d = dilation_coupling(&mu, &t).unwrap();
        let nu = d.y_marginal();
        for k in 0..5 {
            let s = mot_lp_fn(&mu, &nu, |x, y| ((k as f64 + 1.0) * x * y).sin() + y.powi(k)).unwrap();
            assert!(rows_close(&s.coupling, &d, 1e-9));
        }
    }

    #[test]
    fn lifted_cpq_examples() {
        let mu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let nu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let l = lift_quantile(&mu).unwrap();
        for q in [-2.0, 0.0, 1.0] {
            let s = lifted_mot_lp(&l, &nu, &CostSpec::cpq(1.0, q).unwrap()).unwrap();
            let expect = 0.5 * (-2.0f64 - q).abs() + 0.5 * (2.0f64 - q).abs();
            assert!((s.value - expect).abs() < 1e-12);
        }
        let s = lifted_mot_lp(&l, &nu, &CostSpec::cpq(0.5, 0.0).unwrap()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!(matches!(lifted_mot_lp(&l, &nu, &CostSpec::cpq(0.3, 0.0).unwrap()), Err(Error::BoundaryMismatch(_))));
    }

    #[test]
    fn cpq_value_is_shadow_integral() {
        let mu = m(&[(-1.0, 0.2), (0.0, 0.5), (1.5, 0.3)]);
        let nu = m(&[(-3.0, 0.1), (-1.0, 0.3), (0.5, 0.3), (2.0, 0.2), (3.0, 0.1)]);
        let shift = mu.barycenter().unwrap() - nu.barycenter().unwrap();
        let nu = DiscreteMeasure::new(nu.atoms().iter().map(|a| (a.x + shift, a.m))).unwrap();
        let l = lift_product(&mu).unwrap();
        for p in [0.25, 0.5, 0.8] {
            let head = l.prefix(p);
            let tail = l.segment(p, 1.0);
            let sh = shadow(&nu, &head).unwrap();
            for q in nu.positions() {
                let expect: f64 = sh.atoms().iter().map(|a| a.m * (a.x - q).abs()).sum();
                let v = cpq_value(&head, &tail, &nu, q).unwrap();
                assert!((v - expect).abs() < 1e-10, "p={p} q={q}: {v} vs {expect}");
            }
        }
    }

    #[test]
    fn lifted_lp_matches_shadow_cost_on_its_own_slices() {
        let mu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let nu = m(&[(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]);
        let lc = shadow_coupling(&lift_product(&mu).unwrap(), &nu, 4).unwrap();
        let own = Lift::new(
            lc.slices()
                .iter()
                .map(|s| crate::lift::Piece {
                    u0: s.u0,
                    u1: s.u1,
                    conditional: s.coupling.x_marginal().scale(1.0 / (s.u1 - s.u0)).unwrap(),
                })
                .collect(),
        )
        .unwrap();
        let phi = Tabulated::sample(vec![0.0, 1.0], |u| 1.0 - u).unwrap();
        let psi = Tabulated::sample(nu.positions(), |y| (1.0 + y * y).sqrt()).unwrap();
        let spec = CostSpec::separable(phi, psi).unwrap();
        let s = lifted_mot_lp(&own, &nu, &spec).unwrap();
        let c = cost(&lc, &spec).unwrap();
        assert!((s.value - c).abs() < 1e-10, "{} vs {}", s.value, c);
        assert!((cost(&s.coupling, &spec).unwrap() - s.value).abs() < 1e-12);
    }

    #[test]
    fn extremes_bracket_every_coupling() {
        let mu = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let nu = m(&[(-3.0, 0.125), (-1.0, 0.375), (1.0, 0.375), (3.0, 0.125)]);
        let l = lift_product(&mu).unwrap();
        let (lo, hi) = cpq_extremes(&l, &nu, 0.5, 0.0).unwrap();
        assert!(hi.value > lo.value + 1e-6);
        let spec = CostSpec::cpq(0.5, 0.0).unwrap();
        assert!((cost(&hi.coupling, &spec).unwrap() - hi.value).abs() < 1e-12);
        assert!((cost(&lo.coupling, &spec).unwrap() - lo.value).abs() < 1e-12);
    }

    #[test]
    fn plane_distance() {
        let a = Coupling::new([(0.0, 0.0, 0.5), (1.0, 1.0, 0.5)]).unwrap();
        let b = Coupling::new([(0.0, 1.0, 0.5), (1.0, 1.0, 0.5)]).unwrap();
        assert!(plane_w1(&a, &a).unwrap() < 1e-15);
        assert!((plane_w1(&a, &b).unwrap() - 0.5).abs() < 1e-12);
    }
}
