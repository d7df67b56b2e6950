//! Acceptance suite: each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any fails.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shadow_coupling::barrier_sim::{compare, open_vs_closed, simulate, SimConfig};
use shadow_coupling::closed_set::{closed_support, ClosedSet};
use shadow_coupling::coupling::{
    barrier_family, check_lipschitz, check_monotone, check_shadow_property, product_coupling, quantile_coupling,
    shadow_coupling, stochastic_shadow_coupling, LiftedCoupling,
};
use shadow_coupling::lift::{lift_product, lift_quantile, Lift, LiftKind};
use shadow_coupling::lp::{certify_optimal, cpq_extremes, mot_lp_fn, plane_w1, solve_lp, LpProblem, CERTIFY_TOL};
use shadow_coupling::measure::{leq_convex, leq_convex_positive, w1, DiscreteMeasure};
use shadow_coupling::shadow::{dilation_coupling, shadow};

type Outcome = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn measure(atoms: &[(f64, f64)]) -> DiscreteMeasure {
    DiscreteMeasure::new(atoms.iter().copied()).unwrap()
}

/// Integer weights on distinct half-integer positions, normalized to `mass`.
fn random_measure(r: &mut ChaCha8Rng, n: usize, span: i32, mass: f64) -> DiscreteMeasure {
    let mut grid: Vec<i32> = (-span..=span).collect();
    grid.shuffle(r);
    let ws: Vec<f64> = (0..n).map(|_| r.random_range(1..=6) as f64).collect();
    let total: f64 = ws.iter().sum();
    DiscreteMeasure::new(grid[..n].iter().zip(&ws).map(|(&x, &w)| (x as f64 / 2.0, mass * w / total))).unwrap()
}

/// `ν` from `μ` by independent two-point mean-preserving spreads, retried
/// until `ν` has at most `max_nu` atoms.
fn convex_pair(r: &mut ChaCha8Rng, max_mu: usize, max_nu: usize) -> (DiscreteMeasure, DiscreteMeasure) {
    loop {
        let n = r.random_range(1..=max_mu);
        let mu = random_measure(r, n, 8, 1.0);
        let mut nu = Vec::new();
        for a in mu.atoms() {
            if r.random_bool(0.25) {
                nu.push((a.x, a.m));
                continue;
            }
            let (lo, hi) = (r.random_range(1..=4) as f64 / 2.0, r.random_range(1..=4) as f64 / 2.0);
            nu.push((a.x - lo, a.m * hi / (lo + hi)));
            nu.push((a.x + hi, a.m * lo / (lo + hi)));
        }
        let nu = DiscreteMeasure::new(nu).unwrap();
        if nu.len() <= max_nu && leq_convex(&mu, &nu) {
            return (mu, nu);
        }
    }
}

/// A source dominated by `target` in the convex-positive order: a random
/// part of `target` with runs of consecutive atoms merged to barycenters.
fn dominated_source(r: &mut ChaCha8Rng, target: &DiscreteMeasure, max_atoms: usize) -> DiscreteMeasure {
    loop {
        let fractions = [0.25, 0.5, 0.75, 1.0];
        let mut part = Vec::new();
        for a in target.atoms() {
            if r.random_bool(0.8) {
                part.push((a.x, a.m * fractions[r.random_range(0..4)]));
            }
        }
        if part.is_empty() {
            continue;
        }
        let mut src = Vec::new();
        let mut i = 0;
        while i < part.len() {
            let len = r.random_range(1..=3).min(part.len() - i);
            let group = &part[i..i + len];
            let m: f64 = group.iter().map(|p| p.1).sum();
            let x = group.iter().map(|p| p.0 * p.1).sum::<f64>() / m;
            src.push((x, m));
            i += len;
        }
        let src = DiscreteMeasure::new(src).unwrap();
        if src.len() <= max_atoms && leq_convex_positive(&src, target) {
            return src;
        }
    }
}

/// Minimizes the second moment of `η` over `source ≤_c η ≤ target`, as an
/// LP over transport plans with a slack per target atom.
fn shadow_oracle(target: &DiscreteMeasure, source: &DiscreteMeasure) -> DiscreteMeasure {
    let (xs, ys) = (source.atoms(), target.atoms());
    let (n, m) = (xs.len(), ys.len());
    let mut c = vec![0.0; n * m + m];
    for i in 0..n {
        for j in 0..m {
            c[i * m + j] = ys[j].x * ys[j].x;
        }
    }
    let mut lp = LpProblem::new(n * m + m, c);
    for (i, a) in xs.iter().enumerate() {
        lp.add_row((0..m).map(|j| (i * m + j, 1.0)).collect(), a.m);
        lp.add_row((0..m).map(|j| (i * m + j, ys[j].x - a.x)).collect(), 0.0);
    }
    for (j, b) in ys.iter().enumerate() {
        let mut row: Vec<(usize, f64)> = (0..n).map(|i| (i * m + j, 1.0)).collect();
        row.push((n * m + j, 1.0));
        lp.add_row(row, b.m);
    }
    let sol = solve_lp(&lp).unwrap().optimal().unwrap();
    let atoms = (0..m).map(|j| (ys[j].x, (0..n).map(|i| sol.x[i * m + j]).sum::<f64>()));
    DiscreteMeasure::new(atoms.map(|(x, w)| (x, w.max(0.0)))).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = r.random_range(1..=8);
        let target = random_measure(&mut r, n, 10, 1.0);
        let source = dominated_source(&mut r, &target, 5);
        let s = shadow(&target, &source).map_err(|e| e.to_string())?;
        let o = shadow_oracle(&target, &source);
        worst = worst.max(w1(&s, &o).map_err(|e| e.to_string())?);
    }
    let took = start.elapsed();
    if worst <= 1e-7 && took < Duration::from_secs(10) {
        Ok(format!("max w1 {worst:.2e}, {:.2} s", took.as_secs_f64()))
    } else {
        Err(format!("max w1 {worst:.2e}, {:.2} s", took.as_secs_f64()))
    }
}

/// Splits every atom into up to three fragments, shuffles them and cuts the
/// sequence into consecutive parts.
fn random_decomposition(r: &mut ChaCha8Rng, source: &DiscreteMeasure) -> Vec<DiscreteMeasure> {
    let mut frags = Vec::new();
    for a in source.atoms() {
        let k = r.random_range(1..=3);
        let ws: Vec<f64> = (0..k).map(|_| r.random_range(1..=4) as f64).collect();
        let total: f64 = ws.iter().sum();
        frags.extend(ws.iter().map(|w| (a.x, a.m * w / total)));
    }
    frags.shuffle(r);
    let mut parts = Vec::new();
    let mut i = 0;
    while i < frags.len() {
        let len = r.random_range(1..=3).min(frags.len() - i);
        parts.push(DiscreteMeasure::new(frags[i..i + len].iter().copied()).unwrap());
        i += len;
    }
    parts
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    let mut chains = 0;
    for _ in 0..20 {
        let n = r.random_range(2..=8);
        let target = random_measure(&mut r, n, 10, 1.0);
        let source = dominated_source(&mut r, &target, 5);
        let direct = shadow(&target, &source).map_err(|e| e.to_string())?;
        for _ in 0..100 {
            let mut rest = target.clone();
            let mut total = DiscreteMeasure::empty();
            for part in random_decomposition(&mut r, &source) {
                let s = shadow(&rest, &part).map_err(|e| e.to_string())?;
                rest = rest.subtract(&s).map_err(|e| e.to_string())?;
                total = total.add(&s);
            }
            worst = worst.max(w1(&total, &direct).map_err(|e| e.to_string())?);
            chains += 1;
        }
    }
    let msg = format!("{chains} decomposition orders, max w1 {worst:.2e}");
    if worst <= 1e-7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let (mut worst_w, mut worst_gap): (f64, f64) = (0.0, 0.0);
    let f = |x: f64, y: f64| (-x).exp() * (1.0 + y * y).sqrt();
    for _ in 0..100 {
        let (mu, nu) = convex_pair(&mut r, 6, 6);
        let lc = shadow_coupling(&lift_quantile(&mu).unwrap(), &nu, 1).map_err(|e| e.to_string())?.project();
        let sol = mot_lp_fn(&mu, &nu, f).map_err(|e| e.to_string())?;
        worst_w = worst_w.max(plane_w1(&lc, &sol.coupling).map_err(|e| e.to_string())?);
        let value: f64 = lc.entries().iter().map(|e| e.mass * f(e.x, e.y)).sum();
        worst_gap = worst_gap.max((value - sol.value).abs());
    }
    let msg = format!("max plane w1 {worst_w:.2e}, max objective gap {worst_gap:.2e}");
    if worst_w <= 1e-6 && worst_gap <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Whether the martingale couplings of `(mu, nu)` are not unique: a random
/// cost has different minimum and maximum.
fn non_singleton(r: &mut ChaCha8Rng, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> bool {
    let table: Vec<f64> = (0..mu.len() * nu.len()).map(|_| r.random::<f64>()).collect();
    let (xs, ys) = (mu.positions(), nu.positions());
    let idx =
        |x: f64, y: f64| xs.iter().position(|&a| a == x).unwrap() * ys.len() + ys.iter().position(|&b| b == y).unwrap();
    let lo = mot_lp_fn(mu, nu, |x, y| table[idx(x, y)]).unwrap().value;
    let hi = -mot_lp_fn(mu, nu, |x, y| -table[idx(x, y)]).unwrap().value;
    hi - lo > 1e-7
}

fn criterion_4() -> Outcome {
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    let (mut non_unique, mut caught) = (0, 0);
    for _ in 0..50 {
        let (mu, nu) = convex_pair(&mut r, 5, 8);
        for kind in LiftKind::ALL {
            let l = kind.build(&mu).unwrap();
            let lc = shadow_coupling(&l, &nu, 2).map_err(|e| e.to_string())?;
            let rep = certify_optimal(&lc, &l, &nu, CERTIFY_TOL).map_err(|e| e.to_string())?;
            worst = worst.max(rep.max_gap());
            if !rep.pass {
                return Err(format!("{} shadow coupling failed certification, gap {:.2e}", kind.name(), rep.max_gap()));
            }
        }
        if !non_singleton(&mut r, &mu, &nu) {
            continue;
        }
        non_unique += 1;
        let l = lift_product(&mu).unwrap().refine(4).unwrap();
        let mut found = false;
        'search: for p in l.boundaries().into_iter().filter(|&p| p > 0.0 && p < 1.0) {
            for q in nu.positions() {
                let (lo, hi) = cpq_extremes(&l, &nu, p, q).map_err(|e| e.to_string())?;
                if hi.value - lo.value > 1e-6 {
                    let rep = certify_optimal(&hi.coupling, &l, &nu, CERTIFY_TOL).map_err(|e| e.to_string())?;
                    found = !rep.pass;
                    break 'search;
                }
            }
        }
        if found {
            caught += 1;
        }
    }
    let msg = format!(
        "200 shadow couplings certified (max gap {worst:.2e}); {caught}/{non_unique} non-unique instances reject the perturbed coupling"
    );
    if caught == non_unique && non_unique > 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn canonical_couplings(seed: u64, count: usize) -> Vec<(Lift, DiscreteMeasure, LiftedCoupling)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for i in 0..count {
        let (mu, nu) = convex_pair(&mut r, 5, 8);
        let kind = LiftKind::ALL[i % 4];
        let l = kind.build(&mu).unwrap();
        let lc = shadow_coupling(&l, &nu, 4).unwrap();
        out.push((l, nu, lc));
    }
    out
}

fn criterion_5() -> Outcome {
    let mut violations = 0;
    for (_, _, lc) in canonical_couplings(5, 200) {
        violations += check_monotone(&lc, 1e-6).count;
    }
    let msg = format!("{violations} violations over 200 instances");
    if violations == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_6() -> Outcome {
    let mut worst: f64 = 0.0;
    for (l, nu, lc) in canonical_couplings(5, 200) {
        let rep = check_shadow_property(&lc, &l, &nu, 1e-9).map_err(|e| e.to_string())?;
        worst = worst.max(rep.max_discrepancy);
    }
    let msg = format!("max boundary discrepancy {worst:.2e} over 200 instances");
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (mu, nu) = convex_pair(&mut r, 5, 8);
        let lc = shadow_coupling(&lift_product(&mu).unwrap(), &nu, 1).map_err(|e| e.to_string())?;
        let rep = check_lipschitz(&lc.project(), 1e-6).map_err(|e| e.to_string())?;
        worst = worst.max(rep.max_excess);
        if !rep.pass {
            return Err(format!("sunset kernel not Lipschitz, excess {:.2e}", rep.max_excess));
        }
    }
    let mut tried = 0;
    let mut counterexample = None;
    while tried < 1000 && counterexample.is_none() {
        tried += 1;
        let (mu, nu) = convex_pair(&mut r, 5, 8);
        let lc = shadow_coupling(&lift_quantile(&mu).unwrap(), &nu, 1).map_err(|e| e.to_string())?;
        let rep = check_lipschitz(&lc.project(), 1e-6).map_err(|e| e.to_string())?;
        if !rep.pass {
            counterexample = Some(rep.max_excess);
        }
    }
    match counterexample {
        Some(excess) => Ok(format!(
            "sunset max excess {worst:.2e} on 100 instances; left-curtain violation (excess {excess:.3}) after {tried} tries"
        )),
        None => Err(format!("no left-curtain violation in {tried} tries")),
    }
}

fn criterion_8() -> Outcome {
    let mut r = rng(8);
    let mut worst_final: f64 = 0.0;
    let mut done = 0;
    while done < 20 {
        let n = r.random_range(2..=6);
        let upsilon = random_measure(&mut r, n, 8, 1.0);
        let t = closed_support(&upsilon);
        let k = r.random_range(1..=4);
        let eta = random_measure(&mut r, k, 8, 0.5);
        let (lo, hi) = (upsilon.min_position().unwrap(), upsilon.max_position().unwrap());
        if eta.atoms().iter().any(|a| a.x < lo || a.x > hi) || !leq_convex_positive(&eta, &upsilon.scale(2.0).unwrap())
        {
            continue;
        }
        let limit = dilation_coupling(&eta, &t).map_err(|e| e.to_string())?.y_marginal();
        let mut prev = f64::INFINITY;
        for e in 1..=12 {
            let big = upsilon.scale(f64::from(1u32 << e)).unwrap();
            let d = w1(&shadow(&big, &eta).map_err(|e| e.to_string())?, &limit).map_err(|e| e.to_string())?;
            if d > prev + 1e-12 {
                return Err(format!("distance rose from {prev:.3e} to {d:.3e} at H = {}", 1u32 << e));
            }
            prev = d;
        }
        worst_final = worst_final.max(prev);
        done += 1;
    }
    let msg = format!("nonincreasing on 20 instances, max final w1 {worst_final:.2e}");
    if worst_final <= 1e-3 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mu = measure(&[(-1.0, 0.5), (1.0, 0.5)]);
    let nu = measure(&[(-2.0, 0.5), (2.0, 0.5)]);
    let l = lift_quantile(&mu).unwrap();
    let lc = shadow_coupling(&l, &nu, 1).map_err(|e| e.to_string())?;
    let b = barrier_family(&l, &nu, &lc.boundaries()).map_err(|e| e.to_string())?;
    let cfg = SimConfig { paths: 100_000, step: 1e-3, seed: 0, max_steps: 1_000_000 };
    let sim = simulate(&l, &b, &cfg).map_err(|e| e.to_string())?;
    let cmp = compare(&sim.lifted, &lc, 8).map_err(|e| e.to_string())?;
    let ovc = open_vs_closed(&l, &b, &cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let z = (sim.mean - mu.barycenter().unwrap()).abs() / sim.std_error;
    let msg = format!(
        "plane w1 {:.4}, open vs closed {:.4}, mean {:.4} ({z:.2} s.e.), {:.1} s",
        cmp.plane_w1,
        ovc.plane_w1,
        sim.mean,
        took.as_secs_f64()
    );
    if cmp.plane_w1 <= 0.02 && ovc.plane_w1 <= 0.02 && z <= 3.0 && took < Duration::from_secs(60) {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_10() -> Outcome {
    let mut r = rng(10);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..20 {
        let (mu, nu) = convex_pair(&mut r, 4, 6);
        let l = lift_product(&mu).unwrap();
        let p: Vec<_> = [128, 256, 512]
            .iter()
            .map(|&k| shadow_coupling(&l, &nu, k).map(|c| c.project()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let coarse = plane_w1(&p[0], &p[1]).map_err(|e| e.to_string())?;
        let fine = plane_w1(&p[1], &p[2]).map_err(|e| e.to_string())?;
        worst = worst.max(coarse - 2.0 * fine);
    }
    let msg = format!("max of gap(128,256) - 2 gap(256,512) is {worst:.2e} on 20 instances");
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_11() -> Outcome {
    let mut r = rng(11);
    for i in 0..20 {
        let n = r.random_range(1..=5);
        let mu = random_measure(&mut r, n, 4, 1.0);
        let (lo, hi) = (mu.min_position().unwrap(), mu.max_position().unwrap());
        let mut nu = DiscreteMeasure::empty();
        let parts = r.random_range(1..=3);
        for _ in 0..parts {
            let left = lo - r.random_range(1..=6) as f64 / 2.0;
            let right = hi + r.random_range(1..=6) as f64 / 2.0;
            let t = ClosedSet::from_points([left, right]).unwrap();
            let share = mu.scale(1.0 / parts as f64).unwrap();
            nu = nu.add(&dilation_coupling(&share, &t).map_err(|e| e.to_string())?.y_marginal());
        }
        let lc = shadow_coupling(&lift_product(&mu).unwrap(), &nu, 1).map_err(|e| e.to_string())?;
        let support: Vec<(f64, f64)> =
            lc.project().entries().iter().filter(|e| e.mass > 1e-12).map(|e| (e.x, e.y)).collect();
        let expect: Vec<(f64, f64)> =
            mu.positions().iter().flat_map(|&x| nu.positions().into_iter().map(move |y| (x, y))).collect();
        if support != expect {
            return Err(format!("instance {i}: support {support:?}, expected {expect:?}"));
        }
    }
    Ok("support is supp μ × supp ν on 20 instances".into())
}

fn criterion_12() -> Outcome {
    let mut r = rng(12);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (a, b) = (r.random_range(1..=6), r.random_range(1..=8));
        let mu = random_measure(&mut r, a, 8, 1.0);
        let nu = random_measure(&mut r, b, 8, 1.0);
        let prod = stochastic_shadow_coupling(&lift_product(&mu).unwrap(), &nu).map_err(|e| e.to_string())?;
        let quant = stochastic_shadow_coupling(&lift_quantile(&mu).unwrap(), &nu).map_err(|e| e.to_string())?;
        let d1 = plane_w1(&prod.project(), &product_coupling(&mu, &nu)).map_err(|e| e.to_string())?;
        let d2 = plane_w1(&quant.project(), &quantile_coupling(&mu, &nu).unwrap()).map_err(|e| e.to_string())?;
        worst = worst.max(d1).max(d2);
    }
    let msg = format!("max plane w1 {worst:.2e} on 50 instances");
    if worst <= 1e-9 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        ("shadow matches the second-moment LP oracle", criterion_1),
        ("shadow associativity", criterion_2),
        ("left-curtain solves the MOT LP", criterion_3),
        ("c_pq certification", criterion_4),
        ("monotone support", criterion_5),
        ("shadow-marginal property", criterion_6),
        ("sunset Lipschitz kernel", criterion_7),
        ("dilation limit", criterion_8),
        ("barrier simulation", criterion_9),
        ("refinement convergence", criterion_10),
        ("sunset support off the hull", criterion_11),
        ("product and quantile recovery", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
