//! Cost specifications and slice-exact evaluation on lifted couplings.

use serde::{Deserialize, Serialize};

use crate::coupling::{Coupling, LiftedCoupling};
use crate::error::{Error, Result};
use crate::measure::EPS;

/// A piecewise-linear function given by its values at increasing knots,
/// extended by constants outside the knot range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl Tabulated {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.is_empty() || knots.len() != values.len() {
            return Err(Error::InvalidCost("knots and values must be nonempty and of equal length".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidCost("knots must be strictly increasing".into()));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCost("non-finite knot or value".into()));
        }
        Ok(Tabulated { knots, values })
    }

    /// Samples `f` at the given points.
    pub fn sample<F: Fn(f64) -> f64>(knots: Vec<f64>, f: F) -> Result<Self> {
        let values = knots.iter().map(|&t| f(t)).collect();
        Self::new(knots, values)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|&x| x <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == k.len() {
            return self.values[k.len() - 1];
        }
        let (x0, x1) = (k[i - 1], k[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (t - x0) / (x1 - x0)
    }

    /// `∫_a^b f`, exact for the interpolant.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        let mut pts = vec![a];
        pts.extend(self.knots.iter().copied().filter(|&t| t > a && t < b));
        pts.push(b);
        pts.windows(2).map(|w| 0.5 * (self.eval(w[0]) + self.eval(w[1])) * (w[1] - w[0])).sum()
    }

    fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + EPS * (1.0 + w[0].abs()))
    }

    fn is_convex(&self) -> bool {
        let (k, v) = (&self.knots, &self.values);
        (1..k.len().saturating_sub(1)).all(|i| {
            let left = (v[i] - v[i - 1]) / (k[i] - k[i - 1]);
            let right = (v[i + 1] - v[i]) / (k[i + 1] - k[i]);
            right >= left - EPS * (1.0 + left.abs())
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostSpec {
    /// `1_{u <= p} |y - q|`.
    Cpq { p: f64, q: f64 },
    /// `φ(u) ψ(y)` with `φ` nonincreasing and `ψ` convex.
    Separable { u_factor: Tabulated, y_factor: Tabulated },
    /// `c(x, y)` given on a finite table of pairs.
    Plain { table: Vec<(f64, f64, f64)> },
}

impl CostSpec {
    pub fn cpq(p: f64, q: f64) -> Result<Self> {
        let c = CostSpec::Cpq { p, q };
        c.validate()?;
        Ok(c)
    }

    pub fn separable(u_factor: Tabulated, y_factor: Tabulated) -> Result<Self> {
        let c = CostSpec::Separable { u_factor, y_factor };
        c.validate()?;
        Ok(c)
    }

    /// Tabulates `f` on every pair of the given positions.
    pub fn plain_from_fn<F: Fn(f64, f64) -> f64>(xs: &[f64], ys: &[f64], f: F) -> Result<Self> {
        let table = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).map(|(x, y)| (x, y, f(x, y))).collect();
        let c = CostSpec::Plain { table };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CostSpec::Cpq { p, q } => {
                if !(0.0..=1.0).contains(p) || !q.is_finite() {
                    return Err(Error::InvalidCost(format!("c_(p,q) needs p in [0, 1], got p = {p}, q = {q}")));
                }
            }
            CostSpec::Separable { u_factor, y_factor } => {
                if !u_factor.is_nonincreasing() {
                    return Err(Error::InvalidCost("u factor must be nonincreasing".into()));
                }
                if !y_factor.is_convex() {
                    return Err(Error::InvalidCost("y factor must be convex".into()));
                }
            }
            CostSpec::Plain { table } => {
                if table.iter().any(|&(x, y, c)| !(x.is_finite() && y.is_finite() && c.is_finite())) {
                    return Err(Error::InvalidCost("non-finite table entry".into()));
                }
            }
        }
        Ok(())
    }

    /// Average of the `u` factor over `[u0, u1]`, and the `(x, y)` factor.
    /// Every supported cost is a product of the two.
    pub(crate) fn u_average(&self, u0: f64, u1: f64) -> f64 {
        match self {
            CostSpec::Cpq { p, .. } => ((p.min(u1) - u0) / (u1 - u0)).clamp(0.0, 1.0),
            CostSpec::Separable { u_factor, .. } => u_factor.integrate(u0, u1) / (u1 - u0),
            CostSpec::Plain { .. } => 1.0,
        }
    }

    pub(crate) fn xy_factor(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            CostSpec::Cpq { q, .. } => Ok((y - q).abs()),
            CostSpec::Separable { y_factor, .. } => Ok(y_factor.eval(y)),
            CostSpec::Plain { table } => table
                .iter()
                .find(|&&(a, b, _)| (a - x).abs() <= EPS && (b - y).abs() <= EPS)
                .map(|t| t.2)
                .ok_or_else(|| Error::InvalidCost(format!("no table entry for ({x}, {y})"))),
        }
    }

    /// Unlifted cost `∫ c dπ` for `u`-independent costs.
    pub fn coupling_cost(&self, c: &Coupling) -> Result<f64> {
        c.entries().iter().map(|e| Ok(e.mass * self.xy_factor(e.x, e.y)?)).sum()
    }
}

/// `∫ c dπ̂`, integrating the `u` factor exactly over every slice.
pub fn cost(lc: &LiftedCoupling, spec: &CostSpec) -> Result<f64> {
    spec.validate()?;
    let mut total = 0.0;
    for s in lc.slices() {
        let f = spec.u_average(s.u0, s.u1);
        if f == 0.0 {
            continue;
        }
        total += f * spec.coupling_cost(&s.coupling)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{shadow_coupling, Slice};
    use crate::lift::lift_quantile;
    use crate::measure::DiscreteMeasure;

    fn two_atom() -> LiftedCoupling {
        let mu = DiscreteMeasure::new([(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let nu = DiscreteMeasure::new([(-2.0, 0.5), (2.0, 0.5)]).unwrap();
        shadow_coupling(&lift_quantile(&mu).unwrap(), &nu, 1).unwrap()
    }

    #[test]
    fn tabulated_interpolates_and_integrates() {
        let t = Tabulated::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(t.eval(0.25), 0.75);
        assert_eq!(t.eval(-1.0), 1.0);
        assert!((t.integrate(0.0, 0.5) - 0.375).abs() < 1e-15);
        assert!(Tabulated::new(vec![1.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn validation() {
        assert!(CostSpec::cpq(1.5, 0.0).is_err());
        let up = Tabulated::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        let conv = Tabulated::sample(vec![-2.0, 0.0, 2.0], |y| y * y).unwrap();
        assert!(CostSpec::separable(up.clone(), conv.clone()).is_err());
        let concave = Tabulated::sample(vec![-2.0, 0.0, 2.0], |y| -y * y).unwrap();
        let down = Tabulated::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        assert!(CostSpec::separable(down.clone(), concave).is_err());
        assert!(CostSpec::separable(down, conv).is_ok());
    }

    #[test]
    fn constant_cost_is_total_mass() {
        let lc = two_atom();
        let one = Tabulated::new(vec![0.0], vec![1.0]).unwrap();
        let spec = CostSpec::separable(one.clone(), one).unwrap();
        assert!((cost(&lc, &spec).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cpq_examples() {
        let lc = two_atom();
        // p = 1: the full second marginal, ∫|y - q| dν.
        for q in [-3.0, -2.0, 0.0, 1.0, 2.0] {
            let expect = 0.5 * (-2.0f64 - q).abs() + 0.5 * (2.0f64 - q).abs();
            assert!((cost(&lc, &CostSpec::cpq(1.0, q).unwrap()).unwrap() - expect).abs() < 1e-14);
        }
        // p = 1/2, q = 0: ∫|y| over {(-2, 3/8), (2, 1/8)}.
        assert!((cost(&lc, &CostSpec::cpq(0.5, 0.0).unwrap()).unwrap() - 1.0).abs() < 1e-14);
        // p = 1/4 takes half of the first slice.
        assert!((cost(&lc, &CostSpec::cpq(0.25, 0.0).unwrap()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn separable_two_atom_value() {
        // (1 - u) √(1 + y²) integrates to 3/8 on [0, 1/2] and 1/8 on [1/2, 1],
        // and every slice puts mass 1/2 on |y| = 2.
        let lc = two_atom();
        let phi = Tabulated::new(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap();
        let psi = Tabulated::sample(vec![-2.0, 2.0], |y: f64| (1.0 + y * y).sqrt()).unwrap();
        let c = cost(&lc, &CostSpec::separable(phi, psi).unwrap()).unwrap();
        assert!((c - 5f64.sqrt() * (0.375 + 0.125)).abs() < 1e-14);
    }

    #[test]
    fn plain_cost_lookup() {
        let c = Coupling::new([(0.0, 1.0, 0.5), (0.0, -1.0, 0.5)]).unwrap();
        let spec = CostSpec::plain_from_fn(&[0.0], &[-1.0, 1.0], |x, y| x + y * y).unwrap();
        assert!((spec.coupling_cost(&c).unwrap() - 1.0).abs() < 1e-15);
        let missing = CostSpec::plain_from_fn(&[0.0], &[1.0], |_, _| 0.0).unwrap();
        assert!(missing.coupling_cost(&c).is_err());
        let lc = LiftedCoupling::new(vec![Slice { u0: 0.0, u1: 1.0, coupling: c }]).unwrap();
        assert!((cost(&lc, &spec).unwrap() - 1.0).abs() < 1e-15);
    }
}
