//! Finitely-atomic positive measures on the real line.
//!
//! A [`DiscreteMeasure`] is kept in canonical form at all times: atoms sorted
//! by strictly increasing position, positions closer than [`EPS`] merged
//! (mass-weighted), every mass strictly positive. All operations are exact
//! piecewise-linear computations over the atom positions, no sampling.

mod central;
mod order;

pub use central::{CentralCurve, CentralSegment};
pub use order::{leq_convex, leq_convex_positive, leq_diatomic, leq_stochastic};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global tolerance for mass and position equality.
pub const EPS: f64 = 1e-9;

/// Slack used by the order relations: `EPS * (1 + |value|)`.
#[inline]
pub(crate) fn slack(value: f64) -> f64 {
    EPS * (1.0 + value.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: f64,
    pub m: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure {
    atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    atoms: Vec<Atom>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        DiscreteMeasure::new(raw.atoms.into_iter().map(|a| (a.x, a.m)))
    }
}

impl From<DiscreteMeasure> for RawMeasure {
    fn from(m: DiscreteMeasure) -> Self {
        RawMeasure { atoms: m.atoms }
    }
}

impl DiscreteMeasure {
    /// Builds a canonical measure from `(position, mass)` pairs in any order.
    ///
    /// Zero masses are discarded; negative or non-finite values are rejected.
    pub fn new<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut raw = Vec::new();
        for (x, m) in atoms {
            if !x.is_finite() || !m.is_finite() {
                return Err(Error::InvalidAtom(format!("non-finite atom ({x}, {m})")));
            }
            if m < 0.0 {
                return Err(Error::InvalidAtom(format!("negative mass {m} at {x}")));
            }
            if m > 0.0 {
                raw.push(Atom { x, m });
            }
        }
        Ok(Self::from_positive(raw))
    }

    /// Canonicalizes atoms already known to be finite with positive mass.
    pub(crate) fn from_positive(mut raw: Vec<Atom>) -> Self {
        raw.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut atoms: Vec<Atom> = Vec::with_capacity(raw.len());
        for a in raw {
            match atoms.last_mut() {
                Some(last) if (a.x - last.x).abs() <= EPS => {
                    let m = last.m + a.m;
                    last.x = (last.x * last.m + a.x * a.m) / m;
                    last.m = m;
                }
                _ => atoms.push(a),
            }
        }
        DiscreteMeasure { atoms }
    }

    /// Builds a measure from parallel position/mass slices, dropping masses
    /// at or below `floor`.
    pub(crate) fn from_weights(xs: &[f64], ws: &[f64], floor: f64) -> Self {
        Self::from_positive(xs.iter().zip(ws).filter(|(_, &w)| w > floor).map(|(&x, &m)| Atom { x, m }).collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dirac(x: f64) -> Self {
        Self::point(x, 1.0)
    }

    pub fn point(x: f64, m: f64) -> Self {
        if m > 0.0 {
            DiscreteMeasure { atoms: vec![Atom { x, m }] }
        } else {
            Self::empty()
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn positions(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.x).collect()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.m).collect()
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.m).sum()
    }

    pub fn first_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.x * a.m).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.x * a.x * a.m).sum()
    }

    pub fn barycenter(&self) -> Result<f64> {
        let mass = self.mass();
        if mass <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(self.first_moment() / mass)
    }

    pub fn min_position(&self) -> Option<f64> {
        self.atoms.first().map(|a| a.x)
    }

    pub fn max_position(&self) -> Option<f64> {
        self.atoms.last().map(|a| a.x)
    }

    /// Potential function `t -> ∫|x - t| dm(x)`.
    pub fn potential(&self, t: f64) -> f64 {
        self.atoms.iter().map(|a| (a.x - t).abs() * a.m).sum()
    }

    /// `∫ (x - t)^+ dm(x)`.
    pub fn call(&self, t: f64) -> f64 {
        self.atoms.iter().map(|a| (a.x - t).max(0.0) * a.m).sum()
    }

    /// `∫ (t - x)^+ dm(x)`.
    pub fn put(&self, t: f64) -> f64 {
        self.atoms.iter().map(|a| (t - a.x).max(0.0) * a.m).sum()
    }

    /// Right-continuous distribution function `m((-∞, t])`.
    pub fn cdf(&self, t: f64) -> f64 {
        self.atoms.iter().take_while(|a| a.x <= t).map(|a| a.m).sum()
    }

    /// Mass carried at position `x` (within [`EPS`]).
    pub fn mass_at(&self, x: f64) -> f64 {
        self.atoms.iter().filter(|a| (a.x - x).abs() <= EPS).map(|a| a.m).sum()
    }

    /// Cumulative masses `0 = C_0 <= C_1 <= ... <= C_n = mass`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.atoms.len() + 1);
        let mut acc = 0.0;
        c.push(acc);
        for a in &self.atoms {
            acc += a.m;
            c.push(acc);
        }
        c
    }

    /// Left-continuous quantile function `G(s) = inf{x : F(x) >= s}`.
    pub fn quantile(&self, s: f64) -> Result<f64> {
        let mass = self.mass();
        if !(s > 0.0 && s <= mass + slack(mass)) {
            return Err(Error::OutOfRange(format!("quantile level {s} not in (0, {mass}]")));
        }
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.m;
            if acc >= s - 1e-12 * (1.0 + mass) {
                return Ok(a.x);
            }
        }
        Ok(self.atoms.last().map(|a| a.x).unwrap_or(0.0))
    }

    /// Push-forward of Lebesgue measure on `]s, s + a[` under the quantile
    /// function.
    pub fn quantile_window(&self, s: f64, a: f64) -> Result<DiscreteMeasure> {
        let mass = self.mass();
        let tol = slack(mass);
        if a < 0.0 || s < -tol || s + a > mass + tol {
            return Err(Error::OutOfRange(format!("window ]{s}, {}[ not inside [0, {mass}]", s + a)));
        }
        let lo = s.max(0.0);
        let hi = (s + a).min(mass);
        let mut out = Vec::new();
        let mut c0 = 0.0;
        for atom in &self.atoms {
            let c1 = c0 + atom.m;
            let w = c1.min(hi) - c0.max(lo);
            if w > 0.0 {
                out.push(Atom { x: atom.x, m: w });
            }
            c0 = c1;
        }
        Ok(Self::from_positive(out))
    }

    pub fn scale(&self, c: f64) -> Result<DiscreteMeasure> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::OutOfRange(format!("scale factor {c}")));
        }
        Ok(Self::from_positive(self.atoms.iter().map(|a| Atom { x: a.x, m: a.m * c }).filter(|a| a.m > 0.0).collect()))
    }

    pub fn add(&self, other: &DiscreteMeasure) -> DiscreteMeasure {
        let mut all = self.atoms.clone();
        all.extend_from_slice(&other.atoms);
        Self::from_positive(all)
    }

    /// `self - other`; masses within [`EPS`] of zero are removed, anything more
    /// negative is an error.
    pub fn subtract(&self, other: &DiscreteMeasure) -> Result<DiscreteMeasure> {
        let mut out: Vec<Atom> = Vec::with_capacity(self.atoms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.atoms, &other.atoms);
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i].x < b[j].x - EPS);
            let take_b = i >= a.len() || (j < b.len() && b[j].x < a[i].x - EPS);
            let (x, m) = if take_a {
                i += 1;
                (a[i - 1].x, a[i - 1].m)
            } else if take_b {
                j += 1;
                (b[j - 1].x, -b[j - 1].m)
            } else {
                i += 1;
                j += 1;
                (a[i - 1].x, a[i - 1].m - b[j - 1].m)
            };
            if m < -EPS {
                return Err(Error::NegativeMass { x, mass: m });
            }
            if m >= EPS {
                out.push(Atom { x, m });
            }
        }
        Ok(DiscreteMeasure { atoms: out })
    }

    /// Sorted union of the atom positions of both measures.
    pub(crate) fn union_positions(&self, other: &DiscreteMeasure) -> Vec<f64> {
        let mut ts: Vec<f64> = self.atoms.iter().chain(other.atoms.iter()).map(|a| a.x).collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }

    /// Central curve `u -> S^self(u δ_m)` for the barycenter `m`.
    pub fn central_curve(&self) -> Result<CentralCurve> {
        CentralCurve::new(self)
    }
}

/// Wasserstein-1 distance `∫|F_a - F_b|` between measures of equal mass.
pub fn w1(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<f64> {
    let (ma, mb) = (a.mass(), b.mass());
    if (ma - mb).abs() > slack(ma.max(mb)) {
        return Err(Error::MassMismatch { left: ma, right: mb });
    }
    Ok(w1_unchecked(a, b))
}

/// Same as [`w1`] without the equal-mass precondition; any mass excess is
/// simply ignored beyond the last breakpoint.
pub(crate) fn w1_unchecked(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let ts = a.union_positions(b);
    let (mut fa, mut fb) = (0.0, 0.0);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    for (k, &t) in ts.iter().enumerate() {
        while i < a.atoms.len() && a.atoms[i].x <= t {
            fa += a.atoms[i].m;
            i += 1;
        }
        while j < b.atoms.len() && b.atoms[j].x <= t {
            fb += b.atoms[j].m;
            j += 1;
        }
        if let Some(&next) = ts.get(k + 1) {
            total += (fa - fb).abs() * (next - t);
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(atoms.iter().copied()).unwrap()
    }

    #[test]
    fn mass_examples() {
        assert_eq!(DiscreteMeasure::empty().mass(), 0.0);
        assert_eq!(DiscreteMeasure::dirac(0.0).mass(), 1.0);
        assert_eq!(m(&[(-1.0, 0.5), (1.0, 0.5)]).mass(), 1.0);
    }

    #[test]
    fn barycenter_examples() {
        assert_eq!(m(&[(-1.0, 0.5), (1.0, 0.5)]).barycenter().unwrap(), 0.0);
        assert_eq!(DiscreteMeasure::dirac(0.0).barycenter().unwrap(), 0.0);
        assert_eq!(m(&[(-2.0, 0.25), (2.0, 0.75)]).barycenter().unwrap(), 1.0);
        assert_eq!(DiscreteMeasure::empty().barycenter(), Err(Error::ZeroMass));
    }

    #[test]
    fn potential_examples() {
        assert_eq!(DiscreteMeasure::dirac(0.0).potential(3.0), 3.0);
        assert_eq!(m(&[(-1.0, 0.5), (1.0, 0.5)]).potential(0.0), 1.0);
        let four = m(&[(-2.0, 0.25), (-1.0, 0.25), (1.0, 0.25), (2.0, 0.25)]);
        assert_eq!(four.potential(0.0), 1.5);
    }

    #[test]
    fn quantile_examples() {
        let two = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(two.quantile(0.5).unwrap(), -1.0);
        assert_eq!(two.quantile(0.75).unwrap(), 1.0);
        assert_eq!(DiscreteMeasure::dirac(0.0).quantile(0.3).unwrap(), 0.0);
        assert!(matches!(two.quantile(0.0), Err(Error::OutOfRange(_))));
        assert!(matches!(two.quantile(1.5), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn quantile_window_examples() {
        let four = m(&[(-2.0, 0.25), (-1.0, 0.25), (1.0, 0.25), (2.0, 0.25)]);
        assert_eq!(four.quantile_window(0.25, 0.5).unwrap(), m(&[(-1.0, 0.25), (1.0, 0.25)]));
        let d = DiscreteMeasure::dirac(0.0);
        assert_eq!(d.quantile_window(0.0, 1.0).unwrap(), d);
        let two = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        assert_eq!(two.quantile_window(0.125, 0.5).unwrap(), m(&[(-1.0, 0.375), (1.0, 0.125)]));
        assert!(two.quantile_window(0.75, 0.5).is_err());
    }

    #[test]
    fn w1_examples() {
        let d0 = DiscreteMeasure::dirac(0.0);
        assert_eq!(w1(&d0, &DiscreteMeasure::dirac(1.0)).unwrap(), 1.0);
        assert_eq!(w1(&d0, &d0).unwrap(), 0.0);
        let a = m(&[(-1.0, 0.5), (1.0, 0.5)]);
        let b = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        assert_eq!(w1(&a, &b).unwrap(), 1.0);
        assert!(matches!(w1(&a, &DiscreteMeasure::point(0.0, 2.0)), Err(Error::MassMismatch { .. })));
    }

    #[test]
    fn canonical_merge_and_validation() {
        let x = m(&[(1.0, 0.25), (0.0, 0.5), (1.0 + 1e-12, 0.25)]);
        assert_eq!(x.len(), 2);
        assert!((x.mass_at(1.0) - 0.5).abs() < 1e-15);
        assert!(DiscreteMeasure::new([(0.0, -1.0)]).is_err());
        assert!(DiscreteMeasure::new([(f64::NAN, 1.0)]).is_err());
        assert!(DiscreteMeasure::new([(0.0, 0.0)]).unwrap().is_empty());
    }

    #[test]
    fn subtract_clamps_and_rejects() {
        let a = m(&[(0.0, 0.5), (1.0, 0.5)]);
        let b = m(&[(0.0, 0.5 - 1e-12), (1.0, 0.25)]);
        assert_eq!(a.subtract(&b).unwrap(), m(&[(1.0, 0.25)]));
        assert!(matches!(b.subtract(&a), Err(Error::NegativeMass { .. })));
        assert!(a.subtract(&DiscreteMeasure::dirac(2.0)).is_err());
    }

    #[test]
    fn potential_asymptote_is_exact() {
        let x = m(&[(-1.5, 0.2), (0.5, 0.3), (4.0, 0.1)]);
        for t in [10.0, 100.0] {
            let exact = (x.mass() * t - x.first_moment()).abs();
            assert!((x.potential(t) - exact).abs() < 1e-12);
            let exact = (x.mass() * -t - x.first_moment()).abs();
            assert!((x.potential(-t) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn json_canonicalizes() {
        let x: DiscreteMeasure = serde_json::from_str(r#"{"atoms":[{"x":1,"m":0.5},{"x":-1,"m":0.5}]}"#).unwrap();
        assert_eq!(x.positions(), vec![-1.0, 1.0]);
        let back: DiscreteMeasure = serde_json::from_str(&serde_json::to_string(&x).unwrap()).unwrap();
        assert_eq!(back, x);
        assert!(serde_json::from_str::<DiscreteMeasure>(r#"{"atoms":[{"x":1,"m":-0.5}]}"#).is_err());
    }
}
