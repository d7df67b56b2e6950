//! Lifts: couplings of Lebesgue measure on `[0, 1]` with `μ`, stored as a
//! partition of `[0, 1]` into pieces with a constant conditional law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{self, slack, Atom, DiscreteMeasure, EPS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub u0: f64,
    pub u1: f64,
    pub conditional: DiscreteMeasure,
}

impl Piece {
    pub fn width(&self) -> f64 {
        self.u1 - self.u0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLift")]
pub struct Lift {
    pieces: Vec<Piece>,
}

#[derive(Deserialize)]
struct RawLift {
    pieces: Vec<Piece>,
}

impl TryFrom<RawLift> for Lift {
    type Error = Error;

    fn try_from(raw: RawLift) -> Result<Self> {
        Lift::new(raw.pieces)
    }
}

/// The named lift constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftKind {
    LeftCurtain,
    RightCurtain,
    Sunset,
    Middle,
}

impl LiftKind {
    pub fn build(self, m: &DiscreteMeasure) -> Result<Lift> {
        match self {
            LiftKind::LeftCurtain => lift_quantile(m),
            LiftKind::RightCurtain => lift_reverse_quantile(m),
            LiftKind::Sunset => lift_product(m),
            LiftKind::Middle => lift_middle(m),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LiftKind::LeftCurtain => "left-curtain",
            LiftKind::RightCurtain => "right-curtain",
            LiftKind::Sunset => "sunset",
            LiftKind::Middle => "middle",
        }
    }

    pub const ALL: [LiftKind; 4] = [LiftKind::LeftCurtain, LiftKind::RightCurtain, LiftKind::Sunset, LiftKind::Middle];
}

impl std::str::FromStr for LiftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LiftKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown lift preset {s:?}")))
    }
}

impl Lift {
    /// Checks that the pieces tile `[0, 1]` and carry probability
    /// conditionals.
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::MassError("lift has no pieces".into()));
        }
        let mut u = 0.0;
        for p in &pieces {
            if (p.u0 - u).abs() > EPS || !(p.u1 > p.u0) {
                return Err(Error::MassError(format!(
                    "pieces must tile [0, 1] contiguously; found [{}, {}) after {u}",
                    p.u0, p.u1
                )));
            }
            if (p.conditional.mass() - 1.0).abs() > slack(1.0) {
                return Err(Error::MassError(format!(
                    "conditional on [{}, {}) has mass {}",
                    p.u0,
                    p.u1,
                    p.conditional.mass()
                )));
            }
            u = p.u1;
        }
        if (u - 1.0).abs() > EPS {
            return Err(Error::MassError(format!("pieces end at {u}, not 1")));
        }
        Ok(Lift { pieces })
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = vec![0.0];
        b.extend(self.pieces.iter().map(|p| p.u1));
        b
    }

    /// `∫_0^1 μ_u du`.
    pub fn marginal(&self) -> DiscreteMeasure {
        self.prefix(1.0)
    }

    /// `μ_{[0,u]} = ∫_0^u μ_v dv`.
    pub fn prefix(&self, u: f64) -> DiscreteMeasure {
        self.segment(0.0, u)
    }

    /// `∫_a^b μ_v dv`.
    pub fn segment(&self, a: f64, b: f64) -> DiscreteMeasure {
        let mut atoms = Vec::new();
        for p in &self.pieces {
            let w = p.u1.min(b) - p.u0.max(a);
            if w > 0.0 {
                atoms.extend(p.conditional.atoms().iter().map(|t| Atom { x: t.x, m: t.m * w }));
            }
        }
        DiscreteMeasure::from_positive(atoms)
    }

    /// Inserts a piece boundary at `u` (no-op if one is already there).
    pub fn split_at(&self, u: f64) -> Lift {
        let mut pieces = Vec::with_capacity(self.pieces.len() + 1);
        for p in &self.pieces {
            if u > p.u0 + EPS && u < p.u1 - EPS {
                pieces.push(Piece { u0: p.u0, u1: u, conditional: p.conditional.clone() });
                pieces.push(Piece { u0: u, u1: p.u1, conditional: p.conditional.clone() });
            } else {
                pieces.push(p.clone());
            }
        }
        Lift { pieces }
    }

    /// Splits every piece into `k` equal sub-pieces.
    pub fn refine(&self, k: usize) -> Result<Lift> {
        if k == 0 {
            return Err(Error::OutOfRange("refinement factor must be positive".into()));
        }
        let mut pieces = Vec::with_capacity(self.pieces.len() * k);
        for p in &self.pieces {
            let w = p.width();
            for i in 0..k {
                let u0 = if i == 0 { p.u0 } else { p.u0 + w * i as f64 / k as f64 };
                let u1 = if i + 1 == k { p.u1 } else { p.u0 + w * (i + 1) as f64 / k as f64 };
                pieces.push(Piece { u0, u1, conditional: p.conditional.clone() });
            }
        }
        Ok(Lift { pieces })
    }

    /// Marginal check: `Σ (u1 - u0) conditional = m` within [`EPS`] in `W1`.
    pub fn validate(&self, m: &DiscreteMeasure) -> bool {
        let marg = self.marginal();
        match measure::w1(&marg, m) {
            Ok(d) => d <= EPS * (1.0 + m.mass()),
            Err(_) => false,
        }
    }
}

fn require_probability(m: &DiscreteMeasure) -> Result<()> {
    if (m.mass() - 1.0).abs() > slack(1.0) {
        return Err(Error::MassError(format!("expected a probability measure, mass is {}", m.mass())));
    }
    Ok(())
}

fn from_atoms_in_order<'a, I: Iterator<Item = &'a Atom>>(atoms: I) -> Result<Lift> {
    let mut pieces = Vec::new();
    let mut u = 0.0;
    for a in atoms {
        pieces.push(Piece { u0: u, u1: u + a.m, conditional: DiscreteMeasure::dirac(a.x) });
        u += a.m;
    }
    if let Some(last) = pieces.last_mut() {
        last.u1 = 1.0;
    }
    Lift::new(pieces)
}

/// Quantile lift: atoms revealed left to right.
pub fn lift_quantile(m: &DiscreteMeasure) -> Result<Lift> {
    require_probability(m)?;
    from_atoms_in_order(m.atoms().iter())
}

/// Reverse quantile lift: atoms revealed right to left.
pub fn lift_reverse_quantile(m: &DiscreteMeasure) -> Result<Lift> {
    require_probability(m)?;
    from_atoms_in_order(m.atoms().iter().rev())
}

/// Product lift `λ ⊗ m`.
pub fn lift_product(m: &DiscreteMeasure) -> Result<Lift> {
    require_probability(m)?;
    Lift::new(vec![Piece { u0: 0.0, u1: 1.0, conditional: m.clone() }])
}

/// Centered lift: `μ_{[0,u]}` is the shadow of `u δ_c` in `m`, `c` the
/// barycenter. Between breakpoints the window edges grow inside fixed atoms
/// `f < c < g` and the conditional is `a δ_f + b δ_g` with the edge rates as
/// weights.
pub fn lift_middle(m: &DiscreteMeasure) -> Result<Lift> {
    require_probability(m)?;
    let curve = m.central_curve()?;
    let c = curve.center();
    let atoms = m.atoms();
    let mut pieces: Vec<Piece> = Vec::new();
    for seg in curve.segments() {
        if seg.u1 - seg.u0 <= 1e-15 {
            continue;
        }
        let conditional = if seg.left == seg.right {
            DiscreteMeasure::dirac(atoms[seg.left].x)
        } else {
            let (f, g) = (atoms[seg.left].x, atoms[seg.right].x);
            DiscreteMeasure::new([(f, (g - c) / (g - f)), (g, (c - f) / (g - f))])?
        };
        let u0 = pieces.last().map(|p| p.u1).unwrap_or(0.0);
        pieces.push(Piece { u0, u1: seg.u1, conditional });
    }
    if let Some(last) = pieces.last_mut() {
        last.u1 = 1.0;
    }
    Lift::new(pieces)
}
