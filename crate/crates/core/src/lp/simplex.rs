//! Dense two-phase primal simplex with Bland's rule for
//! `min c·x  s.t.  A x = b, x >= 0`.
//!
//! One artificial column per row is kept through both phases (barred from
//! re-entering in phase two) so that the final tableau carries `B⁻¹` and the
//! dual multipliers can be read off the artificial reduced costs.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem {
    pub n_vars: usize,
    /// Sparse rows `(column, coefficient)`.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub rhs: Vec<f64>,
    pub cost: Vec<f64>,
}

impl LpProblem {
    pub fn new(n_vars: usize, cost: Vec<f64>) -> Self {
        LpProblem { n_vars, rows: Vec::new(), rhs: Vec::new(), cost }
    }

    pub fn add_row(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(row);
        self.rhs.push(rhs);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn name(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Multipliers `y` of the equality rows.
    pub duals: Vec<f64>,
    /// `|c·x - b·y|`.
    pub duality_gap: f64,
    /// `max_j max(0, -(c_j - A_jᵀ y))`.
    pub dual_infeasibility: f64,
    /// `max_i |A_i x - b_i|`.
    pub primal_residual: f64,
}

impl LpSolution {
    /// Returns the solution if optimal, otherwise the status as an error.
    pub fn optimal(self) -> Result<Self> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            s => Err(Error::LpStatus(s.name())),
        }
    }
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

struct Tableau {
    m: usize,
    width: usize,
    /// `m` constraint rows followed by the objective row, each of length
    /// `width + 1` (last entry is the right-hand side).
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.width + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f != 0.0 {
                let row = &mut self.t[i * w..(i + 1) * w];
                for (a, &b) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * b;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Loads `costs` into the objective row as reduced costs for the current
    /// basis.
    fn set_objective(&mut self, costs: &[f64]) {
        let w = self.width + 1;
        let m = self.m;
        for j in 0..w {
            self.t[m * w + j] = if j < self.width { costs[j] } else { 0.0 };
        }
        for i in 0..m {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.t[m * w + j] -= cb * self.t[i * w + j];
                }
            }
        }
    }

    /// Bland's rule iterations over the columns `< allowed`. Returns `false`
    /// if the problem is unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        loop {
            let entering = (0..allowed).find(|&j| self.at(self.m, j) < -COST_TOL);
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14 || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    let n = p.n_vars;
    let m = p.rows.len();
    if p.cost.len() != n {
        return Err(Error::DimensionMismatch(format!("{} costs for {n} variables", p.cost.len())));
    }
    if p.rhs.len() != m {
        return Err(Error::DimensionMismatch(format!("{} right-hand sides for {m} rows", p.rhs.len())));
    }
    for (i, row) in p.rows.iter().enumerate() {
        if let Some(&(j, _)) = row.iter().find(|&&(j, _)| j >= n) {
            return Err(Error::DimensionMismatch(format!("row {i} references column {j} of {n}")));
        }
    }

    let width = n + m;
    let w = width + 1;
    let mut t = vec![0.0; (m + 1) * w];
    let mut sign = vec![1.0; m];
    for (i, row) in p.rows.iter().enumerate() {
        if p.rhs[i] < 0.0 {
            sign[i] = -1.0;
        }
        for &(j, a) in row {
            t[i * w + j] += sign[i] * a;
        }
        t[i * w + n + i] = 1.0;
        t[i * w + width] = sign[i] * p.rhs[i];
    }
    let mut tab = Tableau { m, width, t, basis: (n..n + m).collect() };

    // Phase one: minimize the sum of artificials.
    let mut phase1 = vec![0.0; width];
    phase1[n..].iter_mut().for_each(|c| *c = 1.0);
    tab.set_objective(&phase1);
    tab.run(width);
    let infeas: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.rhs(i)).sum();
    let scale = 1.0 + p.rhs.iter().fold(0.0f64, |s, b| s.max(b.abs()));
    if infeas > FEAS_TOL * scale {
        return Ok(failed(p, LpStatus::Infeasible));
    }
    // Drive zero-level artificials out where possible; rows where that is
    // impossible are redundant and keep their artificial at zero.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(c) = (0..n).find(|&j| tab.at(i, j).abs() > 1e-9) {
                tab.pivot(i, c);
            }
        }
    }

    let mut phase2 = p.cost.clone();
    phase2.resize(width, 0.0);
    tab.set_objective(&phase2);
    if !tab.run(n) {
        return Ok(failed(p, LpStatus::Unbounded));
    }

    let mut x = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            x[tab.basis[i]] = tab.rhs(i).max(0.0);
        }
    }
    // Reduced cost of artificial column i is `0 - y'_i` for the sign-adjusted
    // row; undo the sign flip.
    let duals: Vec<f64> = (0..m).map(|i| -tab.at(m, n + i) * sign[i]).collect();
    Ok(finish(p, LpStatus::Optimal, x, duals))
}

fn failed(p: &LpProblem, status: LpStatus) -> LpSolution {
    LpSolution {
        status,
        x: vec![0.0; p.n_vars],
        objective: f64::NAN,
        duals: vec![0.0; p.rows.len()],
        duality_gap: f64::NAN,
        dual_infeasibility: f64::NAN,
        primal_residual: f64::NAN,
    }
}

fn finish(p: &LpProblem, status: LpStatus, x: Vec<f64>, duals: Vec<f64>) -> LpSolution {
    let objective: f64 = p.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    let dual_obj: f64 = p.rhs.iter().zip(&duals).map(|(b, y)| b * y).sum();
    let mut reduced = p.cost.clone();
    let mut primal_residual = 0.0f64;
    for (i, row) in p.rows.iter().enumerate() {
        let mut ax = 0.0;
        for &(j, a) in row {
            reduced[j] -= a * duals[i];
            ax += a * x[j];
        }
        primal_residual = primal_residual.max((ax - p.rhs[i]).abs());
    }
    let dual_infeasibility = reduced.iter().fold(0.0f64, |s, &r| s.max(-r));
    LpSolution {
        status,
        x,
        objective,
        duals,
        duality_gap: (objective - dual_obj).abs(),
        dual_infeasibility,
        primal_residual,
    }
}
