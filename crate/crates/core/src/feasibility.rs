//! Exact linear feasibility: find `p ≥ 0` with `M·p = d`, or a Farkas
//! certificate `y` with `yᵀM ≤ 0` and `yᵀd > 0` proving none exists.
//!
//! The solver is a dense-tableau phase-one simplex over big rationals with
//! Bland's rule, so it always terminates and its output is a deterministic
//! function of the input. Artificial columns stay in the tableau; their
//! final reduced costs give the dual multipliers used for the certificate.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::system::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeasibilityError {
    #[error("row {row} has {got} entries, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },
    #[error("{rows} constraint rows but {rhs} right-hand side entries")]
    RhsLength { rows: usize, rhs: usize },
}

/// Constraint system `M·p = d, p ≥ 0`, stored by rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityProblem {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    columns: usize,
}

impl FeasibilityProblem {
    /// `columns` is explicit so that problems with no rows, or rows of zero
    /// length, are still well formed.
    pub fn new(columns: usize, rows: Vec<Vec<Rational>>, rhs: Vec<Rational>) -> Result<Self, FeasibilityError> {
        if rows.len() != rhs.len() {
            return Err(FeasibilityError::RhsLength { rows: rows.len(), rhs: rhs.len() });
        }
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != columns) {
            return Err(FeasibilityError::RaggedRow { row, got: r.len(), expected: columns });
        }
        Ok(FeasibilityProblem { rows, rhs, columns })
    }

    /// Infers the column count from the first row.
    pub fn from_rows(rows: Vec<Vec<Rational>>, rhs: Vec<Rational>) -> Result<Self, FeasibilityError> {
        let columns = rows.first().map_or(0, Vec::len);
        Self::new(columns, rows, rhs)
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[Rational] {
        &self.rhs
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Multiplies one row and its right-hand side by `factor`.
    pub fn scale_row(&mut self, row: usize, factor: &Rational) {
        for v in &mut self.rows[row] {
            *v *= factor;
        }
        self.rhs[row] *= factor;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibleSolution {
    pub p: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FarkasCertificate {
    pub y: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FeasibilityOutcome {
    Feasible(FeasibleSolution),
    Infeasible(FarkasCertificate),
}

impl FeasibilityOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FeasibilityOutcome::Feasible(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub pivots: usize,
}

pub fn solve_feasibility(problem: &FeasibilityProblem) -> FeasibilityOutcome {
    solve_with_stats(problem).0
}

pub fn solve_with_stats(problem: &FeasibilityProblem) -> (FeasibilityOutcome, SolveStats) {
    let mut t = Tableau::phase_one(problem);
    let pivots = t.run();
    (t.outcome(), SolveStats { pivots })
}

/// Phase-one tableau. Columns `0..n` are structural, `n..n+m` artificial,
/// and the last column holds the right-hand side.
struct Tableau {
    n: usize,
    m: usize,
    body: Vec<Vec<Rational>>,
    /// Reduced costs of the phase-one objective; last entry is `−objective`.
    cost: Vec<Rational>,
    basis: Vec<usize>,
    /// Sign applied to each original row so that its rhs is non-negative.
    flip: Vec<bool>,
}

impl Tableau {
    fn phase_one(problem: &FeasibilityProblem) -> Tableau {
        let n = problem.columns;
        let m = problem.rows.len();
        let width = n + m + 1;
        let mut body = Vec::with_capacity(m);
        let mut flip = Vec::with_capacity(m);
        for (i, (row, d)) in problem.rows.iter().zip(&problem.rhs).enumerate() {
            let negate = d.is_negative();
            let mut r = vec![Rational::zero(); width];
            for (slot, v) in r.iter_mut().zip(row) {
                *slot = if negate { -v } else { v.clone() };
            }
            r[n + i] = Rational::one();
            r[width - 1] = if negate { -d } else { d.clone() };
            body.push(r);
            flip.push(negate);
        }
        // cost_j = c_j − Σ_i T[i][j] with c = 1 on artificials, 0 elsewhere.
        let mut cost = vec![Rational::zero(); width];
        for (j, slot) in cost.iter_mut().enumerate() {
            if j >= n && j < n + m {
                continue;
            }
            *slot = -body.iter().fold(Rational::zero(), |acc, r| acc + &r[j]);
        }
        Tableau { n, m, body, cost, basis: (n..n + m).collect(), flip }
    }

    fn run(&mut self) -> usize {
        let rhs = self.n + self.m;
        let mut pivots = 0;
        // Bland: lowest-index improving column; ties in the ratio test broken
        // by lowest basic variable index.
        while let Some(enter) = (0..rhs).find(|&j| self.cost[j].is_negative()) {
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                let a = &self.body[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.body[i][rhs] / a;
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            // Phase one is bounded below by zero, so some row always qualifies.
            let (row, _) = leave.expect("phase-one objective is bounded");
            self.pivot(row, enter);
            pivots += 1;
        }
        pivots
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.body[row][col].recip();
        for v in self.body[row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let nonzero: Vec<usize> = (0..self.body[row].len()).filter(|&j| !self.body[row][j].is_zero()).collect();
        let pivot_row = std::mem::take(&mut self.body[row]);
        let eliminate = |target: &mut Vec<Rational>| {
            let factor = target[col].clone();
            if factor.is_zero() {
                return;
            }
            for &j in &nonzero {
                target[j] -= &factor * &pivot_row[j];
            }
        };
        for (i, r) in self.body.iter_mut().enumerate() {
            if i != row {
                eliminate(r);
            }
        }
        eliminate(&mut self.cost);
        self.body[row] = pivot_row;
        self.basis[row] = col;
    }

    fn outcome(&self) -> FeasibilityOutcome {
        let rhs = self.n + self.m;
        let objective = -&self.cost[rhs];
        if objective.is_positive() {
            // Artificial reduced cost is 1 − u_i, where u are the duals of
            // the sign-normalized rows.
            let y = (0..self.m)
                .map(|i| {
                    let u = Rational::one() - &self.cost[self.n + i];
                    if self.flip[i] {
                        -u
                    } else {
                        u
                    }
                })
                .collect();
            FeasibilityOutcome::Infeasible(FarkasCertificate { y })
        } else {
            let mut p = vec![Rational::zero(); self.n];
            for (i, &b) in self.basis.iter().enumerate() {
                if b < self.n {
                    p[b] = self.body[i][rhs].clone();
                }
            }
            FeasibilityOutcome::Feasible(FeasibleSolution { p })
        }
    }
}

/// Re-checks an outcome against the problem with exact arithmetic only.
pub fn verify(problem: &FeasibilityProblem, outcome: &FeasibilityOutcome) -> bool {
    match outcome {
        FeasibilityOutcome::Feasible(sol) => verify_solution(problem, sol),
        FeasibilityOutcome::Infeasible(cert) => verify_certificate(problem, cert),
    }
}

pub fn verify_solution(problem: &FeasibilityProblem, sol: &FeasibleSolution) -> bool {
    sol.p.len() == problem.columns
        && sol.p.iter().all(|v| !v.is_negative())
        && problem.rows.iter().zip(&problem.rhs).all(|(row, d)| {
            let lhs = row.iter().zip(&sol.p).fold(Rational::zero(), |acc, (a, x)| acc + a * x);
            lhs == *d
        })
}

pub fn verify_certificate(problem: &FeasibilityProblem, cert: &FarkasCertificate) -> bool {
    if cert.y.len() != problem.rows.len() {
        return false;
    }
    let yd = cert.y.iter().zip(&problem.rhs).fold(Rational::zero(), |acc, (y, d)| acc + y * d);
    if !yd.is_positive() {
        return false;
    }
    (0..problem.columns).all(|j| {
        let v = cert.y.iter().zip(&problem.rows).fold(Rational::zero(), |acc, (y, row)| acc + y * &row[j]);
        !v.is_positive()
    })
}
