//! Exact linear feasibility over non-negative rational variables, by phase-1
//! simplex with Bland's rule.

use serde::Serialize;

use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `sum coeffs[v] * x_v  (relation)  rhs`, with sparse coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(terms: Vec<(usize, Rational)>, relation: Relation, rhs: Rational) -> Self {
        Self { terms, relation, rhs }
    }

    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.terms.iter().map(|(v, c)| c * &x[*v]).sum()
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }
}

/// Named variables (all `>= 0`) and linear constraints.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeasibilityProblem {
    pub names: Vec<String>,
    pub constraints: Vec<Constraint>,
}

impl FeasibilityProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.names.len() - 1
    }

    pub fn variable_count(&self) -> usize {
        self.names.len()
    }

    pub fn add(&mut self, constraint: Constraint) {
        debug_assert!(constraint.terms.iter().all(|(v, _)| *v < self.names.len()));
        self.constraints.push(constraint);
    }

    /// `x_v >= bound`.
    pub fn lower_bound(&mut self, v: usize, bound: Rational) {
        self.add(Constraint::new(vec![(v, Rational::one())], Relation::Ge, bound));
    }

    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.names.len()
            && x.iter().all(|v| !v.is_negative())
            && self.constraints.iter().all(|c| c.satisfied_by(x))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    cost: Vec<Rational>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let width = self.rows[r].len();
        let p = self.rows[r][c].clone();
        if p != Rational::one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &p;
                }
            }
        }
        let pivot_row = self.rows[r].clone();
        let nonzero: Vec<usize> = (0..width).filter(|&k| !pivot_row[k].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &k in &nonzero {
                row[k] -= &(&f * &pivot_row[k]);
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for &k in &nonzero {
                self.cost[k] -= &(&f * &pivot_row[k]);
            }
        }
        self.basis[r] = c;
    }
}

/// Decide feasibility exactly; on success the returned point satisfies every
/// constraint and non-negativity bound in exact arithmetic.
pub fn lp_feasible(problem: &FeasibilityProblem) -> Feasibility {
    let n = problem.variable_count();
    let m = problem.constraints.len();
    // normalize to rhs >= 0
    let normalized: Vec<(Vec<Rational>, Relation, Rational)> = problem
        .constraints
        .iter()
        .map(|c| {
            let mut dense = vec![Rational::zero(); n];
            for (v, coef) in &c.terms {
                dense[*v] += coef;
            }
            if c.rhs.is_negative() {
                let relation = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (dense.into_iter().map(|v| -v).collect(), relation, -c.rhs.clone())
            } else {
                (dense, c.relation, c.rhs.clone())
            }
        })
        .collect();
    let slack_count = normalized.iter().filter(|(_, rel, _)| *rel != Relation::Eq).count();
    let artificial_count = normalized.iter().filter(|(_, rel, _)| *rel != Relation::Le).count();
    let width = n + slack_count + artificial_count + 1;
    let rhs_col = width - 1;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let (mut next_slack, mut next_art) = (n, n + slack_count);
    for (dense, relation, rhs) in normalized {
        let mut row = dense;
        row.resize(width, Rational::zero());
        row[rhs_col] = rhs;
        match relation {
            Relation::Le => {
                row[next_slack] = Rational::one();
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -Rational::one();
                next_slack += 1;
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = Rational::one();
                basis.push(next_art);
                next_art += 1;
            }
        }
        rows.push(row);
    }
    let first_art = n + slack_count;
    let mut cost = vec![Rational::zero(); width];
    for c in first_art..rhs_col {
        cost[c] = Rational::one();
    }
    for (row, &b) in rows.iter().zip(&basis) {
        if b >= first_art {
            for (k, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    cost[k] -= v;
                }
            }
        }
    }
    let mut t = Tableau { rows, basis, cost };
    loop {
        let Some(enter) = (0..rhs_col).find(|&c| t.cost[c].is_negative()) else { break };
        let mut leave: Option<(usize, Rational)> = None;
        for (i, row) in t.rows.iter().enumerate() {
            if !row[enter].is_positive() {
                continue;
            }
            let ratio = &row[rhs_col] / &row[enter];
            let better = match &leave {
                None => true,
                Some((li, best)) => ratio < *best || (ratio == *best && t.basis[i] < t.basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        // phase 1 is bounded below by zero, so a negative reduced cost always has a pivot row
        let (r, _) = leave.expect("phase-1 objective is bounded");
        t.pivot(r, enter);
    }
    let infeasibility: Rational =
        t.rows.iter().zip(&t.basis).filter(|(_, &b)| b >= first_art).map(|(row, _)| row[rhs_col].clone()).sum();
    if infeasibility.is_positive() {
        return Feasibility::Infeasible;
    }
    let mut x = vec![Rational::zero(); n];
    for (row, &b) in t.rows.iter().zip(&t.basis) {
        if b < n {
            x[b] = row[rhs_col].clone();
        }
    }
    debug_assert!(problem.satisfied_by(&x));
    Feasibility::Feasible(x)
}
