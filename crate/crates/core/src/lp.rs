//! Exact linear feasibility and optimization over the rationals.
//!
//! A dense two-phase simplex with Bland's rule: anti-cycling, deterministic,
//! and exact (the returned solution satisfies every constraint with rational
//! equality, no tolerances). Intended for desk-scale problems of at most a
//! few hundred variables.

use num_traits::{One, Signed, Zero};

use crate::rational::Rat;

/// Relation of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// `coeffs . x  <relation>  rhs`.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub coeffs: Vec<Rat>,
    pub relation: Relation,
    pub rhs: Rat,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<Rat>, relation: Relation, rhs: Rat) -> Self {
        LinearConstraint { coeffs, relation, rhs }
    }

    pub fn holds_at(&self, x: &[Rat]) -> bool {
        let lhs: Rat = self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum();
        match self.relation {
            Relation::Eq => lhs == self.rhs,
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

/// A linear feasibility problem with an optional linear objective to
/// minimize. Variables are nonnegative by default; entries of `free` mark
/// sign-unrestricted variables.
#[derive(Debug, Clone)]
pub struct LinearFeasibilityProblem {
    pub num_vars: usize,
    pub free: Vec<bool>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: Option<Vec<Rat>>,
}

impl LinearFeasibilityProblem {
    pub fn new(num_vars: usize) -> Self {
        LinearFeasibilityProblem {
            num_vars,
            free: vec![false; num_vars],
            constraints: Vec::new(),
            objective: None,
        }
    }

    pub fn all_free(num_vars: usize) -> Self {
        LinearFeasibilityProblem {
            num_vars,
            free: vec![true; num_vars],
            constraints: Vec::new(),
            objective: None,
        }
    }

    pub fn push(&mut self, coeffs: Vec<Rat>, relation: Relation, rhs: Rat) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint width");
        self.constraints.push(LinearConstraint::new(coeffs, relation, rhs));
    }

    pub fn minimize(&mut self, objective: Vec<Rat>) {
        assert_eq!(objective.len(), self.num_vars, "objective width");
        self.objective = Some(objective);
    }

    /// Exact check that `x` satisfies every constraint.
    pub fn is_satisfied_by(&self, x: &[Rat]) -> bool {
        x.len() == self.num_vars
            && self.constraints.iter().all(|c| c.holds_at(x))
            && self.free.iter().zip(x).all(|(&f, v)| f || !v.is_negative())
    }

    pub fn objective_at(&self, x: &[Rat]) -> Rat {
        match &self.objective {
            Some(c) => c.iter().zip(x).map(|(c, v)| c * v).sum(),
            None => Rat::zero(),
        }
    }

    pub fn solve(&self) -> LpOutcome {
        Simplex::build(self).run(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub values: Vec<Rat>,
    pub objective: Rat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    /// Structural column for variable `var`, with sign `+1` or `-1`
    /// (free variables are split as a difference of two nonnegatives).
    Structural { var: usize, negated: bool },
    Slack,
    Artificial,
}

struct Simplex {
    cols: Vec<ColKind>,
    /// tableau[row][col]; rhs kept separately, always nonnegative.
    tableau: Vec<Vec<Rat>>,
    rhs: Vec<Rat>,
    basis: Vec<usize>,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl Simplex {
    fn build(p: &LinearFeasibilityProblem) -> Simplex {
        let mut cols = Vec::new();
        let mut pos_col = vec![usize::MAX; p.num_vars];
        let mut neg_col = vec![usize::MAX; p.num_vars];
        for v in 0..p.num_vars {
            pos_col[v] = cols.len();
            cols.push(ColKind::Structural { var: v, negated: false });
            if p.free[v] {
                neg_col[v] = cols.len();
                cols.push(ColKind::Structural { var: v, negated: true });
            }
        }

        // Normalize rows: expand structural part, force rhs >= 0.
        struct Row {
            structural: Vec<Rat>,
            relation: Relation,
            rhs: Rat,
        }
        let rows: Vec<Row> = p
            .constraints
            .iter()
            .map(|c| {
                let mut structural = vec![Rat::zero(); cols.len()];
                for (v, coeff) in c.coeffs.iter().enumerate() {
                    structural[pos_col[v]] = coeff.clone();
                    if neg_col[v] != usize::MAX {
                        structural[neg_col[v]] = -coeff.clone();
                    }
                }
                let mut relation = c.relation;
                let mut rhs = c.rhs.clone();
                if rhs.is_negative() {
                    for s in structural.iter_mut() {
                        *s = -std::mem::take(s);
                    }
                    rhs = -rhs;
                    relation = match relation {
                        Relation::Eq => Relation::Eq,
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                    };
                }
                Row { structural, relation, rhs }
            })
            .collect();

        // Slack columns, then artificial columns where the slack cannot seed
        // the basis (Ge and Eq rows).
        let m = rows.len();
        let mut tableau: Vec<Vec<Rat>> = rows.iter().map(|r| r.structural.clone()).collect();
        let mut basis = vec![usize::MAX; m];
        for (i, row) in rows.iter().enumerate() {
            match row.relation {
                Relation::Le | Relation::Ge => {
                    let col = cols.len();
                    cols.push(ColKind::Slack);
                    for (j, t) in tableau.iter_mut().enumerate() {
                        t.push(if j == i {
                            if row.relation == Relation::Le { Rat::one() } else { -Rat::one() }
                        } else {
                            Rat::zero()
                        });
                    }
                    if row.relation == Relation::Le {
                        basis[i] = col;
                    }
                }
                Relation::Eq => {}
            }
        }
        for (i, b) in basis.iter_mut().enumerate() {
            if *b != usize::MAX {
                continue;
            }
            let col = cols.len();
            cols.push(ColKind::Artificial);
            for (j, t) in tableau.iter_mut().enumerate() {
                t.push(if j == i { Rat::one() } else { Rat::zero() });
            }
            *b = col;
        }
        let rhs = rows.into_iter().map(|r| r.rhs).collect();

        Simplex { cols, tableau, rhs, basis }
    }

    fn run(mut self, p: &LinearFeasibilityProblem) -> LpOutcome {
        let ncols = self.cols.len();

        // Phase 1: minimize the sum of artificial variables.
        let has_artificial = self.cols.iter().any(|c| matches!(c, ColKind::Artificial));
        if has_artificial {
            let cost: Vec<Rat> = self
                .cols
                .iter()
                .map(|c| match c {
                    ColKind::Artificial => Rat::one(),
                    _ => Rat::zero(),
                })
                .collect();
            match self.minimize_cost(&cost, &vec![false; ncols]) {
                Phase::Optimal => {}
                Phase::Unbounded => unreachable!("phase-1 objective is bounded below by 0"),
            }
            let residual: Rat = self
                .basis
                .iter()
                .zip(&self.rhs)
                .filter(|(&b, _)| matches!(self.cols[b], ColKind::Artificial))
                .map(|(_, r)| r.clone())
                .sum();
            if !residual.is_zero() {
                return LpOutcome::Infeasible;
            }
            // Pivot remaining zero-valued artificials out where possible;
            // rows that stay artificial-basic are redundant and harmless once
            // artificial columns are barred from entering.
            for row in 0..self.basis.len() {
                if matches!(self.cols[self.basis[row]], ColKind::Artificial) {
                    let col = (0..ncols).find(|&c| {
                        !matches!(self.cols[c], ColKind::Artificial)
                            && !self.tableau[row][c].is_zero()
                    });
                    if let Some(col) = col {
                        self.pivot(row, col);
                    }
                }
            }
        }

        // Phase 2: minimize the real objective, artificial columns barred.
        let barred: Vec<bool> = self
            .cols
            .iter()
            .map(|c| matches!(c, ColKind::Artificial))
            .collect();
        if p.objective.is_some() {
            let cost: Vec<Rat> = self
                .cols
                .iter()
                .map(|c| match *c {
                    ColKind::Structural { var, negated } => {
                        let coeff = p.objective.as_ref().unwrap()[var].clone();
                        if negated { -coeff } else { coeff }
                    }
                    _ => Rat::zero(),
                })
                .collect();
            match self.minimize_cost(&cost, &barred) {
                Phase::Optimal => {}
                Phase::Unbounded => return LpOutcome::Unbounded,
            }
        }

        // Extract the structural solution.
        let mut values = vec![Rat::zero(); p.num_vars];
        for (row, &b) in self.basis.iter().enumerate() {
            if let ColKind::Structural { var, negated } = self.cols[b] {
                if negated {
                    values[var] -= self.rhs[row].clone();
                } else {
                    values[var] += self.rhs[row].clone();
                }
            }
        }
        let objective = p.objective_at(&values);
        debug_assert!(p.is_satisfied_by(&values), "simplex returned an inexact solution");
        LpOutcome::Optimal(LpSolution { values, objective })
    }

    /// Bland's rule: entering column is the lowest-index column with a
    /// negative reduced cost; leaving row is the lowest-basis-index row among
    /// the minimal ratios. Terminates on every input.
    fn minimize_cost(&mut self, cost: &[Rat], barred: &[bool]) -> Phase {
        let ncols = self.cols.len();
        // Reduced costs z[j] = cost[j] - cost_B . B^-1 A_j for the current basis.
        let mut zrow = cost.to_vec();
        for (row, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            let scale = cost[b].clone();
            for (z, t) in zrow.iter_mut().zip(&self.tableau[row]) {
                *z -= &scale * t;
            }
        }

        loop {
            let entering = (0..ncols).find(|&j| !barred[j] && zrow[j].is_negative());
            let entering = match entering {
                Some(j) => j,
                None => return Phase::Optimal,
            };

            let mut leaving: Option<(usize, Rat)> = None;
            for row in 0..self.basis.len() {
                let coeff = &self.tableau[row][entering];
                if coeff.is_positive() {
                    let ratio = &self.rhs[row] / coeff;
                    let better = match &leaving {
                        None => true,
                        Some((best_row, best_ratio)) => {
                            ratio < *best_ratio
                                || (ratio == *best_ratio
                                    && self.basis[row] < self.basis[*best_row])
                        }
                    };
                    if better {
                        leaving = Some((row, ratio));
                    }
                }
            }
            let (leave_row, _) = match leaving {
                Some(l) => l,
                None => return Phase::Unbounded,
            };

            self.pivot_with_zrow(leave_row, entering, &mut zrow);
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.tableau[row][col].clone();
        assert!(!pivot.is_zero());
        for v in self.tableau[row].iter_mut() {
            *v /= &pivot;
        }
        self.rhs[row] /= &pivot;
        for r in 0..self.tableau.len() {
            if r == row {
                continue;
            }
            let factor = self.tableau[r][col].clone();
            if factor.is_zero() {
                continue;
            }
            for j in 0..self.tableau[r].len() {
                let t = self.tableau[row][j].clone();
                self.tableau[r][j] -= &factor * &t;
            }
            let t = self.rhs[row].clone();
            self.rhs[r] -= &factor * &t;
        }
        self.basis[row] = col;
    }

    fn pivot_with_zrow(&mut self, row: usize, col: usize, zrow: &mut [Rat]) {
        self.pivot(row, col);
        let factor = zrow[col].clone();
        if !factor.is_zero() {
            for (z, t) in zrow.iter_mut().zip(&self.tableau[row]) {
                *z -= &factor * t;
            }
        }
    }
}
