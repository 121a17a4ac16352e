//! Dense two-phase simplex with Bland's anti-cycling rule.

use alloc::vec;
use alloc::vec::Vec;
use libm::fabs;
use serde::{Deserialize, Serialize};

use crate::model::Relation;

pub const PIVOT_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableBound {
    pub lower: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
}

impl Default for VariableBound {
    fn default() -> Self {
        Self { lower: 0.0, upper: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// One per variable; finite lower bounds only.
    pub bounds: Vec<VariableBound>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub objective_value: f64,
    pub pivots: usize,
}

struct Tableau {
    /// `rows[i]` has `cols + 1` entries; the last is the right-hand side.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize, cost: &mut [f64]) {
        let pv = self.rows[r][c];
        for x in self.rows[r].iter_mut() {
            *x /= pv;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (x, p) in row.iter_mut().zip(&prow) {
                        *x -= f * p;
                    }
                    row[c] = 0.0;
                }
            }
        }
        let f = cost[c];
        if f != 0.0 {
            for (x, p) in cost.iter_mut().zip(&prow) {
                *x -= f * p;
            }
            cost[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Minimizes the reduced-cost row `cost` (last entry is −objective) over
    /// columns allowed by `eligible`. Returns false when unbounded.
    fn optimize(&mut self, cost: &mut [f64], eligible: &[bool]) -> bool {
        while self.pivots < MAX_PIVOTS {
            // Bland: lowest-index improving column.
            let Some(c) = (0..self.cols).find(|&j| eligible[j] && cost[j] < -PIVOT_TOL) else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL {
                    let ratio = row[self.cols] / a;
                    let better = match best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < br - 1e-12 || (fabs(ratio - br) <= 1e-12 && self.basis[i] < self.basis[bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, c, cost);
        }
        true
    }
}

pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.objective.len();
    debug_assert_eq!(lp.bounds.len(), n);

    // Shift x = lower + y so every structural variable is y ≥ 0.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in &lp.constraints {
        let shift: f64 = c.coefficients.iter().zip(&lp.bounds).map(|(a, b)| a * b.lower).sum();
        rows.push((c.coefficients.clone(), c.relation, c.rhs - shift));
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if let Some(u) = b.upper {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, Relation::Le, u - b.lower));
        }
    }
    for (a, rel, b) in rows.iter_mut() {
        if *b < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
            *b = -*b;
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let cols = n + n_slack + n_art;
    let art_start = n + n_slack;
    let mut t = Tableau { rows: Vec::with_capacity(m), basis: vec![0; m], cols, pivots: 0 };
    let (mut s, mut a) = (n, art_start);
    for (i, (coef, rel, b)) in rows.iter().enumerate() {
        let mut row = vec![0.0; cols + 1];
        row[..n].copy_from_slice(coef);
        row[cols] = *b;
        match rel {
            Relation::Le => {
                row[s] = 1.0;
                t.basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                row[s] = -1.0;
                s += 1;
                row[a] = 1.0;
                t.basis[i] = a;
                a += 1;
            }
            Relation::Eq => {
                row[a] = 1.0;
                t.basis[i] = a;
                a += 1;
            }
        }
        t.rows.push(row);
    }
    let rhs_scale = 1.0 + rows.iter().map(|r| fabs(r.2)).fold(0.0, f64::max);

    // Phase 1: minimize the sum of artificials.
    if n_art > 0 {
        let mut cost = vec![0.0; cols + 1];
        for (i, row) in t.rows.iter().enumerate() {
            if t.basis[i] >= art_start {
                for (c, x) in cost.iter_mut().zip(row) {
                    *c -= x;
                }
            }
        }
        for c in cost[art_start..cols].iter_mut() {
            *c = 0.0;
        }
        let eligible = vec![true; cols];
        t.optimize(&mut cost, &eligible);
        if -cost[cols] > 1e-9 * rhs_scale {
            return LpSolution {
                status: LpStatus::Infeasible,
                values: Vec::new(),
                objective_value: f64::NAN,
                pivots: t.pivots,
            };
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                if let Some(c) = (0..art_start).find(|&j| fabs(t.rows[i][j]) > PIVOT_TOL) {
                    t.pivot(i, c, &mut cost);
                } else {
                    t.rows.remove(i);
                    t.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
    }

    // Phase 2 on the original objective, as minimization.
    let sign = if lp.sense == Sense::Maximize { -1.0 } else { 1.0 };
    let mut cost = vec![0.0; cols + 1];
    for j in 0..n {
        cost[j] = sign * lp.objective[j];
    }
    for (i, row) in t.rows.iter().enumerate() {
        let cb = if t.basis[i] < n { sign * lp.objective[t.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for (c, x) in cost.iter_mut().zip(row) {
                *c -= cb * x;
            }
        }
    }
    let eligible: Vec<bool> = (0..cols).map(|j| j < art_start).collect();
    if !t.optimize(&mut cost, &eligible) {
        return LpSolution {
            status: LpStatus::Unbounded,
            values: Vec::new(),
            objective_value: f64::NAN,
            pivots: t.pivots,
        };
    }
    let mut values: Vec<f64> = lp.bounds.iter().map(|b| b.lower).collect();
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            values[b] += t.rows[i][cols];
        }
    }
    let objective_value = lp.objective.iter().zip(&values).map(|(c, x)| c * x).sum();
    LpSolution { status: LpStatus::Optimal, values, objective_value, pivots: t.pivots }
}
