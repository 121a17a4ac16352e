use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use themis_core::goal::{solve_goal_program, GoalProgram, ResolvedConstraint};
use themis_core::lp::{self, Constraint, LinearProgram, LpStatus, Sense, VariableBound};
use themis_core::model::{Goal, Penalize, Relation};

pub const FEAS: f64 = 1e-7;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub struct Boxed {
    pub n: usize,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
    pub upper: Vec<f64>,
}

impl Boxed {
    pub fn feasible(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.upper).all(|(&v, &u)| v >= -FEAS && v <= u + FEAS)
            && self.rows.iter().all(|(a, rel, b)| {
                let lhs: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
                let tol = FEAS * (1.0 + b.abs());
                match rel {
                    Relation::Le => lhs <= b + tol,
                    Relation::Ge => lhs >= b - tol,
                    Relation::Eq => (lhs - b).abs() <= tol,
                }
            })
    }

    /// Every feasible vertex of the arrangement of the box, the rows and `extra`.
    pub fn vertices(&self, extra: &[(Vec<f64>, f64)]) -> Vec<Vec<f64>> {
        let mut planes: Vec<(Vec<f64>, f64)> = self.rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
        planes.extend_from_slice(extra);
        for i in 0..self.n {
            let mut e = vec![0.0; self.n];
            e[i] = 1.0;
            planes.push((e.clone(), 0.0));
            planes.push((e, self.upper[i]));
        }
        combinations(planes.len(), self.n)
            .into_iter()
            .filter_map(|c| {
                let a = c.iter().map(|&i| planes[i].0.clone()).collect();
                let b = c.iter().map(|&i| planes[i].1).collect();
                solve_square(a, b)
            })
            .filter(|x| self.feasible(x))
            .collect()
    }
}

pub fn random_boxed(rng: &mut ChaCha8Rng) -> Boxed {
    let n = rng.random_range(1..=4);
    let m = rng.random_range(0..=6);
    let upper = (0..n).map(|_| rng.random_range(2..=10) as f64).collect();
    let rows = (0..m)
        .map(|_| {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-4..=5) as f64).collect();
            let rel = match rng.random_range(0..6) {
                0 => Relation::Eq,
                1 | 2 => Relation::Ge,
                _ => Relation::Le,
            };
            (a, rel, rng.random_range(-5..=20) as f64)
        })
        .collect();
    Boxed { n, rows, upper }
}

pub fn as_lp(b: &Boxed, sense: Sense, objective: Vec<f64>) -> LinearProgram {
    LinearProgram {
        sense,
        objective,
        constraints: b.rows.iter().map(|(a, r, rhs)| Constraint { coefficients: a.clone(), relation: *r, rhs: *rhs }).collect(),
        bounds: b.upper.iter().map(|&u| VariableBound { lower: 0.0, upper: Some(u) }).collect(),
    }
}

pub fn check_lp_case(rng: &mut ChaCha8Rng) {
    let b = random_boxed(rng);
    let c: Vec<f64> = (0..b.n).map(|_| rng.random_range(-3..=3) as f64).collect();
    let sense = if rng.random_bool(0.5) { Sense::Maximize } else { Sense::Minimize };
    let sol = lp::solve(&as_lp(&b, sense, c.clone()));
    let verts = b.vertices(&[]);
    let val = |x: &Vec<f64>| x.iter().zip(&c).map(|(p, q)| p * q).sum::<f64>();
    if verts.is_empty() {
        assert_eq!(sol.status, LpStatus::Infeasible);
        return;
    }
    assert_eq!(sol.status, LpStatus::Optimal);
    let best = match sense {
        Sense::Maximize => verts.iter().map(val).fold(f64::NEG_INFINITY, f64::max),
        Sense::Minimize => verts.iter().map(val).fold(f64::INFINITY, f64::min),
    };
    assert!((sol.objective_value - best).abs() < 1e-6, "simplex {} vs vertices {best}", sol.objective_value);
    assert!(b.feasible(&sol.values));
}

pub fn var(i: usize) -> String {
    format!("x{i}")
}

pub fn coefs(a: &[f64]) -> BTreeMap<String, f64> {
    a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (var(i), *v)).collect()
}

pub struct RandomGp {
    pub boxed: Boxed,
    pub goals: Vec<(Vec<f64>, f64, f64, Penalize)>,
}

pub fn random_gp(rng: &mut ChaCha8Rng, nonneg: bool) -> RandomGp {
    let mut boxed = random_boxed(rng);
    boxed.rows.truncate(rng.random_range(0..=3));
    let k = rng.random_range(1..=3);
    let goals = (0..k)
        .map(|_| {
            let mut a: Vec<f64> = (0..boxed.n).map(|_| rng.random_range(if nonneg { 0 } else { -2 }..=4) as f64).collect();
            if a.iter().all(|v| *v == 0.0) {
                a[0] = 1.0;
            }
            let pen = match rng.random_range(0..3) {
                0 => Penalize::Under,
                1 => Penalize::Over,
                _ => Penalize::Both,
            };
            (a, rng.random_range(0..=40) as f64 / 2.0, rng.random_range(1..=4) as f64, pen)
        })
        .collect();
    RandomGp { boxed, goals }
}

pub fn to_program(r: &RandomGp, weight_scale: f64) -> GoalProgram {
    GoalProgram {
        actor_id: "t".into(),
        horizon_year: 0,
        decision_variables: (0..r.boxed.n).map(var).collect(),
        goals: r
            .goals
            .iter()
            .map(|(a, t, w, p)| Goal { expression_coefficients: coefs(a), target: *t, weight: w * weight_scale, penalize: *p })
            .collect(),
        constraints: r
            .boxed
            .rows
            .iter()
            .map(|(a, rel, b)| ResolvedConstraint { coefficients: coefs(a), relation: *rel, rhs: *b })
            .collect(),
        variable_bounds: r.boxed.upper.iter().map(|&u| VariableBound { lower: 0.0, upper: Some(u) }).collect(),
        objective: BTreeMap::new(),
    }
}

/// Weighted normalized penalized deviation at `x`.
pub fn gp_cost(r: &RandomGp, x: &[f64]) -> f64 {
    r.goals
        .iter()
        .map(|(a, t, w, p)| {
            let e: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
            let mut d = 0.0;
            if matches!(p, Penalize::Under | Penalize::Both) {
                d += (t - e).max(0.0);
            }
            if matches!(p, Penalize::Over | Penalize::Both) {
                d += (e - t).max(0.0);
            }
            w * d / t.abs().max(1.0)
        })
        .sum()
}

/// The cost is convex piecewise linear, so its minimum sits on a vertex of
/// the arrangement that includes every goal hyperplane.
pub fn gp_oracle(r: &RandomGp) -> Option<f64> {
    let extra: Vec<(Vec<f64>, f64)> = r.goals.iter().map(|(a, t, _, _)| (a.clone(), *t)).collect();
    r.boxed.vertices(&extra).iter().map(|x| gp_cost(r, x)).min_by(f64::total_cmp)
}

pub fn check_gp_case(rng: &mut ChaCha8Rng) {
    let r = random_gp(rng, false);
    let res = solve_goal_program(&to_program(&r, 1.0)).unwrap();
    match gp_oracle(&r) {
        None => {
            assert_eq!(res.status, LpStatus::Infeasible);
            assert_eq!(res.attainment, 0.0);
        }
        Some(z) => {
            assert_eq!(res.status, LpStatus::Optimal);
            assert!((res.weighted_deviation - z).abs() < 1e-6, "solver {} vs oracle {z}", res.weighted_deviation);
            let x: Vec<f64> = (0..r.boxed.n).map(|i| res.variable_values[&var(i)]).collect();
            assert!(r.boxed.feasible(&x));
            for ((a, t, _, _), d) in r.goals.iter().zip(&res.deviations) {
                let e: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum();
                assert!((e + d.under - d.over - t).abs() < 1e-7, "goal balance");
                assert!(d.under >= -1e-9 && d.over >= -1e-9);
            }
            let wsum: f64 = r.goals.iter().map(|g| g.2).sum();
            assert!((res.attainment - (1.0 - (z / wsum).min(1.0))).abs() < 1e-6);
        }
    }
}

pub fn cap_example() -> GoalProgram {
    GoalProgram {
        actor_id: "t".into(),
        horizon_year: 0,
        decision_variables: vec![var(0), var(1)],
        goals: vec![Goal { expression_coefficients: coefs(&[1.0, 1.0]), target: 10.0, weight: 1.0, penalize: Penalize::Under }],
        constraints: vec![
            ResolvedConstraint { coefficients: coefs(&[1.0, 0.0]), relation: Relation::Le, rhs: 4.0 },
            ResolvedConstraint { coefficients: coefs(&[0.0, 1.0]), relation: Relation::Le, rhs: 4.0 },
        ],
        variable_bounds: vec![VariableBound::default(); 2],
        objective: BTreeMap::new(),
    }
}
