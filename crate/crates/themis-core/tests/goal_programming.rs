mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use themis_core::goal::{solve_goal_program, GoalProgram};
use themis_core::lp::{self, Constraint, LinearProgram, LpStatus, Sense, VariableBound};
use themis_core::model::{Goal, Penalize, Relation};

use common::gp::*;

#[test]
fn lp_matches_vertex_enumeration_on_fifty_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..50 {
        check_lp_case(&mut rng);
    }
}

#[test]
fn lp_small_examples() {
    let cap = |a: Vec<f64>, r: f64| Constraint { coefficients: a, relation: Relation::Le, rhs: r };
    let sol = lp::solve(&LinearProgram {
        sense: Sense::Maximize,
        objective: vec![1.0],
        constraints: vec![cap(vec![1.0], 4.0)],
        bounds: vec![VariableBound::default()],
    });
    assert_eq!(sol.values, vec![4.0]);
    let sol = lp::solve(&LinearProgram {
        sense: Sense::Maximize,
        objective: vec![1.0, 1.0],
        constraints: vec![cap(vec![1.0, 0.0], 4.0), cap(vec![0.0, 1.0], 4.0), cap(vec![1.0, 1.0], 6.0)],
        bounds: vec![VariableBound::default(); 2],
    });
    assert!((sol.objective_value - 6.0).abs() < 1e-12);
    let sol = lp::solve(&LinearProgram {
        sense: Sense::Maximize,
        objective: vec![1.0],
        constraints: vec![Constraint { coefficients: vec![1.0], relation: Relation::Ge, rhs: 5.0 }, cap(vec![1.0], 4.0)],
        bounds: vec![VariableBound::default()],
    });
    assert_eq!(sol.status, LpStatus::Infeasible);
}

#[test]
fn goal_program_matches_arrangement_oracle_on_fifty_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..50 {
        check_gp_case(&mut rng);
    }
}

#[test]
fn capped_example_attains_point_eight() {
    let res = solve_goal_program(&cap_example()).unwrap();
    assert!((res.attainment - 0.8).abs() <= 1e-9, "{}", res.attainment);
    assert!((res.deviations[0].under - 2.0).abs() < 1e-9);
    // Grid oracle at step 0.01 over [0,4]².
    let mut best = f64::INFINITY;
    for i in 0..=400 {
        for j in 0..=400 {
            best = best.min((10.0 - (i as f64 + j as f64) / 100.0).max(0.0) / 10.0);
        }
    }
    assert!((res.attainment - (1.0 - best)).abs() < 1e-9);
}

#[test]
fn reachable_goal_attains_one() {
    let gp = GoalProgram {
        actor_id: "t".into(),
        horizon_year: 0,
        decision_variables: vec![var(0)],
        goals: vec![Goal { expression_coefficients: coefs(&[1.0]), target: 5.0, weight: 1.0, penalize: Penalize::Both }],
        constraints: vec![],
        variable_bounds: vec![VariableBound { lower: 0.0, upper: Some(10.0) }],
        objective: BTreeMap::new(),
    };
    let res = solve_goal_program(&gp).unwrap();
    assert_eq!(res.attainment, 1.0);
    assert_eq!(res.deviations[0].under + res.deviations[0].over, 0.0);
}

#[test]
fn conflicting_goals_favor_heavier_weight() {
    // x ≥ 8 (weight 2) against x ≤ 2 (weight 1), x ∈ [0,10].
    let gp = GoalProgram {
        actor_id: "t".into(),
        horizon_year: 0,
        decision_variables: vec![var(0)],
        goals: vec![
            Goal { expression_coefficients: coefs(&[1.0]), target: 8.0, weight: 2.0, penalize: Penalize::Under },
            Goal { expression_coefficients: coefs(&[1.0]), target: 2.0, weight: 1.0, penalize: Penalize::Over },
        ],
        constraints: vec![],
        variable_bounds: vec![VariableBound { lower: 0.0, upper: Some(10.0) }],
        objective: BTreeMap::new(),
    };
    let res = solve_goal_program(&gp).unwrap();
    let cost = |x: f64| 2.0 * (8.0 - x).max(0.0) / 8.0 + (x - 2.0).max(0.0) / 2.0;
    let (mut bx, mut bc) = (0.0, f64::INFINITY);
    for i in 0..=1000 {
        let x = i as f64 / 100.0;
        if cost(x) < bc {
            bc = cost(x);
            bx = x;
        }
    }
    assert!((res.variable_values["x0"] - bx).abs() < 1e-3, "{} vs grid {bx}", res.variable_values["x0"]);
    assert!((res.weighted_deviation - bc).abs() < 1e-3);
}

proptest! {
    #[test]
    fn lp_oracle_property(seed in any::<u64>()) {
        check_lp_case(&mut ChaCha8Rng::seed_from_u64(seed));
    }

    #[test]
    fn gp_oracle_property(seed in any::<u64>()) {
        check_gp_case(&mut ChaCha8Rng::seed_from_u64(seed));
    }

    #[test]
    fn weight_scaling_is_invariant(seed in any::<u64>(), pow in -3i32..4) {
        let r = random_gp(&mut ChaCha8Rng::seed_from_u64(seed), false);
        let a = solve_goal_program(&to_program(&r, 1.0)).unwrap();
        let b = solve_goal_program(&to_program(&r, 2f64.powi(pow))).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert!((a.attainment - b.attainment).abs() < 1e-9);
        for (k, v) in &a.variable_values {
            prop_assert!((v - b.variable_values[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn attainment_is_bounded_and_monotone(seed in any::<u64>(), step in 0.5f64..20.0) {
        let r = random_gp(&mut ChaCha8Rng::seed_from_u64(seed), true);
        let base = solve_goal_program(&to_program(&r, 1.0)).unwrap();
        prop_assert!((0.0..=1.0).contains(&base.attainment));
        let mut moved = RandomGp { boxed: Boxed { n: r.boxed.n, rows: r.boxed.rows.clone(), upper: r.boxed.upper.clone() }, goals: r.goals.clone() };
        // Targets stay ≥ 1, where the normalization scale equals the target and each
        // normalized deviation is pointwise monotone in it (expressions are ≥ 0).
        let g = &mut moved.goals[0];
        g.1 = g.1.max(1.0);
        match g.3 {
            Penalize::Under => g.1 += step,
            Penalize::Over | Penalize::Both => {
                g.3 = Penalize::Over;
                g.1 = (g.1 - step).max(1.0);
            }
        }
        let mut anchor = RandomGp { boxed: Boxed { n: r.boxed.n, rows: r.boxed.rows.clone(), upper: r.boxed.upper.clone() }, goals: r.goals.clone() };
        anchor.goals[0].3 = moved.goals[0].3;
        anchor.goals[0].1 = anchor.goals[0].1.max(1.0);
        let a0 = solve_goal_program(&to_program(&anchor, 1.0)).unwrap();
        let a1 = solve_goal_program(&to_program(&moved, 1.0)).unwrap();
        if a0.status == LpStatus::Optimal {
            prop_assert!(a1.attainment <= a0.attainment + 1e-9, "{} > {}", a1.attainment, a0.attainment);
        }
    }
}
