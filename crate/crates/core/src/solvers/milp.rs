//! Exact assignment under side constraints by branch and bound.
//!
//! The relaxation at each node drops the capacity rows and is solved exactly
//! as an assignment problem; forbidden pairs and branching decisions enter as
//! `+inf` entries.

use super::hungarian::solve_base;
use super::{force_row, lexicographic_min, objective_of, require_finite, Assignment, MilpConstraints, SolverError};
use crate::cost::CostMatrix;
use crate::matrix::Matrix;
use crate::num::Real;

/// Minimum-cost assignment subject to `constraints`.
///
/// Each interceptor takes exactly one target. Infeasible problems report the
/// constraint families that cannot be satisfied together.
pub fn solve_milp<T: Real>(cm: &CostMatrix<T>, constraints: &MilpConstraints) -> Result<Assignment<T>, SolverError> {
    require_finite(cm)?;
    let (rows, cols) = cm.shape();
    constraints.check_shape(rows, cols)?;
    constraints.precheck(rows, cols)?;
    if rows == 0 {
        return Ok(Assignment::new(&cm.values, Vec::new()));
    }
    let masked = constraints.mask(&cm.values);
    let caps = constraints.max_per_target.as_deref();
    let solve = |m: &Matrix<T>| branch_and_bound(m, constraints.coverage_required, caps);
    lexicographic_min(&masked, solve)
        .map(|t| Assignment::new(&cm.values, t))
        .ok_or_else(|| SolverError::Infeasible(constraints.binding_families()))
}

struct Node<T> {
    costs: Matrix<T>,
    fixed: Vec<bool>,
}

fn branch_and_bound<T: Real>(c: &Matrix<T>, coverage: bool, caps: Option<&[usize]>) -> Option<Vec<usize>> {
    let Some(caps) = caps else {
        return solve_base(c, coverage, None);
    };
    let mut best: Option<(T, Vec<usize>)> = None;
    let mut stack = vec![Node {
        costs: c.clone(),
        fixed: vec![false; c.rows()],
    }];
    while let Some(node) = stack.pop() {
        let Some(sol) = solve_base(&node.costs, coverage, None) else {
            continue;
        };
        let bound = objective_of(&node.costs, &sol);
        if best.as_ref().is_some_and(|(b, _)| bound >= *b) {
            continue;
        }
        let mut load = vec![0usize; caps.len()];
        for &k in &sol {
            load[k] += 1;
        }
        let Some(k) = (0..caps.len()).find(|&k| load[k] > caps[k]) else {
            best = Some((bound, sol));
            continue;
        };
        // move the free row that is cheapest to move away from `k`
        let regret = |i: usize| {
            (0..c.cols())
                .filter(|&j| j != k)
                .map(|j| node.costs[(i, j)])
                .fold(T::infinity(), T::min)
                - node.costs[(i, k)]
        };
        let Some(r) = (0..sol.len())
            .filter(|&i| sol[i] == k && !node.fixed[i])
            .min_by(|&a, &b| regret(a).partial_cmp(&regret(b)).unwrap_or(std::cmp::Ordering::Equal))
        else {
            continue;
        };
        let mut forbid = node.costs.clone();
        forbid[(r, k)] = T::infinity();
        let mut fixed = node.fixed.clone();
        fixed[r] = true;
        stack.push(Node {
            costs: forbid,
            fixed: node.fixed,
        });
        stack.push(Node {
            costs: force_row(&node.costs, r, k),
            fixed,
        });
    }
    best.map(|(_, sol)| sol)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::random_matrix;
    use super::super::{brute_force_assignment, pad_rectangular, solve_hungarian, PadMode};
    use super::*;

    #[test]
    fn coverage_only_matches_hungarian() {
        for seed in 0..100 {
            let cm = random_matrix(seed, 5, 5);
            let m = solve_milp(&cm, &MilpConstraints::default()).unwrap();
            let h = solve_hungarian(&cm).unwrap();
            assert!((m.objective - h.objective).abs() < 1e-9);
            assert_eq!(m.target_of, h.target_of);
        }
    }

    #[test]
    fn unit_capacities_reduce_to_linear_assignment() {
        for seed in 0..40 {
            let cm = random_matrix(seed + 500, 6, 6);
            let cons = MilpConstraints {
                coverage_required: false,
                max_per_target: Some(vec![1; 6]),
                ..MilpConstraints::default()
            };
            let m = solve_milp(&cm, &cons).unwrap();
            let h = solve_hungarian(&cm).unwrap();
            assert_eq!(m.target_of, h.target_of);
        }
    }

    #[test]
    fn forbidden_pair_forces_alternative() {
        let cm = CostMatrix::from_rows(&[vec![1.0, 9.0], vec![9.0, 1.0]]);
        let mut cons = MilpConstraints::default();
        cons.forbidden_pairs.insert((0, 0));
        let a = solve_milp(&cm, &cons).unwrap();
        assert_eq!(a.ids(), vec![2, 1]);
        assert_eq!(a.objective, 18.0);
    }

    #[test]
    fn capacities_agree_with_padding_and_enumeration() {
        for seed in 0..40 {
            let cm = random_matrix(seed + 900, 7, 3);
            let caps = vec![3, 2, 3];
            let cons = MilpConstraints {
                max_per_target: Some(caps.clone()),
                ..MilpConstraints::default()
            };
            let m = solve_milp(&cm, &cons).unwrap();
            let b = brute_force_assignment(&cm, &cons).unwrap();
            assert!((m.objective - b.objective).abs() < 1e-9);
            assert_eq!(m.target_of, b.target_of);
            let p = pad_rectangular(&cm, PadMode::DuplicateTargets, Some(&caps)).unwrap();
            let finite = p.matrix.map(|x| if x.is_finite() { x } else { 1e6 });
            let sq = solve_hungarian(&CostMatrix::from_values(finite)).unwrap();
            let via_pad = p.unpad(&cm.values, &sq.target_of);
            assert!((objective_of(&cm.values, &via_pad) - m.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn mixed_constraints_match_enumeration() {
        for seed in 0..40 {
            let cm = random_matrix(seed + 1300, 6, 4);
            let mut cons = MilpConstraints {
                max_per_target: Some(vec![2, 1, 2, 2]),
                ..MilpConstraints::default()
            };
            cons.forbidden_pairs.extend([(0, (seed % 4) as usize), (3, 1), (5, 2)]);
            let m = solve_milp(&cm, &cons).unwrap();
            let b = brute_force_assignment(&cm, &cons).unwrap();
            assert_eq!(m.target_of, b.target_of, "seed {seed}");
        }
    }

    #[test]
    fn infeasible_reports_families() {
        let cm = random_matrix(3, 3, 2);
        let cons = MilpConstraints {
            max_per_target: Some(vec![1, 1]),
            ..MilpConstraints::default()
        };
        match solve_milp(&cm, &cons) {
            Err(SolverError::Infeasible(r)) => assert!(r[0].contains("max_per_target")),
            other => panic!("{other:?}"),
        }
        // every individual check passes but the combination does not
        let cm = random_matrix(4, 2, 2);
        let mut cons = MilpConstraints::default();
        cons.forbidden_pairs.extend([(0, 1), (1, 1)]);
        assert!(matches!(solve_milp(&cm, &cons), Err(SolverError::Infeasible(_))));
        let mut cons = MilpConstraints::default();
        cons.forbidden_pairs.extend([(0, 0), (1, 0)]);
        cons.coverage_required = false;
        cons.max_per_target = Some(vec![1, 1]);
        match solve_milp(&cm, &cons) {
            Err(SolverError::Infeasible(r)) => assert!(r.contains(&"max_per_target".to_string())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_constraint_shape() {
        let cm = random_matrix(5, 2, 2);
        let cons = MilpConstraints {
            max_per_target: Some(vec![1]),
            ..MilpConstraints::default()
        };
        assert!(matches!(solve_milp(&cm, &cons), Err(SolverError::BadConstraints(_))));
        let mut cons = MilpConstraints::default();
        cons.forbidden_pairs.insert((2, 0));
        assert!(matches!(solve_milp(&cm, &cons), Err(SolverError::BadConstraints(_))));
    }
}
