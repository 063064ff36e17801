//! Exhaustive search, used as a reference oracle on small problems.

use super::{require_finite, tie_tolerance, Assignment, MilpConstraints, SolverError};
use crate::cost::CostMatrix;
use crate::matrix::Matrix;
use crate::num::Real;

pub const BRUTE_FORCE_MAX_ROWS: usize = 8;

/// Enumerates every admissible target vector and returns the cheapest,
/// ties going to the lexicographically smallest vector.
pub fn brute_force_assignment<T: Real>(
    cm: &CostMatrix<T>,
    constraints: &MilpConstraints,
) -> Result<Assignment<T>, SolverError> {
    require_finite(cm)?;
    let (rows, cols) = cm.shape();
    if rows > BRUTE_FORCE_MAX_ROWS {
        return Err(SolverError::SizeGuard {
            rows,
            max: BRUTE_FORCE_MAX_ROWS,
        });
    }
    constraints.check_shape(rows, cols)?;
    let c = &cm.values;
    let mut search = Search {
        c,
        cons: constraints,
        load: vec![0; cols],
        current: Vec::with_capacity(rows),
        best: None,
        accept_within: None,
    };
    search.walk(T::zero());
    let Some((opt, _)) = search.best.take() else {
        return Err(SolverError::Infeasible(constraints.binding_families()));
    };
    search.accept_within = Some(opt + tie_tolerance(c));
    search.walk(T::zero());
    let (_, target_of) = search.best.expect("second pass finds the optimum again");
    Ok(Assignment::new(c, target_of))
}

struct Search<'a, T> {
    c: &'a Matrix<T>,
    cons: &'a MilpConstraints,
    load: Vec<usize>,
    current: Vec<usize>,
    best: Option<(T, Vec<usize>)>,
    /// Second pass: stop at the first vector within this value.
    accept_within: Option<T>,
}

impl<T: Real> Search<'_, T> {
    /// Returns true once the second pass has found its answer.
    fn walk(&mut self, acc: T) -> bool {
        let i = self.current.len();
        let (rows, cols) = self.c.shape();
        if i == rows {
            if let Some(limit) = self.accept_within {
                if acc <= limit {
                    self.best = Some((acc, self.current.clone()));
                    return true;
                }
            } else if self.best.as_ref().map_or(true, |(b, _)| acc < *b) {
                self.best = Some((acc, self.current.clone()));
            }
            return false;
        }
        for k in 0..cols {
            if self.cons.forbidden_pairs.contains(&(i, k)) {
                continue;
            }
            if let Some(cap) = &self.cons.max_per_target {
                if self.load[k] >= cap[k] {
                    continue;
                }
            }
            self.load[k] += 1;
            let uncovered = self.load.iter().filter(|&&l| l == 0).count();
            if !self.cons.coverage_required || uncovered <= rows - i - 1 {
                self.current.push(k);
                let done = self.walk(acc + self.c[(i, k)]);
                self.current.pop();
                if done {
                    self.load[k] -= 1;
                    return true;
                }
            }
            self.load[k] -= 1;
        }
        false
    }
}
