//! Assignment solvers over a surrogate cost matrix.
//!
//! Every interceptor (row) receives exactly one target (column). On top of
//! that base rule the solvers understand coverage (every target receives at
//! least one interceptor), per-target capacities and forbidden pairs.
//! Exact solvers break ties toward the lexicographically smallest target
//! vector so logs stay reproducible.

mod auction;
mod brute;
mod hungarian;
mod milp;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostMatrix;
use crate::matrix::Matrix;
use crate::num::Real;

pub use auction::solve_auction;
pub use brute::{brute_force_assignment, BRUTE_FORCE_MAX_ROWS};
pub use hungarian::{pad_rectangular, solve_hungarian, ColumnSource, PadMode, PaddedProblem};
pub use milp::solve_milp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("cost matrix has non-finite entries")]
    NonFinite,
    #[error("cost matrix is {rows}x{cols}; a square matrix is required")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is already square; no padding needed")]
    NoPaddingNeeded,
    #[error("padding mode {mode:?} does not apply to a {rows}x{cols} matrix")]
    WrongPadMode { mode: PadMode, rows: usize, cols: usize },
    #[error("exhaustive search limited to {max} interceptors, got {rows}")]
    SizeGuard { rows: usize, max: usize },
    #[error("infeasible assignment problem: {}", .0.join("; "))]
    Infeasible(Vec<String>),
    #[error("constraint data inconsistent with matrix: {0}")]
    BadConstraints(String),
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("auction exceeded {0} bids without converging")]
    AuctionDiverged(usize),
}

/// Interceptor-to-target map. `target_of[i]` is the zero-based column of row `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Assignment<T = f64> {
    pub target_of: Vec<usize>,
    /// Sum of the chosen costs.
    pub objective: T,
}

impl<T: Real> Assignment<T> {
    pub fn new(cm: &Matrix<T>, target_of: Vec<usize>) -> Self {
        let objective = objective_of(cm, &target_of);
        Self { target_of, objective }
    }

    /// One-based target ids, as used in prompts and logs.
    pub fn ids(&self) -> Vec<usize> {
        self.target_of.iter().map(|k| k + 1).collect()
    }

    pub fn covers_all(&self, n_targets: usize) -> bool {
        let mut seen = vec![false; n_targets];
        for &k in &self.target_of {
            if k < n_targets {
                seen[k] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Side constraints for [`solve_milp`] and [`brute_force_assignment`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MilpConstraints {
    /// Every target gets at least one interceptor (needs `N >= N_T`).
    pub coverage_required: bool,
    /// Upper bound on interceptors per target.
    pub max_per_target: Option<Vec<usize>>,
    /// Disallowed `(interceptor, target)` pairs, zero-based.
    pub forbidden_pairs: BTreeSet<(usize, usize)>,
}

impl Default for MilpConstraints {
    fn default() -> Self {
        Self::coverage()
    }
}

impl MilpConstraints {
    /// Coverage only.
    pub fn coverage() -> Self {
        Self {
            coverage_required: true,
            max_per_target: None,
            forbidden_pairs: BTreeSet::new(),
        }
    }

    /// Only the one-target-per-interceptor rule.
    pub fn unconstrained() -> Self {
        Self {
            coverage_required: false,
            ..Self::coverage()
        }
    }

    /// The rule set the Hungarian solver implements for an `rows x cols` matrix:
    /// coverage when interceptors suffice, one-to-one otherwise.
    pub fn hungarian_semantics(rows: usize, cols: usize) -> Self {
        if rows >= cols {
            Self::coverage()
        } else {
            Self {
                coverage_required: false,
                max_per_target: Some(vec![1; cols]),
                forbidden_pairs: BTreeSet::new(),
            }
        }
    }

    /// Constraint set used during a mission: coverage when requested and
    /// interceptors suffice, one interceptor per target when they do not.
    pub fn for_mission(coverage: bool, rows: usize, cols: usize) -> Self {
        if rows < cols {
            Self::hungarian_semantics(rows, cols)
        } else if coverage {
            Self::coverage()
        } else {
            Self::unconstrained()
        }
    }

    pub(crate) fn check_shape(&self, rows: usize, cols: usize) -> Result<(), SolverError> {
        if let Some(cap) = &self.max_per_target {
            if cap.len() != cols {
                return Err(SolverError::BadConstraints(format!(
                    "{} capacities for {cols} targets",
                    cap.len()
                )));
            }
            if cap.iter().any(|&c| c == 0) {
                return Err(SolverError::BadConstraints("capacities must be ≥ 1".into()));
            }
        }
        if let Some(&(i, k)) = self.forbidden_pairs.iter().find(|&&(i, k)| i >= rows || k >= cols) {
            return Err(SolverError::BadConstraints(format!("forbidden pair ({i}, {k}) out of range")));
        }
        Ok(())
    }

    /// Cheap necessary feasibility checks, naming the binding constraint families.
    pub(crate) fn precheck(&self, rows: usize, cols: usize) -> Result<(), SolverError> {
        let mut reasons = Vec::new();
        if rows > 0 && cols == 0 {
            reasons.push("no targets to assign".to_string());
        }
        if self.coverage_required && rows < cols {
            reasons.push(format!("coverage: N ≥ N_T required ({rows} < {cols})"));
        }
        if let Some(cap) = &self.max_per_target {
            let total: usize = cap.iter().sum();
            if total < rows {
                reasons.push(format!("max_per_target: total capacity {total} < {rows} interceptors"));
            }
        }
        for i in 0..rows {
            if cols > 0 && (0..cols).all(|k| self.forbidden_pairs.contains(&(i, k))) {
                reasons.push(format!("forbidden_pairs: interceptor {} has no admissible target", i + 1));
            }
        }
        if self.coverage_required && rows > 0 {
            for k in 0..cols {
                if (0..rows).all(|i| self.forbidden_pairs.contains(&(i, k))) {
                    reasons.push(format!("coverage+forbidden_pairs: target {} cannot be covered", k + 1));
                }
            }
        }
        if reasons.is_empty() {
            Ok(())
        } else {
            Err(SolverError::Infeasible(reasons))
        }
    }

    /// Cost matrix with forbidden pairs set to `+inf`.
    pub(crate) fn mask<T: Real>(&self, c: &Matrix<T>) -> Matrix<T> {
        let mut m = c.clone();
        for &(i, k) in &self.forbidden_pairs {
            m[(i, k)] = T::infinity();
        }
        m
    }

    pub(crate) fn binding_families(&self) -> Vec<String> {
        let mut v = vec!["one target per interceptor".to_string()];
        if self.coverage_required {
            v.push("coverage".into());
        }
        if self.max_per_target.is_some() {
            v.push("max_per_target".into());
        }
        if !self.forbidden_pairs.is_empty() {
            v.push("forbidden_pairs".into());
        }
        v
    }
}

/// Sum of `c[i][target_of[i]]` in row order.
pub fn objective_of<T: Real>(c: &Matrix<T>, target_of: &[usize]) -> T {
    target_of
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, &k)| acc + c[(i, k)])
}

/// Objective slack within which two solutions count as tied.
pub(crate) fn tie_tolerance<T: Real>(c: &Matrix<T>) -> T {
    let max_abs = c
        .iter()
        .filter(|x| x.is_finite())
        .fold(T::zero(), |m, x| m.max(x.abs()));
    T::epsilon() * T::count(16 * (c.rows() + 1)) * (T::one() + max_abs)
}

pub(crate) fn require_finite<T: Real>(cm: &CostMatrix<T>) -> Result<(), SolverError> {
    if cm.values.all_finite() {
        Ok(())
    } else {
        Err(SolverError::NonFinite)
    }
}

/// Refines an exact solver's answer to the lexicographically smallest target
/// vector whose objective is within the tie tolerance of the optimum.
///
/// `solve` must return an optimal solution of the masked matrix it is given
/// (entries set to `+inf` are forbidden) or `None` when infeasible.
pub(crate) fn lexicographic_min<T: Real>(
    c: &Matrix<T>,
    solve: impl Fn(&Matrix<T>) -> Option<Vec<usize>>,
) -> Option<Vec<usize>> {
    let mut current = solve(c)?;
    let opt = objective_of(c, &current);
    let tol = tie_tolerance(c);
    let mut masked = c.clone();
    for i in 0..c.rows() {
        for k in 0..current[i] {
            if !masked[(i, k)].is_finite() {
                continue;
            }
            let trial = force_row(&masked, i, k);
            if let Some(sol) = solve(&trial) {
                if objective_of(c, &sol) <= opt + tol {
                    current = sol;
                    break;
                }
            }
        }
        masked = force_row(&masked, i, current[i]);
    }
    Some(current)
}

/// Copy of `m` in which row `i` may only take column `k`.
pub(crate) fn force_row<T: Real>(m: &Matrix<T>, i: usize, k: usize) -> Matrix<T> {
    let mut out = m.clone();
    for j in 0..m.cols() {
        if j != k {
            out[(i, j)] = T::infinity();
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn random_matrix(seed: u64, rows: usize, cols: usize) -> CostMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CostMatrix::from_values(Matrix::from_fn(rows, cols, |_, _| rng.gen_range(0.0..10.0)))
    }

    pub fn random_int_matrix(seed: u64, n: usize, hi: i32) -> CostMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CostMatrix::from_values(Matrix::from_fn(n, n, |_, _| rng.gen_range(0..hi) as f64))
    }
}
