//! Shortest-augmenting-path Hungarian method with rectangular padding.

use serde::{Deserialize, Serialize};

use super::{lexicographic_min, require_finite, Assignment, MilpConstraints, SolverError};
use crate::cost::CostMatrix;
use crate::matrix::Matrix;
use crate::num::Real;

/// How a non-square matrix is squared up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadMode {
    /// More interceptors than targets: extra columns let surplus interceptors
    /// double up on real targets while every target stays covered.
    DuplicateTargets,
    /// Fewer interceptors than targets: zero-cost dummy interceptors absorb
    /// the targets left unengaged.
    DummyRows,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnSource {
    Target(usize),
    /// Resolves to the row's cheapest target.
    Surplus,
}

/// Square problem plus the maps back to the original rows and columns.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedProblem<T> {
    pub matrix: Matrix<T>,
    /// Original row for each padded row; `None` for dummies.
    pub row_source: Vec<Option<usize>>,
    pub col_source: Vec<ColumnSource>,
}

impl<T: Real> PaddedProblem<T> {
    /// Maps a square solution back to targets of the original rows.
    pub fn unpad(&self, original: &Matrix<T>, square: &[usize]) -> Vec<usize> {
        let mut out = vec![0; original.rows()];
        for (r, &col) in square.iter().enumerate() {
            let Some(i) = self.row_source[r] else { continue };
            out[i] = match self.col_source[col] {
                ColumnSource::Target(k) => k,
                ColumnSource::Surplus => row_argmin(original.row(i)).unwrap_or(0),
            };
        }
        out
    }
}

fn row_argmin<T: Real>(row: &[T]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, &x) in row.iter().enumerate() {
        if x.is_finite() && best.map_or(true, |b| x < row[b]) {
            best = Some(k);
        }
    }
    best
}

/// Squares a rectangular cost matrix.
///
/// `DuplicateTargets` (N > N_T) without capacities appends `N - N_T` surplus
/// columns priced at each row's cheapest target. With capacities, target `k`
/// gets `cap_k` columns, the first of which must be taken by a real
/// interceptor, and dummy rows absorb unused copies.
pub fn pad_rectangular<T: Real>(
    cm: &CostMatrix<T>,
    mode: PadMode,
    capacities: Option<&[usize]>,
) -> Result<PaddedProblem<T>, SolverError> {
    let (rows, cols) = cm.shape();
    if rows == cols {
        return Err(SolverError::NoPaddingNeeded);
    }
    let fits = match mode {
        PadMode::DuplicateTargets => rows > cols,
        PadMode::DummyRows => rows < cols,
    };
    if !fits {
        return Err(SolverError::WrongPadMode { mode, rows, cols });
    }
    if let Some(cap) = capacities {
        MilpConstraints {
            max_per_target: Some(cap.to_vec()),
            ..MilpConstraints::unconstrained()
        }
        .check_shape(rows, cols)?;
    }
    let padded = match mode {
        PadMode::DuplicateTargets => build_padded(&cm.values, true, capacities),
        PadMode::DummyRows => build_padded(&cm.values, false, Some(&vec![1; cols])),
    };
    padded.ok_or_else(|| {
        SolverError::Infeasible(vec![format!(
            "max_per_target: total capacity below {rows} interceptors"
        )])
    })
}

fn build_padded<T: Real>(c: &Matrix<T>, coverage: bool, caps: Option<&[usize]>) -> Option<PaddedProblem<T>> {
    let (n, m) = c.shape();
    match caps {
        None => {
            if n < m {
                return None;
            }
            let mut col_source: Vec<ColumnSource> = (0..m).map(ColumnSource::Target).collect();
            col_source.extend(std::iter::repeat(ColumnSource::Surplus).take(n - m));
            let matrix = Matrix::from_fn(n, n, |i, j| match col_source[j] {
                ColumnSource::Target(k) => c[(i, k)],
                ColumnSource::Surplus => row_argmin(c.row(i)).map_or(T::infinity(), |k| c[(i, k)]),
            });
            Some(PaddedProblem {
                matrix,
                row_source: (0..n).map(Some).collect(),
                col_source,
            })
        }
        Some(cap) => {
            let mut col_source = Vec::new();
            let mut primary = Vec::new();
            for (k, &ck) in cap.iter().enumerate() {
                for copy in 0..ck.min(n) {
                    col_source.push(ColumnSource::Target(k));
                    primary.push(copy == 0);
                }
            }
            let size = col_source.len();
            if size < n {
                return None;
            }
            let matrix = Matrix::from_fn(size, size, |r, j| {
                let ColumnSource::Target(k) = col_source[j] else { unreachable!() };
                if r < n {
                    c[(r, k)]
                } else if coverage && primary[j] {
                    T::infinity()
                } else {
                    T::zero()
                }
            });
            let row_source = (0..size).map(|r| (r < n).then_some(r)).collect();
            Some(PaddedProblem {
                matrix,
                row_source,
                col_source,
            })
        }
    }
}

/// Replaces `+inf` with a cost large enough that any solution using it is
/// worse than every solution avoiding it.
fn big_m<T: Real>(c: &Matrix<T>) -> Matrix<T> {
    let max_abs = c
        .iter()
        .filter(|x| x.is_finite())
        .fold(T::zero(), |a, x| a.max(x.abs()));
    let big = T::count(2 * (c.rows() + 1)) * (T::one() + max_abs);
    c.map(|x| if x.is_finite() { x } else { big })
}

/// Minimum-cost perfect matching of a square finite matrix; returns the
/// column of each row. O(n^3).
pub(crate) fn lap_square<T: Real>(c: &Matrix<T>) -> Vec<usize> {
    let n = c.rows();
    debug_assert!(c.is_square());
    if n == 0 {
        return Vec::new();
    }
    let inf = T::infinity();
    // 1-based potentials; column 0 is the virtual root
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] = u[owner[j]] + delta;
                    v[j] = v[j] - delta;
                } else {
                    minv[j] = minv[j] - delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            col_of[owner[j] - 1] = j - 1;
        }
    }
    col_of
}

/// Exact optimum of the base rules over a masked matrix (`+inf` = forbidden):
/// one target per row, plus coverage and/or capacities when given.
pub(crate) fn solve_base<T: Real>(c: &Matrix<T>, coverage: bool, caps: Option<&[usize]>) -> Option<Vec<usize>> {
    let (n, m) = c.shape();
    if n == 0 {
        return Some(Vec::new());
    }
    if m == 0 || (coverage && n < m) {
        return None;
    }
    let sol = if !coverage && caps.is_none() {
        (0..n).map(|i| row_argmin(c.row(i))).collect::<Option<Vec<_>>>()?
    } else if n == m && coverage {
        lap_square(&big_m(c))
    } else {
        let padded = build_padded(c, coverage, caps)?;
        let square = lap_square(&big_m(&padded.matrix));
        if square
            .iter()
            .enumerate()
            .any(|(r, &j)| !padded.matrix[(r, j)].is_finite())
        {
            return None;
        }
        padded.unpad(c, &square)
    };
    sol.iter()
        .enumerate()
        .all(|(i, &k)| c[(i, k)].is_finite())
        .then_some(sol)
}

/// Global minimum-cost assignment.
///
/// Square matrices give a one-to-one matching. With more interceptors than
/// targets every target is covered and surplus interceptors double up; with
/// fewer, each target takes at most one interceptor.
pub fn solve_hungarian<T: Real>(cm: &CostMatrix<T>) -> Result<Assignment<T>, SolverError> {
    require_finite(cm)?;
    let (rows, cols) = cm.shape();
    let rules = MilpConstraints::hungarian_semantics(rows, cols);
    rules.precheck(rows, cols)?;
    let solve = |m: &Matrix<T>| solve_base(m, rules.coverage_required, rules.max_per_target.as_deref());
    let target_of = lexicographic_min(&cm.values, solve)
        .ok_or_else(|| SolverError::Infeasible(rules.binding_families()))?;
    Ok(Assignment::new(&cm.values, target_of))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::random_matrix;
    use super::super::{brute_force_assignment, objective_of};
    use super::*;

    #[test]
    fn identity_favoring_matrix() {
        let cm = CostMatrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ]);
        let a = solve_hungarian(&cm).unwrap();
        assert_eq!(a.ids(), vec![1, 2, 3]);
        assert_eq!(a.objective, 0.0);
    }

    #[test]
    fn single_entry() {
        let a = solve_hungarian(&CostMatrix::from_rows(&[vec![7.0]])).unwrap();
        assert_eq!(a.ids(), vec![1]);
        assert_eq!(a.objective, 7.0);
    }

    #[test]
    fn empty_and_non_finite() {
        let a = solve_hungarian(&CostMatrix::<f64>::from_values(Matrix::zeros(0, 3))).unwrap();
        assert!(a.target_of.is_empty());
        let cm = CostMatrix::from_rows(&[vec![f64::NAN]]);
        assert_eq!(solve_hungarian(&cm), Err(SolverError::NonFinite));
    }

    #[test]
    fn matches_brute_force_on_random_squares() {
        for seed in 0..100 {
            let cm = random_matrix(seed, 5, 5);
            let h = solve_hungarian(&cm).unwrap();
            let b = brute_force_assignment(&cm, &MilpConstraints::coverage()).unwrap();
            assert!((h.objective - b.objective).abs() < 1e-9);
            assert_eq!(h.target_of, b.target_of);
        }
    }

    #[test]
    fn all_equal_matrix_takes_lexicographic_first() {
        let cm = CostMatrix::from_values(Matrix::filled(4, 4, 2.5));
        assert_eq!(solve_hungarian(&cm).unwrap().ids(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn surplus_interceptors_double_up() {
        let cm = CostMatrix::from_rows(&[vec![1.0, 5.0], vec![4.0, 2.0], vec![1.5, 9.0]]);
        let p = pad_rectangular(&cm, PadMode::DuplicateTargets, None).unwrap();
        assert_eq!(p.matrix.shape(), (3, 3));
        assert_eq!(p.col_source[2], ColumnSource::Surplus);
        let a = solve_hungarian(&cm).unwrap();
        // oracle over all 2^3 target choices with coverage
        let mut best = (f64::INFINITY, vec![]);
        for bits in 0..8usize {
            let t: Vec<usize> = (0..3).map(|i| (bits >> (2 - i)) & 1).collect();
            if !(t.contains(&0) && t.contains(&1)) {
                continue;
            }
            let v = objective_of(&cm.values, &t);
            if v < best.0 {
                best = (v, t);
            }
        }
        assert_eq!(a.target_of, best.1);
        assert!(a.covers_all(2));
        assert_eq!(a.ids(), vec![1, 2, 1]);
    }

    #[test]
    fn fewer_interceptors_leave_a_target_unengaged() {
        let cm = CostMatrix::from_rows(&[vec![3.0, 1.0, 2.0], vec![1.0, 4.0, 5.0]]);
        let p = pad_rectangular(&cm, PadMode::DummyRows, None).unwrap();
        assert_eq!(p.matrix.shape(), (3, 3));
        assert_eq!(p.row_source, vec![Some(0), Some(1), None]);
        let a = solve_hungarian(&cm).unwrap();
        assert_eq!(a.ids(), vec![2, 1]);
        assert_eq!(a.objective, 2.0);
    }

    #[test]
    fn padding_errors() {
        let sq = CostMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(pad_rectangular(&sq, PadMode::DummyRows, None), Err(SolverError::NoPaddingNeeded));
        let tall = CostMatrix::from_rows(&[vec![1.0], vec![2.0]]);
        assert!(matches!(
            pad_rectangular(&tall, PadMode::DummyRows, None),
            Err(SolverError::WrongPadMode { .. })
        ));
        let cm = random_matrix(1, 5, 2);
        assert!(matches!(
            pad_rectangular(&cm, PadMode::DuplicateTargets, Some(&[2, 2])),
            Err(SolverError::Infeasible(_))
        ));
    }

    #[test]
    fn capacity_padding_is_exact() {
        for seed in 0..30 {
            let cm = random_matrix(seed, 5, 3);
            let caps = [2, 1, 3];
            let p = pad_rectangular(&cm, PadMode::DuplicateTargets, Some(&caps)).unwrap();
            let sq = lap_square(&big_m(&p.matrix));
            let got = p.unpad(&cm.values, &sq);
            let cons = MilpConstraints {
                max_per_target: Some(caps.to_vec()),
                ..MilpConstraints::coverage()
            };
            let b = brute_force_assignment(&cm, &cons).unwrap();
            assert!((objective_of(&cm.values, &got) - b.objective).abs() < 1e-9);
        }
    }

    #[test]
    fn rectangular_matches_brute_force() {
        for seed in 0..40 {
            for (r, c) in [(6, 3), (3, 6), (7, 4)] {
                let cm = random_matrix(seed, r, c);
                let h = solve_hungarian(&cm).unwrap();
                let b = brute_force_assignment(&cm, &MilpConstraints::hungarian_semantics(r, c)).unwrap();
                assert!((h.objective - b.objective).abs() < 1e-9, "{r}x{c} seed {seed}");
                assert_eq!(h.target_of, b.target_of);
            }
        }
    }

    #[test]
    fn row_permutation_permutes_solution() {
        for seed in 0..30 {
            let cm = random_matrix(seed, 6, 6);
            let perm = [3, 0, 5, 1, 4, 2];
            let permuted = CostMatrix::from_values(Matrix::from_fn(6, 6, |i, k| cm.values[(perm[i], k)]));
            let a = solve_hungarian(&cm).unwrap();
            let b = solve_hungarian(&permuted).unwrap();
            for i in 0..6 {
                assert_eq!(b.target_of[i], a.target_of[perm[i]]);
            }
        }
    }

    #[test]
    fn row_constant_shift_keeps_argmin() {
        for seed in 0..30 {
            let cm = random_matrix(seed, 5, 5);
            let shifted = CostMatrix::from_values(Matrix::from_fn(5, 5, |i, k| {
                cm.values[(i, k)] + if i == 2 { 17.25 } else { 0.0 }
            }));
            let a = brute_force_assignment(&cm, &MilpConstraints::coverage()).unwrap();
            let b = brute_force_assignment(&shifted, &MilpConstraints::coverage()).unwrap();
            assert_eq!(a.target_of, b.target_of);
            assert_eq!(solve_hungarian(&shifted).unwrap().target_of, a.target_of);
        }
    }

    #[test]
    fn single_precision_solve() {
        let cm = CostMatrix::from_rows(&[vec![4.0f32, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]]);
        let a = solve_hungarian(&cm).unwrap();
        assert_eq!(a.objective, 5.0);
    }
}
