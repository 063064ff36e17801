//! Forward auction with epsilon scaling.

use std::collections::VecDeque;

use super::{require_finite, Assignment, SolverError};
use crate::cost::CostMatrix;
use crate::num::Real;

/// Upper bound on bids across all phases of one solve.
const MAX_BIDS: usize = 20_000_000;

/// Square assignment by auction, within `n * eps_final` of the optimum.
///
/// Interceptors bid for targets in index order, best-value ties going to the
/// smallest target index, so results are deterministic. Prices carry over
/// between scaling phases. With integer costs and `eps_final < 1/n` the
/// result is optimal.
pub fn solve_auction<T: Real>(cm: &CostMatrix<T>, eps_final: T) -> Result<Assignment<T>, SolverError> {
    if !(eps_final.is_finite() && eps_final > T::zero()) {
        return Err(SolverError::BadEpsilon(eps_final.as_f64()));
    }
    require_finite(cm)?;
    let (rows, cols) = cm.shape();
    if rows != cols {
        return Err(SolverError::NotSquare { rows, cols });
    }
    let n = rows;
    let c = &cm.values;
    if n <= 1 {
        return Ok(Assignment::new(c, vec![0; n]));
    }
    let max_abs = c.max_abs();
    let mut eps = if max_abs > T::zero() {
        (max_abs / T::lit(2.0)).max(eps_final)
    } else {
        eps_final
    };
    let mut price = vec![T::zero(); n];
    let mut bids = 0usize;
    loop {
        let mut owner: Vec<Option<usize>> = vec![None; n];
        let mut object: Vec<Option<usize>> = vec![None; n];
        let mut queue: VecDeque<usize> = (0..n).collect();
        while let Some(i) = queue.pop_front() {
            let mut best = 0usize;
            let mut best_v = T::neg_infinity();
            let mut second_v = T::neg_infinity();
            for j in 0..n {
                let v = -c[(i, j)] - price[j];
                if v > best_v {
                    second_v = best_v;
                    best_v = v;
                    best = j;
                } else if v > second_v {
                    second_v = v;
                }
            }
            price[best] = price[best] + (best_v - second_v) + eps;
            if let Some(prev) = owner[best].replace(i) {
                object[prev] = None;
                queue.push_back(prev);
            }
            object[i] = Some(best);
            bids += 1;
            if bids > MAX_BIDS {
                return Err(SolverError::AuctionDiverged(MAX_BIDS));
            }
        }
        if eps <= eps_final {
            let target_of = object.into_iter().map(|o| o.expect("auction ends with a full matching")).collect();
            return Ok(Assignment::new(c, target_of));
        }
        eps = (eps / T::lit(4.0)).max(eps_final);
    }
}
