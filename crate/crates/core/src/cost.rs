//! Pairwise surrogate cost `w_d |r| + w_v |v| + w_theta theta + w_psi psi`
//! and the switch-penalty augmentation used for dynamic reassignment.

use serde::{Deserialize, Serialize};

use crate::geometry::SceneSnapshot;
use crate::matrix::Matrix;
use crate::num::Real;
use crate::scenario::CostWeights;

/// How threat and relevance enter the cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThreatSense {
    /// `+w theta`: high threat raises the pair cost.
    Literal,
    /// `+w (1 - theta)`: high threat lowers the pair cost and attracts interceptors.
    #[default]
    Inverted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostOptions {
    /// Min-max rescale every metric before weighting.
    pub normalize: bool,
    pub threat_sense: ThreatSense,
}

impl Default for CostOptions {
    fn default() -> Self {
        Self {
            normalize: true,
            threat_sense: ThreatSense::Inverted,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct CostMatrix<T = f64> {
    pub values: Matrix<T>,
    pub weights_used: CostWeights<T>,
    pub normalized: bool,
}

impl<T: Real> CostMatrix<T> {
    /// Wraps a raw matrix, e.g. for solver tests.
    pub fn from_values(values: Matrix<T>) -> Self {
        Self {
            values,
            weights_used: CostWeights::default(),
            normalized: false,
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        Self::from_values(Matrix::from_rows(rows))
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }
}

/// Rescales to `[0, 1]` (min to 0, max to 1) over the finite entries.
/// Constant inputs map to 0; `+inf` maps to 1 and `-inf`/NaN to 0.
pub fn min_max_normalize<T: Real>(xs: &[T]) -> Vec<T> {
    let (lo, hi) = xs
        .iter()
        .filter(|x| x.is_finite())
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let span = hi - lo;
    xs.iter()
        .map(|&x| {
            if x == T::infinity() {
                T::one()
            } else if !x.is_finite() || !(span > T::zero()) {
                T::zero()
            } else {
                (x - lo) / span
            }
        })
        .collect()
}

fn normalize_matrix<T: Real>(m: &Matrix<T>) -> Matrix<T> {
    let flat = min_max_normalize(m.as_slice());
    Matrix::from_fn(m.rows(), m.cols(), |i, j| flat[i * m.cols() + j])
}

/// Rescales every metric of the snapshot independently to `[0, 1]`.
pub fn normalize_metrics<T: Real>(s: &SceneSnapshot<T>) -> SceneSnapshot<T> {
    SceneSnapshot {
        distance: normalize_matrix(&s.distance),
        closing: normalize_matrix(&s.closing),
        relative_speed: normalize_matrix(&s.relative_speed),
        time_to_asset: min_max_normalize(&s.time_to_asset),
        threat_level: min_max_normalize(&s.threat_level),
        asset_relevance: min_max_normalize(&s.asset_relevance),
        ..s.clone()
    }
}

pub fn surrogate_cost_matrix<T: Real>(
    snapshot: &SceneSnapshot<T>,
    w: &CostWeights<T>,
    opts: CostOptions,
) -> CostMatrix<T> {
    let normalized;
    let s = if opts.normalize {
        normalized = normalize_metrics(snapshot);
        &normalized
    } else {
        snapshot
    };
    let sense = |x: T| match opts.threat_sense {
        ThreatSense::Literal => x,
        ThreatSense::Inverted => T::one() - x,
    };
    let values = Matrix::from_fn(s.n_interceptors(), s.n_targets(), |i, k| {
        w.w_d * s.distance[(i, k)]
            + w.w_v * s.relative_speed[(i, k)]
            + w.w_theta * sense(s.threat_level[k])
            + w.w_psi * sense(s.asset_relevance[k])
    });
    CostMatrix {
        values,
        weights_used: *w,
        normalized: opts.normalize,
    }
}

/// Adds `penalty` to every pair that departs from the previous assignment.
/// Rows without a previous target, or an empty `previous`, are left alone.
pub fn apply_switch_penalty<T: Real>(cm: &CostMatrix<T>, previous: &[Option<usize>], penalty: T) -> CostMatrix<T> {
    let mut out = cm.clone();
    if penalty == T::zero() || previous.is_empty() {
        return out;
    }
    for (i, prev) in previous.iter().enumerate().take(cm.values.rows()) {
        if let Some(p) = *prev {
            for k in 0..cm.values.cols() {
                if k != p {
                    out.values[(i, k)] = out.values[(i, k)] + penalty;
                }
            }
        }
    }
    out
}
