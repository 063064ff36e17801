//! Per-epoch engagement geometry: distance and closing-speed matrices,
//! target-to-asset association, time-to-asset and asset relevance, and the
//! aggregate scene snapshot handed to every assigner.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::AgentState;
use crate::guidance::RANGE_EPSILON;
use crate::matrix::Matrix;
use crate::num::Real;
use crate::scenario::{AssetSpec, Scenario, TargetSpec};

/// Floor on closing speed (km/s) used by the time-to-asset estimate.
pub const V_FLOOR: f64 = 1e-6;

/// Stand-in for an infinite time-to-asset when rendered as text.
pub const TAU_SENTINEL: f64 = 1e9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("interceptor row {row} and target column {col} are coincident")]
    Coincident { row: usize, col: usize },
    #[error("snapshot needs at least one asset")]
    NoAssets,
    #[error("previous assignment has {got} entries for {expected} interceptors")]
    PreviousShape { expected: usize, got: usize },
}

/// A live agent tagged with its scenario id.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tracked<T> {
    pub id: usize,
    pub state: AgentState<T>,
}

/// Scene data at one decision epoch, restricted to live agents.
///
/// Row `i` refers to `interceptor_ids[i]`, column `k` to `target_ids[k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SceneSnapshot<T = f64> {
    pub epoch_index: usize,
    pub time: T,
    pub interceptor_ids: Vec<usize>,
    pub target_ids: Vec<usize>,
    pub distance: Matrix<T>,
    pub closing: Matrix<T>,
    /// Magnitude of the relative velocity per pair.
    pub relative_speed: Matrix<T>,
    /// Seconds; `+inf` for targets not closing on their asset.
    pub time_to_asset: Vec<T>,
    pub threat_level: Vec<T>,
    pub asset_relevance: Vec<T>,
    pub associated_asset: Vec<usize>,
    pub asset_priority: Vec<T>,
    /// Previous target (local column) per row; `None` when the interceptor had
    /// no assignment or its target has left the scene.
    pub previous_assignment: Vec<Option<usize>>,
}

impl<T: Real> SceneSnapshot<T> {
    pub fn n_interceptors(&self) -> usize {
        self.interceptor_ids.len()
    }

    pub fn n_targets(&self) -> usize {
        self.target_ids.len()
    }

    pub fn n_assets(&self) -> usize {
        self.asset_priority.len()
    }

    /// True when the ids are exactly `1..=n` in order on both sides.
    pub fn is_identity_remap(&self) -> bool {
        let seq = |ids: &[usize]| ids.iter().enumerate().all(|(i, &id)| id == i + 1);
        seq(&self.interceptor_ids) && seq(&self.target_ids)
    }
}

pub fn distance_matrix<T: Real>(interceptors: &[AgentState<T>], targets: &[AgentState<T>]) -> Matrix<T> {
    Matrix::from_fn(interceptors.len(), targets.len(), |i, k| {
        interceptors[i].position.distance(targets[k].position)
    })
}

/// Closing speed per pair, positive while the range shrinks.
pub fn closing_matrix<T: Real>(
    interceptors: &[AgentState<T>],
    targets: &[AgentState<T>],
) -> Result<Matrix<T>, GeometryError> {
    let mut m = Matrix::zeros(interceptors.len(), targets.len());
    for (i, a) in interceptors.iter().enumerate() {
        for (k, b) in targets.iter().enumerate() {
            let r = a.position - b.position;
            let range = r.norm();
            if !(range > T::lit(RANGE_EPSILON)) {
                return Err(GeometryError::Coincident { row: i, col: k });
            }
            m[(i, k)] = -r.dot(a.velocity - b.velocity) / range;
        }
    }
    Ok(m)
}

pub fn relative_speed_matrix<T: Real>(interceptors: &[AgentState<T>], targets: &[AgentState<T>]) -> Matrix<T> {
    Matrix::from_fn(interceptors.len(), targets.len(), |i, k| {
        (interceptors[i].velocity - targets[k].velocity).norm()
    })
}

/// Picks the asset a target is heading for.
///
/// An explicit `intended_asset` wins. Otherwise the asset closest to the
/// target's forward velocity ray is chosen, ties going to the nearer asset and
/// then the smaller id. A target with no velocity gets the nearest asset.
pub fn associate_asset<T: Real>(target: &TargetSpec<T>, state: &AgentState<T>, assets: &[AssetSpec<T>]) -> usize {
    if let Some(id) = target.intended_asset {
        return id;
    }
    let speed = state.velocity.norm();
    let moving = speed > T::lit(V_FLOOR);
    let key = |a: &AssetSpec<T>| {
        let d = a.position - state.position;
        let dist = d.norm();
        let ray = if moving {
            let dir = state.velocity / speed;
            let along = d.dot(dir);
            if along <= T::zero() {
                dist
            } else {
                (d - dir * along).norm()
            }
        } else {
            dist
        };
        (ray, dist, a.id)
    };
    assets
        .iter()
        .map(key)
        .min_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
                .then(a.2.cmp(&b.2))
        })
        .map(|k| k.2)
        .expect("at least one asset")
}

/// Seconds until the target reaches the asset centre at its current closing
/// speed, or `+inf` when it is not closing.
pub fn time_to_asset<T: Real>(state: &AgentState<T>, asset: &AssetSpec<T>) -> T {
    let r = state.position - asset.position;
    let dist = r.norm();
    if dist == T::zero() {
        return T::zero();
    }
    let closing = -r.dot(state.velocity) / dist;
    if closing <= T::zero() {
        return T::infinity();
    }
    dist / closing.max(T::lit(V_FLOOR))
}

/// `priority * tau_ref / (tau + tau_ref)`: equals the priority at impact and
/// decays toward zero for distant or non-closing targets.
pub fn asset_relevance<T: Real>(tau: T, priority: T, tau_ref: T) -> T {
    if tau.is_infinite() {
        return T::zero();
    }
    priority * tau_ref / (tau + tau_ref)
}

/// Assembles the snapshot over live agents.
///
/// `previous` is aligned with `interceptors` and holds scenario target ids.
pub fn build_snapshot<T: Real>(
    scenario: &Scenario<T>,
    interceptors: &[Tracked<T>],
    targets: &[Tracked<T>],
    epoch_index: usize,
    time: T,
    previous: &[Option<usize>],
) -> Result<SceneSnapshot<T>, GeometryError> {
    if scenario.assets.is_empty() {
        return Err(GeometryError::NoAssets);
    }
    if previous.len() != interceptors.len() {
        return Err(GeometryError::PreviousShape {
            expected: interceptors.len(),
            got: previous.len(),
        });
    }
    let m_states: Vec<_> = interceptors.iter().map(|t| t.state).collect();
    let t_states: Vec<_> = targets.iter().map(|t| t.state).collect();
    let target_ids: Vec<usize> = targets.iter().map(|t| t.id).collect();

    let mut time_to = Vec::with_capacity(targets.len());
    let mut threat = Vec::with_capacity(targets.len());
    let mut relevance = Vec::with_capacity(targets.len());
    let mut associated = Vec::with_capacity(targets.len());
    for t in targets {
        let spec = &scenario.targets[t.id - 1];
        let asset_id = associate_asset(spec, &t.state, &scenario.assets);
        let asset = scenario.asset(asset_id).expect("associated asset exists");
        let tau = time_to_asset(&t.state, asset);
        time_to.push(tau);
        threat.push(spec.threat_level);
        relevance.push(asset_relevance(tau, asset.priority, scenario.physics.tau_ref));
        associated.push(asset_id);
    }

    let previous_assignment = previous
        .iter()
        .map(|p| p.and_then(|id| target_ids.iter().position(|&t| t == id)))
        .collect();

    Ok(SceneSnapshot {
        epoch_index,
        time,
        interceptor_ids: interceptors.iter().map(|t| t.id).collect(),
        target_ids,
        distance: distance_matrix(&m_states, &t_states),
        closing: closing_matrix(&m_states, &t_states)?,
        relative_speed: relative_speed_matrix(&m_states, &t_states),
        time_to_asset: time_to,
        threat_level: threat,
        asset_relevance: relevance,
        associated_asset: associated,
        asset_priority: scenario.assets.iter().map(|a| a.priority).collect(),
        previous_assignment,
    })
}

/// Live agents at scenario start.
pub fn initial_agents<T: Real>(scenario: &Scenario<T>) -> (Vec<Tracked<T>>, Vec<Tracked<T>>) {
    let m = scenario
        .interceptors
        .iter()
        .map(|s| Tracked { id: s.id, state: s.initial_state })
        .collect();
    let t = scenario
        .targets
        .iter()
        .map(|s| Tracked { id: s.id, state: s.initial_state })
        .collect();
    (m, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step_state;
    use crate::vector::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn st(p: [f64; 3], v: [f64; 3]) -> AgentState<f64> {
        AgentState::new(p.into(), v.into())
    }

    fn asset(id: usize, p: [f64; 3], priority: f64) -> AssetSpec<f64> {
        AssetSpec {
            id,
            priority,
            protection_radius: 1.0,
            position: p.into(),
        }
    }

    fn target(intended: Option<usize>) -> TargetSpec<f64> {
        TargetSpec {
            id: 1,
            threat_level: 0.5,
            intended_asset: intended,
            initial_state: AgentState::default(),
            maneuver_accel: Vec3::zero(),
        }
    }

    fn random_state(rng: &mut ChaCha8Rng) -> AgentState<f64> {
        let mut c = || rng.gen_range(-50.0..50.0);
        st([c(), c(), c()], [c() / 20.0, c() / 20.0, c() / 20.0])
    }

    #[test]
    fn distance_examples() {
        let d = distance_matrix(&[st([0.0; 3], [0.0; 3])], &[st([3.0, 4.0, 0.0], [0.0; 3])]);
        assert_eq!(d.to_rows(), vec![vec![5.0]]);
        let d = distance_matrix(&[st([1.0; 3], [0.0; 3])], &[st([1.0; 3], [2.0; 3])]);
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn distance_matches_per_entry_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<_> = (0..2).map(|_| random_state(&mut rng)).collect();
        let b: Vec<_> = (0..2).map(|_| random_state(&mut rng)).collect();
        let d = distance_matrix(&a, &b);
        for i in 0..2 {
            for k in 0..2 {
                let dx = a[i].position.x - b[k].position.x;
                let dy = a[i].position.y - b[k].position.y;
                let dz = a[i].position.z - b[k].position.z;
                let want = (dx * dx + dy * dy + dz * dz).sqrt();
                assert!((d[(i, k)] - want).abs() < 1e-12 * want);
            }
        }
    }

    #[test]
    fn closing_examples() {
        let c = closing_matrix(&[st([0.0; 3], [1.0, 0.0, 0.0])], &[st([10.0, 0.0, 0.0], [-1.0, 0.0, 0.0])]).unwrap();
        assert_eq!(c[(0, 0)], 2.0);
        let c = closing_matrix(&[st([0.0; 3], [1.0, 1.0, 0.0])], &[st([10.0, 0.0, 0.0], [1.0, 1.0, 0.0])]).unwrap();
        assert_eq!(c[(0, 0)], 0.0);
        let c = closing_matrix(&[st([0.0; 3], [-1.0, 0.0, 0.0])], &[st([10.0, 0.0, 0.0], [0.0; 3])]).unwrap();
        assert!(c[(0, 0)] < 0.0);
        assert_eq!(
            closing_matrix(&[st([0.0; 3], [0.0; 3])], &[st([0.0; 3], [1.0, 0.0, 0.0])]),
            Err(GeometryError::Coincident { row: 0, col: 0 })
        );
    }

    #[test]
    fn closing_matches_finite_difference_of_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-4;
        for _ in 0..200 {
            let a: Vec<_> = (0..3).map(|_| random_state(&mut rng)).collect();
            let b: Vec<_> = (0..2).map(|_| random_state(&mut rng)).collect();
            let fly = |s: &[AgentState<f64>], dt: f64| -> Vec<AgentState<f64>> {
                s.iter()
                    .map(|x| AgentState::new(x.position + x.velocity * dt, x.velocity))
                    .collect()
            };
            let plus = distance_matrix(&fly(&a, h), &fly(&b, h));
            let minus = distance_matrix(&fly(&a, -h), &fly(&b, -h));
            let c = closing_matrix(&a, &b).unwrap();
            for i in 0..3 {
                for k in 0..2 {
                    let fd = -(plus[(i, k)] - minus[(i, k)]) / (2.0 * h);
                    let scale = c[(i, k)].abs().max(1e-2);
                    assert!((fd - c[(i, k)]).abs() / scale < 1e-5, "fd {fd} vs {}", c[(i, k)]);
                }
            }
        }
    }

    #[test]
    fn translation_and_velocity_offset_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<_> = (0..3).map(|_| random_state(&mut rng)).collect();
        let b: Vec<_> = (0..3).map(|_| random_state(&mut rng)).collect();
        let shift = Vec3::new(123.0, -45.0, 6.0);
        let dv = Vec3::new(0.3, -0.7, 0.1);
        let moved = |s: &[AgentState<f64>]| -> Vec<AgentState<f64>> {
            s.iter().map(|x| AgentState::new(x.position + shift, x.velocity + dv)).collect()
        };
        let d0 = distance_matrix(&a, &b);
        let d1 = distance_matrix(&moved(&a), &moved(&b));
        let c0 = closing_matrix(&a, &b).unwrap();
        let c1 = closing_matrix(&moved(&a), &moved(&b)).unwrap();
        for (x, y) in d0.iter().zip(d1.iter()) {
            assert!((x - y).abs() < 1e-10 * x.max(1.0));
        }
        for (x, y) in c0.iter().zip(c1.iter()) {
            assert!((x - y).abs() < 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn association_rules() {
        let assets = vec![asset(1, [0.0; 3], 0.9), asset(2, [0.0, 10.0, 0.0], 0.6)];
        assert_eq!(associate_asset(&target(Some(2)), &st([10.0, 0.0, 0.0], [-1.0, 0.0, 0.0]), &assets), 2);
        assert_eq!(associate_asset(&target(None), &st([10.0, 0.0, 0.0], [-1.0, 0.0, 0.0]), &assets), 1);
        let assets = vec![asset(1, [7.0, 0.0, 0.0], 0.9), asset(2, [0.0, 5.0, 0.0], 0.6)];
        assert_eq!(associate_asset(&target(None), &st([0.0; 3], [0.0; 3]), &assets), 2);
    }

    #[test]
    fn association_tie_breaks() {
        // both assets lie on the ray; the nearer wins
        let assets = vec![asset(1, [-20.0, 0.0, 0.0], 0.9), asset(2, [-5.0, 0.0, 0.0], 0.6)];
        assert_eq!(associate_asset(&target(None), &st([10.0, 0.0, 0.0], [-1.0, 0.0, 0.0]), &assets), 2);
        // full tie goes to the smaller id
        let assets = vec![asset(2, [0.0, 3.0, 0.0], 0.9), asset(1, [0.0, -3.0, 0.0], 0.6)];
        assert_eq!(associate_asset(&target(None), &st([10.0, 0.0, 0.0], [-1.0, 0.0, 0.0]), &assets), 1);
        // an asset behind the target is measured from the ray origin
        let assets = vec![asset(1, [12.0, 0.0, 0.0], 0.9), asset(2, [0.0, 4.0, 0.0], 0.6)];
        assert_eq!(associate_asset(&target(None), &st([10.0, 0.0, 0.0], [-1.0, 0.0, 0.0]), &assets), 1);
    }

    #[test]
    fn time_to_asset_examples() {
        let a = asset(1, [0.0; 3], 0.9);
        assert_eq!(time_to_asset(&st([10.0, 0.0, 0.0], [-2.0, 0.0, 0.0]), &a), 5.0);
        assert!(time_to_asset(&st([10.0, 0.0, 0.0], [2.0, 0.0, 0.0]), &a).is_infinite());
        assert!(time_to_asset(&st([10.0, 0.0, 0.0], [0.0, 2.0, 0.0]), &a).is_infinite());
        let tau = time_to_asset(&st([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]), &a);
        assert!(tau > 0.0 && tau < 2.0);
    }

    #[test]
    fn relevance_examples() {
        assert_eq!(asset_relevance(f64::INFINITY, 0.9, 60.0), 0.0);
        assert!((asset_relevance(60.0f64, 0.9, 60.0) - 0.45).abs() < 1e-15);
        assert_eq!(asset_relevance(0.0, 0.7, 60.0), 0.7);
        assert!(asset_relevance(1e12, 0.7, 60.0) < 1e-9);
    }

    #[test]
    fn snapshot_of_baseline_has_expected_shapes() {
        let s = Scenario::<f64>::baseline();
        let (m, t) = initial_agents(&s);
        let snap = build_snapshot(&s, &m, &t, 0, 0.0, &vec![None; 10]).unwrap();
        assert_eq!(snap.distance.shape(), (10, 10));
        assert_eq!(snap.closing.shape(), (10, 10));
        assert_eq!(snap.time_to_asset.len(), 10);
        assert_eq!(snap.threat_level.len(), 10);
        assert_eq!(snap.asset_relevance.len(), 10);
        assert_eq!(snap.asset_priority, vec![0.9, 0.6, 0.4]);
        assert!(snap.distance.iter().all(|&d| d > 0.0));
        assert!(snap.time_to_asset.iter().all(|&t| t > 0.0));
        assert!(snap.is_identity_remap());
        for (k, &a) in snap.associated_asset.iter().enumerate() {
            let p = s.asset(a).unwrap().priority;
            assert!(snap.asset_relevance[k] > 0.0 && snap.asset_relevance[k] <= p);
        }
    }

    #[test]
    fn snapshot_is_deterministic() {
        let s = Scenario::<f64>::baseline();
        let (m, t) = initial_agents(&s);
        let prev: Vec<_> = (1..=10).map(Some).collect();
        let a = build_snapshot(&s, &m, &t, 3, 6.0, &prev).unwrap();
        let b = build_snapshot(&s, &m, &t, 3, 6.0, &prev).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn snapshot_after_removals_remaps_ids() {
        let s = Scenario::<f64>::baseline();
        let (m, t) = initial_agents(&s);
        let keep_t: Vec<_> = t.into_iter().filter(|x| ![2, 5, 9].contains(&x.id)).collect();
        let keep_m: Vec<_> = m.into_iter().filter(|x| ![1, 4, 7].contains(&x.id)).collect();
        let prev = vec![Some(3), Some(5), Some(4), Some(10), Some(1), Some(2), Some(7)];
        let snap = build_snapshot(&s, &keep_m, &keep_t, 40, 80.0, &prev).unwrap();
        assert_eq!(snap.distance.shape(), (7, 7));
        assert_eq!(snap.target_ids, vec![1, 3, 4, 6, 7, 8, 10]);
        assert_eq!(snap.interceptor_ids, vec![2, 3, 5, 6, 8, 9, 10]);
        assert_eq!(
            snap.previous_assignment,
            vec![Some(1), None, Some(2), Some(6), Some(0), None, Some(4)]
        );
        assert!(!snap.is_identity_remap());
    }

    #[test]
    fn closing_stays_consistent_after_propagation() {
        // target flying straight at its asset keeps a finite, shrinking tau
        let a = asset(1, [0.0; 3], 0.9);
        let mut s = st([100.0, 0.0, 0.0], [-2.0, 0.0, 0.0]);
        let t0 = time_to_asset(&s, &a);
        s = step_state(&s, Vec3::zero(), 10.0).unwrap();
        assert!((t0 - time_to_asset(&s, &a) - 10.0).abs() < 1e-9);
    }
}
