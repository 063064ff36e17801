//! Proportional navigation for one interceptor-target pair.
//!
//! Relative quantities are interceptor minus target. The line-of-sight rate is
//! `r x v / |r|^2` and the commanded acceleration has magnitude
//! `N |v| |los_rate|`, perpendicular to the line of sight, oriented so that it
//! nulls the LOS rotation (i.e. the interceptor turns toward the target's drift).

use thiserror::Error;

use crate::dynamics::{saturate_accel, AgentState, DynamicsError};
use crate::num::Real;
use crate::vector::Vec3;

/// Ranges at or below this (km) are treated as coincident.
pub const RANGE_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GuidanceError {
    #[error("interceptor and target positions coincide (range {0} km)")]
    Coincident(f64),
    #[error("navigation constant must be positive, got {0}")]
    BadNavConstant(f64),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativeKinematics<T> {
    /// Relative position, interceptor minus target.
    pub r: Vec3<T>,
    /// Relative velocity, interceptor minus target.
    pub v: Vec3<T>,
    pub r_hat: Vec3<T>,
    pub range: T,
    pub los_rate: Vec3<T>,
    /// Negative range rate; positive while the pair is closing.
    pub closing_speed: T,
}

pub fn relative_kinematics<T: Real>(
    interceptor: &AgentState<T>,
    target: &AgentState<T>,
) -> Result<RelativeKinematics<T>, GuidanceError> {
    let r = interceptor.position - target.position;
    let v = interceptor.velocity - target.velocity;
    let range = r.norm();
    if !(range > T::lit(RANGE_EPSILON)) {
        return Err(GuidanceError::Coincident(range.as_f64()));
    }
    let range_sq = range * range;
    Ok(RelativeKinematics {
        r,
        v,
        r_hat: r / range,
        range,
        los_rate: r.cross(v) / range_sq,
        closing_speed: -r.dot(v) / range,
    })
}

/// Unsaturated PNG command `N |v| (r_hat x los_rate)`.
///
/// With `r` pointing from target to interceptor, `r_hat x los_rate` equals
/// `los_rate x los` for the interceptor-to-target line of sight `los = -r_hat`.
pub fn png_command_raw<T: Real>(
    rk: &RelativeKinematics<T>,
    nav_constant: T,
) -> Result<Vec3<T>, GuidanceError> {
    if !(nav_constant > T::zero()) {
        return Err(GuidanceError::BadNavConstant(nav_constant.as_f64()));
    }
    Ok(rk.r_hat.cross(rk.los_rate) * (nav_constant * rk.v.norm()))
}

/// PNG command saturated to `a_max`.
pub fn png_command<T: Real>(
    rk: &RelativeKinematics<T>,
    nav_constant: T,
    a_max: T,
) -> Result<Vec3<T>, GuidanceError> {
    Ok(saturate_accel(png_command_raw(rk, nav_constant)?, a_max)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step_state;

    fn st(p: [f64; 3], v: [f64; 3]) -> AgentState<f64> {
        AgentState::new(p.into(), v.into())
    }

    #[test]
    fn head_on_has_zero_los_rate() {
        let rk = relative_kinematics(&st([0.0; 3], [1.0, 0.0, 0.0]), &st([10.0, 0.0, 0.0], [0.0; 3]))
            .unwrap();
        assert_eq!(rk.r, Vec3::new(-10.0, 0.0, 0.0));
        assert_eq!(rk.v, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(rk.los_rate, Vec3::zero());
        assert_eq!(rk.closing_speed, 1.0);
        assert_eq!(png_command(&rk, 3.0, 1.0).unwrap(), Vec3::zero());
    }

    #[test]
    fn crossing_target_los_rate() {
        let rk = relative_kinematics(&st([0.0; 3], [0.0; 3]), &st([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(rk.los_rate, Vec3::new(0.0, 0.0, 1.0));
        // target drifts toward +y, so the interceptor is commanded toward +y
        let u = png_command(&rk, 3.0, f64::INFINITY).unwrap();
        assert_eq!(u, Vec3::new(0.0, 3.0, 0.0));
    }

    #[test]
    fn coincident_positions_error() {
        let a = st([1.0, 2.0, 3.0], [0.0; 3]);
        assert!(matches!(relative_kinematics(&a, &a), Err(GuidanceError::Coincident(_))));
    }

    #[test]
    fn rejects_non_positive_nav_constant() {
        let rk = relative_kinematics(&st([0.0; 3], [0.0; 3]), &st([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]))
            .unwrap();
        assert!(png_command(&rk, 0.0, 1.0).is_err());
    }

    #[test]
    fn saturation_preserves_orthogonality() {
        let rk = relative_kinematics(
            &st([0.0; 3], [1.0, 0.3, 0.1]),
            &st([5.0, 1.0, -2.0], [-0.5, 0.7, 0.2]),
        )
        .unwrap();
        let u = png_command(&rk, 4.0, 0.01).unwrap();
        assert!((u.norm() - 0.01).abs() < 1e-15);
        assert!(u.dot(rk.r_hat).abs() < 1e-9 * u.norm());
    }

    /// Runs a 1v1 engagement and returns the minimum range reached.
    fn engage(sign: f64) -> f64 {
        let mut m = st([0.0, 0.0, 0.0], [1.5, 0.0, 0.0]);
        let mut t = st([60.0, -20.0, 0.0], [-0.4, 0.6, 0.0]);
        let dt = 0.01;
        let mut min_range = f64::INFINITY;
        for _ in 0..20_000 {
            let rk = relative_kinematics(&m, &t).unwrap();
            min_range = min_range.min(rk.range);
            if rk.range < 0.1 {
                break;
            }
            let u = saturate_accel(png_command_raw(&rk, 3.0).unwrap() * sign, 0.2).unwrap();
            m = step_state(&m, u, dt).unwrap();
            t = step_state(&t, Vec3::zero(), dt).unwrap();
        }
        min_range
    }

    #[test]
    fn closed_loop_pursuit_reaches_kill_radius() {
        assert!(engage(1.0) < 0.1);
    }

    #[test]
    fn reversed_command_misses() {
        // the opposite orientation of the cross product steers away from the target
        assert!(engage(-1.0) > 1.0);
    }
}
