//! Bounded double-integrator kinematics for interceptors and targets.
//!
//! Each agent carries position and velocity; the commanded acceleration is
//! held constant over a step (zero-order hold) and the state is advanced by
//! classical fourth-order Runge-Kutta. For the double integrator RK4 is exact
//! up to rounding, and the step interface is written against a generic
//! derivative so a drift term can slot in later.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Real;
use crate::vector::Vec3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("non-finite acceleration command")]
    NonFiniteInput,
    #[error("non-finite agent state")]
    NonFiniteState,
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("acceleration bound must be positive, got {0}")]
    BadBound(f64),
}

/// Position (km) and velocity (km/s) of one agent in the global frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AgentState<T> {
    pub position: Vec3<T>,
    pub velocity: Vec3<T>,
}

impl<T: Real> AgentState<T> {
    pub fn new(position: Vec3<T>, velocity: Vec3<T>) -> Self {
        Self { position, velocity }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite() && self.velocity.is_finite()
    }

    /// True when the position norm exceeds the state bound `x_max`.
    pub fn exceeds_bound(&self, x_max: T) -> bool {
        self.position.norm() > x_max
    }
}

/// Clamps the acceleration magnitude to `a_max`, preserving direction.
pub fn saturate_accel<T: Real>(u: Vec3<T>, a_max: T) -> Result<Vec3<T>, DynamicsError> {
    if !u.is_finite() {
        return Err(DynamicsError::NonFiniteInput);
    }
    if !(a_max > T::zero()) {
        return Err(DynamicsError::BadBound(a_max.as_f64()));
    }
    let mag = u.norm();
    if mag <= a_max {
        Ok(u)
    } else {
        Ok(u * (a_max / mag))
    }
}

/// Time derivative of an agent state under acceleration `u`.
fn derivative<T: Real>(s: &AgentState<T>, u: Vec3<T>) -> AgentState<T> {
    AgentState::new(s.velocity, u)
}

fn offset<T: Real>(s: &AgentState<T>, d: &AgentState<T>, h: T) -> AgentState<T> {
    AgentState::new(s.position + d.position * h, s.velocity + d.velocity * h)
}

/// Advances `s` by `dt` seconds with `u` held constant, using RK4.
pub fn step_state<T: Real>(
    s: &AgentState<T>,
    u: Vec3<T>,
    dt: T,
) -> Result<AgentState<T>, DynamicsError> {
    if !s.is_finite() {
        return Err(DynamicsError::NonFiniteState);
    }
    if !u.is_finite() {
        return Err(DynamicsError::NonFiniteInput);
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(DynamicsError::BadStep(dt.as_f64()));
    }
    let half = dt / T::lit(2.0);
    let k1 = derivative(s, u);
    let k2 = derivative(&offset(s, &k1, half), u);
    let k3 = derivative(&offset(s, &k2, half), u);
    let k4 = derivative(&offset(s, &k3, dt), u);
    let two = T::lit(2.0);
    let w = dt / T::lit(6.0);
    let dp = (k1.position + k2.position * two + k3.position * two + k4.position) * w;
    let dv = (k1.velocity + k2.velocity * two + k3.velocity * two + k4.velocity) * w;
    let next = AgentState::new(s.position + dp, s.velocity + dv);
    if !next.is_finite() {
        return Err(DynamicsError::NonFiniteState);
    }
    Ok(next)
}
