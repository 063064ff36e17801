//! Mission descriptions: agents, targets, assets, physical bounds, cost weights
//! and timing, loaded from TOML and validated field by field.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::AgentState;
use crate::num::Real;
use crate::vector::Vec3;

/// TOML text of the bundled ten-on-ten baseline engagement.
pub const BASELINE_TOML: &str = include_str!("../scenarios/baseline.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AssetSpec<T> {
    pub id: usize,
    pub priority: T,
    pub protection_radius: T,
    pub position: Vec3<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct TargetSpec<T> {
    pub id: usize,
    pub threat_level: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intended_asset: Option<usize>,
    #[serde(flatten)]
    pub initial_state: AgentState<T>,
    /// Constant maneuver acceleration (km/s^2).
    #[serde(default)]
    pub maneuver_accel: Vec3<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct InterceptorSpec<T> {
    pub id: usize,
    pub nav_constant: T,
    #[serde(flatten)]
    pub initial_state: AgentState<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Physics<T> {
    /// Acceleration bound, km/s^2.
    pub a_max: T,
    /// Position-norm bound, km.
    pub x_max: T,
    pub sim_dt: T,
    /// Spacing of decision epochs, s.
    pub epoch_dt: T,
    pub t_final: T,
    pub kill_radius: T,
    /// Reference time (s) of the asset-relevance falloff.
    #[serde(default = "default_tau_ref")]
    pub tau_ref: T,
}

fn default_tau_ref<T: Real>() -> T {
    T::lit(60.0)
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct CostWeights<T> {
    pub w_d: T,
    pub w_v: T,
    pub w_theta: T,
    pub w_psi: T,
}

impl<T: Real> Default for CostWeights<T> {
    fn default() -> Self {
        Self::uniform(T::one())
    }
}

impl<T: Real> CostWeights<T> {
    pub fn uniform(w: T) -> Self {
        Self {
            w_d: w,
            w_v: w,
            w_theta: w,
            w_psi: w,
        }
    }

    pub fn scaled(self, s: T) -> Self {
        Self {
            w_d: self.w_d * s,
            w_v: self.w_v * s,
            w_theta: self.w_theta * s,
            w_psi: self.w_psi * s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Scenario<T = f64> {
    #[serde(default)]
    pub name: String,
    /// Request the every-target-covered constraint.
    #[serde(default = "default_true")]
    pub coverage: bool,
    pub physics: Physics<T>,
    #[serde(default)]
    pub cost_weights: CostWeights<T>,
    pub interceptors: Vec<InterceptorSpec<T>>,
    pub targets: Vec<TargetSpec<T>>,
    pub assets: Vec<AssetSpec<T>>,
}

/// One violated scenario invariant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub rule: String,
}

impl Violation {
    fn new(location: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.rule)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid scenario: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

pub fn load_scenario<T: Real>(path: impl AsRef<Path>) -> Result<Scenario<T>, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    Scenario::from_toml_str(&text)
}

impl<T: Real> Scenario<T> {
    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let s: Self = toml::from_str(text)?;
        let violations = validate_scenario(&s);
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(ScenarioError::Invalid(violations))
        }
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string(self)?)
    }

    pub fn baseline() -> Self {
        Self::from_toml_str(BASELINE_TOML).expect("bundled baseline scenario is valid")
    }

    pub fn asset(&self, id: usize) -> Option<&AssetSpec<T>> {
        self.assets.iter().find(|a| a.id == id)
    }

    pub fn min_protection_radius(&self) -> T {
        self.assets
            .iter()
            .map(|a| a.protection_radius)
            .fold(T::infinity(), T::min)
    }
}

fn in_unit_interval<T: Real>(x: T) -> bool {
    x > T::zero() && x <= T::one()
}

fn positive<T: Real>(x: T) -> bool {
    x > T::zero() && x.is_finite()
}

fn check_ids(kind: &str, ids: impl Iterator<Item = usize>, out: &mut Vec<Violation>) {
    let ids: Vec<usize> = ids.collect();
    let unique: HashSet<usize> = ids.iter().copied().collect();
    if unique.len() != ids.len() {
        out.push(Violation::new(kind, "ids unique"));
    } else if !(1..=ids.len()).all(|i| unique.contains(&i)) {
        out.push(Violation::new(kind, "ids contiguous from 1"));
    }
}

/// Returns every violated invariant; empty when the scenario is valid.
pub fn validate_scenario<T: Real>(s: &Scenario<T>) -> Vec<Violation> {
    let mut out = Vec::new();
    let p = &s.physics;

    for (name, v) in [
        ("a_max", p.a_max),
        ("x_max", p.x_max),
        ("sim_dt", p.sim_dt),
        ("epoch_dt", p.epoch_dt),
        ("t_final", p.t_final),
        ("kill_radius", p.kill_radius),
        ("tau_ref", p.tau_ref),
    ] {
        if !positive(v) {
            out.push(Violation::new(format!("physics.{name}"), format!("{name} > 0")));
        }
    }
    if p.epoch_dt < p.sim_dt {
        out.push(Violation::new("physics.epoch_dt", "epoch_dt ≥ sim_dt"));
    }

    let w = &s.cost_weights;
    for (name, v) in [
        ("w_d", w.w_d),
        ("w_v", w.w_v),
        ("w_theta", w.w_theta),
        ("w_psi", w.w_psi),
    ] {
        if !positive(v) {
            out.push(Violation::new(format!("cost_weights.{name}"), format!("{name} > 0")));
        }
    }

    if s.interceptors.is_empty() {
        out.push(Violation::new("interceptors", "N ≥ 1"));
    }
    if s.targets.is_empty() {
        out.push(Violation::new("targets", "N_T ≥ 1"));
    }
    if s.assets.is_empty() {
        out.push(Violation::new("assets", "N_a ≥ 1"));
    }
    check_ids("interceptors", s.interceptors.iter().map(|x| x.id), &mut out);
    check_ids("targets", s.targets.iter().map(|x| x.id), &mut out);
    check_ids("assets", s.assets.iter().map(|x| x.id), &mut out);

    if s.coverage && s.interceptors.len() < s.targets.len() {
        out.push(Violation::new("coverage", "N ≥ N_T required for coverage"));
    }

    let check_state = |loc: String, st: &AgentState<T>, out: &mut Vec<Violation>| {
        if !st.is_finite() {
            out.push(Violation::new(loc, "state finite"));
        } else if st.exceeds_bound(p.x_max) {
            out.push(Violation::new(loc, "‖position‖ ≤ x_max"));
        }
    };

    for (i, a) in s.assets.iter().enumerate() {
        let loc = format!("assets[{i}]");
        if !in_unit_interval(a.priority) {
            out.push(Violation::new(format!("{loc}.priority"), "priority ∈ (0,1]"));
        }
        if !positive(a.protection_radius) {
            out.push(Violation::new(format!("{loc}.protection_radius"), "protection_radius > 0"));
        }
        if !a.position.is_finite() {
            out.push(Violation::new(format!("{loc}.position"), "position finite"));
        }
    }
    for (i, t) in s.targets.iter().enumerate() {
        let loc = format!("targets[{i}]");
        if !in_unit_interval(t.threat_level) {
            out.push(Violation::new(format!("{loc}.threat_level"), "threat_level ∈ (0,1]"));
        }
        if !t.maneuver_accel.is_finite() || t.maneuver_accel.norm() > p.a_max {
            out.push(Violation::new(format!("{loc}.maneuver_accel"), "‖maneuver_accel‖ ≤ a_max"));
        }
        if let Some(a) = t.intended_asset {
            if s.asset(a).is_none() {
                out.push(Violation::new(format!("{loc}.intended_asset"), "intended_asset names an existing asset"));
            }
        }
        check_state(loc, &t.initial_state, &mut out);
    }
    for (i, m) in s.interceptors.iter().enumerate() {
        let loc = format!("interceptors[{i}]");
        if !positive(m.nav_constant) {
            out.push(Violation::new(format!("{loc}.nav_constant"), "nav_constant > 0"));
        }
        check_state(loc, &m.initial_state, &mut out);
    }

    if !s.assets.is_empty() && !(p.kill_radius < s.min_protection_radius()) {
        out.push(Violation::new("physics.kill_radius", "kill_radius < min protection_radius"));
    }
    out
}
