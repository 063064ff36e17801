//! Closed-loop weapon-target assignment.
//!
//! Interceptors and targets move as double integrators; assigned pairs fly
//! proportional navigation. At every decision epoch a scene snapshot is
//! reduced to a surrogate cost matrix and an assigner (Hungarian, MILP branch
//! and bound, auction, or a chat-completion model with classical fallback)
//! picks the interceptor-to-target map.
//!
//! Numeric types are generic over [`Real`] (`f32` or `f64`), defaulting to
//! `f64`; the aliases below fix the precision.

pub mod cli;
pub mod cost;
pub mod dynamics;
pub mod geometry;
pub mod guidance;
pub mod llm;
pub mod matrix;
pub mod mission;
pub mod num;
pub mod output;
pub mod scenario;
pub mod solvers;
pub mod vector;

pub use cost::{apply_switch_penalty, surrogate_cost_matrix, CostMatrix, CostOptions, ThreatSense};
pub use dynamics::{saturate_accel, step_state, AgentState};
pub use geometry::{build_snapshot, SceneSnapshot};
pub use guidance::{png_command, relative_kinematics};
pub use llm::{assign_with_fallback, format_prompt, parse_response, AssignerOutcome, BackendConfig, MockMode};
pub use matrix::Matrix;
pub use mission::{run_mission, AssignerKind, MissionConfig, MissionLog, MissionMetrics};
pub use num::Real;
pub use scenario::{load_scenario, Scenario};
pub use solvers::{brute_force_assignment, solve_auction, solve_hungarian, solve_milp, Assignment, MilpConstraints};
pub use vector::Vec3;

pub type Vec3F32 = Vec3<f32>;
pub type Vec3F64 = Vec3<f64>;
pub type AgentStateF32 = AgentState<f32>;
pub type AgentStateF64 = AgentState<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type ScenarioF32 = Scenario<f32>;
pub type ScenarioF64 = Scenario<f64>;
pub type SceneSnapshotF32 = SceneSnapshot<f32>;
pub type SceneSnapshotF64 = SceneSnapshot<f64>;
pub type CostMatrixF32 = CostMatrix<f32>;
pub type CostMatrixF64 = CostMatrix<f64>;
pub type AssignmentF32 = Assignment<f32>;
pub type AssignmentF64 = Assignment<f64>;
pub type MissionLogF32 = MissionLog<f32>;
pub type MissionLogF64 = MissionLog<f64>;
