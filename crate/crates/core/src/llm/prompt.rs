//! Structured prompt for one decision epoch.
//!
//! Rows and columns are numbered `1..=N` in snapshot order. When live agents
//! are a strict subset of the scenario, `AGENT_IDS` and `TARGET_IDS` lines
//! give the scenario id behind each position.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::{SceneSnapshot, TAU_SENTINEL};
use crate::matrix::Matrix;
use crate::num::Real;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDocument {
    pub system_section: String,
    pub scene_section: String,
    pub decision_request: String,
}

impl PromptDocument {
    /// Full prompt text sent as a single user message.
    pub fn text(&self) -> String {
        format!(
            "{}\n\n{}\n\n{}\n",
            self.system_section, self.scene_section, self.decision_request
        )
    }
}

/// Decimal places used when rendering numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPrecision {
    pub matrix: usize,
    pub vector: usize,
}

impl Default for PromptPrecision {
    fn default() -> Self {
        Self { matrix: 1, vector: 1 }
    }
}

const SYSTEM_HEADER: &str = "\
You are an expert mission planner for a weapon target assignment problem.
Goal: Solve the optimal assignment problem and protect high-priority assets by assigning interceptors to incoming targets.

PROVIDED DATA STRUCTURE:
N_i = number of interceptors (agents), N_t = number of targets, N_a = number of defended assets.
Agents: agent_i, i=1,...,N_i; Targets: target_k, k=1,...,N_t; Assets: asset_m, m=1,...,N_a.
PREVIOUS_ASSIGNMENT: MATLAB row vector where entry i gives the Target ID assigned to Agent i.
DISTANCE_MATRIX (N_i x N_t): distance between Agent i and Target k.
CLOSING_MATRIX (N_i x N_t): relative closing speed between Agent i and Target k.
TIME_TO_ASSET (N_t): time until each target reaches its associated asset.
THREAT_LEVEL (N_t): threat level of each target.
ASSET_PRIORITY (N_a): priority of each defended asset.";

const REMAP_LEGEND: &str = "\
AGENT_IDS (N_i) and TARGET_IDS (N_t): scenario identifier behind each Agent i and Target k; \
vectors and matrices use the positions 1..N_i and 1..N_t.";

const CONSTRAINTS: &str = "\
CONSTRAINTS:
- Each interceptor must be assigned to exactly ONE target.
- Returned vector must follow the same format as PREVIOUS_ASSIGNMENT
  (index i = Agent ID, value = Target ID).
- Avoid frequent reassignments; keep PREVIOUS_ASSIGNMENT unless clearly advantageous.
- Prefer small distance, high closing speed, and low time-to-asset.
- Prioritize high-priority assets.";

const COVERAGE_RULE: &str = "- Every target must be assigned at least one interceptor.";

const RETURN_ONLY: &str = "- RETURN ONLY a MATLAB row vector in the same format as PREVIOUS_ASSIGNMENT.";

/// Renders `x` with `decimals` places; `+inf` becomes the `1e9` sentinel and
/// negative zero loses its sign.
pub fn render_number<T: Real>(x: T, decimals: usize) -> String {
    let v = x.as_f64();
    if v == f64::INFINITY {
        return "1e9".to_string();
    }
    if v == f64::NEG_INFINITY {
        return "-1e9".to_string();
    }
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// `[a,b,c]`
pub fn render_vector<T: Real>(xs: &[T], decimals: usize) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| render_number(x, decimals)).collect();
    format!("[{}]", parts.join(","))
}

/// `[[a,b];[c,d]]`
pub fn render_matrix<T: Real>(m: &Matrix<T>, decimals: usize) -> String {
    let rows: Vec<String> = (0..m.rows()).map(|i| render_vector(m.row(i), decimals)).collect();
    format!("[{}]", rows.join(";"))
}

/// Space-separated row vector of one-based ids, e.g. `[2 1 3]`.
pub fn render_assignment(ids: &[usize]) -> String {
    let parts: Vec<String> = ids.iter().map(usize::to_string).collect();
    format!("[{}]", parts.join(" "))
}

pub fn format_prompt<T: Real>(snapshot: &SceneSnapshot<T>, coverage: bool) -> PromptDocument {
    format_prompt_with(snapshot, coverage, PromptPrecision::default())
}

/// Builds the three prompt sections. Byte-deterministic in its inputs.
///
/// Interceptors without a previous target appear as `0` in
/// `PREVIOUS_ASSIGNMENT`.
pub fn format_prompt_with<T: Real>(snapshot: &SceneSnapshot<T>, coverage: bool, p: PromptPrecision) -> PromptDocument {
    let remapped = !snapshot.is_identity_remap();

    let mut system = SYSTEM_HEADER.to_string();
    if remapped {
        system.push('\n');
        system.push_str(REMAP_LEGEND);
    }
    system.push_str("\n\n");
    system.push_str(CONSTRAINTS);
    if coverage {
        system.push('\n');
        system.push_str(COVERAGE_RULE);
    }
    system.push('\n');
    system.push_str(RETURN_ONLY);

    let previous: Vec<usize> = snapshot
        .previous_assignment
        .iter()
        .map(|p| p.map_or(0, |k| k + 1))
        .collect();
    let tau: Vec<T> = snapshot
        .time_to_asset
        .iter()
        .map(|&t| if t.is_finite() { t } else { T::lit(TAU_SENTINEL) })
        .collect();

    let mut scene = String::from("CURRENT SCENARIO INFORMATION:\n");
    let _ = writeln!(
        scene,
        "N_i = {}, N_t = {}, N_a = {}",
        snapshot.n_interceptors(),
        snapshot.n_targets(),
        snapshot.n_assets()
    );
    if remapped {
        let _ = writeln!(scene, "AGENT_IDS: {}", render_assignment(&snapshot.interceptor_ids));
        let _ = writeln!(scene, "TARGET_IDS: {}", render_assignment(&snapshot.target_ids));
    }
    let _ = writeln!(scene, "PREVIOUS_ASSIGNMENT: {}", render_assignment(&previous));
    let _ = writeln!(scene, "DISTANCE_MATRIX: {}", render_matrix(&snapshot.distance, p.matrix));
    let _ = writeln!(scene, "CLOSING_MATRIX: {}", render_matrix(&snapshot.closing, p.matrix));
    let _ = writeln!(scene, "TIME_TO_ASSET: {}", render_vector(&tau, p.vector));
    let _ = writeln!(scene, "THREAT_LEVEL: {}", render_vector(&snapshot.threat_level, p.vector));
    let _ = write!(scene, "ASSET_PRIORITY: {}", render_vector(&snapshot.asset_priority, p.vector));

    let example = if previous.iter().all(|&k| k > 0) {
        previous
    } else {
        (0..snapshot.n_interceptors())
            .map(|i| i % snapshot.n_targets().max(1) + 1)
            .collect()
    };
    let decision = format!(
        "DECISION REQUEST:\nPlease return your decision for the assignment as a MATLAB row vector in the same \
         format as PREVIOUS_ASSIGNMENT, where index i corresponds to the Agent ID and the value corresponds to \
         the assigned Target ID. Example: {}.",
        render_assignment(&example)
    );

    PromptDocument {
        system_section: system,
        scene_section: scene,
        decision_request: decision,
    }
}
