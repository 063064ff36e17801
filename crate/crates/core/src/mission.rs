//! Closed-loop engagement: baseline assignment at `t = 0`, reassignment at
//! every decision epoch, PNG guidance in between, and intercept / breach
//! bookkeeping.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{apply_switch_penalty, surrogate_cost_matrix, CostMatrix, CostOptions};
use crate::dynamics::{saturate_accel, step_state, AgentState, DynamicsError};
use crate::geometry::{build_snapshot, initial_agents, GeometryError, SceneSnapshot, Tracked};
use crate::guidance::{png_command, relative_kinematics, GuidanceError};
use crate::llm::{
    assign_with_fallback, Backend, BackendConfig, BackendError, LlmError, OutcomeSource, ReplayRecord,
};
use crate::num::Real;
use crate::scenario::{AssetSpec, Scenario};
use crate::solvers::{
    pad_rectangular, solve_auction, solve_hungarian, solve_milp, Assignment, MilpConstraints, PadMode,
    SolverError,
};
use crate::vector::Vec3;

#[derive(Debug, Error)]
pub enum MissionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Guidance(#[from] GuidanceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("invalid mission configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignerKind {
    Hungarian,
    Milp,
    Auction,
    Llm,
    /// Keeps a seeded random baseline, redrawing only interceptors whose
    /// target has left the scene.
    RandomInit,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    #[default]
    Hungarian,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct MissionConfig<T = f64> {
    pub assigner: AssignerKind,
    pub baseline: BaselineMode,
    pub seed: u64,
    /// Added to every pair that departs from the previous assignment.
    pub switch_penalty: T,
    /// Overrides the scenario's coverage flag.
    pub coverage: Option<bool>,
    /// Overrides the scenario's epoch spacing.
    pub epoch_dt: Option<T>,
    pub cost_options: CostOptions,
    pub auction_eps: T,
    /// Required for [`AssignerKind::Llm`].
    pub backend: Option<BackendConfig>,
}

impl<T: Real> MissionConfig<T> {
    pub fn new(assigner: AssignerKind) -> Self {
        Self {
            assigner,
            baseline: BaselineMode::Hungarian,
            seed: 0,
            switch_penalty: T::zero(),
            coverage: None,
            epoch_dt: None,
            cost_options: CostOptions::default(),
            auction_eps: T::lit(1e-6),
            backend: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Intercept,
    AssetBreach,
    Reassignment,
    FallbackUsed,
    XMaxViolation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionEvent {
    pub kind: EventKind,
    pub time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interceptor: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asset: Option<usize>,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Interceptor,
    Target,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentSource {
    Baseline,
    Solver,
    Llm,
    Fallback,
}

/// The assignment in force from `time` until the next epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct EpochRecord<T = f64> {
    pub h: usize,
    pub time: T,
    pub interceptor_ids: Vec<usize>,
    /// Live target ids at the epoch, in column order.
    pub target_ids: Vec<usize>,
    /// Scenario target id per entry of `interceptor_ids`.
    pub assigned: Vec<usize>,
    pub source: AssignmentSource,
    /// Surrogate objective of the chosen assignment, penalty included.
    pub objective: T,
    pub latency: f64,
}

/// Sampled states of one agent at uniform `sim_dt` spacing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Trajectory<T = f64> {
    pub side: Side,
    pub id: usize,
    /// Step index of the first sample.
    pub start_step: usize,
    pub states: Vec<AgentState<T>>,
    /// Target engaged during the step ending at each sample (interceptors only).
    pub assigned: Vec<Option<usize>>,
}

impl<T: Real> Trajectory<T> {
    /// Index of the last sample at or before `step`.
    pub fn sample_at(&self, step: usize) -> Option<usize> {
        if step < self.start_step || self.states.is_empty() {
            return None;
        }
        Some((step - self.start_step).min(self.states.len() - 1))
    }

    pub fn last_step(&self) -> usize {
        self.start_step + self.states.len().saturating_sub(1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MissionMetrics {
    pub targets_intercepted: usize,
    pub assets_breached: usize,
    pub targets_surviving: usize,
    /// Mean over intercept events, seconds; 0 when there were none.
    pub mean_intercept_time: f64,
    pub total_switches: usize,
    pub fallback_count: usize,
    /// Mean over assigner calls at `h >= 1`, seconds.
    pub mean_assigner_latency: f64,
    pub epochs: usize,
    pub end_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct MissionLog<T = f64> {
    pub scenario_name: String,
    pub assigner: AssignerKind,
    pub sim_dt: T,
    pub t_final: T,
    pub assets: Vec<AssetSpec<T>>,
    /// `(target id, asset id)` pairs at `t = 0`.
    pub intended_assets: Vec<(usize, usize)>,
    pub events: Vec<MissionEvent>,
    pub trajectories: Vec<Trajectory<T>>,
    pub assignment_history: Vec<EpochRecord<T>>,
    pub replay: Vec<ReplayRecord>,
    pub metrics: MissionMetrics,
}

impl<T: Real> MissionLog<T> {
    pub fn time_of(&self, step: usize) -> T {
        T::count(step) * self.sim_dt
    }

    pub fn final_step(&self) -> usize {
        self.trajectories.iter().map(Trajectory::last_step).max().unwrap_or(0)
    }

    pub fn trajectory(&self, side: Side, id: usize) -> Option<&Trajectory<T>> {
        self.trajectories.iter().find(|t| t.side == side && t.id == id)
    }
}

/// Number of interceptors whose target changed between consecutive epochs.
///
/// Interceptors absent from either epoch, and those whose previous target is
/// no longer live, are not counted.
pub fn count_switches<T: Real>(history: &[EpochRecord<T>]) -> usize {
    history
        .windows(2)
        .map(|w| switches_between(&w[0], &w[1]).len())
        .sum()
}

/// `(interceptor, old target, new target)` for each switch from `a` to `b`.
fn switches_between<T: Real>(a: &EpochRecord<T>, b: &EpochRecord<T>) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for (j, &id) in b.interceptor_ids.iter().enumerate() {
        let Some(i) = a.interceptor_ids.iter().position(|&x| x == id) else {
            continue;
        };
        let (old, new) = (a.assigned[i], b.assigned[j]);
        if old != new && b.target_ids.contains(&old) {
            out.push((id, old, new));
        }
    }
    out
}

/// Seeded feasible assignment: each target at least once when `coverage`
/// and `rows >= cols`, distinct targets when `rows < cols`.
pub fn random_assignment(rng: &mut impl Rng, rows: usize, cols: usize, coverage: bool) -> Vec<usize> {
    if cols == 0 {
        return Vec::new();
    }
    if rows < cols {
        let mut t: Vec<usize> = (0..cols).collect();
        t.shuffle(rng);
        t.truncate(rows);
        return t;
    }
    let mut pool: Vec<usize> = if coverage { (0..cols).collect() } else { Vec::new() };
    while pool.len() < rows {
        pool.push(rng.gen_range(0..cols));
    }
    pool.shuffle(rng);
    pool
}

/// Assignment for `h = 0`: Hungarian over the initial surrogate costs, or a
/// seeded random feasible assignment. Zero-based target columns.
pub fn baseline_init<T: Real>(
    scenario: &Scenario<T>,
    mode: BaselineMode,
    seed: u64,
    opts: CostOptions,
) -> Result<Assignment<T>, MissionError> {
    let (m, t) = initial_agents(scenario);
    let snap = build_snapshot(scenario, &m, &t, 0, T::zero(), &vec![None; m.len()])?;
    let costs = surrogate_cost_matrix(&snap, &scenario.cost_weights, opts);
    match mode {
        BaselineMode::Hungarian => Ok(solve_hungarian(&costs)?),
        BaselineMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = random_assignment(&mut rng, m.len(), t.len(), scenario.coverage);
            Ok(Assignment::new(&costs.values, z))
        }
    }
}

/// Keeps every row whose target is still live and refills the rest.
fn redraw_gaps(rng: &mut impl Rng, prev: &[Option<usize>], cols: usize, coverage: bool) -> Vec<usize> {
    let rows = prev.len();
    if cols == 0 {
        return Vec::new();
    }
    let mut free: Vec<usize> = (0..rows).filter(|&i| prev[i].is_none()).collect();
    free.shuffle(rng);
    let mut z: Vec<usize> = prev.iter().map(|p| p.unwrap_or(usize::MAX)).collect();
    if coverage && rows >= cols {
        let mut uncovered: Vec<usize> = (0..cols).filter(|k| !z.contains(k)).collect();
        if uncovered.len() > free.len() {
            return random_assignment(rng, rows, cols, true);
        }
        uncovered.shuffle(rng);
        for (&i, k) in free.iter().zip(uncovered) {
            z[i] = k;
        }
    } else if rows < cols {
        let mut unused: Vec<usize> = (0..cols).filter(|k| !z.contains(k)).collect();
        unused.shuffle(rng);
        for (&i, k) in free.iter().zip(unused) {
            z[i] = k;
        }
    }
    for zi in z.iter_mut().filter(|zi| **zi == usize::MAX) {
        *zi = rng.gen_range(0..cols);
    }
    z
}

struct Decision<T> {
    assignment: Assignment<T>,
    source: AssignmentSource,
    latency: f64,
    replay: Option<ReplayRecord>,
}

struct Sim<'a, T: Real> {
    scenario: &'a Scenario<T>,
    cfg: &'a MissionConfig<T>,
    backend: Option<Backend>,
    rng: ChaCha8Rng,
    interceptors: Vec<Tracked<T>>,
    targets: Vec<Tracked<T>>,
    /// Scenario target id per live interceptor, aligned with `interceptors`.
    assigned: Vec<Option<usize>>,
    traj_index: Vec<(Side, usize)>,
    log: MissionLog<T>,
    x_max_logged: Vec<(Side, usize)>,
}

impl<'a, T: Real> Sim<'a, T> {
    fn coverage(&self) -> bool {
        self.cfg.coverage.unwrap_or(self.scenario.coverage)
    }

    fn trajectory_mut(&mut self, side: Side, id: usize) -> &mut Trajectory<T> {
        let pos = self
            .traj_index
            .iter()
            .position(|&k| k == (side, id))
            .expect("every agent has a trajectory");
        &mut self.log.trajectories[pos]
    }

    fn snapshot(&self, h: usize, time: T) -> Result<SceneSnapshot<T>, MissionError> {
        Ok(build_snapshot(
            self.scenario,
            &self.interceptors,
            &self.targets,
            h,
            time,
            &self.assigned,
        )?)
    }

    fn decide(&mut self, snap: &SceneSnapshot<T>) -> Result<Decision<T>, MissionError> {
        let (rows, cols) = (snap.n_interceptors(), snap.n_targets());
        let base = surrogate_cost_matrix(snap, &self.scenario.cost_weights, self.cfg.cost_options);
        let costs = apply_switch_penalty(&base, &snap.previous_assignment, self.cfg.switch_penalty);
        let coverage = self.coverage();
        let solved = |assignment| Decision {
            assignment,
            source: AssignmentSource::Solver,
            latency: 0.0,
            replay: None,
        };
        Ok(match self.cfg.assigner {
            AssignerKind::Hungarian => solved(solve_hungarian(&costs)?),
            AssignerKind::Milp => solved(solve_milp(&costs, &MilpConstraints::for_mission(coverage, rows, cols))?),
            AssignerKind::Auction => solved(auction(&costs, self.cfg.auction_eps)?),
            AssignerKind::RandomInit => {
                let z = redraw_gaps(&mut self.rng, &snap.previous_assignment, cols, coverage);
                solved(Assignment::new(&costs.values, z))
            }
            AssignerKind::Llm => {
                let backend = self.backend.as_ref().expect("backend resolved at start");
                let cfg = self.cfg.backend.as_ref().expect("backend config checked at start");
                let out = assign_with_fallback(snap, &costs, coverage, cfg, backend)?;
                let source = match out.source {
                    OutcomeSource::Llm => AssignmentSource::Llm,
                    OutcomeSource::Fallback => AssignmentSource::Fallback,
                };
                let replay = ReplayRecord {
                    h: snap.epoch_index,
                    t: snap.time.as_f64(),
                    n_agents: rows,
                    n_targets: cols,
                    prompt: out.prompt.text(),
                    responses: out.records.iter().filter_map(|r| r.response.clone()).collect(),
                    source: out.source,
                    latency: out.latency,
                    assignment: out.assignment.ids(),
                };
                Decision {
                    assignment: out.assignment,
                    source,
                    latency: out.latency,
                    replay: Some(replay),
                }
            }
        })
    }

    fn apply(&mut self, snap: &SceneSnapshot<T>, d: Decision<T>) {
        let assigned: Vec<usize> = d.assignment.target_of.iter().map(|&k| snap.target_ids[k]).collect();
        let record = EpochRecord {
            h: snap.epoch_index,
            time: snap.time,
            interceptor_ids: snap.interceptor_ids.clone(),
            target_ids: snap.target_ids.clone(),
            assigned: assigned.clone(),
            source: d.source,
            objective: d.assignment.objective,
            latency: d.latency,
        };
        let t = snap.time.as_f64();
        if let Some(prev) = self.log.assignment_history.last() {
            for (m, old, new) in switches_between(prev, &record) {
                self.log.events.push(MissionEvent {
                    kind: EventKind::Reassignment,
                    time: t,
                    interceptor: Some(m),
                    target: Some(new),
                    asset: None,
                    detail: format!("target {old} -> {new}"),
                });
            }
        }
        if d.source == AssignmentSource::Fallback {
            self.log.events.push(MissionEvent {
                kind: EventKind::FallbackUsed,
                time: t,
                interceptor: None,
                target: None,
                asset: None,
                detail: format!("epoch {} assigned by fallback solver", snap.epoch_index),
            });
        }
        self.assigned = assigned.into_iter().map(Some).collect();
        self.log.assignment_history.push(record);
        if let Some(r) = d.replay {
            self.log.replay.push(r);
        }
    }

    /// Advances every live agent by one `sim_dt` and resolves intercepts and
    /// breaches over the step. `step` is the index of the step's end sample.
    fn substep(&mut self, step: usize) -> Result<(), MissionError> {
        let p = &self.scenario.physics;
        let dt = p.sim_dt;
        let t0 = T::count(step - 1) * dt;

        let old_m: Vec<AgentState<T>> = self.interceptors.iter().map(|a| a.state).collect();
        let old_t: Vec<AgentState<T>> = self.targets.iter().map(|a| a.state).collect();
        for (i, m) in self.interceptors.iter_mut().enumerate() {
            let spec = &self.scenario.interceptors[m.id - 1];
            let target = self.assigned[i].and_then(|id| old_t.iter().zip(&self.targets).find(|(_, t)| t.id == id));
            let u = match target {
                Some((ts, _)) => match relative_kinematics(&m.state, ts) {
                    Ok(rk) => png_command(&rk, spec.nav_constant, p.a_max)?,
                    Err(GuidanceError::Coincident(_)) => Vec3::zero(),
                    Err(e) => return Err(e.into()),
                },
                None => Vec3::zero(),
            };
            m.state = step_state(&m.state, u, dt)?;
        }
        for t in self.targets.iter_mut() {
            let u = saturate_accel(self.scenario.targets[t.id - 1].maneuver_accel, p.a_max)?;
            t.state = step_state(&t.state, u, dt)?;
        }

        let mut events = Vec::new();
        let mut m_gone = vec![false; self.interceptors.len()];
        let mut t_gone = vec![false; self.targets.len()];
        for i in 0..self.interceptors.len() {
            let mut best: Option<(bool, T, T, usize)> = None;
            for k in 0..self.targets.len() {
                if t_gone[k] {
                    continue;
                }
                let (s, d) = closest_approach(
                    old_m[i].position - old_t[k].position,
                    self.interceptors[i].state.position - self.targets[k].state.position,
                );
                if !(d < p.kill_radius) {
                    continue;
                }
                let preferred = self.assigned[i] == Some(self.targets[k].id);
                let better = match best {
                    None => true,
                    Some((bp, _, bd, _)) => (preferred && !bp) || (preferred == bp && d < bd),
                };
                if better {
                    best = Some((preferred, s, d, k));
                }
            }
            if let Some((_, s, d, k)) = best {
                m_gone[i] = true;
                t_gone[k] = true;
                events.push(MissionEvent {
                    kind: EventKind::Intercept,
                    time: (t0 + s * dt).as_f64(),
                    interceptor: Some(self.interceptors[i].id),
                    target: Some(self.targets[k].id),
                    asset: None,
                    detail: format!("miss distance {:.4} km", d.as_f64()),
                });
            }
        }
        for k in 0..self.targets.len() {
            if t_gone[k] {
                continue;
            }
            for a in &self.scenario.assets {
                let (s, d) = closest_approach(old_t[k].position - a.position, self.targets[k].state.position - a.position);
                if d <= a.protection_radius {
                    t_gone[k] = true;
                    events.push(MissionEvent {
                        kind: EventKind::AssetBreach,
                        time: (t0 + s * dt).as_f64(),
                        interceptor: None,
                        target: Some(self.targets[k].id),
                        asset: Some(a.id),
                        detail: format!("entered protection zone of asset {}", a.id),
                    });
                    break;
                }
            }
        }
        let x_max = p.x_max;
        let agents = self
            .interceptors
            .iter()
            .map(|a| (Side::Interceptor, a))
            .chain(self.targets.iter().map(|a| (Side::Target, a)));
        for (side, a) in agents {
            if a.state.exceeds_bound(x_max) && !self.x_max_logged.contains(&(side, a.id)) {
                self.x_max_logged.push((side, a.id));
                events.push(MissionEvent {
                    kind: EventKind::XMaxViolation,
                    time: (t0 + dt).as_f64(),
                    interceptor: (side == Side::Interceptor).then_some(a.id),
                    target: (side == Side::Target).then_some(a.id),
                    asset: None,
                    detail: format!("|position| = {:.3} km exceeds x_max", a.state.position.norm().as_f64()),
                });
            }
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        self.log.events.extend(events);

        let samples: Vec<(Side, usize, AgentState<T>, Option<usize>)> = self
            .interceptors
            .iter()
            .zip(&self.assigned)
            .map(|(a, &g)| (Side::Interceptor, a.id, a.state, g))
            .chain(self.targets.iter().map(|a| (Side::Target, a.id, a.state, None)))
            .collect();
        for (side, id, state, g) in samples {
            let tr = self.trajectory_mut(side, id);
            tr.states.push(state);
            tr.assigned.push(g);
        }

        let mut keep = m_gone.iter().map(|g| !g);
        self.interceptors.retain(|_| keep.next().unwrap());
        let mut keep = m_gone.iter().map(|g| !g);
        self.assigned.retain(|_| keep.next().unwrap());
        let mut keep = t_gone.iter().map(|g| !g);
        self.targets.retain(|_| keep.next().unwrap());
        Ok(())
    }
}

/// Closest approach of a linearly interpolated offset `a -> b` over the
/// step: `(fraction in [0, 1], distance)`.
fn closest_approach<T: Real>(a: Vec3<T>, b: Vec3<T>) -> (T, T) {
    let d = b - a;
    let dd = d.dot(d);
    let s = if dd > T::zero() {
        (-a.dot(d) / dd).max(T::zero()).min(T::one())
    } else {
        T::zero()
    };
    (s, (a + d * s).norm())
}

/// Auction over a square matrix, padding rectangular ones first.
fn auction<T: Real>(costs: &CostMatrix<T>, eps: T) -> Result<Assignment<T>, SolverError> {
    let (rows, cols) = costs.shape();
    if rows == cols {
        return solve_auction(costs, eps);
    }
    let mode = if rows > cols {
        PadMode::DuplicateTargets
    } else {
        PadMode::DummyRows
    };
    let padded = pad_rectangular(costs, mode, None)?;
    let square = solve_auction(&CostMatrix::from_values(padded.matrix.clone()), eps)?;
    Ok(Assignment::new(&costs.values, padded.unpad(&costs.values, &square.target_of)))
}

/// Runs the engagement to completion.
///
/// Epoch `h` starts at `h * epoch_dt` (whole `sim_dt` steps). The mission ends
/// when no targets remain or at `t_final`.
pub fn run_mission<T: Real>(scenario: &Scenario<T>, cfg: &MissionConfig<T>) -> Result<MissionLog<T>, MissionError> {
    let p = &scenario.physics;
    let epoch_dt = cfg.epoch_dt.unwrap_or(p.epoch_dt);
    if !(epoch_dt >= p.sim_dt) {
        return Err(MissionError::Config("epoch_dt must be at least sim_dt".into()));
    }
    let backend = match (cfg.assigner, &cfg.backend) {
        (AssignerKind::Llm, None) => {
            return Err(MissionError::Config("llm assigner needs a backend configuration".into()))
        }
        (AssignerKind::Llm, Some(b)) => Some(Backend::from_config(b).map_err(LlmError::from)?),
        _ => None,
    };
    let steps_per_epoch = (epoch_dt / p.sim_dt).round().to_usize().unwrap_or(1).max(1);
    let total_steps = (p.t_final / p.sim_dt + T::lit(1e-9)).floor().to_usize().unwrap_or(0);

    let (interceptors, targets) = initial_agents(scenario);
    let mut trajectories = Vec::new();
    let mut traj_index = Vec::new();
    for (side, list) in [(Side::Interceptor, &interceptors), (Side::Target, &targets)] {
        for a in list {
            traj_index.push((side, a.id));
            trajectories.push(Trajectory {
                side,
                id: a.id,
                start_step: 0,
                states: vec![a.state],
                assigned: vec![None],
            });
        }
    }
    let snap0 = build_snapshot(scenario, &interceptors, &targets, 0, T::zero(), &vec![None; interceptors.len()])?;
    let intended_assets = snap0
        .target_ids
        .iter()
        .copied()
        .zip(snap0.associated_asset.iter().copied())
        .collect();

    let mut sim = Sim {
        scenario,
        cfg,
        backend,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        interceptors,
        targets,
        assigned: Vec::new(),
        traj_index,
        log: MissionLog {
            scenario_name: scenario.name.clone(),
            assigner: cfg.assigner,
            sim_dt: p.sim_dt,
            t_final: p.t_final,
            assets: scenario.assets.clone(),
            intended_assets,
            events: Vec::new(),
            trajectories,
            assignment_history: Vec::new(),
            replay: Vec::new(),
            metrics: MissionMetrics::default(),
        },
        x_max_logged: Vec::new(),
    };

    let coverage = sim.coverage();
    let costs0 = surrogate_cost_matrix(&snap0, &scenario.cost_weights, cfg.cost_options);
    let z0 = match cfg.baseline {
        BaselineMode::Hungarian => solve_hungarian(&costs0)?,
        BaselineMode::Random => Assignment::new(
            &costs0.values,
            random_assignment(&mut sim.rng, snap0.n_interceptors(), snap0.n_targets(), coverage),
        ),
    };
    sim.assigned = vec![None; snap0.n_interceptors()];
    sim.apply(
        &snap0,
        Decision {
            assignment: z0,
            source: AssignmentSource::Baseline,
            latency: 0.0,
            replay: None,
        },
    );
    for (tr, &g) in sim.log.trajectories.iter_mut().zip(&sim.assigned) {
        tr.assigned[0] = Some(g.expect("baseline assigns every interceptor"));
    }

    let mut step = 0usize;
    let mut h = 0usize;
    while step < total_steps && !sim.targets.is_empty() {
        if step > 0 && step % steps_per_epoch == 0 {
            h += 1;
            let snap = sim.snapshot(h, T::count(step) * p.sim_dt)?;
            if snap.n_interceptors() > 0 {
                let d = sim.decide(&snap)?;
                sim.apply(&snap, d);
            }
        }
        step += 1;
        sim.substep(step)?;
    }

    let mut log = sim.log;
    log.metrics = metrics_from(&log, T::count(step) * p.sim_dt, sim.targets.len());
    Ok(log)
}

fn metrics_from<T: Real>(log: &MissionLog<T>, end: T, surviving: usize) -> MissionMetrics {
    let intercepts: Vec<f64> = log
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Intercept)
        .map(|e| e.time)
        .collect();
    let calls: Vec<f64> = log.assignment_history.iter().skip(1).map(|r| r.latency).collect();
    MissionMetrics {
        targets_intercepted: intercepts.len(),
        assets_breached: log.events.iter().filter(|e| e.kind == EventKind::AssetBreach).count(),
        targets_surviving: surviving,
        mean_intercept_time: mean(&intercepts),
        total_switches: count_switches(&log.assignment_history),
        fallback_count: log
            .assignment_history
            .iter()
            .filter(|r| r.source == AssignmentSource::Fallback)
            .count(),
        mean_assigner_latency: mean(&calls),
        epochs: log.assignment_history.len(),
        end_time: end.as_f64(),
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Backend errors that make a configuration unusable before the run starts.
pub fn check_backend(cfg: &BackendConfig) -> Result<(), BackendError> {
    Backend::from_config(cfg).map(|_| ())
}
