//! Sequential planning of several vehicles with wait-and-retry.

use std::time::Instant;

use log::info;

use super::subtask::{plan_subtask, plan_subtask_solo, plan_wait, shift_formula, SubtaskContext};
use super::{compose_trajectories, validate_decomposition, FleetPlan, Mission, MissionFailure, PlanError, SubTask, SubTaskReport, Trajectory};
use crate::dynamics::HybridModel;
use crate::encoder::model::MilpModel;
use crate::workspace::rescue::build_rescue_workspace;
use crate::workspace::Workspace;

pub use super::subtask::PlannerConfig;

/// Models solved while planning, labeled by vehicle and sub-task.
pub type SolvedModels = Vec<(String, MilpModel)>;

/// Plans the missions in list order. Each vehicle avoids the trajectories of
/// all vehicles planned before it. When a sub-task is infeasible and other
/// vehicles exist, the vehicle hovers for one step and retries with the
/// remaining time, until the sub-task deadline is used up.
pub fn plan_fleet(missions: &[Mission], w: &Workspace, model: &HybridModel, cfg: &PlannerConfig) -> FleetPlan {
    plan_fleet_with_models(missions, w, model, cfg).0
}

/// [`plan_fleet`], also returning the solved models when `cfg.keep_models` is set.
pub fn plan_fleet_with_models(missions: &[Mission], w: &Workspace, model: &HybridModel, cfg: &PlannerConfig) -> (FleetPlan, SolvedModels) {
    let mut plan = FleetPlan { trajectories: Vec::new(), reports: Vec::new(), failures: Vec::new() };
    let mut models = Vec::new();
    for m in missions {
        if let Err(e) = validate_decomposition(m) {
            plan.failures.push(MissionFailure { uav: m.uav, subtask: String::new(), reason: e.to_string() });
            plan.trajectories.push(Trajectory::stationary(0, m.x0.clone()));
            if cfg.stop_on_failure {
                break;
            }
            continue;
        }
        let others = plan.trajectories.clone();
        let (traj, failed) = plan_mission(m, w, model, cfg, &others, &mut plan, &mut models);
        plan.trajectories.push(traj);
        if failed && cfg.stop_on_failure {
            break;
        }
    }
    (plan, models)
}

fn plan_mission(
    m: &Mission,
    w: &Workspace,
    model: &HybridModel,
    cfg: &PlannerConfig,
    others: &[Trajectory],
    plan: &mut FleetPlan,
    models: &mut SolvedModels,
) -> (Trajectory, bool) {
    let mut x = m.x0.clone();
    let mut t = 0;
    let mut parts: Vec<Trajectory> = Vec::new();
    let mut failed = false;
    for (k, st) in m.subtasks.iter().enumerate() {
        let next_mode = m.subtasks.get(k + 1).map(|s| s.mode);
        let x_start = x.clone();
        let start = t;
        let mut waits = 0;
        let mut seconds = 0.0;
        let ctx_at = |t: usize| SubtaskContext { workspace: w, model, others, start: t, next_mode, uav: m.uav, config: cfg };
        let result = loop {
            let remaining = st.horizon - waits;
            let Some(formula) = shift_formula(&st.formula, waits) else {
                break Err(PlanError::Infeasible { label: st.label.clone() });
            };
            let sub = SubTask { label: st.label.clone(), formula, mode: st.mode, horizon: remaining };
            let clock = Instant::now();
            let attempt = plan_subtask(&sub, &x, &ctx_at(t));
            seconds += clock.elapsed().as_secs_f64();
            match attempt {
                Ok(out) => break Ok(out),
                Err(e @ (PlanError::Infeasible { .. } | PlanError::Budget { .. })) if !others.is_empty() && remaining > 1 => {
                    let clock = Instant::now();
                    let wait = plan_wait(&x, &format!("{}-wait", st.label), &ctx_at(t));
                    seconds += clock.elapsed().as_secs_f64();
                    match wait {
                        Ok(wait) => {
                            x = wait.trajectory.final_state().to_vec();
                            t = wait.trajectory.end();
                            parts.push(wait.trajectory);
                            waits += 1;
                        }
                        Err(_) => break Err(e),
                    }
                }
                Err(e) => break Err(e),
            }
        };
        match result {
            Ok(out) => {
                let execution_steps = waits + out.execution_steps;
                let mut delay = waits;
                if cfg.measure_delay && !others.is_empty() {
                    if let Ok(solo) = plan_subtask_solo(st, &x_start, &ctx_at(start)) {
                        delay = delay.max(execution_steps.saturating_sub(solo.execution_steps));
                    }
                }
                info!("uav {} {}: {} steps, delay {}", m.uav + 1, st.label, execution_steps, delay);
                models.extend(out.models.into_iter().map(|mm| (format!("uav{}_{}", m.uav + 1, st.label), mm)));
                plan.reports.push(SubTaskReport {
                    uav: m.uav,
                    label: st.label.clone(),
                    mode: st.mode,
                    feasible: true,
                    execution_steps: Some(execution_steps),
                    executed_steps: waits + out.trajectory.steps(),
                    bound: st.horizon,
                    waits: delay,
                    solve_seconds: seconds,
                    objective: Some(out.objective),
                    nodes: out.nodes,
                    start,
                });
                x = out.trajectory.final_state().to_vec();
                t = out.trajectory.end();
                parts.push(out.trajectory);
            }
            Err(e) => {
                info!("uav {} {}: failed: {e}", m.uav + 1, st.label);
                plan.reports.push(SubTaskReport {
                    uav: m.uav,
                    label: st.label.clone(),
                    mode: st.mode,
                    feasible: false,
                    execution_steps: None,
                    executed_steps: waits,
                    bound: st.horizon,
                    waits,
                    solve_seconds: seconds,
                    objective: None,
                    nodes: 0,
                    start,
                });
                plan.failures.push(MissionFailure { uav: m.uav, subtask: st.label.clone(), reason: e.to_string() });
                failed = true;
                break;
            }
        }
    }
    let traj = if parts.is_empty() {
        Trajectory::stationary(0, m.x0.clone())
    } else {
        compose_trajectories(&parts).expect("segments start where the previous one ends")
    };
    (traj, failed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityReport {
    /// Largest number of vehicles whose missions all succeed.
    pub max_feasible: usize,
    pub tried: usize,
    /// First failure beyond `max_feasible`, if any.
    pub failure: Option<MissionFailure>,
    pub plan: FleetPlan,
}

/// Adds vehicles of the builtin layout one at a time (in priority order)
/// until a mission fails. Since each vehicle only sees the ones before it,
/// one run with `max_n` vehicles answers every smaller fleet size too.
pub fn capacity_sweep(max_n: usize, model: &HybridModel, cfg: &PlannerConfig) -> CapacityReport {
    let (w, missions) = build_rescue_workspace(max_n);
    let cfg = PlannerConfig { stop_on_failure: true, ..cfg.clone() };
    let plan = plan_fleet(&missions, &w, model, &cfg);
    let failure = plan.failures.first().cloned();
    let max_feasible = failure.as_ref().map_or(missions.len(), |f| f.uav);
    CapacityReport { max_feasible, tried: missions.len(), failure, plan }
}
