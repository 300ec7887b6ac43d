//! Divide-and-conquer mission planning: each mission is a sequence of
//! sub-tasks, each sub-task is one MILP in one dynamical mode, and the
//! resulting trajectory pieces are concatenated. Vehicles are planned one
//! after another, later ones avoiding the trajectories of earlier ones.

mod fleet;
mod subtask;
mod verify;

use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{HybridModel, ModeId, DEFAULT_DT, IX, IY, IZ};
use crate::encoder::EncodeError;
use crate::mtl::{horizon_of, resolve_unbounded, Formula};
use crate::solver::{SolveStatus, SolverError};

pub use fleet::{capacity_sweep, plan_fleet, plan_fleet_with_models, CapacityReport, PlannerConfig, SolvedModels};
pub use subtask::{exit_box, plan_subtask, shift_formula, SubtaskContext, SubtaskOutcome};
pub use verify::{holds_on, label_trace, min_separation, verify_trajectory, Verification, Violation, SEPARATION_TOL};

/// Tolerance on junction continuity and dynamics residuals.
pub const CONTINUITY_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct SubTask {
    pub label: String,
    /// NNF formula over workspace propositions.
    pub formula: Formula,
    pub mode: ModeId,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mission {
    pub uav: usize,
    pub name: String,
    pub subtasks: Vec<SubTask>,
    /// Overall deadline `T_i` in steps.
    pub total_horizon: usize,
    pub x0: Vec<f64>,
}

impl Mission {
    /// Conjunction of the sub-task formulas, each shifted to the step at
    /// which its segment starts, for segments of the given lengths.
    pub fn composed_formula(&self, lengths: &[usize]) -> Formula {
        let mut offset = 0;
        let mut parts = Vec::new();
        for (st, &len) in self.subtasks.iter().zip(lengths) {
            let mut f = resolve_unbounded(&st.formula, len);
            for _ in 0..offset {
                f = Formula::next(f);
            }
            parts.push(f);
            offset += len;
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else if parts.is_empty() {
            Formula::True
        } else {
            Formula::and(parts)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DecompositionError {
    #[error("sub-task horizons sum to {sum} steps, exceeding the mission deadline {total} by {}", sum - total)]
    Excess { sum: usize, total: usize },
    #[error("sub-task `{label}` needs {needed} steps but has {horizon}")]
    HorizonTooShort { label: String, needed: usize, horizon: usize },
    #[error("sub-task `{label}` formula is not in negation normal form")]
    NotNnf { label: String },
}

/// Accepts a decomposition when the sub-task horizons fit the mission
/// deadline and each formula fits its own horizon.
pub fn validate_decomposition(m: &Mission) -> Result<(), DecompositionError> {
    let sum: usize = m.subtasks.iter().map(|s| s.horizon).sum();
    if sum > m.total_horizon {
        return Err(DecompositionError::Excess { sum, total: m.total_horizon });
    }
    for st in &m.subtasks {
        if !st.formula.is_nnf() {
            return Err(DecompositionError::NotNnf { label: st.label.clone() });
        }
        let needed = horizon_of(&resolve_unbounded(&st.formula, st.horizon));
        if needed > st.horizon {
            return Err(DecompositionError::HorizonTooShort { label: st.label.clone(), needed, horizon: st.horizon });
        }
    }
    Ok(())
}

/// Sampled states and inputs of one vehicle. `modes[t]` is the mode active
/// between `states[t]` and `states[t + 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    /// Absolute step of `states[0]`.
    pub start: usize,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub modes: Vec<ModeId>,
}

impl Trajectory {
    /// Zero-length trajectory sitting at `x`.
    pub fn stationary(start: usize, x: Vec<f64>) -> Self {
        Self { dt: DEFAULT_DT, start, states: vec![x], inputs: Vec::new(), modes: Vec::new() }
    }

    /// Number of transitions.
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn end(&self) -> usize {
        self.start + self.steps()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one state")
    }

    /// Position at absolute step `t`; held at the final state afterwards.
    pub fn position_at(&self, t: usize) -> Option<Vector3<f64>> {
        let i = t.checked_sub(self.start)?;
        let x = &self.states[i.min(self.states.len() - 1)];
        Some(Vector3::new(x[IX], x[IY], x[IZ]))
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.states.iter().map(|x| Vector3::new(x[IX], x[IY], x[IZ])).collect()
    }

    /// Mode shown for state `i`: the one leaving it, or the last one at the end.
    pub fn mode_at(&self, i: usize) -> Option<ModeId> {
        self.modes.get(i).or(self.modes.last()).copied()
    }

    /// Largest residual of `x(t+1) = A x(t) + B u(t)` under each step's mode.
    pub fn dynamics_residual(&self, model: &HybridModel) -> Result<f64, crate::dynamics::DynamicsError> {
        let mut worst: f64 = 0.0;
        let mut cache: Vec<(ModeId, crate::dynamics::DiscreteMode)> = Vec::new();
        for (t, &mode) in self.modes.iter().enumerate() {
            let dm = match cache.iter().find(|(m, _)| *m == mode) {
                Some((_, d)) => d,
                None => {
                    cache.push((mode, model.discrete(mode)?));
                    &cache.last().unwrap().1
                }
            };
            let x = nalgebra::DVector::from_column_slice(&self.states[t]);
            let u = nalgebra::DVector::from_column_slice(&self.inputs[t]);
            let next = &dm.ad * x + &dm.bd * u;
            for (a, b) in next.iter().zip(&self.states[t + 1]) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ComposeError {
    #[error("nothing to compose")]
    Empty,
    #[error("junction {junction}: end and start states differ by {gap}")]
    Discontinuous { junction: usize, gap: f64 },
}

/// Concatenates trajectory pieces; the start of piece `k + 1` must match the
/// end of piece `k`.
pub fn compose_trajectories(parts: &[Trajectory]) -> Result<Trajectory, ComposeError> {
    let first = parts.first().ok_or(ComposeError::Empty)?;
    let mut out = first.clone();
    for (k, p) in parts.iter().enumerate().skip(1) {
        let gap = out
            .final_state()
            .iter()
            .zip(&p.states[0])
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > CONTINUITY_TOL {
            return Err(ComposeError::Discontinuous { junction: k - 1, gap });
        }
        out.states.extend(p.states.iter().skip(1).cloned());
        out.inputs.extend(p.inputs.iter().cloned());
        out.modes.extend(p.modes.iter().copied());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum PlanError {
    #[error("sub-task `{label}` is infeasible")]
    Infeasible { label: String },
    #[error("sub-task `{label}`: solver stopped ({status}) without a solution")]
    Budget { label: String, status: SolveStatus },
    #[error("sub-task `{label}`: {source}")]
    Encode { label: String, source: EncodeError },
    #[error("sub-task `{label}`: {source}")]
    Solver { label: String, source: SolverError },
    #[error("sub-task `{label}`: mode {mode} cannot be planned directly")]
    Mode { label: String, mode: ModeId },
    #[error("sub-task `{label}`: solution fails verification: {reason}")]
    Verification { label: String, reason: String },
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

/// Per sub-task outcome in a fleet plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubTaskReport {
    pub uav: usize,
    pub label: String,
    pub mode: ModeId,
    pub feasible: bool,
    /// First step at which the primary target holds, waits included.
    pub execution_steps: Option<usize>,
    /// Steps actually flown in this segment, waits included.
    pub executed_steps: usize,
    pub bound: usize,
    pub waits: usize,
    pub solve_seconds: f64,
    pub objective: Option<f64>,
    pub nodes: usize,
    /// Absolute step at which the segment starts.
    pub start: usize,
}

impl SubTaskReport {
    pub fn passed(&self) -> bool {
        self.feasible && self.execution_steps.is_some_and(|s| s <= self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionFailure {
    pub uav: usize,
    pub subtask: String,
    pub reason: String,
}

impl fmt::Display for MissionFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "uav {} failed at sub-task {}: {}", self.uav + 1, self.subtask, self.reason)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FleetPlan {
    /// Composed trajectory per mission, partial for failed missions.
    pub trajectories: Vec<Trajectory>,
    pub reports: Vec<SubTaskReport>,
    pub failures: Vec<MissionFailure>,
}

impl FleetPlan {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty() && self.reports.iter().all(SubTaskReport::passed)
    }

    /// Segment lengths of one vehicle's sub-tasks, in order.
    pub fn segment_lengths(&self, uav: usize) -> Vec<usize> {
        self.reports.iter().filter(|r| r.uav == uav && r.feasible).map(|r| r.executed_steps).collect()
    }

    pub fn total_waits(&self, uav: usize) -> usize {
        self.reports.iter().filter(|r| r.uav == uav).map(|r| r.waits).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mission(horizons: &[usize], total: usize) -> Mission {
        let subtasks = horizons
            .iter()
            .enumerate()
            .map(|(k, &h)| SubTask {
                label: format!("s{k}"),
                formula: Formula::eventually(0, h, Formula::atom("F")),
                mode: ModeId::Steer,
                horizon: h,
            })
            .collect();
        Mission { uav: 0, name: "m".into(), subtasks, total_horizon: total, x0: vec![0.0; 10] }
    }

    #[test]
    fn decomposition_sum_rule() {
        assert!(validate_decomposition(&mission(&[5, 5, 9], 20)).is_ok());
        assert_eq!(validate_decomposition(&mission(&[10, 15], 20)), Err(DecompositionError::Excess { sum: 25, total: 20 }));
        assert!(validate_decomposition(&mission(&[], 20)).is_ok());
    }

    #[test]
    fn decomposition_checks_formula_horizon() {
        let mut m = mission(&[5], 20);
        m.subtasks[0].horizon = 3;
        assert!(matches!(validate_decomposition(&m), Err(DecompositionError::HorizonTooShort { .. })));
    }

    fn line(start: f64, n: usize) -> Trajectory {
        let states = (0..=n).map(|k| {
            let mut x = vec![0.0; 10];
            x[0] = start + k as f64;
            x
        });
        Trajectory {
            dt: DEFAULT_DT,
            start: 0,
            states: states.collect(),
            inputs: vec![vec![0.0; 3]; n],
            modes: vec![ModeId::Steer; n],
        }
    }

    #[test]
    fn composition_adds_lengths() {
        let one = line(0.0, 2);
        assert_eq!(compose_trajectories(std::slice::from_ref(&one)).unwrap(), one);
        let both = compose_trajectories(&[line(0.0, 2), line(2.0, 3)]).unwrap();
        assert_eq!(both.steps(), 5);
        assert_eq!(both.states.len(), 6);
        assert_eq!(
            compose_trajectories(&[line(0.0, 2), line(2.5, 1)]),
            Err(ComposeError::Discontinuous { junction: 0, gap: 0.5 })
        );
        assert_eq!(compose_trajectories(&[]), Err(ComposeError::Empty));
    }

    #[test]
    fn composition_is_associative() {
        let (a, b, c) = (line(0.0, 1), line(1.0, 2), line(3.0, 1));
        let left = compose_trajectories(&[compose_trajectories(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
        let right = compose_trajectories(&[a, compose_trajectories(&[b, c]).unwrap()]).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn positions_hold_after_the_end() {
        let t = line(0.0, 2);
        assert_eq!(t.position_at(10).unwrap()[0], 2.0);
        let mut late = t.clone();
        late.start = 3;
        assert!(late.position_at(1).is_none());
    }
}
