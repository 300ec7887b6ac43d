//! Planning of one sub-task: encode, solve, read back the trajectory, check
//! it against the formula semantics and cut it at the earliest step from
//! which the next sub-task may take over.

use std::time::Instant;

use log::debug;

use super::verify::{holds_on, SEPARATION_TOL};
use super::{PlanError, SubTask, Trajectory};
use crate::dynamics::{grasp_sequence, HybridModel, ModeId, IPHI, ITHETA, IVX, IVZ, IWPHI, IWTHETA, IZ};
use crate::encoder::model::MilpModel;
use crate::encoder::subtask::primary_reach;
use crate::encoder::{encode_subtask_problem, BigMConfig, ExitCondition, MovingObstacle, SubtaskSpec};
use crate::mtl::{resolve_unbounded, Formula, Interval, Proposition};
use crate::solver::{solve_milp, SolveStatus, SolverConfig, FEAS_TOL};
use crate::workspace::Workspace;

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    pub solver: SolverConfig,
    /// Fold halfspaces decided by reachability and size big-M per step.
    pub tighten: bool,
    /// Weight of the early-arrival reward relative to input effort.
    pub arrival_weight: f64,
    /// Tilt, angular rate and vertical speed allowed at every hand-over.
    pub handover_tilt: f64,
    pub handover_rate: f64,
    pub handover_vertical_speed: f64,
    /// Highest altitude and horizontal speed at which a descending mode
    /// (Land, Grasp) may begin.
    pub descent_entry_altitude: f64,
    pub descent_entry_speed: f64,
    /// Steps after the hand-over during which the final position must stay
    /// clear of the other vehicles.
    pub handover_lookahead: usize,
    /// Steps solved ahead when planning a single hover step.
    pub wait_lookahead: usize,
    /// Re-plan each delayed sub-task without other vehicles to measure the delay.
    pub measure_delay: bool,
    /// Stop planning further vehicles after the first failed mission.
    pub stop_on_failure: bool,
    /// Keep every solved model (for LP export).
    pub keep_models: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            tighten: true,
            arrival_weight: 1.0,
            handover_tilt: 0.1,
            handover_rate: 1.0,
            handover_vertical_speed: 0.0,
            descent_entry_altitude: 0.4,
            descent_entry_speed: 0.1,
            handover_lookahead: 5,
            wait_lookahead: 4,
            measure_delay: true,
            stop_on_failure: false,
            keep_models: false,
        }
    }
}

/// Everything a sub-task needs besides its own data.
pub struct SubtaskContext<'a> {
    pub workspace: &'a Workspace,
    pub model: &'a HybridModel,
    pub others: &'a [Trajectory],
    /// Absolute step at which the sub-task starts.
    pub start: usize,
    /// Mode of the following sub-task; `None` for the last one, which ends at rest.
    pub next_mode: Option<ModeId>,
    pub uav: usize,
    pub config: &'a PlannerConfig,
}

#[derive(Clone, Debug)]
pub struct SubtaskOutcome {
    pub trajectory: Trajectory,
    /// First step at which the primary target holds (trajectory length without one).
    pub execution_steps: usize,
    pub objective: f64,
    pub nodes: usize,
    pub solve_seconds: f64,
    pub models: Vec<MilpModel>,
}

type StateBox = (Vec<f64>, Vec<f64>);

fn intersect(a: &StateBox, b: &StateBox) -> StateBox {
    let lo = a.0.iter().zip(&b.0).map(|(x, y)| x.max(*y)).collect();
    let hi = a.1.iter().zip(&b.1).map(|(x, y)| x.min(*y)).collect();
    (lo, hi)
}

fn admits(b: &StateBox, x: &[f64], tol: f64) -> bool {
    x.iter().zip(b.0.iter().zip(&b.1)).all(|(&v, (&lo, &hi))| v >= lo - tol && v <= hi + tol)
}

/// At rest: zero velocity, attitude and rates; position free.
fn rest_box(n: usize) -> StateBox {
    let mut lo = vec![f64::NEG_INFINITY; n];
    let mut hi = vec![f64::INFINITY; n];
    for k in [IVX, IVX + 1, IVZ, IPHI, ITHETA, IWPHI, IWTHETA] {
        lo[k] = 0.0;
        hi[k] = 0.0;
    }
    (lo, hi)
}

/// State the vehicle must be in when the sub-task hands over.
pub fn exit_box(model: &HybridModel, next: Option<ModeId>, config: &PlannerConfig) -> StateBox {
    let hover = model.entry_box(ModeId::Hover);
    let Some(m) = next else {
        return intersect(&hover, &rest_box(hover.0.len()));
    };
    let mut b = intersect(&hover, &model.entry_box(m));
    let mut limit = |k: usize, lim: f64| {
        b.0[k] = b.0[k].max(-lim);
        b.1[k] = b.1[k].min(lim);
    };
    for k in [IPHI, ITHETA] {
        limit(k, config.handover_tilt);
    }
    for k in [IWPHI, IWTHETA] {
        limit(k, config.handover_rate);
    }
    limit(IVZ, config.handover_vertical_speed);
    if matches!(m, ModeId::Grasp | ModeId::Land) {
        limit(IVX, config.descent_entry_speed);
        limit(IVX + 1, config.descent_entry_speed);
        b.1[IZ] = b.1[IZ].min(config.descent_entry_altitude);
    }
    b
}

/// Drops the first `w` steps from the top-level windows of `f`. `None` when
/// a deadline has already passed.
pub fn shift_formula(f: &Formula, w: usize) -> Option<Formula> {
    if w == 0 {
        return Some(f.clone());
    }
    let shift = |i: &Interval| -> Option<Interval> {
        match i.hi {
            Some(hi) if hi < w => None,
            Some(hi) => Some(Interval { lo: i.lo.saturating_sub(w), hi: Some(hi - w) }),
            None => Some(Interval { lo: i.lo.saturating_sub(w), hi: None }),
        }
    };
    Some(match f {
        Formula::And(cs) => Formula::And(cs.iter().map(|c| shift_formula(c, w)).collect::<Option<Vec<_>>>()?),
        Formula::Eventually(i, g) => Formula::Eventually(shift(i)?, g.clone()),
        Formula::Always(i, g) => match shift(i) {
            Some(j) => Formula::Always(j, g.clone()),
            None => Formula::True,
        },
        Formula::Until(i, p, q) => Formula::Until(shift(i)?, p.clone(), q.clone()),
        other => other.clone(),
    })
}

fn obstacle_tracks(ctx: &SubtaskContext<'_>, horizon: usize) -> Result<Vec<MovingObstacle>, String> {
    let mut tracks = Vec::new();
    for (j, o) in ctx.others.iter().enumerate() {
        let at = |t: usize| o.position_at(t).ok_or_else(|| format!("trajectory {j} starts after step {t}"));
        let positions = (ctx.start..=ctx.start + horizon).map(at).collect::<Result<Vec<_>, _>>()?;
        // The final state must also stay clear of where the other vehicle
        // goes next, so that the following sub-task can start by hovering.
        for k in 1..=ctx.config.handover_lookahead {
            let mut ahead = positions.clone();
            ahead[horizon] = at(ctx.start + horizon + k)?;
            tracks.push(MovingObstacle { label: format!("other{j}_ahead{k}"), positions: ahead, from: horizon });
        }
        tracks.push(MovingObstacle { label: format!("other{j}"), positions, from: 1 });
    }
    Ok(tracks)
}

struct Segment<'s> {
    label: &'s str,
    formula: &'s Formula,
    horizon: usize,
    /// Mode active on each transition.
    modes: Vec<ModeId>,
    /// Admitted state box per step (entry 0 unused).
    boxes: Vec<StateBox>,
    exit: StateBox,
    /// Earliest step at which the segment may be cut.
    min_len: usize,
    /// Earliest step counted as reaching the target.
    reach_from: usize,
}

fn solve_segment(seg: &Segment<'_>, x0: &[f64], ctx: &SubtaskContext<'_>, with_others: bool) -> Result<SubtaskOutcome, PlanError> {
    let label = seg.label.to_string();
    let dm = ctx.model.discrete(ModeId::Hover).map_err(|_| PlanError::Mode { label: label.clone(), mode: ModeId::Hover })?;
    let tracks = if with_others {
        obstacle_tracks(ctx, seg.horizon).map_err(|reason| PlanError::Verification { label: label.clone(), reason })?
    } else {
        Vec::new()
    };
    let exit = ExitCondition::Box { lo: seg.exit.0.clone(), hi: seg.exit.1.clone() };
    let params = &ctx.model.params;
    let spec = SubtaskSpec {
        label: seg.label,
        uav: ctx.uav,
        formula: seg.formula,
        mode: &dm,
        state_boxes: Some(&seg.boxes),
        x0,
        horizon: seg.horizon,
        workspace: ctx.workspace,
        cfg: BigMConfig::for_workspace(ctx.workspace),
        tighten: ctx.config.tighten,
        arrival_weight: ctx.config.arrival_weight,
        hold_reach_at_end: true,
        exit,
        others: &tracks,
        separation: params.separation(),
        rho: params.rho,
    };
    let enc = encode_subtask_problem(&spec).map_err(|source| PlanError::Encode { label: label.clone(), source })?;
    let clock = Instant::now();
    let sol = solve_milp(&enc.model, &ctx.config.solver).map_err(|source| PlanError::Solver { label: label.clone(), source })?;
    let solve_seconds = clock.elapsed().as_secs_f64();
    debug!(
        "{label}: {} vars ({} binary), {} rows, status {}, {} nodes, {:.3}s",
        enc.model.vars.len(),
        enc.model.num_binaries(),
        enc.model.constraints.len(),
        sol.status,
        sol.nodes,
        solve_seconds
    );
    match sol.status {
        s if s.has_solution() => {}
        SolveStatus::Infeasible => return Err(PlanError::Infeasible { label }),
        status => return Err(PlanError::Budget { label, status }),
    }
    let read = |ids: &Vec<crate::encoder::model::VarId>| ids.iter().map(|v| sol.values[v.0]).collect::<Vec<f64>>();
    let mut states: Vec<Vec<f64>> = enc.states.iter().map(read).collect();
    let mut inputs: Vec<Vec<f64>> = enc.inputs.iter().map(read).collect();
    states[0] = x0.to_vec();
    let full = Trajectory { dt: ctx.model.dt, start: ctx.start, states: states.clone(), inputs: inputs.clone(), modes: seg.modes.clone() };

    let positions = full.positions();
    let resolved = resolve_unbounded(seg.formula, seg.horizon);
    if !holds_on(&resolved, ctx.workspace, &positions) {
        return Err(PlanError::Verification { label, reason: format!("{resolved} fails on the solved trajectory") });
    }
    if with_others {
        let sep = params.separation();
        for o in &tracks {
            for (t, p) in positions.iter().enumerate().skip(o.from.max(1)) {
                let d = (p - o.positions[t]).amax();
                if d < sep - SEPARATION_TOL {
                    return Err(PlanError::Verification { label, reason: format!("separation {d:.4} from {} at step {t}", o.label) });
                }
            }
        }
    }

    let reach = primary_reach(seg.formula);
    let first_reach = reach.and_then(|r| (seg.reach_from..positions.len()).find(|&t| holds_on(r, ctx.workspace, &positions[t..])));
    let clear_ahead = |t: usize| {
        !with_others
            || ctx.others.iter().all(|o| {
                (1..=ctx.config.handover_lookahead).all(|k| {
                    o.position_at(ctx.start + t + k).is_none_or(|q| (positions[t] - q).amax() >= params.separation() - SEPARATION_TOL)
                })
            })
    };
    let mut cut = seg.horizon;
    for t in first_reach.unwrap_or(seg.horizon).max(seg.min_len)..seg.horizon {
        let reach_stays = reach.is_none_or(|r| (t..positions.len()).all(|k| holds_on(r, ctx.workspace, &positions[k..])));
        if reach_stays
            && admits(&seg.exit, &states[t], FEAS_TOL)
            && clear_ahead(t)
            && holds_on(&resolve_unbounded(seg.formula, t), ctx.workspace, &positions[..=t])
        {
            cut = t;
            break;
        }
    }
    states.truncate(cut + 1);
    inputs.truncate(cut);
    let trajectory = Trajectory { dt: ctx.model.dt, start: ctx.start, states, inputs, modes: seg.modes[..cut].to_vec() };
    let models = if ctx.config.keep_models { vec![enc.model] } else { Vec::new() };
    Ok(SubtaskOutcome {
        trajectory,
        execution_steps: first_reach.unwrap_or(cut),
        objective: sol.objective,
        nodes: sol.nodes,
        solve_seconds,
        models,
    })
}

fn build_segment<'s>(st: &'s SubTask, formula: &'s Formula, ctx: &SubtaskContext<'_>) -> Result<Segment<'s>, PlanError> {
    let horizon = st.horizon;
    let exit = exit_box(ctx.model, ctx.next_mode, ctx.config);
    let mode_box = |m: ModeId| -> Result<StateBox, PlanError> {
        let lm = ctx.model.mode(m).map_err(|_| PlanError::Mode { label: st.label.clone(), mode: m })?;
        Ok((lm.x_min.clone(), lm.x_max.clone()))
    };
    if st.mode != ModeId::Grasp {
        let b = mode_box(st.mode)?;
        return Ok(Segment {
            label: &st.label,
            formula,
            horizon,
            modes: vec![st.mode; horizon],
            boxes: vec![b; horizon + 1],
            exit,
            min_len: 0,
            reach_from: 0,
        });
    }
    // Grasp: one hover step, descend to touchdown, climb out with the object.
    let seq = grasp_sequence();
    let (hover, land, takeoff) = (seq[0].0, seq[1].0, seq[2].0);
    if horizon < 3 {
        return Err(PlanError::Infeasible { label: st.label.clone() });
    }
    let climb = (horizon - 1) / 2;
    let descend = horizon - 1 - climb;
    let touchdown = 1 + descend;
    let mut modes = vec![hover];
    modes.extend(std::iter::repeat_n(land, descend));
    modes.extend(std::iter::repeat_n(takeoff, climb));
    let mut boxes = vec![mode_box(hover)?];
    for t in 1..=horizon {
        let mut b = if t <= touchdown { mode_box(land)? } else { mode_box(takeoff)? };
        if t == touchdown {
            b = intersect(&b, &rest_box(b.0.len()));
            b.0[IZ] = 0.0;
            b.1[IZ] = 0.0;
        }
        boxes.push(b);
    }
    Ok(Segment { label: &st.label, formula, horizon, modes, boxes, exit, min_len: touchdown + 1, reach_from: touchdown })
}

/// Plans one sub-task from `x0`. The returned trajectory may be shorter
/// than the horizon: it ends at the first step from which the target holds
/// through the horizon and the hand-over guard is met.
pub fn plan_subtask(st: &SubTask, x0: &[f64], ctx: &SubtaskContext<'_>) -> Result<SubtaskOutcome, PlanError> {
    if st.horizon == 0 {
        let trajectory = Trajectory::stationary(ctx.start, x0.to_vec());
        if holds_on(&resolve_unbounded(&st.formula, 0), ctx.workspace, &trajectory.positions()) {
            return Ok(SubtaskOutcome {
                trajectory,
                execution_steps: 0,
                objective: 0.0,
                nodes: 0,
                solve_seconds: 0.0,
                models: Vec::new(),
            });
        }
        return Err(PlanError::Infeasible { label: st.label.clone() });
    }
    let seg = build_segment(st, &st.formula, ctx)?;
    solve_segment(&seg, x0, ctx, true)
}

/// Same sub-task ignoring other vehicles.
pub(crate) fn plan_subtask_solo(st: &SubTask, x0: &[f64], ctx: &SubtaskContext<'_>) -> Result<SubtaskOutcome, PlanError> {
    let seg = build_segment(st, &st.formula, ctx)?;
    solve_segment(&seg, x0, ctx, false)
}

/// One hover step in place, keeping clear of obstacles and other vehicles.
pub(crate) fn plan_wait(x0: &[f64], label: &str, ctx: &SubtaskContext<'_>) -> Result<SubtaskOutcome, PlanError> {
    let avoid: Vec<Formula> = ctx
        .workspace
        .obstacles
        .iter()
        .map(|o| Formula::not(Formula::Atom(Proposition::new(o.clone()))))
        .collect();
    let formula = match avoid.len() {
        0 => Formula::True,
        1 => Formula::globally(avoid.into_iter().next().unwrap()),
        _ => Formula::globally(Formula::and(avoid)),
    };
    // Solve a few steps ahead so the executed hover step leaves a state
    // from which hovering can go on.
    let horizon = ctx.config.wait_lookahead.max(1);
    let hover = ctx.model.entry_box(ModeId::Hover);
    let seg = Segment {
        label,
        formula: &formula,
        horizon,
        modes: vec![ModeId::Hover; horizon],
        boxes: vec![hover.clone(); horizon + 1],
        exit: intersect(&hover, &rest_box(hover.0.len())),
        min_len: horizon,
        reach_from: 0,
    };
    let mut out = solve_segment(&seg, x0, ctx, true)?;
    let tr = &mut out.trajectory;
    tr.states.truncate(2);
    tr.inputs.truncate(1);
    tr.modes.truncate(1);
    out.execution_steps = 1;
    Ok(out)
}
