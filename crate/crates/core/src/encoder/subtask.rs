//! One sub-task as a MILP: dynamics rows, input effort, the formula, the
//! exit guard and avoidance of previously planned vehicles.

use nalgebra::Vector3;

use super::model::{MilpModel, Sense, VarId, VarRole};
use super::{encode_formula, box_farther_than, BigMConfig, EncodeError, Encoding, Lit};
use crate::dynamics::{DiscreteMode, IX, IY, IZ};
use crate::mtl::{horizon_of, Formula};
use crate::workspace::{Aabb, Workspace};

/// Planned positions of another vehicle over the sub-task window, indexed by
/// step relative to the sub-task start.
#[derive(Clone, Debug, PartialEq)]
pub struct MovingObstacle {
    pub label: String,
    pub positions: Vec<Vector3<f64>>,
    /// First step at which separation is enforced (at least 1).
    pub from: usize,
}

/// Requirement on the final state of the sub-task.
#[derive(Clone, Debug, PartialEq)]
pub enum ExitCondition {
    Free,
    /// Per-component box on `x(T)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

pub struct SubtaskSpec<'a> {
    pub label: &'a str,
    pub uav: usize,
    /// NNF formula; untimed operators are resolved over `horizon`.
    pub formula: &'a Formula,
    pub mode: &'a DiscreteMode,
    /// Per-step state boxes replacing the mode box, indexed by step (entry 0 unused).
    pub state_boxes: Option<&'a [(Vec<f64>, Vec<f64>)]>,
    pub x0: &'a [f64],
    pub horizon: usize,
    pub workspace: &'a Workspace,
    pub cfg: BigMConfig,
    /// Fold halfspaces decided by the reachable box and size big-M locally.
    pub tighten: bool,
    /// Weight of the reward for reaching the primary target early and staying.
    pub arrival_weight: f64,
    /// Require the primary target to hold at the last step.
    pub hold_reach_at_end: bool,
    pub exit: ExitCondition,
    pub others: &'a [MovingObstacle],
    pub separation: f64,
    pub rho: f64,
}

#[derive(Debug)]
pub struct EncodedSubtask {
    pub model: MilpModel,
    pub states: Vec<Vec<VarId>>,
    pub inputs: Vec<Vec<VarId>>,
    pub root: Lit,
    /// Indicator of the primary target per step, where its horizon fits.
    pub reach: Vec<Lit>,
    pub avoidance_binaries: usize,
}

/// Operand of the first top-level `F`, the proposition the sub-task drives towards.
pub fn primary_reach(f: &Formula) -> Option<&Formula> {
    match f {
        Formula::Eventually(_, g) => Some(g),
        Formula::And(cs) => cs.iter().find_map(|c| match c {
            Formula::Eventually(_, g) => Some(&**g),
            _ => None,
        }),
        _ => None,
    }
}

/// State box admitted at step `t >= 1`.
fn admitted_box<'a>(spec: &'a SubtaskSpec<'_>, t: usize) -> (&'a [f64], &'a [f64]) {
    match spec.state_boxes {
        Some(b) => (&b[t].0, &b[t].1),
        None => (&spec.mode.mode.x_min, &spec.mode.mode.x_max),
    }
}

/// Interval propagation of the state box through the dynamics, clamped to
/// the admitted box and the workspace bounds from step 1 on.
pub fn reach_boxes(spec: &SubtaskSpec<'_>) -> Vec<(Vec<f64>, Vec<f64>)> {
    let x0 = spec.x0;
    let n = x0.len();
    let (ad, bd) = (&spec.mode.ad, &spec.mode.bd);
    let m = &spec.mode.mode;
    let bounds = spec.workspace.bounds;
    let mut out = vec![(x0.to_vec(), x0.to_vec())];
    for t in 1..=spec.horizon {
        let (x_min, x_max) = admitted_box(spec, t);
        let (lo, hi) = out.last().unwrap();
        let mut nlo = vec![0.0; n];
        let mut nhi = vec![0.0; n];
        for i in 0..n {
            for k in 0..n {
                let c = ad[(i, k)];
                if c != 0.0 {
                    let (a, b) = (c * lo[k], c * hi[k]);
                    nlo[i] += a.min(b);
                    nhi[i] += a.max(b);
                }
            }
            for j in 0..bd.ncols() {
                let c = bd[(i, j)];
                if c != 0.0 {
                    let (a, b) = (c * m.u_min[j], c * m.u_max[j]);
                    nlo[i] += a.min(b);
                    nhi[i] += a.max(b);
                }
            }
            nlo[i] = nlo[i].max(x_min[i]);
            nhi[i] = nhi[i].min(x_max[i]);
        }
        for k in 0..3 {
            nlo[k] = nlo[k].max(bounds.lo[k]);
            nhi[k] = nhi[k].min(bounds.hi[k]);
        }
        out.push((nlo, nhi));
    }
    out
}

/// Builds the sub-task MILP.
pub fn encode_subtask_problem(spec: &SubtaskSpec<'_>) -> Result<EncodedSubtask, EncodeError> {
    let n = spec.mode.ad.nrows();
    let nu = spec.mode.bd.ncols();
    if spec.x0.len() != n {
        return Err(EncodeError::DimensionMismatch { got: spec.x0.len(), want: n });
    }
    let horizon = spec.horizon;
    if spec.state_boxes.is_some_and(|b| b.len() < horizon + 1) {
        return Err(EncodeError::DimensionMismatch { got: spec.state_boxes.map_or(0, |b| b.len()), want: horizon + 1 });
    }
    for o in spec.others {
        if o.positions.len() < horizon + 1 {
            return Err(EncodeError::TimeWindowMismatch { label: o.label.clone(), got: o.positions.len(), want: horizon + 1 });
        }
    }
    let mode = &spec.mode.mode;
    let bounds = spec.workspace.bounds;
    let mut model = MilpModel::new(spec.label);
    let mut empty_box = false;

    let boxes = if spec.tighten {
        reach_boxes(spec)
    } else {
        let mut b = vec![(spec.x0.to_vec(), spec.x0.to_vec())];
        for t in 1..=horizon {
            let (lo, hi) = admitted_box(spec, t);
            let (mut lo, mut hi) = (lo.to_vec(), hi.to_vec());
            for k in 0..3 {
                lo[k] = lo[k].max(bounds.lo[k]);
                hi[k] = hi[k].min(bounds.hi[k]);
            }
            b.push((lo, hi));
        }
        b
    };

    let mut states = Vec::with_capacity(horizon + 1);
    for (t, (lo, hi)) in boxes.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for i in 0..n {
            let (mut l, mut h) = (lo[i], hi[i]);
            if t == horizon {
                if let ExitCondition::Box { lo: el, hi: eh } = &spec.exit {
                    l = l.max(el[i]);
                    h = h.min(eh[i]);
                }
            }
            if l > h {
                if l - h > 1e-9 {
                    empty_box = true;
                }
                let mid = 0.5 * (l + h);
                (l, h) = (mid, mid);
            }
            let v = model.continuous(format!("x{i}_t{t}"), l, h);
            model.roles.insert(v, VarRole::State { uav: spec.uav, t, component: i });
            row.push(v);
        }
        states.push(row);
    }

    let mut inputs = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let mut row = Vec::with_capacity(nu);
        for j in 0..nu {
            let u = model.continuous(format!("u{j}_t{t}"), mode.u_min[j], mode.u_max[j]);
            model.roles.insert(u, VarRole::Input { uav: spec.uav, t, channel: j });
            let s = model.continuous(format!("s{j}_t{t}"), 0.0, mode.u_min[j].abs().max(mode.u_max[j].abs()));
            model.add_constraint(format!("abs_pos{j}_t{t}"), [(s, 1.0), (u, -1.0)], Sense::Ge, 0.0)?;
            model.add_constraint(format!("abs_neg{j}_t{t}"), [(s, 1.0), (u, 1.0)], Sense::Ge, 0.0)?;
            model.add_objective(s, 1.0);
            row.push(u);
        }
        inputs.push(row);
    }

    for t in 0..horizon {
        for i in 0..n {
            let mut row = vec![(states[t + 1][i], 1.0)];
            for k in 0..n {
                let c = spec.mode.ad[(i, k)];
                if c != 0.0 {
                    row.push((states[t][k], -c));
                }
            }
            for j in 0..nu {
                let c = spec.mode.bd[(i, j)];
                if c != 0.0 {
                    row.push((inputs[t][j], -c));
                }
            }
            model.add_constraint(format!("dyn{i}_t{t}"), row, Sense::Eq, 0.0)?;
        }
    }

    let pos: Vec<[VarId; 3]> = states.iter().map(|s| [s[IX], s[IY], s[IZ]]).collect();
    let aabbs: Vec<Aabb> = boxes
        .iter()
        .map(|(lo, hi)| Aabb::new([lo[IX], lo[IY], lo[IZ]], [hi[IX], hi[IY], hi[IZ]]))
        .collect();
    let mut enc = Encoding::new(model, spec.workspace, spec.cfg, pos, aabbs, spec.tighten);
    if empty_box {
        enc.add_contradiction("state_box")?;
    }

    let root = encode_formula(&mut enc, spec.formula)?;

    let mut reach = Vec::new();
    if let Some(target) = primary_reach(spec.formula) {
        let h = horizon_of(target);
        for t in 0..=horizon.saturating_sub(h) {
            if h <= horizon {
                reach.push(enc.formula_lit(target, t)?);
            }
        }
        if spec.hold_reach_at_end {
            if let Some(&last) = reach.last() {
                enc.require(last, "reach_at_end")?;
            }
        }
        if spec.arrival_weight > 0.0 && !reach.is_empty() {
            let mut prev: Option<VarId> = None;
            for (t, &l) in reach.iter().enumerate().rev() {
                let r = enc.model.continuous(format!("arrive_t{t}"), 0.0, 1.0);
                let (term, c) = l.affine();
                let mut row = vec![(r, 1.0)];
                if let Some((v, coef)) = term {
                    row.push((v, -coef));
                }
                enc.model.add_constraint(format!("arrive_reach_t{t}"), row, Sense::Le, c)?;
                if let Some(p) = prev {
                    enc.model.add_constraint(format!("arrive_stay_t{t}"), [(r, 1.0), (p, -1.0)], Sense::Le, 0.0)?;
                }
                enc.model.add_objective(r, -spec.arrival_weight);
                prev = Some(r);
            }
        }
    }

    let before = enc.model.num_binaries();
    encode_neighbor_avoidance(&mut enc, spec.others, spec.separation, spec.rho)?;
    let avoidance_binaries = enc.model.num_binaries() - before;

    Ok(EncodedSubtask { model: enc.model, states, inputs, root, reach, avoidance_binaries })
}

/// Keeps the own position outside an axis-aligned box of half-width
/// `separation` around each other vehicle at every step after the first.
pub fn encode_neighbor_avoidance(enc: &mut Encoding<'_>, others: &[MovingObstacle], separation: f64, rho: f64) -> Result<(), EncodeError> {
    let horizon = enc.horizon();
    for (o_idx, other) in others.iter().enumerate() {
        if other.positions.len() < horizon + 1 {
            return Err(EncodeError::TimeWindowMismatch { label: other.label.clone(), got: other.positions.len(), want: horizon + 1 });
        }
        // the start state is fixed by the previous segment
        for t in other.from.max(1)..=horizon {
            let p = other.positions[t];
            let b = enc.boxes[t];
            if enc.tighten && box_farther_than(&b, &p, rho.max(separation)) {
                continue;
            }
            let mut escapes = Vec::new();
            let mut already_clear = false;
            for k in 0..3 {
                let above = p[k] + separation;
                let below = p[k] - separation;
                for (upper_side, edge) in [(true, above), (false, below)] {
                    let (m, possible, certain) = if enc.tighten {
                        if upper_side {
                            (edge - b.lo[k], b.hi[k] >= edge, b.lo[k] >= edge)
                        } else {
                            (b.hi[k] - edge, b.lo[k] <= edge, b.hi[k] <= edge)
                        }
                    } else {
                        (enc.cfg.m, true, false)
                    };
                    if certain {
                        already_clear = true;
                    }
                    if possible {
                        escapes.push((k, upper_side, edge, m));
                    }
                }
            }
            if already_clear {
                continue;
            }
            if escapes.is_empty() {
                enc.add_contradiction(&format!("avoid{o_idx}_t{t}"))?;
                continue;
            }
            let mut sum = Vec::with_capacity(escapes.len());
            for (e_idx, (k, upper_side, edge, m)) in escapes.into_iter().enumerate() {
                let e = enc.model.binary(format!("esc{o_idx}_{e_idx}_t{t}"));
                let x = enc.pos[t][k];
                if upper_side {
                    // x >= edge - M (1 - e)
                    enc.model.add_constraint(format!("esc{o_idx}_{e_idx}_t{t}"), [(x, 1.0), (e, -m)], Sense::Ge, edge - m)?;
                } else {
                    // x <= edge + M (1 - e)
                    enc.model.add_constraint(format!("esc{o_idx}_{e_idx}_t{t}"), [(x, 1.0), (e, m)], Sense::Le, edge + m)?;
                }
                sum.push((e, 1.0));
            }
            enc.model.add_constraint(format!("avoid{o_idx}_t{t}"), sum, Sense::Ge, 1.0)?;
        }
    }
    Ok(())
}
