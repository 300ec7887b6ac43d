//! Independent checks of planned trajectories: formula truth on the labeled
//! trace, workspace bounds and pairwise separation.

use std::fmt;

use nalgebra::Vector3;

use super::Trajectory;
use crate::mtl::{evaluate_at, horizon_of, Formula, Trace};
use crate::workspace::{Workspace, CONTAINMENT_TOL};

/// Slack allowed on the separation distance, covering solver tolerances.
pub const SEPARATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Step relative to the start of the checked trajectory.
    pub t: usize,
    pub what: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={}: {}", self.t, self.what)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Verification {
    pub violations: Vec<Violation>,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.iter().min_by_key(|v| v.t)
    }
}

/// Labels of each position, with the last one repeated up to `min_len` steps.
pub fn label_trace(w: &Workspace, positions: &[Vector3<f64>], min_len: usize) -> Trace {
    let mut labels: Vec<_> = positions.iter().map(|p| w.label_unchecked(p)).collect();
    while labels.len() < min_len {
        labels.push(labels.last().cloned().unwrap_or_default());
    }
    Trace::new(labels)
}

/// Truth of `f` at step 0 of the labeled positions; a trace shorter than the
/// formula horizon is padded with its last state.
pub fn holds_on(f: &Formula, w: &Workspace, positions: &[Vector3<f64>]) -> bool {
    let tr = label_trace(w, positions, horizon_of(f) + 1);
    evaluate_at(f, &tr, 0).unwrap_or(false)
}

/// Earliest step that explains why `f` fails on `tr`.
fn locate(f: &Formula, tr: &Trace, t: usize) -> Option<(usize, String)> {
    if evaluate_at(f, tr, t).unwrap_or(false) {
        return None;
    }
    match f {
        Formula::And(cs) => cs.iter().filter_map(|c| locate(c, tr, t)).min_by_key(|(k, _)| *k),
        Formula::Always(i, g) => {
            let hi = match i.hi {
                Some(hi) => t + hi,
                None => (tr.len() - 1).saturating_sub(horizon_of(g)).max(t + i.lo),
            };
            (t + i.lo..=hi).find_map(|k| locate(g, tr, k).map(|(_, w)| (k, w)))
        }
        Formula::Eventually(i, _) => {
            let hi = i.hi.map_or(tr.len() - 1, |hi| t + hi);
            Some((hi.min(tr.len() - 1), format!("deadline of {f} missed")))
        }
        Formula::Not(g) => Some((t, format!("{g} holds"))),
        _ => Some((t, format!("{f} does not hold"))),
    }
}

/// Pairwise check of `tr` against `f`, the workspace and other trajectories.
/// Separation is checked at every absolute step both trajectories cover.
pub fn verify_trajectory(tr: &Trajectory, f: &Formula, w: &Workspace, others: &[Trajectory], separation: f64) -> Verification {
    let mut violations = Vec::new();
    let positions = tr.positions();
    for (t, p) in positions.iter().enumerate() {
        if !w.bounds.contains(p, CONTAINMENT_TOL) {
            violations.push(Violation { t, what: format!("position {:?} outside the workspace", p.as_slice()) });
        }
    }
    let trace = label_trace(w, &positions, horizon_of(f) + 1);
    if let Some((t, what)) = locate(f, &trace, 0) {
        violations.push(Violation { t, what });
    }
    for (j, o) in others.iter().enumerate() {
        let lo = tr.start.max(o.start);
        let hi = tr.end().min(o.end());
        for abs in lo..=hi {
            if lo > hi {
                break;
            }
            let (a, b) = (tr.position_at(abs).unwrap(), o.position_at(abs).unwrap());
            let d = (a - b).amax();
            if d < separation - SEPARATION_TOL {
                violations.push(Violation { t: abs - tr.start, what: format!("separation {d:.4} from trajectory {j} below {separation}") });
                break;
            }
        }
    }
    violations.sort_by_key(|v| v.t);
    Verification { violations }
}

/// Smallest infinity-norm distance over all pairs and all common steps, with
/// the step and pair where it occurs.
pub fn min_separation(trajectories: &[Trajectory]) -> Option<(f64, usize, usize, usize)> {
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for i in 0..trajectories.len() {
        for j in 0..i {
            let (a, b) = (&trajectories[i], &trajectories[j]);
            let lo = a.start.max(b.start);
            let hi = a.end().min(b.end());
            if lo > hi {
                continue;
            }
            for t in lo..=hi {
                let d = (a.position_at(t).unwrap() - b.position_at(t).unwrap()).amax();
                if best.is_none_or(|(bd, ..)| d < bd) {
                    best = Some((d, t, j, i));
                }
            }
        }
    }
    best
}
