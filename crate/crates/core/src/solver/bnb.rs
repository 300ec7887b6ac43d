//! Best-bound branch-and-bound over binary variables.
//!
//! Nodes only record the binaries they fix. A node's relaxation is solved by
//! cloning the tableau of its parent when that is still cached, or the root
//! tableau otherwise, applying the fixings and re-optimizing with the dual
//! simplex. Branching picks the most fractional binary (lowest id on ties);
//! the child rounding towards the LP value is created first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::debug;

use super::simplex::{LpOutcome, Tableau};
use super::{LpSolution, SolveStatus, SolverConfig, SolverError, FEAS_TOL};
use crate::encoder::model::{MilpModel, VarId, VarKind};

const INT_TOL: f64 = 1e-7;
const BOUND_SLACK: f64 = 1e-6;

#[derive(Clone, Debug)]
struct Node {
    id: usize,
    parent: usize,
    depth: usize,
    bound: f64,
    /// (column, value) pairs fixed along the path from the root.
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    /// Max-heap order: smaller bound first, then deeper, then older.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
}

/// Solves `model` to the relative `cfg.gap`, branching on its binaries.
pub fn solve_milp(model: &MilpModel, cfg: &SolverConfig) -> Result<LpSolution, SolverError> {
    model.validate()?;
    let start = Instant::now();
    let deadline = start + cfg.time_budget;
    let mut root = Tableau::new(model, cfg.pivot_limit, Some(deadline));
    let out = root.solve();
    let mut pivots = root.pivots;
    match out {
        LpOutcome::Optimal => {}
        LpOutcome::TimeLimit => {
            return Ok(LpSolution::without_solution(SolveStatus::BudgetNoIncumbent, "time budget".into(), pivots))
        }
        other => {
            return Ok(LpSolution::without_solution(super::outcome_status(other), root.certificate.clone(), pivots))
        }
    }
    let binaries: Vec<(VarId, usize)> = model
        .vars
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .filter_map(|(i, _)| root.var_col[i].map(|c| (VarId(i), c)))
        .collect();

    let mut heap = BinaryHeap::new();
    let root_bound = root.objective();
    heap.push(Node { id: 0, parent: usize::MAX, depth: 0, bound: root_bound, fixes: Vec::new() });
    let mut next_id = 1;
    let mut incumbent: Option<Incumbent> = None;
    let mut nodes = 0usize;
    let mut unresolved = false;
    // Tableau of the most recently branched node, used to warm-start its children.
    let mut cached: Option<(usize, Tableau)> = None;
    let mut best_bound = root_bound;

    while let Some(node) = heap.pop() {
        best_bound = node.bound;
        if let Some(inc) = &incumbent {
            if node.bound >= inc.objective - gap_abs(cfg.gap, inc.objective) {
                best_bound = inc.objective;
                heap.clear();
                break;
            }
        }
        if Instant::now() >= deadline {
            heap.push(node);
            return Ok(finish_on_budget(incumbent, nodes, pivots, best_bound));
        }
        nodes += 1;

        let tab = if node.id == 0 {
            root.clone()
        } else {
            let (base, applied) = match &cached {
                Some((id, t)) if *id == node.parent => (t.clone(), node.fixes.len() - 1),
                _ => (root.clone(), 0),
            };
            let mut tab = base;
            tab.reset_pivot_count();
            for &(col, v) in &node.fixes[applied..] {
                tab.set_bounds(col, v, v);
            }
            let out = tab.reoptimize();
            pivots += tab.pivots;
            match out {
                LpOutcome::Optimal => {}
                LpOutcome::Infeasible => continue,
                LpOutcome::TimeLimit => {
                    heap.push(node);
                    return Ok(finish_on_budget(incumbent, nodes, pivots, best_bound));
                }
                LpOutcome::Unbounded | LpOutcome::IterationLimit => {
                    unresolved = true;
                    continue;
                }
            }
            tab
        };
        let obj = tab.objective();
        debug_assert!(
            obj >= node.bound - BOUND_SLACK * (1.0 + node.bound.abs()),
            "child relaxation {obj} below parent bound {}",
            node.bound
        );
        if let Some(inc) = &incumbent {
            if obj >= inc.objective - gap_abs(cfg.gap, inc.objective) {
                continue;
            }
        }

        let mut branch: Option<(VarId, usize, f64)> = None;
        let mut best_frac = INT_TOL;
        for &(v, col) in &binaries {
            let x = tab.column_value(col);
            let frac = (x - x.round()).abs();
            if frac > best_frac {
                best_frac = frac;
                branch = Some((v, col, x));
            }
        }

        match branch {
            None => {
                if let Some(cand) = polish(model, &root, &tab, &binaries, cfg) {
                    let better = incumbent.as_ref().is_none_or(|inc| cand.objective < inc.objective);
                    if better {
                        debug!("incumbent {:.6} after {} nodes", cand.objective, nodes);
                        incumbent = Some(cand);
                    }
                }
            }
            Some((_, col, x)) => {
                let near = x.round().clamp(0.0, 1.0);
                for value in [near, 1.0 - near] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((col, value));
                    heap.push(Node { id: next_id, parent: node.id, depth: node.depth + 1, bound: obj, fixes });
                    next_id += 1;
                }
                cached = Some((node.id, tab));
            }
        }
    }

    match incumbent {
        Some(inc) => {
            let status = if unresolved { SolveStatus::IterationLimit } else { SolveStatus::Optimal };
            let bound = if unresolved { best_bound.min(inc.objective) } else { inc.objective };
            Ok(LpSolution {
                status,
                objective: inc.objective,
                values: inc.values,
                certificate: String::new(),
                nodes,
                pivots,
                best_bound: bound,
            })
        }
        None => {
            let status = if unresolved { SolveStatus::IterationLimit } else { SolveStatus::Infeasible };
            let mut s = LpSolution::without_solution(status, "every branch-and-bound node is infeasible".into(), pivots);
            s.nodes = nodes;
            Ok(s)
        }
    }
}

fn gap_abs(gap: f64, incumbent: f64) -> f64 {
    gap * incumbent.abs().max(1.0)
}

fn finish_on_budget(incumbent: Option<Incumbent>, nodes: usize, pivots: usize, best_bound: f64) -> LpSolution {
    match incumbent {
        Some(inc) => LpSolution {
            status: SolveStatus::TimeLimit,
            objective: inc.objective,
            values: inc.values,
            certificate: "time budget exhausted".into(),
            nodes,
            pivots,
            best_bound,
        },
        None => {
            let mut s = LpSolution::without_solution(SolveStatus::BudgetNoIncumbent, "time budget exhausted".into(), pivots);
            s.nodes = nodes;
            s.best_bound = best_bound;
            s
        }
    }
}

/// Snaps binaries to 0/1, re-solves the remaining LP and checks feasibility.
fn polish(
    model: &MilpModel,
    root: &Tableau,
    node_tab: &Tableau,
    binaries: &[(VarId, usize)],
    cfg: &SolverConfig,
) -> Option<Incumbent> {
    let mut tab = root.clone();
    tab.reset_pivot_count();
    for &(_, col) in binaries {
        let v = node_tab.column_value(col).round().clamp(0.0, 1.0);
        tab.set_bounds(col, v, v);
    }
    let mut values = None;
    if tab.reoptimize() == LpOutcome::Optimal {
        let vals = tab.model_values();
        if model.max_violation(&vals) <= FEAS_TOL {
            values = Some((tab.objective(), vals));
        }
    }
    if values.is_none() {
        // Cold re-solve on the model with binaries fixed.
        let mut fixed = model.clone();
        for &(v, col) in binaries {
            fixed.fix(v, node_tab.column_value(col).round().clamp(0.0, 1.0));
        }
        let mut cold = Tableau::new(&fixed, cfg.pivot_limit, None);
        if cold.solve() == LpOutcome::Optimal {
            let vals = cold.model_values();
            if model.max_violation(&vals) <= FEAS_TOL {
                values = Some((cold.objective(), vals));
            }
        }
    }
    let (objective, mut vals) = values?;
    for &(v, _) in binaries {
        vals[v.0] = vals[v.0].round();
    }
    Some(Incumbent { objective, values: vals })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::model::Sense;

    #[test]
    fn knapsack() {
        let mut m = MilpModel::new("knap");
        let a = m.binary("a");
        let b = m.binary("b");
        m.add_constraint("cap", [(a, 1.0), (b, 1.0)], Sense::Le, 1.0).unwrap();
        m.add_objective(a, -3.0);
        m.add_objective(b, -2.0);
        let s = solve_milp(&m, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective + 3.0).abs() < 1e-9);
        assert_eq!(s.values, vec![1.0, 0.0]);
    }

    #[test]
    fn integral_relaxation_needs_no_branching() {
        let mut m = MilpModel::new("int");
        let a = m.binary("a");
        let x = m.continuous("x", 0.0, 5.0);
        m.add_constraint("c", [(a, 1.0), (x, 1.0)], Sense::Le, 3.0).unwrap();
        m.add_objective(a, -1.0);
        m.add_objective(x, -1.0);
        let s = solve_milp(&m, &SolverConfig::default()).unwrap();
        assert_eq!(s.nodes, 1);
        assert!((s.objective + 3.0).abs() < 1e-9);
    }

    #[test]
    fn half_forced_binary_is_infeasible() {
        let mut m = MilpModel::new("half");
        let a = m.binary("a");
        m.add_constraint("lo", [(a, 1.0)], Sense::Ge, 0.5).unwrap();
        m.add_constraint("hi", [(a, 1.0)], Sense::Le, 0.5).unwrap();
        let s = solve_milp(&m, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
        assert!(s.nodes >= 2);
    }
}
