//! Compilation of formulas, dynamics and avoidance requirements into a
//! [`MilpModel`].
//!
//! Every halfspace test at a time step gets a binary `b` tied to the position
//! by a big-M pair (`b = 1` iff `h^T x <= a`). Formula nodes get continuous
//! indicators in `[0, 1]` constrained by the usual conjunction / disjunction
//! rows, and temporal operators unroll into conjunctions and disjunctions over
//! their windows. Nodes whose value is already decided (constant children, or
//! halfspaces the reachable box settles one way) are folded to constants
//! instead of getting variables.

pub mod model;
pub mod subtask;

use std::collections::HashMap;

use nalgebra::Vector3;
use thiserror::Error;

use crate::mtl::{horizon_of, resolve_unbounded, Formula, Proposition};
use crate::workspace::{Aabb, Halfspace, Workspace};
use model::{MilpModel, ModelError, Sense, VarId};

pub use subtask::{encode_subtask_problem, EncodedSubtask, ExitCondition, MovingObstacle, SubtaskSpec};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error("formula is not in negation normal form")]
    NotNnf,
    #[error("formula needs {needed} steps but the horizon is {horizon}")]
    HorizonTooShort { needed: usize, horizon: usize },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("big-M {m} does not dominate halfspace range {range} over the workspace")]
    BigMTooSmall { m: f64, range: f64 },
    #[error("invalid big-M configuration (M = {m}, epsilon = {epsilon})")]
    BadBigM { m: f64, epsilon: f64 },
    #[error("state dimension {got} does not match mode dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("obstacle track `{label}` covers {got} steps, {want} needed")]
    TimeWindowMismatch { label: String, got: usize, want: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BigMConfig {
    pub m: f64,
    pub epsilon: f64,
}

impl BigMConfig {
    /// `M` = twice the workspace diagonal, `epsilon` = 1e-6.
    pub fn for_workspace(w: &Workspace) -> Self {
        Self { m: 2.0 * w.bounds.diagonal(), epsilon: 1e-6 }
    }

    /// Checks `M` against the largest `|h^T x - a|` over the bounding box.
    pub fn validate(&self, bounds: &Aabb, halfspaces: &[&Halfspace]) -> Result<(), EncodeError> {
        if !(self.m > 0.0) || !(self.epsilon > 0.0) || self.epsilon >= 1e-2 {
            return Err(EncodeError::BadBigM { m: self.m, epsilon: self.epsilon });
        }
        for h in halfspaces {
            let (lo, hi) = h.range_over(&bounds.lo, &bounds.hi);
            let range = (hi - h.a).abs().max((lo - h.a).abs()) + self.epsilon;
            if range > self.m {
                return Err(EncodeError::BigMTooSmall { m: self.m, range });
            }
        }
        Ok(())
    }
}

/// Value of an encoded proposition: a constant, a `[0,1]` variable, or its complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lit {
    Const(bool),
    Pos(VarId),
    Neg(VarId),
}

impl Lit {
    pub fn negate(self) -> Lit {
        match self {
            Lit::Const(b) => Lit::Const(!b),
            Lit::Pos(v) => Lit::Neg(v),
            Lit::Neg(v) => Lit::Pos(v),
        }
    }

    /// `(variable term, constant)` such that the literal equals `coef * var + constant`.
    fn affine(self) -> (Option<(VarId, f64)>, f64) {
        match self {
            Lit::Const(b) => (None, if b { 1.0 } else { 0.0 }),
            Lit::Pos(v) => (Some((v, 1.0)), 0.0),
            Lit::Neg(v) => (Some((v, -1.0)), 1.0),
        }
    }

    /// Value of the literal under an assignment.
    pub fn value(self, values: &[f64]) -> f64 {
        match self {
            Lit::Const(b) => f64::from(u8::from(b)),
            Lit::Pos(v) => values[v.0],
            Lit::Neg(v) => 1.0 - values[v.0],
        }
    }
}

fn hs_key(h: &Halfspace, t: usize) -> ([u64; 4], usize) {
    ([h.h[0].to_bits(), h.h[1].to_bits(), h.h[2].to_bits(), h.a.to_bits()], t)
}

/// Incremental encoder over a fixed time grid of position variables.
pub struct Encoding<'w> {
    pub model: MilpModel,
    pub workspace: &'w Workspace,
    pub cfg: BigMConfig,
    /// Position variables per step.
    pub pos: Vec<[VarId; 3]>,
    /// Reachable position box per step, used for pruning and local big-M.
    pub boxes: Vec<Aabb>,
    pub tighten: bool,
    atom_cache: HashMap<(Proposition, usize), Lit>,
    hs_cache: HashMap<([u64; 4], usize), Lit>,
    node_cache: HashMap<(usize, usize), Lit>,
    contradiction: Option<VarId>,
}

impl<'w> Encoding<'w> {
    pub fn new(model: MilpModel, workspace: &'w Workspace, cfg: BigMConfig, pos: Vec<[VarId; 3]>, boxes: Vec<Aabb>, tighten: bool) -> Self {
        Self {
            model,
            workspace,
            cfg,
            pos,
            boxes,
            tighten,
            atom_cache: HashMap::new(),
            hs_cache: HashMap::new(),
            node_cache: HashMap::new(),
            contradiction: None,
        }
    }

    pub fn horizon(&self) -> usize {
        self.pos.len() - 1
    }

    /// Makes the model infeasible (used when an encoding step proves it).
    pub fn add_contradiction(&mut self, why: &str) -> Result<(), EncodeError> {
        let v = match self.contradiction {
            Some(v) => v,
            None => {
                let v = self.model.continuous("contradiction", 0.0, 0.0);
                self.contradiction = Some(v);
                v
            }
        };
        self.model.add_constraint(format!("infeasible_{why}"), [(v, 1.0)], Sense::Ge, 1.0)?;
        Ok(())
    }

    /// Binary indicator of `h^T x(t) <= a`.
    pub fn halfspace_lit(&mut self, h: &Halfspace, t: usize) -> Result<Lit, EncodeError> {
        let key = hs_key(h, t);
        if let Some(&l) = self.hs_cache.get(&key) {
            return Ok(l);
        }
        let eps = self.cfg.epsilon;
        let (m_in, m_out) = if self.tighten {
            let (min, max) = h.range_over(&self.boxes[t].lo, &self.boxes[t].hi);
            if max <= h.a {
                self.hs_cache.insert(key, Lit::Const(true));
                return Ok(Lit::Const(true));
            }
            if min >= h.a + eps {
                self.hs_cache.insert(key, Lit::Const(false));
                return Ok(Lit::Const(false));
            }
            (max - h.a, h.a + eps - min)
        } else {
            (self.cfg.m, self.cfg.m)
        };
        let idx = self.hs_cache.len();
        let b = self.model.binary(format!("b{idx}_t{t}"));
        let p = self.pos[t];
        let terms: Vec<(VarId, f64)> = (0..3).filter(|&k| h.h[k] != 0.0).map(|k| (p[k], h.h[k])).collect();
        // h x <= a + M (1 - b)
        let mut row: Vec<_> = terms.clone();
        row.push((b, m_in));
        self.model.add_constraint(format!("hs{idx}_in_t{t}"), row, Sense::Le, h.a + m_in)?;
        // h x >= a + eps - M b
        let mut row = terms;
        row.push((b, m_out));
        self.model.add_constraint(format!("hs{idx}_out_t{t}"), row, Sense::Ge, h.a + eps)?;
        let l = Lit::Pos(b);
        self.hs_cache.insert(key, l);
        Ok(l)
    }

    /// Conjunction indicator.
    pub fn and(&mut self, lits: &[Lit], tag: &str) -> Result<Lit, EncodeError> {
        let mut vars = Vec::new();
        for &l in lits {
            match l {
                Lit::Const(false) => return Ok(Lit::Const(false)),
                Lit::Const(true) => {}
                other => {
                    if !vars.contains(&other) {
                        vars.push(other);
                    }
                }
            }
        }
        match vars.len() {
            0 => return Ok(Lit::Const(true)),
            1 => return Ok(vars[0]),
            _ => {}
        }
        if vars.iter().any(|l| vars.contains(&l.negate())) {
            return Ok(Lit::Const(false));
        }
        let k = self.model.continuous(format!("K_{tag}"), 0.0, 1.0);
        let mut sum_row = vec![(k, 1.0)];
        let mut sum_const = 0.0;
        for (i, l) in vars.iter().enumerate() {
            let (term, c) = l.affine();
            let (v, coef) = term.expect("non-constant literal");
            // K <= l
            self.model.add_constraint(format!("and_{tag}_{i}"), [(k, 1.0), (v, -coef)], Sense::Le, c)?;
            sum_row.push((v, -coef));
            sum_const += c;
        }
        // K >= sum l - (n - 1)
        let n = vars.len() as f64;
        self.model.add_constraint(format!("and_{tag}_all"), sum_row, Sense::Ge, sum_const - (n - 1.0))?;
        Ok(Lit::Pos(k))
    }

    /// Disjunction indicator.
    pub fn or(&mut self, lits: &[Lit], tag: &str) -> Result<Lit, EncodeError> {
        let mut vars = Vec::new();
        for &l in lits {
            match l {
                Lit::Const(true) => return Ok(Lit::Const(true)),
                Lit::Const(false) => {}
                other => {
                    if !vars.contains(&other) {
                        vars.push(other);
                    }
                }
            }
        }
        match vars.len() {
            0 => return Ok(Lit::Const(false)),
            1 => return Ok(vars[0]),
            _ => {}
        }
        if vars.iter().any(|l| vars.contains(&l.negate())) {
            return Ok(Lit::Const(true));
        }
        let k = self.model.continuous(format!("K_{tag}"), 0.0, 1.0);
        let mut sum_row = vec![(k, 1.0)];
        let mut sum_const = 0.0;
        for (i, l) in vars.iter().enumerate() {
            let (term, c) = l.affine();
            let (v, coef) = term.expect("non-constant literal");
            // K >= l
            self.model.add_constraint(format!("or_{tag}_{i}"), [(k, 1.0), (v, -coef)], Sense::Ge, c)?;
            sum_row.push((v, -coef));
            sum_const += c;
        }
        // K <= sum l
        self.model.add_constraint(format!("or_{tag}_any"), sum_row, Sense::Le, sum_const)?;
        Ok(Lit::Pos(k))
    }

    /// Indicator of `p` holding at step `t`.
    pub fn atom_lit(&mut self, p: &Proposition, t: usize) -> Result<Lit, EncodeError> {
        if let Some(&l) = self.atom_cache.get(&(p.clone(), t)) {
            return Ok(l);
        }
        let parts = self.workspace.parts_of(p).ok_or_else(|| EncodeError::UnknownProposition(p.label()))?;
        let mut part_lits = Vec::with_capacity(parts.len());
        for (j, part) in parts.iter().enumerate() {
            let mut hs = Vec::with_capacity(part.halfspaces.len());
            for h in &part.halfspaces {
                hs.push(self.halfspace_lit(h, t)?);
                if hs.last() == Some(&Lit::Const(false)) {
                    break;
                }
            }
            part_lits.push(self.and(&hs, &format!("{}_p{j}_t{t}", p.label()))?);
        }
        let l = self.or(&part_lits, &format!("{}_t{t}", p.label()))?;
        self.atom_cache.insert((p.clone(), t), l);
        Ok(l)
    }

    /// Indicator of `f` holding at step `t`. `f` must be in NNF with bounded intervals.
    pub fn formula_lit(&mut self, f: &Formula, t: usize) -> Result<Lit, EncodeError> {
        let key = (f as *const Formula as usize, t);
        if let Some(&l) = self.node_cache.get(&key) {
            return Ok(l);
        }
        let tag = format!("n{}_t{t}", self.node_cache.len());
        let l = match f {
            Formula::True => Lit::Const(true),
            Formula::Atom(p) => self.atom_lit(p, t)?,
            Formula::Not(g) => match &**g {
                Formula::Atom(p) => self.atom_lit(p, t)?.negate(),
                Formula::True => Lit::Const(false),
                _ => return Err(EncodeError::NotNnf),
            },
            Formula::And(cs) => {
                let lits = cs.iter().map(|c| self.formula_lit(c, t)).collect::<Result<Vec<_>, _>>()?;
                self.and(&lits, &tag)?
            }
            Formula::Or(cs) => {
                let lits = cs.iter().map(|c| self.formula_lit(c, t)).collect::<Result<Vec<_>, _>>()?;
                self.or(&lits, &tag)?
            }
            Formula::Next(g) => self.formula_lit(g, t + 1)?,
            Formula::Eventually(i, g) | Formula::Always(i, g) => {
                let hi = i.hi.ok_or(EncodeError::NotNnf)?;
                let lits = (t + i.lo..=t + hi).map(|k| self.formula_lit(g, k)).collect::<Result<Vec<_>, _>>()?;
                if matches!(f, Formula::Eventually(..)) {
                    self.or(&lits, &tag)?
                } else {
                    self.and(&lits, &tag)?
                }
            }
            Formula::Until(i, p, q) => {
                let hi = i.hi.ok_or(EncodeError::NotNnf)?;
                let ps = (t..t + hi).map(|k| self.formula_lit(p, k)).collect::<Result<Vec<_>, _>>()?;
                let mut cs = Vec::new();
                for j in t + i.lo..=t + hi {
                    let mut conj = vec![self.formula_lit(q, j)?];
                    conj.extend_from_slice(&ps[..j - t]);
                    cs.push(self.and(&conj, &format!("{tag}_c{j}"))?);
                }
                self.or(&cs, &tag)?
            }
        };
        self.node_cache.insert(key, l);
        Ok(l)
    }

    /// Requires `lit` to hold.
    pub fn require(&mut self, lit: Lit, why: &str) -> Result<(), EncodeError> {
        match lit {
            Lit::Const(true) => Ok(()),
            Lit::Const(false) => self.add_contradiction(why),
            Lit::Pos(v) => {
                let var = &mut self.model.vars[v.0];
                var.lower = var.lower.max(1.0);
                if var.lower > var.upper {
                    self.add_contradiction(why)?;
                    self.model.vars[v.0].lower = self.model.vars[v.0].upper;
                }
                Ok(())
            }
            Lit::Neg(v) => {
                let var = &mut self.model.vars[v.0];
                var.upper = var.upper.min(0.0);
                if var.lower > var.upper {
                    self.add_contradiction(why)?;
                    self.model.vars[v.0].upper = self.model.vars[v.0].lower;
                }
                Ok(())
            }
        }
    }
}

/// Encodes `f` (NNF; untimed operators are resolved over the horizon) at step
/// 0 and requires it to hold. Returns the root literal.
pub fn encode_formula(enc: &mut Encoding<'_>, f: &Formula) -> Result<Lit, EncodeError> {
    if !f.is_nnf() {
        return Err(EncodeError::NotNnf);
    }
    let horizon = enc.horizon();
    let resolved = resolve_unbounded(f, horizon);
    let needed = horizon_of(&resolved);
    if needed > horizon {
        return Err(EncodeError::HorizonTooShort { needed, horizon });
    }
    let root = enc.formula_lit(&resolved, 0)?;
    enc.require(root, "formula")?;
    Ok(root)
}

/// A 1D-friendly helper: position grid with given bounds per step and no dynamics.
pub fn free_position_grid(model: &mut MilpModel, bounds: &Aabb, steps: usize) -> Vec<[VarId; 3]> {
    (0..steps)
        .map(|t| {
            let v = |m: &mut MilpModel, k: usize, n: &str| m.continuous(format!("{n}_t{t}"), bounds.lo[k], bounds.hi[k]);
            [v(model, 0, "x"), v(model, 1, "y"), v(model, 2, "z")]
        })
        .collect()
}

/// Whether a box lies entirely farther than `rho` (infinity norm) from `p`.
pub fn box_farther_than(b: &Aabb, p: &Vector3<f64>, rho: f64) -> bool {
    (0..3).any(|k| p[k] < b.lo[k] - rho || p[k] > b.hi[k] + rho)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::solver::{solve_milp, SolveStatus, SolverConfig};
    use crate::workspace::{ConvexPolytope, Region};

    fn line_workspace() -> Workspace {
        let r = Region::new("r", vec![ConvexPolytope::from_box([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])]);
        Workspace::new(Aabb::new([-1.0, 0.0, 0.0], [3.0, 1.0, 1.0]), vec![r], BTreeSet::new()).unwrap()
    }

    fn fixed_track<'w>(w: &'w Workspace, xs: &[f64], tighten: bool) -> Encoding<'w> {
        let mut m = MilpModel::new("t");
        let pos = free_position_grid(&mut m, &w.bounds, xs.len());
        for (t, &x) in xs.iter().enumerate() {
            m.fix(pos[t][0], x);
            m.fix(pos[t][1], 0.5);
            m.fix(pos[t][2], 0.5);
        }
        let boxes = xs.iter().map(|&x| Aabb::new([x, 0.5, 0.5], [x, 0.5, 0.5])).collect();
        Encoding::new(m, w, BigMConfig::for_workspace(w), pos, boxes, tighten)
    }

    fn feasible(enc: Encoding<'_>) -> bool {
        solve_milp(&enc.model, &SolverConfig::default()).unwrap().status == SolveStatus::Optimal
    }

    #[test]
    fn inside_point_forces_indicator_on() {
        let w = line_workspace();
        let mut enc = fixed_track(&w, &[0.5], false);
        let l = enc.atom_lit(&Proposition::new("r"), 0).unwrap();
        let s = solve_milp(&enc.model, &SolverConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(l.value(&s.values), 1.0);
        // forcing the indicator off is infeasible
        enc.require(l.negate(), "test").unwrap();
        assert!(!feasible(enc));
    }

    #[test]
    fn halfspace_rows_follow_the_indicator() {
        let w = line_workspace();
        let h = Halfspace::new([1.0, 0.0, 0.0], 1.0).unwrap();
        // b = 1 with h x = a + 0.1 violates the inside row
        let mut enc = fixed_track(&w, &[1.1], false);
        let b = enc.halfspace_lit(&h, 0).unwrap();
        enc.require(b, "in").unwrap();
        assert!(!feasible(enc));
        // b = 0 with h x = a - 0.1 violates the outside row
        let mut enc = fixed_track(&w, &[0.9], false);
        let b = enc.halfspace_lit(&h, 0).unwrap();
        enc.require(b.negate(), "out").unwrap();
        assert!(!feasible(enc));
    }

    #[test]
    fn always_over_true_leaves_is_forced_true() {
        let w = line_workspace();
        let mut enc = fixed_track(&w, &[0.5, 0.5, 0.5], false);
        let f = Formula::always(0, 2, Formula::atom("r"));
        let l = enc.formula_lit(&f, 0).unwrap();
        let s = solve_milp(&enc.model, &SolverConfig::default()).unwrap();
        assert_eq!(l.value(&s.values), 1.0);
    }

    #[test]
    fn until_with_late_q() {
        let w = line_workspace();
        // p = r, q = !r: r at t=0, not r at t=1
        let mut enc = fixed_track(&w, &[0.5, 2.0], false);
        let f = Formula::until(0, 1, Formula::atom("r"), Formula::not(Formula::atom("r")));
        encode_formula(&mut enc, &f).unwrap();
        assert!(feasible(enc));
    }

    #[test]
    fn tightening_folds_decided_halfspaces() {
        let w = line_workspace();
        let mut enc = fixed_track(&w, &[0.5, 2.0], true);
        assert_eq!(enc.atom_lit(&Proposition::new("r"), 0).unwrap(), Lit::Const(true));
        assert_eq!(enc.atom_lit(&Proposition::new("r"), 1).unwrap(), Lit::Const(false));
        assert_eq!(enc.model.num_binaries(), 0);
    }

    #[test]
    fn big_m_must_dominate_the_box() {
        let w = line_workspace();
        let h = Halfspace::new([1.0, 0.0, 0.0], 1.0).unwrap();
        let cfg = BigMConfig { m: 1.0, epsilon: 1e-6 };
        assert!(matches!(cfg.validate(&w.bounds, &[&h]), Err(EncodeError::BigMTooSmall { .. })));
        assert!(BigMConfig::for_workspace(&w).validate(&w.bounds, &[&h]).is_ok());
    }

    #[test]
    fn horizon_too_short_is_reported() {
        let w = line_workspace();
        let mut enc = fixed_track(&w, &[0.5, 0.5], false);
        let f = Formula::eventually(0, 3, Formula::atom("r"));
        assert_eq!(encode_formula(&mut enc, &f), Err(EncodeError::HorizonTooShort { needed: 3, horizon: 1 }));
    }
}
