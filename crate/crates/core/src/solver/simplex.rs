//! Dense bounded-variable simplex.
//!
//! Every row gets a slack so that rows read `a x + s = b` with the slack's
//! bounds encoding the row sense. Rows whose slack starts out of bounds get an
//! artificial column and phase one minimizes the artificial sum. The tableau
//! keeps `B^-1 [A | I | art]` explicitly, which makes the slack block equal to
//! `B^-1` and lets the dual simplex re-optimize after bound changes.

use std::time::Instant;

use crate::encoder::model::{MilpModel, Sense, VarId};

pub(crate) const PRIMAL_TOL: f64 = 1e-9;
pub(crate) const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
pub(crate) const DEGENERATE_SWITCH: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

#[derive(Clone, Debug)]
pub(crate) struct Tableau {
    m: usize,
    n_struct: usize,
    n: usize,
    /// Model variable behind each structural column.
    pub(crate) col_var: Vec<VarId>,
    /// Column of each model variable, `None` when it was fixed and folded.
    pub(crate) var_col: Vec<Option<usize>>,
    fixed_values: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    art: Vec<(usize, f64)>,
    tab: Vec<f64>,
    basis: Vec<usize>,
    basic_row: Vec<usize>,
    pub(crate) lo: Vec<f64>,
    pub(crate) up: Vec<f64>,
    pub(crate) x: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    obj_const: f64,
    pub(crate) pivots: usize,
    pivot_limit: usize,
    deadline: Option<Instant>,
    /// Set during construction when a folded row is violated.
    trivially_infeasible: Option<String>,
    pub(crate) certificate: String,
}

const NONBASIC: usize = usize::MAX;

impl Tableau {
    /// Builds the LP relaxation of `model` with the initial slack/artificial basis.
    pub(crate) fn new(model: &MilpModel, pivot_limit: usize, deadline: Option<Instant>) -> Self {
        let nv = model.vars.len();
        let mut var_col = vec![None; nv];
        let mut col_var = Vec::new();
        let mut fixed_values = vec![0.0; nv];
        for (i, v) in model.vars.iter().enumerate() {
            if v.is_fixed() {
                fixed_values[i] = v.lower;
            } else {
                var_col[i] = Some(col_var.len());
                col_var.push(VarId(i));
            }
        }
        let n_struct = col_var.len();

        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut senses = Vec::new();
        let mut trivially_infeasible = None;
        for c in &model.constraints {
            let mut row = vec![0.0; n_struct];
            let mut rhs = c.rhs;
            let mut any = false;
            for &(v, coef) in &c.coeffs {
                match var_col[v.0] {
                    Some(j) => {
                        row[j] += coef;
                        any = true;
                    }
                    None => rhs -= coef * fixed_values[v.0],
                }
            }
            if !any {
                let ok = match c.sense {
                    Sense::Le => rhs >= -PRIMAL_TOL,
                    Sense::Ge => rhs <= PRIMAL_TOL,
                    Sense::Eq => rhs.abs() <= PRIMAL_TOL,
                };
                if !ok && trivially_infeasible.is_none() {
                    trivially_infeasible = Some(format!("row `{}` violated by fixed variables", c.name));
                }
                continue;
            }
            a.extend(row);
            b.push(rhs);
            senses.push(c.sense);
        }
        let m = b.len();

        let mut cost_struct = vec![0.0; n_struct];
        let mut obj_const = 0.0;
        for &(v, coef) in &model.objective {
            match var_col[v.0] {
                Some(j) => cost_struct[j] += coef,
                None => obj_const += coef * fixed_values[v.0],
            }
        }

        let mut lo: Vec<f64> = col_var.iter().map(|v| model.vars[v.0].lower).collect();
        let mut up: Vec<f64> = col_var.iter().map(|v| model.vars[v.0].upper).collect();
        let mut x: Vec<f64> = lo
            .iter()
            .zip(&up)
            .map(|(&l, &u)| if l.is_finite() { l } else if u.is_finite() { u } else { 0.0 })
            .collect();
        for s in &senses {
            let (l, u) = match s {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            up.push(u);
            x.push(0.0);
        }

        // Residual each row must absorb with its slack.
        let resid: Vec<f64> = (0..m)
            .map(|i| b[i] - a[i * n_struct..(i + 1) * n_struct].iter().zip(&x).map(|(p, q)| p * q).sum::<f64>())
            .collect();
        let mut art = Vec::new();
        let mut row_sign = vec![1.0; m];
        let mut basis = vec![0; m];
        for i in 0..m {
            let s = n_struct + i;
            let r = resid[i];
            if r >= lo[s] - PRIMAL_TOL && r <= up[s] + PRIMAL_TOL {
                x[s] = r.clamp(lo[s], up[s]);
                basis[i] = s;
            } else {
                let at = if r > up[s] { up[s] } else { lo[s] };
                x[s] = at;
                let sign = if r - at > 0.0 { 1.0 } else { -1.0 };
                art.push((i, sign));
                row_sign[i] = sign;
            }
        }
        let n = n_struct + m + art.len();
        for (k, &(i, _)) in art.iter().enumerate() {
            let col = n_struct + m + k;
            lo.push(0.0);
            up.push(f64::INFINITY);
            x.push((resid[i] - x[n_struct + i]).abs());
            basis[i] = col;
        }
        let mut tab = vec![0.0; m * n];
        for i in 0..m {
            let sgn = row_sign[i];
            let row = &mut tab[i * n..(i + 1) * n];
            for j in 0..n_struct {
                row[j] = sgn * a[i * n_struct + j];
            }
            row[n_struct + i] = sgn;
        }
        for (k, &(i, sign)) in art.iter().enumerate() {
            tab[i * n + n_struct + m + k] = sign * row_sign[i];
        }
        let mut basic_row = vec![NONBASIC; n];
        for (i, &j) in basis.iter().enumerate() {
            basic_row[j] = i;
        }
        let mut cost = cost_struct;
        cost.resize(n, 0.0);

        Self {
            m,
            n_struct,
            n,
            col_var,
            var_col,
            fixed_values,
            a,
            b,
            art,
            tab,
            basis,
            basic_row,
            lo,
            up,
            x,
            cost,
            d: vec![0.0; n],
            obj_const,
            pivots: 0,
            pivot_limit,
            deadline,
            trivially_infeasible,
            certificate: String::new(),
        }
    }

    pub(crate) fn reset_pivot_count(&mut self) {
        self.pivots = 0;
    }

    fn is_basic(&self, j: usize) -> bool {
        self.basic_row[j] != NONBASIC
    }

    fn compute_reduced_costs(&mut self, cost: &[f64]) {
        let n = self.n;
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * n..(i + 1) * n];
                for (dj, &t) in self.d.iter_mut().zip(row) {
                    *dj -= cb * t;
                }
            }
        }
        for &j in &self.basis {
            self.d[j] = 0.0;
        }
    }

    /// Pivots column `q` into the basis at row `r`, updating tableau and reduced costs.
    fn pivot(&mut self, r: usize, q: usize) {
        let n = self.n;
        let piv = self.tab[r * n + q];
        {
            let row = &mut self.tab[r * n..(r + 1) * n];
            let inv = 1.0 / piv;
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[q] = 1.0;
        }
        let nz: Vec<usize> = (0..n).filter(|&j| self.tab[r * n + j] != 0.0).collect();
        let pivot_row: Vec<f64> = nz.iter().map(|&j| self.tab[r * n + j]).collect();
        let dense = nz.len() * 3 > n;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.tab[i * n + q];
            if f == 0.0 {
                continue;
            }
            if dense {
                let (head, tail) = self.tab.split_at_mut(r.max(i) * n);
                let (row_i, row_r) = if i < r {
                    (&mut head[i * n..(i + 1) * n], &tail[..n])
                } else {
                    (&mut tail[..n], &head[r * n..(r + 1) * n])
                };
                for (v, &p) in row_i.iter_mut().zip(row_r) {
                    *v -= f * p;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    }
                }
            } else {
                let row_i = &mut self.tab[i * n..(i + 1) * n];
                for (&j, &p) in nz.iter().zip(&pivot_row) {
                    let v = &mut row_i[j];
                    *v -= f * p;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    }
                }
            }
            self.tab[i * n + q] = 0.0;
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for (&j, &p) in nz.iter().zip(&pivot_row) {
                self.d[j] -= dq * p;
            }
            self.d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.basic_row[leaving] = NONBASIC;
        self.basis[r] = q;
        self.basic_row[q] = r;
        self.pivots += 1;
    }

    fn out_of_budget(&self) -> Option<LpOutcome> {
        if self.pivots >= self.pivot_limit {
            return Some(LpOutcome::IterationLimit);
        }
        if self.pivots % 64 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Some(LpOutcome::TimeLimit);
                }
            }
        }
        None
    }

    /// Primal simplex on the current reduced costs; assumes primal feasibility.
    fn primal(&mut self) -> LpOutcome {
        let n = self.n;
        let mut degenerate_run = 0usize;
        loop {
            if let Some(out) = self.out_of_budget() {
                return out;
            }
            let bland = degenerate_run >= DEGENERATE_SWITCH;
            let mut q = NONBASIC;
            let mut best = 0.0;
            for j in 0..n {
                if self.is_basic(j) || self.lo[j] == self.up[j] {
                    continue;
                }
                let dj = self.d[j];
                let can_up = self.x[j] < self.up[j];
                let can_down = self.x[j] > self.lo[j];
                let score = if dj < -DUAL_TOL && can_up {
                    -dj
                } else if dj > DUAL_TOL && can_down {
                    dj
                } else {
                    continue;
                };
                if bland {
                    q = j;
                    break;
                }
                if score > best {
                    best = score;
                    q = j;
                }
            }
            if q == NONBASIC {
                return LpOutcome::Optimal;
            }
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };

            // Harris two-pass ratio test.
            let mut theta_max = f64::INFINITY;
            for i in 0..self.m {
                let alpha = self.tab[i * n + q];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -dir * alpha;
                let bj = self.basis[i];
                let lim = if rate < 0.0 {
                    (self.x[bj] - self.lo[bj] + PRIMAL_TOL) / -rate
                } else {
                    (self.up[bj] - self.x[bj] + PRIMAL_TOL) / rate
                };
                if lim < theta_max {
                    theta_max = lim;
                }
            }
            let flip = self.up[q] - self.lo[q];
            if flip.is_finite() && flip <= theta_max {
                let theta = flip;
                self.move_nonbasic(q, dir * theta);
                degenerate_run = 0;
                self.pivots += 1;
                continue;
            }
            if !theta_max.is_finite() {
                self.certificate = format!("ray along column {q}");
                return LpOutcome::Unbounded;
            }
            let mut r = NONBASIC;
            let mut best_alpha = 0.0;
            let mut theta = 0.0;
            for i in 0..self.m {
                let alpha = self.tab[i * n + q];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -dir * alpha;
                let bj = self.basis[i];
                let lim = if rate < 0.0 {
                    (self.x[bj] - self.lo[bj]) / -rate
                } else {
                    (self.up[bj] - self.x[bj]) / rate
                };
                if lim > theta_max {
                    continue;
                }
                let better = if bland {
                    r == NONBASIC || bj < self.basis[r]
                } else {
                    alpha.abs() > best_alpha
                };
                if better {
                    best_alpha = alpha.abs();
                    r = i;
                    theta = lim.max(0.0);
                }
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            let leaving = self.basis[r];
            let rate = -dir * self.tab[r * n + q];
            self.move_nonbasic(q, dir * theta);
            self.x[leaving] = if rate < 0.0 { self.lo[leaving] } else { self.up[leaving] };
            self.pivot(r, q);
        }
    }

    /// Shifts nonbasic `j` by `delta` and updates basic values.
    fn move_nonbasic(&mut self, j: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        let n = self.n;
        self.x[j] += delta;
        for i in 0..self.m {
            let alpha = self.tab[i * n + j];
            if alpha != 0.0 {
                self.x[self.basis[i]] -= alpha * delta;
            }
        }
    }

    /// Dual simplex; assumes dual feasibility of the current basis.
    fn dual(&mut self) -> LpOutcome {
        let n = self.n;
        loop {
            if let Some(out) = self.out_of_budget() {
                return out;
            }
            let mut r = NONBASIC;
            let mut worst = PRIMAL_TOL;
            for i in 0..self.m {
                let bj = self.basis[i];
                let viol = (self.lo[bj] - self.x[bj]).max(self.x[bj] - self.up[bj]);
                if viol > worst {
                    worst = viol;
                    r = i;
                }
            }
            if r == NONBASIC {
                return LpOutcome::Optimal;
            }
            let leaving = self.basis[r];
            let increase = self.x[leaving] < self.lo[leaving];
            let target = if increase { self.lo[leaving] } else { self.up[leaving] };
            let mut q = NONBASIC;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0;
            for j in 0..n {
                if self.is_basic(j) || self.lo[j] == self.up[j] {
                    continue;
                }
                let alpha = self.tab[r * n + j];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                // x_leaving moves by -alpha * dx_j.
                let at_lower = self.x[j] <= self.lo[j];
                let at_upper = self.x[j] >= self.up[j];
                let want_dx_positive = if increase { alpha < 0.0 } else { alpha > 0.0 };
                if want_dx_positive && at_upper && !at_lower {
                    continue;
                }
                if !want_dx_positive && at_lower && !at_upper {
                    continue;
                }
                let ratio = self.d[j].abs() / alpha.abs();
                if ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && alpha.abs() > best_alpha) {
                    best_ratio = ratio;
                    best_alpha = alpha.abs();
                    q = j;
                }
            }
            if q == NONBASIC {
                self.certificate = format!("row {r} cannot be repaired (dual ray)");
                return LpOutcome::Infeasible;
            }
            let alpha = self.tab[r * n + q];
            let dx = (self.x[leaving] - target) / alpha;
            self.move_nonbasic(q, dx);
            self.x[leaving] = target;
            self.pivot(r, q);
        }
    }

    /// Recomputes basic values from the nonbasic ones using `B^-1`, which
    /// sits in the slack block of the tableau.
    fn refresh_basics(&mut self) {
        let (m, n, ns) = (self.m, self.n, self.n_struct);
        let mut r = self.b.clone();
        for i in 0..m {
            let row = &self.a[i * ns..(i + 1) * ns];
            let mut acc = 0.0;
            for (j, &aij) in row.iter().enumerate() {
                if aij != 0.0 && !self.is_basic(j) {
                    acc += aij * self.x[j];
                }
            }
            if !self.is_basic(ns + i) {
                acc += self.x[ns + i];
            }
            r[i] -= acc;
        }
        for (k, &(i, sign)) in self.art.iter().enumerate() {
            let j = ns + m + k;
            if !self.is_basic(j) {
                r[i] -= sign * self.x[j];
            }
        }
        for i in 0..m {
            let binv = &self.tab[i * n + ns..i * n + ns + m];
            let v: f64 = binv.iter().zip(&r).map(|(p, q)| p * q).sum();
            self.x[self.basis[i]] = v;
        }
    }

    fn artificial_sum(&self) -> f64 {
        let base = self.n_struct + self.m;
        (0..self.art.len()).map(|k| self.x[base + k]).sum()
    }

    /// Two-phase primal solve from the construction basis.
    pub(crate) fn solve(&mut self) -> LpOutcome {
        if let Some(msg) = &self.trivially_infeasible {
            self.certificate = msg.clone();
            return LpOutcome::Infeasible;
        }
        let base = self.n_struct + self.m;
        if !self.art.is_empty() {
            let mut c1 = vec![0.0; self.n];
            for k in 0..self.art.len() {
                c1[base + k] = 1.0;
            }
            self.compute_reduced_costs(&c1);
            let out = self.primal();
            if out != LpOutcome::Optimal {
                return out;
            }
            self.refresh_basics();
            let infeas = self.artificial_sum();
            if infeas > 1e-7 {
                self.certificate = format!("phase one ends with infeasibility {infeas:.3e}");
                return LpOutcome::Infeasible;
            }
            for k in 0..self.art.len() {
                let j = base + k;
                self.up[j] = 0.0;
                if !self.is_basic(j) {
                    self.x[j] = 0.0;
                }
            }
        }
        let cost = self.cost.clone();
        self.compute_reduced_costs(&cost);
        self.finish(false)
    }

    /// Restores optimality after bound changes with the dual simplex, then
    /// cleans up with the primal simplex.
    pub(crate) fn reoptimize(&mut self) -> LpOutcome {
        self.finish(true)
    }

    fn finish(&mut self, dual_first: bool) -> LpOutcome {
        for round in 0..4 {
            if dual_first || round > 0 {
                let out = self.dual();
                if out != LpOutcome::Optimal {
                    return out;
                }
            }
            let out = self.primal();
            if out != LpOutcome::Optimal {
                return out;
            }
            self.refresh_basics();
            let cost = self.cost.clone();
            self.compute_reduced_costs(&cost);
            if self.max_basic_violation() <= PRIMAL_TOL && self.max_dual_violation() <= DUAL_TOL {
                return LpOutcome::Optimal;
            }
        }
        if self.max_basic_violation() <= 1e-7 {
            LpOutcome::Optimal
        } else {
            self.certificate = "numerical trouble restoring feasibility".into();
            LpOutcome::Infeasible
        }
    }

    fn max_basic_violation(&self) -> f64 {
        self.basis
            .iter()
            .map(|&j| (self.lo[j] - self.x[j]).max(self.x[j] - self.up[j]).max(0.0))
            .fold(0.0, f64::max)
    }

    fn max_dual_violation(&self) -> f64 {
        (0..self.n)
            .filter(|&j| !self.is_basic(j) && self.lo[j] < self.up[j])
            .map(|j| {
                let dj = self.d[j];
                let mut v: f64 = 0.0;
                if self.x[j] < self.up[j] {
                    v = v.max(-dj);
                }
                if self.x[j] > self.lo[j] {
                    v = v.max(dj);
                }
                v
            })
            .fold(0.0, f64::max)
    }

    /// Changes the bounds of a structural column, keeping nonbasic columns at a bound.
    pub(crate) fn set_bounds(&mut self, col: usize, lo: f64, up: f64) {
        self.lo[col] = lo;
        self.up[col] = up;
        if !self.is_basic(col) {
            let cur = self.x[col];
            let target = if cur < lo || (cur > lo && cur < up && lo.is_finite()) {
                lo
            } else if cur > up || (cur > lo && cur < up && up.is_finite()) {
                up
            } else {
                cur
            };
            let delta = target - self.x[col];
            self.move_nonbasic(col, delta);
        }
    }

    pub(crate) fn objective(&self) -> f64 {
        self.obj_const + (0..self.n_struct).map(|j| self.cost[j] * self.x[j]).sum::<f64>()
    }

    /// Values of all model variables, folded ones included.
    pub(crate) fn model_values(&self) -> Vec<f64> {
        let mut out = self.fixed_values.clone();
        for (j, v) in self.col_var.iter().enumerate() {
            out[v.0] = self.x[j];
        }
        out
    }

    pub(crate) fn column_value(&self, col: usize) -> f64 {
        self.x[col]
    }
}
