//! Mixed-integer linear model: variables, linear rows and a minimization
//! objective. This is the hand-off format between the encoder and the solver.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilpVar {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl MilpVar {
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinConstraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinConstraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which `values` violates the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// What a model variable stands for, when it is part of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    State { uav: usize, t: usize, component: usize },
    Input { uav: usize, t: usize, channel: usize },
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("constraint `{0}` has no nonzero coefficient")]
    EmptyConstraint(String),
    #[error("constraint `{name}` references undeclared variable {var}")]
    UnknownVariable { name: String, var: usize },
    #[error("variable `{name}` has inconsistent bounds [{lower}, {upper}]")]
    BadBounds { name: String, lower: f64, upper: f64 },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    pub vars: Vec<MilpVar>,
    pub constraints: Vec<LinConstraint>,
    /// Minimized.
    pub objective: Vec<(VarId, f64)>,
    pub roles: BTreeMap<VarId, VarRole>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        self.vars.push(MilpVar { name: name.into(), kind, lower, upper });
        VarId(self.vars.len() - 1)
    }

    pub fn continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn var(&self, id: VarId) -> &MilpVar {
        &self.vars[id.0]
    }

    pub fn fix(&mut self, id: VarId, value: f64) {
        let v = &mut self.vars[id.0];
        v.lower = value;
        v.upper = value;
    }

    /// Adds a row, merging repeated variables and dropping zero coefficients.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize, ModelError> {
        let name = name.into();
        let mut merged: BTreeMap<VarId, f64> = BTreeMap::new();
        for (v, a) in coeffs {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable { name, var: v.0 });
            }
            *merged.entry(v).or_insert(0.0) += a;
        }
        let coeffs: Vec<(VarId, f64)> = merged.into_iter().filter(|&(_, a)| a != 0.0).collect();
        if coeffs.is_empty() {
            return Err(ModelError::EmptyConstraint(name));
        }
        self.constraints.push(LinConstraint { name, coeffs, sense, rhs });
        Ok(self.constraints.len() - 1)
    }

    pub fn add_objective(&mut self, var: VarId, coeff: f64) {
        self.objective.push((var, coeff));
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries().count()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(ModelError::BadBounds { name: v.name.clone(), lower: v.lower, upper: v.upper });
            }
        }
        for c in &self.constraints {
            if c.coeffs.is_empty() {
                return Err(ModelError::EmptyConstraint(c.name.clone()));
            }
            if let Some(&(v, _)) = c.coeffs.iter().find(|(v, _)| v.0 >= self.vars.len()) {
                return Err(ModelError::UnknownVariable { name: c.name.clone(), var: v.0 });
            }
        }
        if let Some(&(v, _)) = self.objective.iter().find(|(v, _)| v.0 >= self.vars.len()) {
            return Err(ModelError::UnknownVariable { name: "objective".into(), var: v.0 });
        }
        Ok(())
    }

    /// Largest row or bound violation of a candidate assignment.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        let bounds = self
            .vars
            .iter()
            .zip(values)
            .map(|(v, &x)| (v.lower - x).max(x - v.upper).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_duplicate_terms_and_rejects_empty_rows() {
        let mut m = MilpModel::new("t");
        let x = m.continuous("x", 0.0, 1.0);
        m.add_constraint("c", [(x, 1.0), (x, 2.0)], Sense::Le, 1.0).unwrap();
        assert_eq!(m.constraints[0].coeffs, vec![(x, 3.0)]);
        let err = m.add_constraint("z", [(x, 1.0), (x, -1.0)], Sense::Le, 1.0).unwrap_err();
        assert_eq!(err, ModelError::EmptyConstraint("z".into()));
    }

    #[test]
    fn binaries_are_clamped_to_unit_interval() {
        let mut m = MilpModel::new("t");
        let b = m.add_var("b", VarKind::Binary, -3.0, 7.0);
        assert_eq!((m.var(b).lower, m.var(b).upper), (0.0, 1.0));
    }

    #[test]
    fn unknown_variable_is_reported() {
        let mut m = MilpModel::new("t");
        let err = m.add_constraint("c", [(VarId(4), 1.0)], Sense::Ge, 0.0).unwrap_err();
        assert!(matches!(err, ModelError::UnknownVariable { var: 4, .. }));
    }
}
