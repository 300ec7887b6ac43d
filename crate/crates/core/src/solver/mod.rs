//! LP and MILP solving: a dense two-phase simplex, best-bound
//! branch-and-bound on binaries, and LP-format export/import.

mod bnb;
pub mod lpfile;
mod simplex;

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::encoder::model::{MilpModel, ModelError};
use simplex::{LpOutcome, Tableau};

pub use bnb::solve_milp;
pub use lpfile::{export_lp_text, parse_lp_text, LpParseError};

pub const DEFAULT_PIVOT_LIMIT: usize = 50_000;
pub const DEFAULT_GAP: f64 = 1e-6;
pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(60);
/// Integrality and feasibility tolerance of reported solutions.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// Time budget ran out; the best incumbent is attached.
    TimeLimit,
    /// Time budget ran out before any integral solution was found.
    BudgetNoIncumbent,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::TimeLimit)
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration-limit",
            SolveStatus::TimeLimit => "time-limit",
            SolveStatus::BudgetNoIncumbent => "budget-exhausted-without-incumbent",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    /// One value per model variable; empty without a solution.
    pub values: Vec<f64>,
    /// Short description of why the status holds (infeasibility source, ray, ...).
    pub certificate: String,
    pub nodes: usize,
    pub pivots: usize,
    /// Lower bound proven by the search.
    pub best_bound: f64,
}

impl LpSolution {
    fn without_solution(status: SolveStatus, certificate: String, pivots: usize) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            certificate,
            nodes: 0,
            pivots,
            best_bound: f64::NAN,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Relative optimality gap at which branch-and-bound stops.
    pub gap: f64,
    pub time_budget: Duration,
    /// Pivot limit of every LP solve.
    pub pivot_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { gap: DEFAULT_GAP, time_budget: DEFAULT_TIME_BUDGET, pivot_limit: DEFAULT_PIVOT_LIMIT }
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn outcome_status(out: LpOutcome) -> SolveStatus {
    match out {
        LpOutcome::Optimal => SolveStatus::Optimal,
        LpOutcome::Infeasible => SolveStatus::Infeasible,
        LpOutcome::Unbounded => SolveStatus::Unbounded,
        LpOutcome::IterationLimit => SolveStatus::IterationLimit,
        LpOutcome::TimeLimit => SolveStatus::TimeLimit,
    }
}

/// Solves the continuous relaxation of `model` (integrality is ignored).
pub fn solve_lp(model: &MilpModel, cfg: &SolverConfig) -> Result<LpSolution, SolverError> {
    model.validate()?;
    let deadline = Instant::now() + cfg.time_budget;
    let mut tab = Tableau::new(model, cfg.pivot_limit, Some(deadline));
    let out = tab.solve();
    if out != LpOutcome::Optimal {
        let status = match out {
            LpOutcome::TimeLimit => SolveStatus::BudgetNoIncumbent,
            other => outcome_status(other),
        };
        return Ok(LpSolution::without_solution(status, tab.certificate.clone(), tab.pivots));
    }
    let obj = tab.objective();
    Ok(LpSolution {
        status: SolveStatus::Optimal,
        objective: obj,
        values: tab.model_values(),
        certificate: String::new(),
        nodes: 0,
        pivots: tab.pivots,
        best_bound: obj,
    })
}
