//! Run summaries in the layout of a per-sub-task timing table.

use std::fmt::Write as _;

use serde::Serialize;

use crate::planner::{min_separation, FleetPlan, SubTaskReport};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub uav: usize,
    pub label: String,
    pub mode: String,
    pub solve_seconds: f64,
    pub execution_steps: Option<usize>,
    pub bound: usize,
    pub waits: usize,
    pub pass: bool,
}

impl ReportRow {
    fn from_report(r: &SubTaskReport) -> Self {
        Self {
            uav: r.uav + 1,
            label: r.label.clone(),
            mode: r.mode.to_string(),
            solve_seconds: r.solve_seconds,
            execution_steps: r.execution_steps,
            bound: r.bound,
            waits: r.waits,
            pass: r.passed(),
        }
    }

    /// The pass flag recomputed from the row's own columns.
    pub fn recomputed_pass(&self) -> bool {
        self.execution_steps.is_some_and(|s| s <= self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub uavs: usize,
    pub seed: u64,
    pub gap: f64,
    pub time_budget_seconds: f64,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<String>,
    pub min_separation: Option<f64>,
    pub required_separation: f64,
}

impl RunReport {
    pub fn new(scenario: &str, plan: &FleetPlan, seed: u64, gap: f64, time_budget_seconds: f64, required_separation: f64) -> Self {
        Self {
            scenario: scenario.to_string(),
            uavs: plan.trajectories.len(),
            seed,
            gap,
            time_budget_seconds,
            rows: plan.reports.iter().map(ReportRow::from_report).collect(),
            failures: plan.failures.iter().map(|f| f.to_string()).collect(),
            min_separation: min_separation(&plan.trajectories).map(|(d, ..)| d),
            required_separation,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    /// Fixed-width table. Wall-clock columns are included only on request,
    /// so the default rendering is reproducible byte for byte.
    pub fn to_text(&self, with_timing: bool) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario {}  uavs {}  seed {}  gap {:e}  budget {}s", self.scenario, self.uavs, self.seed, self.gap, self.time_budget_seconds);
        let _ = write!(s, "{:<4} {:<12} {:<8}", "uav", "sub-task", "mode");
        if with_timing {
            let _ = write!(s, " {:>9}", "solve(s)");
        }
        let _ = writeln!(s, " {:>6} {:>6} {:>5} {:>5}", "steps", "bound", "wait", "pass");
        for r in &self.rows {
            let _ = write!(s, "{:<4} {:<12} {:<8}", r.uav, r.label, r.mode);
            if with_timing {
                let _ = write!(s, " {:>9.3}", r.solve_seconds);
            }
            let steps = r.execution_steps.map_or("-".to_string(), |v| v.to_string());
            let _ = writeln!(s, " {:>6} {:>6} {:>5} {:>5}", steps, r.bound, r.waits, if r.pass { "yes" } else { "no" });
        }
        match self.min_separation {
            Some(d) => {
                let _ = writeln!(s, "min separation {d:.4} m (required {:.4} m)", self.required_separation);
            }
            None => {
                let _ = writeln!(s, "min separation n/a (single vehicle)");
            }
        }
        for f in &self.failures {
            let _ = writeln!(s, "FAILURE {f}");
        }
        let _ = writeln!(s, "result {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ModeId;

    fn report(steps: Option<usize>, bound: usize) -> SubTaskReport {
        SubTaskReport {
            uav: 0,
            label: "A-C".into(),
            mode: ModeId::Steer,
            feasible: steps.is_some(),
            execution_steps: steps,
            executed_steps: steps.unwrap_or(0),
            bound,
            waits: 0,
            solve_seconds: 0.5,
            objective: Some(1.0),
            nodes: 3,
            start: 0,
        }
    }

    #[test]
    fn row_pass_is_recomputable() {
        for (steps, bound) in [(Some(4), 5), (Some(6), 5), (None, 5)] {
            let row = ReportRow::from_report(&report(steps, bound));
            assert_eq!(row.pass, row.recomputed_pass());
        }
    }

    #[test]
    fn text_without_timing_has_no_seconds() {
        let plan = FleetPlan { trajectories: Vec::new(), reports: vec![report(Some(4), 5)], failures: Vec::new() };
        let r = RunReport::new("test", &plan, 0, 1e-6, 60.0, 0.7);
        assert!(!r.to_text(false).contains("0.500"));
        assert!(r.to_text(true).contains("0.500"));
        assert!(r.to_text(false).ends_with("result PASS\n"));
    }
}
