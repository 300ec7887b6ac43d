//! End-to-end planning of the builtin rescue scenario with two vehicles,
//! checked against the trace semantics and the geometry.

use mtlplan::planner::{holds_on, min_separation, plan_fleet, validate_decomposition, verify_trajectory, PlannerConfig};
use mtlplan::planner::DecompositionError;
use mtlplan::report::RunReport;
use mtlplan::workspace::rescue::build_rescue_workspace;
use mtlplan::{FleetPlan, HybridModel, Mission, QuadParams, Workspace};

fn plan(n: usize) -> (Workspace, Vec<Mission>, HybridModel, FleetPlan) {
    let (w, missions) = build_rescue_workspace(n);
    let model = HybridModel::new(QuadParams::default()).unwrap();
    let plan = plan_fleet(&missions, &w, &model, &PlannerConfig::default());
    (w, missions, model, plan)
}

#[test]
fn two_vehicle_rescue() {
    let (w, missions, model, plan) = plan(2);
    let sep = model.params.separation();

    assert_eq!(plan.reports.len(), 12);
    for r in &plan.reports {
        assert!(r.passed(), "uav {} {} took {:?} of {}", r.uav + 1, r.label, r.execution_steps, r.bound);
    }
    assert!(plan.succeeded());
    assert!(plan.total_waits(1) >= 1, "the second vehicle should yield at the staging area");

    let (d, ..) = min_separation(&plan.trajectories).unwrap();
    assert!(d >= sep - 1e-6, "separation {d}");
    for (i, tr) in plan.trajectories.iter().enumerate() {
        assert!(tr.positions().iter().all(|p| !w.is_obstacle(p)), "uav {} enters an obstacle", i + 1);
        assert!(tr.dynamics_residual(&model).unwrap() <= 1e-6);
        let others: Vec<_> = plan.trajectories.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, t)| t.clone()).collect();
        let lengths = plan.segment_lengths(i);
        assert_eq!(lengths.len(), missions[i].subtasks.len());
        assert!(lengths.iter().sum::<usize>() <= missions[i].total_horizon);
        let f = missions[i].composed_formula(&lengths);
        assert!(holds_on(&f, &w, &tr.positions()), "composed formula of uav {} fails", i + 1);
        let v = verify_trajectory(tr, &f, &w, &others, sep);
        assert!(v.ok(), "uav {}: {:?}", i + 1, v.violations);
    }
}

#[test]
fn planning_is_reproducible() {
    let (_, _, _, a) = plan(1);
    let (_, _, _, b) = plan(1);
    let text = |p: &FleetPlan| RunReport::new("rescue", p, 0, 1e-6, 60.0, 0.7).to_text(false);
    assert_eq!(text(&a), text(&b));
    assert_eq!(a.trajectories, b.trajectories);
    assert_eq!(a.total_waits(0), 0);
}

#[test]
fn builtin_decompositions_fit_their_deadlines() {
    for n in 1..=10 {
        let (_, missions) = build_rescue_workspace(n);
        for m in &missions {
            validate_decomposition(m).unwrap();
        }
    }
}

#[test]
fn stretched_decomposition_is_rejected() {
    let (_, missions) = build_rescue_workspace(2);
    let mut m = missions[0].clone();
    let slack = m.total_horizon - m.subtasks.iter().map(|s| s.horizon).sum::<usize>();
    m.subtasks[2].horizon += slack + 1;
    match validate_decomposition(&m) {
        Err(DecompositionError::Excess { sum, total }) => assert_eq!(sum, total + 1),
        other => panic!("expected an excess error, got {other:?}"),
    }
}
