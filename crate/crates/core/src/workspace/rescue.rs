//! Built-in rescue layout: vehicles start on pads south of a wall, pass one
//! at a time through a low window, pick up an object each on the far side
//! and land in a safe zone.
//!
//! All coordinates are in meters inside a 10 x 10 x 3 box. The wall runs
//! along `y` in `[5.0, 5.35]`, thicker than one step of travel, so a vehicle
//! cannot skip over it between samples. The window is 0.6 m wide and 0.6 m
//! high, so a vehicle with a 0.35 m safety radius can neither pass beside
//! nor above another one inside it.

use std::collections::BTreeSet;

use crate::dynamics::{ModeId, STATE_DIM};
use crate::mtl::Formula;
use crate::planner::{Mission, SubTask};

use super::{Aabb, ConvexPolytope, Region, Workspace};

pub const MAX_UAVS: usize = 10;
pub const WALL_Y: (f64, f64) = (5.0, 5.35);
pub const WINDOW_X: (f64, f64) = (4.7, 5.3);
pub const WINDOW_TOP: f64 = 0.6;
/// Deadline of every builtin mission, in steps.
pub const MISSION_HORIZON: usize = 45;

const PAD_HALF: f64 = 0.25;
const PAD_X: [f64; 6] = [4.65, 5.35, 3.95, 6.05, 3.25, 6.75];
const PAD_ROW_Y: [f64; 2] = [4.05, 3.35];
/// Object centers: the first two beside the window exit, the third straight
/// behind it, the rest further out to the sides.
const TARGETS: [[f64; 2]; MAX_UAVS] = [
    [3.9, 5.95],
    [6.1, 5.95],
    [5.0, 5.95],
    [3.2, 6.8],
    [6.8, 6.8],
    [2.3, 6.8],
    [7.7, 6.8],
    [2.8, 5.95],
    [7.2, 5.95],
    [1.4, 6.8],
];
const TARGET_HALF: f64 = 0.4;
const SAFE_X: [f64; MAX_UAVS] = [3.65, 6.35, 4.55, 2.75, 7.25, 1.85, 8.15, 0.95, 9.05, 5.45];
const SAFE_Y: f64 = 7.8;
const SAFE_HALF: f64 = 0.3;

/// Center of the start pad of vehicle `i`.
pub fn pad_center(i: usize) -> [f64; 2] {
    if i < PAD_X.len() {
        [PAD_X[i], PAD_ROW_Y[0]]
    } else {
        [PAD_X[i - PAD_X.len()], PAD_ROW_Y[1]]
    }
}

/// Names of the start, target and safe-zone regions of vehicle `i` in an `n`-vehicle layout.
pub fn region_names(i: usize, n: usize) -> (String, String, String) {
    if n <= 2 {
        let start = ["A", "B"][i].to_string();
        let target = ["F", "G"][i].to_string();
        (start, target, format!("H{}", i + 1))
    } else {
        (format!("A{}", i + 1), format!("F{}", i + 1), format!("H{}", i + 1))
    }
}

fn footprint(cx: f64, cy: f64, half: f64) -> ConvexPolytope {
    ConvexPolytope::from_box([cx - half, cy - half, 0.0], [cx + half, cy + half, 3.0])
}

/// Layout and missions for `n` vehicles, `n` clamped to `1..=10`.
pub fn build_rescue_workspace(n: usize) -> (Workspace, Vec<Mission>) {
    let n = n.clamp(1, MAX_UAVS);
    let bounds = Aabb::new([0.0, 0.0, 0.0], [10.0, 10.0, 3.0]);
    let mut regions = Vec::new();
    for i in 0..n {
        let (a, f, h) = region_names(i, n);
        let [px, py] = pad_center(i);
        regions.push(Region::new(&a, vec![footprint(px, py, PAD_HALF)]).with_prime(0.3));
        let [tx, ty] = TARGETS[i];
        regions.push(Region::new(&f, vec![footprint(tx, ty, TARGET_HALF)]).with_prime(0.2));
        regions.push(Region::new(&h, vec![footprint(SAFE_X[i], SAFE_Y, SAFE_HALF)]).with_prime(0.1));
    }
    regions.push(Region::new("C", vec![ConvexPolytope::from_box([3.5, 4.4, 0.0], [6.5, 4.95, 3.0])]));
    regions.push(Region::new(
        "E",
        vec![ConvexPolytope::from_box([WINDOW_X.0, WALL_Y.0, 0.0], [WINDOW_X.1, WALL_Y.1, WINDOW_TOP])],
    ));
    regions.push(Region::new(
        "O",
        vec![
            ConvexPolytope::from_box([0.0, WALL_Y.0, 0.0], [WINDOW_X.0, WALL_Y.1, 3.0]),
            ConvexPolytope::from_box([WINDOW_X.1, WALL_Y.0, 0.0], [10.0, WALL_Y.1, 3.0]),
            ConvexPolytope::from_box([WINDOW_X.0, WALL_Y.0, WINDOW_TOP], [WINDOW_X.1, WALL_Y.1, 3.0]),
        ],
    ));
    let obstacles: BTreeSet<String> = ["O".to_string()].into_iter().collect();
    let workspace = Workspace::new(bounds, regions, obstacles).expect("builtin layout is valid");
    let missions = (0..n).map(|i| rescue_mission(i, n)).collect();
    (workspace, missions)
}

/// Six sub-tasks: take off, reach the staging area, cross to the object,
/// grasp it, carry it to the safe zone and land.
pub fn rescue_mission(i: usize, n: usize) -> Mission {
    let (a, f, h) = region_names(i, n);
    let parse = |s: String| s.parse::<Formula>().expect("builtin formula parses");
    let st = |label: String, text: String, mode: ModeId, horizon: usize| SubTask { label, formula: parse(text), mode, horizon };
    let subtasks = vec![
        st(format!("{a}-{a}'"), format!("G {a} & F[0,5] {a}_prime"), ModeId::TakeOff, 5),
        st(format!("{a}-C"), "F[0,5] C & G !O".to_string(), ModeId::Steer, 5),
        st(format!("C-{f}"), format!("F[0,10] {f} & G !O"), ModeId::Steer, 10),
        st(format!("{f}-{f}'"), format!("G {f} & F[0,10] {f}_prime"), ModeId::Grasp, 10),
        st(format!("{f}-{h}"), format!("F[0,10] {h} & G !O"), ModeId::Steer, 10),
        st(format!("{h}-{h}'"), format!("G {h} & F[0,5] !{h}_prime"), ModeId::Land, 5),
    ];
    let [px, py] = pad_center(i);
    let mut x0 = vec![0.0; STATE_DIM];
    x0[0] = px;
    x0[1] = py;
    Mission { uav: i, name: format!("uav{}", i + 1), subtasks, total_horizon: MISSION_HORIZON, x0 }
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;

    use super::*;
    use crate::mtl::Proposition;

    #[test]
    fn two_vehicle_names() {
        let (w, m) = build_rescue_workspace(2);
        let names: BTreeSet<&str> = w.regions.iter().map(|r| r.name()).collect();
        let want: BTreeSet<&str> = ["A", "B", "C", "E", "F", "G", "H1", "H2", "O"].into_iter().collect();
        assert_eq!(names, want);
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].subtasks[2].label, "C-G");
    }

    #[test]
    fn targets_and_obstacles_are_disjoint() {
        let (w, _) = build_rescue_workspace(MAX_UAVS);
        let o = w.region("O").unwrap();
        for r in &w.regions {
            if r.name() == "O" || r.name() == "E" {
                continue;
            }
            for part in &r.parts {
                for op in &o.parts {
                    let mut hs = part.halfspaces.clone();
                    hs.extend(op.halfspaces.iter().cloned());
                    let both = ConvexPolytope::new(hs);
                    assert!(!both.intersects(&w.bounds), "{} touches O", r.name());
                }
            }
        }
    }

    #[test]
    fn window_fits_one_vehicle() {
        let (w, _) = build_rescue_workspace(2);
        let sep = crate::dynamics::QuadParams::default().separation();
        assert!(WINDOW_X.1 - WINDOW_X.0 < sep);
        assert!(WINDOW_TOP < sep);
        let labels = w.label_point(&Vector3::new(5.0, 5.1, 0.3)).unwrap();
        assert!(labels.contains(&Proposition::new("E")));
        assert!(!labels.contains(&Proposition::new("O")));
        assert!(w.label_point(&Vector3::new(5.0, 5.1, 1.0)).unwrap().contains(&Proposition::new("O")));
    }

    #[test]
    fn start_states_are_separated() {
        let sep = crate::dynamics::QuadParams::default().separation();
        for i in 0..MAX_UAVS {
            for j in 0..i {
                let (a, b) = (pad_center(i), pad_center(j));
                let d = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
                assert!(d >= sep - 1e-9, "pads {i} and {j}");
            }
        }
    }

    #[test]
    fn wall_is_thicker_than_one_step() {
        let p = crate::dynamics::QuadParams::default();
        assert!(WALL_Y.1 - WALL_Y.0 > p.steer_speed * crate::dynamics::DEFAULT_DT);
    }

    #[test]
    fn goal_regions_do_not_overlap() {
        let (w, _) = build_rescue_workspace(MAX_UAVS);
        let goals: Vec<_> = w.regions.iter().filter(|r| r.name().starts_with('F') || r.name().starts_with('H')).collect();
        for (i, a) in goals.iter().enumerate() {
            for b in &goals[..i] {
                let mut hs = a.parts[0].halfspaces.clone();
                hs.extend(b.parts[0].halfspaces.iter().cloned());
                assert!(!ConvexPolytope::new(hs).intersects(&w.bounds), "{} and {}", a.name(), b.name());
            }
        }
    }
}
