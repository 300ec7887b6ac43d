//! JSON scenario files: workspace, obstacle set, vehicle parameters and
//! missions.
//!
//! ```json
//! {
//!   "bounds": {"min": [0, 0, 0], "max": [10, 10, 3]},
//!   "regions": [
//!     {"name": "A", "halfspaces": [[{"h": [1, 0, 0], "a": 2}, {"h": [-1, 0, 0], "a": -1}]], "z_prime": 0.3}
//!   ],
//!   "obstacles": ["O"],
//!   "missions": [
//!     {"name": "uav1", "start": [1.5, 1.5, 0], "total_horizon": 20,
//!      "subtasks": [{"label": "A-A'", "formula": "G A & F[0,5] A_prime", "mode": "TakeOff", "horizon": 5}]}
//!   ]
//! }
//! ```
//!
//! `halfspaces` holds one list per convex part; a flat list is read as a
//! single part.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ModeId, QuadParams, STATE_DIM};
use crate::mtl::{parse_mtl, to_nnf};
use crate::planner::{Mission, SubTask};
use crate::workspace::{Aabb, ConvexPolytope, Halfspace, Region, Workspace, WorkspaceError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsDoc {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceDoc {
    pub h: [f64; 3],
    pub a: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PartsDoc {
    Parts(Vec<Vec<HalfspaceDoc>>),
    Single(Vec<HalfspaceDoc>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionDoc {
    pub name: String,
    pub halfspaces: PartsDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_prime: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubTaskDoc {
    pub label: String,
    pub formula: String,
    pub mode: ModeId,
    pub horizon: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissionDoc {
    pub name: String,
    /// Start position; the vehicle starts at rest.
    pub start: [f64; 3],
    pub total_horizon: usize,
    pub subtasks: Vec<SubTaskDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub bounds: BoundsDoc,
    pub regions: Vec<RegionDoc>,
    #[serde(default)]
    pub obstacles: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_params: Option<QuadParams>,
    #[serde(default)]
    pub missions: Vec<MissionDoc>,
}

fn halfspace(d: &HalfspaceDoc) -> Result<Halfspace, WorkspaceError> {
    Halfspace::new(d.h, d.a)
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self, WorkspaceError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn workspace(&self) -> Result<Workspace, WorkspaceError> {
        let bounds = Aabb::new(self.bounds.min, self.bounds.max);
        let mut regions = Vec::with_capacity(self.regions.len());
        for r in &self.regions {
            let parts = match &r.halfspaces {
                PartsDoc::Parts(ps) => ps.clone(),
                PartsDoc::Single(p) => vec![p.clone()],
            };
            let parts = parts
                .iter()
                .map(|p| Ok(ConvexPolytope::new(p.iter().map(halfspace).collect::<Result<_, _>>()?)))
                .collect::<Result<Vec<_>, WorkspaceError>>()?;
            let mut region = Region::new(&r.name, parts);
            region.z_prime = r.z_prime;
            regions.push(region);
        }
        let obstacles: BTreeSet<String> = self.obstacles.iter().cloned().collect();
        Workspace::new(bounds, regions, obstacles)
    }

    pub fn params(&self) -> QuadParams {
        self.quad_params.clone().unwrap_or_default()
    }

    /// Missions with formulas parsed against the workspace propositions.
    pub fn missions(&self, w: &Workspace) -> Result<Vec<Mission>, WorkspaceError> {
        let pi = w.propositions();
        self.missions
            .iter()
            .enumerate()
            .map(|(uav, m)| {
                let subtasks = m
                    .subtasks
                    .iter()
                    .map(|s| {
                        let f = parse_mtl(&s.formula, &pi)
                            .map_err(|e| WorkspaceError::Scenario(format!("mission `{}` sub-task `{}`: {e}", m.name, s.label)))?;
                        let formula = to_nnf(&f)
                            .map_err(|e| WorkspaceError::Scenario(format!("mission `{}` sub-task `{}`: {e}", m.name, s.label)))?;
                        Ok(SubTask { label: s.label.clone(), formula, mode: s.mode, horizon: s.horizon })
                    })
                    .collect::<Result<Vec<_>, WorkspaceError>>()?;
                let mut x0 = vec![0.0; STATE_DIM];
                x0[..3].copy_from_slice(&m.start);
                Ok(Mission { uav, name: m.name.clone(), subtasks, total_horizon: m.total_horizon, x0 })
            })
            .collect()
    }

    /// Document describing an in-memory scenario.
    pub fn from_parts(w: &Workspace, missions: &[Mission], params: Option<QuadParams>) -> Self {
        let regions = w
            .regions
            .iter()
            .map(|r| RegionDoc {
                name: r.name().to_string(),
                halfspaces: PartsDoc::Parts(
                    r.parts
                        .iter()
                        .map(|p| p.halfspaces.iter().map(|h| HalfspaceDoc { h: [h.h[0], h.h[1], h.h[2]], a: h.a }).collect())
                        .collect(),
                ),
                z_prime: r.z_prime,
            })
            .collect();
        let missions = missions
            .iter()
            .map(|m| MissionDoc {
                name: m.name.clone(),
                start: [m.x0[0], m.x0[1], m.x0[2]],
                total_horizon: m.total_horizon,
                subtasks: m
                    .subtasks
                    .iter()
                    .map(|s| SubTaskDoc { label: s.label.clone(), formula: s.formula.to_string(), mode: s.mode, horizon: s.horizon })
                    .collect(),
            })
            .collect();
        Self {
            bounds: BoundsDoc { min: w.bounds.lo.into(), max: w.bounds.hi.into() },
            regions,
            obstacles: w.obstacles.iter().cloned().collect(),
            quad_params: params,
            missions,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workspace::rescue::build_rescue_workspace;

    const MINIMAL: &str = r#"{
        "bounds": {"min": [0, 0, 0], "max": [10, 10, 3]},
        "regions": [{"name": "A", "halfspaces": [
            {"h": [1, 0, 0], "a": 2}, {"h": [-1, 0, 0], "a": -1},
            {"h": [0, 1, 0], "a": 2}, {"h": [0, -1, 0], "a": -1}]}]
    }"#;

    #[test]
    fn minimal_file_has_one_region() {
        let doc: ScenarioFile = serde_json::from_str(MINIMAL).unwrap();
        let w = doc.workspace().unwrap();
        assert_eq!(w.regions.len(), 1);
        assert!(doc.missions(&w).unwrap().is_empty());
    }

    #[test]
    fn inconsistent_halfspaces_are_rejected() {
        let text = r#"{"bounds": {"min": [0, 0, 0], "max": [10, 10, 3]},
            "regions": [{"name": "X", "halfspaces": [{"h": [1, 0, 0], "a": 0}, {"h": [-1, 0, 0], "a": -1}]}]}"#;
        let doc: ScenarioFile = serde_json::from_str(text).unwrap();
        let err = doc.workspace().unwrap_err();
        assert!(err.to_string().contains('X'), "{err}");
    }

    #[test]
    fn builtin_round_trips_through_json() {
        let (w, missions) = build_rescue_workspace(2);
        let doc = ScenarioFile::from_parts(&w, &missions, None);
        let text = serde_json::to_string_pretty(&doc).unwrap();
        let back: ScenarioFile = serde_json::from_str(&text).unwrap();
        let w2 = back.workspace().unwrap();
        assert_eq!(w2, w);
        assert_eq!(back.missions(&w2).unwrap(), missions);
    }

    #[test]
    fn unknown_proposition_in_mission_is_named() {
        let mut doc: ScenarioFile = serde_json::from_str(MINIMAL).unwrap();
        doc.missions.push(MissionDoc {
            name: "m".into(),
            start: [1.5, 1.5, 0.0],
            total_horizon: 5,
            subtasks: vec![SubTaskDoc { label: "s".into(), formula: "F[0,5] Z".into(), mode: ModeId::Steer, horizon: 5 }],
        });
        let w = doc.workspace().unwrap();
        assert!(doc.missions(&w).unwrap_err().to_string().contains("Z"));
    }
}
