//! Bounded 3D workspace with labeled regions, each a union of convex
//! polytopes, and the labeling map from positions to proposition sets.

pub mod rescue;

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use crate::encoder::model::{MilpModel, Sense};
use crate::mtl::Proposition;
use crate::solver::{solve_lp, SolveStatus, SolverConfig};

/// Containment tolerance of the labeling map, in meters.
pub const CONTAINMENT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("halfspace normal must be nonzero")]
    ZeroNormal,
    #[error("region `{0}` has no convex parts")]
    NoParts(String),
    #[error("region `{region}` part {part} has no halfspaces")]
    NoHalfspaces { region: String, part: usize },
    #[error("region `{region}` part {part} is empty")]
    EmptyPolytope { region: String, part: usize },
    #[error("region `{region}` part {part} lies outside the workspace bounds")]
    OutsideBounds { region: String, part: usize },
    #[error("region `{region}` has prime threshold {z} outside the workspace height")]
    BadPrimeThreshold { region: String, z: f64 },
    #[error("duplicate region `{0}`")]
    DuplicateRegion(String),
    #[error("obstacle `{0}` is not a region")]
    UnknownObstacle(String),
    #[error("bounds are empty or not finite")]
    BadBounds,
    #[error("point {0:?} lies outside the workspace")]
    OutOfBounds([f64; 3]),
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Scenario(String),
}

/// `{x : h^T x <= a}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Halfspace {
    pub h: Vector3<f64>,
    pub a: f64,
}

impl Halfspace {
    pub fn new(h: [f64; 3], a: f64) -> Result<Self, WorkspaceError> {
        let h = Vector3::from(h);
        if h == Vector3::zeros() {
            return Err(WorkspaceError::ZeroNormal);
        }
        Ok(Self { h, a })
    }

    pub fn value(&self, x: &Vector3<f64>) -> f64 {
        self.h.dot(x) - self.a
    }

    pub fn contains(&self, x: &Vector3<f64>, tol: f64) -> bool {
        self.value(x) <= tol
    }

    /// Range of `h^T x` over an axis-aligned box.
    pub fn range_over(&self, lo: &Vector3<f64>, hi: &Vector3<f64>) -> (f64, f64) {
        let mut min = 0.0;
        let mut max = 0.0;
        for k in 0..3 {
            let (p, q) = (self.h[k] * lo[k], self.h[k] * hi[k]);
            min += p.min(q);
            max += p.max(q);
        }
        (min, max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolytope {
    pub halfspaces: Vec<Halfspace>,
}

impl ConvexPolytope {
    pub fn new(halfspaces: Vec<Halfspace>) -> Self {
        Self { halfspaces }
    }

    /// The axis-aligned box `lo <= x <= hi`, skipping infinite sides.
    pub fn from_box(lo: [f64; 3], hi: [f64; 3]) -> Self {
        let mut hs = Vec::new();
        for k in 0..3 {
            let mut e = [0.0; 3];
            if hi[k].is_finite() {
                e[k] = 1.0;
                hs.push(Halfspace { h: Vector3::from(e), a: hi[k] });
            }
            if lo[k].is_finite() {
                e[k] = -1.0;
                hs.push(Halfspace { h: Vector3::from(e), a: -lo[k] });
            }
        }
        Self { halfspaces: hs }
    }

    pub fn contains(&self, x: &Vector3<f64>, tol: f64) -> bool {
        self.halfspaces.iter().all(|h| h.contains(x, tol))
    }

    /// Whether the polytope meets `bounds`, decided by an LP feasibility solve.
    pub fn intersects(&self, bounds: &Aabb) -> bool {
        let mut m = MilpModel::new("polytope-feasibility");
        let v: Vec<_> = (0..3).map(|k| m.continuous(format!("p{k}"), bounds.lo[k], bounds.hi[k])).collect();
        for (i, h) in self.halfspaces.iter().enumerate() {
            let terms: Vec<_> = (0..3).filter(|&k| h.h[k] != 0.0).map(|k| (v[k], h.h[k])).collect();
            m.add_constraint(format!("h{i}"), terms, Sense::Le, h.a).expect("nonzero normal");
        }
        matches!(solve_lp(&m, &SolverConfig::default()), Ok(s) if s.status == SolveStatus::Optimal)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub lo: Vector3<f64>,
    pub hi: Vector3<f64>,
}

impl Aabb {
    pub fn new(lo: [f64; 3], hi: [f64; 3]) -> Self {
        Self { lo: Vector3::from(lo), hi: Vector3::from(hi) }
    }

    pub fn contains(&self, x: &Vector3<f64>, tol: f64) -> bool {
        (0..3).all(|k| x[k] >= self.lo[k] - tol && x[k] <= self.hi[k] + tol)
    }

    pub fn diagonal(&self) -> f64 {
        (self.hi - self.lo).norm()
    }

    pub fn is_valid(&self) -> bool {
        (0..3).all(|k| self.lo[k].is_finite() && self.hi[k].is_finite() && self.lo[k] < self.hi[k])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub proposition: Proposition,
    pub parts: Vec<ConvexPolytope>,
    /// Altitude above which the primed variant of the region holds.
    pub z_prime: Option<f64>,
}

impl Region {
    pub fn new(name: &str, parts: Vec<ConvexPolytope>) -> Self {
        Self { proposition: Proposition::new(name), parts, z_prime: None }
    }

    pub fn with_prime(mut self, z: f64) -> Self {
        self.z_prime = Some(z);
        self
    }

    pub fn name(&self) -> &str {
        &self.proposition.name
    }

    /// Convex parts of the primed variant: each footprint part with `z >= z_prime`.
    pub fn primed_parts(&self) -> Option<Vec<ConvexPolytope>> {
        let z = self.z_prime?;
        let floor = Halfspace { h: Vector3::new(0.0, 0.0, -1.0), a: -z };
        Some(
            self.parts
                .iter()
                .map(|p| {
                    let mut hs = p.halfspaces.clone();
                    hs.push(floor.clone());
                    ConvexPolytope::new(hs)
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Workspace {
    pub bounds: Aabb,
    pub regions: Vec<Region>,
    pub obstacles: BTreeSet<String>,
}

impl Workspace {
    /// Validates and assembles a workspace.
    pub fn new(bounds: Aabb, regions: Vec<Region>, obstacles: BTreeSet<String>) -> Result<Self, WorkspaceError> {
        let w = Self { bounds, regions, obstacles };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), WorkspaceError> {
        if !self.bounds.is_valid() {
            return Err(WorkspaceError::BadBounds);
        }
        let far = Aabb::new([-1e6; 3], [1e6; 3]);
        let mut seen = BTreeSet::new();
        for r in &self.regions {
            let name = r.name().to_string();
            if !seen.insert(name.clone()) {
                return Err(WorkspaceError::DuplicateRegion(name));
            }
            if r.parts.is_empty() {
                return Err(WorkspaceError::NoParts(name));
            }
            for (i, p) in r.parts.iter().enumerate() {
                if p.halfspaces.is_empty() {
                    return Err(WorkspaceError::NoHalfspaces { region: name, part: i });
                }
                if !p.intersects(&far) {
                    return Err(WorkspaceError::EmptyPolytope { region: name, part: i });
                }
                if !p.intersects(&self.bounds) {
                    return Err(WorkspaceError::OutsideBounds { region: name, part: i });
                }
            }
            if let Some(z) = r.z_prime {
                if !(z >= self.bounds.lo[2] && z <= self.bounds.hi[2]) {
                    return Err(WorkspaceError::BadPrimeThreshold { region: name, z });
                }
            }
        }
        for o in &self.obstacles {
            if !seen.contains(o) {
                return Err(WorkspaceError::UnknownObstacle(o.clone()));
            }
        }
        Ok(())
    }

    pub fn region(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name() == name)
    }

    /// The proposition set: every region plus primed variants where defined.
    pub fn propositions(&self) -> BTreeSet<Proposition> {
        let mut out = BTreeSet::new();
        for r in &self.regions {
            out.insert(r.proposition.clone());
            if r.z_prime.is_some() {
                out.insert(Proposition::primed(r.name()));
            }
        }
        out
    }

    /// Convex parts whose union is the set where `p` holds.
    pub fn parts_of(&self, p: &Proposition) -> Option<Vec<ConvexPolytope>> {
        let r = self.region(&p.name)?;
        if p.primed {
            r.primed_parts()
        } else {
            Some(r.parts.clone())
        }
    }

    /// Propositions holding at position `x`.
    pub fn label_point(&self, x: &Vector3<f64>) -> Result<BTreeSet<Proposition>, WorkspaceError> {
        if !self.bounds.contains(x, CONTAINMENT_TOL) {
            return Err(WorkspaceError::OutOfBounds([x[0], x[1], x[2]]));
        }
        Ok(self.label_unchecked(x))
    }

    /// Labels without the bounds check (positions slightly outside still get labels).
    pub fn label_unchecked(&self, x: &Vector3<f64>) -> BTreeSet<Proposition> {
        let mut out = BTreeSet::new();
        for r in &self.regions {
            if r.parts.iter().any(|p| p.contains(x, CONTAINMENT_TOL)) {
                out.insert(r.proposition.clone());
                if let Some(z) = r.z_prime {
                    if x[2] >= z - CONTAINMENT_TOL {
                        out.insert(Proposition::primed(r.name()));
                    }
                }
            }
        }
        out
    }

    pub fn is_obstacle(&self, x: &Vector3<f64>) -> bool {
        self.obstacles
            .iter()
            .filter_map(|o| self.region(o))
            .any(|r| r.parts.iter().any(|p| p.contains(x, CONTAINMENT_TOL)))
    }

    /// Reads a scenario file and returns its workspace.
    pub fn load(path: &Path) -> Result<Self, WorkspaceError> {
        let text = std::fs::read_to_string(path)?;
        let doc: crate::scenario::ScenarioFile = serde_json::from_str(&text)?;
        doc.workspace()
    }
}
