//! Mission planning for quadrotor fleets from Metric Temporal Logic
//! specifications.
//!
//! Formulas over polytopic regions are compiled into mixed-integer linear
//! programs against linearized hybrid dynamics, solved one sub-task at a time
//! with a built-in simplex / branch-and-bound solver, and the resulting
//! trajectories are composed and re-checked against the formula semantics.

pub mod dynamics;
pub mod encoder;
pub mod mtl;
pub mod planner;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod workspace;

pub use dynamics::{HybridModel, LinearMode, ModeId, QuadParams};
pub use encoder::model::{LinConstraint, MilpModel, MilpVar, Sense, VarId, VarKind};
pub use mtl::{Formula, Interval, Proposition, Trace};
pub use planner::{FleetPlan, Mission, SubTask, Trajectory};
pub use workspace::{ConvexPolytope, Halfspace, Region, Workspace};
