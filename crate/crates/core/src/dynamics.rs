//! Hybrid quadrotor model: linearized modes around hover, the mode graph and
//! exact zero-order-hold discretization.
//!
//! State order is `[x, y, z, vx, vy, vz, phi, theta, w_phi, w_theta]` with yaw
//! and yaw rate removed; inputs are `[F - m g, tau_x, tau_y]`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const STATE_DIM: usize = 10;
pub const INPUT_DIM: usize = 3;
pub const DEFAULT_DT: f64 = 0.2;

pub const IX: usize = 0;
pub const IY: usize = 1;
pub const IZ: usize = 2;
pub const IVX: usize = 3;
pub const IVY: usize = 4;
pub const IVZ: usize = 5;
pub const IPHI: usize = 6;
pub const ITHETA: usize = 7;
pub const IWPHI: usize = 8;
pub const IWTHETA: usize = 9;

pub const STATE_NAMES: [&str; STATE_DIM] = ["x", "y", "z", "vx", "vy", "vz", "phi", "theta", "wphi", "wtheta"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModeId {
    TakeOff,
    Land,
    Hover,
    Steer,
    Grasp,
}

impl ModeId {
    pub const ALL: [ModeId; 5] = [ModeId::TakeOff, ModeId::Land, ModeId::Hover, ModeId::Steer, ModeId::Grasp];
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeId::TakeOff => "TakeOff",
            ModeId::Land => "Land",
            ModeId::Hover => "Hover",
            ModeId::Steer => "Steer",
            ModeId::Grasp => "Grasp",
        })
    }
}

impl FromStr for ModeId {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "takeoff" => ModeId::TakeOff,
            "land" => ModeId::Land,
            "hover" => ModeId::Hover,
            "steer" => ModeId::Steer,
            "grasp" => ModeId::Grasp,
            _ => return Err(DynamicsError::UnknownMode(s.to_string())),
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("mass must be positive, got {0}")]
    BadMass(f64),
    #[error("inertia must be symmetric positive definite")]
    BadInertia,
    #[error("neighborhood radius {rho} is smaller than twice the safety radius {r_safe}")]
    BadRadii { rho: f64, r_safe: f64 },
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("mode {0} has no direct dynamics")]
    NotEncodable(ModeId),
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadParams {
    pub mass: f64,
    pub inertia: [[f64; 3]; 3],
    pub gravity: f64,
    pub altitude_cap: f64,
    pub r_safe: f64,
    pub rho: f64,
    pub max_tilt: f64,
    pub max_rate: f64,
    pub max_torque: f64,
    /// Thrust deviation bound as a fraction of `m g`.
    pub thrust_margin: f64,
    pub steer_speed: f64,
    pub slow_speed: f64,
    pub vertical_speed: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            inertia: [[0.01, 0.0, 0.0], [0.0, 0.01, 0.0], [0.0, 0.0, 0.02]],
            gravity: 9.81,
            altitude_cap: 1.5,
            r_safe: 0.35,
            rho: 2.0,
            max_tilt: 0.5,
            max_rate: 4.0,
            max_torque: 0.1,
            thrust_margin: 0.5,
            steer_speed: 1.5,
            slow_speed: 0.5,
            vertical_speed: 0.5,
        }
    }
}

impl QuadParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.mass > 0.0) {
            return Err(DynamicsError::BadMass(self.mass));
        }
        let j = self.inertia_matrix();
        if (j - j.transpose()).abs().max() > 1e-12 || j.cholesky().is_none() {
            return Err(DynamicsError::BadInertia);
        }
        if self.rho < 2.0 * self.r_safe {
            return Err(DynamicsError::BadRadii { rho: self.rho, r_safe: self.r_safe });
        }
        Ok(())
    }

    pub fn inertia_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, k| self.inertia[i][k])
    }

    pub fn hover_thrust(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Minimum infinity-norm distance between two vehicles.
    pub fn separation(&self) -> f64 {
        2.0 * self.r_safe
    }
}

/// Continuous-time linear dynamics of one mode with its admissible box.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMode {
    pub id: ModeId,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    /// Bounds on the states reached in this mode; positions are left to the workspace.
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub operating_point: String,
}

impl LinearMode {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Whether `x` lies inside this mode's state box, up to `tol`.
    pub fn admits(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.x_min.iter().zip(&self.x_max))
            .all(|(&v, (&lo, &hi))| v >= lo - tol && v <= hi + tol)
    }
}

/// Hover linearization: position integrates velocity, tilt drives horizontal
/// acceleration, thrust deviation drives vertical acceleration.
pub fn hover_mode(p: &QuadParams) -> Result<LinearMode, DynamicsError> {
    p.validate()?;
    let j_inv = p.inertia_matrix().try_inverse().ok_or(DynamicsError::BadInertia)?;
    let mut a = DMatrix::zeros(STATE_DIM, STATE_DIM);
    for k in 0..3 {
        a[(IX + k, IVX + k)] = 1.0;
    }
    a[(IVX, ITHETA)] = p.gravity;
    a[(IVY, IPHI)] = -p.gravity;
    a[(IPHI, IWPHI)] = 1.0;
    a[(ITHETA, IWTHETA)] = 1.0;

    let mut b = DMatrix::zeros(STATE_DIM, INPUT_DIM);
    b[(IVZ, 0)] = 1.0 / p.mass;
    for r in 0..2 {
        for c in 0..2 {
            b[(IWPHI + r, 1 + c)] = j_inv[(r, c)];
        }
    }

    let thrust = p.thrust_margin * p.hover_thrust();
    let u_min = vec![-thrust, -p.max_torque, -p.max_torque];
    let u_max = vec![thrust, p.max_torque, p.max_torque];
    let (x_min, x_max) = state_box(p, p.slow_speed, -p.vertical_speed, p.vertical_speed);
    Ok(LinearMode {
        id: ModeId::Hover,
        a,
        b,
        u_min,
        u_max,
        x_min,
        x_max,
        operating_point: format!("psi = 0, F = {:.3} N, zero velocity", p.hover_thrust()),
    })
}

fn state_box(p: &QuadParams, vxy: f64, vz_lo: f64, vz_hi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::NEG_INFINITY; STATE_DIM];
    let mut hi = vec![f64::INFINITY; STATE_DIM];
    hi[IZ] = p.altitude_cap;
    for k in [IVX, IVY] {
        lo[k] = -vxy;
        hi[k] = vxy;
    }
    lo[IVZ] = vz_lo;
    hi[IVZ] = vz_hi;
    for k in [IPHI, ITHETA] {
        lo[k] = -p.max_tilt;
        hi[k] = p.max_tilt;
    }
    for k in [IWPHI, IWTHETA] {
        lo[k] = -p.max_rate;
        hi[k] = p.max_rate;
    }
    (lo, hi)
}

/// Steer, TakeOff and Land share the hover matrices and differ in their boxes.
pub fn steer_takeoff_land_modes(p: &QuadParams) -> Result<BTreeMap<ModeId, LinearMode>, DynamicsError> {
    let hover = hover_mode(p)?;
    let mut out = BTreeMap::new();

    let (x_min, x_max) = state_box(p, p.steer_speed, -p.vertical_speed, p.vertical_speed);
    out.insert(
        ModeId::Steer,
        LinearMode {
            id: ModeId::Steer,
            x_min,
            x_max,
            operating_point: format!("psi = 0, horizontal speed up to {} m/s", p.steer_speed),
            ..hover.clone()
        },
    );
    let (x_min, x_max) = state_box(p, p.slow_speed, 0.0, p.vertical_speed);
    out.insert(
        ModeId::TakeOff,
        LinearMode {
            id: ModeId::TakeOff,
            x_min,
            x_max,
            operating_point: format!("F = {:.3} N trim, climb setpoint +{} m/s", p.hover_thrust(), p.vertical_speed),
            ..hover.clone()
        },
    );
    let (x_min, x_max) = state_box(p, p.slow_speed, -p.vertical_speed, 0.0);
    out.insert(
        ModeId::Land,
        LinearMode {
            id: ModeId::Land,
            x_min,
            x_max,
            operating_point: format!("F = {:.3} N trim, descent setpoint -{} m/s", p.hover_thrust(), p.vertical_speed),
            ..hover
        },
    );
    Ok(out)
}

/// Exact zero-order hold: `(exp(A dt), int_0^dt exp(A s) ds B)`.
///
/// Nilpotent `A` (the hover model has `A^4 = 0`) gives a terminating series;
/// otherwise the augmented matrix exponential is used.
pub fn discretize_zoh(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> Result<(DMatrix<f64>, DMatrix<f64>), DynamicsError> {
    if !(dt > 0.0) {
        return Err(DynamicsError::BadTimeStep(dt));
    }
    let n = a.nrows();
    let m = b.ncols();
    if let Some(k) = nilpotency_index(a) {
        let mut ad = DMatrix::identity(n, n);
        let mut gamma = DMatrix::identity(n, n) * dt;
        let mut power = DMatrix::identity(n, n);
        let mut fact = 1.0;
        for i in 1..k {
            power = &power * a;
            fact *= i as f64;
            ad += &power * (dt.powi(i as i32) / fact);
            gamma += &power * (dt.powi(i as i32 + 1) / (fact * (i + 1) as f64));
        }
        return Ok((ad, gamma * b));
    }
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, m)).copy_from(&(b * dt));
    let e = aug.exp();
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned()))
}

/// Smallest `k` with `A^k = 0` exactly, if any.
pub fn nilpotency_index(a: &DMatrix<f64>) -> Option<usize> {
    let n = a.nrows();
    let mut power = DMatrix::identity(n, n);
    for k in 1..=n {
        power = &power * a;
        if power.iter().all(|&v| v == 0.0) {
            return Some(k);
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeEdge {
    pub from: ModeId,
    pub to: ModeId,
    pub guard: &'static str,
}

/// Discrete-time matrices of one mode.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMode {
    pub mode: LinearMode,
    pub ad: DMatrix<f64>,
    pub bd: DMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct HybridModel {
    pub params: QuadParams,
    pub modes: BTreeMap<ModeId, LinearMode>,
    pub edges: Vec<ModeEdge>,
    pub dt: f64,
}

impl HybridModel {
    pub fn new(params: QuadParams) -> Result<Self, DynamicsError> {
        Self::with_dt(params, DEFAULT_DT)
    }

    pub fn with_dt(params: QuadParams, dt: f64) -> Result<Self, DynamicsError> {
        if !(dt > 0.0) {
            return Err(DynamicsError::BadTimeStep(dt));
        }
        let mut modes = steer_takeoff_land_modes(&params)?;
        modes.insert(ModeId::Hover, hover_mode(&params)?);
        use ModeId::*;
        let edges = [
            (TakeOff, Hover, "target altitude reached"),
            (TakeOff, Steer, "target altitude reached"),
            (Hover, Hover, "wait"),
            (Hover, Steer, "waypoint assigned"),
            (Hover, Land, "above landing zone"),
            (Hover, Grasp, "above object"),
            (Steer, Hover, "speed below hover bound"),
            (Steer, Steer, "next waypoint"),
            (Steer, Grasp, "above object, speed below hover bound"),
            (Steer, Land, "above landing zone, speed below hover bound"),
            (Grasp, Hover, "object secured"),
            (Grasp, Steer, "object secured"),
            (Land, TakeOff, "on ground"),
        ]
        .into_iter()
        .map(|(from, to, guard)| ModeEdge { from, to, guard })
        .collect();
        Ok(Self { params, modes, edges, dt })
    }

    pub fn transition_allowed(&self, from: ModeId, to: ModeId) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn mode(&self, id: ModeId) -> Result<&LinearMode, DynamicsError> {
        self.modes.get(&id).ok_or(DynamicsError::NotEncodable(id))
    }

    pub fn discrete(&self, id: ModeId) -> Result<DiscreteMode, DynamicsError> {
        let mode = self.mode(id)?.clone();
        let (ad, bd) = discretize_zoh(&mode.a, &mode.b, self.dt)?;
        Ok(DiscreteMode { mode, ad, bd })
    }

    /// State box a vehicle must satisfy when control passes to `id`; for
    /// Grasp this is the entry box of its first phase.
    pub fn entry_box(&self, id: ModeId) -> (Vec<f64>, Vec<f64>) {
        let first = if id == ModeId::Grasp { grasp_sequence()[0].0 } else { id };
        let m = &self.modes[&first];
        (m.x_min.clone(), m.x_max.clone())
    }

    /// Whether a path `from -> ... -> to` exists that never passes `via`.
    pub fn reachable_avoiding(&self, from: ModeId, to: ModeId, via: ModeId) -> bool {
        let mut seen = vec![from];
        let mut stack = vec![from];
        while let Some(m) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.from == m) {
                if e.to == to {
                    return true;
                }
                if e.to != via && !seen.contains(&e.to) {
                    seen.push(e.to);
                    stack.push(e.to);
                }
            }
        }
        false
    }
}

/// Grasp as a sequence of primitive modes with their guards.
pub fn grasp_sequence() -> Vec<(ModeId, &'static str)> {
    vec![
        (ModeId::Hover, "positioned above the object"),
        (ModeId::Land, "touchdown, object grasped instantly"),
        (ModeId::TakeOff, "climb out with payload"),
    ]
}
