//! Randomized agreement check between the MILP encoding and the trace
//! semantics, on a 1D workspace with two overlapping regions.

use std::collections::BTreeSet;
use std::time::Instant;

use anyhow::{bail, Result};
use mtlplan::encoder::{encode_formula, free_position_grid, BigMConfig, Encoding};
use mtlplan::mtl::{evaluate_at, horizon_of, Formula, Interval, Trace};
use mtlplan::solver::{solve_milp, SolveStatus, SolverConfig};
use mtlplan::workspace::{Aabb, ConvexPolytope, Region, Workspace};
use mtlplan::MilpModel;
use nalgebra::Vector3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sample points along x; their labels are {p}, {p,q}, {q} and {}.
const SAMPLES: [f64; 4] = [0.5, 1.5, 2.5, 3.5];

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub cases: usize,
    pub seed: u64,
    pub max_depth: usize,
    pub max_horizon: usize,
    pub max_trace: usize,
}

#[derive(Clone, Debug, Default)]
pub struct SuiteResult {
    pub cases: usize,
    pub agreements: usize,
    pub satisfied: usize,
    /// First few disagreeing cases, as `formula on positions`.
    pub mismatches: Vec<String>,
    pub seconds: f64,
}

impl SuiteResult {
    pub fn all_agree(&self) -> bool {
        self.agreements == self.cases
    }
}

/// `p` covers x in [0,2] and `q` covers x in [1,3] over x in [0,4].
pub fn world_1d() -> Workspace {
    let bounds = Aabb::new([0.0, 0.0, 0.0], [4.0, 1.0, 1.0]);
    let p = Region::new("p", vec![ConvexPolytope::from_box([0.0, 0.0, 0.0], [2.0, 1.0, 1.0])]);
    let q = Region::new("q", vec![ConvexPolytope::from_box([1.0, 0.0, 0.0], [3.0, 1.0, 1.0])]);
    Workspace::new(bounds, vec![p, q], BTreeSet::new()).expect("valid workspace")
}

fn point(x: f64) -> Vector3<f64> {
    Vector3::new(x, 0.5, 0.5)
}

fn leaf(rng: &mut ChaCha8Rng) -> Formula {
    let atom = Formula::atom(["p", "q"].choose(rng).unwrap());
    match rng.gen_range(0..5) {
        0 => Formula::True,
        1 | 2 => atom,
        _ => Formula::not(atom),
    }
}

fn window(rng: &mut ChaCha8Rng) -> (usize, usize) {
    let lo = rng.gen_range(0..=2);
    (lo, lo + rng.gen_range(0..=2))
}

/// Bounded NNF formula with at most `levels` operators on any path.
fn formula(rng: &mut ChaCha8Rng, levels: usize) -> Formula {
    if levels == 0 || rng.gen_bool(0.25) {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| formula(rng, levels - 1);
    match rng.gen_range(0..6) {
        0 => Formula::and((0..rng.gen_range(2..=3)).map(|_| sub(rng)).collect()),
        1 => Formula::or((0..rng.gen_range(2..=3)).map(|_| sub(rng)).collect()),
        2 => Formula::next(sub(rng)),
        3 => {
            let (lo, hi) = window(rng);
            Formula::eventually(lo, hi, sub(rng))
        }
        4 => {
            let (lo, hi) = window(rng);
            Formula::always(lo, hi, sub(rng))
        }
        _ => {
            let (lo, hi) = window(rng);
            Formula::until(lo, hi, sub(rng), sub(rng))
        }
    }
}

/// A formula within the depth and horizon limits. Some roots are untimed,
/// covering the rest of the trace.
fn sample_formula(rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Formula {
    loop {
        let mut f = formula(rng, cfg.max_depth);
        if f.depth() < cfg.max_depth && rng.gen_bool(0.15) {
            let i = Interval { lo: rng.gen_range(0..=1), hi: None };
            f = if rng.gen_bool(0.5) { Formula::Always(i, Box::new(f)) } else { Formula::Eventually(i, Box::new(f)) };
        }
        if f.depth() <= cfg.max_depth && horizon_of(&f) <= cfg.max_horizon && horizon_of(&f) < cfg.max_trace {
            return f;
        }
    }
}

fn encoded_truth(w: &Workspace, f: &Formula, xs: &[f64]) -> Result<bool> {
    let mut model = MilpModel::new("suite");
    let pos = free_position_grid(&mut model, &w.bounds, xs.len());
    for (ids, &x) in pos.iter().zip(xs) {
        let p = point(x);
        for k in 0..3 {
            model.fix(ids[k], p[k]);
        }
    }
    let boxes = vec![w.bounds; xs.len()];
    let mut enc = Encoding::new(model, w, BigMConfig::for_workspace(w), pos, boxes, false);
    encode_formula(&mut enc, f)?;
    match solve_milp(&enc.model, &SolverConfig::default())?.status {
        SolveStatus::Optimal => Ok(true),
        SolveStatus::Infeasible => Ok(false),
        other => bail!("solver stopped with status {other} on {f}"),
    }
}

pub fn run(cfg: &SuiteConfig) -> Result<SuiteResult> {
    let start = Instant::now();
    let w = world_1d();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = SuiteResult { cases: cfg.cases, ..Default::default() };
    for _ in 0..cfg.cases {
        let f = sample_formula(&mut rng, cfg);
        let len = rng.gen_range(horizon_of(&f) + 1..=cfg.max_trace);
        let xs: Vec<f64> = (0..len).map(|_| *SAMPLES.choose(&mut rng).unwrap()).collect();
        let trace = Trace::new(xs.iter().map(|&x| w.label_unchecked(&point(x))).collect());
        let oracle = evaluate_at(&f, &trace, 0)?;
        let encoded = encoded_truth(&w, &f, &xs)?;
        if oracle == encoded {
            out.agreements += 1;
        } else if out.mismatches.len() < 5 {
            out.mismatches.push(format!("{f} on {xs:?}: oracle {oracle}, encoding {encoded}"));
        }
        out.satisfied += usize::from(oracle);
    }
    out.seconds = start.elapsed().as_secs_f64();
    Ok(out)
}
