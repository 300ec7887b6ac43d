//! Shared fixtures: a two-region 1D world and random formula/trace generators.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mtlplan::encoder::{encode_formula, free_position_grid, BigMConfig, Encoding};
use mtlplan::mtl::{evaluate_at, Formula, Proposition, Trace};
use mtlplan::solver::{solve_milp, SolveStatus, SolverConfig};
use mtlplan::workspace::{Aabb, ConvexPolytope, Region, Workspace};
use mtlplan::MilpModel;
use nalgebra::Vector3;
use proptest::prelude::*;

/// Sample points along x; their labels are {p}, {p,q}, {q} and {}.
pub const SAMPLES: [f64; 4] = [0.5, 1.5, 2.5, 3.5];

/// `p` covers x in [0,2] and `q` covers x in [1,3] over x in [0,4].
pub fn world_1d() -> Workspace {
    let bounds = Aabb::new([0.0, 0.0, 0.0], [4.0, 1.0, 1.0]);
    let p = Region::new("p", vec![ConvexPolytope::from_box([0.0, 0.0, 0.0], [2.0, 1.0, 1.0])]);
    let q = Region::new("q", vec![ConvexPolytope::from_box([1.0, 0.0, 0.0], [3.0, 1.0, 1.0])]);
    Workspace::new(bounds, vec![p, q], BTreeSet::new()).unwrap()
}

pub fn point(x: f64) -> Vector3<f64> {
    Vector3::new(x, 0.5, 0.5)
}

pub fn trace_of(w: &Workspace, xs: &[f64]) -> Trace {
    Trace::new(xs.iter().map(|&x| w.label_point(&point(x)).unwrap()).collect())
}

/// Encodes `f` over the fixed positions `xs` and reports whether the MILP is
/// feasible.
pub fn encoded_truth(w: &Workspace, f: &Formula, xs: &[f64]) -> bool {
    let mut model = MilpModel::new("oracle");
    let pos = free_position_grid(&mut model, &w.bounds, xs.len());
    for (ids, &x) in pos.iter().zip(xs) {
        let p = point(x);
        for k in 0..3 {
            model.fix(ids[k], p[k]);
        }
    }
    let boxes = vec![w.bounds; xs.len()];
    let mut enc = Encoding::new(model, w, BigMConfig::for_workspace(w), pos, boxes, false);
    encode_formula(&mut enc, f).unwrap();
    let sol = solve_milp(&enc.model, &SolverConfig::default()).unwrap();
    match sol.status {
        SolveStatus::Optimal => true,
        SolveStatus::Infeasible => false,
        other => panic!("unexpected solver status {other}"),
    }
}

pub fn oracle_truth(w: &Workspace, f: &Formula, xs: &[f64]) -> bool {
    evaluate_at(f, &trace_of(w, xs), 0).unwrap()
}

fn nnf_leaf() -> impl Strategy<Value = Formula> {
    prop_oneof![
        Just(Formula::True),
        Just(Formula::atom("p")),
        Just(Formula::atom("q")),
        Just(Formula::not(Formula::atom("p"))),
        Just(Formula::not(Formula::atom("q"))),
    ]
}

/// Bounded NNF formulas over `p` and `q` with at most three operator levels.
pub fn nnf_formula() -> impl Strategy<Value = Formula> {
    nnf_leaf()
        .prop_recursive(3, 16, 3, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::and),
                prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::or),
                inner.clone().prop_map(Formula::next),
                (0usize..=2, 0usize..=2, inner.clone()).prop_map(|(lo, w, g)| Formula::eventually(lo, lo + w, g)),
                (0usize..=2, 0usize..=2, inner.clone()).prop_map(|(lo, w, g)| Formula::always(lo, lo + w, g)),
                (0usize..=2, 0usize..=2, inner.clone(), inner).prop_map(|(lo, w, p, q)| Formula::until(lo, lo + w, p, q)),
            ]
        })
        .prop_filter("depth and horizon", |f| f.depth() <= 3 && mtlplan::mtl::horizon_of(f) <= 8)
}

/// Formulas with negation anywhere except above an until.
pub fn general_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![Just(Formula::True), Just(Formula::atom("p")), Just(Formula::atom("q"))];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(Formula::or),
            inner.clone().prop_map(Formula::next),
            (0usize..=2, 0usize..=2, inner.clone()).prop_map(|(lo, w, g)| Formula::eventually(lo, lo + w, g)),
            (0usize..=2, 0usize..=2, inner).prop_map(|(lo, w, g)| Formula::always(lo, lo + w, g)),
        ]
    })
}

/// Random labels over `p` and `q`.
pub fn label_trace(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Trace> {
    prop::collection::vec(0u8..4, len).prop_map(|bits| {
        Trace::new(
            bits.into_iter()
                .map(|b| {
                    let mut s = BTreeSet::new();
                    if b & 1 == 1 {
                        s.insert(Proposition::new("p"));
                    }
                    if b & 2 == 2 {
                        s.insert(Proposition::new("q"));
                    }
                    s
                })
                .collect(),
        )
    })
}

/// A formula and sample positions long enough to evaluate it, at most 10.
pub fn formula_and_positions() -> impl Strategy<Value = (Formula, Vec<f64>)> {
    nnf_formula().prop_flat_map(|f| {
        let need = mtlplan::mtl::horizon_of(&f) + 1;
        let xs = prop::collection::vec(prop::sample::select(SAMPLES.to_vec()), need..=10);
        (Just(f), xs)
    })
}
