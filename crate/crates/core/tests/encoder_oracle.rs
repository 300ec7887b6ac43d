//! The MILP encoding of a formula over fixed positions is feasible exactly
//! when the trace semantics say the formula holds.

mod common;

use common::{encoded_truth, formula_and_positions, oracle_truth, world_1d};
use mtlplan::mtl::{Formula, Interval};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn encoding_agrees_with_trace_semantics((f, xs) in formula_and_positions()) {
        let w = world_1d();
        prop_assert_eq!(encoded_truth(&w, &f, &xs), oracle_truth(&w, &f, &xs), "{} on {:?}", f, xs);
    }
}

#[test]
fn untimed_operators_cover_the_whole_grid() {
    let w = world_1d();
    let g = |f: Formula| Formula::Always(Interval { lo: 0, hi: None }, Box::new(f));
    let ev = |f: Formula| Formula::Eventually(Interval { lo: 0, hi: None }, Box::new(f));
    let cases = [
        (g(Formula::atom("p")), vec![0.5, 1.5, 0.5, 1.5]),
        (g(Formula::atom("p")), vec![0.5, 1.5, 0.5, 2.5]),
        (ev(Formula::atom("q")), vec![0.5, 0.5, 0.5, 2.5]),
        (ev(Formula::atom("q")), vec![0.5, 0.5, 0.5, 3.5]),
        (g(Formula::eventually(0, 1, Formula::atom("q"))), vec![2.5, 0.5, 1.5, 0.5, 2.5]),
        (g(Formula::eventually(0, 1, Formula::atom("q"))), vec![2.5, 0.5, 0.5, 1.5, 3.5]),
    ];
    for (f, xs) in cases {
        assert_eq!(encoded_truth(&w, &f, &xs), oracle_truth(&w, &f, &xs), "{f} on {xs:?}");
    }
}

#[test]
fn sample_labels_cover_all_region_combinations() {
    let w = world_1d();
    let t = common::trace_of(&w, &common::SAMPLES);
    let sizes: Vec<usize> = t.labels.iter().map(|s| s.len()).collect();
    assert_eq!(sizes, vec![1, 2, 1, 0]);
}
