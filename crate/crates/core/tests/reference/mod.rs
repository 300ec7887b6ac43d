//! Reference models with known optima and a brute-force oracle for small
//! binary programs. Shared with the acceptance target.

#![allow(dead_code)]

use mtlplan::solver::SolveStatus;
use mtlplan::{MilpModel, Sense, VarId, VarKind};

pub const REL_TOL: f64 = 1e-6;
const INF: f64 = f64::INFINITY;

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * b.abs().max(1.0)
}

fn row(m: &mut MilpModel, name: &str, terms: &[(VarId, f64)], sense: Sense, rhs: f64) {
    m.add_constraint(name, terms.iter().copied(), sense, rhs).unwrap();
}

fn obj(m: &mut MilpModel, terms: &[(VarId, f64)]) {
    for &(v, c) in terms {
        m.add_objective(v, c);
    }
}

pub struct Case {
    pub name: &'static str,
    pub model: MilpModel,
    pub status: SolveStatus,
    pub objective: f64,
}

fn case(name: &'static str, status: SolveStatus, objective: f64, build: impl FnOnce(&mut MilpModel)) -> Case {
    let mut model = MilpModel::new(name);
    build(&mut model);
    Case { name, model, status, objective }
}

pub fn reference_cases() -> Vec<Case> {
    use SolveStatus::*;
    vec![
        case("lp_box", Optimal, -2.0, |m| {
            let (x, y) = (m.continuous("x", 0.0, INF), m.continuous("y", 0.0, INF));
            row(m, "cx", &[(x, 1.0)], Sense::Le, 1.0);
            row(m, "cy", &[(y, 1.0)], Sense::Le, 1.0);
            obj(m, &[(x, -1.0), (y, -1.0)]);
        }),
        case("lp_product_mix", Optimal, -36.0, |m| {
            let (x, y) = (m.continuous("x", 0.0, INF), m.continuous("y", 0.0, INF));
            row(m, "a", &[(x, 1.0)], Sense::Le, 4.0);
            row(m, "b", &[(y, 2.0)], Sense::Le, 12.0);
            row(m, "c", &[(x, 3.0), (y, 2.0)], Sense::Le, 18.0);
            obj(m, &[(x, -3.0), (y, -5.0)]);
        }),
        case("lp_covering", Optimal, 9.0, |m| {
            let (x, y) = (m.continuous("x", 0.0, INF), m.continuous("y", 0.0, INF));
            row(m, "a", &[(x, 1.0), (y, 1.0)], Sense::Ge, 4.0);
            row(m, "b", &[(x, 1.0), (y, 3.0)], Sense::Ge, 6.0);
            obj(m, &[(x, 2.0), (y, 3.0)]);
        }),
        case("lp_simplex_row", Optimal, 1.0, |m| {
            let v: Vec<_> = (0..3).map(|k| m.continuous(format!("x{k}"), 0.0, INF)).collect();
            row(m, "sum", &[(v[0], 1.0), (v[1], 1.0), (v[2], 1.0)], Sense::Eq, 1.0);
            obj(m, &[(v[0], 1.0), (v[1], 2.0), (v[2], 3.0)]);
        }),
        case("lp_free_variable", Optimal, -3.0, |m| {
            let x = m.continuous("x", -INF, INF);
            row(m, "lo", &[(x, 1.0)], Sense::Ge, -3.0);
            obj(m, &[(x, 1.0)]);
        }),
        case("lp_negative_bounds", Optimal, -3.0, |m| {
            let (x, y) = (m.continuous("x", -2.0, 5.0), m.continuous("y", -1.0, 3.0));
            row(m, "cap", &[(x, 1.0), (y, 1.0)], Sense::Le, 10.0);
            obj(m, &[(x, 1.0), (y, 1.0)]);
        }),
        case("lp_degenerate_vertex", Optimal, -1.0, |m| {
            let (x, y) = (m.continuous("x", 0.0, INF), m.continuous("y", 0.0, INF));
            row(m, "a", &[(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
            row(m, "b", &[(x, 1.0)], Sense::Le, 1.0);
            row(m, "c", &[(y, 1.0)], Sense::Le, 1.0);
            row(m, "d", &[(x, 1.0), (y, 2.0)], Sense::Le, 2.0);
            obj(m, &[(x, -1.0), (y, -1.0)]);
        }),
        case("lp_infeasible", Infeasible, f64::NAN, |m| {
            let (x, y) = (m.continuous("x", 0.0, INF), m.continuous("y", 0.0, INF));
            row(m, "a", &[(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
            row(m, "b", &[(x, 1.0), (y, 1.0)], Sense::Ge, 2.0);
        }),
        case("lp_unbounded", Unbounded, f64::NAN, |m| {
            let (x, y) = (m.continuous("x", 0.0, INF), m.continuous("y", 0.0, INF));
            row(m, "a", &[(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
            obj(m, &[(x, -1.0)]);
        }),
        case("lp_redundant_equalities", Optimal, -2.0, |m| {
            let (x, y) = (m.continuous("x", 0.0, INF), m.continuous("y", 0.0, INF));
            row(m, "a", &[(x, 1.0), (y, 1.0)], Sense::Eq, 2.0);
            row(m, "b", &[(x, 2.0), (y, 2.0)], Sense::Eq, 4.0);
            obj(m, &[(x, 1.0), (y, -1.0)]);
        }),
        case("lp_lower_rows", Optimal, 5.0, |m| {
            let (x, y) = (m.continuous("x", -INF, INF), m.continuous("y", -INF, INF));
            row(m, "a", &[(x, 1.0)], Sense::Ge, 1.0);
            row(m, "b", &[(y, 1.0)], Sense::Ge, 2.0);
            row(m, "c", &[(x, 1.0), (y, 1.0)], Sense::Ge, 5.0);
            obj(m, &[(x, 1.0), (y, 1.0)]);
        }),
        case("lp_transport", Optimal, 85.0, |m| {
            let cost = [[1.0, 4.0], [3.0, 2.0]];
            let x: Vec<Vec<_>> = (0..2).map(|i| (0..2).map(|j| m.continuous(format!("x{i}{j}"), 0.0, INF)).collect()).collect();
            for (i, s) in [20.0, 30.0].into_iter().enumerate() {
                row(m, &format!("supply{i}"), &[(x[i][0], 1.0), (x[i][1], 1.0)], Sense::Eq, s);
            }
            for (j, d) in [25.0, 25.0].into_iter().enumerate() {
                row(m, &format!("demand{j}"), &[(x[0][j], 1.0), (x[1][j], 1.0)], Sense::Eq, d);
            }
            for i in 0..2 {
                for j in 0..2 {
                    m.add_objective(x[i][j], cost[i][j]);
                }
            }
        }),
        case("lp_badly_scaled", Optimal, 1e-3, |m| {
            let (x, y) = (m.continuous("x", 0.0, INF), m.continuous("y", 0.0, INF));
            row(m, "a", &[(x, 1.0), (y, 1.0)], Sense::Ge, 1.0);
            obj(m, &[(x, 1e3), (y, 1e-3)]);
        }),
        case("milp_knapsack", Optimal, -23.0, |m| {
            let b: Vec<_> = (0..4).map(|k| m.binary(format!("b{k}"))).collect();
            let w = [3.0, 4.0, 2.0, 3.0];
            let v = [10.0, 13.0, 7.0, 8.0];
            row(m, "cap", &b.iter().zip(w).map(|(&b, w)| (b, w)).collect::<Vec<_>>(), Sense::Le, 7.0);
            obj(m, &b.iter().zip(v).map(|(&b, v)| (b, -v)).collect::<Vec<_>>());
        }),
        case("milp_assignment", Optimal, 12.0, |m| {
            let c = [[4.0, 2.0, 8.0], [4.0, 3.0, 7.0], [3.0, 1.0, 6.0]];
            let x: Vec<Vec<_>> = (0..3).map(|i| (0..3).map(|j| m.binary(format!("a{i}{j}"))).collect()).collect();
            for i in 0..3 {
                row(m, &format!("r{i}"), &(0..3).map(|j| (x[i][j], 1.0)).collect::<Vec<_>>(), Sense::Eq, 1.0);
                row(m, &format!("c{i}"), &(0..3).map(|j| (x[j][i], 1.0)).collect::<Vec<_>>(), Sense::Eq, 1.0);
                for j in 0..3 {
                    m.add_objective(x[i][j], c[i][j]);
                }
            }
        }),
        case("milp_set_cover", Optimal, 4.0, |m| {
            let sets: [(&[usize], f64); 5] = [(&[1, 2], 3.0), (&[2, 3], 2.0), (&[3, 4], 3.0), (&[1, 4], 2.0), (&[1, 2, 3, 4], 6.0)];
            let b: Vec<_> = (0..sets.len()).map(|k| m.binary(format!("s{k}"))).collect();
            for e in 1..=4 {
                let terms: Vec<_> = sets.iter().zip(&b).filter(|((s, _), _)| s.contains(&e)).map(|(_, &v)| (v, 1.0)).collect();
                row(m, &format!("cover{e}"), &terms, Sense::Ge, 1.0);
            }
            obj(m, &sets.iter().zip(&b).map(|((_, c), &v)| (v, *c)).collect::<Vec<_>>());
        }),
        case("milp_infeasible", Infeasible, f64::NAN, |m| {
            let (a, b) = (m.binary("a"), m.binary("b"));
            row(m, "c", &[(a, 1.0), (b, 1.0)], Sense::Ge, 3.0);
        }),
        case("milp_integer_infeasible", Infeasible, f64::NAN, |m| {
            let b: Vec<_> = (0..3).map(|k| m.binary(format!("b{k}"))).collect();
            row(m, "odd", &b.iter().map(|&v| (v, 2.0)).collect::<Vec<_>>(), Sense::Eq, 3.0);
        }),
        case("milp_fixed_charge", Optimal, 7.0, |m| {
            let (y1, y2) = (m.binary("y1"), m.binary("y2"));
            let (x1, x2) = (m.continuous("x1", 0.0, INF), m.continuous("x2", 0.0, INF));
            row(m, "on1", &[(x1, 1.0), (y1, -10.0)], Sense::Le, 0.0);
            row(m, "on2", &[(x2, 1.0), (y2, -10.0)], Sense::Le, 0.0);
            row(m, "demand", &[(x1, 1.0), (x2, 1.0)], Sense::Ge, 3.0);
            obj(m, &[(y1, 5.0), (x1, 1.0), (y2, 1.0), (x2, 2.0)]);
        }),
        case("milp_disjunction", Optimal, 3.0, |m| {
            let x = m.continuous("x", 0.0, 10.0);
            let t = m.continuous("t", 0.0, INF);
            let b = m.binary("b");
            row(m, "low", &[(x, 1.0), (b, -10.0)], Sense::Le, 2.0);
            row(m, "high", &[(x, 1.0), (b, -8.0)], Sense::Ge, 0.0);
            row(m, "abs1", &[(t, 1.0), (x, -1.0)], Sense::Ge, -5.0);
            row(m, "abs2", &[(t, 1.0), (x, 1.0)], Sense::Ge, 5.0);
            obj(m, &[(t, 1.0)]);
        }),
        case("milp_exactly_two", Optimal, 3.0, |m| {
            let b: Vec<_> = (0..3).map(|k| m.binary(format!("b{k}"))).collect();
            row(m, "two", &b.iter().map(|&v| (v, 2.0)).collect::<Vec<_>>(), Sense::Eq, 4.0);
            obj(m, &[(b[0], 1.0), (b[1], 2.0), (b[2], 3.0)]);
        }),
        case("milp_mixed", Optimal, -4.5, |m| {
            let x = m.continuous("x", 0.0, INF);
            let y = m.binary("y");
            row(m, "a", &[(x, 1.0), (y, 1.0)], Sense::Le, 3.5);
            row(m, "b", &[(x, 1.0)], Sense::Le, 2.7);
            obj(m, &[(x, -1.0), (y, -2.0)]);
        }),
        case("milp_odd_cycle", Optimal, -1.0, |m| {
            let b: Vec<_> = (0..3).map(|k| m.binary(format!("b{k}"))).collect();
            for k in 0..3 {
                row(m, &format!("link{k}"), &[(b[k], 1.0), (b[(k + 1) % 3], 1.0)], Sense::Le, 1.0);
            }
            obj(m, &b.iter().map(|&v| (v, -1.0)).collect::<Vec<_>>());
        }),
        case("milp_unbounded", Unbounded, f64::NAN, |m| {
            let x = m.continuous("x", 0.0, INF);
            let b = m.binary("b");
            row(m, "a", &[(x, 1.0), (b, -1.0)], Sense::Ge, 0.0);
            obj(m, &[(x, -1.0)]);
        }),
        case("milp_fixed_binary", Optimal, 5.0, |m| {
            let (a, b) = (m.binary("a"), m.binary("b"));
            m.fix(a, 1.0);
            row(m, "c", &[(a, 1.0), (b, 1.0)], Sense::Ge, 1.0);
            obj(m, &[(a, 5.0), (b, 1.0)]);
        }),
    ]
}

#[derive(Clone, Debug)]
pub struct BinaryProgram {
    pub cost: Vec<i32>,
    pub rows: Vec<(Vec<i32>, bool, i32)>,
}

impl BinaryProgram {
    pub fn model(&self) -> MilpModel {
        let mut m = MilpModel::new("enum");
        let b: Vec<_> = (0..self.cost.len()).map(|k| m.add_var(format!("b{k}"), VarKind::Binary, 0.0, 1.0)).collect();
        for (r, (coef, le, rhs)) in self.rows.iter().enumerate() {
            let terms: Vec<_> = b.iter().zip(coef).map(|(&v, &c)| (v, c as f64)).collect();
            let sense = if *le { Sense::Le } else { Sense::Ge };
            m.add_constraint(format!("r{r}"), terms, sense, *rhs as f64).unwrap();
        }
        for (&v, &c) in b.iter().zip(&self.cost) {
            m.add_objective(v, c as f64);
        }
        m
    }

    /// Best objective over all assignments, or `None` when none is feasible.
    pub fn enumerate(&self) -> Option<i32> {
        let n = self.cost.len();
        (0u32..1 << n)
            .filter(|bits| {
                self.rows.iter().all(|(coef, le, rhs)| {
                    let lhs: i32 = (0..n).filter(|k| bits >> k & 1 == 1).map(|k| coef[k]).sum();
                    if *le { lhs <= *rhs } else { lhs >= *rhs }
                })
            })
            .map(|bits| (0..n).filter(|k| bits >> k & 1 == 1).map(|k| self.cost[k]).sum())
            .min()
    }
}

