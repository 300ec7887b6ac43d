//! Metric Temporal Logic over discrete time: syntax tree, negation normal
//! form, horizons and the reference evaluator used to check every plan.
//!
//! Until is read strictly: `p U[a,b] q` holds at `t` when some `j` in
//! `t+a..=t+b` satisfies `q` and `p` holds on `t..j` (excluding `j`).

mod parse;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use parse::{parse_mtl, ParseError};

const PRIME_SUFFIX: &str = "_prime";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Proposition {
    pub name: String,
    pub primed: bool,
}

impl Proposition {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), primed: false }
    }

    pub fn primed(name: impl Into<String>) -> Self {
        Self { name: name.into(), primed: true }
    }

    /// Splits a textual label such as `F1_prime` into base name and flag.
    pub fn from_label(label: &str) -> Self {
        match label.strip_suffix(PRIME_SUFFIX) {
            Some(base) if !base.is_empty() => Self::primed(base),
            _ => Self::new(label),
        }
    }

    pub fn label(&self) -> String {
        if self.primed {
            format!("{}{PRIME_SUFFIX}", self.name)
        } else {
            self.name.clone()
        }
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if self.primed {
            f.write_str(PRIME_SUFFIX)?;
        }
        Ok(())
    }
}

/// Discrete window `[lo, hi]`; `hi = None` marks an untimed operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: usize,
    pub hi: Option<usize>,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Result<Self, MtlError> {
        if hi < lo {
            return Err(MtlError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi: Some(hi) })
    }

    pub fn unbounded() -> Self {
        Self { lo: 0, hi: None }
    }

    pub fn is_bounded(&self) -> bool {
        self.hi.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    Atom(Proposition),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Next(Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Always(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MtlError {
    #[error("interval [{lo},{hi}] has hi < lo")]
    BadInterval { lo: usize, hi: usize },
    #[error("negated until has no supported encoding")]
    NegatedUntil,
    #[error("until requires a bounded interval")]
    UnboundedUntil,
    #[error("formula needs {needed} states from step {t} but the trace has {len}")]
    TraceTooShort { t: usize, needed: usize, len: usize },
    #[error("empty {0} list")]
    EmptyJunction(&'static str),
}

impl Formula {
    pub fn atom(label: &str) -> Self {
        Formula::Atom(Proposition::from_label(label))
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn next(f: Formula) -> Self {
        Formula::Next(Box::new(f))
    }

    pub fn eventually(lo: usize, hi: usize, f: Formula) -> Self {
        Formula::Eventually(Interval::new(lo, hi).expect("valid interval"), Box::new(f))
    }

    pub fn always(lo: usize, hi: usize, f: Formula) -> Self {
        Formula::Always(Interval::new(lo, hi).expect("valid interval"), Box::new(f))
    }

    pub fn globally(f: Formula) -> Self {
        Formula::Always(Interval::unbounded(), Box::new(f))
    }

    pub fn until(lo: usize, hi: usize, p: Formula, q: Formula) -> Self {
        Formula::Until(Interval::new(lo, hi).expect("valid interval"), Box::new(p), Box::new(q))
    }

    pub fn and(children: Vec<Formula>) -> Self {
        Formula::And(children)
    }

    pub fn or(children: Vec<Formula>) -> Self {
        Formula::Or(children)
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::True | Formula::Atom(_) => true,
            Formula::Not(inner) => matches!(**inner, Formula::Atom(_) | Formula::True),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().all(Formula::is_nnf),
            Formula::Next(g) | Formula::Eventually(_, g) | Formula::Always(_, g) => g.is_nnf(),
            Formula::Until(_, p, q) => p.is_nnf() && q.is_nnf(),
        }
    }

    /// Every proposition mentioned anywhere in the tree.
    pub fn propositions(&self) -> BTreeSet<Proposition> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    fn collect_props(&self, out: &mut BTreeSet<Proposition>) {
        match self {
            Formula::True => {}
            Formula::Atom(p) => {
                out.insert(p.clone());
            }
            Formula::Not(g) | Formula::Next(g) | Formula::Eventually(_, g) | Formula::Always(_, g) => {
                g.collect_props(out)
            }
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_props(out)),
            Formula::Until(_, p, q) => {
                p.collect_props(out);
                q.collect_props(out);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::Atom(_) => 0,
            Formula::Not(g) | Formula::Next(g) | Formula::Eventually(_, g) | Formula::Always(_, g) => 1 + g.depth(),
            Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(Formula::depth).max().unwrap_or(0),
            Formula::Until(_, p, q) => 1 + p.depth().max(q.depth()),
        }
    }

    fn check_junctions(&self) -> Result<(), MtlError> {
        match self {
            Formula::And(cs) if cs.is_empty() => Err(MtlError::EmptyJunction("and")),
            Formula::Or(cs) if cs.is_empty() => Err(MtlError::EmptyJunction("or")),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().try_for_each(Formula::check_junctions),
            Formula::True | Formula::Atom(_) => Ok(()),
            Formula::Not(g) | Formula::Next(g) | Formula::Eventually(_, g) | Formula::Always(_, g) => g.check_junctions(),
            Formula::Until(i, p, q) => {
                if !i.is_bounded() {
                    return Err(MtlError::UnboundedUntil);
                }
                p.check_junctions()?;
                q.check_junctions()
            }
        }
    }
}

/// Pushes negations down to atoms using De Morgan and the temporal dualities.
pub fn to_nnf(f: &Formula) -> Result<Formula, MtlError> {
    f.check_junctions()?;
    nnf(f, false)
}

fn nnf(f: &Formula, negate: bool) -> Result<Formula, MtlError> {
    Ok(match (f, negate) {
        (Formula::True, false) => Formula::True,
        (Formula::True, true) => Formula::not(Formula::True),
        (Formula::Atom(p), false) => Formula::Atom(p.clone()),
        (Formula::Atom(p), true) => Formula::not(Formula::Atom(p.clone())),
        (Formula::Not(g), _) => nnf(g, !negate)?,
        (Formula::And(cs), false) => Formula::And(cs.iter().map(|c| nnf(c, false)).collect::<Result<_, _>>()?),
        (Formula::And(cs), true) => Formula::Or(cs.iter().map(|c| nnf(c, true)).collect::<Result<_, _>>()?),
        (Formula::Or(cs), false) => Formula::Or(cs.iter().map(|c| nnf(c, false)).collect::<Result<_, _>>()?),
        (Formula::Or(cs), true) => Formula::And(cs.iter().map(|c| nnf(c, true)).collect::<Result<_, _>>()?),
        (Formula::Next(g), _) => Formula::Next(Box::new(nnf(g, negate)?)),
        (Formula::Eventually(i, g), false) => Formula::Eventually(*i, Box::new(nnf(g, false)?)),
        (Formula::Eventually(i, g), true) => Formula::Always(*i, Box::new(nnf(g, true)?)),
        (Formula::Always(i, g), false) => Formula::Always(*i, Box::new(nnf(g, false)?)),
        (Formula::Always(i, g), true) => Formula::Eventually(*i, Box::new(nnf(g, true)?)),
        (Formula::Until(i, p, q), false) => Formula::Until(*i, Box::new(nnf(p, false)?), Box::new(nnf(q, false)?)),
        (Formula::Until(..), true) => return Err(MtlError::NegatedUntil),
    })
}

/// Furthest step offset the truth value at `t` can depend on.
///
/// Untimed operators contribute their lower bound only; resolve them with
/// [`resolve_unbounded`] first when an exact figure is needed.
pub fn horizon_of(f: &Formula) -> usize {
    match f {
        Formula::True | Formula::Atom(_) => 0,
        Formula::Not(g) => horizon_of(g),
        Formula::And(cs) | Formula::Or(cs) => cs.iter().map(horizon_of).max().unwrap_or(0),
        Formula::Next(g) => 1 + horizon_of(g),
        Formula::Eventually(i, g) | Formula::Always(i, g) => i.hi.unwrap_or(i.lo) + horizon_of(g),
        Formula::Until(i, p, q) => {
            let b = i.hi.unwrap_or(i.lo);
            let hq = b + horizon_of(q);
            if b >= 1 {
                hq.max(b - 1 + horizon_of(p))
            } else {
                hq
            }
        }
    }
}

/// Replaces untimed operators by windows that fit a horizon of `h` steps.
///
/// An untimed operator at the top level covers `[lo, h - horizon(child)]`;
/// untimed operators nested inside another untimed one collapse to `[lo, lo]`.
pub fn resolve_unbounded(f: &Formula, h: usize) -> Formula {
    resolve(f, h)
}

fn resolve(f: &Formula, budget: usize) -> Formula {
    let bounded = |i: &Interval, child: Formula| -> (Interval, Formula) {
        match i.hi {
            Some(_) => (*i, child),
            None => {
                let hi = budget.saturating_sub(horizon_of(&child)).max(i.lo);
                (Interval { lo: i.lo, hi: Some(hi) }, child)
            }
        }
    };
    match f {
        Formula::True | Formula::Atom(_) => f.clone(),
        Formula::Not(g) => Formula::Not(Box::new(resolve(g, budget))),
        Formula::And(cs) => Formula::And(cs.iter().map(|c| resolve(c, budget)).collect()),
        Formula::Or(cs) => Formula::Or(cs.iter().map(|c| resolve(c, budget)).collect()),
        Formula::Next(g) => Formula::Next(Box::new(resolve(g, budget.saturating_sub(1)))),
        Formula::Eventually(i, g) | Formula::Always(i, g) => {
            let child_budget = match i.hi {
                Some(hi) => budget.saturating_sub(hi),
                None => 0,
            };
            let (i, child) = bounded(i, resolve(g, child_budget));
            match f {
                Formula::Eventually(..) => Formula::Eventually(i, Box::new(child)),
                _ => Formula::Always(i, Box::new(child)),
            }
        }
        Formula::Until(i, p, q) => {
            let b = i.hi.unwrap_or(i.lo);
            Formula::Until(
                *i,
                Box::new(resolve(p, budget.saturating_sub(b))),
                Box::new(resolve(q, budget.saturating_sub(b))),
            )
        }
    }
}

/// Labels of a discrete run: the proposition set at each step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub labels: Vec<BTreeSet<Proposition>>,
}

impl Trace {
    pub fn new(labels: Vec<BTreeSet<Proposition>>) -> Self {
        Self { labels }
    }

    /// Convenience constructor from per-step label strings.
    pub fn from_labels<S: AsRef<str>>(steps: &[&[S]]) -> Self {
        Self {
            labels: steps
                .iter()
                .map(|s| s.iter().map(|l| Proposition::from_label(l.as_ref())).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn holds(&self, p: &Proposition, t: usize) -> bool {
        self.labels[t].contains(p)
    }
}

/// Truth of `f` at step `t` of `tr`.
///
/// Untimed operators range over the remainder of the trace that still leaves
/// room for their operand's own horizon.
pub fn evaluate_at(f: &Formula, tr: &Trace, t: usize) -> Result<bool, MtlError> {
    let needed = t + horizon_of(f) + 1;
    if needed > tr.len() {
        return Err(MtlError::TraceTooShort { t, needed, len: tr.len() });
    }
    Ok(eval(f, tr, t))
}

fn window(i: &Interval, child: &Formula, tr: &Trace, t: usize) -> std::ops::RangeInclusive<usize> {
    let hi = match i.hi {
        Some(hi) => t + hi,
        None => (tr.len() - 1).saturating_sub(horizon_of(child)).max(t + i.lo),
    };
    (t + i.lo)..=hi
}

fn eval(f: &Formula, tr: &Trace, t: usize) -> bool {
    match f {
        Formula::True => true,
        Formula::Atom(p) => tr.holds(p, t),
        Formula::Not(g) => !eval(g, tr, t),
        Formula::And(cs) => cs.iter().all(|c| eval(c, tr, t)),
        Formula::Or(cs) => cs.iter().any(|c| eval(c, tr, t)),
        Formula::Next(g) => eval(g, tr, t + 1),
        Formula::Eventually(i, g) => window(i, g, tr, t).any(|k| eval(g, tr, k)),
        Formula::Always(i, g) => window(i, g, tr, t).all(|k| eval(g, tr, k)),
        Formula::Until(i, p, q) => {
            let hi = t + i.hi.unwrap_or(i.lo);
            ((t + i.lo)..=hi).any(|j| eval(q, tr, j) && (t..j).all(|l| eval(p, tr, l)))
        }
    }
}
