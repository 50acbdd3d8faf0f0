//! Finite-trace semantics of HyperLTL bodies.
//!
//! A shift past the end of a trace yields the empty trace, and the empty
//! trace reads as the empty step forever. [`eval_recursive`] follows the
//! clauses literally; [`eval_backwards`] fills a position-by-subformula table
//! from the end of the word in linear time.

use std::collections::{BTreeMap, HashMap};

use crate::formula::{LtlExpr, QuantifiedFormula, Quantifier, TraceVar};
use crate::trace::{Trace, ZippedWord};

pub type FiniteAssignment = BTreeMap<TraceVar, Trace>;

fn holds_at(pi: &FiniteAssignment, body: &LtlExpr, shift: usize, horizon: usize) -> bool {
    match body {
        LtlExpr::True => true,
        LtlExpr::Atom(a) => {
            let t = pi
                .get(&a.var)
                .unwrap_or_else(|| panic!("assignment lacks trace variable `{}`", a.var));
            t.steps.get(shift).is_some_and(|s| s.contains(&a.ap))
        }
        LtlExpr::Not(e) => !holds_at(pi, e, shift, horizon),
        LtlExpr::Or(l, r) => holds_at(pi, l, shift, horizon) || holds_at(pi, r, shift, horizon),
        LtlExpr::Next(e) => holds_at(pi, e, (shift + 1).min(horizon), horizon),
        LtlExpr::Until(l, r) => {
            // Every shift at or past `horizon` is the all-empty assignment.
            for i in shift..=horizon {
                if holds_at(pi, r, i, horizon) {
                    return true;
                }
                if !holds_at(pi, l, i, horizon) {
                    return false;
                }
            }
            false
        }
        other => holds_at(pi, &other.desugar(), shift, horizon),
    }
}

/// Truth of `body` under the assignment, by the finite-trace clauses.
pub fn eval_recursive(pi: &FiniteAssignment, body: &LtlExpr) -> bool {
    let horizon = pi.values().map(Trace::len).max().unwrap_or(0);
    holds_at(pi, body, 0, horizon)
}

/// Truth values of every subformula at positions `0..=m` of a zipped word;
/// row `m` is the value on the empty continuation.
#[derive(Debug, Clone)]
pub struct SubformulaTable {
    subformulas: Vec<LtlExpr>,
    rows: Vec<Vec<bool>>,
}

#[derive(Clone, Copy)]
enum Node {
    True,
    Atom,
    Not(usize),
    Or(usize, usize),
    Next(usize),
    Until(usize, usize),
}

fn index_subformulas<'e>(
    e: &'e LtlExpr,
    ids: &mut HashMap<&'e LtlExpr, usize>,
    nodes: &mut Vec<(Node, &'e LtlExpr)>,
) -> usize {
    if let Some(&i) = ids.get(e) {
        return i;
    }
    let node = match e {
        LtlExpr::True => Node::True,
        LtlExpr::Atom(_) => Node::Atom,
        LtlExpr::Not(x) => Node::Not(index_subformulas(x, ids, nodes)),
        LtlExpr::Or(l, r) => {
            let l = index_subformulas(l, ids, nodes);
            Node::Or(l, index_subformulas(r, ids, nodes))
        }
        LtlExpr::Next(x) => Node::Next(index_subformulas(x, ids, nodes)),
        LtlExpr::Until(l, r) => {
            let l = index_subformulas(l, ids, nodes);
            Node::Until(l, index_subformulas(r, ids, nodes))
        }
        _ => panic!("eval_backwards expects a core body"),
    };
    nodes.push((node, e));
    ids.insert(e, nodes.len() - 1);
    nodes.len() - 1
}

impl SubformulaTable {
    pub fn compute(w: &ZippedWord, body: &LtlExpr) -> Self {
        let mut ids = HashMap::new();
        let mut nodes = Vec::new();
        index_subformulas(body, &mut ids, &mut nodes);
        let m = w.len();
        let mut rows = vec![vec![false; nodes.len()]; m + 1];
        for pos in (0..=m).rev() {
            let (done, rest) = rows.split_at_mut(pos + 1);
            let row = &mut done[pos];
            let next = rest.first();
            for (k, (node, e)) in nodes.iter().enumerate() {
                row[k] = match *node {
                    Node::True => true,
                    Node::Atom => match (e, w.letters.get(pos)) {
                        (LtlExpr::Atom(a), Some(letter)) => letter.contains(a),
                        _ => false,
                    },
                    Node::Not(x) => !row[x],
                    Node::Or(l, r) => row[l] || row[r],
                    Node::Next(x) => next.map_or(row[x], |n| n[x]),
                    Node::Until(l, r) => row[r] || (row[l] && next.is_some_and(|n| n[k])),
                };
            }
        }
        Self {
            subformulas: nodes.into_iter().map(|(_, e)| e.clone()).collect(),
            rows,
        }
    }

    pub fn subformulas(&self) -> &[LtlExpr] {
        &self.subformulas
    }

    /// Value of subformula `k` at position `pos`.
    pub fn value(&self, pos: usize, k: usize) -> bool {
        self.rows[pos][k]
    }

    /// The whole body at position 0.
    pub fn result(&self) -> bool {
        self.rows[0][self.subformulas.len() - 1]
    }

    pub fn epsilon_row(&self) -> &[bool] {
        self.rows.last().expect("table has an epsilon row")
    }
}

/// Truth of the core `body` on the word followed by empty steps forever.
pub fn eval_backwards(w: &ZippedWord, body: &LtlExpr) -> bool {
    SubformulaTable::compute(w, body).result()
}

/// Quantifier expansion over a finite trace set; bodies see full traces.
pub fn eval_hyper_finite(phi: &QuantifiedFormula, traces: &[Trace]) -> bool {
    let body = phi.body.desugar();
    let mut pi = FiniteAssignment::new();
    expand(&phi.prefix, &body, traces, &mut pi)
}

fn expand(
    prefix: &[(Quantifier, TraceVar)],
    body: &LtlExpr,
    traces: &[Trace],
    pi: &mut FiniteAssignment,
) -> bool {
    let Some(((q, v), rest)) = prefix.split_first() else {
        return eval_recursive(pi, body);
    };
    let mut branch = |t: &Trace| {
        pi.insert(v.clone(), t.clone());
        let r = expand(rest, body, traces, pi);
        pi.remove(v);
        r
    };
    match q {
        Quantifier::Forall => traces.iter().all(&mut branch),
        Quantifier::Exists => traces.iter().any(&mut branch),
    }
}
