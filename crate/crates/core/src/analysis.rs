//! Formula analysis (symmetry, transitivity, reflexivity) and trace
//! analysis (dominance, minimal storage, reduced tuple enumeration).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::formula::{FormulaError, LtlExpr, QuantifiedFormula, Quantifier, Shape, TraceVar};
use crate::ltl_engine::{is_satisfiable, LtlError};
use crate::monitor::{
    conjunctive_inclusion, find_word, InstantiatedMonitor, MonitorError, MonitorTemplate, Slot,
};
use crate::trace::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("unsupported quantifier prefix for this analysis")]
    UnsupportedShape,
    #[error(transparent)]
    Ltl(#[from] LtlError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecProperties {
    pub symmetric: bool,
    /// `None` when the formula does not have exactly two variables.
    pub transitive: Option<bool>,
    pub reflexive: bool,
}

impl SpecProperties {
    pub const NONE: Self = Self {
        symmetric: false,
        transitive: None,
        reflexive: false,
    };
}

fn universal_arity(phi: &QuantifiedFormula) -> Result<usize, AnalysisError> {
    match phi.shape() {
        Shape::ForallOnly(n) => Ok(n),
        _ => Err(AnalysisError::UnsupportedShape),
    }
}

fn rename(body: &LtlExpr, from: &[TraceVar], to: &[TraceVar]) -> Result<LtlExpr, AnalysisError> {
    let map: BTreeMap<TraceVar, TraceVar> = from.iter().cloned().zip(to.iter().cloned()).collect();
    Ok(body.desugar().substitute(&map)?)
}

fn unsat(body: LtlExpr) -> Result<bool, AnalysisError> {
    Ok(!is_satisfiable(&body)?.is_sat())
}

/// Invariance of the body under the swap of the first two variables and the
/// rotation of all of them, which together generate every permutation.
pub fn check_symmetry(phi: &QuantifiedFormula) -> Result<bool, AnalysisError> {
    let n = universal_arity(phi)?;
    if n < 2 {
        return Ok(true);
    }
    let vars = phi.vars();
    let psi = phi.body.desugar();
    let mut swapped = vars.clone();
    swapped.swap(0, 1);
    let mut rotated = vars.clone();
    rotated.rotate_left(1);
    let differs = |perm: &[TraceVar]| -> Result<LtlExpr, AnalysisError> {
        let other = rename(&psi, &vars, perm)?;
        Ok(LtlExpr::not(LtlExpr::iff(psi.clone(), other)).desugar())
    };
    unsat(LtlExpr::or(differs(&swapped)?, differs(&rotated)?).desugar())
}

pub fn check_transitivity(phi: &QuantifiedFormula) -> Result<Option<bool>, AnalysisError> {
    if universal_arity(phi)? != 2 {
        return Ok(None);
    }
    let vars = phi.vars();
    let fresh: Vec<TraceVar> = (1..=3).map(|i| TraceVar::new(format!("x{i}"))).collect();
    let psi = |a: usize, b: usize| rename(&phi.body, &vars, &[fresh[a].clone(), fresh[b].clone()]);
    let body = LtlExpr::all([psi(0, 1)?, psi(1, 2)?, LtlExpr::not(psi(0, 2)?)]);
    unsat(body.desugar()).map(Some)
}

pub fn check_reflexivity(phi: &QuantifiedFormula) -> Result<bool, AnalysisError> {
    let n = universal_arity(phi)?;
    let vars = phi.vars();
    let collapsed = rename(&phi.body, &vars, &vec![TraceVar::new("x"); n])?;
    unsat(LtlExpr::not(collapsed).desugar())
}

pub fn analyze(phi: &QuantifiedFormula) -> Result<SpecProperties, AnalysisError> {
    Ok(SpecProperties {
        symmetric: check_symmetry(phi)?,
        transitive: check_transitivity(phi)?,
        reflexive: check_reflexivity(phi)?,
    })
}

/// Which trace of a dominance query is bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Dominating,
    Dominated,
}

/// `L(M[lhs/π]) ⊆ L(M[rhs/π])` for the template variable at `slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Obligation {
    pub slot: usize,
    pub lhs: Side,
    pub rhs: Side,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Method {
    /// Exact redundancy test for two variables under one quantifier.
    ExactPair(Quantifier),
    /// Per-slot inclusions; when `kernel` is set, a dominating trace whose
    /// diagonal tuple decides the verdict on its own dominates everything.
    Inclusions {
        obligations: Vec<Obligation>,
        kernel: Option<Quantifier>,
    },
}

/// A compiled dominance test for one formula.
#[derive(Debug, Clone)]
pub struct DominanceCheck {
    template: MonitorTemplate,
    shape: Shape,
    method: Method,
}

impl DominanceCheck {
    pub fn new(phi: &QuantifiedFormula) -> Result<Self, AnalysisError> {
        Self::with_template(phi, MonitorTemplate::from_formula(phi)?)
    }

    pub fn with_template(
        phi: &QuantifiedFormula,
        template: MonitorTemplate,
    ) -> Result<Self, AnalysisError> {
        let shape = phi.shape();
        let quants = phi.quantifiers();
        let per_slot = |kernel| {
            let obligations = quants
                .iter()
                .enumerate()
                .map(|(slot, q)| match q {
                    Quantifier::Forall => Obligation {
                        slot,
                        lhs: Side::Dominating,
                        rhs: Side::Dominated,
                    },
                    Quantifier::Exists => Obligation {
                        slot,
                        lhs: Side::Dominated,
                        rhs: Side::Dominating,
                    },
                })
                .collect();
            Method::Inclusions {
                obligations,
                kernel,
            }
        };
        let method = match shape {
            Shape::ForallOnly(2) => Method::ExactPair(Quantifier::Forall),
            Shape::ExistsOnly(2) => Method::ExactPair(Quantifier::Exists),
            Shape::ForallOnly(_) => per_slot(Some(Quantifier::Forall)),
            Shape::ExistsOnly(_) => per_slot(Some(Quantifier::Exists)),
            Shape::ForallExists(..) | Shape::ExistsForall(..) => per_slot(None),
            Shape::Other => return Err(AnalysisError::UnsupportedShape),
        };
        Ok(Self {
            template,
            shape,
            method,
        })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn template(&self) -> &MonitorTemplate {
        &self.template
    }

    /// The inclusion obligations, empty for the exact two-variable test.
    pub fn obligations(&self) -> &[Obligation] {
        match &self.method {
            Method::Inclusions { obligations, .. } => obligations,
            Method::ExactPair(_) => &[],
        }
    }

    fn diagonal(&self, t: &Trace) -> bool {
        self.template.accepts_tuple(&vec![t; self.template.arity()])
    }

    /// Whether `t'` is redundant in every trace set that contains `t`.
    pub fn dominates(&self, t: &Trace, t2: &Trace) -> bool {
        let tpl = &self.template;
        match &self.method {
            Method::ExactPair(q) => {
                let (dd, dd2) = (self.diagonal(t), self.diagonal(t2));
                let inst = |slots: Vec<Slot>| InstantiatedMonitor::with_slots(tpl, slots);
                let ms = [
                    inst(vec![Slot::Bound(t.clone()), Slot::Free(0)]),
                    inst(vec![Slot::Free(0), Slot::Bound(t.clone())]),
                    inst(vec![Slot::Free(0), Slot::Free(0)]),
                    inst(vec![Slot::Bound(t2.clone()), Slot::Free(0)]),
                    inst(vec![Slot::Free(0), Slot::Bound(t2.clone())]),
                ];
                let refs: Vec<&InstantiatedMonitor<'_>> = ms.iter().collect();
                match q {
                    // A trace x that coexists with t but conflicts with t'.
                    Quantifier::Forall => {
                        !dd || (dd2
                            && find_word(&refs, |v| v[0] && v[1] && v[2] && !(v[3] && v[4]))
                                .is_none())
                    }
                    // A trace x that finds no partner next to t but finds t'.
                    Quantifier::Exists => {
                        dd || (!dd2
                            && find_word(&refs, |v| !v[0] && !v[1] && !v[2] && (v[3] || v[4]))
                                .is_none())
                    }
                }
            }
            Method::Inclusions {
                obligations,
                kernel,
            } => {
                match kernel {
                    Some(Quantifier::Forall) if !self.diagonal(t) => return true,
                    Some(Quantifier::Exists) if self.diagonal(t) => return true,
                    _ => {}
                }
                let bind = |side: Side, slot: usize| {
                    let trace = match side {
                        Side::Dominating => t,
                        Side::Dominated => t2,
                    };
                    let mut binding = BTreeMap::new();
                    binding.insert(tpl.vars()[slot].clone(), trace.clone());
                    InstantiatedMonitor::new(tpl, &binding)
                };
                obligations.iter().all(|o| {
                    let (l, r) = (bind(o.lhs, o.slot), bind(o.rhs, o.slot));
                    conjunctive_inclusion(&[&l], &[&r]).holds
                })
            }
        }
    }
}

pub fn dominates(t: &Trace, t2: &Trace, phi: &QuantifiedFormula) -> Result<bool, AnalysisError> {
    Ok(DominanceCheck::new(phi)?.dominates(t, t2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InsertOutcome {
    pub inserted: bool,
    pub pruned: usize,
}

/// Adds `t` to a minimal set unless a stored trace dominates it, after
/// removing every stored trace that `t` dominates.
pub fn minimize_insert(set: &mut Vec<Trace>, t: Trace, check: &DominanceCheck) -> InsertOutcome {
    if set.iter().any(|s| check.dominates(s, &t)) {
        return InsertOutcome::default();
    }
    let before = set.len();
    set.retain(|s| !check.dominates(&t, s));
    let pruned = before - set.len();
    set.push(t);
    InsertOutcome {
        inserted: true,
        pruned,
    }
}

/// One entry of a tuple built when a new trace arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entry {
    Stored(usize),
    New,
}

/// Tuples over `stored` stored traces and the new trace that still need a
/// monitor, in lexicographic order.
pub fn reduced_tuple_enumeration(stored: usize, props: &SpecProperties, n: usize) -> Vec<Vec<Entry>> {
    let use_transitivity = n == 2 && props.transitive == Some(true) && props.symmetric && props.reflexive;
    if use_transitivity {
        return if stored == 0 {
            Vec::new()
        } else {
            vec![vec![Entry::Stored(0), Entry::New]]
        };
    }
    let alphabet: Vec<Entry> = (0..stored).map(Entry::Stored).chain([Entry::New]).collect();
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    enumerate(&alphabet, n, props.symmetric, 0, &mut cur, &mut out);
    out.retain(|tuple| {
        tuple.contains(&Entry::New) && !(props.reflexive && tuple.iter().all(|e| *e == Entry::New))
    });
    out
}

fn enumerate(
    alphabet: &[Entry],
    n: usize,
    sorted: bool,
    from: usize,
    cur: &mut Vec<Entry>,
    out: &mut Vec<Vec<Entry>>,
) {
    if cur.len() == n {
        out.push(cur.clone());
        return;
    }
    let start = if sorted { from } else { 0 };
    for i in start..alphabet.len() {
        cur.push(alphabet[i]);
        enumerate(alphabet, n, sorted, i, cur, out);
        cur.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    fn phi(text: &str) -> QuantifiedFormula {
        parse_formula(text).unwrap()
    }

    fn t(steps: &[&str]) -> Trace {
        Trace::from_literals(0, steps)
    }

    const EQ: &str = "forall p1. forall p2. G (a[p1] <-> a[p2])";

    #[test]
    fn eq_properties() {
        let props = analyze(&phi(EQ)).unwrap();
        assert_eq!(
            props,
            SpecProperties {
                symmetric: true,
                transitive: Some(true),
                reflexive: true
            }
        );
    }

    #[test]
    fn one_sided_body_is_not_symmetric() {
        assert!(!check_symmetry(&phi("forall p1. forall p2. a[p1]")).unwrap());
        assert_eq!(check_transitivity(&phi("forall p1. forall p2. true")).unwrap(), Some(true));
        assert!(check_reflexivity(&phi("forall p1. forall p2. !a[p1] | a[p2]")).unwrap());
        assert_eq!(check_transitivity(&phi("forall p. a[p]")).unwrap(), None);
    }

    #[test]
    fn alternating_examples() {
        let fe = phi("forall p. exists q. G (a[p] -> b[q])");
        assert!(dominates(&t(&["a", "a"]), &t(&["a", "-"]), &fe).unwrap());
        let ef = phi("exists p. forall q. G (a[p] -> b[q])");
        assert!(dominates(&t(&["a", "-"]), &t(&["a", "a"]), &ef).unwrap());
    }

    #[test]
    fn unsatisfiable_diagonal_dominates_everything() {
        let f = phi("forall p1. forall p2. !a[p1] & a[p2]");
        assert!(dominates(&t(&["a"]), &t(&["-"]), &f).unwrap());
    }

    #[test]
    fn tuple_counts() {
        let none = SpecProperties::NONE;
        assert_eq!(reduced_tuple_enumeration(3, &none, 2).len(), 7);
        let sr = SpecProperties {
            symmetric: true,
            transitive: None,
            reflexive: true,
        };
        assert_eq!(reduced_tuple_enumeration(3, &sr, 2).len(), 3);
        let all = SpecProperties {
            transitive: Some(true),
            ..sr
        };
        assert_eq!(reduced_tuple_enumeration(3, &all, 2), vec![vec![Entry::Stored(0), Entry::New]]);
        assert_eq!(reduced_tuple_enumeration(0, &none, 2), vec![vec![Entry::New, Entry::New]]);
    }

    #[test]
    fn minimize_two_loops() {
        let check = DominanceCheck::new(&phi(EQ)).unwrap();
        let mut set = Vec::new();
        let r = minimize_insert(&mut set, t(&["a", "-"]), &check);
        assert_eq!(r, InsertOutcome { inserted: true, pruned: 0 });
        // A longer trace with the same prefix carries the stronger constraint.
        let r = minimize_insert(&mut set, t(&["a", "-", "a"]), &check);
        assert_eq!(r, InsertOutcome { inserted: true, pruned: 1 });
        let r = minimize_insert(&mut set, t(&["a"]), &check);
        assert_eq!(r, InsertOutcome::default());
        assert_eq!(set.len(), 1);
    }
}
