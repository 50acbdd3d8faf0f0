//! Monitorability in the unbounded sequential model.
//!
//! For a universal formula every observation must extend to a bad prefix of
//! the body; for an existential one, to a good prefix. Both are reachability
//! questions on the three-verdict FSM of the body.

use std::collections::BTreeSet;

use crate::formula::{IndexedAtom, LtlExpr, QuantifiedFormula, Quantifier, Shape, TraceVar};
use crate::ltl_engine::{build_fsm_monitor, is_satisfiable, is_valid, FsmVerdict, LtlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorabilityResult {
    Monitorable,
    NotMonitorable,
    Unsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    BodyValid,
    BadReachableEverywhere,
    GoodReachableEverywhere,
    /// A reachable FSM state from which no verdict can be reached.
    DeadRegion(usize),
    Alternating,
    ModelUnsupported,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitorabilityReport {
    pub result: MonitorabilityResult,
    pub reason: Reason,
    pub fsm_states: Option<usize>,
}

impl MonitorabilityReport {
    fn new(result: MonitorabilityResult, reason: Reason) -> Self {
        Self {
            result,
            reason,
            fsm_states: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Unbounded,
    Bounded(usize),
    Parallel(usize),
}

pub fn check_monitorable_unbounded(
    phi: &QuantifiedFormula,
) -> Result<MonitorabilityReport, LtlError> {
    use MonitorabilityResult::*;
    if !phi.is_alternation_free() {
        return Ok(MonitorabilityReport::new(Unsupported, Reason::Alternating));
    }
    let body = phi.body.desugar();
    let universal = phi.is_universal();
    if universal && is_valid(&body)? {
        return Ok(MonitorabilityReport::new(Monitorable, Reason::BodyValid));
    }
    if !universal && !is_satisfiable(&body)?.is_sat() {
        return Ok(MonitorabilityReport::new(Monitorable, Reason::BadReachableEverywhere));
    }
    let fsm = build_fsm_monitor(&body)?;
    let (target, reason) = if universal {
        (FsmVerdict::Bottom, Reason::BadReachableEverywhere)
    } else {
        (FsmVerdict::Top, Reason::GoodReachableEverywhere)
    };
    let reach = fsm.reachable();
    let ok = fsm.can_reach(target);
    let stuck = (0..fsm.state_count()).find(|&q| reach[q] && !ok[q]);
    Ok(MonitorabilityReport {
        result: if stuck.is_none() { Monitorable } else { NotMonitorable },
        reason: stuck.map_or(reason, Reason::DeadRegion),
        fsm_states: Some(fsm.state_count()),
    })
}

pub fn classify_model_support(
    phi: &QuantifiedFormula,
    model: Model,
) -> Result<MonitorabilityReport, LtlError> {
    match model {
        Model::Bounded(_) | Model::Parallel(_) => Ok(MonitorabilityReport::new(
            MonitorabilityResult::Unsupported,
            Reason::ModelUnsupported,
        )),
        Model::Unbounded if phi.is_alternation_free() => check_monitorable_unbounded(phi),
        Model::Unbounded => Ok(alternating_safety(phi)),
    }
}

fn propositional(e: &LtlExpr) -> bool {
    match e {
        LtlExpr::True | LtlExpr::False | LtlExpr::Atom(_) => true,
        LtlExpr::Not(x) => propositional(x),
        LtlExpr::And(l, r) | LtlExpr::Or(l, r) | LtlExpr::Implies(l, r) | LtlExpr::Iff(l, r) => {
            propositional(l) && propositional(r)
        }
        _ => false,
    }
}

fn holds(e: &LtlExpr, val: &dyn Fn(&IndexedAtom) -> bool) -> bool {
    match e {
        LtlExpr::True => true,
        LtlExpr::False => false,
        LtlExpr::Atom(a) => val(a),
        LtlExpr::Not(x) => !holds(x, val),
        LtlExpr::And(l, r) => holds(l, val) && holds(r, val),
        LtlExpr::Or(l, r) => holds(l, val) || holds(r, val),
        LtlExpr::Implies(l, r) => !holds(l, val) || holds(r, val),
        LtlExpr::Iff(l, r) => holds(l, val) == holds(r, val),
        _ => unreachable!("propositional formula expected"),
    }
}

/// `∀π∃π'. G ξ` and `∃π∀π'. G ξ` with propositional `ξ`: not monitorable
/// when no observation is ever good and none is ever bad, certified by
/// letters that (a) let a fresh trace break every candidate partner at a
/// new position, and (b) let a fresh constant trace serve as a universal
/// partner.
fn alternating_safety(phi: &QuantifiedFormula) -> MonitorabilityReport {
    use MonitorabilityResult::*;
    let unsupported = MonitorabilityReport::new(Unsupported, Reason::Alternating);
    let (outer, inner) = match (phi.shape(), phi.prefix.as_slice()) {
        (Shape::ForallExists(1, 1) | Shape::ExistsForall(1, 1), [(q, a), (_, b)]) => {
            ((*q, a.clone()), b.clone())
        }
        _ => return unsupported,
    };
    let xi = match &phi.body {
        LtlExpr::Globally(x) if propositional(x) => (**x).clone(),
        _ => return unsupported,
    };
    let aps: Vec<String> = xi
        .atoms()
        .into_iter()
        .map(|a| a.ap)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if aps.len() > 10 {
        return unsupported;
    }
    let letters: Vec<u32> = (0..1u32 << aps.len()).collect();
    let (x, y): (TraceVar, TraceVar) = (outer.1, inner);
    // ξ with the first variable reading letter `l1` and the second `l2`.
    let xi_at = |l1: u32, l2: u32| {
        holds(&xi, &|a: &IndexedAtom| {
            let i = aps.iter().position(|p| *p == a.ap).expect("ap of ξ");
            let l = if a.var == x { l1 } else if a.var == y { l2 } else { 0 };
            l >> i & 1 == 1
        })
    };
    let certified = match outer.0 {
        Quantifier::Forall => {
            let never_good = letters.iter().any(|&al| {
                !xi_at(al, al) && letters.iter().any(|&b0| !xi_at(al, b0))
            });
            let never_bad = letters.iter().any(|&be| letters.iter().all(|&al| xi_at(al, be)));
            never_good && never_bad
        }
        Quantifier::Exists => {
            let never_good = letters.iter().any(|&al| {
                letters
                    .iter()
                    .any(|&b0| !xi_at(b0, al) && (!xi_at(al, al) || !xi_at(al, b0)))
            });
            let never_bad = letters.iter().any(|&g| letters.iter().all(|&z| xi_at(g, z)));
            never_good && never_bad
        }
    };
    if certified {
        MonitorabilityReport::new(NotMonitorable, Reason::Alternating)
    } else {
        unsupported
    }
}
