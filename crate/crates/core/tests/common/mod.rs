#![allow(dead_code)]

use std::collections::BTreeMap;

use hypermon::engine::Verdict;
use hypermon::formula::{parse_formula, LtlExpr, QuantifiedFormula, TraceVar};
use hypermon::monitor::MonitorTemplate;
use hypermon::trace::{Step, Trace};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const EQ: &str = "forall p1. forall p2. G (a[p1] <-> a[p2])";
pub const OBSDET1: &str = "forall p1. forall p2. G (i[p1] <-> i[p2]) -> G (o[p1] <-> o[p2])";
pub const OBSDET2: &str = "forall p1. forall p2. (i[p1] <-> i[p2]) -> G (o[p1] <-> o[p2])";
pub const OBSDET3: &str = "forall p1. forall p2. (o[p1] <-> o[p2]) W !(i[p1] <-> i[p2])";
/// Three pairwise different outputs under equal inputs (c = 2).
pub const QUANT_NONINF: &str = "forall p0. forall p1. forall p2. \
    !((i[p1] <-> i[p0]) & (i[p2] <-> i[p0]) \
      & !(o[p0] <-> o[p1]) & !(o[p0] <-> o[p2]) & !(o[p1] <-> o[p2]))";
pub const CONFMAN: &str = "forall p1. forall p2. \
    ((!pc[p1] & pc[p2]) -> X G (s[p1] -> X v[p2])) \
    & ((pc[p1] & pc[p2]) -> X G (v[p1] <-> v[p2]))";

pub fn phi(text: &str) -> QuantifiedFormula {
    parse_formula(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

pub fn t(steps: &[&str]) -> Trace {
    Trace::from_literals(0, steps)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random body over `aps` indexed by `vars`, of nesting depth at most `depth`.
pub fn random_body(rng: &mut impl Rng, vars: &[&str], aps: &[&str], depth: usize) -> LtlExpr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0 => LtlExpr::True,
            1 => LtlExpr::False,
            _ => LtlExpr::atom(
                aps[rng.gen_range(0..aps.len())],
                vars[rng.gen_range(0..vars.len())],
            ),
        };
    }
    let sub = |rng: &mut _| random_body(rng, vars, aps, depth - 1);
    match rng.gen_range(0..11) {
        0 => LtlExpr::not(sub(rng)),
        1 => LtlExpr::and(sub(rng), sub(rng)),
        2 => LtlExpr::or(sub(rng), sub(rng)),
        3 => LtlExpr::implies(sub(rng), sub(rng)),
        4 => LtlExpr::iff(sub(rng), sub(rng)),
        5 => LtlExpr::next(sub(rng)),
        6 => LtlExpr::until(sub(rng), sub(rng)),
        7 => LtlExpr::weak_until(sub(rng), sub(rng)),
        8 => LtlExpr::globally(sub(rng)),
        9 => LtlExpr::finally(sub(rng)),
        _ => LtlExpr::bounded_globally(rng.gen_range(1..4), sub(rng)),
    }
}

pub fn random_forall(rng: &mut impl Rng, n: usize, aps: &[&str], depth: usize) -> QuantifiedFormula {
    let names: Vec<String> = (1..=n).map(|i| format!("p{i}")).collect();
    let vars: Vec<&str> = names.iter().map(String::as_str).collect();
    QuantifiedFormula::forall(&vars, random_body(rng, &vars, aps, depth)).expect("closed body")
}

pub fn random_step(rng: &mut impl Rng, aps: &[&str]) -> Step {
    aps.iter().filter(|_| rng.gen_bool(0.5)).copied().collect()
}

pub fn random_trace(rng: &mut impl Rng, id: usize, aps: &[&str], max_len: usize) -> Trace {
    let len = rng.gen_range(0..=max_len);
    Trace::new(id, (0..len).map(|_| random_step(rng, aps)).collect())
}

pub fn random_traces(rng: &mut impl Rng, count: usize, aps: &[&str], max_len: usize) -> Vec<Trace> {
    (0..count).map(|id| random_trace(rng, id, aps, max_len)).collect()
}

/// All traces over `aps` of length at most `max_len`, shortest first.
pub fn universe(aps: &[&str], max_len: usize) -> Vec<Trace> {
    let letters: Vec<Step> = (0..1usize << aps.len())
        .map(|m| {
            aps.iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, a)| *a)
                .collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<Step>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w| {
                letters.iter().map(move |l| {
                    let mut w = w.clone();
                    w.push(l.clone());
                    w
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out.into_iter()
        .enumerate()
        .map(|(id, steps)| Trace::new(id, steps))
        .collect()
}

pub fn binding(tpl: &MonitorTemplate, tuple: &[&Trace]) -> BTreeMap<TraceVar, Trace> {
    tpl.vars()
        .iter()
        .cloned()
        .zip(tuple.iter().map(|t| (*t).clone()))
        .collect()
}

/// ∀ⁿ hyper-verdict with template acceptance deciding each tuple.
pub fn forall_verdict(tpl: &MonitorTemplate, set: &[&Trace]) -> bool {
    let n = tpl.arity();
    let k = set.len();
    if k == 0 {
        return true;
    }
    let mut idx = vec![0usize; n];
    loop {
        let tuple: Vec<&Trace> = idx.iter().map(|&i| set[i]).collect();
        if !tpl.accepts_tuple(&tuple) {
            return false;
        }
        let mut p = 0;
        loop {
            if p == n {
                return true;
            }
            idx[p] += 1;
            if idx[p] < k {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// `t2` is ({t}, φ)-redundant within `universe`: for every `T ⊆ universe`
/// containing `t`, adding `t2` leaves the verdict unchanged.
pub fn redundant_in_universe(tpl: &MonitorTemplate, universe: &[Trace], t: usize, t2: usize) -> bool {
    let others: Vec<usize> = (0..universe.len()).filter(|&i| i != t).collect();
    for mask in 0..1u64 << others.len() {
        let mut set: Vec<&Trace> = vec![&universe[t]];
        set.extend(
            others
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &i)| &universe[i]),
        );
        if set.iter().any(|x| x.steps == universe[t2].steps) {
            continue;
        }
        let before = forall_verdict(tpl, &set);
        set.push(&universe[t2]);
        if before != forall_verdict(tpl, &set) {
            return false;
        }
    }
    true
}

/// Satisfied/violated class of a verdict; a running verdict counts as satisfied.
pub fn class(v: &Verdict) -> bool {
    !v.is_violation()
}
