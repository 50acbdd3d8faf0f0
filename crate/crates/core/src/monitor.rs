//! Deterministic partial monitor templates built by formula progression.
//!
//! A state is a residual obligation: a Boolean function over "now"
//! obligations (atoms, `X` and `U` subformulas of the body) kept as a BDD.
//! Reading a letter substitutes every obligation by its one-step unfolding.
//! Atom variables are ordered above obligation variables, so the part of the
//! unfolded BDD above the first obligation node is the guard structure and
//! each frontier node is a successor residual. A letter that drives the
//! residual to `false` has no transition.
//!
//! Successor residuals are also decided as LTL formulas: an unsatisfiable
//! one counts as `false` and a valid one as `true`. Every bad prefix is then
//! rejected at the letter that makes it bad, independent of how the body is
//! written.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::bdd::{Bdd, NodeId, FALSE, TRUE};
use crate::formula::{IndexedAtom, LtlExpr, QuantifiedFormula, TraceVar};
use crate::ltl_engine::{is_satisfiable, is_valid};
use crate::trace::{ApTable, Step, Trace, TraceError};

pub const DEFAULT_STATE_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonitorError {
    #[error("monitor template exceeds {0} states")]
    StateExplosion(usize),
    #[error("body is not in core form; desugar it first")]
    NotCore,
    #[error("body mentions trace variable `{0}` outside the template variables")]
    UnknownVariable(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// BDD over atom variables; guards of one state are pairwise disjoint.
    pub guard: NodeId,
    pub target: StateId,
}

#[derive(Debug, Clone)]
struct State {
    residual: NodeId,
    /// Residual after substituting all obligations by their unfoldings.
    unfolded: NodeId,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone)]
pub struct MonitorTemplate {
    vars: Vec<TraceVar>,
    aps: ApTable,
    /// BDD variable `i` for `i < atoms.len()` is `atoms[i]`.
    atoms: Vec<IndexedAtom>,
    /// (variable index, proposition bit) of each atom.
    atom_slot: Vec<(usize, u32)>,
    /// BDD variable `atoms.len() + k` is "obligation `k` holds now".
    obligations: Vec<LtlExpr>,
    bdd: Bdd,
    states: Vec<State>,
    node_state: HashMap<NodeId, StateId>,
}

struct Builder {
    bdd: Bdd,
    atom_var: HashMap<IndexedAtom, u32>,
    obligations: Vec<LtlExpr>,
    obligation_var: HashMap<LtlExpr, u32>,
    unfolding: Vec<Option<NodeId>>,
}

impl Builder {
    fn obligation(&mut self, f: &LtlExpr) -> NodeId {
        let var = match self.obligation_var.get(f) {
            Some(&v) => v,
            None => {
                let v = (self.atom_var.len() + self.obligations.len()) as u32;
                self.obligations.push(f.clone());
                self.unfolding.push(None);
                self.obligation_var.insert(f.clone(), v);
                v
            }
        };
        self.bdd.ithvar(var)
    }

    /// Boolean skeleton of `f` with temporal and atomic leaves as obligations.
    fn skeleton(&mut self, f: &LtlExpr) -> NodeId {
        match f {
            LtlExpr::True => TRUE,
            LtlExpr::Not(e) => {
                let e = self.skeleton(e);
                self.bdd.not(e)
            }
            LtlExpr::Or(l, r) => {
                let (l, r) = (self.skeleton(l), self.skeleton(r));
                self.bdd.or(l, r)
            }
            _ => self.obligation(f),
        }
    }

    /// Value of `f` now, in terms of the current letter and next-step obligations.
    fn progress(&mut self, f: &LtlExpr) -> NodeId {
        match f {
            LtlExpr::True => TRUE,
            LtlExpr::Atom(a) => {
                let v = self.atom_var[a];
                self.bdd.ithvar(v)
            }
            LtlExpr::Not(e) => {
                let e = self.progress(e);
                self.bdd.not(e)
            }
            LtlExpr::Or(l, r) => {
                let (l, r) = (self.progress(l), self.progress(r));
                self.bdd.or(l, r)
            }
            LtlExpr::Next(e) => self.skeleton(e),
            LtlExpr::Until(l, r) => {
                let now = self.progress(r);
                let hold = self.progress(l);
                let again = self.obligation(f);
                let keep = self.bdd.and(hold, again);
                self.bdd.or(now, keep)
            }
            _ => unreachable!("core form checked before building"),
        }
    }

    fn unfold_obligation(&mut self, k: usize) -> NodeId {
        if let Some(n) = self.unfolding[k] {
            return n;
        }
        let f = self.obligations[k].clone();
        let n = self.progress(&f);
        self.unfolding[k] = Some(n);
        n
    }

    /// The residual as a formula over its obligations.
    fn residual_expr(&self, n: NodeId, memo: &mut HashMap<NodeId, LtlExpr>) -> LtlExpr {
        match n {
            TRUE => return LtlExpr::True,
            FALSE => return LtlExpr::False,
            _ => {}
        }
        if let Some(e) = memo.get(&n) {
            return e.clone();
        }
        let v = self.bdd.var(n).expect("inner node");
        let ob = self.obligations[(v as usize) - self.atom_var.len()].clone();
        let hi = self.residual_expr(self.bdd.hi(n), memo);
        let lo = self.residual_expr(self.bdd.lo(n), memo);
        let e = LtlExpr::or(
            LtlExpr::and(ob.clone(), hi),
            LtlExpr::and(LtlExpr::not(ob), lo),
        );
        memo.insert(n, e.clone());
        e
    }

    /// `FALSE` for unsatisfiable residuals, `TRUE` for valid ones.
    fn decide(&mut self, n: NodeId, cache: &mut HashMap<NodeId, NodeId>) -> NodeId {
        if n == TRUE || n == FALSE {
            return n;
        }
        if let Some(&d) = cache.get(&n) {
            return d;
        }
        let e = self.residual_expr(n, &mut HashMap::new()).desugar();
        // Past the tableau cap the residual stays as it is.
        let d = match is_satisfiable(&e) {
            Ok(s) if !s.is_sat() => FALSE,
            Ok(_) if is_valid(&e) == Ok(true) => TRUE,
            _ => n,
        };
        cache.insert(n, d);
        d
    }

    /// Replaces every successor residual below the atom levels by its decision.
    fn decide_frontier(
        &mut self,
        n: NodeId,
        natoms: u32,
        cache: &mut HashMap<NodeId, NodeId>,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> NodeId {
        let Some(v) = self.bdd.var(n).filter(|&v| v < natoms) else {
            return self.decide(n, cache);
        };
        if let Some(&r) = memo.get(&n) {
            return r;
        }
        let (lo, hi) = (self.bdd.lo(n), self.bdd.hi(n));
        let lo = self.decide_frontier(lo, natoms, cache, memo);
        let hi = self.decide_frontier(hi, natoms, cache, memo);
        let x = self.bdd.ithvar(v);
        let r = self.bdd.ite(x, hi, lo);
        memo.insert(n, r);
        r
    }

    fn step(&mut self, residual: NodeId) -> NodeId {
        let natoms = self.atom_var.len() as u32;
        let mut sub = HashMap::new();
        for v in self.bdd.support(residual) {
            let n = self.unfold_obligation((v - natoms) as usize);
            sub.insert(v, n);
        }
        self.bdd.compose(residual, &sub)
    }
}

/// Splits an unfolded residual into (guard, successor residual) pairs.
fn frontier(bdd: &mut Bdd, root: NodeId, natoms: u32) -> Vec<(NodeId, NodeId)> {
    let is_atom = |bdd: &Bdd, n: NodeId| bdd.var(n).is_some_and(|v| v < natoms);
    let mut guard: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut pending: BTreeSet<(u32, NodeId)> = BTreeSet::new();
    let mut out: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let push = |bdd: &mut Bdd,
                    n: NodeId,
                    g: NodeId,
                    guard: &mut BTreeMap<NodeId, NodeId>,
                    pending: &mut BTreeSet<(u32, NodeId)>,
                    out: &mut BTreeMap<NodeId, NodeId>| {
        if is_atom(bdd, n) {
            let old = guard.get(&n).copied().unwrap_or(FALSE);
            let new = bdd.or(old, g);
            guard.insert(n, new);
            pending.insert((bdd.var(n).unwrap_or(0), n));
        } else if n != FALSE {
            let old = out.get(&n).copied().unwrap_or(FALSE);
            let new = bdd.or(old, g);
            out.insert(n, new);
        }
    };
    push(bdd, root, TRUE, &mut guard, &mut pending, &mut out);
    while let Some((var, n)) = pending.pop_first() {
        let g = guard[&n];
        let x = bdd.ithvar(var);
        let nx = bdd.not(x);
        let (lo, hi) = (bdd.lo(n), bdd.hi(n));
        let g_lo = bdd.and(g, nx);
        let g_hi = bdd.and(g, x);
        push(bdd, lo, g_lo, &mut guard, &mut pending, &mut out);
        push(bdd, hi, g_hi, &mut guard, &mut pending, &mut out);
    }
    out.into_iter().map(|(succ, g)| (g, succ)).collect()
}

impl MonitorTemplate {
    /// Template for the body of `phi` over its quantified variables.
    pub fn from_formula(phi: &QuantifiedFormula) -> Result<Self, MonitorError> {
        Self::build(&phi.vars(), &phi.ap_set, &phi.body.desugar(), DEFAULT_STATE_CAP)
    }

    pub fn build(
        vars: &[TraceVar],
        aps: &BTreeSet<String>,
        body: &LtlExpr,
        state_cap: usize,
    ) -> Result<Self, MonitorError> {
        if !body.is_core() {
            return Err(MonitorError::NotCore);
        }
        let var_index: HashMap<&TraceVar, usize> =
            vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let mut all_aps = aps.clone();
        let mut atoms: Vec<(usize, IndexedAtom)> = Vec::new();
        for a in body.atoms() {
            let i = *var_index
                .get(&a.var)
                .ok_or_else(|| MonitorError::UnknownVariable(a.var.name().to_string()))?;
            all_aps.insert(a.ap.clone());
            atoms.push((i, a));
        }
        atoms.sort_by(|(i, a), (j, b)| (i, &a.ap).cmp(&(j, &b.ap)));
        let aps = ApTable::new(all_aps)?;
        let atoms: Vec<IndexedAtom> = atoms.into_iter().map(|(_, a)| a).collect();
        let atom_slot = atoms
            .iter()
            .map(|a| {
                let bit = aps.index_of(&a.ap).expect("atom proposition in table") as u32;
                (var_index[&a.var], bit)
            })
            .collect();
        let mut b = Builder {
            bdd: Bdd::new(),
            atom_var: atoms.iter().enumerate().map(|(i, a)| (a.clone(), i as u32)).collect(),
            obligations: Vec::new(),
            obligation_var: HashMap::new(),
            unfolding: Vec::new(),
        };
        let natoms = atoms.len() as u32;
        let mut decided = HashMap::new();
        let skeleton = b.skeleton(body);
        let initial = match b.decide(skeleton, &mut decided) {
            TRUE => TRUE,
            _ => skeleton,
        };

        let mut states: Vec<State> = Vec::new();
        let mut node_state: HashMap<NodeId, StateId> = HashMap::new();
        let mut queue = VecDeque::new();
        node_state.insert(initial, StateId(0));
        states.push(State {
            residual: initial,
            unfolded: FALSE,
            edges: Vec::new(),
        });
        queue.push_back(0usize);
        while let Some(q) = queue.pop_front() {
            let raw = b.step(states[q].residual);
            let unfolded = b.decide_frontier(raw, natoms, &mut decided, &mut HashMap::new());
            let mut edges = Vec::new();
            for (guard, succ) in frontier(&mut b.bdd, unfolded, natoms) {
                let target = match node_state.get(&succ) {
                    Some(&s) => s,
                    None => {
                        if states.len() >= state_cap {
                            return Err(MonitorError::StateExplosion(state_cap));
                        }
                        let s = StateId(states.len() as u32);
                        node_state.insert(succ, s);
                        states.push(State {
                            residual: succ,
                            unfolded: FALSE,
                            edges: Vec::new(),
                        });
                        queue.push_back(s.0 as usize);
                        s
                    }
                };
                edges.push(Edge { guard, target });
            }
            states[q].unfolded = unfolded;
            states[q].edges = edges;
        }
        Ok(Self {
            vars: vars.to_vec(),
            aps,
            atoms,
            atom_slot,
            obligations: b.obligations,
            bdd: b.bdd,
            states,
            node_state,
        })
    }

    pub fn vars(&self) -> &[TraceVar] {
        &self.vars
    }

    pub fn arity(&self) -> usize {
        self.vars.len()
    }

    pub fn ap_table(&self) -> &ApTable {
        &self.aps
    }

    pub fn atoms(&self) -> &[IndexedAtom] {
        &self.atoms
    }

    pub fn initial(&self) -> StateId {
        StateId(0)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn edges(&self, q: StateId) -> &[Edge] {
        &self.states[q.0 as usize].edges
    }

    /// The residual `true`: every continuation is accepted.
    pub fn is_universal(&self, q: StateId) -> bool {
        self.states[q.0 as usize].residual == TRUE
    }

    /// Evaluates a guard for a letter given as a predicate on atom indices.
    pub fn guard_holds(&self, guard: NodeId, atom_value: impl Fn(usize) -> bool) -> bool {
        self.bdd.eval(guard, |v| atom_value(v as usize))
    }

    /// One step with a letter given as a predicate on atom indices.
    pub fn step_with(&self, q: StateId, atom_value: impl Fn(usize) -> bool) -> Option<StateId> {
        let natoms = self.atoms.len() as u32;
        let mut n = self.states[q.0 as usize].unfolded;
        while let Some(v) = self.bdd.var(n).filter(|&v| v < natoms) {
            n = if atom_value(v as usize) {
                self.bdd.hi(n)
            } else {
                self.bdd.lo(n)
            };
        }
        if n == FALSE {
            None
        } else {
            Some(self.node_state[&n])
        }
    }

    /// One step where `letter[j]` is the encoded step of the trace on variable `j`.
    pub fn step_bits(&self, q: StateId, letter: &[u64]) -> Option<StateId> {
        self.step_with(q, |i| {
            let (slot, bit) = self.atom_slot[i];
            letter[slot] >> bit & 1 == 1
        })
    }

    pub fn step_letter(&self, q: StateId, letter: &BTreeSet<IndexedAtom>) -> Option<StateId> {
        self.step_with(q, |i| letter.contains(&self.atoms[i]))
    }

    /// Minimum-length run over encoded traces, one per variable.
    pub fn accepts_encoded(&self, tuple: &[&[u64]]) -> bool {
        let len = tuple.iter().map(|t| t.len()).min().unwrap_or(0);
        let mut q = self.initial();
        let mut letter = vec![0u64; tuple.len()];
        for i in 0..len {
            if self.is_universal(q) {
                return true;
            }
            for (slot, t) in letter.iter_mut().zip(tuple) {
                *slot = t[i];
            }
            match self.step_bits(q, &letter) {
                Some(next) => q = next,
                None => return false,
            }
        }
        true
    }

    /// Position at which the run over the tuple dies, if it does.
    pub fn death_position(&self, tuple: &[&Trace]) -> Option<usize> {
        let enc: Vec<Vec<u64>> = tuple.iter().map(|t| self.aps.encode(t)).collect();
        let len = enc.iter().map(Vec::len).min().unwrap_or(0);
        let mut q = self.initial();
        let mut letter = vec![0u64; enc.len()];
        for i in 0..len {
            for (slot, t) in letter.iter_mut().zip(&enc) {
                *slot = t[i];
            }
            q = match self.step_bits(q, &letter) {
                Some(next) => next,
                None => return Some(i),
            };
        }
        None
    }

    /// A tuple is accepted iff the run over its zip never lacks a transition.
    pub fn accepts_tuple(&self, tuple: &[&Trace]) -> bool {
        assert_eq!(tuple.len(), self.arity(), "tuple arity");
        let enc: Vec<Vec<u64>> = tuple.iter().map(|t| self.aps.encode(t)).collect();
        let refs: Vec<&[u64]> = enc.iter().map(Vec::as_slice).collect();
        self.accepts_encoded(&refs)
    }

    fn obligation_name(&self, v: u32) -> String {
        let natoms = self.atoms.len() as u32;
        if v < natoms {
            self.atoms[v as usize].to_string()
        } else {
            format!("{{{}}}", self.obligations[(v - natoms) as usize])
        }
    }

    pub fn render_residual(&self, q: StateId) -> String {
        self.bdd
            .render(self.states[q.0 as usize].residual, &|v| self.obligation_name(v))
    }

    pub fn render_guard(&self, guard: NodeId) -> String {
        self.bdd.render(guard, &|v| self.obligation_name(v))
    }

    /// Text dump: one block per state with its residual and guarded edges.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let vars: Vec<&str> = self.vars.iter().map(TraceVar::name).collect();
        let _ = writeln!(
            out,
            "template vars=[{}] states={} ({{f}} reads \"f holds now\")",
            vars.join(", "),
            self.states.len()
        );
        for (i, _) in self.states.iter().enumerate() {
            let q = StateId(i as u32);
            let mark = if i == 0 { " initial" } else { "" };
            let _ = writeln!(out, "q{i}{mark}: {}", self.render_residual(q));
            for e in self.edges(q) {
                let _ = writeln!(out, "  --[{}]--> q{}", self.render_guard(e.guard), e.target.0);
            }
        }
        out
    }
}

/// How a template variable is fed when a template is instantiated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Slot {
    Bound(Trace),
    /// Read from component `k` of the free letter.
    Free(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Bound(usize),
    Free(usize),
}

/// A template with some variables fixed to explicit traces, `M[t/π]`.
#[derive(Debug, Clone)]
pub struct InstantiatedMonitor<'a> {
    tpl: &'a MonitorTemplate,
    bound: Vec<Vec<u64>>,
    sources: Vec<Source>,
    free_vars: Vec<TraceVar>,
    horizon: Option<usize>,
}

/// A letter of an instantiated monitor: one step per free slot.
pub type FreeLetter = Vec<Step>;

impl<'a> InstantiatedMonitor<'a> {
    /// Binds the given variables; the remaining ones become free slots in template order.
    pub fn new(tpl: &'a MonitorTemplate, binding: &BTreeMap<TraceVar, Trace>) -> Self {
        let mut next = 0;
        let slots = tpl
            .vars
            .iter()
            .map(|v| match binding.get(v) {
                Some(t) => Slot::Bound(t.clone()),
                None => {
                    next += 1;
                    Slot::Free(next - 1)
                }
            })
            .collect();
        Self::with_slots(tpl, slots)
    }

    /// General form; several variables may share one free slot.
    pub fn with_slots(tpl: &'a MonitorTemplate, slots: Vec<Slot>) -> Self {
        assert_eq!(slots.len(), tpl.arity(), "one slot per template variable");
        let mut bound = Vec::new();
        let mut sources = Vec::new();
        let mut horizon: Option<usize> = None;
        let width = slots
            .iter()
            .filter_map(|s| match s {
                Slot::Free(k) => Some(k + 1),
                Slot::Bound(_) => None,
            })
            .max()
            .unwrap_or(0);
        let mut free_vars: Vec<Option<TraceVar>> = vec![None; width];
        for (v, s) in tpl.vars.iter().zip(slots) {
            match s {
                Slot::Bound(t) => {
                    horizon = Some(horizon.map_or(t.len(), |h| h.min(t.len())));
                    sources.push(Source::Bound(bound.len()));
                    bound.push(tpl.aps.encode(&t));
                }
                Slot::Free(k) => {
                    free_vars[k].get_or_insert_with(|| v.clone());
                    sources.push(Source::Free(k));
                }
            }
        }
        let free_vars = free_vars
            .into_iter()
            .enumerate()
            .map(|(k, v)| v.unwrap_or_else(|| TraceVar::new(format!("_{k}"))))
            .collect();
        Self {
            tpl,
            bound,
            sources,
            free_vars,
            horizon,
        }
    }

    pub fn template(&self) -> &MonitorTemplate {
        self.tpl
    }

    pub fn free_vars(&self) -> &[TraceVar] {
        &self.free_vars
    }

    /// Minimum length over bound traces, `None` when nothing is bound.
    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    fn step_at(&self, q: StateId, pos: usize, free_letter: &[u64], buf: &mut Vec<u64>) -> Option<StateId> {
        buf.clear();
        buf.extend(self.sources.iter().map(|s| match *s {
            Source::Bound(i) => self.bound[i][pos],
            Source::Free(k) => free_letter[k],
        }));
        self.tpl.step_bits(q, buf)
    }

    /// Runs `min(|w|, horizon)` steps.
    pub fn accepts_word(&self, word: &[FreeLetter]) -> bool {
        let n = self.horizon.map_or(word.len(), |h| h.min(word.len()));
        let mut q = self.tpl.initial();
        let mut buf = Vec::new();
        for (pos, letter) in word.iter().take(n).enumerate() {
            let bits: Vec<u64> = letter.iter().map(|s| self.tpl.aps.encode_step(s)).collect();
            match self.step_at(q, pos, &bits, &mut buf) {
                Some(next) => q = next,
                None => return false,
            }
        }
        true
    }

    /// Proposition bits that matter for each free slot.
    fn relevant_bits(&self, mask: &mut [u64]) {
        for &(var, bit) in &self.tpl.atom_slot {
            if let Source::Free(k) = self.sources[var] {
                mask[k] |= 1 << bit;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Status {
    Live(StateId),
    Sink,
}

fn normalize(m: &InstantiatedMonitor<'_>, pos: usize, q: StateId) -> Status {
    if m.horizon.is_some_and(|h| pos >= h) || m.tpl.is_universal(q) {
        Status::Sink
    } else {
        Status::Live(q)
    }
}

/// Outcome of an inclusion query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inclusion {
    pub holds: bool,
    /// A word accepted by every left monitor and rejected by some right one.
    pub counterexample: Option<Vec<FreeLetter>>,
}

/// `L(A) ⊆ L(B)`.
pub fn language_inclusion(a: &InstantiatedMonitor<'_>, b: &InstantiatedMonitor<'_>) -> Inclusion {
    conjunctive_inclusion(&[a], &[b])
}

/// `⋂ L(lhs) ⊆ ⋂ L(rhs)` by breadth-first search over the synchronized product.
///
/// All monitors must share the template AP table and the number of free slots.
/// Positions are capped at the largest finite horizon: beyond it every
/// bounded monitor is an accepting sink and the product no longer depends on
/// the position.
pub fn conjunctive_inclusion(
    lhs: &[&InstantiatedMonitor<'_>],
    rhs: &[&InstantiatedMonitor<'_>],
) -> Inclusion {
    let all: Vec<&InstantiatedMonitor<'_>> = lhs.iter().chain(rhs).copied().collect();
    let width = all.first().map_or(0, |m| m.free_vars.len());
    assert!(
        all.iter().all(|m| m.free_vars.len() == width),
        "monitors must share their free slots"
    );
    let aps = all.first().map(|m| m.tpl.aps.clone());
    let letters = free_letters(&all, width);
    let cap = all.iter().filter_map(|m| m.horizon).max().unwrap_or(0);

    type Key = (usize, Vec<Status>);
    let start: Vec<Status> = all.iter().map(|m| normalize(m, 0, m.tpl.initial())).collect();
    let rhs_done = |st: &[Status]| st[lhs.len()..].iter().all(|s| *s == Status::Sink);
    let holds = Inclusion {
        holds: true,
        counterexample: None,
    };
    if rhs_done(&start) {
        return holds;
    }
    let mut nodes: Vec<(Key, Option<(usize, usize)>)> = vec![((0, start.clone()), None)];
    let mut seen: HashSet<Key> = HashSet::new();
    seen.insert((0, start));
    let mut queue = VecDeque::from([0usize]);
    let mut buf = Vec::new();
    while let Some(idx) = queue.pop_front() {
        let (pos, st) = nodes[idx].0.clone();
        'letters: for (li, letter) in letters.iter().enumerate() {
            let mut next = Vec::with_capacity(st.len());
            for (j, (m, s)) in all.iter().zip(&st).enumerate() {
                let q = match s {
                    Status::Sink => {
                        next.push(Status::Sink);
                        continue;
                    }
                    Status::Live(q) => *q,
                };
                match m.step_at(q, pos, letter, &mut buf) {
                    Some(q2) => next.push(normalize(m, pos + 1, q2)),
                    None if j < lhs.len() => continue 'letters,
                    None => {
                        let aps = aps.as_ref().expect("at least one monitor");
                        let word = trail(&nodes, idx, Some(li), &letters, aps);
                        return Inclusion {
                            holds: false,
                            counterexample: Some(word),
                        };
                    }
                }
            }
            if rhs_done(&next) {
                continue;
            }
            let key = ((pos + 1).min(cap), next);
            if seen.insert(key.clone()) {
                nodes.push((key, Some((idx, li))));
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    holds
}

/// Every assignment of the proposition bits read by some free slot.
fn free_letters(all: &[&InstantiatedMonitor<'_>], width: usize) -> Vec<Vec<u64>> {
    let mut mask = vec![0u64; width];
    for m in all {
        m.relevant_bits(&mut mask);
    }
    let positions: Vec<(usize, u32)> = mask
        .iter()
        .enumerate()
        .flat_map(|(k, &m)| (0..64).filter(move |b| m >> b & 1 == 1).map(move |b| (k, b)))
        .collect();
    assert!(positions.len() < 24, "free alphabet too large to enumerate");
    (0u64..1 << positions.len())
        .map(|code| {
            let mut l = vec![0u64; width];
            for (j, &(k, b)) in positions.iter().enumerate() {
                if code >> j & 1 == 1 {
                    l[k] |= 1 << b;
                }
            }
            l
        })
        .collect()
}

/// Letters on the search-tree path to `idx`, optionally followed by `last`.
fn trail<K>(
    nodes: &[(K, Option<(usize, usize)>)],
    idx: usize,
    last: Option<usize>,
    letters: &[Vec<u64>],
    aps: &ApTable,
) -> Vec<FreeLetter> {
    let mut word: Vec<usize> = last.into_iter().collect();
    let mut cur = idx;
    while let Some((parent, l)) = nodes[cur].1 {
        word.push(l);
        cur = parent;
    }
    word.reverse();
    word.into_iter()
        .map(|l| letters[l].iter().map(|&b| aps.decode_step(b)).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Run {
    Live(StateId),
    Accepted,
    Rejected,
}

/// Shortest word `w` such that `target` holds on the vector of
/// "monitor `i` accepts `w`", or `None` if there is none.
///
/// Unlike inclusion, `target` may ask for rejection, so the search checks it
/// at every word length including the empty word.
pub fn find_word(
    monitors: &[&InstantiatedMonitor<'_>],
    target: impl Fn(&[bool]) -> bool,
) -> Option<Vec<FreeLetter>> {
    let width = monitors.first().map_or(0, |m| m.free_vars.len());
    assert!(
        monitors.iter().all(|m| m.free_vars.len() == width),
        "monitors must share their free slots"
    );
    let aps = monitors.first()?.tpl.aps.clone();
    let letters = free_letters(monitors, width);
    let cap = monitors.iter().filter_map(|m| m.horizon).max().unwrap_or(0);
    let norm = |m: &InstantiatedMonitor<'_>, pos: usize, q: StateId| match normalize(m, pos, q) {
        Status::Sink => Run::Accepted,
        Status::Live(q) => Run::Live(q),
    };
    let verdicts = |st: &[Run]| -> Vec<bool> { st.iter().map(|r| *r != Run::Rejected).collect() };

    let start: Vec<Run> = monitors.iter().map(|m| norm(m, 0, m.tpl.initial())).collect();
    if target(&verdicts(&start)) {
        return Some(Vec::new());
    }
    type Key = (usize, Vec<Run>);
    let mut nodes: Vec<(Key, Option<(usize, usize)>)> = vec![((0, start.clone()), None)];
    let mut seen: HashSet<Key> = HashSet::from([(0, start)]);
    let mut queue = VecDeque::from([0usize]);
    let mut buf = Vec::new();
    while let Some(idx) = queue.pop_front() {
        let (pos, st) = nodes[idx].0.clone();
        if st.iter().all(|r| !matches!(r, Run::Live(_))) {
            continue;
        }
        for (li, letter) in letters.iter().enumerate() {
            let next: Vec<Run> = monitors
                .iter()
                .zip(&st)
                .map(|(m, r)| match *r {
                    Run::Live(q) => match m.step_at(q, pos, letter, &mut buf) {
                        Some(q2) => norm(m, pos + 1, q2),
                        None => Run::Rejected,
                    },
                    done => done,
                })
                .collect();
            if target(&verdicts(&next)) {
                return Some(trail(&nodes, idx, Some(li), &letters, &aps));
            }
            let key = ((pos + 1).min(cap), next);
            if seen.insert(key.clone()) {
                nodes.push((key, Some((idx, li))));
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    None
}
