//! Infinite-word LTL over indexed atoms.
//!
//! Bodies are put in negation normal form and expanded by an on-the-fly
//! tableau into a generalized Büchi automaton whose states are consistent
//! sets of closure formulas. Emptiness is decided on the strongly connected
//! components of the reachable graph.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::formula::{IndexedAtom, LtlExpr, TraceVar};
use crate::trace::{project, Step};

pub const DEFAULT_TABLEAU_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtlError {
    #[error("tableau exceeds {0} states")]
    StateExplosion(usize),
    #[error("alphabet of {0} atoms is too large for subset construction")]
    AlphabetTooLarge(usize),
}

type Id = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Nnf {
    True,
    False,
    Lit(u32, bool),
    And(Id, Id),
    Or(Id, Id),
    Next(Id),
    Until(Id, Id),
    Release(Id, Id),
}

#[derive(Debug, Clone, Default)]
struct Arena {
    nodes: Vec<Nnf>,
    ids: HashMap<Nnf, Id>,
    atoms: Vec<IndexedAtom>,
    atom_ids: HashMap<IndexedAtom, u32>,
}

impl Arena {
    fn intern(&mut self, n: Nnf) -> Id {
        if let Some(&i) = self.ids.get(&n) {
            return i;
        }
        self.nodes.push(n);
        self.ids.insert(n, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn and(&mut self, a: Id, b: Id) -> Id {
        match (self.nodes[a], self.nodes[b]) {
            (Nnf::False, _) | (_, Nnf::False) => self.intern(Nnf::False),
            (Nnf::True, _) => b,
            (_, Nnf::True) => a,
            _ if a == b => a,
            _ => self.intern(Nnf::And(a.min(b), a.max(b))),
        }
    }

    fn or(&mut self, a: Id, b: Id) -> Id {
        match (self.nodes[a], self.nodes[b]) {
            (Nnf::True, _) | (_, Nnf::True) => self.intern(Nnf::True),
            (Nnf::False, _) => b,
            (_, Nnf::False) => a,
            _ if a == b => a,
            _ => self.intern(Nnf::Or(a.min(b), a.max(b))),
        }
    }

    fn atom(&mut self, a: &IndexedAtom) -> u32 {
        if let Some(&i) = self.atom_ids.get(a) {
            return i;
        }
        self.atoms.push(a.clone());
        let i = (self.atoms.len() - 1) as u32;
        self.atom_ids.insert(a.clone(), i);
        i
    }

    fn nnf(&mut self, e: &LtlExpr, positive: bool) -> Id {
        match e {
            LtlExpr::True | LtlExpr::False => {
                let t = matches!(e, LtlExpr::True) == positive;
                self.intern(if t { Nnf::True } else { Nnf::False })
            }
            LtlExpr::Atom(a) => {
                let a = self.atom(a);
                self.intern(Nnf::Lit(a, positive))
            }
            LtlExpr::Not(x) => self.nnf(x, !positive),
            LtlExpr::Or(l, r) => {
                let (l, r) = (self.nnf(l, positive), self.nnf(r, positive));
                if positive {
                    self.or(l, r)
                } else {
                    self.and(l, r)
                }
            }
            LtlExpr::Next(x) => {
                let x = self.nnf(x, positive);
                match self.nodes[x] {
                    Nnf::True | Nnf::False => x,
                    _ => self.intern(Nnf::Next(x)),
                }
            }
            LtlExpr::Until(l, r) => {
                let (l, r) = (self.nnf(l, positive), self.nnf(r, positive));
                match (positive, self.nodes[r]) {
                    (_, Nnf::True) => self.intern(Nnf::True),
                    (true, Nnf::False) => self.intern(Nnf::False),
                    (true, _) => self.intern(Nnf::Until(l, r)),
                    (false, Nnf::False) => self.intern(Nnf::False),
                    (false, _) => self.intern(Nnf::Release(l, r)),
                }
            }
            // a W b = b R (a | b); its negation is !b U (!a & !b).
            LtlExpr::WeakUntil(l, r) => {
                let (l, r) = (self.nnf(l, positive), self.nnf(r, positive));
                if positive {
                    let either = self.or(l, r);
                    self.release(r, either)
                } else {
                    let both = self.and(l, r);
                    self.until(r, both)
                }
            }
            LtlExpr::Globally(x) => {
                let x = self.nnf(x, positive);
                let f = self.intern(Nnf::False);
                let t = self.intern(Nnf::True);
                if positive {
                    self.release(f, x)
                } else {
                    self.until(t, x)
                }
            }
            LtlExpr::Finally(x) => {
                let x = self.nnf(x, positive);
                let f = self.intern(Nnf::False);
                let t = self.intern(Nnf::True);
                if positive {
                    self.until(t, x)
                } else {
                    self.release(f, x)
                }
            }
            other => self.nnf(&other.desugar(), positive),
        }
    }

    fn until(&mut self, a: Id, b: Id) -> Id {
        match self.nodes[b] {
            Nnf::True | Nnf::False => b,
            _ => self.intern(Nnf::Until(a, b)),
        }
    }

    fn release(&mut self, a: Id, b: Id) -> Id {
        match self.nodes[b] {
            Nnf::True | Nnf::False => b,
            _ => self.intern(Nnf::Release(a, b)),
        }
    }

    fn complement_lit(&self, id: Id) -> Option<Id> {
        match self.nodes[id] {
            Nnf::Lit(a, p) => self.ids.get(&Nnf::Lit(a, !p)).copied(),
            _ => None,
        }
    }

    /// All ways of satisfying `init` now, as (literals and pending untils,
    /// obligations for next). Other formulas in a branch do not affect the
    /// label, successors or acceptance, so they are dropped from the key.
    fn expand(&self, init: &[Id]) -> Vec<(BTreeSet<Id>, BTreeSet<Id>)> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(init.to_vec(), BTreeSet::new(), BTreeSet::new())];
        'branches: while let Some((mut todo, mut old, mut next)) = stack.pop() {
            while let Some(f) = todo.pop() {
                if old.contains(&f) {
                    continue;
                }
                match self.nodes[f] {
                    Nnf::False => continue 'branches,
                    Nnf::True => {
                        old.insert(f);
                    }
                    Nnf::Lit(..) => {
                        if self.complement_lit(f).is_some_and(|c| old.contains(&c)) {
                            continue 'branches;
                        }
                        old.insert(f);
                    }
                    Nnf::And(a, b) => {
                        old.insert(f);
                        todo.push(a);
                        todo.push(b);
                    }
                    Nnf::Or(a, b) => {
                        old.insert(f);
                        let mut alt = todo.clone();
                        alt.push(b);
                        stack.push((alt, old.clone(), next.clone()));
                        todo.push(a);
                    }
                    Nnf::Next(a) => {
                        old.insert(f);
                        next.insert(a);
                    }
                    Nnf::Until(a, b) => {
                        old.insert(f);
                        let mut alt = todo.clone();
                        alt.push(a);
                        let mut alt_next = next.clone();
                        alt_next.insert(f);
                        stack.push((alt, old.clone(), alt_next));
                        todo.push(b);
                    }
                    Nnf::Release(a, b) => {
                        old.insert(f);
                        let mut alt = todo.clone();
                        alt.push(b);
                        let mut alt_next = next.clone();
                        alt_next.insert(f);
                        stack.push((alt, old.clone(), alt_next));
                        todo.push(a);
                        todo.push(b);
                    }
                }
            }
            let key = old
                .iter()
                .copied()
                .filter(|&f| match self.nodes[f] {
                    Nnf::Lit(..) => true,
                    Nnf::Until(_, b) => !old.contains(&b),
                    _ => false,
                })
                .collect();
            out.insert((key, next));
        }
        // A branch containing another branch's constraints adds no words.
        let all: Vec<(BTreeSet<Id>, BTreeSet<Id>)> = out.into_iter().collect();
        all.iter()
            .enumerate()
            .filter(|&(i, (k, n))| {
                !all.iter().enumerate().any(|(j, (k2, n2))| {
                    j != i && k2.is_subset(k) && n2.is_subset(n) && (k2 != k || n2 != n)
                })
            })
            .map(|(_, b)| b.clone())
            .collect()
    }
}

/// Subformulas of a core body together with their negations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    pub formulas: Vec<LtlExpr>,
}

impl Closure {
    pub fn of(body: &LtlExpr) -> Self {
        let mut seen = BTreeSet::new();
        let mut formulas = Vec::new();
        let mut stack = vec![body.clone()];
        while let Some(e) = stack.pop() {
            let neg = match &e {
                LtlExpr::Not(x) => (**x).clone(),
                other => LtlExpr::not(other.clone()),
            };
            for f in [e.clone(), neg] {
                if seen.insert(f.clone()) {
                    formulas.push(f);
                }
            }
            match &e {
                LtlExpr::Not(x) | LtlExpr::Next(x) => stack.push((**x).clone()),
                LtlExpr::Or(l, r) | LtlExpr::Until(l, r) => {
                    stack.push((**l).clone());
                    stack.push((**r).clone());
                }
                _ => {}
            }
        }
        Self { formulas }
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }
}

#[derive(Debug, Clone)]
struct GbaState {
    /// Literals and untils whose right side is still owed.
    now: BTreeSet<Id>,
    lits: Vec<(u32, bool)>,
}

/// Generalized Büchi automaton with state-based acceptance and state labels:
/// a run enters state `q` while reading a letter consistent with `q`'s literals.
#[derive(Debug, Clone)]
pub struct GeneralizedBuchi {
    arena: Arena,
    states: Vec<GbaState>,
    initial: Vec<usize>,
    succ: Vec<Vec<usize>>,
    /// `accepting[f][q]`: state `q` is in acceptance family `f`.
    accepting: Vec<Vec<bool>>,
}

pub fn build_gba(body: &LtlExpr) -> Result<GeneralizedBuchi, LtlError> {
    build_gba_with_cap(body, DEFAULT_TABLEAU_CAP)
}

pub fn build_gba_with_cap(body: &LtlExpr, cap: usize) -> Result<GeneralizedBuchi, LtlError> {
    let mut arena = Arena::default();
    for a in body.atoms() {
        arena.atom(&a);
    }
    let root = arena.nnf(body, true);
    let mut index: HashMap<(BTreeSet<Id>, BTreeSet<Id>), usize> = HashMap::new();
    let mut keys: Vec<(BTreeSet<Id>, BTreeSet<Id>)> = Vec::new();
    let mut expansions: HashMap<BTreeSet<Id>, Vec<usize>> = HashMap::new();
    let mut queue = VecDeque::new();

    let mut intern = |key: (BTreeSet<Id>, BTreeSet<Id>),
                      keys: &mut Vec<_>,
                      queue: &mut VecDeque<usize>|
     -> Result<usize, LtlError> {
        if let Some(&i) = index.get(&key) {
            return Ok(i);
        }
        if keys.len() >= cap {
            return Err(LtlError::StateExplosion(cap));
        }
        keys.push(key.clone());
        index.insert(key, keys.len() - 1);
        queue.push_back(keys.len() - 1);
        Ok(keys.len() - 1)
    };

    let mut initial = Vec::new();
    for key in arena.expand(&[root]) {
        initial.push(intern(key, &mut keys, &mut queue)?);
    }
    let mut succ: Vec<Vec<usize>> = Vec::new();
    while let Some(q) = queue.pop_front() {
        let next = keys[q].1.clone();
        let targets = match expansions.get(&next) {
            Some(t) => t.clone(),
            None => {
                let init: Vec<Id> = next.iter().copied().collect();
                let mut t = Vec::new();
                for key in arena.expand(&init) {
                    t.push(intern(key, &mut keys, &mut queue)?);
                }
                expansions.insert(next, t.clone());
                t
            }
        };
        if succ.len() <= q {
            succ.resize(q + 1, Vec::new());
        }
        succ[q] = targets;
    }
    succ.resize(keys.len(), Vec::new());

    let untils: Vec<Id> = arena
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| matches!(n, Nnf::Until(..)).then_some(i))
        .collect();
    let states: Vec<GbaState> = keys
        .into_iter()
        .map(|(now, _)| {
            let lits = now
                .iter()
                .filter_map(|&f| match arena.nodes[f] {
                    Nnf::Lit(a, p) => Some((a, p)),
                    _ => None,
                })
                .collect();
            GbaState { now, lits }
        })
        .collect();
    let accepting = untils
        .iter()
        .map(|&u| states.iter().map(|s| !s.now.contains(&u)).collect())
        .collect();
    Ok(GeneralizedBuchi {
        arena,
        states,
        initial,
        succ,
        accepting,
    })
}

impl GeneralizedBuchi {
    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn successors(&self, q: usize) -> &[usize] {
        &self.succ[q]
    }

    pub fn family_count(&self) -> usize {
        self.accepting.len()
    }

    pub fn in_family(&self, family: usize, q: usize) -> bool {
        self.accepting[family][q]
    }

    pub fn atoms(&self) -> &[IndexedAtom] {
        &self.arena.atoms
    }

    /// The smallest letter consistent with state `q`.
    pub fn label(&self, q: usize) -> BTreeSet<IndexedAtom> {
        self.states[q]
            .lits
            .iter()
            .filter(|(_, p)| *p)
            .map(|(a, _)| self.arena.atoms[*a as usize].clone())
            .collect()
    }

    fn consistent(&self, q: usize, letter: u64) -> bool {
        self.states[q]
            .lits
            .iter()
            .all(|&(a, p)| (letter >> a & 1 == 1) == p)
    }

    /// Strongly connected components (Tarjan, iterative).
    fn sccs(&self) -> Vec<Vec<usize>> {
        let n = self.states.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut out = Vec::new();
        let mut counter = 0;
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut work = vec![(root, 0usize)];
            index[root] = counter;
            low[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;
            while let Some(&mut (v, ref mut i)) = work.last_mut() {
                if *i < self.succ[v].len() {
                    let w = self.succ[v][*i];
                    *i += 1;
                    if index[w] == usize::MAX {
                        index[w] = counter;
                        low[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        work.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    work.pop();
                    if let Some(&(parent, _)) = work.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack");
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        out.push(comp);
                    }
                }
            }
        }
        out
    }

    fn accepting_sccs(&self) -> Vec<Vec<usize>> {
        self.sccs()
            .into_iter()
            .filter(|c| {
                let nontrivial = c.len() > 1 || self.succ[c[0]].contains(&c[0]);
                nontrivial
                    && self
                        .accepting
                        .iter()
                        .all(|fam| c.iter().any(|&q| fam[q]))
            })
            .collect()
    }

    /// States from which some accepted infinite run starts.
    pub fn live_states(&self) -> Vec<bool> {
        let n = self.states.len();
        let mut pred = vec![Vec::new(); n];
        for (v, ss) in self.succ.iter().enumerate() {
            for &w in ss {
                pred[w].push(v);
            }
        }
        let mut live = vec![false; n];
        let mut queue: VecDeque<usize> = self.accepting_sccs().into_iter().flatten().collect();
        for &q in &queue {
            live[q] = true;
        }
        while let Some(w) = queue.pop_front() {
            for &v in &pred[w] {
                if !live[v] {
                    live[v] = true;
                    queue.push_back(v);
                }
            }
        }
        live
    }

    /// Shortest path from any of `from` into `target`, through `allowed`
    /// states, taking at least one edge when `from` is a single state.
    fn path(
        &self,
        starts: &[usize],
        step_first: bool,
        allowed: &dyn Fn(usize) -> bool,
        target: &dyn Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        let mut parent: HashMap<usize, Option<usize>> = HashMap::new();
        let mut queue = VecDeque::new();
        for &s in starts {
            if step_first {
                for &w in &self.succ[s] {
                    if allowed(w) && !parent.contains_key(&w) {
                        parent.insert(w, None);
                        queue.push_back(w);
                    }
                }
            } else if allowed(s) && !parent.contains_key(&s) {
                parent.insert(s, None);
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            if target(v) {
                let mut path = vec![v];
                let mut cur = v;
                while let Some(Some(p)) = parent.get(&cur) {
                    path.push(*p);
                    cur = *p;
                }
                path.reverse();
                return Some(path);
            }
            for &w in &self.succ[v] {
                if allowed(w) && !parent.contains_key(&w) {
                    parent.insert(w, Some(v));
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// An accepted lasso, if the language is nonempty.
    pub fn find_lasso(&self) -> Option<LassoWitness> {
        let sccs = self.accepting_sccs();
        let mut member = vec![usize::MAX; self.states.len()];
        for (i, c) in sccs.iter().enumerate() {
            for &q in c {
                member[q] = i;
            }
        }
        let stem = self.path(&self.initial, false, &|_| true, &|q| member[q] != usize::MAX)?;
        let entry = *stem.last().expect("nonempty stem");
        let comp = member[entry];
        let inside = |q: usize| member[q] == comp;
        let mut cycle = vec![entry];
        for fam in &self.accepting {
            if cycle.iter().any(|&q| fam[q]) {
                continue;
            }
            let cur = *cycle.last().expect("cycle has a start");
            let leg = self.path(&[cur], true, &inside, &|q| fam[q])?;
            cycle.extend(leg);
        }
        let cur = *cycle.last().expect("cycle has a start");
        let back = self.path(&[cur], true, &inside, &|q| q == entry)?;
        cycle.extend(&back[..back.len() - 1]);
        Some(LassoWitness {
            prefix: stem[..stem.len() - 1].iter().map(|&q| self.label(q)).collect(),
            lasso_loop: cycle.iter().map(|&q| self.label(q)).collect(),
        })
    }
}

/// The ultimately periodic word `prefix · loop^ω`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoWitness {
    pub prefix: Vec<BTreeSet<IndexedAtom>>,
    pub lasso_loop: Vec<BTreeSet<IndexedAtom>>,
}

impl LassoWitness {
    /// Trace-file rendering per variable: `prefix` steps, then `loop` steps.
    pub fn to_trace_lines(&self, vars: &[TraceVar]) -> Vec<String> {
        let render = |word: &[BTreeSet<IndexedAtom>], v: &TraceVar| -> String {
            let steps: Vec<String> = word.iter().map(|l| project(l, v).to_string()).collect();
            if steps.is_empty() {
                "eps".into()
            } else {
                steps.join(";")
            }
        };
        vars.iter()
            .map(|v| {
                format!(
                    "{v}: prefix {} loop {}",
                    render(&self.prefix, v),
                    render(&self.lasso_loop, v)
                )
            })
            .collect()
    }

    pub fn project_loop(&self, v: &TraceVar) -> Vec<Step> {
        self.lasso_loop.iter().map(|l| project(l, v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Satisfiability {
    Sat(LassoWitness),
    Unsat,
}

impl Satisfiability {
    pub fn is_sat(&self) -> bool {
        matches!(self, Self::Sat(_))
    }
}

/// Satisfiability over infinite words, indexed atoms read as plain propositions.
pub fn is_satisfiable(body: &LtlExpr) -> Result<Satisfiability, LtlError> {
    let gba = build_gba(body)?;
    Ok(match gba.find_lasso() {
        Some(w) => Satisfiability::Sat(w),
        None => Satisfiability::Unsat,
    })
}

pub fn is_valid(body: &LtlExpr) -> Result<bool, LtlError> {
    Ok(!is_satisfiable(&LtlExpr::not(body.clone()))?.is_sat())
}

/// Truth of `body` at position 0 of the lasso word.
pub fn eval_on_lasso(body: &LtlExpr, w: &LassoWitness) -> bool {
    assert!(!w.lasso_loop.is_empty(), "lasso loop must be nonempty");
    let p = w.prefix.len();
    let len = p + w.lasso_loop.len();
    let letters: Vec<&BTreeSet<IndexedAtom>> = w.prefix.iter().chain(&w.lasso_loop).collect();
    let next = |i: usize| if i + 1 < len { i + 1 } else { p };
    fn go(
        e: &LtlExpr,
        len: usize,
        letter: &[&BTreeSet<IndexedAtom>],
        next: &dyn Fn(usize) -> usize,
    ) -> Vec<bool> {
        match e {
            LtlExpr::True => vec![true; len],
            LtlExpr::Atom(a) => (0..len).map(|i| letter[i].contains(a)).collect(),
            LtlExpr::Not(x) => go(x, len, letter, next).into_iter().map(|b| !b).collect(),
            LtlExpr::Or(l, r) => {
                let (l, r) = (go(l, len, letter, next), go(r, len, letter, next));
                l.iter().zip(&r).map(|(a, b)| *a || *b).collect()
            }
            LtlExpr::Next(x) => {
                let x = go(x, len, letter, next);
                (0..len).map(|i| x[next(i)]).collect()
            }
            LtlExpr::Until(l, r) => {
                let (l, r) = (go(l, len, letter, next), go(r, len, letter, next));
                let mut v = vec![false; len];
                loop {
                    let mut changed = false;
                    for i in (0..len).rev() {
                        let nv = r[i] || (l[i] && v[next(i)]);
                        if nv != v[i] {
                            v[i] = nv;
                            changed = true;
                        }
                    }
                    if !changed {
                        return v;
                    }
                }
            }
            other => go(&other.desugar(), len, letter, next),
        }
    }
    go(body, len, &letters, &next)[0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FsmVerdict {
    Top,
    Bottom,
    Unknown,
}

/// Deterministic three-verdict monitor over the letters of the body's atoms.
#[derive(Debug, Clone)]
pub struct MonitorFsm {
    alphabet: Vec<IndexedAtom>,
    verdicts: Vec<FsmVerdict>,
    /// `delta[q][letter]`, letters encoded over `alphabet`.
    delta: Vec<Vec<usize>>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum FsmKey {
    Initial,
    Final(FsmVerdict),
    Sets(Vec<usize>, Vec<usize>),
}

pub fn build_fsm_monitor(body: &LtlExpr) -> Result<MonitorFsm, LtlError> {
    build_fsm_monitor_with_cap(body, DEFAULT_TABLEAU_CAP)
}

pub fn build_fsm_monitor_with_cap(body: &LtlExpr, cap: usize) -> Result<MonitorFsm, LtlError> {
    let alphabet: Vec<IndexedAtom> = body.atoms().into_iter().collect();
    if alphabet.len() > 16 {
        return Err(LtlError::AlphabetTooLarge(alphabet.len()));
    }
    let pos = build_gba_with_cap(body, cap)?;
    let neg = build_gba_with_cap(&LtlExpr::not(body.clone()), cap)?;
    let live_pos = pos.live_states();
    let live_neg = neg.live_states();
    // Both automata number atoms independently; translate letters per automaton.
    let remap = |g: &GeneralizedBuchi| -> Vec<u32> {
        g.atoms()
            .iter()
            .map(|a| alphabet.iter().position(|b| b == a).expect("atom in alphabet") as u32)
            .collect()
    };
    let (map_pos, map_neg) = (remap(&pos), remap(&neg));
    let translate = |letter: u64, map: &[u32]| -> u64 {
        map.iter()
            .enumerate()
            .fold(0, |acc, (i, &j)| acc | ((letter >> j & 1) << i))
    };
    let advance = |g: &GeneralizedBuchi, live: &[bool], from: Option<&[usize]>, letter: u64| {
        let cands: Vec<usize> = match from {
            None => g.initial.clone(),
            Some(set) => set.iter().flat_map(|&q| g.succ[q].iter().copied()).collect(),
        };
        let set: BTreeSet<usize> = cands
            .into_iter()
            .filter(|&q| live[q] && g.consistent(q, letter))
            .collect();
        set.into_iter().collect::<Vec<_>>()
    };
    let classify = |p: Vec<usize>, n: Vec<usize>| -> FsmKey {
        if p.is_empty() {
            FsmKey::Final(FsmVerdict::Bottom)
        } else if n.is_empty() {
            FsmKey::Final(FsmVerdict::Top)
        } else {
            FsmKey::Sets(p, n)
        }
    };
    let initial_verdict = if !pos.initial.iter().any(|&q| live_pos[q]) {
        FsmVerdict::Bottom
    } else if !neg.initial.iter().any(|&q| live_neg[q]) {
        FsmVerdict::Top
    } else {
        FsmVerdict::Unknown
    };
    let mut keys = vec![FsmKey::Initial];
    let mut index: HashMap<FsmKey, usize> = HashMap::from([(FsmKey::Initial, 0)]);
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut q = 0;
    while q < keys.len() {
        let key = keys[q].clone();
        let mut row = Vec::with_capacity(1 << alphabet.len());
        for letter in 0u64..1 << alphabet.len() {
            let succ = match &key {
                FsmKey::Final(v) => FsmKey::Final(*v),
                FsmKey::Initial => classify(
                    advance(&pos, &live_pos, None, translate(letter, &map_pos)),
                    advance(&neg, &live_neg, None, translate(letter, &map_neg)),
                ),
                FsmKey::Sets(p, n) => classify(
                    advance(&pos, &live_pos, Some(p), translate(letter, &map_pos)),
                    advance(&neg, &live_neg, Some(n), translate(letter, &map_neg)),
                ),
            };
            let id = match index.get(&succ) {
                Some(&i) => i,
                None => {
                    if keys.len() >= cap {
                        return Err(LtlError::StateExplosion(cap));
                    }
                    keys.push(succ.clone());
                    index.insert(succ, keys.len() - 1);
                    keys.len() - 1
                }
            };
            row.push(id);
        }
        delta.push(row);
        q += 1;
    }
    let verdicts = keys
        .iter()
        .map(|k| match k {
            FsmKey::Initial => initial_verdict,
            FsmKey::Final(v) => *v,
            FsmKey::Sets(..) => FsmVerdict::Unknown,
        })
        .collect();
    Ok(MonitorFsm {
        alphabet,
        verdicts,
        delta,
    })
}

impl MonitorFsm {
    pub fn initial(&self) -> usize {
        0
    }

    pub fn state_count(&self) -> usize {
        self.verdicts.len()
    }

    pub fn alphabet(&self) -> &[IndexedAtom] {
        &self.alphabet
    }

    pub fn letter_count(&self) -> usize {
        1 << self.alphabet.len()
    }

    pub fn verdict(&self, q: usize) -> FsmVerdict {
        self.verdicts[q]
    }

    pub fn step(&self, q: usize, letter: u64) -> usize {
        self.delta[q][letter as usize]
    }

    pub fn encode(&self, letter: &BTreeSet<IndexedAtom>) -> u64 {
        self.alphabet
            .iter()
            .enumerate()
            .filter(|(_, a)| letter.contains(a))
            .fold(0, |acc, (i, _)| acc | 1 << i)
    }

    pub fn decode(&self, letter: u64) -> BTreeSet<IndexedAtom> {
        self.alphabet
            .iter()
            .enumerate()
            .filter(|(i, _)| letter >> i & 1 == 1)
            .map(|(_, a)| a.clone())
            .collect()
    }

    /// States reachable from the initial state.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.state_count()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(q) = queue.pop_front() {
            for &w in &self.delta[q] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// States from which a state with verdict `v` is reachable.
    pub fn can_reach(&self, v: FsmVerdict) -> Vec<bool> {
        let n = self.state_count();
        let mut pred = vec![Vec::new(); n];
        for (q, row) in self.delta.iter().enumerate() {
            for &w in row {
                pred[w].push(q);
            }
        }
        let mut ok: Vec<bool> = self.verdicts.iter().map(|&x| x == v).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&q| ok[q]).collect();
        while let Some(w) = queue.pop_front() {
            for &q in &pred[w] {
                if !ok[q] {
                    ok[q] = true;
                    queue.push_back(q);
                }
            }
        }
        ok
    }
}
