//! Prefix-tree trace storage. Instances are keyed by trie nodes instead of
//! traces, so traces that share a prefix share monitor work up to the point
//! where they diverge.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use indexmap::IndexMap;

use crate::analysis::{analyze, SpecProperties};
use crate::engine::{
    collect_lockstep, elapsed_ms, EngineError, Outcome, SequentialOptions, SessionStats, Verdict,
    Witness,
};
use crate::formula::QuantifiedFormula;
use crate::monitor::{MonitorTemplate, StateId};
use crate::trace::{ApTable, StreamEvent, Step, Trace};

pub type NodeId = usize;

pub const ROOT: NodeId = 0;

#[derive(Debug, Clone, Default)]
struct Node {
    parent: Option<NodeId>,
    step: Option<Step>,
    children: IndexMap<Step, NodeId>,
    depth: usize,
    /// Stored traces passing through this node (sequential model).
    weight: usize,
    /// Stored traces, or streams, that end exactly here.
    ends: usize,
    /// Some trace or stream that passes through this node.
    owner: Option<usize>,
}

/// Deterministic prefix tree over steps.
#[derive(Debug, Clone)]
pub struct Trie {
    nodes: Vec<Node>,
}

impl Default for Trie {
    fn default() -> Self {
        Self::new()
    }
}

impl Trie {
    pub fn new() -> Self {
        Self {
            nodes: vec![Node::default()],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// The child of `node` for `step`, created if missing.
    pub fn add_value(&mut self, node: NodeId, step: &Step) -> NodeId {
        if let Some(&c) = self.nodes[node].children.get(step) {
            return c;
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            parent: Some(node),
            step: Some(step.clone()),
            depth: self.nodes[node].depth + 1,
            ..Node::default()
        });
        self.nodes[node].children.insert(step.clone(), id);
        id
    }

    pub fn child(&self, node: NodeId, step: &Step) -> Option<NodeId> {
        self.nodes[node].children.get(step).copied()
    }

    pub fn children(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes[node].children.values().copied()
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node].parent
    }

    pub fn step(&self, node: NodeId) -> Option<&Step> {
        self.nodes[node].step.as_ref()
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.nodes[node].depth
    }

    /// The word spelled by the path from the root to `node`.
    pub fn rooted_sequence(&self, node: NodeId) -> Trace {
        let mut steps = Vec::with_capacity(self.nodes[node].depth);
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            steps.push(self.nodes[cur].step.clone().expect("non-root node has a step"));
            cur = p;
        }
        steps.reverse();
        Trace::new(0, steps)
    }

    /// Inserts a whole trace and returns its end node.
    pub fn insert(&mut self, trace: &Trace) -> NodeId {
        let mut cur = ROOT;
        self.nodes[ROOT].owner.get_or_insert(trace.id);
        for s in &trace.steps {
            cur = self.add_value(cur, s);
            self.nodes[cur].owner.get_or_insert(trace.id);
        }
        cur
    }

    /// Number of nodes at each depth.
    pub fn depth_histogram(&self) -> Vec<usize> {
        let mut h = Vec::new();
        for n in &self.nodes {
            if h.len() <= n.depth {
                h.resize(n.depth + 1, 0);
            }
            h[n.depth] += 1;
        }
        h
    }
}

/// An instance keyed by one trie node per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrieInstantiation {
    pub nodes: Vec<NodeId>,
    pub state: StateId,
}

fn product(choices: &[Vec<NodeId>]) -> Vec<Vec<NodeId>> {
    let mut out = vec![Vec::new()];
    for c in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                c.iter().map(move |&x| {
                    let mut p = prefix.clone();
                    p.push(x);
                    p
                })
            })
            .collect();
    }
    out
}

fn step_bits(trie: &Trie, aps: &ApTable, node: NodeId) -> u64 {
    aps.encode_step(trie.step(node).expect("non-root node"))
}

/// Parallel model over a trie of the streams: one instance per tuple of
/// nodes, forked over child combinations at every position.
pub fn run_trie_parallel(
    phi: &QuantifiedFormula,
    events: &[StreamEvent],
) -> Result<Outcome, EngineError> {
    if !phi.is_universal() {
        return Err(EngineError::Unsupported(
            "trie monitoring needs a universal prefix".into(),
        ));
    }
    let start = Instant::now();
    let tpl = MonitorTemplate::from_formula(phi)?;
    let streams = collect_lockstep(events)?;
    let k = streams.len();
    let n = tpl.arity();
    let aps = tpl.ap_table().clone();
    let mut trie = Trie::new();
    let mut at: Vec<NodeId> = vec![ROOT; k];
    let mut stats = SessionStats {
        traces_seen: k,
        traces_stored: k,
        ..Default::default()
    };
    let mut live: Vec<TrieInstantiation> = Vec::new();
    if k > 0 && !tpl.is_universal(tpl.initial()) {
        live.push(TrieInstantiation {
            nodes: vec![ROOT; n],
            state: tpl.initial(),
        });
        stats.tuples_checked = 1;
    }
    trie.nodes[ROOT].owner = Some(0);
    let depth = streams.iter().map(Vec::len).max().unwrap_or(0);
    let mut letter = vec![0u64; n];
    for pos in 0..depth {
        for (j, s) in streams.iter().enumerate() {
            if let Some(step) = s.get(pos) {
                at[j] = trie.add_value(at[j], step);
                trie.nodes[at[j]].owner.get_or_insert(j);
            }
        }
        let mut next = Vec::new();
        for inst in &live {
            let choices: Vec<Vec<NodeId>> =
                inst.nodes.iter().map(|&x| trie.children(x).collect()).collect();
            for nodes in product(&choices) {
                stats.tuples_checked += 1;
                for (slot, &x) in letter.iter_mut().zip(&nodes) {
                    *slot = step_bits(&trie, &aps, x);
                }
                match tpl.step_bits(inst.state, &letter) {
                    None => {
                        let bindings = tpl
                            .vars()
                            .iter()
                            .zip(&nodes)
                            .map(|(v, &x)| {
                                let mut t = trie.rooted_sequence(x);
                                t.id = trie.nodes[x].owner.expect("visited node has an owner");
                                (v.clone(), t)
                            })
                            .collect();
                        stats.instances_live = next.len();
                        stats.violations_found = 1;
                        stats.traces_stored = k - 1;
                        stats.trie_nodes = Some(trie.node_count());
                        stats.runtime_ms = elapsed_ms(start);
                        return Ok(Outcome {
                            verdict: Verdict::Violation(Witness { bindings }),
                            stats,
                            rows: vec![stats],
                            bound_exceeded: None,
                        });
                    }
                    Some(q) if tpl.is_universal(q) => {}
                    Some(q) => next.push(TrieInstantiation { nodes, state: q }),
                }
            }
        }
        live = next;
        stats.instances_live = live.len();
    }
    stats.trie_nodes = Some(trie.node_count());
    stats.runtime_ms = elapsed_ms(start);
    Ok(Outcome {
        verdict: Verdict::Satisfied,
        stats,
        rows: vec![stats],
        bound_exceeded: None,
    })
}

/// Entry of a sequential trie instance: a node of the stored trie, standing
/// for every stored trace through it, or the trace being read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Slot {
    Stored(NodeId),
    New,
}

/// Sequential model with all stored traces kept in one trie.
pub struct TrieSession {
    phi: QuantifiedFormula,
    tpl: MonitorTemplate,
    opts: SequentialOptions,
    props: SpecProperties,
    trie: Trie,
    names: HashMap<usize, (Option<String>, NodeId)>,
    current: Option<(Trace, NodeId)>,
    active: Vec<(Vec<Slot>, StateId)>,
    stats: SessionStats,
    rows: Vec<SessionStats>,
    verdict: Verdict,
    next_id: usize,
    skipping: bool,
    bound_exceeded: Option<usize>,
    start: Instant,
}

impl TrieSession {
    pub fn new(phi: &QuantifiedFormula, opts: SequentialOptions) -> Result<Self, EngineError> {
        if !phi.is_universal() {
            return Err(EngineError::Unsupported(
                "trie monitoring needs a universal prefix".into(),
            ));
        }
        if opts.trace_analysis {
            return Err(EngineError::Unsupported(
                "the trie backend cannot be combined with trace analysis".into(),
            ));
        }
        let props = if opts.spec_analysis {
            analyze(phi)?
        } else {
            SpecProperties::NONE
        };
        Ok(Self {
            phi: phi.clone(),
            tpl: MonitorTemplate::from_formula(phi)?,
            opts,
            props,
            trie: Trie::new(),
            names: HashMap::new(),
            current: None,
            active: Vec::new(),
            stats: SessionStats {
                trie_nodes: Some(1),
                ..Default::default()
            },
            rows: Vec::new(),
            verdict: Verdict::Running,
            next_id: 0,
            skipping: false,
            bound_exceeded: None,
            start: Instant::now(),
        })
    }

    pub fn trie(&self) -> &Trie {
        &self.trie
    }

    pub fn formula(&self) -> &QuantifiedFormula {
        &self.phi
    }

    pub fn stats(&self) -> SessionStats {
        SessionStats {
            runtime_ms: elapsed_ms(self.start),
            trie_nodes: Some(self.trie.node_count()),
            ..self.stats
        }
    }

    fn is_decided(&self) -> bool {
        (self.opts.stop_on_violation && self.verdict.is_violation()) || self.bound_exceeded.is_some()
    }

    /// Symmetric formulas only need one ordering of the entries.
    fn canonical(&self, mut slots: Vec<Slot>) -> Vec<Slot> {
        if self.props.symmetric {
            slots.sort();
        }
        slots
    }

    pub fn push(&mut self, ev: &StreamEvent) -> Result<(), EngineError> {
        if self.is_decided() {
            return Ok(());
        }
        match ev {
            StreamEvent::Begin(name) => self.begin(name.clone()),
            StreamEvent::Step(s) => self.step(s),
            StreamEvent::End => self.end(),
            StreamEvent::Lockstep(_) => Err(EngineError::Protocol(
                "`#step` lines belong to the parallel model".into(),
            )),
        }
    }

    fn begin(&mut self, name: Option<String>) -> Result<(), EngineError> {
        if self.current.is_some() {
            return Err(EngineError::Protocol("`#trace` before `#end`".into()));
        }
        if self.opts.bound.is_some_and(|b| self.stats.traces_seen >= b) {
            self.bound_exceeded = self.opts.bound;
            return Ok(());
        }
        let mut trace = Trace::new(self.next_id, Vec::new());
        trace.name = name;
        self.next_id += 1;
        self.stats.traces_seen += 1;
        self.current = Some((trace, ROOT));
        let n = self.tpl.arity();
        let have_stored = self.trie.nodes[ROOT].weight > 0;
        let mut seen = BTreeSet::new();
        self.active.clear();
        if self.tpl.is_universal(self.tpl.initial()) {
            return Ok(());
        }
        // Each slot is either the stored root or the new trace, with the new trace at least once.
        for mask in 1u32..1 << n {
            if !have_stored && mask != (1 << n) - 1 {
                continue;
            }
            if self.props.reflexive && mask == (1 << n) - 1 {
                continue;
            }
            let slots: Vec<Slot> = (0..n)
                .map(|j| if mask >> j & 1 == 1 { Slot::New } else { Slot::Stored(ROOT) })
                .collect();
            let slots = self.canonical(slots);
            if seen.insert(slots.clone()) {
                self.active.push((slots, self.tpl.initial()));
            }
        }
        self.stats.tuples_checked += self.active.len();
        self.stats.instances_live = self.active.len();
        Ok(())
    }

    fn step(&mut self, s: &Step) -> Result<(), EngineError> {
        if self.skipping {
            return Ok(());
        }
        let Some((cur, node)) = self.current.as_mut() else {
            return Err(EngineError::Protocol("step outside `#trace` … `#end`".into()));
        };
        cur.steps.push(s.clone());
        *node = self.trie.add_value(*node, s);
        let aps = self.tpl.ap_table();
        let new_bits = aps.encode_step(s);
        let mut next: Vec<(Vec<Slot>, StateId)> = Vec::new();
        let mut seen: BTreeSet<Vec<Slot>> = BTreeSet::new();
        let mut letter = vec![0u64; self.tpl.arity()];
        let mut dead: Option<Vec<Slot>> = None;
        'inst: for (slots, q) in &self.active {
            let choices: Vec<Vec<Slot>> = slots
                .iter()
                .map(|sl| match sl {
                    Slot::New => vec![Slot::New],
                    Slot::Stored(x) => self
                        .trie
                        .children(*x)
                        .filter(|&c| self.trie.nodes[c].weight > 0)
                        .map(Slot::Stored)
                        .collect(),
                })
                .collect();
            let mut combos: Vec<Vec<Slot>> = vec![Vec::new()];
            for c in &choices {
                combos = combos
                    .into_iter()
                    .flat_map(|p| {
                        c.iter().map(move |&x| {
                            let mut p = p.clone();
                            p.push(x);
                            p
                        })
                    })
                    .collect();
            }
            for combo in combos {
                let combo = self.canonical(combo);
                if !seen.insert(combo.clone()) {
                    continue;
                }
                self.stats.tuples_checked += 1;
                for (slot, sl) in letter.iter_mut().zip(&combo) {
                    *slot = match sl {
                        Slot::New => new_bits,
                        Slot::Stored(x) => step_bits(&self.trie, aps, *x),
                    };
                }
                match self.tpl.step_bits(*q, &letter) {
                    None => {
                        dead = Some(combo);
                        break 'inst;
                    }
                    Some(q2) if self.tpl.is_universal(q2) => {}
                    Some(q2) => next.push((combo, q2)),
                }
            }
        }
        self.active = next;
        self.stats.instances_live = self.active.len();
        if let Some(slots) = dead {
            self.violation(&slots);
        }
        Ok(())
    }

    /// A full stored trace through `node`.
    fn stored_trace(&self, node: NodeId) -> Trace {
        let id = self.trie.nodes[node].owner.expect("stored node has an owner");
        let (name, leaf) = self.names[&id].clone();
        let mut t = self.trie.rooted_sequence(leaf);
        t.id = id;
        t.name = name;
        t
    }

    fn violation(&mut self, slots: &[Slot]) {
        let (cur, _) = self.current.take().expect("inside a trace");
        self.active.clear();
        self.stats.instances_live = 0;
        self.stats.violations_found += 1;
        if !self.verdict.is_violation() {
            let bindings = self
                .tpl
                .vars()
                .iter()
                .zip(slots)
                .map(|(v, sl)| {
                    let t = match sl {
                        Slot::New => cur.clone(),
                        Slot::Stored(x) => self.stored_trace(*x),
                    };
                    (v.clone(), t)
                })
                .collect();
            self.verdict = Verdict::Violation(Witness { bindings });
        }
        self.skipping = true;
        self.rows.push(self.stats());
    }

    fn end(&mut self) -> Result<(), EngineError> {
        if self.skipping {
            self.skipping = false;
            return Ok(());
        }
        let Some((cur, leaf)) = self.current.take() else {
            return Err(EngineError::Protocol("`#end` without `#trace`".into()));
        };
        self.active.clear();
        self.stats.instances_live = 0;
        let mut x = Some(leaf);
        while let Some(node) = x {
            self.trie.nodes[node].weight += 1;
            self.trie.nodes[node].owner.get_or_insert(cur.id);
            x = self.trie.nodes[node].parent;
        }
        self.trie.nodes[leaf].ends += 1;
        self.names.insert(cur.id, (cur.name, leaf));
        self.stats.traces_stored += 1;
        self.rows.push(self.stats());
        Ok(())
    }

    pub fn finish(mut self) -> Result<Outcome, EngineError> {
        if self.current.is_some() && !self.is_decided() {
            self.end()?;
        }
        if !self.verdict.is_violation() {
            self.verdict = Verdict::Satisfied;
        }
        let stats = self.stats();
        Ok(Outcome {
            verdict: self.verdict,
            stats,
            rows: self.rows,
            bound_exceeded: self.bound_exceeded,
        })
    }
}

pub fn run_trie_sequential(
    phi: &QuantifiedFormula,
    events: &[StreamEvent],
    opts: SequentialOptions,
) -> Result<Outcome, EngineError> {
    let mut session = TrieSession::new(phi, opts)?;
    for ev in events {
        session.push(ev)?;
        if opts.stop_on_violation && session.verdict.is_violation() {
            break;
        }
    }
    session.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{lockstep_events, run_parallel_online};
    use crate::formula::parse_formula;
    use crate::trace::sequential_events;

    fn s(text: &str) -> Step {
        text.parse().unwrap()
    }

    fn t(id: usize, steps: &[&str]) -> Trace {
        Trace::from_literals(id, steps)
    }

    const EQ: &str = "forall p1. forall p2. G (a[p1] <-> a[p2])";

    #[test]
    fn add_value_shares_prefixes() {
        let mut trie = Trie::new();
        let a1 = trie.add_value(ROOT, &s("a"));
        assert_eq!(trie.add_value(ROOT, &s("a")), a1);
        let b = trie.add_value(ROOT, &s("b"));
        assert_ne!(a1, b);
        let aa = trie.add_value(a1, &s("a"));
        assert_eq!(trie.rooted_sequence(aa).steps, vec![s("a"), s("a")]);
        assert!(trie.rooted_sequence(ROOT).is_empty());
        assert_eq!(trie.depth_histogram(), vec![1, 2, 1]);
    }

    #[test]
    fn identical_streams_keep_one_instance() {
        let phi = parse_formula(EQ).unwrap();
        let ev = lockstep_events(&[t(0, &["a", "-", "a"]), t(1, &["a", "-", "a"])]);
        let out = run_trie_parallel(&phi, &ev).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
        assert_eq!(out.stats.instances_live, 1);
        assert_eq!(out.stats.trie_nodes, Some(4));
    }

    #[test]
    fn forks_at_divergence_and_reports_full_witness() {
        let phi = parse_formula("forall p. forall q. G (on[p] <-> on[q])").unwrap();
        let ts = [t(0, &["on", "on"]), t(1, &["on", "off"])];
        let out = run_trie_parallel(&phi, &lockstep_events(&ts)).unwrap();
        let naive = run_parallel_online(&phi, &lockstep_events(&ts)).unwrap();
        let (Verdict::Violation(a), Verdict::Violation(b)) = (&out.verdict, &naive.verdict) else {
            panic!("both must report a violation");
        };
        assert_eq!(a, b);
        assert_eq!(out.stats.trie_nodes, Some(4));
    }

    #[test]
    fn sequential_trie_grows_with_length_only() {
        let phi = parse_formula(EQ).unwrap();
        let same: Vec<Trace> = (0..5).map(|i| t(i, &["a", "-", "a"])).collect();
        let out = run_trie_sequential(&phi, &sequential_events(&same), Default::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
        assert_eq!(out.stats.trie_nodes, Some(4));

        let mut diverge = same.clone();
        diverge[4] = t(4, &["a", "a", "a"]);
        let out = run_trie_sequential(&phi, &sequential_events(&diverge), Default::default()).unwrap();
        let Verdict::Violation(w) = &out.verdict else {
            panic!("divergent trace violates EQ")
        };
        let mut ids: Vec<usize> = w.traces().iter().map(|t| t.id).collect();
        ids.sort();
        assert_eq!(ids, vec![0, 4]);
    }
}
