//! Monitoring algorithms for the parallel and sequential input models.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{
    analyze, minimize_insert, reduced_tuple_enumeration, AnalysisError, DominanceCheck, Entry,
    SpecProperties,
};
use crate::formula::{QuantifiedFormula, Quantifier, TraceVar};
use crate::monitor::{MonitorError, MonitorTemplate, StateId};
use crate::semantics::eval_backwards;
use crate::trace::{zip_tuple, StreamEvent, Step, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("stream protocol error: {0}")]
    Protocol(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Traces bound to the variables of a violated instantiation. For prefixes
/// with existential variables only the variables up to the failing
/// universal choice are bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub bindings: Vec<(TraceVar, Trace)>,
}

impl Witness {
    pub fn traces(&self) -> Vec<&Trace> {
        self.bindings.iter().map(|(_, t)| t).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violation(Witness),
    Running,
}

impl Verdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, Self::Violation(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SessionStats {
    pub traces_seen: usize,
    pub traces_stored: usize,
    pub traces_pruned: usize,
    /// Traces that completed a violating tuple; they are neither stored nor pruned.
    pub violations_found: usize,
    pub tuples_checked: usize,
    pub instances_live: usize,
    pub runtime_ms: u64,
    /// Node count of the trie backend, when it is in use.
    pub trie_nodes: Option<usize>,
}

impl SessionStats {
    pub fn accounting_holds(&self) -> bool {
        self.traces_seen == self.traces_stored + self.traces_pruned + self.violations_found
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub verdict: Verdict,
    pub stats: SessionStats,
    /// Statistics after each processed trace (sequential) or at the end (parallel).
    pub rows: Vec<SessionStats>,
    /// Set to the bound when traces beyond it were dropped.
    pub bound_exceeded: Option<usize>,
}

/// Evaluates the quantifier prefix over `k` candidates per variable.
/// Returns the falsifying partial assignment, or `None` when the prefix holds.
pub fn eval_prefix(
    quants: &[Quantifier],
    k: usize,
    accept: &mut dyn FnMut(&[usize]) -> bool,
) -> Option<Vec<usize>> {
    fn go(
        quants: &[Quantifier],
        k: usize,
        cur: &mut Vec<usize>,
        accept: &mut dyn FnMut(&[usize]) -> bool,
    ) -> Option<Vec<usize>> {
        let Some(q) = quants.get(cur.len()) else {
            return (!accept(cur)).then(|| cur.clone());
        };
        match q {
            Quantifier::Forall => {
                for i in 0..k {
                    cur.push(i);
                    let r = go(quants, k, cur, accept);
                    cur.pop();
                    if r.is_some() {
                        return r;
                    }
                }
                None
            }
            Quantifier::Exists => {
                for i in 0..k {
                    cur.push(i);
                    let r = go(quants, k, cur, accept);
                    cur.pop();
                    r?;
                }
                Some(cur.clone())
            }
        }
    }
    go(quants, k, &mut Vec::new(), accept)
}

pub(crate) fn witness(vars: &[TraceVar], picks: &[usize], traces: &[Trace]) -> Witness {
    Witness {
        bindings: vars
            .iter()
            .zip(picks)
            .map(|(v, &i)| (v.clone(), traces[i].clone()))
            .collect(),
    }
}

/// Lexicographic tuple number `idx` over `k` traces, first variable most significant.
fn decode_tuple(mut idx: usize, k: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in out.iter_mut().rev() {
        *slot = idx % k;
        idx /= k;
    }
    out
}

pub(crate) fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Checks every tuple of a fixed trace set against a universal formula; the
/// lexicographically first rejected tuple is the witness. `jobs > 1` fans the
/// tuple checks out over a thread pool.
pub fn run_offline_universal(
    phi: &QuantifiedFormula,
    traces: &[Trace],
    jobs: usize,
) -> Result<Outcome, EngineError> {
    if !phi.is_universal() {
        return Err(EngineError::Unsupported(
            "offline universal monitoring needs a universal prefix".into(),
        ));
    }
    let start = Instant::now();
    let tpl = MonitorTemplate::from_formula(phi)?;
    let n = tpl.arity();
    let k = traces.len();
    let enc: Vec<Vec<u64>> = traces.iter().map(|t| tpl.ap_table().encode(t)).collect();
    let total = k.checked_pow(n as u32).unwrap_or(usize::MAX);
    let rejects = |idx: usize| {
        let picks = decode_tuple(idx, k, n);
        let tuple: Vec<&[u64]> = picks.iter().map(|&i| enc[i].as_slice()).collect();
        !tpl.accepts_encoded(&tuple)
    };
    let first_bad = if k == 0 {
        None
    } else if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| EngineError::Unsupported(e.to_string()))?;
        pool.install(|| (0..total).into_par_iter().find_first(|&i| rejects(i)))
    } else {
        (0..total).find(|&i| rejects(i))
    };
    let (verdict, checked) = match first_bad {
        Some(i) => (
            Verdict::Violation(witness(&phi.vars(), &decode_tuple(i, k, n), traces)),
            i + 1,
        ),
        None => (Verdict::Satisfied, total * (k > 0) as usize),
    };
    let stats = SessionStats {
        traces_seen: k,
        traces_stored: k,
        tuples_checked: checked,
        runtime_ms: elapsed_ms(start),
        ..Default::default()
    };
    Ok(Outcome {
        verdict,
        stats,
        rows: vec![stats],
        bound_exceeded: None,
    })
}

/// Template acceptance of every tuple, combined along the quantifier prefix.
pub fn run_offline_alternating(
    phi: &QuantifiedFormula,
    traces: &[Trace],
) -> Result<Outcome, EngineError> {
    let tpl = MonitorTemplate::from_formula(phi)?;
    offline_with_kernel(phi, &tpl, traces, Instant::now())
}

fn offline_with_kernel(
    phi: &QuantifiedFormula,
    tpl: &MonitorTemplate,
    traces: &[Trace],
    start: Instant,
) -> Result<Outcome, EngineError> {
    let enc: Vec<Vec<u64>> = traces.iter().map(|t| tpl.ap_table().encode(t)).collect();
    let mut checked = 0;
    let failing = eval_prefix(&phi.quantifiers(), traces.len(), &mut |picks| {
        checked += 1;
        let tuple: Vec<&[u64]> = picks.iter().map(|&i| enc[i].as_slice()).collect();
        tpl.accepts_encoded(&tuple)
    });
    let verdict = match failing {
        Some(picks) => Verdict::Violation(witness(&phi.vars(), &picks, traces)),
        None => Verdict::Satisfied,
    };
    let stats = SessionStats {
        traces_seen: traces.len(),
        traces_stored: traces.len(),
        tuples_checked: checked,
        runtime_ms: elapsed_ms(start),
        ..Default::default()
    };
    Ok(Outcome {
        verdict,
        stats,
        rows: vec![stats],
        bound_exceeded: None,
    })
}

/// Finite-trace semantics per tuple via the backwards table, combined along
/// the prefix. Each tuple is cut to its shortest trace before evaluation.
pub fn run_parallel_offline(phi: &QuantifiedFormula, traces: &[Trace]) -> Outcome {
    let start = Instant::now();
    let vars = phi.vars();
    let body = phi.body.desugar();
    let mut checked = 0;
    let failing = eval_prefix(&phi.quantifiers(), traces.len(), &mut |picks| {
        checked += 1;
        let len = picks.iter().map(|&i| traces[i].len()).min().unwrap_or(0);
        let cut: Vec<Trace> = picks.iter().map(|&i| traces[i].truncate(len)).collect();
        let refs: Vec<&Trace> = cut.iter().collect();
        let w = zip_tuple(&refs, &vars).expect("one trace per variable");
        eval_backwards(&w, &body)
    });
    let verdict = match failing {
        Some(picks) => Verdict::Violation(witness(&vars, &picks, traces)),
        None => Verdict::Satisfied,
    };
    let stats = SessionStats {
        traces_seen: traces.len(),
        traces_stored: traces.len(),
        tuples_checked: checked,
        runtime_ms: elapsed_ms(start),
        ..Default::default()
    };
    Outcome {
        verdict,
        stats,
        rows: vec![stats],
        bound_exceeded: None,
    }
}

/// Lockstep events for a fixed trace set; shorter traces end early.
pub fn lockstep_events(traces: &[Trace]) -> Vec<StreamEvent> {
    let len = traces.iter().map(Trace::len).max().unwrap_or(0);
    (0..len)
        .map(|i| StreamEvent::Lockstep(traces.iter().map(|t| t.steps.get(i).cloned()).collect()))
        .collect()
}

/// Width and per-stream step lists of a lockstep input, with protocol checks.
pub fn collect_lockstep(events: &[StreamEvent]) -> Result<Vec<Vec<Step>>, EngineError> {
    let mut streams: Vec<Vec<Step>> = Vec::new();
    let mut ended: Vec<bool> = Vec::new();
    for (i, ev) in events.iter().enumerate() {
        let StreamEvent::Lockstep(row) = ev else {
            return Err(EngineError::Protocol(format!(
                "event {}: the parallel model expects `#step` lines",
                i + 1
            )));
        };
        if i == 0 {
            streams = vec![Vec::new(); row.len()];
            ended = vec![false; row.len()];
        } else if row.len() != streams.len() {
            return Err(EngineError::Protocol(format!(
                "event {}: expected {} streams, found {}",
                i + 1,
                streams.len(),
                row.len()
            )));
        }
        for (j, s) in row.iter().enumerate() {
            match s {
                Some(step) if ended[j] => {
                    return Err(EngineError::Protocol(format!(
                        "event {}: stream {j} continues after it ended ({step})",
                        i + 1
                    )))
                }
                Some(step) => streams[j].push(step.clone()),
                None => ended[j] = true,
            }
        }
    }
    Ok(streams)
}

/// Online monitoring of synchronized streams. Every assignment of streams to
/// variables is an instance; an instance completes when one of its streams
/// ends. The prefix is re-evaluated over "not dead" after every position, so
/// violations are reported as early as death allows; `Satisfied` is only
/// issued at the end of input.
pub fn run_parallel_online(
    phi: &QuantifiedFormula,
    events: &[StreamEvent],
) -> Result<Outcome, EngineError> {
    let start = Instant::now();
    let tpl = MonitorTemplate::from_formula(phi)?;
    let rows = collect_lockstep(events)?;
    let k = rows.len();
    let n = tpl.arity();
    let quants = phi.quantifiers();
    let enc: Vec<Vec<u64>> = rows
        .iter()
        .map(|s| s.iter().map(|st| tpl.ap_table().encode_step(st)).collect())
        .collect();
    let total = if k == 0 { 0 } else { k.pow(n as u32) };
    let tuples: Vec<Vec<usize>> = (0..total).map(|i| decode_tuple(i, k, n)).collect();
    let mut state: Vec<Option<StateId>> = vec![Some(tpl.initial()); total];
    let mut dead = vec![false; total];
    let mut live: Vec<usize> = (0..total).collect();
    let depth = enc.iter().map(Vec::len).max().unwrap_or(0);
    let mut letter = vec![0u64; n];
    let mut stats = SessionStats {
        traces_seen: k,
        tuples_checked: total,
        ..Default::default()
    };
    let traces_upto = |pos: usize| -> Vec<Trace> {
        rows.iter()
            .enumerate()
            .map(|(j, s)| Trace::new(j, s[..s.len().min(pos)].to_vec()))
            .collect()
    };
    for pos in 0..depth {
        let mut changed = false;
        live.retain(|&t| {
            let tuple = &tuples[t];
            if tuple.iter().any(|&j| enc[j].len() <= pos) {
                return false;
            }
            let q = state[t].expect("live instance has a state");
            for (slot, &j) in letter.iter_mut().zip(tuple) {
                *slot = enc[j][pos];
            }
            match tpl.step_bits(q, &letter) {
                Some(q2) if tpl.is_universal(q2) => false,
                Some(q2) => {
                    state[t] = Some(q2);
                    true
                }
                None => {
                    dead[t] = true;
                    changed = true;
                    false
                }
            }
        });
        stats.instances_live = live.len();
        if changed {
            let failing = eval_prefix(&quants, k, &mut |picks| {
                let idx = picks.iter().fold(0, |acc, &i| acc * k + i);
                !dead[idx]
            });
            if let Some(picks) = failing {
                stats.violations_found = 1;
                stats.traces_stored = k - 1;
                stats.runtime_ms = elapsed_ms(start);
                return Ok(Outcome {
                    verdict: Verdict::Violation(witness(&phi.vars(), &picks, &traces_upto(pos + 1))),
                    stats,
                    rows: vec![stats],
                    bound_exceeded: None,
                });
            }
        }
    }
    // Without any stream every quantifier ranges over the empty set.
    let verdict = match eval_prefix(&quants, k, &mut |_| true) {
        None => Verdict::Satisfied,
        Some(picks) => Verdict::Violation(witness(&phi.vars(), &picks, &[])),
    };
    stats.traces_stored = k;
    if verdict.is_violation() {
        stats.violations_found = 1;
        stats.traces_stored = k.saturating_sub(1);
    }
    stats.runtime_ms = elapsed_ms(start);
    Ok(Outcome {
        verdict,
        stats,
        rows: vec![stats],
        bound_exceeded: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SequentialOptions {
    /// Maximum number of traces taken from the stream.
    pub bound: Option<usize>,
    pub spec_analysis: bool,
    pub trace_analysis: bool,
    /// When false, a violating trace is counted and discarded and monitoring continues.
    pub stop_on_violation: bool,
}

impl Default for SequentialOptions {
    fn default() -> Self {
        Self {
            bound: None,
            spec_analysis: false,
            trace_analysis: false,
            stop_on_violation: true,
        }
    }
}

#[derive(Debug, Clone)]
struct Stored {
    trace: Trace,
    enc: Vec<u64>,
}

#[derive(Debug, Clone)]
struct Instance {
    entries: Vec<Entry>,
    state: StateId,
}

#[derive(Debug, Clone)]
struct Current {
    trace: Trace,
    enc: Vec<u64>,
}

/// State of the sequential algorithm: stored traces and the instances that
/// still watch the trace currently being read.
#[derive(Debug, Clone)]
pub struct SessionState {
    phi: QuantifiedFormula,
    tpl: MonitorTemplate,
    opts: SequentialOptions,
    props: SpecProperties,
    dominance: Option<DominanceCheck>,
    stored: Vec<Stored>,
    lengths: BTreeSet<usize>,
    current: Option<Current>,
    active: Vec<Instance>,
    stats: SessionStats,
    rows: Vec<SessionStats>,
    verdict: Verdict,
    next_id: usize,
    bound_exceeded: Option<usize>,
    /// For non-universal prefixes traces are collected and decided at the end.
    deferred: bool,
    /// Remaining steps of a discarded violating trace are ignored until `#end`.
    skipping: bool,
    start: Instant,
    buf: Vec<u64>,
}

impl SessionState {
    pub fn new(phi: &QuantifiedFormula, opts: SequentialOptions) -> Result<Self, EngineError> {
        let deferred = !phi.is_universal();
        if deferred && opts.bound.is_none() {
            return Err(EngineError::Unsupported(
                "the unbounded sequential model monitors universal prefixes only".into(),
            ));
        }
        let tpl = MonitorTemplate::from_formula(phi)?;
        let props = if opts.spec_analysis && !deferred {
            analyze(phi)?
        } else {
            SpecProperties::NONE
        };
        let dominance = if opts.trace_analysis {
            Some(DominanceCheck::with_template(phi, tpl.clone())?)
        } else {
            None
        };
        Ok(Self {
            phi: phi.clone(),
            tpl,
            opts,
            props,
            dominance,
            stored: Vec::new(),
            lengths: BTreeSet::new(),
            current: None,
            active: Vec::new(),
            stats: SessionStats::default(),
            rows: Vec::new(),
            verdict: Verdict::Running,
            next_id: 0,
            bound_exceeded: None,
            deferred,
            skipping: false,
            start: Instant::now(),
            buf: Vec::new(),
        })
    }

    pub fn template(&self) -> &MonitorTemplate {
        &self.tpl
    }

    pub fn properties(&self) -> SpecProperties {
        self.props
    }

    pub fn stats(&self) -> SessionStats {
        SessionStats {
            runtime_ms: elapsed_ms(self.start),
            ..self.stats
        }
    }

    pub fn stored_traces(&self) -> Vec<&Trace> {
        self.stored.iter().map(|s| &s.trace).collect()
    }

    pub fn verdict(&self) -> &Verdict {
        &self.verdict
    }

    /// True once no further input can change the verdict.
    pub fn is_decided(&self) -> bool {
        (self.opts.stop_on_violation && self.verdict.is_violation()) || self.bound_exceeded.is_some()
    }

    fn uses_transitivity(&self) -> bool {
        let p = self.props;
        self.tpl.arity() == 2 && p.transitive == Some(true) && p.symmetric && p.reflexive
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
        if let Some(b) = self.opts.bound {
            if self.stats.traces_seen >= b {
                self.bound_exceeded = Some(b);
                return Ok(());
            }
        }
        let mut trace = Trace::new(self.next_id, Vec::new());
        trace.name = name;
        self.next_id += 1;
        self.stats.traces_seen += 1;
        self.current = Some(Current {
            trace,
            enc: Vec::new(),
        });
        if self.deferred {
            return Ok(());
        }
        let tuples = reduced_tuple_enumeration(self.stored.len(), &self.props, self.tpl.arity());
        self.stats.tuples_checked += tuples.len();
        let init = self.tpl.initial();
        let universal = self.tpl.is_universal(init);
        self.active = tuples
            .into_iter()
            .filter(|entries| !universal && !self.completed(entries, 0))
            .map(|entries| Instance {
                entries,
                state: init,
            })
            .collect();
        self.stats.instances_live = self.active.len();
        Ok(())
    }

    /// An instance is complete once a stored entry has no step at `pos`.
    fn completed(&self, entries: &[Entry], pos: usize) -> bool {
        entries.iter().any(|e| match e {
            Entry::Stored(i) => self.stored[*i].enc.len() <= pos,
            Entry::New => false,
        })
    }

    fn step(&mut self, s: &Step) -> Result<(), EngineError> {
        if self.skipping {
            return Ok(());
        }
        let Some(cur) = self.current.as_mut() else {
            return Err(EngineError::Protocol("step outside `#trace` … `#end`".into()));
        };
        let bits = self.tpl.ap_table().encode_step(s);
        cur.trace.steps.push(s.clone());
        cur.enc.push(bits);
        if self.deferred {
            return Ok(());
        }
        let pos = cur.enc.len() - 1;
        let mut violated: Option<Vec<Entry>> = None;
        let mut active = std::mem::take(&mut self.active);
        let mut buf = std::mem::take(&mut self.buf);
        active.retain_mut(|inst| {
            if violated.is_some() {
                return true;
            }
            buf.clear();
            buf.extend(inst.entries.iter().map(|e| match e {
                Entry::Stored(i) => self.stored[*i].enc[pos],
                Entry::New => bits,
            }));
            match self.tpl.step_bits(inst.state, &buf) {
                None => {
                    violated = Some(inst.entries.clone());
                    false
                }
                Some(q) if self.tpl.is_universal(q) => false,
                Some(q) => {
                    inst.state = q;
                    !self.completed(&inst.entries, pos + 1)
                }
            }
        });
        self.buf = buf;
        self.active = active;
        self.stats.instances_live = self.active.len();
        if let Some(entries) = violated {
            let cur = self.current.take().expect("inside a trace");
            self.violation(&entries, &cur.trace);
            self.skipping = true;
        }
        Ok(())
    }

    fn violation(&mut self, entries: &[Entry], cur: &Trace) {
        self.active.clear();
        self.stats.instances_live = 0;
        self.stats.violations_found += 1;
        if !self.verdict.is_violation() {
            let bindings = self
                .tpl
                .vars()
                .iter()
                .zip(entries)
                .map(|(v, e)| {
                    let t = match e {
                        Entry::Stored(i) => self.stored[*i].trace.clone(),
                        Entry::New => cur.clone(),
                    };
                    (v.clone(), t)
                })
                .collect();
            self.verdict = Verdict::Violation(Witness { bindings });
        }
        self.record_row();
    }

    fn end(&mut self) -> Result<(), EngineError> {
        if self.skipping {
            self.skipping = false;
            return Ok(());
        }
        let Some(cur) = self.current.take() else {
            return Err(EngineError::Protocol("`#end` without `#trace`".into()));
        };
        self.active.clear();
        self.stats.instances_live = 0;
        if !self.deferred && self.uses_transitivity() && !self.stored.is_empty() {
            // Transitivity only carries over between traces of equal length
            // under the shortest-trace rule, so other stored traces are checked directly.
            let same_length = self.lengths.len() == 1 && self.lengths.contains(&cur.enc.len());
            if !same_length {
                for i in 1..self.stored.len() {
                    self.stats.tuples_checked += 1;
                    if !self.tpl.accepts_encoded(&[&self.stored[i].enc, &cur.enc]) {
                        self.violation(&[Entry::Stored(i), Entry::New], &cur.trace);
                        return Ok(());
                    }
                }
            }
        }
        let Current { trace, enc } = cur;
        match &self.dominance {
            Some(check) => {
                let mut set: Vec<Trace> = self.stored.iter().map(|s| s.trace.clone()).collect();
                let out = minimize_insert(&mut set, trace, check);
                if out.inserted {
                    let kept: BTreeSet<usize> = set.iter().map(|t| t.id).collect();
                    self.stored.retain(|s| kept.contains(&s.trace.id));
                    let t = set.pop().expect("inserted trace is last");
                    self.stored.push(Stored { trace: t, enc });
                    self.stats.traces_pruned += out.pruned;
                } else {
                    self.stats.traces_pruned += 1;
                }
            }
            None => self.stored.push(Stored { trace, enc }),
        }
        self.lengths = self.stored.iter().map(|s| s.enc.len()).collect();
        self.stats.traces_stored = self.stored.len();
        self.record_row();
        Ok(())
    }

    fn record_row(&mut self) {
        let row = self.stats();
        self.rows.push(row);
    }

    /// Closes the session; a trace left open counts as ended.
    pub fn finish(mut self) -> Result<Outcome, EngineError> {
        if self.current.is_some() && !self.is_decided() {
            self.end()?;
        }
        if self.deferred {
            let traces: Vec<Trace> = self.stored.iter().map(|s| s.trace.clone()).collect();
            let out = offline_with_kernel(&self.phi, &self.tpl, &traces, self.start)?;
            self.verdict = out.verdict;
            self.stats.tuples_checked = out.stats.tuples_checked;
        } else if !self.verdict.is_violation() {
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

pub fn run_online_sequential(
    phi: &QuantifiedFormula,
    events: &[StreamEvent],
    opts: SequentialOptions,
) -> Result<Outcome, EngineError> {
    let mut session = SessionState::new(phi, opts)?;
    for ev in events {
        session.push(ev)?;
        if opts.stop_on_violation && session.verdict().is_violation() {
            break;
        }
    }
    session.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;
    use crate::trace::sequential_events;

    const EQ: &str = "forall p1. forall p2. G (a[p1] <-> a[p2])";
    const CONF: &str = "forall p. forall q. ((!pc[p] & pc[q]) -> X G (s[p] -> X v[q])) \
                        & ((pc[p] & pc[q]) -> X G (v[p] <-> v[q]))";

    fn phi(text: &str) -> QuantifiedFormula {
        parse_formula(text).unwrap()
    }

    fn traces(lines: &[&[&str]]) -> Vec<Trace> {
        lines
            .iter()
            .enumerate()
            .map(|(i, s)| Trace::from_literals(i, s))
            .collect()
    }

    fn ids(v: &Verdict) -> Vec<usize> {
        match v {
            Verdict::Violation(w) => w.traces().iter().map(|t| t.id).collect(),
            _ => panic!("expected a violation, got {v:?}"),
        }
    }

    #[test]
    fn offline_universal_examples() {
        let eq = phi(EQ);
        let same = traces(&[&["a", "a"], &["a", "a"]]);
        assert_eq!(run_offline_universal(&eq, &same, 1).unwrap().verdict, Verdict::Satisfied);
        let diff = traces(&[&["a"], &["-"]]);
        assert_eq!(ids(&run_offline_universal(&eq, &diff, 1).unwrap().verdict), vec![0, 1]);
        assert_eq!(ids(&run_offline_universal(&eq, &diff, 4).unwrap().verdict), vec![0, 1]);
        let pcs = traces(&[&["pc", "v", "v", "v", "-"], &["pc", "v", "-", "v", "-"]]);
        assert!(run_offline_universal(&phi(CONF), &pcs, 1).unwrap().verdict.is_violation());
    }

    #[test]
    fn sequential_storage_and_pruning() {
        let eq = phi(EQ);
        let three = traces(&[&["a", "-"], &["a", "-"], &["a", "-"]]);
        let events = sequential_events(&three);
        let plain = run_online_sequential(&eq, &events, SequentialOptions::default()).unwrap();
        assert_eq!(plain.verdict, Verdict::Satisfied);
        assert_eq!(plain.stats.traces_stored, 3);
        assert_eq!(plain.stats.tuples_checked, 1 + 3 + 5);
        let opts = SequentialOptions {
            trace_analysis: true,
            ..Default::default()
        };
        let pruned = run_online_sequential(&eq, &events, opts).unwrap();
        assert_eq!(pruned.verdict, Verdict::Satisfied);
        assert_eq!(pruned.stats.traces_stored, 1);
        assert_eq!(pruned.stats.traces_pruned, 2);
        assert!(pruned.rows.iter().all(SessionStats::accounting_holds));
    }

    #[test]
    fn sequential_violation_and_bound() {
        let eq = phi(EQ);
        let ts = traces(&[&["a"], &["a"], &["-"]]);
        let out = run_online_sequential(&eq, &sequential_events(&ts), Default::default()).unwrap();
        assert_eq!(ids(&out.verdict), vec![0, 2]);
        let bounded = SequentialOptions {
            bound: Some(2),
            ..Default::default()
        };
        let out = run_online_sequential(&eq, &sequential_events(&ts), bounded).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
        assert_eq!(out.bound_exceeded, Some(2));
    }

    #[test]
    fn parallel_online_examples() {
        let fe = phi("forall p. exists q. G (a[p] -> b[q])");
        let ok = traces(&[&["a", "a"], &["b", "b"]]);
        let out = run_parallel_online(&fe, &lockstep_events(&ok)).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
        let bad = traces(&[&["a"], &["a"]]);
        let out = run_parallel_online(&fe, &lockstep_events(&bad)).unwrap();
        assert_eq!(ids(&out.verdict), vec![0]);
        let eq = phi(EQ);
        let out = run_parallel_online(&eq, &lockstep_events(&traces(&[&["a"], &["a"]]))).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
    }

    #[test]
    fn parallel_offline_examples() {
        let ef = phi("exists p. F a[p]");
        let out = run_parallel_offline(&ef, &traces(&[&["-", "-"], &["a"]]));
        assert_eq!(out.verdict, Verdict::Satisfied);
        let conf = phi("forall p. exists q. pc[q] & (!pc[p] -> X G (s[p] -> X v[q]))");
        let out = run_parallel_offline(&conf, &traces(&[&["-", "s", "-"], &["pc", "-", "v"]]));
        assert_eq!(out.verdict, Verdict::Satisfied);
        let ga = phi("forall p. G a[p]");
        assert!(run_parallel_offline(&ga, &traces(&[&["a"], &["-"]])).verdict.is_violation());
    }

    #[test]
    fn alternating_offline_examples() {
        let fe = phi("forall p. exists q. G (a[p] -> b[q])");
        let out = run_offline_alternating(&fe, &traces(&[&["a", "a"], &["b", "b"]])).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
        let out = run_offline_alternating(&fe, &traces(&[&["a"]])).unwrap();
        assert_eq!(ids(&out.verdict), vec![0]);
        let ef = phi("exists p. forall q. G (a[q] -> b[p])");
        let out = run_offline_alternating(&ef, &traces(&[&["a", "a"], &["b", "b"]])).unwrap();
        assert_eq!(out.verdict, Verdict::Satisfied);
    }

    #[test]
    fn prefix_evaluator_witnesses() {
        use Quantifier::*;
        let acc = [[true, false], [false, false]];
        let r = eval_prefix(&[Forall, Exists], 2, &mut |p| acc[p[0]][p[1]]);
        assert_eq!(r, Some(vec![1]));
        let r = eval_prefix(&[Exists, Forall], 2, &mut |p| acc[p[0]][p[1]]);
        assert_eq!(r, Some(vec![]));
        assert_eq!(eval_prefix(&[Forall, Forall], 0, &mut |_| false), None);
    }
}
