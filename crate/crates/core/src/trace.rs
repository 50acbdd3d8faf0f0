//! Finite traces, tuple zipping and the line-oriented file and stream formats.
//!
//! Trace file: one trace per line, steps separated by `;`, a step is a
//! comma-separated list of AP names or `-` for the empty step. A line holding
//! only `eps` is the empty trace. `#` starts a comment.
//!
//! Stream protocol: `#trace <name>` opens a trace, each following line is one
//! step, `#end` closes it. For lockstep input `#step s1 | s2 | ...` carries one
//! step per stream and `~` marks a stream that has already ended.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::formula::{IndexedAtom, TraceVar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("tuple has {found} entries but {expected} variables were given")]
    ArityMismatch { expected: usize, found: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("at most 64 atomic propositions are supported, got {0}")]
    TooManyPropositions(usize),
}

/// One position of a trace: the set of propositions that hold there.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step(BTreeSet<String>);

impl Step {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn contains(&self, ap: &str) -> bool {
        self.0.contains(ap)
    }

    pub fn insert(&mut self, ap: impl Into<String>) {
        self.0.insert(ap.into());
    }

    pub fn props(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for Step {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        let names: Vec<&str> = self.props().collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for Step {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "-" {
            return Ok(Self::empty());
        }
        if s.is_empty() {
            return Err("empty step (write `-` for no propositions)".into());
        }
        let mut props = BTreeSet::new();
        for name in s.split(',') {
            let name = name.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'') {
                return Err(format!("invalid proposition name `{name}`"));
            }
            props.insert(name.to_string());
        }
        Ok(Self(props))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    /// Arrival index within a session or file.
    pub id: usize,
    pub name: Option<String>,
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn new(id: usize, steps: Vec<Step>) -> Self {
        Self {
            id,
            name: None,
            steps,
        }
    }

    /// Builds a trace from step literals, e.g. `["a", "-", "a,b"]`.
    ///
    /// Panics on malformed literals; meant for tests and examples.
    pub fn from_literals(id: usize, steps: &[&str]) -> Self {
        Self::new(
            id,
            steps.iter().map(|s| s.parse().expect("step literal")).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("t{}", self.id))
    }

    /// `t[i, j]`: empty when `i >= |t|`, otherwise steps `i..=min(j, |t|-1)`.
    #[must_use]
    pub fn subsequence(&self, i: usize, j: usize) -> Self {
        let steps = if i >= self.len() {
            Vec::new()
        } else {
            self.steps[i..=j.min(self.len() - 1)].to_vec()
        };
        Self {
            id: self.id,
            name: self.name.clone(),
            steps,
        }
    }

    /// Suffix from position `i` on, `t[i, ∞]`.
    #[must_use]
    pub fn suffix(&self, i: usize) -> Self {
        self.subsequence(i, usize::MAX)
    }

    #[must_use]
    pub fn truncate(&self, len: usize) -> Self {
        let mut t = self.clone();
        t.steps.truncate(len);
        t
    }

    /// The trace-file line for this trace.
    pub fn to_line(&self) -> String {
        if self.steps.is_empty() {
            return "eps".into();
        }
        let parts: Vec<String> = self.steps.iter().map(Step::to_string).collect();
        parts.join(";")
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// A word over sets of indexed atoms, the letters a monitor reads.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ZippedWord {
    pub letters: Vec<BTreeSet<IndexedAtom>>,
}

impl ZippedWord {
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Letter `i` holds `(a, vars[j])` for every `a` in step `i` of entry `j`;
/// the word is as long as the shortest entry.
pub fn zip_tuple(entries: &[&Trace], vars: &[TraceVar]) -> Result<ZippedWord, TraceError> {
    if entries.len() != vars.len() {
        return Err(TraceError::ArityMismatch {
            expected: vars.len(),
            found: entries.len(),
        });
    }
    let len = entries.iter().map(|t| t.len()).min().unwrap_or(0);
    let letters = (0..len)
        .map(|i| {
            entries
                .iter()
                .zip(vars)
                .flat_map(|(t, v)| {
                    t.steps[i].props().map(move |a| IndexedAtom {
                        ap: a.to_string(),
                        var: v.clone(),
                    })
                })
                .collect()
        })
        .collect();
    Ok(ZippedWord { letters })
}

/// The `var`-projection of a letter.
pub fn project(letter: &BTreeSet<IndexedAtom>, var: &TraceVar) -> Step {
    letter
        .iter()
        .filter(|a| &a.var == var)
        .map(|a| a.ap.clone())
        .collect()
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

pub fn parse_trace_line(line: &str, id: usize, lineno: usize) -> Result<Trace, TraceError> {
    let line = line.trim();
    if line == "eps" || line == "ε" {
        return Ok(Trace::new(id, Vec::new()));
    }
    let steps = line
        .split(';')
        .map(|s| {
            s.parse().map_err(|message| TraceError::Parse {
                line: lineno,
                message,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(Trace::new(id, steps))
}

/// Parses a trace file; ids follow line order starting at 0.
pub fn parse_trace_file(text: &str) -> Result<Vec<Trace>, TraceError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_trace_line(line, out.len(), idx + 1)?);
    }
    Ok(out)
}

pub fn format_trace_file(traces: &[Trace]) -> String {
    traces.iter().map(|t| t.to_line() + "\n").collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamEvent {
    Begin(Option<String>),
    Step(Step),
    End,
    /// One lockstep position; `None` marks a stream that has ended.
    Lockstep(Vec<Option<Step>>),
}

/// Parses one line of the stream protocol. Blank and comment lines yield `None`.
pub fn parse_stream_line(raw: &str, lineno: usize) -> Result<Option<StreamEvent>, TraceError> {
    let line = raw.trim();
    let perr = |message: String| TraceError::Parse {
        line: lineno,
        message,
    };
    if let Some(rest) = line.strip_prefix("#trace") {
        if rest.is_empty() || rest.starts_with(char::is_whitespace) {
            let name = strip_comment(rest).trim();
            return Ok(Some(StreamEvent::Begin(
                (!name.is_empty()).then(|| name.to_string()),
            )));
        }
    }
    if let Some(rest) = line.strip_prefix("#end") {
        if rest.trim().is_empty() {
            return Ok(Some(StreamEvent::End));
        }
    }
    if let Some(rest) = line.strip_prefix("#step") {
        if rest.starts_with(char::is_whitespace) {
            let steps = rest
                .split('|')
                .map(|s| match s.trim() {
                    "~" => Ok(None),
                    s => s.parse().map(Some).map_err(perr),
                })
                .collect::<Result<_, _>>()?;
            return Ok(Some(StreamEvent::Lockstep(steps)));
        }
    }
    let body = strip_comment(line).trim();
    if body.is_empty() {
        return Ok(None);
    }
    body.parse().map(|s| Some(StreamEvent::Step(s))).map_err(perr)
}

pub fn parse_stream(text: &str) -> Result<Vec<StreamEvent>, TraceError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if let Some(ev) = parse_stream_line(line, idx + 1)? {
            out.push(ev);
        }
    }
    Ok(out)
}

/// The sequential stream that delivers `traces` one after another.
pub fn sequential_events(traces: &[Trace]) -> Vec<StreamEvent> {
    let mut out = Vec::new();
    for t in traces {
        out.push(StreamEvent::Begin(t.name.clone()));
        out.extend(t.steps.iter().cloned().map(StreamEvent::Step));
        out.push(StreamEvent::End);
    }
    out
}

/// Dense bit encoding of steps relative to a fixed proposition list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl ApTable {
    pub fn new(names: impl IntoIterator<Item = String>) -> Result<Self, TraceError> {
        let names: Vec<String> = names
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if names.len() > 64 {
            return Err(TraceError::TooManyPropositions(names.len()));
        }
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        Ok(Self { names, index })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, ap: &str) -> Option<usize> {
        self.index.get(ap).copied()
    }

    /// Propositions outside the table are dropped.
    pub fn encode_step(&self, step: &Step) -> u64 {
        step.props()
            .filter_map(|a| self.index_of(a))
            .fold(0, |acc, i| acc | (1 << i))
    }

    pub fn encode(&self, trace: &Trace) -> Vec<u64> {
        trace.steps.iter().map(|s| self.encode_step(s)).collect()
    }

    pub fn decode_step(&self, bits: u64) -> Step {
        self.names
            .iter()
            .enumerate()
            .filter(|(i, _)| bits >> i & 1 == 1)
            .map(|(_, n)| n.clone())
            .collect()
    }
}
