//! HyperLTL syntax: trace variables, indexed atoms, LTL bodies and quantifier prefixes.
//!
//! Concrete syntax:
//!
//! ```text
//! formula := ["ap" IDENT {"," IDENT} ";"] {("forall"|"exists") IDENT "."} expr
//! expr    := "true" | "false" | IDENT "[" IDENT "]" | "!" expr
//!          | expr ("&"|"|"|"->"|"<->"|"U"|"W") expr
//!          | ("X"|"G"|"F") expr | "G[<" NAT "]" expr | "(" expr ")"
//! ```
//!
//! Binding strength, tightest first: unary, `U`/`W`, `&`, `|`, `->`, `<->`.
//! `U`, `W` and `->` associate to the right. `#` starts a line comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("trace variable `{0}` is not bound by the quantifier prefix")]
    UnboundVariable(String),
    #[error("trace variable `{0}` is quantified twice")]
    DuplicateVariable(String),
    #[error("proposition `{0}` is not in the declared AP set")]
    UndeclaredProposition(String),
    #[error("substitution has no image for trace variable `{0}`")]
    UnmappedVariable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TraceVar(String);

impl TraceVar {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for TraceVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An atomic proposition observed on a particular trace variable, `a[p]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexedAtom {
    pub ap: String,
    pub var: TraceVar,
}

impl IndexedAtom {
    pub fn new(ap: impl Into<String>, var: impl Into<String>) -> Self {
        Self {
            ap: ap.into(),
            var: TraceVar::new(var),
        }
    }
}

impl fmt::Display for IndexedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.ap, self.var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LtlExpr {
    True,
    False,
    Atom(IndexedAtom),
    Not(Box<LtlExpr>),
    And(Box<LtlExpr>, Box<LtlExpr>),
    Or(Box<LtlExpr>, Box<LtlExpr>),
    Implies(Box<LtlExpr>, Box<LtlExpr>),
    Iff(Box<LtlExpr>, Box<LtlExpr>),
    Next(Box<LtlExpr>),
    Until(Box<LtlExpr>, Box<LtlExpr>),
    WeakUntil(Box<LtlExpr>, Box<LtlExpr>),
    Globally(Box<LtlExpr>),
    Finally(Box<LtlExpr>),
    /// `G[<k] e`: `e` holds at the first `k` positions.
    BoundedGlobally(u32, Box<LtlExpr>),
}

#[allow(clippy::should_implement_trait)]
impl LtlExpr {
    pub fn atom(ap: impl Into<String>, var: impl Into<String>) -> Self {
        Self::Atom(IndexedAtom::new(ap, var))
    }

    #[must_use]
    pub fn not(e: Self) -> Self {
        Self::Not(Box::new(e))
    }

    #[must_use]
    pub fn and(l: Self, r: Self) -> Self {
        Self::And(Box::new(l), Box::new(r))
    }

    #[must_use]
    pub fn or(l: Self, r: Self) -> Self {
        Self::Or(Box::new(l), Box::new(r))
    }

    #[must_use]
    pub fn implies(l: Self, r: Self) -> Self {
        Self::Implies(Box::new(l), Box::new(r))
    }

    #[must_use]
    pub fn iff(l: Self, r: Self) -> Self {
        Self::Iff(Box::new(l), Box::new(r))
    }

    #[must_use]
    pub fn next(e: Self) -> Self {
        Self::Next(Box::new(e))
    }

    #[must_use]
    pub fn until(l: Self, r: Self) -> Self {
        Self::Until(Box::new(l), Box::new(r))
    }

    #[must_use]
    pub fn weak_until(l: Self, r: Self) -> Self {
        Self::WeakUntil(Box::new(l), Box::new(r))
    }

    #[must_use]
    pub fn globally(e: Self) -> Self {
        Self::Globally(Box::new(e))
    }

    #[must_use]
    pub fn finally(e: Self) -> Self {
        Self::Finally(Box::new(e))
    }

    #[must_use]
    pub fn bounded_globally(k: u32, e: Self) -> Self {
        Self::BoundedGlobally(k, Box::new(e))
    }

    /// Conjunction of all items, `true` when empty.
    pub fn all(items: impl IntoIterator<Item = Self>) -> Self {
        items
            .into_iter()
            .reduce(Self::and)
            .unwrap_or(Self::True)
    }

    /// Disjunction of all items, `false` when empty.
    pub fn any(items: impl IntoIterator<Item = Self>) -> Self {
        items
            .into_iter()
            .reduce(Self::or)
            .unwrap_or(Self::False)
    }

    /// Rewrites into the core fragment {True, Atom, Not, Or, Next, Until}.
    #[must_use]
    pub fn desugar(&self) -> Self {
        match self {
            Self::True => Self::True,
            Self::False => Self::not(Self::True),
            Self::Atom(a) => Self::Atom(a.clone()),
            Self::Not(e) => Self::not(e.desugar()),
            Self::Or(l, r) => Self::or(l.desugar(), r.desugar()),
            Self::And(l, r) => Self::not(Self::or(
                Self::not(l.desugar()),
                Self::not(r.desugar()),
            )),
            Self::Implies(l, r) => Self::or(Self::not(l.desugar()), r.desugar()),
            Self::Iff(l, r) => Self::and(
                Self::implies((**l).clone(), (**r).clone()),
                Self::implies((**r).clone(), (**l).clone()),
            )
            .desugar(),
            Self::Next(e) => Self::next(e.desugar()),
            Self::Until(l, r) => Self::until(l.desugar(), r.desugar()),
            Self::Finally(e) => Self::until(Self::True, e.desugar()),
            Self::Globally(e) => Self::not(Self::until(Self::True, Self::not(e.desugar()))),
            Self::WeakUntil(l, r) => {
                let l = l.desugar();
                Self::or(
                    Self::until(l.clone(), r.desugar()),
                    Self::not(Self::until(Self::True, Self::not(l))),
                )
            }
            Self::BoundedGlobally(0, _) => Self::True,
            Self::BoundedGlobally(k, e) => Self::and(
                (**e).clone(),
                Self::next(Self::BoundedGlobally(k - 1, e.clone())),
            )
            .desugar(),
        }
    }

    pub fn is_core(&self) -> bool {
        match self {
            Self::True | Self::Atom(_) => true,
            Self::Not(e) | Self::Next(e) => e.is_core(),
            Self::Or(l, r) | Self::Until(l, r) => l.is_core() && r.is_core(),
            _ => false,
        }
    }

    /// Renames trace variables; the map need not be injective.
    pub fn substitute(&self, map: &BTreeMap<TraceVar, TraceVar>) -> Result<Self, FormulaError> {
        let sub = |e: &Self| e.substitute(map).map(Box::new);
        Ok(match self {
            Self::True => Self::True,
            Self::False => Self::False,
            Self::Atom(a) => {
                let var = map
                    .get(&a.var)
                    .ok_or_else(|| FormulaError::UnmappedVariable(a.var.0.clone()))?;
                Self::Atom(IndexedAtom {
                    ap: a.ap.clone(),
                    var: var.clone(),
                })
            }
            Self::Not(e) => Self::Not(sub(e)?),
            Self::And(l, r) => Self::And(sub(l)?, sub(r)?),
            Self::Or(l, r) => Self::Or(sub(l)?, sub(r)?),
            Self::Implies(l, r) => Self::Implies(sub(l)?, sub(r)?),
            Self::Iff(l, r) => Self::Iff(sub(l)?, sub(r)?),
            Self::Next(e) => Self::Next(sub(e)?),
            Self::Until(l, r) => Self::Until(sub(l)?, sub(r)?),
            Self::WeakUntil(l, r) => Self::WeakUntil(sub(l)?, sub(r)?),
            Self::Globally(e) => Self::Globally(sub(e)?),
            Self::Finally(e) => Self::Finally(sub(e)?),
            Self::BoundedGlobally(k, e) => Self::BoundedGlobally(*k, sub(e)?),
        })
    }

    fn children(&self) -> Vec<&Self> {
        match self {
            Self::True | Self::False | Self::Atom(_) => vec![],
            Self::Not(e)
            | Self::Next(e)
            | Self::Globally(e)
            | Self::Finally(e)
            | Self::BoundedGlobally(_, e) => vec![e],
            Self::And(l, r)
            | Self::Or(l, r)
            | Self::Implies(l, r)
            | Self::Iff(l, r)
            | Self::Until(l, r)
            | Self::WeakUntil(l, r) => vec![l, r],
        }
    }

    pub fn atoms(&self) -> BTreeSet<IndexedAtom> {
        let mut out = BTreeSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if let Self::Atom(a) = e {
                out.insert(a.clone());
            }
            stack.extend(e.children());
        }
        out
    }

    pub fn vars(&self) -> BTreeSet<TraceVar> {
        self.atoms().into_iter().map(|a| a.var).collect()
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }
}

impl fmt::Display for LtlExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::True => f.write_str("true"),
            Self::False => f.write_str("false"),
            Self::Atom(a) => write!(f, "{a}"),
            Self::Not(e) => write!(f, "!{e}"),
            Self::Next(e) => write!(f, "X {e}"),
            Self::Globally(e) => write!(f, "G {e}"),
            Self::Finally(e) => write!(f, "F {e}"),
            Self::BoundedGlobally(k, e) => write!(f, "G[<{k}] {e}"),
            Self::And(l, r) => write!(f, "({l} & {r})"),
            Self::Or(l, r) => write!(f, "({l} | {r})"),
            Self::Implies(l, r) => write!(f, "({l} -> {r})"),
            Self::Iff(l, r) => write!(f, "({l} <-> {r})"),
            Self::Until(l, r) => write!(f, "({l} U {r})"),
            Self::WeakUntil(l, r) => write!(f, "({l} W {r})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quantifier {
    Forall,
    Exists,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    ForallOnly(usize),
    ExistsOnly(usize),
    /// `n` universal quantifiers followed by `m` existential ones.
    ForallExists(usize, usize),
    /// `m` existential quantifiers followed by `n` universal ones.
    ExistsForall(usize, usize),
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantifiedFormula {
    pub prefix: Vec<(Quantifier, TraceVar)>,
    pub body: LtlExpr,
    pub ap_set: BTreeSet<String>,
}

impl QuantifiedFormula {
    /// Checks scoping and infers the AP set from the body.
    pub fn new(prefix: Vec<(Quantifier, TraceVar)>, body: LtlExpr) -> Result<Self, FormulaError> {
        let ap_set = body.atoms().into_iter().map(|a| a.ap).collect();
        Self::with_aps(prefix, body, ap_set)
    }

    pub fn with_aps(
        prefix: Vec<(Quantifier, TraceVar)>,
        body: LtlExpr,
        ap_set: BTreeSet<String>,
    ) -> Result<Self, FormulaError> {
        let mut seen = BTreeSet::new();
        for (_, v) in &prefix {
            if !seen.insert(v.clone()) {
                return Err(FormulaError::DuplicateVariable(v.0.clone()));
            }
        }
        for atom in body.atoms() {
            if !seen.contains(&atom.var) {
                return Err(FormulaError::UnboundVariable(atom.var.0.clone()));
            }
            if !ap_set.contains(&atom.ap) {
                return Err(FormulaError::UndeclaredProposition(atom.ap));
            }
        }
        Ok(Self {
            prefix,
            body,
            ap_set,
        })
    }

    pub fn forall(vars: &[&str], body: LtlExpr) -> Result<Self, FormulaError> {
        Self::new(
            vars.iter()
                .map(|v| (Quantifier::Forall, TraceVar::new(*v)))
                .collect(),
            body,
        )
    }

    pub fn vars(&self) -> Vec<TraceVar> {
        self.prefix.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn arity(&self) -> usize {
        self.prefix.len()
    }

    pub fn quantifiers(&self) -> Vec<Quantifier> {
        self.prefix.iter().map(|(q, _)| *q).collect()
    }

    pub fn shape(&self) -> Shape {
        let qs = self.quantifiers();
        let mut blocks: Vec<(Quantifier, usize)> = Vec::new();
        for q in qs {
            match blocks.last_mut() {
                Some((last, n)) if *last == q => *n += 1,
                _ => blocks.push((q, 1)),
            }
        }
        match blocks.as_slice() {
            [(Quantifier::Forall, n)] => Shape::ForallOnly(*n),
            [(Quantifier::Exists, n)] => Shape::ExistsOnly(*n),
            [(Quantifier::Forall, n), (Quantifier::Exists, m)] => Shape::ForallExists(*n, *m),
            [(Quantifier::Exists, m), (Quantifier::Forall, n)] => Shape::ExistsForall(*m, *n),
            _ => Shape::Other,
        }
    }

    pub fn is_alternation_free(&self) -> bool {
        matches!(self.shape(), Shape::ForallOnly(_) | Shape::ExistsOnly(_))
    }

    pub fn is_universal(&self) -> bool {
        matches!(self.shape(), Shape::ForallOnly(_))
    }
}

impl fmt::Display for QuantifiedFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inferred: BTreeSet<String> = self.body.atoms().into_iter().map(|a| a.ap).collect();
        if inferred != self.ap_set {
            let aps: Vec<&str> = self.ap_set.iter().map(String::as_str).collect();
            write!(f, "ap {}; ", aps.join(", "))?;
        }
        for (q, v) in &self.prefix {
            let kw = match q {
                Quantifier::Forall => "forall",
                Quantifier::Exists => "exists",
            };
            write!(f, "{kw} {v}. ")?;
        }
        write!(f, "{}", self.body)
    }
}

impl std::str::FromStr for QuantifiedFormula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(u32),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Dot,
    Comma,
    Semi,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    Lt,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::DoubleArrow => f.write_str("`<->`"),
            Tok::Lt => f.write_str("`<`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, FormulaError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, col, message: String| FormulaError::Syntax { line, col, message };
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let mut advance = |n: usize, i: &mut usize| {
            *i += n;
            col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => advance(1, &mut i),
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '[' | ']' | '(' | ')' | '.' | ',' | ';' | '!' | '&' | '|' => {
                let tok = match c {
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '.' => Tok::Dot,
                    ',' => Tok::Comma,
                    ';' => Tok::Semi,
                    '!' => Tok::Bang,
                    '&' => Tok::Amp,
                    _ => Tok::Pipe,
                };
                advance(1, &mut i);
                out.push(Lexed {
                    tok,
                    line: start_line,
                    col: start_col,
                });
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                advance(2, &mut i);
                out.push(Lexed {
                    tok: Tok::Arrow,
                    line: start_line,
                    col: start_col,
                });
            }
            '<' => {
                let tok = if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    advance(3, &mut i);
                    Tok::DoubleArrow
                } else {
                    advance(1, &mut i);
                    Tok::Lt
                };
                out.push(Lexed {
                    tok,
                    line: start_line,
                    col: start_col,
                });
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                col += i - start;
                let n = digits
                    .parse()
                    .map_err(|_| err(start_line, start_col, format!("number `{digits}` out of range")))?;
                out.push(Lexed {
                    tok: Tok::Nat(n),
                    line: start_line,
                    col: start_col,
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                col += i - start;
                out.push(Lexed {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: start_line,
                    col: start_col,
                });
            }
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        }
    }
    out.push(Lexed {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[idx].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> FormulaError {
        let l = &self.toks[self.pos];
        FormulaError::Syntax {
            line: l.line,
            col: l.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), FormulaError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {tok}, found {}", self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => Err(self.error(format!("expected identifier, found {other}"))),
        }
    }

    fn is_ident(&self, k: usize, name: &str) -> bool {
        matches!(self.peek_at(k), Tok::Ident(s) if s == name)
    }

    fn formula(&mut self) -> Result<QuantifiedFormula, FormulaError> {
        let mut declared = None;
        if self.is_ident(0, "ap") && matches!(self.peek_at(1), Tok::Ident(_) | Tok::Semi) {
            self.bump();
            let mut aps = BTreeSet::new();
            if *self.peek() != Tok::Semi {
                aps.insert(self.ident()?);
                while *self.peek() == Tok::Comma {
                    self.bump();
                    aps.insert(self.ident()?);
                }
            }
            self.expect(Tok::Semi)?;
            declared = Some(aps);
        }
        let mut prefix = Vec::new();
        loop {
            let q = if self.is_ident(0, "forall") {
                Quantifier::Forall
            } else if self.is_ident(0, "exists") {
                Quantifier::Exists
            } else {
                break;
            };
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::Dot)?;
            prefix.push((q, TraceVar::new(name)));
        }
        let body = self.iff()?;
        if *self.peek() != Tok::Eof {
            return Err(self.error(format!("unexpected {} after formula", self.peek())));
        }
        match declared {
            Some(aps) => QuantifiedFormula::with_aps(prefix, body, aps),
            None => QuantifiedFormula::new(prefix, body),
        }
    }

    fn iff(&mut self) -> Result<LtlExpr, FormulaError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::DoubleArrow {
            self.bump();
            lhs = LtlExpr::iff(lhs, self.implies()?);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<LtlExpr, FormulaError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            return Ok(LtlExpr::implies(lhs, self.implies()?));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<LtlExpr, FormulaError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            lhs = LtlExpr::or(lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<LtlExpr, FormulaError> {
        let mut lhs = self.until()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            lhs = LtlExpr::and(lhs, self.until()?);
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<LtlExpr, FormulaError> {
        let lhs = self.unary()?;
        if self.is_ident(0, "U") {
            self.bump();
            return Ok(LtlExpr::until(lhs, self.until()?));
        }
        if self.is_ident(0, "W") {
            self.bump();
            return Ok(LtlExpr::weak_until(lhs, self.until()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<LtlExpr, FormulaError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.bump();
                Ok(LtlExpr::not(self.unary()?))
            }
            Tok::LParen => {
                self.bump();
                let e = self.iff()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "G" && *self.peek_at(1) == Tok::LBracket && *self.peek_at(2) == Tok::Lt {
                    self.bump();
                    self.bump();
                    self.bump();
                    let k = match self.bump() {
                        Tok::Nat(k) => k,
                        other => {
                            self.pos -= 1;
                            return Err(self.error(format!("expected step bound, found {other}")));
                        }
                    };
                    self.expect(Tok::RBracket)?;
                    return Ok(LtlExpr::bounded_globally(k, self.unary()?));
                }
                if *self.peek_at(1) == Tok::LBracket {
                    self.bump();
                    self.bump();
                    let var = self.ident()?;
                    self.expect(Tok::RBracket)?;
                    return Ok(LtlExpr::atom(name, var));
                }
                match name.as_str() {
                    "true" => {
                        self.bump();
                        Ok(LtlExpr::True)
                    }
                    "false" => {
                        self.bump();
                        Ok(LtlExpr::False)
                    }
                    "X" | "G" | "F" => {
                        self.bump();
                        let e = self.unary()?;
                        Ok(match name.as_str() {
                            "X" => LtlExpr::next(e),
                            "G" => LtlExpr::globally(e),
                            _ => LtlExpr::finally(e),
                        })
                    }
                    _ => Err(self.error(format!(
                        "`{name}` is neither an operator nor an indexed atom `{name}[var]`"
                    ))),
                }
            }
            other => Err(self.error(format!("expected expression, found {other}"))),
        }
    }
}

pub fn parse_formula(text: &str) -> Result<QuantifiedFormula, FormulaError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.formula()
}
