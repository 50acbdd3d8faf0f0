//! Reduced ordered binary decision diagrams over `u32` variables.
//!
//! Smaller variable indices sit closer to the root. Nodes are hash-consed, so
//! two functions are equal iff their node ids are equal.

use std::collections::{BTreeSet, HashMap};

pub type NodeId = u32;

pub const FALSE: NodeId = 0;
pub const TRUE: NodeId = 1;

const TERMINAL_VAR: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    var: u32,
    lo: NodeId,
    hi: NodeId,
}

#[derive(Debug, Clone)]
pub struct Bdd {
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeId>,
    ite_cache: HashMap<(NodeId, NodeId, NodeId), NodeId>,
}

impl Default for Bdd {
    fn default() -> Self {
        Self::new()
    }
}

impl Bdd {
    pub fn new() -> Self {
        let terminal = |v| Node {
            var: TERMINAL_VAR,
            lo: v,
            hi: v,
        };
        Self {
            nodes: vec![terminal(FALSE), terminal(TRUE)],
            unique: HashMap::new(),
            ite_cache: HashMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_terminal(&self, f: NodeId) -> bool {
        f <= TRUE
    }

    /// Decision variable of an inner node, `None` for terminals.
    pub fn var(&self, f: NodeId) -> Option<u32> {
        let v = self.nodes[f as usize].var;
        (v != TERMINAL_VAR).then_some(v)
    }

    pub fn lo(&self, f: NodeId) -> NodeId {
        self.nodes[f as usize].lo
    }

    pub fn hi(&self, f: NodeId) -> NodeId {
        self.nodes[f as usize].hi
    }

    fn mk(&mut self, var: u32, lo: NodeId, hi: NodeId) -> NodeId {
        if lo == hi {
            return lo;
        }
        let node = Node { var, lo, hi };
        if let Some(&id) = self.unique.get(&node) {
            return id;
        }
        let id = self.nodes.len() as NodeId;
        self.nodes.push(node);
        self.unique.insert(node, id);
        id
    }

    pub fn ithvar(&mut self, var: u32) -> NodeId {
        self.mk(var, FALSE, TRUE)
    }

    fn top_var(&self, f: NodeId) -> u32 {
        self.nodes[f as usize].var
    }

    fn cofactors(&self, f: NodeId, var: u32) -> (NodeId, NodeId) {
        let n = self.nodes[f as usize];
        if n.var == var {
            (n.lo, n.hi)
        } else {
            (f, f)
        }
    }

    pub fn ite(&mut self, f: NodeId, g: NodeId, h: NodeId) -> NodeId {
        if f == TRUE {
            return g;
        }
        if f == FALSE {
            return h;
        }
        if g == h {
            return g;
        }
        if g == TRUE && h == FALSE {
            return f;
        }
        if let Some(&r) = self.ite_cache.get(&(f, g, h)) {
            return r;
        }
        let v = self.top_var(f).min(self.top_var(g)).min(self.top_var(h));
        let (f0, f1) = self.cofactors(f, v);
        let (g0, g1) = self.cofactors(g, v);
        let (h0, h1) = self.cofactors(h, v);
        let lo = self.ite(f0, g0, h0);
        let hi = self.ite(f1, g1, h1);
        let r = self.mk(v, lo, hi);
        self.ite_cache.insert((f, g, h), r);
        r
    }

    pub fn not(&mut self, f: NodeId) -> NodeId {
        self.ite(f, FALSE, TRUE)
    }

    pub fn and(&mut self, f: NodeId, g: NodeId) -> NodeId {
        self.ite(f, g, FALSE)
    }

    pub fn or(&mut self, f: NodeId, g: NodeId) -> NodeId {
        self.ite(f, TRUE, g)
    }

    /// Simultaneously replaces each variable in `sub` by its function.
    pub fn compose(&mut self, f: NodeId, sub: &HashMap<u32, NodeId>) -> NodeId {
        let mut memo = HashMap::new();
        self.compose_rec(f, sub, &mut memo)
    }

    fn compose_rec(
        &mut self,
        f: NodeId,
        sub: &HashMap<u32, NodeId>,
        memo: &mut HashMap<NodeId, NodeId>,
    ) -> NodeId {
        if self.is_terminal(f) {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let Node { var, lo, hi } = self.nodes[f as usize];
        let lo = self.compose_rec(lo, sub, memo);
        let hi = self.compose_rec(hi, sub, memo);
        let test = match sub.get(&var) {
            Some(&g) => g,
            None => self.ithvar(var),
        };
        let r = self.ite(test, hi, lo);
        memo.insert(f, r);
        r
    }

    pub fn eval(&self, mut f: NodeId, value: impl Fn(u32) -> bool) -> bool {
        while !self.is_terminal(f) {
            let n = self.nodes[f as usize];
            f = if value(n.var) { n.hi } else { n.lo };
        }
        f == TRUE
    }

    pub fn support(&self, f: NodeId) -> BTreeSet<u32> {
        let mut seen = BTreeSet::new();
        let mut out = BTreeSet::new();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if self.is_terminal(n) || !seen.insert(n) {
                continue;
            }
            let node = self.nodes[n as usize];
            out.insert(node.var);
            stack.push(node.lo);
            stack.push(node.hi);
        }
        out
    }

    /// Renders `f` as a propositional formula using `name` for variables.
    pub fn render(&self, f: NodeId, name: &dyn Fn(u32) -> String) -> String {
        match f {
            FALSE => return "false".into(),
            TRUE => return "true".into(),
            _ => {}
        }
        let Node { var, lo, hi } = self.nodes[f as usize];
        let x = name(var);
        match (lo, hi) {
            (FALSE, TRUE) => x,
            (TRUE, FALSE) => format!("!{x}"),
            (_, FALSE) => format!("(!{x} & {})", self.render(lo, name)),
            (FALSE, _) => format!("({x} & {})", self.render(hi, name)),
            (_, TRUE) => format!("({x} | {})", self.render(lo, name)),
            (TRUE, _) => format!("(!{x} | {})", self.render(hi, name)),
            _ => format!(
                "(({x} & {}) | (!{x} & {}))",
                self.render(hi, name),
                self.render(lo, name)
            ),
        }
    }
}
