//! Control-flow graph of a MiniImp program and the graph facts built on it:
//! dominance, post-dominance, control dependence and natural loops.
//!
//! Every declaration becomes one definition node right after `entry`, every
//! statement becomes exactly one node (an `if`/`while` becomes its predicate
//! node), and the assert node has a single edge to `exit`: execution stops at
//! the assertion. Statements that follow the assert in its block are
//! unreachable and are not materialised.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ast::{Arm, BinOp, BlockPath, Expr, Init, Program, Stmt, StmtPath, UnOp};
use crate::pretty::{expr_to_string, stmt_header};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl core::fmt::Display for NodeId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Index of a declared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Fall,
    True,
    False,
}

impl EdgeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::Fall => "fall",
            EdgeLabel::True => "true",
            EdgeLabel::False => "false",
        }
    }
}

/// Expression with variables resolved to store slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CExpr {
    Const(i64),
    Var(VarId),
    Unary(UnOp, Box<CExpr>),
    Binary(BinOp, Box<CExpr>, Box<CExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DivisionByZero;

impl CExpr {
    fn compile(e: &Expr, vars: &BTreeMap<String, VarId>) -> CExpr {
        match e {
            Expr::Int(n) => CExpr::Const(*n),
            Expr::Bool(b) => CExpr::Const(*b as i64),
            // validated programs only mention declared variables
            Expr::Var(v) => CExpr::Var(vars[v]),
            Expr::Unary(op, inner) => CExpr::Unary(*op, Box::new(CExpr::compile(inner, vars))),
            Expr::Binary(op, l, r) => {
                CExpr::Binary(*op, Box::new(CExpr::compile(l, vars)), Box::new(CExpr::compile(r, vars)))
            }
        }
    }

    /// Evaluate over a store. Booleans are 0/1; arithmetic wraps.
    pub fn eval(&self, store: &[i64]) -> Result<i64, DivisionByZero> {
        Ok(match self {
            CExpr::Const(n) => *n,
            CExpr::Var(v) => store[v.index()],
            CExpr::Unary(UnOp::Neg, e) => e.eval(store)?.wrapping_neg(),
            CExpr::Unary(UnOp::Not, e) => (e.eval(store)? == 0) as i64,
            CExpr::Binary(BinOp::And, l, r) => (l.eval(store)? != 0 && r.eval(store)? != 0) as i64,
            CExpr::Binary(BinOp::Or, l, r) => (l.eval(store)? != 0 || r.eval(store)? != 0) as i64,
            CExpr::Binary(op, l, r) => {
                let (a, b) = (l.eval(store)?, r.eval(store)?);
                match op {
                    BinOp::Add => a.wrapping_add(b),
                    BinOp::Sub => a.wrapping_sub(b),
                    BinOp::Mul => a.wrapping_mul(b),
                    BinOp::Div if b == 0 => return Err(DivisionByZero),
                    BinOp::Div => a.wrapping_div(b),
                    BinOp::Rem if b == 0 => return Err(DivisionByZero),
                    BinOp::Rem => a.wrapping_rem(b),
                    BinOp::Lt => (a < b) as i64,
                    BinOp::Le => (a <= b) as i64,
                    BinOp::Gt => (a > b) as i64,
                    BinOp::Ge => (a >= b) as i64,
                    BinOp::Eq => (a == b) as i64,
                    BinOp::Ne => (a != b) as i64,
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
        })
    }

    pub fn vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            CExpr::Const(_) => {}
            CExpr::Var(v) => {
                out.insert(*v);
            }
            CExpr::Unary(_, e) => e.vars(out),
            CExpr::Binary(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Entry,
    Exit,
    Assign { var: VarId, expr: CExpr },
    Nondet { var: VarId },
    Input { var: VarId },
    Predicate { cond: CExpr },
    Assert { cond: CExpr },
    Skip,
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Entry => "entry",
            NodeKind::Exit => "exit",
            NodeKind::Assign { .. } => "assign",
            NodeKind::Nondet { .. } => "assign_nondet",
            NodeKind::Input { .. } => "assign_input",
            NodeKind::Predicate { .. } => "predicate",
            NodeKind::Assert { .. } => "assert",
            NodeKind::Skip => "skip",
        }
    }
}

/// Where in the source a node comes from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AstLink {
    Entry,
    Exit,
    Decl(usize),
    Stmt(StmtPath),
}

#[derive(Clone, Debug)]
pub struct Node {
    pub kind: NodeKind,
    pub link: AstLink,
    pub text: String,
    /// The node's source expression (right-hand side or condition), if any.
    pub expr: Option<Expr>,
}

#[derive(Clone, Debug)]
pub struct Loop {
    pub header: NodeId,
    pub body: BTreeSet<NodeId>,
    pub back_edges: Vec<(NodeId, NodeId)>,
    /// Index of the innermost enclosing loop in the list returned by
    /// [`Cfg::natural_loops`].
    pub parent: Option<usize>,
}

impl Loop {
    pub fn contains(&self, n: NodeId) -> bool {
        self.body.contains(&n)
    }
}

#[derive(Clone, Debug)]
pub struct Cfg {
    pub vars: Vec<String>,
    nodes: Vec<Node>,
    succs: Vec<Vec<(NodeId, EdgeLabel)>>,
    preds: Vec<Vec<(NodeId, EdgeLabel)>>,
    pub entry: NodeId,
    pub exit: NodeId,
    pub assert_node: NodeId,
    by_path: BTreeMap<StmtPath, NodeId>,
}

struct Builder<'a> {
    vars: &'a BTreeMap<String, VarId>,
    nodes: Vec<Node>,
    edges: Vec<(NodeId, Option<NodeId>, EdgeLabel)>,
    assert_node: Option<NodeId>,
}

type Dangling = Vec<(NodeId, EdgeLabel)>;

impl Builder<'_> {
    fn add(&mut self, kind: NodeKind, link: AstLink, text: String, expr: Option<Expr>) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node { kind, link, text, expr });
        id
    }

    fn connect(&mut self, from: &Dangling, to: NodeId) {
        for &(src, label) in from {
            self.edges.push((src, Some(to), label));
        }
    }

    fn block(&mut self, block: &[Stmt], path: &BlockPath, mut live: Dangling) -> Dangling {
        for (i, stmt) in block.iter().enumerate() {
            if live.is_empty() {
                break;
            }
            live = self.stmt(stmt, StmtPath::new(path.clone(), i), live);
        }
        live
    }

    fn stmt(&mut self, stmt: &Stmt, path: StmtPath, live: Dangling) -> Dangling {
        let link = AstLink::Stmt(path.clone());
        let text = stmt_header(stmt);
        let var = |name: &String| self.vars[name];
        match stmt {
            Stmt::Assign { var: v, expr } => {
                let kind = NodeKind::Assign { var: var(v), expr: CExpr::compile(expr, self.vars) };
                let n = self.add(kind, link, text, Some(expr.clone()));
                self.connect(&live, n);
                vec![(n, EdgeLabel::Fall)]
            }
            Stmt::Nondet { var: v } => {
                let n = self.add(NodeKind::Nondet { var: var(v) }, link, text, None);
                self.connect(&live, n);
                vec![(n, EdgeLabel::Fall)]
            }
            Stmt::Input { var: v } => {
                let n = self.add(NodeKind::Input { var: var(v) }, link, text, None);
                self.connect(&live, n);
                vec![(n, EdgeLabel::Fall)]
            }
            Stmt::Skip => {
                let n = self.add(NodeKind::Skip, link, text, None);
                self.connect(&live, n);
                vec![(n, EdgeLabel::Fall)]
            }
            Stmt::Assert { cond } => {
                let kind = NodeKind::Assert { cond: CExpr::compile(cond, self.vars) };
                let n = self.add(kind, link, text, Some(cond.clone()));
                self.connect(&live, n);
                self.assert_node = Some(n);
                self.edges.push((n, None, EdgeLabel::Fall));
                Vec::new()
            }
            Stmt::If { cond, then_block, else_block } => {
                let kind = NodeKind::Predicate { cond: CExpr::compile(cond, self.vars) };
                let n = self.add(kind, link, text, Some(cond.clone()));
                self.connect(&live, n);
                let mut out =
                    self.block(then_block, &path.block.child(path.index, Arm::Then), vec![(n, EdgeLabel::True)]);
                out.extend(self.block(
                    else_block,
                    &path.block.child(path.index, Arm::Else),
                    vec![(n, EdgeLabel::False)],
                ));
                out
            }
            Stmt::While { cond, body } => {
                let kind = NodeKind::Predicate { cond: CExpr::compile(cond, self.vars) };
                let n = self.add(kind, link, text, Some(cond.clone()));
                self.connect(&live, n);
                let back = self.block(body, &path.block.child(path.index, Arm::Body), vec![(n, EdgeLabel::True)]);
                self.connect(&back, n);
                vec![(n, EdgeLabel::False)]
            }
        }
    }
}

impl Cfg {
    pub fn build(p: &Program) -> Cfg {
        let vars: BTreeMap<String, VarId> =
            p.decls.iter().enumerate().map(|(i, d)| (d.name.clone(), VarId(i as u32))).collect();
        let mut b = Builder { vars: &vars, nodes: Vec::new(), edges: Vec::new(), assert_node: None };
        let entry = b.add(NodeKind::Entry, AstLink::Entry, "ENTRY".into(), None);
        let mut live: Dangling = vec![(entry, EdgeLabel::Fall)];
        for (i, decl) in p.decls.iter().enumerate() {
            let var = VarId(i as u32);
            let (kind, text, expr) = match decl.init {
                Init::Const(n) => (
                    NodeKind::Assign { var, expr: CExpr::Const(n) },
                    format!("{} = {};", decl.name, n),
                    Some(Expr::Int(n)),
                ),
                Init::Input => (NodeKind::Input { var }, format!("{} = input();", decl.name), None),
                Init::Nondet => (NodeKind::Nondet { var }, format!("{} = *;", decl.name), None),
            };
            let n = b.add(kind, AstLink::Decl(i), text, expr);
            b.connect(&live, n);
            live = vec![(n, EdgeLabel::Fall)];
        }
        let dangling = b.block(&p.body, &BlockPath::top(), live);
        let exit = b.add(NodeKind::Exit, AstLink::Exit, "EXIT".into(), None);
        b.connect(&dangling, exit);

        let count = b.nodes.len();
        let mut succs = vec![Vec::new(); count];
        let mut preds = vec![Vec::new(); count];
        for (from, to, label) in b.edges {
            let to = to.unwrap_or(exit);
            succs[from.index()].push((to, label));
            preds[to.index()].push((from, label));
        }
        let by_path = b
            .nodes
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match &n.link {
                AstLink::Stmt(path) => Some((path.clone(), NodeId(i as u32))),
                _ => None,
            })
            .collect();
        Cfg {
            vars: p.var_names(),
            nodes: b.nodes,
            succs,
            preds,
            entry,
            exit,
            // validated programs have exactly one assert, and it is always reachable
            assert_node: b.assert_node.expect("validated program has an assert"),
            by_path,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn node(&self, n: NodeId) -> &Node {
        &self.nodes[n.index()]
    }

    pub fn kind(&self, n: NodeId) -> &NodeKind {
        &self.nodes[n.index()].kind
    }

    pub fn succs(&self, n: NodeId) -> &[(NodeId, EdgeLabel)] {
        &self.succs[n.index()]
    }

    pub fn preds(&self, n: NodeId) -> &[(NodeId, EdgeLabel)] {
        &self.preds[n.index()]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, EdgeLabel)> + '_ {
        self.node_ids().flat_map(move |n| self.succs(n).iter().map(move |&(t, l)| (n, t, l)))
    }

    /// Successor along the edge with the given label.
    pub fn succ_on(&self, n: NodeId, label: EdgeLabel) -> Option<NodeId> {
        self.succs(n).iter().find(|(_, l)| *l == label).map(|(t, _)| *t)
    }

    pub fn node_at(&self, path: &StmtPath) -> Option<NodeId> {
        self.by_path.get(path).copied()
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name).map(|i| VarId(i as u32))
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()]
    }

    pub fn is_predicate(&self, n: NodeId) -> bool {
        matches!(self.kind(n), NodeKind::Predicate { .. })
    }

    pub fn predicates(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(move |&n| self.is_predicate(n))
    }

    /// Variable defined by the node, for the three assignment kinds.
    pub fn def(&self, n: NodeId) -> Option<VarId> {
        match self.kind(n) {
            NodeKind::Assign { var, .. } | NodeKind::Nondet { var } | NodeKind::Input { var } => Some(*var),
            _ => None,
        }
    }

    pub fn is_assignment(&self, n: NodeId) -> bool {
        self.def(n).is_some()
    }

    /// Variables read by the node.
    pub fn uses(&self, n: NodeId) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        match self.kind(n) {
            NodeKind::Assign { expr, .. } => expr.vars(&mut out),
            NodeKind::Predicate { cond } | NodeKind::Assert { cond } => cond.vars(&mut out),
            _ => {}
        }
        out
    }

    /// Nodes reachable from `from` (inclusive), never expanding past `stop`.
    pub fn reachable_from(&self, from: NodeId, stop: Option<NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut work = VecDeque::from([from]);
        while let Some(n) = work.pop_front() {
            if !seen.insert(n) {
                continue;
            }
            if Some(n) == stop && n != from {
                continue;
            }
            for &(s, _) in self.succs(n) {
                work.push_back(s);
            }
        }
        seen
    }

    /// Nodes that can reach `to` (inclusive), never expanding backwards past `stop`.
    pub fn reaching(&self, to: NodeId, stop: Option<NodeId>) -> BTreeSet<NodeId> {
        let mut seen = BTreeSet::new();
        let mut work = VecDeque::from([to]);
        while let Some(n) = work.pop_front() {
            if !seen.insert(n) {
                continue;
            }
            if Some(n) == stop && n != to {
                continue;
            }
            for &(p, _) in self.preds(n) {
                work.push_back(p);
            }
        }
        seen
    }

    /// Reflexive dominator sets.
    pub fn dominators(&self) -> Vec<BTreeSet<NodeId>> {
        self.dominance(true)
    }

    /// Reflexive post-dominator sets; `exit` post-dominates every node.
    pub fn post_dominators(&self) -> Vec<BTreeSet<NodeId>> {
        self.dominance(false)
    }

    fn dominance(&self, forward: bool) -> Vec<BTreeSet<NodeId>> {
        let all: BTreeSet<NodeId> = self.node_ids().collect();
        let root = if forward { self.entry } else { self.exit };
        let mut sets = vec![all; self.len()];
        sets[root.index()] = BTreeSet::from([root]);
        let order: Vec<NodeId> = if forward { self.node_ids().collect() } else { self.node_ids().rev().collect() };
        let mut changed = true;
        while changed {
            changed = false;
            for &n in &order {
                if n == root {
                    continue;
                }
                let others = if forward { self.preds(n) } else { self.succs(n) };
                let mut acc: Option<BTreeSet<NodeId>> = None;
                for &(o, _) in others {
                    acc = Some(match acc {
                        None => sets[o.index()].clone(),
                        Some(a) => a.intersection(&sets[o.index()]).copied().collect(),
                    });
                }
                let mut next = acc.unwrap_or_default();
                next.insert(n);
                if next != sets[n.index()] {
                    sets[n.index()] = next;
                    changed = true;
                }
            }
        }
        sets
    }

    /// Immediate post-dominator of every node but `exit`.
    pub fn immediate_post_dominators(&self, pdom: &[BTreeSet<NodeId>]) -> Vec<Option<NodeId>> {
        self.node_ids()
            .map(|n| {
                let strict: Vec<NodeId> = pdom[n.index()].iter().copied().filter(|&m| m != n).collect();
                // the nearest strict post-dominator is the one post-dominated by all the others
                strict.iter().copied().find(|&m| pdom[m.index()].len() == strict.len())
            })
            .collect()
    }

    /// The least common post-dominator of `ns` (reflexive, so `{n}` gives `n`).
    pub fn nearest_common_post_dominator(&self, pdom: &[BTreeSet<NodeId>], ns: &BTreeSet<NodeId>) -> NodeId {
        let mut common: Option<BTreeSet<NodeId>> = None;
        for n in ns {
            common = Some(match common {
                None => pdom[n.index()].clone(),
                Some(c) => c.intersection(&pdom[n.index()]).copied().collect(),
            });
        }
        let common = common.unwrap_or_else(|| BTreeSet::from([self.exit]));
        common.iter().copied().find(|m| pdom[m.index()].len() == common.len()).unwrap_or(self.exit)
    }

    /// Direct control dependence: `n -> {predicates n is control dependent on}`.
    pub fn control_dependence(&self, pdom: &[BTreeSet<NodeId>]) -> Vec<BTreeSet<NodeId>> {
        let mut cd = vec![BTreeSet::new(); self.len()];
        for c in self.predicates() {
            for &(s, _) in self.succs(c) {
                for &n in &pdom[s.index()] {
                    let strictly_pdoms_c = n != c && pdom[c.index()].contains(&n);
                    if !strictly_pdoms_c {
                        cd[n.index()].insert(c);
                    }
                }
            }
        }
        cd
    }

    /// Transitive closure of [`control_dependence`](Self::control_dependence).
    pub fn transitive_control(&self, cd: &[BTreeSet<NodeId>]) -> Vec<BTreeSet<NodeId>> {
        self.node_ids()
            .map(|n| {
                let mut seen = BTreeSet::new();
                let mut work: Vec<NodeId> = cd[n.index()].iter().copied().collect();
                while let Some(c) = work.pop() {
                    if seen.insert(c) {
                        work.extend(cd[c.index()].iter().copied());
                    }
                }
                seen
            })
            .collect()
    }

    /// Natural loops, one per header, with their nesting forest.
    pub fn natural_loops(&self) -> Vec<Loop> {
        let dom = self.dominators();
        let mut by_header: BTreeMap<NodeId, Loop> = BTreeMap::new();
        for (from, to, _) in self.edges() {
            if !dom[from.index()].contains(&to) {
                continue;
            }
            let entry = by_header.entry(to).or_insert_with(|| Loop {
                header: to,
                body: BTreeSet::from([to]),
                back_edges: Vec::new(),
                parent: None,
            });
            entry.back_edges.push((from, to));
            let mut work = vec![from];
            while let Some(n) = work.pop() {
                if entry.body.insert(n) {
                    work.extend(self.preds(n).iter().map(|&(p, _)| p));
                }
            }
        }
        let mut loops: Vec<Loop> = by_header.into_values().collect();
        let parents: Vec<Option<usize>> = loops
            .iter()
            .map(|l| {
                loops
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| o.header != l.header && o.body.is_superset(&l.body))
                    .min_by_key(|(_, o)| o.body.len())
                    .map(|(i, _)| i)
            })
            .collect();
        for (l, p) in loops.iter_mut().zip(parents) {
            l.parent = p;
        }
        loops
    }

    /// Graphviz rendering; loops become nested clusters.
    pub fn to_dot(&self) -> String {
        let loops = self.natural_loops();
        let mut out = String::from("digraph cfg {\n  node [shape=box, fontname=\"monospace\"];\n");
        let innermost = |n: NodeId| {
            loops.iter().enumerate().filter(|(_, l)| l.contains(n)).min_by_key(|(_, l)| l.body.len()).map(|(i, _)| i)
        };
        let mut placed: BTreeMap<Option<usize>, Vec<NodeId>> = BTreeMap::new();
        for n in self.node_ids() {
            placed.entry(innermost(n)).or_default().push(n);
        }
        let escape = |s: &str| s.replace('\\', "\\\\").replace('"', "\\\"");
        let node_line = |n: NodeId| {
            let node = self.node(n);
            format!("\"n{}\" [label=\"{}: {}: {}\"];\n", n, n, node.kind.name(), escape(&node.text))
        };
        fn cluster(
            out: &mut String,
            idx: usize,
            depth: usize,
            loops: &[Loop],
            placed: &BTreeMap<Option<usize>, Vec<NodeId>>,
            node_line: &dyn Fn(NodeId) -> String,
        ) {
            let pad = "  ".repeat(depth);
            out.push_str(&format!("{pad}subgraph cluster_loop_{} {{\n", loops[idx].header));
            out.push_str(&format!("{pad}  label=\"loop @{}\";\n", loops[idx].header));
            for &n in placed.get(&Some(idx)).map(Vec::as_slice).unwrap_or(&[]) {
                out.push_str(&format!("{pad}  {}", node_line(n)));
            }
            for (child, l) in loops.iter().enumerate() {
                if l.parent == Some(idx) {
                    cluster(out, child, depth + 1, loops, placed, node_line);
                }
            }
            out.push_str(&format!("{pad}}}\n"));
        }
        for &n in placed.get(&None).map(Vec::as_slice).unwrap_or(&[]) {
            out.push_str(&format!("  {}", node_line(n)));
        }
        for (i, l) in loops.iter().enumerate() {
            if l.parent.is_none() {
                cluster(&mut out, i, 1, &loops, &placed, &node_line);
            }
        }
        for (from, to, label) in self.edges() {
            match label {
                EdgeLabel::Fall => out.push_str(&format!("  \"n{from}\" -> \"n{to}\";\n")),
                l => out.push_str(&format!("  \"n{from}\" -> \"n{to}\" [label=\"{}\"];\n", l.as_str())),
            }
        }
        out.push_str("}\n");
        out
    }

    /// Source text of a predicate or assert node's expression.
    pub fn expr_text(&self, n: NodeId) -> String {
        self.node(n).expr.as_ref().map(expr_to_string).unwrap_or_default()
    }

    /// `e` resolved against this graph's variables; `None` if it mentions
    /// an undeclared one.
    pub fn compile(&self, e: &Expr) -> Option<CExpr> {
        let vars: BTreeMap<String, VarId> =
            self.vars.iter().enumerate().map(|(i, v)| (v.clone(), VarId(i as u32))).collect();
        e.free_vars().iter().all(|v| vars.contains_key(v)).then(|| CExpr::compile(e, &vars))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn cfg(src: &str) -> Cfg {
        Cfg::build(&parse(src).unwrap())
    }

    #[test]
    fn straight_line_chain() {
        let g = cfg("int a; int b; int c; a = 1; b = 2; c = 3; assert(a < c);");
        // entry, 3 decls, 3 assigns, assert, exit
        assert_eq!(g.len(), 9);
        let assigns = g.node_ids().filter(|&n| matches!(g.kind(n), NodeKind::Assign { .. })).count();
        assert_eq!(assigns, 6);
        for n in g.node_ids().filter(|&n| n != g.exit) {
            assert_eq!(g.succs(n).len(), 1);
        }
        assert_eq!(g.succs(g.assert_node), &[(g.exit, EdgeLabel::Fall)]);
        assert!(g.preds(g.entry).is_empty());
        assert!(g.succs(g.exit).is_empty());
    }

    #[test]
    fn while_shape() {
        let g = cfg("int x; while (x < 3) { x = x + 1; } assert(x == 3);");
        let header = g.node_at(&StmtPath::top(0)).unwrap();
        let body = g.succ_on(header, EdgeLabel::True).unwrap();
        assert!(matches!(g.kind(body), NodeKind::Assign { .. }));
        assert_eq!(g.succ_on(header, EdgeLabel::False), Some(g.assert_node));
        let loops = g.natural_loops();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].back_edges, [(body, header)]);
        assert_eq!(loops[0].body, BTreeSet::from([header, body]));
    }

    #[test]
    fn predicates_have_two_labelled_edges() {
        let g = cfg("int x; if (x > 0) { } else { } while (x > 9) { } assert(true);");
        for p in g.predicates() {
            let labels: BTreeSet<EdgeLabel> = g.succs(p).iter().map(|(_, l)| *l).collect();
            assert_eq!(labels, BTreeSet::from([EdgeLabel::True, EdgeLabel::False]));
        }
    }

    #[test]
    fn statements_after_assert_are_dropped() {
        let g = cfg("int x; assert(x == 0); x = 1;");
        assert_eq!(g.len(), 4);
        for n in g.node_ids() {
            assert!(g.reachable_from(g.entry, None).contains(&n));
            assert!(g.reaching(g.exit, None).contains(&n));
        }
    }

    #[test]
    fn chain_post_dominance() {
        let g = cfg("int a; a = 1; a = 2; a = 3; assert(a == 3);");
        let pdom = g.post_dominators();
        let first = g.node_at(&StmtPath::top(0)).unwrap();
        let later: BTreeSet<NodeId> = [1, 2, 3].iter().map(|&i| g.node_at(&StmtPath::top(i)).unwrap()).collect();
        assert!(pdom[first.index()].is_superset(&later));
        assert!(g.node_ids().all(|n| pdom[n.index()].contains(&g.exit)));
    }

    #[test]
    fn diamond_join() {
        let g = cfg("int x; int y; if (x > 0) { y = 1; } else { y = 2; } x = y; assert(x > 0);");
        let pdom = g.post_dominators();
        let pred = g.node_at(&StmtPath::top(0)).unwrap();
        let join = g.node_at(&StmtPath::top(1)).unwrap();
        let then_arm = g.succ_on(pred, EdgeLabel::True).unwrap();
        let else_arm = g.succ_on(pred, EdgeLabel::False).unwrap();
        assert!(pdom[pred.index()].contains(&join));
        assert!(!pdom[pred.index()].contains(&then_arm));
        assert!(!pdom[pred.index()].contains(&else_arm));
        let ncpd = g.nearest_common_post_dominator(&pdom, &BTreeSet::from([then_arm, else_arm]));
        assert_eq!(ncpd, join);
        assert_eq!(g.nearest_common_post_dominator(&pdom, &BTreeSet::from([then_arm])), then_arm);
        let ipdom = g.immediate_post_dominators(&pdom);
        assert_eq!(ipdom[pred.index()], Some(join));
        assert_eq!(ipdom[g.exit.index()], None);
    }

    #[test]
    fn control_dependence_basic() {
        let g = cfg("int x; if (x > 0) { x = 1; } while (x < 5) { x = x + 1; } assert(x > 0);");
        let pdom = g.post_dominators();
        let cd = g.control_dependence(&pdom);
        let iff = g.node_at(&StmtPath::top(0)).unwrap();
        let inside = g.succ_on(iff, EdgeLabel::True).unwrap();
        let header = g.node_at(&StmtPath::top(1)).unwrap();
        let body = g.succ_on(header, EdgeLabel::True).unwrap();
        assert_eq!(cd[inside.index()], BTreeSet::from([iff]));
        assert_eq!(cd[body.index()], BTreeSet::from([header]));
        assert!(cd[header.index()].contains(&header));
        assert!(cd[g.assert_node.index()].is_empty());
    }

    #[test]
    fn nested_loops_form_forest() {
        let g = cfg("int i; int j; while (i < 3) { j = 0; while (j < 2) { j = j + 1; } i = i + 1; } assert(i == 3);");
        let loops = g.natural_loops();
        assert_eq!(loops.len(), 2);
        let outer = loops.iter().position(|l| l.parent.is_none()).unwrap();
        let inner = 1 - outer;
        assert_eq!(loops[inner].parent, Some(outer));
        assert!(loops[outer].body.is_superset(&loops[inner].body));
        let dom = g.dominators();
        for l in &loops {
            assert!(l.body.iter().all(|n| dom[n.index()].contains(&l.header)));
        }
    }

    #[test]
    fn dot_has_labels_and_clusters() {
        let g = cfg("int x; while (x < 3) { x = x + 1; } assert(x == 3);");
        let dot = g.to_dot();
        assert!(dot.contains("subgraph cluster_loop_"));
        assert!(dot.contains("[label=\"true\"]"));
        assert!(dot.contains(": predicate: while (x < 3)"));
    }
}
