//! The abstract program `P′` and the auxiliary problems of the checking
//! workflow: `P̂`, `P̃` and the weakest-precondition problem.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::ast::{Expr, Program, Stmt, StmtPath};
use crate::cfg::{AstLink, Cfg, EdgeLabel, NodeId, NodeKind};
use crate::checker::ViolatingSuffix;
use crate::dataflow::{backward_slice, reaching_definitions};
use crate::itp::PredicateSite;

/// `P′`: the site's program with `y = *;` for every `y ∈ Y` just before `Ĉ`.
#[derive(Clone, Debug)]
pub struct AbstractionResult {
    pub abstract_program: Program,
    pub cfg: Cfg,
    /// Where the nondet block starts; `Ĉ` follows it.
    pub insert_at: StmtPath,
    pub inserted_nodes: Vec<NodeId>,
    pub computing_point: NodeId,
    pub predicate: NodeId,
}

impl AbstractionResult {
    pub fn inserted(&self) -> usize {
        self.inserted_nodes.len()
    }

    /// The site's program: `P′` without the nondet block.
    pub fn strip_nondets(&self) -> Program {
        let mut p = self.abstract_program.clone();
        p.remove(&self.insert_at, self.inserted());
        p
    }

    /// The source program: `P′` without the nondet block and `Ĉ`'s marker.
    pub fn strip(&self) -> Program {
        let mut p = self.abstract_program.clone();
        p.remove(&self.insert_at, self.inserted() + 1);
        p
    }

    /// The node of the site's graph that `n` (a node of `P′`) comes from.
    pub fn to_site_node(&self, n: NodeId, site: &Cfg) -> Option<NodeId> {
        match &self.cfg.node(n).link {
            AstLink::Entry => Some(site.entry),
            AstLink::Exit => Some(site.exit),
            AstLink::Decl(i) => Some(NodeId(1 + *i as u32)),
            AstLink::Stmt(path) => site.node_at(&path.before_insert(&self.insert_at, self.inserted())?),
        }
    }

    /// The node of `P′` for `n`, a node of the site's graph.
    pub fn from_site_node(&self, n: NodeId, site: &Cfg) -> Option<NodeId> {
        match &site.node(n).link {
            AstLink::Entry => Some(self.cfg.entry),
            AstLink::Exit => Some(self.cfg.exit),
            AstLink::Decl(i) => Some(NodeId(1 + *i as u32)),
            AstLink::Stmt(path) => self.cfg.node_at(&path.after_insert(&self.insert_at, self.inserted())),
        }
    }
}

pub fn abstract_program(site: &PredicateSite) -> AbstractionResult {
    let insert_at = site.computing_path.clone();
    let nondets: Vec<Stmt> = site.y_names().into_iter().map(|var| Stmt::Nondet { var }).collect();
    let k = nondets.len();
    let mut p = site.program.clone();
    p.insert(&insert_at, nondets);
    let cfg = Cfg::build(&p);
    let inserted_nodes =
        (0..k).filter_map(|i| cfg.node_at(&StmtPath::new(insert_at.block.clone(), insert_at.index + i))).collect();
    let computing_point =
        cfg.node_at(&site.computing_path.after_insert(&insert_at, k)).expect("the computing point stays reachable");
    let predicate = cfg.node_at(&site.predicate_path.after_insert(&insert_at, k)).expect("predicate stays reachable");
    AbstractionResult { abstract_program: p, cfg, insert_at, inserted_nodes, computing_point, predicate }
}

/// `if (guard) { assert(!guard); }` in place of the marker at `Ĉ`, and the
/// old assert turned into `skip;`. The assert only stops runs that fail it.
fn assert_at_computing_point(site: &PredicateSite, guard: Expr) -> Program {
    let mut p = site.program.clone();
    if let Some(old) = p.assert_path() {
        *p.stmt_mut(&old).expect("assert path is valid") = Stmt::Skip;
    }
    *p.stmt_mut(&site.computing_path).expect("computing point path is valid") = Stmt::If {
        cond: guard.clone(),
        then_block: alloc::vec![Stmt::Assert { cond: Expr::negation(guard) }],
        else_block: Vec::new(),
    };
    p
}

fn set_branch(p: &mut Program, at: &StmtPath, value: bool) {
    match p.stmt_mut(at) {
        Some(Stmt::If { cond, .. } | Stmt::While { cond, .. }) => *cond = Expr::Bool(value),
        _ => unreachable!("predicate path addresses a branch"),
    }
}

/// `C` taking the value `b`, as a guard.
fn is_b(cond: &Expr, b: bool) -> Expr {
    if b {
        cond.clone()
    } else {
        Expr::negation(cond.clone())
    }
}

/// `P̂(b)`: asserts `C == ¬b` at every visit of `Ĉ` (reading the original
/// expression), with `C`'s branch fixed to `¬b` and the old assert removed.
pub fn build_phat(site: &PredicateSite, b: bool) -> Program {
    let mut p = assert_at_computing_point(site, is_b(&site.cond, b));
    set_branch(&mut p, &site.predicate_path, !b);
    p
}

/// `P̃(b)`: the site's program with `C` replaced by the constant `¬b`.
pub fn build_ptilde(site: &PredicateSite, b: bool) -> Program {
    let mut p = site.program.clone();
    set_branch(&mut p, &site.predicate_path, !b);
    p
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WpError {
    #[error("path revisits the computing point")]
    NonlinearPath,
    #[error("path does not end at the assert")]
    NoAssert,
}

/// Precondition at the start of `pi` under which following `pi` makes the
/// assert fail. Reads of `*` and `input()` on the path take the values
/// recorded in the suffix. Nodes outside the assert's backward slice do not
/// constrain ψ, so ψ fixes the path only up to [`sliced_path`]. Only
/// constant folding is applied.
pub fn weakest_precondition(g: &Cfg, pi: &ViolatingSuffix) -> Result<Expr, WpError> {
    let path = &pi.path;
    let (&last, rest) = path.split_last().ok_or(WpError::NoAssert)?;
    if last != g.assert_node {
        return Err(WpError::NoAssert);
    }
    if path.iter().skip(1).any(|&n| n == path[0]) {
        return Err(WpError::NonlinearPath);
    }
    let slice = backward_slice(g, &reaching_definitions(g));
    let assertion = g.node(last).expr.clone().expect("asserts carry their condition");
    let mut phi = Expr::negation(assertion);
    for (i, &n) in rest.iter().enumerate().rev() {
        if !slice.contains(&n) {
            continue;
        }
        let next = path[i + 1];
        match g.kind(n) {
            NodeKind::Assign { var, .. } => {
                let e = g.node(n).expr.as_ref().expect("assignments carry their expression");
                phi = phi.substitute(g.var_name(*var), e);
            }
            NodeKind::Nondet { var } | NodeKind::Input { var } => {
                let value = pi.steps[i].1[var.index()];
                phi = phi.substitute(g.var_name(*var), &Expr::Int(value));
            }
            NodeKind::Predicate { .. } => {
                let succs = g.succs(n);
                if succs.len() == 2 && succs[0].0 != succs[1].0 {
                    let cond = g.node(n).expr.clone().expect("predicates carry their condition");
                    let taken = g.succ_on(n, EdgeLabel::True) == Some(next);
                    phi = Expr::and(is_b(&cond, taken), phi);
                }
            }
            NodeKind::Entry | NodeKind::Exit | NodeKind::Skip | NodeKind::Assert { .. } => {}
        }
    }
    Ok(phi.simplify())
}

/// `path` without the nodes outside `slice`, keeping its first node.
pub fn sliced_path(path: &[NodeId], slice: &BTreeSet<NodeId>) -> Vec<NodeId> {
    path.iter().enumerate().filter(|&(i, n)| i == 0 || slice.contains(n)).map(|(_, &n)| n).collect()
}

/// The site's program asserting `¬ψ` at every visit of `Ĉ`, old assert
/// removed. A violation is a run reaching `Ĉ` in a state satisfying `ψ`.
pub fn build_wp_problem(site: &PredicateSite, psi: &Expr) -> Program {
    assert_at_computing_point(site, psi.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{violating_suffix, CheckConfig, Checker, Verdict};
    use crate::dataflow::reaching_definitions;
    use crate::itp::predicate_sites;
    use crate::parser::parse;
    use crate::pretty::{expr_to_string, pretty_print};

    fn site(src: &str) -> PredicateSite {
        let p = parse(src).unwrap();
        let g = Cfg::build(&p);
        let du = reaching_definitions(&g);
        predicate_sites(&p, &g, &du).sites.remove(0)
    }

    const SRC: &str = "int b = input(); int a = input(); int w; if (a > b) { w = 1; } else { w = 2; } assert(w > 0);";

    #[test]
    fn nondets_alphabetical_and_strip_restores() {
        let s = site(SRC);
        let r = abstract_program(&s);
        assert_eq!(r.abstract_program.body[0], Stmt::Nondet { var: "a".into() });
        assert_eq!(r.abstract_program.body[1], Stmt::Nondet { var: "b".into() });
        assert_eq!(r.abstract_program.body[2], Stmt::Skip);
        assert_eq!(r.strip(), parse(SRC).unwrap());
        assert_eq!(r.strip_nondets(), s.program);
        assert_eq!(r.to_site_node(r.predicate, &s.cfg), Some(s.predicate));
        assert_eq!(r.from_site_node(s.computing_point, &s.cfg), Some(r.computing_point));
        assert_eq!(r.inserted_nodes.len(), 2);
    }

    #[test]
    fn phat_and_ptilde_shape() {
        let s = site(SRC);
        let text = pretty_print(&build_phat(&s, true));
        assert!(text.contains("if (a > b) {\n    assert(!(a > b));"), "{text}");
        assert!(text.contains("if (false)"), "{text}");
        let text = pretty_print(&build_phat(&s, false));
        assert!(text.contains("assert(!(!(a > b)))") || text.contains("assert(!!(a > b))"), "{text}");
        assert!(text.contains("if (true)"), "{text}");
        assert!(pretty_print(&build_ptilde(&s, true)).contains("if (false)"));
    }

    #[test]
    fn wp_of_branch_and_assignment() {
        let src = "int x = input(); int y = input(); skip; if (y > 0) { x = x + 1; } assert(x == y);";
        let p = parse(src).unwrap();
        let c = Checker::new(&p, CheckConfig::default());
        let Verdict::Violated(t) = c.verify() else { panic!() };
        let cp = c.cfg.node_at(&StmtPath::top(0)).unwrap();
        let pred = c.cfg.node_at(&StmtPath::top(1)).unwrap();
        let pi = violating_suffix(&c.cfg, &t, cp, pred).unwrap();
        let psi = weakest_precondition(&c.cfg, &pi).unwrap();
        let expected = if pi.c_outcome == Some(true) { "y > 0 && !(x + 1 == y)" } else { "!(y > 0) && !(x == y)" };
        assert_eq!(expr_to_string(&psi), expected);
    }

    #[test]
    fn wp_problem_constants() {
        let s = site(SRC);
        assert!(Checker::new(&build_wp_problem(&s, &Expr::Bool(false)), CheckConfig::default()).verify().holds());
        let v = Checker::new(&build_wp_problem(&s, &Expr::Bool(true)), CheckConfig::default()).verify();
        assert!(matches!(v, Verdict::Violated(_)));
    }
}
