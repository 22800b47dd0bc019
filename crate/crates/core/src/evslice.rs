//! Extended value-impacting nodes, value bases and value-changing loops.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::cfg::{Cfg, Loop, NodeId, NodeKind, VarId};
use crate::dataflow::DefUse;

/// The extended value slice of `<vars, target>`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evi {
    pub vars: BTreeSet<VarId>,
    pub target: NodeId,
    pub nodes: BTreeSet<NodeId>,
    pub value_base: BTreeSet<VarId>,
}

/// Shared, immutable facts used by every EVI computation on one graph.
pub struct EviContext<'a> {
    pub g: &'a Cfg,
    pub du: &'a DefUse,
    /// Predicates eligible for conditions 3 and 4 (normally the sliced ones).
    pub predicates: BTreeSet<NodeId>,
    tcd: Vec<BTreeSet<NodeId>>,
}

impl<'a> EviContext<'a> {
    pub fn new(g: &'a Cfg, du: &'a DefUse, predicates: BTreeSet<NodeId>) -> Self {
        let pdom = g.post_dominators();
        let tcd = g.transitive_control(&g.control_dependence(&pdom));
        EviContext { g, du, predicates, tcd }
    }

    /// Predicates transitively controlling `n`.
    pub fn controllers(&self, n: NodeId) -> &BTreeSet<NodeId> {
        &self.tcd[n.index()]
    }
}

struct DuCache<'c, 'a> {
    ctx: &'c EviContext<'a>,
    memo: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

impl DuCache<'_, '_> {
    fn of(&mut self, t: NodeId) -> &BTreeSet<NodeId> {
        let ctx = self.ctx;
        self.memo.entry(t).or_insert_with(|| ctx.du.du_of_node(ctx.g, t))
    }
}

/// The first EVI nodes met on paths from `start` that end at the first
/// occurrence of `target`; `None` marks a path meeting no EVI node.
fn first_impacting(
    g: &Cfg,
    start: NodeId,
    c: NodeId,
    target: NodeId,
    evi: &BTreeSet<NodeId>,
    reaches_target: &BTreeSet<NodeId>,
) -> BTreeSet<Option<NodeId>> {
    let mut found = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut work = alloc::vec![start];
    while let Some(n) = work.pop() {
        if !reaches_target.contains(&n) || !seen.insert(n) {
            continue;
        }
        if n == target {
            found.insert(None);
        } else if n != c && evi.contains(&n) {
            found.insert(Some(n));
        } else {
            work.extend(g.succs(n).iter().map(|&(s, _)| s));
        }
    }
    found
}

/// Whether the branch taken at `c` changes which EVI node is met first.
fn diverges(g: &Cfg, c: NodeId, target: NodeId, evi: &BTreeSet<NodeId>, reaches_target: &BTreeSet<NodeId>) -> bool {
    let succs = g.succs(c);
    if succs.len() != 2 || succs[0].0 == succs[1].0 {
        return false;
    }
    let a = first_impacting(g, succs[0].0, c, target, evi, reaches_target);
    let b = first_impacting(g, succs[1].0, c, target, evi, reaches_target);
    !a.is_empty() && !b.is_empty() && a != b
}

/// Least fixed point of the four extended value-impacting conditions for
/// `<vars, target>`. The target node itself is never a member.
pub fn extended_value_impacting(ctx: &EviContext<'_>, vars: &BTreeSet<VarId>, target: NodeId) -> Evi {
    let g = ctx.g;
    let mut cache = DuCache { ctx, memo: BTreeMap::new() };
    let mut nodes: BTreeSet<NodeId> = ctx.du.du_closure(g, vars, target);
    nodes.remove(&target);
    let reaches_target = g.reaching(target, None);
    loop {
        let mut added = false;
        let members: Vec<NodeId> = nodes.iter().copied().collect();
        for t in &members {
            for d in cache.of(*t).clone() {
                if d != target && nodes.insert(d) {
                    added = true;
                }
            }
        }
        for &c in &ctx.predicates {
            if c == target || nodes.contains(&c) {
                continue;
            }
            let by_divergence = diverges(g, c, target, &nodes, &reaches_target);
            let by_sharing = !by_divergence && ctx.controllers(target).contains(&c) && {
                let mine = cache.of(c).clone();
                let members: Vec<NodeId> = nodes.iter().copied().filter(|&t| t != c).collect();
                members.into_iter().any(|t| !cache.of(t).is_disjoint(&mine))
            };
            if by_divergence || by_sharing {
                nodes.insert(c);
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    let value_base = value_base_of(g, &nodes);
    Evi { vars: vars.clone(), target, nodes, value_base }
}

/// Variables whose `input()` or `*` definitions belong to the slice: the
/// entry values the slice's result is a function of.
pub fn value_base_of(g: &Cfg, nodes: &BTreeSet<NodeId>) -> BTreeSet<VarId> {
    nodes
        .iter()
        .filter_map(|&n| match g.kind(n) {
            NodeKind::Input { var } | NodeKind::Nondet { var } => Some(*var),
            _ => None,
        })
        .collect()
}

pub fn value_base(evi: &Evi) -> &BTreeSet<VarId> {
    &evi.value_base
}

/// EVI members both inside and outside the loop body.
pub fn is_value_changing(evi: &Evi, l: &Loop) -> bool {
    let inside = evi.nodes.iter().any(|n| l.contains(*n));
    let outside = evi.nodes.iter().any(|n| !l.contains(*n));
    inside && outside
}

/// The alternative reading: some member inside and every member inside.
pub fn is_value_changing_subset_reading(evi: &Evi, l: &Loop) -> bool {
    !evi.nodes.is_empty() && evi.nodes.iter().all(|n| l.contains(*n))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopValueProfile {
    pub header: NodeId,
    pub changes_x: bool,
    pub changes_y: bool,
    pub vb_loop: BTreeSet<VarId>,
}

/// Loops enclosing the target for which the EVI set is value-changing.
pub fn value_changing_loops<'l>(evi: &Evi, loops: &'l [Loop]) -> Vec<&'l Loop> {
    loops.iter().filter(|l| l.contains(evi.target) && is_value_changing(evi, l)).collect()
}

/// One profile per loop enclosing the shared target of `x` and `y`.
pub fn loop_profiles(ctx: &EviContext<'_>, x: &Evi, y: &Evi, loops: &[Loop]) -> Vec<LoopValueProfile> {
    loops
        .iter()
        .filter(|l| l.contains(x.target))
        .map(|l| {
            let header_evi = extended_value_impacting(ctx, &ctx.g.uses(l.header), l.header);
            LoopValueProfile {
                header: l.header,
                changes_x: is_value_changing(x, l),
                changes_y: is_value_changing(y, l),
                vb_loop: header_evi.value_base,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::StmtPath;
    use crate::dataflow::{backward_slice, reaching_definitions};
    use crate::parser::parse;

    fn evi_of(src: &str, var: &str, at: StmtPath) -> (Cfg, Evi) {
        let p = parse(src).unwrap();
        let g = Cfg::build(&p);
        let du = reaching_definitions(&g);
        let slice = backward_slice(&g, &du);
        let preds = g.predicates().filter(|n| slice.contains(n)).collect();
        let ctx = EviContext::new(&g, &du, preds);
        let target = g.node_at(&at).unwrap();
        let evi = extended_value_impacting(&ctx, &BTreeSet::from([g.var_id(var).unwrap()]), target);
        (g.clone(), evi)
    }

    #[test]
    fn straight_line_is_def_chain() {
        let (g, evi) = evi_of(
            "int a = input(); int x; int u; x = a; u = 3; x = x + 1; skip; assert(x > u);",
            "x",
            StmtPath::top(3),
        );
        let expected: BTreeSet<NodeId> =
            [NodeId(1), g.node_at(&StmtPath::top(0)).unwrap(), g.node_at(&StmtPath::top(2)).unwrap()].into();
        assert_eq!(evi.nodes, expected);
        assert_eq!(evi.value_base, BTreeSet::from([g.var_id("a").unwrap()]));
    }

    #[test]
    fn value_changing_follows_inside_and_outside() {
        let src = "int n = input(); int i; int x; x = 0; while (i < n) { x = x + 1; skip; i = i + 1; } assert(x >= 0);";
        let (g, evi) = evi_of(src, "x", StmtPath::new(crate::ast::BlockPath::top().child(1, crate::ast::Arm::Body), 1));
        let loops = g.natural_loops();
        assert!(is_value_changing(&evi, &loops[0]));
        assert_eq!(value_changing_loops(&evi, &loops).len(), 1);

        let src = "int n = input(); int i; int x = input(); while (i < n) { skip; i = i + 1; } assert(x >= 0);";
        let (g, evi) = evi_of(src, "x", StmtPath::new(crate::ast::BlockPath::top().child(0, crate::ast::Arm::Body), 0));
        assert!(!is_value_changing(&evi, &g.natural_loops()[0]));
    }

    #[test]
    fn divergent_predicate_is_included() {
        let src = "int a = input(); int x; if (a > 0) { x = 1; } else { x = 2; } skip; assert(x > 0);";
        let (g, evi) = evi_of(src, "x", StmtPath::top(1));
        assert!(evi.nodes.contains(&g.node_at(&StmtPath::top(0)).unwrap()));
        assert!(evi.value_base.contains(&g.var_id("a").unwrap()));
    }
}
