//! Reaching definitions, def-use closures, live variables and the backward
//! slice with respect to the assert.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::ast::{Program, Stmt, StmtPath};
use crate::cfg::{Cfg, NodeId, VarId};

/// Reaching-definition facts over a [`Cfg`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefUse {
    pub defs: BTreeMap<VarId, BTreeSet<NodeId>>,
    pub reach_in: Vec<BTreeSet<(VarId, NodeId)>>,
    pub reach_out: Vec<BTreeSet<(VarId, NodeId)>>,
}

pub fn reaching_definitions(g: &Cfg) -> DefUse {
    let mut defs: BTreeMap<VarId, BTreeSet<NodeId>> = BTreeMap::new();
    for n in g.node_ids() {
        if let Some(v) = g.def(n) {
            defs.entry(v).or_default().insert(n);
        }
    }
    let mut reach_in = vec![BTreeSet::new(); g.len()];
    let mut reach_out: Vec<BTreeSet<(VarId, NodeId)>> = vec![BTreeSet::new(); g.len()];
    let mut changed = true;
    while changed {
        changed = false;
        for n in g.node_ids() {
            let mut inn = BTreeSet::new();
            for &(p, _) in g.preds(n) {
                inn.extend(reach_out[p.index()].iter().copied());
            }
            let out = match g.def(n) {
                Some(v) => {
                    let mut out: BTreeSet<_> = inn.iter().copied().filter(|&(w, _)| w != v).collect();
                    out.insert((v, n));
                    out
                }
                None => inn.clone(),
            };
            if out != reach_out[n.index()] {
                reach_out[n.index()] = out;
                changed = true;
            }
            reach_in[n.index()] = inn;
        }
    }
    DefUse { defs, reach_in, reach_out }
}

impl DefUse {
    pub fn compute(g: &Cfg) -> DefUse {
        reaching_definitions(g)
    }

    /// Definitions of `v` reaching the entry of `n`.
    pub fn reaching(&self, n: NodeId, v: VarId) -> impl Iterator<Item = NodeId> + '_ {
        self.reach_in[n.index()].iter().filter(move |(w, _)| *w == v).map(|&(_, d)| d)
    }

    /// Definitions of any of `vars` reaching the entry of `n`.
    pub fn reaching_any(&self, n: NodeId, vars: &BTreeSet<VarId>) -> BTreeSet<NodeId> {
        self.reach_in[n.index()].iter().filter(|(w, _)| vars.contains(w)).map(|&(_, d)| d).collect()
    }

    /// `DU(<vars, at>)`: the definitions of `vars` reaching `at`, closed under
    /// "definitions reaching the uses of a member".
    pub fn du_closure(&self, g: &Cfg, vars: &BTreeSet<VarId>, at: NodeId) -> BTreeSet<NodeId> {
        let mut out = BTreeSet::new();
        let mut work: Vec<NodeId> = self.reaching_any(at, vars).into_iter().collect();
        while let Some(d) = work.pop() {
            if out.insert(d) {
                work.extend(self.reaching_any(d, &g.uses(d)));
            }
        }
        out
    }

    /// `DU(LV(t))`: the closure seeded by the variables used at `t`.
    pub fn du_of_node(&self, g: &Cfg, t: NodeId) -> BTreeSet<NodeId> {
        self.du_closure(g, &g.uses(t), t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Liveness {
    pub live_in: Vec<BTreeSet<VarId>>,
    pub live_out: Vec<BTreeSet<VarId>>,
}

/// Parameters of a backward liveness run.
#[derive(Clone, Debug, Default)]
pub struct LivenessQuery {
    /// Extra variables live on entry to the given node.
    pub seed: Option<(NodeId, BTreeSet<VarId>)>,
    /// Nodes that neither use nor define anything.
    pub identity: BTreeSet<NodeId>,
    /// When set, nodes outside the region contribute nothing.
    pub region: Option<BTreeSet<NodeId>>,
    /// The live-in set of this node, as seen by its predecessors, is pinned.
    pub barrier: Option<(NodeId, BTreeSet<VarId>)>,
}

impl LivenessQuery {
    pub fn seeded(node: NodeId, vars: BTreeSet<VarId>) -> LivenessQuery {
        LivenessQuery { seed: Some((node, vars)), ..LivenessQuery::default() }
    }
}

pub fn live_variables(g: &Cfg, q: &LivenessQuery) -> Liveness {
    let n_nodes = g.len();
    let mut live_in = vec![BTreeSet::new(); n_nodes];
    let mut live_out = vec![BTreeSet::new(); n_nodes];
    let inside = |n: NodeId| q.region.as_ref().is_none_or(|r| r.contains(&n));
    let mut changed = true;
    while changed {
        changed = false;
        for n in g.node_ids().rev() {
            if !inside(n) {
                continue;
            }
            let mut out = BTreeSet::new();
            for &(s, _) in g.succs(n) {
                if !inside(s) {
                    continue;
                }
                match &q.barrier {
                    Some((b, pinned)) if *b == s => out.extend(pinned.iter().copied()),
                    _ => out.extend(live_in[s.index()].iter().copied()),
                }
            }
            let mut inn = if q.identity.contains(&n) {
                out.clone()
            } else {
                let def = g.def(n);
                let mut inn: BTreeSet<VarId> = out.iter().copied().filter(|v| Some(*v) != def).collect();
                inn.extend(g.uses(n));
                inn
            };
            if let Some((seed, vars)) = &q.seed {
                if *seed == n {
                    inn.extend(vars.iter().copied());
                }
            }
            if let Some((b, pinned)) = &q.barrier {
                if *b == n {
                    inn = pinned.clone();
                }
            }
            if inn != live_in[n.index()] || out != live_out[n.index()] {
                live_in[n.index()] = inn;
                live_out[n.index()] = out;
                changed = true;
            }
        }
    }
    Liveness { live_in, live_out }
}

/// Nodes the assert depends on through data and (transitive) control dependence.
pub fn backward_slice(g: &Cfg, du: &DefUse) -> BTreeSet<NodeId> {
    let pdom = g.post_dominators();
    let cd = g.control_dependence(&pdom);
    let mut slice = BTreeSet::new();
    let mut work = vec![g.assert_node];
    while let Some(n) = work.pop() {
        if !slice.insert(n) {
            continue;
        }
        work.extend(du.reaching_any(n, &g.uses(n)));
        work.extend(cd[n.index()].iter().copied());
    }
    slice
}

/// `p` with every statement outside `slice` replaced by `skip;`.
pub fn slice_program(p: &Program, g: &Cfg, slice: &BTreeSet<NodeId>) -> Program {
    fn walk(block: &mut [Stmt], path: &crate::ast::BlockPath, g: &Cfg, slice: &BTreeSet<NodeId>) {
        for (i, stmt) in block.iter_mut().enumerate() {
            let at = StmtPath::new(path.clone(), i);
            let kept = g.node_at(&at).is_some_and(|n| slice.contains(&n));
            if !kept {
                *stmt = Stmt::Skip;
                continue;
            }
            match stmt {
                Stmt::If { then_block, else_block, .. } => {
                    walk(then_block, &path.child(i, crate::ast::Arm::Then), g, slice);
                    walk(else_block, &path.child(i, crate::ast::Arm::Else), g, slice);
                }
                Stmt::While { body, .. } => walk(body, &path.child(i, crate::ast::Arm::Body), g, slice),
                _ => {}
            }
        }
    }
    let mut out = p.clone();
    walk(&mut out.body, &crate::ast::BlockPath::top(), g, slice);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::NodeKind;
    use crate::parser::parse;

    fn setup(src: &str) -> (Program, Cfg, DefUse) {
        let p = parse(src).unwrap();
        let g = Cfg::build(&p);
        let du = reaching_definitions(&g);
        (p, g, du)
    }

    #[test]
    fn single_def_reaches() {
        let (_, g, du) = setup("int x; int y; x = 4; y = x; assert(y > 0);");
        let def = g.node_at(&StmtPath::top(0)).unwrap();
        let user = g.node_at(&StmtPath::top(1)).unwrap();
        let x = g.var_id("x").unwrap();
        assert_eq!(du.reaching(user, x).collect::<Vec<_>>(), [def]);
    }

    #[test]
    fn both_arms_reach_join() {
        let (_, g, du) = setup("int c = input(); int x; if (c > 0) { x = 1; } else { x = 2; } assert(x > 0);");
        let x = g.var_id("x").unwrap();
        let reaching: BTreeSet<NodeId> = du.reaching(g.assert_node, x).collect();
        assert_eq!(reaching.len(), 2);
        assert!(reaching.iter().all(|&d| matches!(g.kind(d), NodeKind::Assign { .. })));
    }

    #[test]
    fn du_closure_follows_uses() {
        let (_, g, du) = setup("int a = input(); int b; int c; b = a + 1; c = b * 2; assert(c > 0);");
        let c = g.var_id("c").unwrap();
        let closure = du.du_closure(&g, &BTreeSet::from([c]), g.assert_node);
        // c = b * 2, b = a + 1, a = input()
        assert_eq!(closure.len(), 3);
        assert!(closure.contains(&NodeId(1)));
    }

    #[test]
    fn seed_liveness_reaches_entry() {
        let (_, g, _) = setup("int a; int b = input(); a = b; assert(a > 0);");
        let a = g.var_id("a").unwrap();
        let b = g.var_id("b").unwrap();
        let live = live_variables(&g, &LivenessQuery::seeded(g.assert_node, BTreeSet::from([a])));
        let assign = g.node_at(&StmtPath::top(0)).unwrap();
        assert_eq!(live.live_in[assign.index()], BTreeSet::from([b]));
    }

    #[test]
    fn identity_node_hides_uses() {
        let (_, g, _) = setup("int a = input(); int y = input(); if (y > 0) { skip; } assert(a > 0);");
        let pred = g.node_at(&StmtPath::top(0)).unwrap();
        let y = g.var_id("y").unwrap();
        let plain = live_variables(&g, &LivenessQuery::default());
        assert!(plain.live_in[pred.index()].contains(&y));
        let q = LivenessQuery { identity: BTreeSet::from([pred]), ..LivenessQuery::default() };
        assert!(!live_variables(&g, &q).live_in[pred.index()].contains(&y));
    }

    #[test]
    fn slice_drops_dead_code_and_keeps_controllers() {
        let (p, g, du) = setup(
            "int n = input(); int i; int z; int s; z = 7; while (i < n) { s = s + 1; i = i + 1; } assert(i >= 0);",
        );
        let slice = backward_slice(&g, &du);
        let dead_z = g.node_at(&StmtPath::top(0)).unwrap();
        let header = g.node_at(&StmtPath::top(1)).unwrap();
        assert!(!slice.contains(&dead_z));
        assert!(slice.contains(&header));
        assert!(slice.contains(&g.assert_node));
        let sliced = slice_program(&p, &g, &slice);
        assert_eq!(sliced.body[0], Stmt::Skip);
        let Stmt::While { body, .. } = &sliced.body[1] else { panic!() };
        assert_eq!(body[0], Stmt::Skip);
        assert_ne!(body[1], Stmt::Skip);
    }
}
