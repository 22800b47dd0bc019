//! Predicate sites, their computing points, the X/Y/Z sets and the four
//! sufficient criteria for a predicate to be irrelevant to the property.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ast::{Expr, Program, Stmt, StmtPath};
use crate::cfg::{AstLink, Cfg, NodeId, VarId};
use crate::dataflow::{backward_slice, live_variables, reaching_definitions, DefUse, LivenessQuery};
use crate::evslice::{
    extended_value_impacting, is_value_changing, is_value_changing_subset_reading, loop_profiles, Evi, EviContext,
    LoopValueProfile,
};
use crate::pretty::expr_to_string;
use crate::transform;

/// A branch predicate `C` together with its computing point `Ĉ`.
///
/// `program` is the source program with a `skip;` inserted at `Ĉ`; `cfg`,
/// `predicate` and `computing_point` refer to that program. The predicate's
/// node id in the unmodified program is kept as `original_predicate`.
#[derive(Clone, Debug)]
pub struct PredicateSite {
    pub original_predicate: NodeId,
    pub predicate: NodeId,
    pub predicate_path: StmtPath,
    pub computing_point: NodeId,
    pub computing_path: StmtPath,
    pub y_vars: BTreeSet<VarId>,
    pub cond: Expr,
    pub program: Program,
    pub cfg: Cfg,
}

impl PredicateSite {
    pub fn text(&self) -> String {
        expr_to_string(&self.cond)
    }

    pub fn y_names(&self) -> BTreeSet<String> {
        names(&self.cfg, &self.y_vars)
    }

    /// The program without the computing-point marker.
    pub fn source_program(&self) -> Program {
        let mut p = self.program.clone();
        p.remove(&self.computing_path, 1);
        p
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SiteError {
    #[error("predicate uses no variables")]
    NoVariables,
    #[error("no definition of {0} reaches the predicate")]
    NoDefinition(String),
    #[error("loop condition depends on values defined inside its own loop")]
    LoopCarried,
    #[error("computing point is unreachable")]
    UnreachableComputingPoint,
    #[error("definition of {var} at node {node} reaches the predicate without passing the computing point")]
    Bypassed { var: String, node: NodeId },
    #[error("assert is unreachable from the computing point")]
    Unreachable,
}

#[derive(Clone, Debug)]
pub struct SkippedSite {
    pub predicate: NodeId,
    pub text: String,
    pub error: SiteError,
}

#[derive(Clone, Debug, Default)]
pub struct SiteScan {
    pub sites: Vec<PredicateSite>,
    pub skipped: Vec<SkippedSite>,
}

pub fn names(g: &Cfg, vars: &BTreeSet<VarId>) -> BTreeSet<String> {
    vars.iter().map(|&v| String::from(g.var_name(v))).collect()
}

/// Where the computing point of `defs` goes in the source of `p`.
fn computing_point_location(p: &Program, g: &Cfg, defs: &BTreeSet<NodeId>) -> StmtPath {
    let pdom = g.post_dominators();
    let m = g.nearest_common_post_dominator(&pdom, defs);
    let at = match &g.node(m).link {
        AstLink::Stmt(path) if defs.contains(&m) => StmtPath::new(path.block.clone(), path.index + 1),
        AstLink::Stmt(path) => {
            let loop_with_def = matches!(p.stmt(path), Some(Stmt::While { .. }))
                && g.natural_loops().iter().any(|l| l.header == m && defs.iter().any(|d| l.contains(*d)));
            if loop_with_def {
                StmtPath::new(path.block.clone(), path.index + 1)
            } else {
                path.clone()
            }
        }
        // a point inside the declaration prelude moves to the start of the body
        AstLink::Decl(_) | AstLink::Entry => StmtPath::top(0),
        AstLink::Exit => StmtPath::top(p.body.len()),
    };
    at
}

/// True when some path from `d` reaches `target` avoiding `cp` and every
/// other definition of the variable `d` defines.
fn bypasses(g: &Cfg, d: NodeId, target: NodeId, cp: NodeId) -> bool {
    let var = g.def(d);
    let mut seen = BTreeSet::new();
    let mut work: Vec<NodeId> = g.succs(d).iter().map(|&(s, _)| s).collect();
    while let Some(n) = work.pop() {
        if n == cp || !seen.insert(n) {
            continue;
        }
        if n == target {
            return true;
        }
        if g.def(n) == var {
            continue;
        }
        work.extend(g.succs(n).iter().map(|&(s, _)| s));
    }
    false
}

fn site_for(p: &Program, g: &Cfg, du: &DefUse, c: NodeId) -> Result<PredicateSite, SiteError> {
    let cond = g.node(c).expr.clone().expect("predicate nodes carry their condition");
    let AstLink::Stmt(pred_path) = g.node(c).link.clone() else { unreachable!("predicates come from statements") };
    let y_vars = g.uses(c);
    if y_vars.is_empty() {
        return Err(SiteError::NoVariables);
    }
    for &v in &y_vars {
        if du.reaching(c, v).next().is_none() {
            return Err(SiteError::NoDefinition(g.var_name(v).into()));
        }
    }
    let defs = du.reaching_any(c, &y_vars);
    let loops = g.natural_loops();
    if loops.iter().any(|l| l.header == c && defs.iter().any(|d| l.contains(*d))) {
        return Err(SiteError::LoopCarried);
    }
    let at = computing_point_location(p, g, &defs);

    let mut program = p.clone();
    program.insert(&at, alloc::vec![Stmt::Skip]);
    let predicate_path = pred_path.after_insert(&at, 1);
    let cfg = Cfg::build(&program);
    let computing_point = cfg.node_at(&at).ok_or(SiteError::UnreachableComputingPoint)?;
    let predicate = cfg.node_at(&predicate_path).expect("predicate survives the insertion");

    let ndu = reaching_definitions(&cfg);
    for d in ndu.reaching_any(predicate, &y_vars) {
        if bypasses(&cfg, d, predicate, computing_point) || d == computing_point {
            let var = cfg.def(d).map(|v| String::from(cfg.var_name(v))).unwrap_or_default();
            return Err(SiteError::Bypassed { var, node: d });
        }
    }
    if !cfg.reachable_from(computing_point, Some(computing_point)).contains(&cfg.assert_node) {
        return Err(SiteError::Unreachable);
    }
    Ok(PredicateSite {
        original_predicate: c,
        predicate,
        predicate_path,
        computing_point,
        computing_path: at,
        y_vars,
        cond,
        program,
        cfg,
    })
}

/// One site per sliced `if`/`while` predicate, in node order. Predicates whose
/// computing point cannot be placed soundly are reported as skipped.
pub fn predicate_sites(p: &Program, g: &Cfg, du: &DefUse) -> SiteScan {
    let slice = backward_slice(g, du);
    let mut scan = SiteScan::default();
    for c in g.predicates().filter(|n| slice.contains(n)) {
        match site_for(p, g, du, c) {
            Ok(site) => scan.sites.push(site),
            Err(error) => scan.skipped.push(SkippedSite { predicate: c, text: g.expr_text(c), error }),
        }
    }
    scan
}

/// Facts about the normalized program shared by the X/Z/EVI computations.
pub struct SiteFacts<'s> {
    pub site: &'s PredicateSite,
    pub du: DefUse,
    pub slice: BTreeSet<NodeId>,
}

impl<'s> SiteFacts<'s> {
    pub fn new(site: &'s PredicateSite) -> Self {
        let du = reaching_definitions(&site.cfg);
        let slice = backward_slice(&site.cfg, &du);
        SiteFacts { site, du, slice }
    }

    /// Nodes outside the slice, plus `extra`, as identity transfers.
    fn identity(&self, extra: &[NodeId]) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.site.cfg.node_ids().filter(|n| !self.slice.contains(n)).collect();
        out.extend(extra.iter().copied());
        out
    }

    pub fn sliced_predicates(&self) -> BTreeSet<NodeId> {
        self.site.cfg.predicates().filter(|n| self.slice.contains(n)).collect()
    }
}

/// Live variables at `Ĉ` over the paths `Ĉ -> A` that do not revisit `Ĉ`,
/// with `C` treated as identity.
pub fn compute_x(facts: &SiteFacts<'_>) -> BTreeSet<VarId> {
    let site = facts.site;
    let g = &site.cfg;
    let cp = site.computing_point;
    let a = g.assert_node;
    let from_cp = g.reachable_from(cp, Some(cp));
    let to_a = g.reaching(a, Some(cp));
    let query = LivenessQuery {
        seed: Some((a, g.uses(a))),
        identity: facts.identity(&[site.predicate]),
        region: Some(from_cp.intersection(&to_a).copied().collect()),
        barrier: Some((cp, BTreeSet::new())),
    };
    live_variables(g, &query).live_out[cp.index()].clone()
}

/// Result of the cyclic liveness behind C2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZSet {
    pub vars: BTreeSet<VarId>,
    /// Whether `C` itself steers something on the `Ĉ -> Ĉ` cycles, in which
    /// case its variables are part of `vars`.
    pub predicate_relevant: bool,
}

/// Live variables at `Ĉ` after going round every `Ĉ -> Ĉ` cycle, starting
/// from `x` at `Ĉ`.
///
/// `C` is an identity node unless it transitively controls, on the cycle, a
/// definition live after it, the assert, or a possibly trapping division.
pub fn compute_z(facts: &SiteFacts<'_>, x: &BTreeSet<VarId>) -> ZSet {
    let site = facts.site;
    let g = &site.cfg;
    let cp = site.computing_point;
    let c = site.predicate;
    let from_cp = g.reachable_from(cp, Some(cp));
    let to_cp = g.reaching(cp, Some(cp));
    let region: BTreeSet<NodeId> = from_cp.intersection(&to_cp).copied().collect();
    let query = LivenessQuery {
        seed: None,
        identity: facts.identity(&[c, g.assert_node]),
        region: Some(region.clone()),
        barrier: Some((cp, x.clone())),
    };
    let live = live_variables(g, &query);
    let mut vars = live.live_out[cp.index()].clone();

    let mut predicate_relevant = false;
    if region.contains(&c) {
        let tcd = g.transitive_control(&g.control_dependence(&g.post_dominators()));
        let controlled = |n: NodeId| tcd[n.index()].contains(&c);
        predicate_relevant = controlled(g.assert_node)
            || region.iter().any(|&n| {
                controlled(n)
                    && (g.def(n).is_some_and(|v| live.live_out[n.index()].contains(&v))
                        || g.node(n).expr.as_ref().is_some_and(Expr::has_unsafe_division))
            });
    }
    if predicate_relevant {
        vars.extend(site.y_vars.iter().copied());
    }
    ZSet { vars, predicate_relevant }
}

/// A criterion verdict; `witness` is nonempty exactly when it fails.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Criterion {
    pub holds: bool,
    pub witness: Vec<String>,
}

impl Criterion {
    fn from_witness(witness: Vec<String>) -> Criterion {
        Criterion { holds: witness.is_empty(), witness }
    }
}

#[derive(Clone, Debug)]
pub struct CriteriaReport {
    pub site: PredicateSite,
    pub x_vars: BTreeSet<VarId>,
    pub z: ZSet,
    pub evi_x: Evi,
    pub evi_y: Evi,
    pub loops: Vec<LoopValueProfile>,
    pub c1: Criterion,
    pub c2: Criterion,
    pub c3: Criterion,
    pub c4: Criterion,
    /// C4 evaluated with the subset reading of value-changing loops.
    pub c4_subset_reading: bool,
    pub itp: bool,
    pub slice_size: usize,
    /// Loop nodes that drop out of the slice once `C` is abstracted.
    pub payoff: usize,
    /// `Ĉ` is in a loop, or the computations feeding `Y` contain one.
    pub candidate: bool,
}

impl CriteriaReport {
    pub fn x_names(&self) -> BTreeSet<String> {
        names(&self.site.cfg, &self.x_vars)
    }

    pub fn z_names(&self) -> BTreeSet<String> {
        names(&self.site.cfg, &self.z.vars)
    }

    pub fn vb_x_names(&self) -> BTreeSet<String> {
        names(&self.site.cfg, &self.evi_x.value_base)
    }

    pub fn vb_y_names(&self) -> BTreeSet<String> {
        names(&self.site.cfg, &self.evi_y.value_base)
    }
}

fn overlap(g: &Cfg, a: &BTreeSet<VarId>, b: &BTreeSet<VarId>) -> Vec<String> {
    a.intersection(b).map(|&v| String::from(g.var_name(v))).collect()
}

fn loop_nodes_in_slice(g: &Cfg) -> usize {
    let du = reaching_definitions(g);
    let slice = backward_slice(g, &du);
    let loops = g.natural_loops();
    slice.iter().filter(|n| loops.iter().any(|l| l.contains(**n))).count()
}

pub fn evaluate_criteria(site: &PredicateSite) -> CriteriaReport {
    let facts = SiteFacts::new(site);
    let g = &site.cfg;
    let cp = site.computing_point;
    let x = compute_x(&facts);
    let z = compute_z(&facts, &x);
    let ctx = EviContext::new(g, &facts.du, facts.sliced_predicates());
    let evi_x = extended_value_impacting(&ctx, &x, cp);
    let evi_y = extended_value_impacting(&ctx, &site.y_vars, cp);
    let loops = g.natural_loops();
    let enclosing: Vec<_> = loops.iter().filter(|l| l.contains(cp)).collect();

    let c1 = Criterion::from_witness(overlap(g, &x, &site.y_vars));
    let c2 = Criterion::from_witness(overlap(g, &z.vars, &site.y_vars));
    let c3 = Criterion::from_witness(overlap(g, &evi_x.value_base, &evi_y.value_base));
    let c4 = Criterion::from_witness(
        enclosing
            .iter()
            .filter(|l| is_value_changing(&evi_x, l) && is_value_changing(&evi_y, l))
            .map(|l| format!("loop@{}", l.header))
            .collect(),
    );
    let settled = |e: &Evi, l: &crate::cfg::Loop| !is_value_changing_subset_reading(e, l);
    let c4_subset_reading = enclosing.iter().all(|l| settled(&evi_x, l) || settled(&evi_y, l));
    let itp = c1.holds && c2.holds && c3.holds && c4.holds;

    let abstracted = transform::abstract_program(site);
    let payoff = loop_nodes_in_slice(g).saturating_sub(loop_nodes_in_slice(&Cfg::build(&abstracted.abstract_program)));
    let candidate = !enclosing.is_empty() || evi_y.nodes.iter().any(|n| loops.iter().any(|l| l.contains(*n)));

    CriteriaReport {
        site: site.clone(),
        x_vars: x,
        z,
        loops: loop_profiles(&ctx, &evi_x, &evi_y, &loops),
        evi_x,
        evi_y,
        c1,
        c2,
        c3,
        c4,
        c4_subset_reading,
        itp,
        slice_size: facts.slice.len(),
        payoff,
        candidate,
    }
}

/// Criteria reports for every site of `p`, in predicate node order.
pub struct Analysis {
    pub cfg: Cfg,
    pub reports: Vec<CriteriaReport>,
    pub skipped: Vec<SkippedSite>,
}

pub fn analyze(p: &Program) -> Analysis {
    let g = Cfg::build(p);
    let du = reaching_definitions(&g);
    let scan = predicate_sites(p, &g, &du);
    let reports = scan.sites.iter().map(evaluate_criteria).collect();
    Analysis { cfg: g, reports, skipped: scan.skipped }
}

/// Indices of candidate reports, best loop-elimination payoff first.
pub fn rank_candidates(reports: &[CriteriaReport]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..reports.len()).filter(|&i| reports[i].candidate).collect();
    order.sort_by_key(|&i| (core::cmp::Reverse(reports[i].payoff), reports[i].site.original_predicate));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn only_site(src: &str) -> PredicateSite {
        let p = parse(src).unwrap();
        let g = Cfg::build(&p);
        let du = reaching_definitions(&g);
        let mut scan = predicate_sites(&p, &g, &du);
        assert!(scan.skipped.iter().all(|s| s.error == SiteError::LoopCarried), "{:?}", scan.skipped);
        assert_eq!(scan.sites.len(), 1);
        scan.sites.remove(0)
    }

    #[test]
    fn singleton_def_places_point_after_it() {
        let site = only_site("int x = input(); int w; x = x + 1; if (x > 0) { w = 1; } assert(w >= 0);");
        assert_eq!(site.computing_path, StmtPath::top(1));
        assert_eq!(site.program.body[1], Stmt::Skip);
        assert_eq!(site.predicate_path, StmtPath::top(2));
    }

    #[test]
    fn prelude_point_moves_to_body_start() {
        let site = only_site("int x = input(); int w; if (x > 0) { w = 1; } assert(w >= 0);");
        assert_eq!(site.computing_path, StmtPath::top(0));
    }

    #[test]
    fn loop_defs_put_point_after_loop() {
        let site = only_site(
            "int n = input(); int i; int t; int w; while (i < n) { t = t + i; i = i + 1; } if (t > 2) { w = 1; } assert(w >= 0);",
        );
        assert_eq!(site.computing_path, StmtPath::top(1));
        let facts = SiteFacts::new(&site);
        assert!(compute_z(&facts, &compute_x(&facts)).vars.is_empty());
    }

    #[test]
    fn x_direct_assert_after_point() {
        let site =
            only_site("int a = input(); int b = input(); int y = input(); if (y > 0) { a = b; } assert(a == b);");
        let facts = SiteFacts::new(&site);
        let x = names(&site.cfg, &compute_x(&facts));
        assert_eq!(x, ["a", "b"].iter().map(|s| String::from(*s)).collect());
    }

    #[test]
    fn x_keeps_variable_feeding_assert() {
        let site = only_site("int y = input(); int a; if (y > 0) { a = y; } assert(a >= 0);");
        let facts = SiteFacts::new(&site);
        assert!(compute_x(&facts).contains(&site.cfg.var_id("y").unwrap()));
        assert!(!evaluate_criteria(&site).c1.holds);
    }

    #[test]
    fn z_around_loop() {
        let src = "int n = input(); int y = input(); int i; int a; int w;
            while (i < n) { skip; a = a + i; if (y > 0) { w = 1; } i = i + 1; }
            assert(a >= 0);";
        let p = parse(src).unwrap();
        let g = Cfg::build(&p);
        let du = reaching_definitions(&g);
        let scan = predicate_sites(&p, &g, &du);
        // `y > 0` is not in the slice; only the loop header is a site
        assert!(scan.sites.iter().all(|s| s.text() != "y > 0"));
        let x_site = only_site(
            "int n = input(); int y; int i; int a;
             while (i < n) { y = input(); a = a + i; if (y > 0) { a = a + 1; } i = i + 1; }
             assert(a >= 0);",
        );
        let facts = SiteFacts::new(&x_site);
        let x = compute_x(&facts);
        let z = compute_z(&facts, &x);
        let has = |v: &str| z.vars.contains(&x_site.cfg.var_id(v).unwrap());
        assert!(has("a") && has("i") && has("n") && has("y"));
        assert!(z.predicate_relevant);
        assert!(!evaluate_criteria(&x_site).c2.holds);
    }

    #[test]
    fn witnesses_match_verdicts() {
        let site = only_site(
            "int z = input(); int x; int y; int w; x = z; y = z; if (y > 0) { w = x; } else { w = 1; } assert(w > 0);",
        );
        let r = evaluate_criteria(&site);
        assert!(r.c1.holds && r.c1.witness.is_empty());
        assert!(!r.c3.holds);
        assert_eq!(r.c3.witness, ["z"]);
        assert!(!r.itp);
    }
}
