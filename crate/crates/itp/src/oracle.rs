//! Brute-force oracles over the checking domain: state sets at the computing
//! point, abstraction soundness, trace-level equivalence and WP validity.

use std::collections::BTreeSet;

use itp_core::cfg::{CExpr, Cfg, EdgeLabel, NodeId, NodeKind, VarId};
use itp_core::checker::{violating_suffix, CheckConfig, Checker, Observer, RunEnd, TerminalStatus, Verdict};
use itp_core::dataflow::{backward_slice, reaching_definitions};
use itp_core::itp::{CriteriaReport, SiteFacts};
use itp_core::transform::{abstract_program, sliced_path, weakest_precondition, AbstractionResult};
use itp_core::Program;

/// Every store seen at `cp`, projected on `vars`, with the value of `cond`
/// in that store (`None` when it traps).
pub fn states_at(checker: &Checker, cp: NodeId, vars: &[VarId], cond: &CExpr) -> BTreeSet<(Vec<i64>, Option<bool>)> {
    struct Collect<'a> {
        cp: NodeId,
        vars: &'a [VarId],
        cond: &'a CExpr,
        out: BTreeSet<(Vec<i64>, Option<bool>)>,
    }
    impl Observer for Collect<'_> {
        fn step(&mut self, n: NodeId, store: &[i64]) {
            if n == self.cp {
                let proj = self.vars.iter().map(|v| store[v.index()]).collect();
                self.out.insert((proj, self.cond.eval(store).ok().map(|x| x != 0)));
            }
        }
    }
    let mut c = Collect { cp, vars, cond, out: BTreeSet::new() };
    checker.explore(&mut c);
    c.out
}

fn predicate_cond(g: &Cfg, c: NodeId) -> CExpr {
    match g.kind(c) {
        NodeKind::Predicate { cond } => cond.clone(),
        _ => unreachable!("sites are predicates"),
    }
}

pub struct SiteOracle<'r> {
    pub report: &'r CriteriaReport,
    pub abs: AbstractionResult,
    pub config: CheckConfig,
}

impl<'r> SiteOracle<'r> {
    pub fn new(report: &'r CriteriaReport, config: CheckConfig) -> Self {
        SiteOracle { report, abs: abstract_program(&report.site), config }
    }

    fn concrete(&self) -> Checker {
        Checker::from_cfg(self.report.site.cfg.clone(), self.config)
    }

    fn abstracted(&self) -> Checker {
        Checker::from_cfg(self.abs.cfg.clone(), self.config)
    }

    fn x(&self) -> Vec<VarId> {
        self.report.x_vars.iter().copied().collect()
    }

    /// `verify(P′)` holds implies `verify(P)` holds.
    pub fn soundness(&self) -> Result<(), String> {
        let abstract_verdict = self.abstracted().verify();
        if !abstract_verdict.holds() {
            return Ok(());
        }
        match self.concrete().verify() {
            Verdict::Holds { .. } => Ok(()),
            v => Err(format!("P' holds but P is {}", v.status())),
        }
    }

    /// X-projections of the states at `Ĉ` agree between `P` and `P′`.
    pub fn projection_at_cp(&self) -> Result<(), String> {
        let site = &self.report.site;
        let cond = predicate_cond(&site.cfg, site.predicate);
        let strip = |s: BTreeSet<(Vec<i64>, Option<bool>)>| s.into_iter().map(|(p, _)| p).collect::<BTreeSet<_>>();
        let concrete = strip(states_at(&self.concrete(), site.computing_point, &self.x(), &cond));
        let abs_cond = predicate_cond(&self.abs.cfg, self.abs.predicate);
        let abstracted = strip(states_at(&self.abstracted(), self.abs.computing_point, &self.x(), &abs_cond));
        if concrete == abstracted {
            Ok(())
        } else {
            let only_p: Vec<_> = concrete.difference(&abstracted).take(3).collect();
            let only_abs: Vec<_> = abstracted.difference(&concrete).take(3).collect();
            Err(format!("state sets differ: only in P {only_p:?}, only in P' {only_abs:?}"))
        }
    }

    /// For each outcome `b` that occurs at `Ĉ` in `P`, the X-projection of
    /// the states where `C` is `b` equals that of all states.
    pub fn projection_on_b(&self) -> Result<(), String> {
        let site = &self.report.site;
        let cond = predicate_cond(&site.cfg, site.predicate);
        let states = states_at(&self.concrete(), site.computing_point, &self.x(), &cond);
        let all: BTreeSet<&Vec<i64>> = states.iter().map(|(p, _)| p).collect();
        for b in [true, false] {
            let sigma_b: BTreeSet<&Vec<i64>> = states.iter().filter(|(_, c)| *c == Some(b)).map(|(p, _)| p).collect();
            if !sigma_b.is_empty() && sigma_b != all {
                let missing: Vec<_> = all.difference(&sigma_b).take(3).collect();
                return Err(format!("b={b}: X-states never paired with C={b}: {missing:?}"));
            }
        }
        Ok(())
    }

    /// If `P′` is violated, `P` has a violating run with the same suffix
    /// node path, or `C` never takes the violating value in `P`. Paths are
    /// compared on the assert's backward slice, i.e. as paths of the sliced
    /// program.
    pub fn irrelevance(&self) -> Result<Irrelevance, String> {
        let Verdict::Violated(t) = self.abstracted().verify() else {
            return Ok(Irrelevance::AbstractHolds);
        };
        let site = &self.report.site;
        let Some(pi) = violating_suffix(&self.abs.cfg, &t, self.abs.computing_point, self.abs.predicate) else {
            let replay = self.concrete().replay(&t.inputs);
            return match replay.violating() {
                Some(_) => Ok(Irrelevance::Bypass),
                None => Err("counterexample bypassing the computing point is not a counterexample of P".into()),
            };
        };
        if !pi.consistent(&self.abs.cfg, self.abs.predicate) {
            return Err("violating suffix evaluates C both ways".into());
        }
        let mapped: Option<Vec<NodeId>> = pi.path.iter().map(|&n| self.abs.to_site_node(n, &site.cfg)).collect();
        let mapped = mapped.ok_or("suffix node without a counterpart in P")?;
        let slice = SiteFacts::new(site).slice;
        let mapped = sliced_path(&mapped, &slice);
        let runs = suffix_runs(&self.concrete(), site.computing_point, site.predicate);
        if runs.suffixes.iter().any(|p| sliced_path(p, &slice) == mapped) {
            return Ok(Irrelevance::SameSuffix);
        }
        match pi.c_outcome {
            Some(b) if !runs.outcomes.contains(&b) => Ok(Irrelevance::ConstantNotB),
            _ => Err(format!(
                "no P counterexample follows the suffix {:?}",
                mapped.iter().map(|n| n.0).collect::<Vec<_>>()
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Irrelevance {
    AbstractHolds,
    Bypass,
    SameSuffix,
    ConstantNotB,
}

pub struct SuffixRuns {
    /// Suffix node paths (from the last `cp` visit) of violating runs.
    pub suffixes: BTreeSet<Vec<NodeId>>,
    /// Every outcome `c` takes in any run.
    pub outcomes: BTreeSet<bool>,
}

pub fn suffix_runs(checker: &Checker, cp: NodeId, c: NodeId) -> SuffixRuns {
    struct Watch {
        cp: NodeId,
        c: NodeId,
        true_succ: Option<NodeId>,
        prev: Option<NodeId>,
        current: Option<Vec<NodeId>>,
        out: SuffixRuns,
    }
    impl Observer for Watch {
        fn begin_run(&mut self) {
            self.prev = None;
            self.current = None;
        }
        fn step(&mut self, n: NodeId, _store: &[i64]) {
            if self.prev == Some(self.c) {
                self.out.outcomes.insert(Some(n) == self.true_succ);
            }
            self.prev = Some(n);
            if n == self.cp {
                self.current = Some(vec![n]);
            } else if let Some(path) = &mut self.current {
                path.push(n);
            }
        }
        fn end_run(&mut self, run: &RunEnd<'_>) -> bool {
            if run.status == TerminalStatus::AssertFail {
                if let Some(path) = self.current.take() {
                    self.out.suffixes.insert(path);
                }
            }
            true
        }
    }
    let mut w = Watch {
        cp,
        c,
        true_succ: checker.cfg.succ_on(c, EdgeLabel::True),
        prev: None,
        current: None,
        out: SuffixRuns { suffixes: BTreeSet::new(), outcomes: BTreeSet::new() },
    };
    checker.explore(&mut w);
    w.out
}

/// Outcome of checking one WP instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WpCheck {
    /// Number of domain stores satisfying ψ.
    pub satisfying: usize,
}

/// `p` is a straight-line suffix: a `skip;` marker first, then assignments
/// and branches, then the assert; all variables are inputs. Every run's path
/// gives a ψ; each start store satisfying ψ must, on the same nondet
/// choices, follow that path (on the assert's slice) and fail the assert.
pub fn wp_validity(p: &Program, config: CheckConfig) -> Result<WpCheck, String> {
    let checker = Checker::new(p, config);
    let g = &checker.cfg;
    let cp = g.node_at(&itp_core::StmtPath::top(0)).ok_or("suffix program must start with skip")?;
    // take the least violating run as the witness path, else the first run
    let witness = match checker.verify() {
        Verdict::Violated(t) => t,
        _ => checker.execute(&Default::default(), &[]),
    };
    let Some(pi) = violating_suffix(g, &witness, cp, cp) else {
        return Err("witness run does not pass the marker".into());
    };
    if pi.path.last() != Some(&g.assert_node) {
        return Ok(WpCheck { satisfying: 0 });
    }
    let psi = weakest_precondition(g, &pi).map_err(|e| e.to_string())?;
    let psi_c = g.compile(&psi).ok_or("psi mentions unknown variables")?;
    let slice = backward_slice(g, &reaching_definitions(g));
    let mut satisfying = 0;
    let k = checker.input_vars.len();
    let mut vector = vec![config.lo; k];
    loop {
        let inputs = checker.input_vars.iter().zip(&vector).map(|(&v, &x)| (g.var_name(v).to_string(), x)).collect();
        let t = checker.execute(&inputs, &witness.nondet);
        // the marker is the first statement, so its store is the start store
        let start = t.steps.iter().find(|(n, _)| *n == cp).map(|(_, s)| s.clone());
        if let Some(start) = start {
            if psi_c.eval(&start) == Ok(1) {
                satisfying += 1;
                let path: Vec<NodeId> = t.nodes().skip_while(|&n| n != cp).collect();
                if sliced_path(&path, &slice) != sliced_path(&pi.path, &slice) || t.status != TerminalStatus::AssertFail
                {
                    return Err(format!("store {start:?} satisfies psi but run ends {}", t.status.as_str()));
                }
            }
        }
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(WpCheck { satisfying });
            }
            i -= 1;
            if vector[i] < config.hi {
                vector[i] += 1;
                break;
            }
            vector[i] = config.lo;
        }
    }
}
