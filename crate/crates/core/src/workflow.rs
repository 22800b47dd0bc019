//! The property-checking procedure around one abstracted predicate: check
//! `P′`, classify its counterexample, and settle the concrete verdict through
//! replay, `P̂`, `P̃` or the weakest-precondition problem.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ast::{Expr, Program};
use crate::checker::{violating_suffix, CheckConfig, Checker, Replay, Trace, Verdict, ViolatingSuffix};
use crate::itp::{evaluate_criteria, PredicateSite};
use crate::transform::{abstract_program, build_phat, build_ptilde, build_wp_problem, weakest_precondition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Case {
    I,
    Ii,
    Iii,
    One,
    Two,
    ThreeA,
    ThreeB,
    ThreeC,
    A,
    B,
    Wp,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::I => "i",
            Case::Ii => "ii",
            Case::Iii => "iii",
            Case::One => "1",
            Case::Two => "2",
            Case::ThreeA => "3a",
            Case::ThreeB => "3b",
            Case::ThreeC => "3c",
            Case::A => "A",
            Case::B => "B",
            Case::Wp => "WP",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Problem {
    Abstract,
    Replay,
    Phat(bool),
    Ptilde(bool),
    WpProblem,
}

impl Problem {
    pub fn name(self) -> String {
        match self {
            Problem::Abstract => "P'".into(),
            Problem::Replay => "P (replay)".into(),
            Problem::Phat(b) => alloc::format!("P-hat(b={b})"),
            Problem::Ptilde(b) => alloc::format!("P-tilde(b={b})"),
            Problem::WpProblem => "WP problem".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub problem: Problem,
    /// `holds`, `violated` or `budget_exceeded`; `assert_ok` style statuses
    /// for the replay step.
    pub verdict: &'static str,
    pub case: Option<Case>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Final {
    Holds,
    /// A run of the source program failing the assert.
    Violated(Trace),
    Inconclusive(String),
}

impl Final {
    pub fn kind(&self) -> &'static str {
        match self {
            Final::Holds => "holds",
            Final::Violated(_) => "violated",
            Final::Inconclusive(_) => "inconclusive",
        }
    }
}

#[derive(Clone, Debug)]
pub struct WorkflowReport {
    pub predicate: crate::cfg::NodeId,
    pub computing_point: crate::cfg::NodeId,
    pub text: String,
    pub itp: bool,
    pub steps: Vec<Step>,
    pub final_verdict: Final,
    pub suffix: Option<ViolatingSuffix>,
    pub violating_value: Option<bool>,
    pub psi: Option<Expr>,
}

impl WorkflowReport {
    pub fn labels(&self) -> Vec<Case> {
        self.steps.iter().filter_map(|s| s.case).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum WorkflowError {
    #[error("predicate `{0}` does not satisfy the ITP criteria")]
    NotItp(String),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct WorkflowOptions {
    pub config: CheckConfig,
    /// Run even when the criteria do not hold.
    pub allow_non_itp: bool,
}

pub const PREMISE_FALSIFIED: &str = "ITP premise falsified at this domain";

struct Run<'s> {
    site: &'s PredicateSite,
    concrete: Checker,
    config: CheckConfig,
    report: WorkflowReport,
}

enum Next {
    Done(Final),
    Wp(ViolatingSuffix),
}

impl Run<'_> {
    fn log(&mut self, problem: Problem, verdict: &'static str, case: Option<Case>) {
        self.report.steps.push(Step { problem, verdict, case });
    }

    fn budget(&mut self, problem: Problem) -> Final {
        self.log(problem, "budget_exceeded", None);
        Final::Inconclusive(alloc::format!("step budget exceeded while checking {}", problem.name()))
    }

    fn replay(&self, inputs: &BTreeMap<String, i64>) -> Replay {
        self.concrete.replay(inputs)
    }

    /// A failing run of the source program on `inputs`, if any.
    fn confirm(&self, inputs: &BTreeMap<String, i64>) -> Option<Trace> {
        self.replay(inputs).violating().cloned()
    }

    fn check(&self, p: &Program) -> Verdict {
        Checker::new(p, self.config).verify()
    }

    fn start(&mut self) -> Final {
        let abs = abstract_program(self.site);
        let checker = Checker::from_cfg(abs.cfg.clone(), self.config);
        let t = match checker.verify() {
            Verdict::Holds { .. } => {
                self.log(Problem::Abstract, "holds", Some(Case::I));
                return Final::Holds;
            }
            Verdict::BudgetExceeded(_) => return self.budget(Problem::Abstract),
            Verdict::Violated(t) => t,
        };
        let Some(pi) = violating_suffix(&abs.cfg, &t, abs.computing_point, abs.predicate) else {
            self.log(Problem::Abstract, "violated", Some(Case::Ii));
            return match self.confirm(&t.inputs) {
                Some(trace) => Final::Violated(trace),
                None => Final::Inconclusive("counterexample bypassing the computing point not reproduced".into()),
            };
        };
        self.log(Problem::Abstract, "violated", Some(Case::Iii));
        self.report.suffix = Some(pi.clone());
        self.report.violating_value = pi.c_outcome;

        let replay = self.replay(&t.inputs);
        if let Some(trace) = replay.violating() {
            self.log(Problem::Replay, "violated", Some(Case::One));
            return Final::Violated(trace.clone());
        }
        if replay.hit_budget() {
            return self.budget(Problem::Replay);
        }
        let next = match pi.c_outcome {
            None => {
                self.log(Problem::Replay, "holds", Some(Case::Two));
                self.case_two(pi)
            }
            Some(b) => {
                let c = self.site.original_predicate;
                let g = &self.concrete.cfg;
                let outcomes: Vec<bool> = replay.traces.iter().flat_map(|t| t.outcomes(g, c)).collect();
                if outcomes.is_empty() {
                    self.log(Problem::Replay, "holds", Some(Case::ThreeA));
                    self.solve_phat(b, pi)
                } else if outcomes.contains(&b) {
                    self.log(Problem::Replay, "holds", Some(Case::ThreeB));
                    Next::Wp(pi)
                } else {
                    self.log(Problem::Replay, "holds", Some(Case::ThreeC));
                    self.solve_phat(b, pi)
                }
            }
        };
        match next {
            Next::Done(f) => f,
            Next::Wp(pi) => self.wp(&abs.cfg, &pi),
        }
    }

    /// Outcome A leads to the WP problem, B to `P̃`.
    fn solve_phat(&mut self, b: bool, pi: ViolatingSuffix) -> Next {
        match self.check(&build_phat(self.site, b)) {
            Verdict::Violated(_) => {
                self.log(Problem::Phat(b), "violated", Some(Case::A));
                Next::Wp(pi)
            }
            Verdict::Holds { .. } => {
                self.log(Problem::Phat(b), "holds", Some(Case::B));
                Next::Done(self.solve_ptilde(b))
            }
            Verdict::BudgetExceeded(_) => Next::Done(self.budget(Problem::Phat(b))),
        }
    }

    /// No violating value: both `P̂(true)` and `P̂(false)` are checked.
    fn case_two(&mut self, pi: ViolatingSuffix) -> Next {
        let mut any_a = false;
        for b in [true, false] {
            match self.check(&build_phat(self.site, b)) {
                Verdict::Violated(_) => {
                    self.log(Problem::Phat(b), "violated", Some(Case::A));
                    any_a = true;
                }
                Verdict::Holds { .. } => self.log(Problem::Phat(b), "holds", Some(Case::B)),
                Verdict::BudgetExceeded(_) => return Next::Done(self.budget(Problem::Phat(b))),
            }
        }
        if any_a {
            Next::Wp(pi)
        } else {
            Next::Done(self.solve_ptilde(true))
        }
    }

    fn solve_ptilde(&mut self, b: bool) -> Final {
        match self.check(&build_ptilde(self.site, b)) {
            Verdict::Holds { .. } => {
                self.log(Problem::Ptilde(b), "holds", Some(Case::B));
                Final::Holds
            }
            Verdict::Violated(t) => {
                self.log(Problem::Ptilde(b), "violated", Some(Case::B));
                match self.confirm(&t.inputs) {
                    Some(trace) => Final::Violated(trace),
                    None => Final::Inconclusive("P-tilde counterexample not reproduced on the source program".into()),
                }
            }
            Verdict::BudgetExceeded(_) => self.budget(Problem::Ptilde(b)),
        }
    }

    fn wp(&mut self, abstract_cfg: &crate::cfg::Cfg, pi: &ViolatingSuffix) -> Final {
        let psi = match weakest_precondition(abstract_cfg, pi) {
            Ok(psi) => psi,
            Err(e) => {
                self.log(Problem::WpProblem, "error", Some(Case::Wp));
                return Final::Inconclusive(alloc::format!("weakest precondition: {e}"));
            }
        };
        self.report.psi = Some(psi.clone());
        let problem = Checker::new(&build_wp_problem(self.site, &psi), self.config);
        let mut confirmed = None;
        let (verdict, _) = problem.verify_until(|t| {
            confirmed = self.confirm(&t.inputs);
            confirmed.is_some()
        });
        match verdict {
            Verdict::Violated(_) => {
                self.log(Problem::WpProblem, "violated", Some(Case::Wp));
                Final::Violated(confirmed.expect("accepted runs are confirmed"))
            }
            Verdict::Holds { .. } => {
                self.log(Problem::WpProblem, "holds", Some(Case::Wp));
                Final::Inconclusive(PREMISE_FALSIFIED.into())
            }
            Verdict::BudgetExceeded(_) => {
                self.log(Problem::WpProblem, "budget_exceeded", Some(Case::Wp));
                Final::Inconclusive("step budget exceeded while checking WP problem".into())
            }
        }
    }
}

pub fn run_workflow(site: &PredicateSite, config: CheckConfig) -> Result<WorkflowReport, WorkflowError> {
    run_workflow_with(site, WorkflowOptions { config, allow_non_itp: false })
}

pub fn run_workflow_with(site: &PredicateSite, opts: WorkflowOptions) -> Result<WorkflowReport, WorkflowError> {
    let itp = evaluate_criteria(site).itp;
    if !itp && !opts.allow_non_itp {
        return Err(WorkflowError::NotItp(site.text()));
    }
    let concrete = Checker::new(&site.source_program(), opts.config);
    let mut run = Run {
        site,
        concrete,
        config: opts.config,
        report: WorkflowReport {
            predicate: site.original_predicate,
            computing_point: site.computing_point,
            text: site.text(),
            itp,
            steps: Vec::new(),
            final_verdict: Final::Holds,
            suffix: None,
            violating_value: None,
            psi: None,
        },
    };
    run.report.final_verdict = run.start();
    Ok(run.report)
}

/// Whether `labels` is a complete run of the case graph; with
/// `allow_prefix`, also any proper prefix of one (runs cut short by the
/// budget).
pub fn valid_log(labels: &[Case], allow_prefix: bool) -> bool {
    use Case::*;
    let complete: &[&[Case]] = &[
        &[I],
        &[Ii],
        &[Iii, One],
        &[Iii, ThreeB, Wp],
        &[Iii, ThreeA, A, Wp],
        &[Iii, ThreeA, B, B],
        &[Iii, ThreeC, A, Wp],
        &[Iii, ThreeC, B, B],
        &[Iii, Two, A, A, Wp],
        &[Iii, Two, A, B, Wp],
        &[Iii, Two, B, A, Wp],
        &[Iii, Two, B, B, B],
    ];
    complete.iter().any(|w| *w == labels || (allow_prefix && w.starts_with(labels)))
}
