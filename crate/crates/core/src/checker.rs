//! Bounded-exhaustive checker: every input vector over a finite domain and
//! every nondet choice sequence is executed against the assert.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ast::Program;
use crate::cfg::{Cfg, EdgeLabel, NodeId, NodeKind, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub lo: i64,
    pub hi: i64,
    /// Maximum number of executed nodes per run.
    pub budget: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { lo: -2, hi: 3, budget: 20_000 }
    }
}

impl CheckConfig {
    pub fn is_valid(&self) -> bool {
        self.lo <= self.hi && self.budget >= 1
    }

    pub fn domain(&self) -> core::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TerminalStatus {
    AssertOk,
    AssertFail,
    Budget,
    DivByZero,
}

impl TerminalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalStatus::AssertOk => "assert_ok",
            TerminalStatus::AssertFail => "assert_fail",
            TerminalStatus::Budget => "budget",
            TerminalStatus::DivByZero => "div_by_zero",
        }
    }
}

/// One execution. Each step holds the store after the node executed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub steps: Vec<(NodeId, Vec<i64>)>,
    pub inputs: BTreeMap<String, i64>,
    pub nondet: Vec<i64>,
    pub status: TerminalStatus,
}

impl Trace {
    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.steps.iter().map(|(n, _)| *n)
    }

    pub fn visits(&self, n: NodeId) -> bool {
        self.nodes().any(|m| m == n)
    }

    /// Branch outcomes of every evaluation of predicate `c`.
    pub fn outcomes(&self, g: &Cfg, c: NodeId) -> Vec<bool> {
        branch_outcomes(g, &self.steps, c)
    }
}

fn branch_outcomes(g: &Cfg, steps: &[(NodeId, Vec<i64>)], c: NodeId) -> Vec<bool> {
    steps.windows(2).filter(|w| w[0].0 == c).map(|w| g.succ_on(c, EdgeLabel::True) == Some(w[1].0)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub runs: u64,
    pub assert_fail: u64,
    pub budget: u64,
    pub div_by_zero: u64,
}

impl Stats {
    fn record(&mut self, status: TerminalStatus) {
        self.runs += 1;
        match status {
            TerminalStatus::AssertOk => {}
            TerminalStatus::AssertFail => self.assert_fail += 1,
            TerminalStatus::Budget => self.budget += 1,
            TerminalStatus::DivByZero => self.div_by_zero += 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// No run failed the assert; `exhaustive` when every run also finished
    /// within the budget.
    Holds { exhaustive: bool },
    /// The least violating run in enumeration order.
    Violated(Trace),
    /// No violation found, but some run hit the step budget.
    BudgetExceeded(Stats),
}

impl Verdict {
    pub fn status(&self) -> &'static str {
        match self {
            Verdict::Holds { .. } => "holds",
            Verdict::Violated(_) => "violated",
            Verdict::BudgetExceeded(_) => "budget_exceeded",
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }

    pub fn exhaustive(&self) -> bool {
        match self {
            Verdict::Holds { exhaustive } => *exhaustive,
            Verdict::Violated(_) => true,
            Verdict::BudgetExceeded(_) => false,
        }
    }

    pub fn trace(&self) -> Option<&Trace> {
        match self {
            Verdict::Violated(t) => Some(t),
            _ => None,
        }
    }
}

/// What an [`Observer`] sees when a run ends.
pub struct RunEnd<'a> {
    pub inputs: &'a [i64],
    pub nondet: &'a [i64],
    pub status: TerminalStatus,
}

/// Hooks into an enumeration. `end_run` returning false stops it.
pub trait Observer {
    fn begin_run(&mut self) {}
    fn step(&mut self, _n: NodeId, _store: &[i64]) {}
    fn end_run(&mut self, _run: &RunEnd<'_>) -> bool {
        true
    }
}

impl Observer for () {}

struct Recorder(Vec<(NodeId, Vec<i64>)>);

impl Observer for Recorder {
    fn step(&mut self, n: NodeId, store: &[i64]) {
        self.0.push((n, store.to_vec()));
    }
}

/// Depth-first nondet choices: the next run bumps the deepest choice that
/// is not yet at the top of the domain.
struct Odometer {
    values: Vec<i64>,
    pos: usize,
    lo: i64,
    hi: i64,
}

impl Odometer {
    fn new(lo: i64, hi: i64, prefix: Vec<i64>) -> Self {
        Odometer { values: prefix, pos: 0, lo, hi }
    }

    fn next(&mut self) -> i64 {
        if self.pos == self.values.len() {
            self.values.push(self.lo);
        }
        self.pos += 1;
        self.values[self.pos - 1]
    }

    /// Choices actually consumed by the last run.
    fn used(&self) -> &[i64] {
        &self.values[..self.pos]
    }

    fn advance(&mut self) -> bool {
        self.values.truncate(self.pos);
        self.pos = 0;
        while let Some(&last) = self.values.last() {
            if last < self.hi {
                *self.values.last_mut().unwrap() += 1;
                return true;
            }
            self.values.pop();
        }
        false
    }
}

/// A program prepared for execution.
#[derive(Clone, Debug)]
pub struct Checker {
    pub cfg: Cfg,
    pub config: CheckConfig,
    /// Variables read by `input()`, sorted by name; the first is the most
    /// significant digit of the enumeration.
    pub input_vars: Vec<VarId>,
}

impl Checker {
    pub fn new(p: &Program, config: CheckConfig) -> Checker {
        Checker::from_cfg(Cfg::build(p), config)
    }

    pub fn from_cfg(cfg: Cfg, config: CheckConfig) -> Checker {
        let mut input_vars: Vec<VarId> = cfg
            .node_ids()
            .filter_map(|n| match cfg.kind(n) {
                NodeKind::Input { var } => Some(*var),
                _ => None,
            })
            .collect();
        input_vars.sort_by(|a, b| cfg.var_name(*a).cmp(cfg.var_name(*b)));
        input_vars.dedup();
        Checker { cfg, config, input_vars }
    }

    fn input_map(&self, inputs: &[i64]) -> BTreeMap<String, i64> {
        self.input_vars.iter().zip(inputs).map(|(&v, &x)| (String::from(self.cfg.var_name(v)), x)).collect()
    }

    /// Input vector for `inputs`, by name; variables missing from the map
    /// take the bottom of the domain.
    pub fn input_vector(&self, inputs: &BTreeMap<String, i64>) -> Vec<i64> {
        self.input_vars.iter().map(|&v| inputs.get(self.cfg.var_name(v)).copied().unwrap_or(self.config.lo)).collect()
    }

    fn run<O: Observer>(&self, slots: &[Option<i64>], choose: &mut dyn FnMut() -> i64, obs: &mut O) -> TerminalStatus {
        let g = &self.cfg;
        let mut store = vec![0i64; g.vars.len()];
        let mut n = g.entry;
        let mut steps = 0usize;
        loop {
            if n == g.exit {
                return TerminalStatus::AssertOk;
            }
            steps += 1;
            if steps > self.config.budget {
                return TerminalStatus::Budget;
            }
            let mut label = EdgeLabel::Fall;
            match g.kind(n) {
                NodeKind::Entry | NodeKind::Exit | NodeKind::Skip => {}
                NodeKind::Assign { var, expr } => match expr.eval(&store) {
                    Ok(x) => store[var.index()] = x,
                    Err(_) => return TerminalStatus::DivByZero,
                },
                NodeKind::Nondet { var } => store[var.index()] = choose(),
                NodeKind::Input { var } => store[var.index()] = slots[var.index()].unwrap_or(self.config.lo),
                NodeKind::Predicate { cond } => match cond.eval(&store) {
                    Ok(x) => label = if x != 0 { EdgeLabel::True } else { EdgeLabel::False },
                    Err(_) => return TerminalStatus::DivByZero,
                },
                NodeKind::Assert { cond } => {
                    let ok = match cond.eval(&store) {
                        Ok(x) => x != 0,
                        Err(_) => return TerminalStatus::DivByZero,
                    };
                    obs.step(n, &store);
                    return if ok { TerminalStatus::AssertOk } else { TerminalStatus::AssertFail };
                }
            }
            obs.step(n, &store);
            n = g.succ_on(n, label).expect("every non-terminal node has its successor");
        }
    }

    fn slots(&self, inputs: &[i64]) -> Vec<Option<i64>> {
        let mut slots = vec![None; self.cfg.vars.len()];
        for (&v, &x) in self.input_vars.iter().zip(inputs) {
            slots[v.index()] = Some(x);
        }
        slots
    }

    /// One deterministic run. Nondet reads past the end of `nondet` take the
    /// bottom of the domain.
    pub fn execute(&self, inputs: &BTreeMap<String, i64>, nondet: &[i64]) -> Trace {
        self.execute_vector(&self.input_vector(inputs), nondet)
    }

    fn execute_vector(&self, inputs: &[i64], nondet: &[i64]) -> Trace {
        let slots = self.slots(inputs);
        let mut rec = Recorder(Vec::new());
        let mut used = Vec::new();
        let lo = self.config.lo;
        let mut choose = || {
            let x = nondet.get(used.len()).copied().unwrap_or(lo);
            used.push(x);
            x
        };
        let status = self.run(&slots, &mut choose, &mut rec);
        Trace { steps: rec.0, inputs: self.input_map(inputs), nondet: used, status }
    }

    fn explore_inputs<O: Observer>(&self, inputs: &[i64], obs: &mut O, stats: &mut Stats) -> bool {
        let slots = self.slots(inputs);
        let mut odo = Odometer::new(self.config.lo, self.config.hi, Vec::new());
        loop {
            obs.begin_run();
            let status = self.run(&slots, &mut || odo.next(), obs);
            stats.record(status);
            if !obs.end_run(&RunEnd { inputs, nondet: odo.used(), status }) {
                return false;
            }
            if !odo.advance() {
                return true;
            }
        }
    }

    /// Runs every input vector and nondet sequence in enumeration order.
    pub fn explore<O: Observer>(&self, obs: &mut O) -> Stats {
        let mut stats = Stats::default();
        let k = self.input_vars.len();
        let mut inputs = vec![self.config.lo; k];
        loop {
            if !self.explore_inputs(&inputs, obs, &mut stats) {
                return stats;
            }
            // odometer over inputs, last variable least significant
            let mut i = k;
            loop {
                if i == 0 {
                    return stats;
                }
                i -= 1;
                if inputs[i] < self.config.hi {
                    inputs[i] += 1;
                    break;
                }
                inputs[i] = self.config.lo;
            }
        }
    }

    /// First violation accepted by `accept`, or the overall verdict.
    pub fn verify_until(&self, mut accept: impl FnMut(&Trace) -> bool) -> (Verdict, Stats) {
        struct Find<'c, F> {
            checker: &'c Checker,
            accept: F,
            found: Option<Trace>,
        }
        impl<F: FnMut(&Trace) -> bool> Observer for Find<'_, F> {
            fn end_run(&mut self, run: &RunEnd<'_>) -> bool {
                if run.status != TerminalStatus::AssertFail {
                    return true;
                }
                let trace = self.checker.execute_vector(run.inputs, run.nondet);
                if (self.accept)(&trace) {
                    self.found = Some(trace);
                    return false;
                }
                true
            }
        }
        let mut find = Find { checker: self, accept: &mut accept, found: None };
        let stats = self.explore(&mut find);
        let verdict = match find.found {
            Some(t) => Verdict::Violated(t),
            None if stats.budget > 0 => Verdict::BudgetExceeded(stats),
            None => Verdict::Holds { exhaustive: true },
        };
        (verdict, stats)
    }

    pub fn verify(&self) -> Verdict {
        self.verify_until(|_| true).0
    }

    /// Every run for one input vector, nondet choices enumerated.
    pub fn replay(&self, inputs: &BTreeMap<String, i64>) -> Replay {
        struct All<'c> {
            checker: &'c Checker,
            traces: Vec<Trace>,
        }
        impl Observer for All<'_> {
            fn end_run(&mut self, run: &RunEnd<'_>) -> bool {
                self.traces.push(self.checker.execute_vector(run.inputs, run.nondet));
                true
            }
        }
        let vector = self.input_vector(inputs);
        let mut all = All { checker: self, traces: Vec::new() };
        let mut stats = Stats::default();
        self.explore_inputs(&vector, &mut all, &mut stats);
        Replay { traces: all.traces, stats }
    }
}

#[derive(Clone, Debug)]
pub struct Replay {
    pub traces: Vec<Trace>,
    pub stats: Stats,
}

impl Replay {
    pub fn violating(&self) -> Option<&Trace> {
        self.traces.iter().find(|t| t.status == TerminalStatus::AssertFail)
    }

    pub fn hit_budget(&self) -> bool {
        self.stats.budget > 0
    }
}

pub fn verify(p: &Program, config: CheckConfig) -> Verdict {
    Checker::new(p, config).verify()
}

pub fn execute(p: &Program, inputs: &BTreeMap<String, i64>, nondet: &[i64], config: CheckConfig) -> Trace {
    Checker::new(p, config).execute(inputs, nondet)
}

/// The part of a violating trace from the last visit of the computing point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViolatingSuffix {
    pub path: Vec<NodeId>,
    pub steps: Vec<(NodeId, Vec<i64>)>,
    /// Outcome shared by every evaluation of the predicate on the suffix.
    pub c_outcome: Option<bool>,
    /// Store at the computing point, after the nondet assignments.
    pub sigma_prime: Vec<i64>,
}

/// `None` when `t` never visits `cp`. `c` is the predicate's node in the
/// same graph as the trace.
pub fn violating_suffix(g: &Cfg, t: &Trace, cp: NodeId, c: NodeId) -> Option<ViolatingSuffix> {
    let start = t.steps.iter().rposition(|(n, _)| *n == cp)?;
    let steps: Vec<_> = t.steps[start..].to_vec();
    let outcomes = branch_outcomes(g, &steps, c);
    Some(ViolatingSuffix {
        path: steps.iter().map(|(n, _)| *n).collect(),
        sigma_prime: steps[0].1.clone(),
        c_outcome: outcomes.first().copied(),
        steps,
    })
}

impl ViolatingSuffix {
    /// True when every evaluation of `c` on the suffix agrees.
    pub fn consistent(&self, g: &Cfg, c: NodeId) -> bool {
        let o = branch_outcomes(g, &self.steps, c);
        o.windows(2).all(|w| w[0] == w[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn check(src: &str) -> Verdict {
        verify(&parse(src).unwrap(), CheckConfig::default())
    }

    #[test]
    fn three_step_run() {
        let p = parse("int x = input(); assert(x == x);").unwrap();
        let t = execute(&p, &BTreeMap::from([(String::from("x"), 1)]), &[], CheckConfig::default());
        assert_eq!(t.status, TerminalStatus::AssertOk);
        assert_eq!(t.steps.len(), 3);
    }

    #[test]
    fn constant_failure() {
        assert!(matches!(check("int x; assert(1 == 2);"), Verdict::Violated(_)));
    }

    #[test]
    fn domain_forces_holds() {
        assert_eq!(check("int x = input(); assert(x >= -2);"), Verdict::Holds { exhaustive: true });
    }

    #[test]
    fn nondet_bottom_found() {
        let Verdict::Violated(t) = check("int x = *; assert(x != -2);") else { panic!() };
        assert_eq!(t.nondet, [-2]);
    }

    #[test]
    fn least_input_first() {
        let Verdict::Violated(t) = check("int a = input(); int b = input(); assert(a + b != 1);") else { panic!() };
        assert_eq!(t.inputs, BTreeMap::from([(String::from("a"), -2), (String::from("b"), 3)]));
    }

    #[test]
    fn nonterminating_is_budget() {
        let v = check("int x = input(); while (x < 5) { x = x; } assert(x >= 0);");
        assert!(matches!(v, Verdict::BudgetExceeded(s) if s.budget == 6 && s.runs == 6));
    }

    #[test]
    fn division_by_zero_is_quarantined() {
        let v = check("int x = input(); int y; y = 6 / x; assert(y != 7);");
        assert_eq!(v, Verdict::Holds { exhaustive: true });
        let c =
            Checker::new(&parse("int x = input(); int y; y = 6 / x; assert(y != 7);").unwrap(), CheckConfig::default());
        assert_eq!(c.explore(&mut ()).div_by_zero, 1);
    }

    #[test]
    fn nondet_odometer_covers_tree() {
        let p = parse("int a = *; int b; if (a > 0) { b = *; } assert(b < 9);").unwrap();
        let c = Checker::new(&p, CheckConfig::default());
        // 3 non-positive values of a, 3 positive ones each with 6 values of b
        assert_eq!(c.explore(&mut ()).runs, 3 + 3 * 6);
    }

    #[test]
    fn suffix_takes_last_visit() {
        let p = parse("int n = input(); int i; while (i < n) { skip; i = i + 1; } assert(i < 2);").unwrap();
        let c = Checker::new(&p, CheckConfig::default());
        let Verdict::Violated(t) = c.verify() else { panic!() };
        let cp =
            c.cfg.node_at(&crate::ast::StmtPath::new(crate::ast::BlockPath::top().child(0, crate::ast::Arm::Body), 0));
        let header = c.cfg.node_at(&crate::ast::StmtPath::top(0)).unwrap();
        let s = violating_suffix(&c.cfg, &t, cp.unwrap(), header).unwrap();
        assert_eq!(s.path.iter().filter(|&&n| Some(n) == cp).count(), 1);
        assert_eq!(s.c_outcome, Some(false));
        assert_eq!(*s.path.last().unwrap(), c.cfg.assert_node);
        assert!(violating_suffix(&c.cfg, &t, c.cfg.exit, header).is_none());
    }
}
