//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs with `cargo test -p itp --test acceptance`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::Instant;

use itp::corpus::{self, load_fixtures};
use itp::generate::{self, seed_from_env};
use itp::oracle::{wp_validity, SiteOracle};
use itp_core::checker::{execute, CheckConfig, Checker};
use itp_core::itp::{analyze, Analysis, CriteriaReport};
use itp_core::workflow::{run_workflow, Case, Final};
use itp_core::{parse, NodeId, Program, TerminalStatus};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

struct Fixture {
    name: String,
    program: Program,
    analysis: Analysis,
}

fn load_corpus() -> Vec<Fixture> {
    load_fixtures(&fixtures_dir())
        .expect("fixtures directory")
        .into_iter()
        .map(|(name, src)| {
            let program = parse(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
            let analysis = analyze(&program);
            Fixture { name, program, analysis }
        })
        .collect()
}

fn fixture<'a>(corpus: &'a [Fixture], name: &str) -> Result<&'a Fixture, String> {
    corpus.iter().find(|f| f.name == name).ok_or_else(|| format!("missing fixture {name}"))
}

fn site<'a>(f: &'a Fixture, text: &str) -> Result<&'a CriteriaReport, String> {
    f.analysis.reports.iter().find(|r| r.site.text() == text).ok_or_else(|| format!("{}: no site `{text}`", f.name))
}

/// Applies `check` to every site selected by `filter`; failures are collected.
fn over_sites(
    corpus: &[Fixture],
    filter: impl Fn(&CriteriaReport) -> bool,
    check: impl Fn(&CriteriaReport) -> Result<(), String>,
) -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for f in corpus {
        for r in f.analysis.reports.iter().filter(|r| filter(r)) {
            checked += 1;
            if let Err(e) = check(r) {
                failures.push(format!("{}:{} ({}): {e}", f.name, r.site.original_predicate, r.site.text()));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{checked} sites"))
    } else {
        Err(format!("{} of {checked} sites: {}", failures.len(), failures.join("; ")))
    }
}

fn soundness(corpus: &[Fixture], config: CheckConfig) -> Outcome {
    over_sites(corpus, |_| true, |r| SiteOracle::new(r, config).soundness())
}

fn projection_at_cp(corpus: &[Fixture], config: CheckConfig) -> Outcome {
    over_sites(corpus, |r| r.c1.holds && r.c2.holds, |r| SiteOracle::new(r, config).projection_at_cp())
}

fn projection_on_b(corpus: &[Fixture], config: CheckConfig) -> Outcome {
    over_sites(corpus, |r| r.c3.holds && r.c4.holds, |r| SiteOracle::new(r, config).projection_on_b())
}

/// Irrelevance of every ITP site to the assert, with a tally of how each one was settled.
fn irrelevance(corpus: &[Fixture], config: CheckConfig) -> Outcome {
    let tally = RefCell::new(BTreeMap::<String, usize>::new());
    let result = over_sites(
        corpus,
        |r| r.itp,
        |r| {
            let d = SiteOracle::new(r, config).irrelevance()?;
            *tally.borrow_mut().entry(format!("{d:?}")).or_default() += 1;
            Ok(())
        },
    );
    result.map(|s| format!("{s} {:?}", tally.into_inner()))
}

fn m1_family(corpus: &[Fixture], config: CheckConfig) -> Outcome {
    let m1 = fixture(corpus, "m1")?;
    for text in ["t > 100", "st == 1"] {
        let r = site(m1, text)?;
        if !r.itp {
            return Err(format!("m1: `{text}` not flagged ITP"));
        }
        let w = run_workflow(&r.site, config).map_err(|e| e.to_string())?;
        if !matches!(w.final_verdict, Final::Holds) {
            return Err(format!("m1: workflow on `{text}` is {}", w.final_verdict.kind()));
        }
    }

    let m = fixture(corpus, "m1_mut")?;
    let w = run_workflow(&site(m, "st == 1")?.site, config).map_err(|e| e.to_string())?;
    let Final::Violated(t) = &w.final_verdict else {
        return Err(format!("m1_mut: workflow is {}", w.final_verdict.kind()));
    };
    if execute(&m.program, &t.inputs, &t.nondet, config).status != TerminalStatus::AssertFail {
        return Err(format!("m1_mut: input {:?} does not fail the assert", t.inputs));
    }

    let c = fixture(corpus, "m1_const")?;
    let w = run_workflow(&site(c, "st == 1")?.site, config).map_err(|e| e.to_string())?;
    let labels = w.labels();
    let via_ptilde = w.steps.iter().any(|s| matches!(s.problem, itp_core::workflow::Problem::Ptilde(_)));
    if !(labels.contains(&Case::ThreeC) && labels.contains(&Case::B) && via_ptilde) {
        return Err(format!("m1_const: route {:?}", labels.iter().map(|l| l.label()).collect::<Vec<_>>()));
    }
    let truth = Checker::new(&c.program, config).verify();
    let agrees = match &w.final_verdict {
        Final::Holds => truth.holds(),
        Final::Violated(_) => matches!(truth, itp_core::Verdict::Violated(_)),
        Final::Inconclusive(_) => false,
    };
    if !agrees {
        return Err(format!("m1_const: final {} but P is {}", w.final_verdict.kind(), truth.status()));
    }
    Ok(format!("m1 holds on both sites, m1_mut input {:?} confirmed, m1_const via 3c/B/P-tilde", t.inputs))
}

fn predicate_texts(r: &CriteriaReport, nodes: &BTreeSet<NodeId>) -> Vec<String> {
    nodes.iter().filter(|&&n| r.site.cfg.is_predicate(n)).map(|&n| r.site.cfg.expr_text(n)).collect()
}

fn relatedness(corpus: &[Fixture]) -> Outcome {
    for name in ["r1", "r2"] {
        let f = fixture(corpus, name)?;
        let r = site(f, if name == "r1" { "y > 0" } else { "y > 1" })?;
        if r.c3.holds && r.c4.holds {
            return Err(format!("{name}: C3 and C4 both hold"));
        }
    }
    let r3 = site(fixture(corpus, "r3")?, "y > 0")?;
    if !(r3.c3.holds && r3.c4.holds) {
        return Err("r3: C3 or C4 fails".into());
    }

    let i1 = fixture(corpus, "i1")?;
    let r = site(i1, "y > 0")?;
    if r.evi_x.value_base.is_disjoint(&r.evi_y.value_base) {
        return Err("i1: value bases are disjoint".into());
    }
    let in_x = predicate_texts(r, &r.evi_x.nodes);
    let in_y = predicate_texts(r, &r.evi_y.nodes);
    if !in_x.iter().any(|t| t == "x > z") || !in_y.iter().any(|t| t == "y < z") {
        return Err(format!("i1: EVI predicates x {in_x:?}, y {in_y:?}"));
    }
    let r = site(fixture(corpus, "i2")?, "y > 0")?;
    if !r.evi_x.value_base.is_disjoint(&r.evi_y.value_base) {
        return Err("i2: value bases overlap".into());
    }

    let dir = fixtures_dir();
    let subset: Vec<(String, String)> = load_fixtures(&dir)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter(|(n, _)| ["r1", "r2", "r3", "i1", "i2"].contains(&n.as_str()))
        .collect();
    let actual =
        corpus::golden_of(&corpus::run_corpus(&subset, CheckConfig::default(), false).map_err(|e| e.to_string())?);
    let golden = corpus::read_golden(&dir).map_err(|e| e.to_string())?.ok_or("no golden file")?;
    let golden: Vec<_> = golden.into_iter().filter(|g| actual.iter().any(|a| a.name == g.name)).collect();
    let diff = corpus::golden_diff(&actual, &golden);
    if !diff.is_empty() {
        return Err(format!("golden mismatch: {diff:?}"));
    }
    Ok("r1/r2 fail C3 or C4, r3 passes, i1 overlaps, i2 disjoint, golden match".into())
}

fn wp_suffixes(seed: u64, config: CheckConfig) -> Outcome {
    let mut rng = generate::rng(seed);
    let mut nonvacuous = 0;
    for i in 0..1000 {
        let text = generate::suffix_program_text(&mut rng);
        let p = parse(&text).map_err(|e| format!("suffix {i} does not parse: {e}"))?;
        match wp_validity(&p, config) {
            Ok(c) if c.satisfying > 0 => nonvacuous += 1,
            Ok(_) => {}
            Err(e) => return Err(format!("suffix {i}: {e}\n{text}")),
        }
    }
    Ok(format!("1000 suffixes (seed {seed}), {nonvacuous} with a satisfiable psi"))
}

fn corpus_json(extra: &[&str]) -> Result<serde_json::Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_itp"))
        .arg("corpus")
        .arg(fixtures_dir())
        .arg("--json")
        .args(extra)
        .output()
        .map_err(|e| e.to_string())?;
    let mut v: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| format!("corpus output: {e}"))?;
    if let Some(m) = v.get_mut("manifest").and_then(|m| m.as_object_mut()) {
        m.remove("timestamps");
    }
    Ok(v)
}

fn determinism() -> Outcome {
    let a = corpus_json(&[])?;
    let b = corpus_json(&[])?;
    let s = corpus_json(&["--sequential"])?;
    let bytes = |v: &serde_json::Value| serde_json::to_string(v).unwrap_or_default();
    if bytes(&a) != bytes(&b) {
        return Err("two parallel runs differ".into());
    }
    if bytes(&a) != bytes(&s) {
        return Err("parallel and sequential runs differ".into());
    }
    Ok(format!("{} bytes identical across 3 runs", bytes(&a).len()))
}

fn differential(seed: u64, config: CheckConfig) -> Outcome {
    let programs: Vec<Fixture> = generate::loop_corpus(seed, 12, config)
        .into_iter()
        .enumerate()
        .map(|(i, text)| {
            let program = parse(&text).expect("generated programs parse");
            let analysis = analyze(&program);
            Fixture { name: format!("seeded_{i}"), program, analysis }
        })
        .collect();
    let count = programs.len();
    irrelevance(&programs, config).map(|s| format!("{count} programs (seed {seed}), {s}"))
}

fn main() -> ExitCode {
    let config = CheckConfig::default();
    let seed = seed_from_env();
    let start = Instant::now();
    let corpus = load_corpus();
    let criteria: [Criterion<'_>; 9] = [
        ("abstraction soundness", Box::new(|| soundness(&corpus, config))),
        ("X-projection at the computing point for C1 and C2 sites", Box::new(|| projection_at_cp(&corpus, config))),
        ("X-projection under C = b for C3 and C4 sites", Box::new(|| projection_on_b(&corpus, config))),
        ("irrelevance of ITP sites", Box::new(|| irrelevance(&corpus, config))),
        ("m1 fixture family", Box::new(|| m1_family(&corpus, config))),
        ("relatedness and interference fixtures", Box::new(|| relatedness(&corpus))),
        ("weakest precondition validity", Box::new(|| wp_suffixes(seed, config))),
        ("corpus determinism", Box::new(determinism)),
        ("randomized irrelevance suite", Box::new(|| differential(seed, config))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = check();
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{ms} ms]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{ms} ms]", i + 1);
            }
        }
    }
    println!("{} of 9 criteria passed in {:.1} s", 9 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
