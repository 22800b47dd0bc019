//! Runs every fixture of a directory through analyze, abstract and the
//! workflow, and compares the outcome with the directory's golden file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use itp_core::checker::{CheckConfig, Checker};
use itp_core::itp::analyze;
use itp_core::workflow::{run_workflow, valid_log};
use itp_core::{parse, Cfg};

use crate::report::{sha256_hex, SiteDto, SkippedDto, WorkflowBody};

pub const GOLDEN: &str = "golden.json";

/// Sorted `(name, source)` pairs for every `.mi` file in `dir`.
pub fn load_fixtures(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mi"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let src = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
            Ok((name, src))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SiteOutcome {
    pub node: u32,
    pub predicate: String,
    pub itp: bool,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    pub payoff: usize,
    /// Case labels and final verdict, for ITP sites.
    pub workflow: Option<WorkflowSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct WorkflowSummary {
    pub labels: Vec<String>,
    #[serde(rename = "final")]
    pub final_verdict: String,
    pub inputs: Option<std::collections::BTreeMap<String, i64>>,
    pub valid_log: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct FixtureOutcome {
    pub name: String,
    pub sha256: String,
    /// Verdict of the brute-force checker on the program itself.
    pub verdict: String,
    pub sites: Vec<SiteOutcome>,
    pub skipped: Vec<String>,
}

/// Full per-fixture record: the golden subset plus the detailed reports.
#[derive(Clone, Debug, Serialize)]
pub struct FixtureDetail {
    #[serde(flatten)]
    pub outcome: FixtureOutcome,
    pub reports: Vec<SiteDto>,
    pub skipped_sites: Vec<SkippedDto>,
    pub workflows: Vec<WorkflowBody>,
}

pub fn run_fixture(name: &str, src: &str, config: CheckConfig) -> Result<FixtureDetail> {
    let p = parse(src).with_context(|| format!("parsing fixture {name}"))?;
    let source_cfg = Cfg::build(&p);
    let verdict = Checker::from_cfg(source_cfg.clone(), config).verify();
    let a = analyze(&p);
    let mut sites = Vec::new();
    let mut workflows = Vec::new();
    for r in &a.reports {
        let workflow = if r.itp {
            let w = run_workflow(&r.site, config).context("workflow precondition")?;
            let summary = WorkflowSummary {
                labels: w.labels().iter().map(|c| c.label().to_string()).collect(),
                final_verdict: w.final_verdict.kind().to_string(),
                inputs: match &w.final_verdict {
                    itp_core::workflow::Final::Violated(t) => Some(t.inputs.clone()),
                    _ => None,
                },
                valid_log: valid_log(&w.labels(), w.final_verdict.kind() == "inconclusive"),
            };
            workflows.push(WorkflowBody::new(&source_cfg, &w));
            Some(summary)
        } else {
            None
        };
        sites.push(SiteOutcome {
            node: r.site.original_predicate.0,
            predicate: r.site.text(),
            itp: r.itp,
            c1: r.c1.holds,
            c2: r.c2.holds,
            c3: r.c3.holds,
            c4: r.c4.holds,
            payoff: r.payoff,
            workflow,
        });
    }
    Ok(FixtureDetail {
        outcome: FixtureOutcome {
            name: name.to_string(),
            sha256: sha256_hex(src.as_bytes()),
            verdict: verdict.status().to_string(),
            sites,
            skipped: a.skipped.iter().map(|s| format!("{}: {}", s.predicate, s.error)).collect(),
        },
        reports: a.reports.iter().map(SiteDto::from).collect(),
        skipped_sites: a.skipped.iter().map(SkippedDto::from).collect(),
        workflows,
    })
}

pub fn run_corpus(fixtures: &[(String, String)], config: CheckConfig, parallel: bool) -> Result<Vec<FixtureDetail>> {
    if parallel {
        fixtures.par_iter().map(|(n, s)| run_fixture(n, s, config)).collect()
    } else {
        fixtures.iter().map(|(n, s)| run_fixture(n, s, config)).collect()
    }
}

pub fn golden_of(details: &[FixtureDetail]) -> Vec<FixtureOutcome> {
    details.iter().map(|d| d.outcome.clone()).collect()
}

pub fn read_golden(dir: &Path) -> Result<Option<Vec<FixtureOutcome>>> {
    let path = dir.join(GOLDEN);
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?))
}

pub fn write_golden(dir: &Path, golden: &[FixtureOutcome]) -> Result<()> {
    let path = dir.join(GOLDEN);
    fs::write(&path, serde_json::to_string_pretty(golden)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

/// Names of fixtures whose outcome differs from the golden file (including
/// fixtures missing on either side).
pub fn golden_diff(actual: &[FixtureOutcome], golden: &[FixtureOutcome]) -> Vec<String> {
    let mut out = Vec::new();
    for a in actual {
        match golden.iter().find(|g| g.name == a.name) {
            Some(g) if g == a => {}
            Some(_) => out.push(a.name.clone()),
            None => out.push(format!("{} (not in golden)", a.name)),
        }
    }
    for g in golden {
        if !actual.iter().any(|a| a.name == g.name) {
            out.push(format!("{} (missing fixture)", g.name));
        }
    }
    out
}

/// One line per site: fixture, node, predicate, itp, labels, final.
pub fn table(details: &[FixtureDetail]) -> String {
    let mut s =
        format!("{:<12} {:>4}  {:<24} {:<5} {:<18} {}\n", "fixture", "node", "predicate", "itp", "cases", "final");
    for d in details {
        let o = &d.outcome;
        if o.sites.is_empty() {
            s += &format!("{:<12} {:>4}  {:<24} {:<5} {:<18} {}\n", o.name, "-", "-", "-", "-", o.verdict);
        }
        for site in &o.sites {
            let (labels, fin) = match &site.workflow {
                Some(w) => (w.labels.join(" "), w.final_verdict.clone()),
                None => ("-".into(), format!("(P: {})", o.verdict)),
            };
            s += &format!(
                "{:<12} {:>4}  {:<24} {:<5} {:<18} {}\n",
                o.name, site.node, site.predicate, site.itp, labels, fin
            );
        }
    }
    s
}
