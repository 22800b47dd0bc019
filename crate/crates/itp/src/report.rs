//! JSON shapes emitted by the CLI, and the run manifest embedded in each.

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use itp_core::cfg::{Cfg, NodeId};
use itp_core::checker::{CheckConfig, Stats, Trace, Verdict};
use itp_core::dataflow::{live_variables, reaching_definitions, LivenessQuery};
use itp_core::itp::{names, Analysis, CriteriaReport, SkippedSite};
use itp_core::pretty::expr_to_string;
use itp_core::workflow::{Final, WorkflowReport};

pub const BOUNDED_NOTE: &str =
    "verdicts are relative to the checking domain and step budget; they do not transfer to unbounded integers";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ConfigDto {
    pub lo: i64,
    pub hi: i64,
    pub budget: usize,
}

impl From<CheckConfig> for ConfigDto {
    fn from(c: CheckConfig) -> Self {
        ConfigDto { lo: c.lo, hi: c.hi, budget: c.budget }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Timestamps {
    pub started: u64,
    pub finished: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub input_sha256: String,
    pub subcommand: String,
    pub config: ConfigDto,
    pub timestamps: Timestamps,
}

impl RunManifest {
    pub fn new(subcommand: &str, input: &[u8], config: CheckConfig) -> Self {
        let now = unix_now();
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            input_sha256: sha256_hex(input),
            subcommand: subcommand.into(),
            config: config.into(),
            timestamps: Timestamps { started: now, finished: now },
        }
    }

    pub fn finish(mut self) -> Self {
        self.timestamps.finished = unix_now();
        self
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Witnesses {
    pub c1: Vec<String>,
    pub c2: Vec<String>,
    pub c3: Vec<String>,
    pub c4: Vec<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SiteDto {
    pub predicate: String,
    pub node: u32,
    pub computing_point: u32,
    #[serde(rename = "X")]
    pub x: Vec<String>,
    #[serde(rename = "Y")]
    pub y: Vec<String>,
    #[serde(rename = "Z")]
    pub z: Vec<String>,
    #[serde(rename = "VB_X")]
    pub vb_x: Vec<String>,
    #[serde(rename = "VB_Y")]
    pub vb_y: Vec<String>,
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
    pub witnesses: Witnesses,
    pub itp: bool,
}

impl From<&CriteriaReport> for SiteDto {
    fn from(r: &CriteriaReport) -> Self {
        let list = |s: std::collections::BTreeSet<String>| s.into_iter().collect::<Vec<_>>();
        SiteDto {
            predicate: r.site.text(),
            node: r.site.original_predicate.0,
            computing_point: r.site.computing_point.0,
            x: list(r.x_names()),
            y: list(r.site.y_names()),
            z: list(r.z_names()),
            vb_x: list(r.vb_x_names()),
            vb_y: list(r.vb_y_names()),
            c1: r.c1.holds,
            c2: r.c2.holds,
            c3: r.c3.holds,
            c4: r.c4.holds,
            witnesses: Witnesses {
                c1: r.c1.witness.clone(),
                c2: r.c2.witness.clone(),
                c3: r.c3.witness.clone(),
                c4: r.c4.witness.clone(),
            },
            itp: r.itp,
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SkippedDto {
    pub node: u32,
    pub predicate: String,
    pub reason: String,
}

impl From<&SkippedSite> for SkippedDto {
    fn from(s: &SkippedSite) -> Self {
        SkippedDto { node: s.predicate.0, predicate: s.text.clone(), reason: s.error.to_string() }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CandidateDto {
    pub node: u32,
    pub payoff: usize,
    pub itp: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeDto {
    pub manifest: RunManifest,
    pub notes: Vec<String>,
    pub sites: Vec<SiteDto>,
    pub skipped: Vec<SkippedDto>,
    /// Sites whose abstraction can remove loop code, best payoff first.
    pub candidates: Vec<CandidateDto>,
}

pub fn analyze_dto(manifest: RunManifest, a: &Analysis) -> AnalyzeDto {
    let mut notes = vec![
        "node ids refer to the input program; computing_point ids refer to the program with a skip inserted at the computing point".to_string(),
    ];
    for r in &a.reports {
        if r.c4.holds != r.c4_subset_reading {
            notes.push(format!(
                "node {}: c4 is {} under the subset reading of value-changing loops",
                r.site.original_predicate, r.c4_subset_reading
            ));
        }
    }
    AnalyzeDto {
        manifest: manifest.finish(),
        notes,
        sites: a.reports.iter().map(SiteDto::from).collect(),
        skipped: a.skipped.iter().map(SkippedDto::from).collect(),
        candidates: itp_core::itp::rank_candidates(&a.reports)
            .into_iter()
            .map(|i| {
                let r = &a.reports[i];
                CandidateDto { node: r.site.original_predicate.0, payoff: r.payoff, itp: r.itp }
            })
            .collect(),
    }
}

pub type Store = BTreeMap<String, i64>;

pub fn named_store(g: &Cfg, store: &[i64]) -> Store {
    g.vars.iter().cloned().zip(store.iter().copied()).collect()
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TraceDto {
    pub status: &'static str,
    pub inputs: BTreeMap<String, i64>,
    pub nondet: Vec<i64>,
    pub trace: Vec<(u32, Store)>,
}

impl TraceDto {
    pub fn new(g: &Cfg, t: &Trace) -> Self {
        TraceDto {
            status: t.status.as_str(),
            inputs: t.inputs.clone(),
            nondet: t.nondet.clone(),
            trace: t.steps.iter().map(|(n, s)| (n.0, named_store(g, s))).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct StatsDto {
    pub runs: u64,
    pub assert_fail: u64,
    pub budget: u64,
    pub div_by_zero: u64,
}

impl From<Stats> for StatsDto {
    fn from(s: Stats) -> Self {
        StatsDto { runs: s.runs, assert_fail: s.assert_fail, budget: s.budget, div_by_zero: s.div_by_zero }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictDto {
    pub manifest: RunManifest,
    pub status: &'static str,
    pub exhaustive: bool,
    pub inputs: BTreeMap<String, i64>,
    pub nondet: Vec<i64>,
    pub trace: Vec<(u32, Store)>,
    pub stats: StatsDto,
    pub note: &'static str,
}

pub fn verdict_dto(manifest: RunManifest, g: &Cfg, v: &Verdict, stats: Stats) -> VerdictDto {
    let (inputs, nondet, trace) = match v.trace() {
        Some(t) => {
            let d = TraceDto::new(g, t);
            (d.inputs, d.nondet, d.trace)
        }
        None => Default::default(),
    };
    VerdictDto {
        manifest: manifest.finish(),
        status: v.status(),
        exhaustive: v.exhaustive(),
        inputs,
        nondet,
        trace,
        stats: stats.into(),
        note: BOUNDED_NOTE,
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct StepDto {
    pub problem: String,
    pub verdict: &'static str,
    pub case: Option<&'static str>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FinalDto {
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<TraceDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl FinalDto {
    pub fn new(g: &Cfg, f: &Final) -> Self {
        match f {
            Final::Holds => FinalDto { kind: f.kind(), counterexample: None, reason: None },
            Final::Violated(t) => FinalDto { kind: f.kind(), counterexample: Some(TraceDto::new(g, t)), reason: None },
            Final::Inconclusive(r) => FinalDto { kind: f.kind(), counterexample: None, reason: Some(r.clone()) },
        }
    }
}

/// A workflow report without the manifest; shared by `workflow` and `corpus`.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct WorkflowBody {
    pub predicate: String,
    pub node: u32,
    pub computing_point: u32,
    pub itp: bool,
    pub steps: Vec<StepDto>,
    pub labels: Vec<&'static str>,
    #[serde(rename = "final")]
    pub final_verdict: FinalDto,
    pub violating_value: Option<bool>,
    pub psi: Option<String>,
}

impl WorkflowBody {
    /// `g` is the graph of the source program (final traces refer to it).
    pub fn new(g: &Cfg, r: &WorkflowReport) -> Self {
        WorkflowBody {
            predicate: r.text.clone(),
            node: r.predicate.0,
            computing_point: r.computing_point.0,
            itp: r.itp,
            steps: r
                .steps
                .iter()
                .map(|s| StepDto { problem: s.problem.name(), verdict: s.verdict, case: s.case.map(|c| c.label()) })
                .collect(),
            labels: r.labels().iter().map(|c| c.label()).collect(),
            final_verdict: FinalDto::new(g, &r.final_verdict),
            violating_value: r.violating_value,
            psi: r.psi.as_ref().map(expr_to_string),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WorkflowDto {
    pub manifest: RunManifest,
    #[serde(flatten)]
    pub body: WorkflowBody,
    pub note: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct DataflowNode {
    pub id: u32,
    pub kind: &'static str,
    pub text: String,
    pub def: Option<String>,
    pub uses: Vec<String>,
    pub reaching: Vec<(String, u32)>,
    pub live_in: Vec<String>,
    pub live_out: Vec<String>,
}

/// Reaching definitions at node entry and plain liveness (assert as the
/// only sink), per node.
pub fn dataflow_dump(g: &Cfg) -> Vec<DataflowNode> {
    let du = reaching_definitions(g);
    let live = live_variables(g, &LivenessQuery::default());
    g.node_ids()
        .map(|n| DataflowNode {
            id: n.0,
            kind: g.kind(n).name(),
            text: g.node(n).text.clone(),
            def: g.def(n).map(|v| g.var_name(v).to_string()),
            uses: names(g, &g.uses(n)).into_iter().collect(),
            reaching: du.reach_in[n.index()].iter().map(|&(v, d)| (g.var_name(v).to_string(), d.0)).collect(),
            live_in: names(g, &live.live_in[n.index()]).into_iter().collect(),
            live_out: names(g, &live.live_out[n.index()]).into_iter().collect(),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EviDump {
    pub node: u32,
    pub computing_point: u32,
    pub evi_x: Vec<u32>,
    pub evi_y: Vec<u32>,
    #[serde(rename = "VB_X")]
    pub vb_x: Vec<String>,
    #[serde(rename = "VB_Y")]
    pub vb_y: Vec<String>,
}

/// EVI node lists use the ids of the program with the computing-point skip.
pub fn evi_dump(a: &Analysis) -> Vec<EviDump> {
    let ids = |s: &std::collections::BTreeSet<NodeId>| s.iter().map(|n| n.0).collect();
    a.reports
        .iter()
        .map(|r| EviDump {
            node: r.site.original_predicate.0,
            computing_point: r.site.computing_point.0,
            evi_x: ids(&r.evi_x.nodes),
            evi_y: ids(&r.evi_y.nodes),
            vb_x: r.vb_x_names().into_iter().collect(),
            vb_y: r.vb_y_names().into_iter().collect(),
        })
        .collect()
}
