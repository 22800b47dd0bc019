use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use itp::corpus;
use itp::generate;
use itp::report::{self, RunManifest, WorkflowBody, WorkflowDto, BOUNDED_NOTE};
use itp_core::checker::{violating_suffix, CheckConfig, Checker, Verdict};
use itp_core::dataflow::{backward_slice, reaching_definitions, slice_program};
use itp_core::itp::{analyze, Analysis, CriteriaReport};
use itp_core::pretty::expr_to_string;
use itp_core::transform::{abstract_program, build_phat, build_ptilde, build_wp_problem, weakest_precondition};
use itp_core::workflow::{run_workflow_with, Final, WorkflowOptions};
use itp_core::{parse, pretty_print, Cfg, Program};

/// Find, abstract and check property-irrelevant predicates in MiniImp programs.
#[derive(Parser)]
#[command(name = "itp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct CheckArgs {
    /// Smallest value of input() and `*`
    #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
    lo: i64,
    /// Largest value of input() and `*`
    #[arg(long, default_value_t = 3, allow_hyphen_values = true)]
    hi: i64,
    /// Maximum executed nodes per run
    #[arg(long, default_value_t = 20_000)]
    budget: usize,
}

impl CheckArgs {
    fn config(self) -> Result<CheckConfig> {
        let c = CheckConfig { lo: self.lo, hi: self.hi, budget: self.budget };
        if !c.is_valid() {
            bail!("invalid check configuration: need lo <= hi and budget >= 1");
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SiteArgs {
    file: PathBuf,
    /// Node id of the predicate in the input program (default: first ITP site)
    #[arg(long)]
    predicate: Option<u32>,
    /// Write the program here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program; print it in canonical form
    Parse {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Emit the control-flow graph in DOT
    CfgDot {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Backward slice with respect to the assert
    Slice {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write reaching definitions and liveness per node as JSON
        #[arg(long)]
        dump_dataflow: Option<PathBuf>,
    },
    /// Evaluate the ITP criteria for every sliced predicate
    Analyze {
        file: PathBuf,
        #[arg(long)]
        json: bool,
        /// Write the CFG in DOT
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        dump_dataflow: Option<PathBuf>,
        /// Write EVI node lists and value bases per site as JSON
        #[arg(long)]
        dump_evi: Option<PathBuf>,
    },
    /// Abstract a predicate: nondet assignments at its computing point
    Abstract(SiteArgs),
    /// Program checking that the predicate is constantly !b at its computing point
    Phat {
        #[command(flatten)]
        site: SiteArgs,
        /// Violating value b
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        b: bool,
    },
    /// Program with the predicate replaced by the constant !b
    Ptilde {
        #[command(flatten)]
        site: SiteArgs,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        b: bool,
    },
    /// Weakest-precondition problem for the abstract counterexample's suffix
    Wp {
        #[command(flatten)]
        site: SiteArgs,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long)]
        json: bool,
    },
    /// Bounded-exhaustive check of the assert
    Verify {
        file: PathBuf,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long)]
        json: bool,
    },
    /// Run the full checking procedure for one predicate
    Workflow {
        file: PathBuf,
        #[arg(long)]
        predicate: Option<u32>,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long)]
        json: bool,
        /// Run even if the predicate is not ITP
        #[arg(long)]
        force: bool,
    },
    /// Run every fixture of a directory and compare with its golden file
    Corpus {
        dir: PathBuf,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Rewrite the golden file from this run
        #[arg(long)]
        bless: bool,
        /// Run fixtures one after another
        #[arg(long)]
        sequential: bool,
    },
    /// Write seeded random loop programs (seed from --seed or ITP_SEED)
    Generate {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "gen")]
        prefix: String,
    },
}

fn load(path: &Path) -> Result<(String, Program)> {
    let src = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let p = parse(&src).map_err(|e| anyhow!("{}:{e}", path.display()))?;
    Ok((src, p))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn select(a: &Analysis, predicate: Option<u32>) -> Result<&CriteriaReport> {
    let listing = || {
        a.reports
            .iter()
            .map(|r| format!("{} ({})", r.site.original_predicate, r.site.text()))
            .collect::<Vec<_>>()
            .join(", ")
    };
    match predicate {
        Some(id) => a.reports.iter().find(|r| r.site.original_predicate.0 == id).ok_or_else(|| {
            match a.skipped.iter().find(|s| s.predicate.0 == id) {
                Some(s) => anyhow!("predicate {id} has no computing point: {}", s.error),
                None => anyhow!("node {id} is not an analyzable predicate; sites: {}", listing()),
            }
        }),
        None => a
            .reports
            .iter()
            .find(|r| r.itp)
            .ok_or_else(|| anyhow!("no ITP predicate; pass --predicate (sites: {})", listing())),
    }
}

fn dump<T: Serialize>(path: Option<&Path>, value: impl FnOnce() -> T) -> Result<()> {
    if let Some(path) = path {
        fs::write(path, serde_json::to_string_pretty(&value())? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Parse { file, json } => {
            let (src, p) = load(&file)?;
            if json {
                #[derive(Serialize)]
                struct ParseDto {
                    manifest: RunManifest,
                    variables: Vec<String>,
                    statements: usize,
                    program: String,
                }
                print_json(&ParseDto {
                    manifest: RunManifest::new("parse", src.as_bytes(), CheckConfig::default()).finish(),
                    variables: p.var_names(),
                    statements: p.statements().len(),
                    program: pretty_print(&p),
                })?;
            } else {
                print!("{}", pretty_print(&p));
            }
        }
        Command::CfgDot { file, out } => {
            let (_, p) = load(&file)?;
            emit(&Cfg::build(&p).to_dot(), out.as_deref())?;
        }
        Command::Slice { file, json, out, dump_dataflow } => {
            let (src, p) = load(&file)?;
            let g = Cfg::build(&p);
            let du = reaching_definitions(&g);
            let slice = backward_slice(&g, &du);
            dump(dump_dataflow.as_deref(), || report::dataflow_dump(&g))?;
            if json {
                #[derive(Serialize)]
                struct SliceDto {
                    manifest: RunManifest,
                    nodes: Vec<u32>,
                    program: String,
                }
                let dto = SliceDto {
                    manifest: RunManifest::new("slice", src.as_bytes(), CheckConfig::default()).finish(),
                    nodes: slice.iter().map(|n| n.0).collect(),
                    program: pretty_print(&slice_program(&p, &g, &slice)),
                };
                emit(&(serde_json::to_string_pretty(&dto)? + "\n"), out.as_deref())?;
            } else {
                emit(&pretty_print(&slice_program(&p, &g, &slice)), out.as_deref())?;
            }
        }
        Command::Analyze { file, json, dot, dump_dataflow, dump_evi } => {
            let (src, p) = load(&file)?;
            let a = analyze(&p);
            if let Some(path) = &dot {
                fs::write(path, a.cfg.to_dot()).with_context(|| format!("writing {}", path.display()))?;
            }
            dump(dump_dataflow.as_deref(), || report::dataflow_dump(&a.cfg))?;
            dump(dump_evi.as_deref(), || report::evi_dump(&a))?;
            let dto = report::analyze_dto(RunManifest::new("analyze", src.as_bytes(), CheckConfig::default()), &a);
            if json {
                print_json(&dto)?;
            } else {
                for s in &dto.sites {
                    println!(
                        "node {:>3}  {:<24} Ĉ={:<3} c1={} c2={} c3={} c4={}  itp={}",
                        s.node, s.predicate, s.computing_point, s.c1, s.c2, s.c3, s.c4, s.itp
                    );
                }
                for s in &dto.skipped {
                    println!("node {:>3}  {:<24} skipped: {}", s.node, s.predicate, s.reason);
                }
            }
        }
        Command::Abstract(args) => {
            let (_, p) = load(&args.file)?;
            let a = analyze(&p);
            let r = select(&a, args.predicate)?;
            emit(&pretty_print(&abstract_program(&r.site).abstract_program), args.out.as_deref())?;
        }
        Command::Phat { site, b } => {
            let (_, p) = load(&site.file)?;
            let a = analyze(&p);
            let r = select(&a, site.predicate)?;
            emit(&pretty_print(&build_phat(&r.site, b)), site.out.as_deref())?;
        }
        Command::Ptilde { site, b } => {
            let (_, p) = load(&site.file)?;
            let a = analyze(&p);
            let r = select(&a, site.predicate)?;
            emit(&pretty_print(&build_ptilde(&r.site, b)), site.out.as_deref())?;
        }
        Command::Wp { site, check, json } => {
            let config = check.config()?;
            let (src, p) = load(&site.file)?;
            let a = analyze(&p);
            let r = select(&a, site.predicate)?;
            let abs = abstract_program(&r.site);
            let t = match Checker::from_cfg(abs.cfg.clone(), config).verify() {
                Verdict::Violated(t) => t,
                v => bail!("abstract program is {}; there is no violating suffix", v.status()),
            };
            let pi = violating_suffix(&abs.cfg, &t, abs.computing_point, abs.predicate)
                .ok_or_else(|| anyhow!("abstract counterexample bypasses the computing point"))?;
            let psi = weakest_precondition(&abs.cfg, &pi)?;
            let program = pretty_print(&build_wp_problem(&r.site, &psi));
            if json {
                #[derive(Serialize)]
                struct WpDto {
                    manifest: RunManifest,
                    psi: String,
                    suffix: Vec<u32>,
                    violating_value: Option<bool>,
                    program: String,
                }
                let dto = WpDto {
                    manifest: RunManifest::new("wp", src.as_bytes(), config).finish(),
                    psi: expr_to_string(&psi),
                    suffix: pi.path.iter().map(|n| n.0).collect(),
                    violating_value: pi.c_outcome,
                    program,
                };
                emit(&(serde_json::to_string_pretty(&dto)? + "\n"), site.out.as_deref())?;
            } else {
                emit(&program, site.out.as_deref())?;
            }
        }
        Command::Verify { file, check, json } => {
            let config = check.config()?;
            let (src, p) = load(&file)?;
            let checker = Checker::new(&p, config);
            let (verdict, stats) = checker.verify_until(|_| true);
            if json {
                print_json(&report::verdict_dto(
                    RunManifest::new("verify", src.as_bytes(), config),
                    &checker.cfg,
                    &verdict,
                    stats,
                ))?;
            } else {
                println!(
                    "{} ({} runs, domain [{}, {}], budget {})",
                    verdict.status(),
                    stats.runs,
                    config.lo,
                    config.hi,
                    config.budget
                );
                if let Some(t) = verdict.trace() {
                    println!("inputs: {:?}  nondet: {:?}", t.inputs, t.nondet);
                }
                println!("note: {BOUNDED_NOTE}");
            }
            return Ok(match verdict {
                Verdict::Holds { .. } => 0,
                Verdict::Violated(_) => 2,
                Verdict::BudgetExceeded(_) => 3,
            });
        }
        Command::Workflow { file, predicate, check, json, force } => {
            let config = check.config()?;
            let (src, p) = load(&file)?;
            let a = analyze(&p);
            let r = select(&a, predicate)?;
            let w = run_workflow_with(&r.site, WorkflowOptions { config, allow_non_itp: force })?;
            let body = WorkflowBody::new(&a.cfg, &w);
            if json {
                print_json(&WorkflowDto {
                    manifest: RunManifest::new("workflow", src.as_bytes(), config).finish(),
                    body,
                    note: BOUNDED_NOTE,
                })?;
            } else {
                for s in &body.steps {
                    println!("{:<18} {:<16} {}", s.problem, s.verdict, s.case.unwrap_or("-"));
                }
                match &body.final_verdict.counterexample {
                    Some(t) => println!("final: violated, inputs {:?}", t.inputs),
                    None => println!(
                        "final: {}{}",
                        body.final_verdict.kind,
                        body.final_verdict.reason.as_ref().map(|r| format!(" ({r})")).unwrap_or_default()
                    ),
                }
            }
            return Ok(match w.final_verdict {
                Final::Holds => 0,
                Final::Violated(_) => 2,
                Final::Inconclusive(_) => 3,
            });
        }
        Command::Corpus { dir, check, json, out, bless, sequential } => {
            let config = check.config()?;
            let fixtures = corpus::load_fixtures(&dir)?;
            if fixtures.is_empty() {
                bail!("no .mi fixtures in {}", dir.display());
            }
            let joined: String = fixtures.iter().map(|(n, s)| format!("{n}\n{s}")).collect();
            let manifest = RunManifest::new("corpus", joined.as_bytes(), config);
            let details = corpus::run_corpus(&fixtures, config, !sequential)?;
            let actual = corpus::golden_of(&details);
            let diff = match corpus::read_golden(&dir)? {
                _ if bless => {
                    corpus::write_golden(&dir, &actual)?;
                    Vec::new()
                }
                Some(golden) => corpus::golden_diff(&actual, &golden),
                None => vec![format!("no {} in {}", corpus::GOLDEN, dir.display())],
            };
            #[derive(Serialize)]
            struct CorpusDto<'a> {
                manifest: RunManifest,
                golden_match: bool,
                mismatches: &'a [String],
                fixtures: &'a [corpus::FixtureDetail],
                note: &'static str,
            }
            let dto = CorpusDto {
                manifest: manifest.finish(),
                golden_match: diff.is_empty(),
                mismatches: &diff,
                fixtures: &details,
                note: BOUNDED_NOTE,
            };
            if let Some(path) = &out {
                fs::write(path, serde_json::to_string_pretty(&dto)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            if json {
                print_json(&dto)?;
            } else {
                print!("{}", corpus::table(&details));
                if diff.is_empty() {
                    println!("golden: match");
                } else {
                    println!("golden: MISMATCH: {}", diff.join(", "));
                }
            }
            return Ok(if diff.is_empty() { 0 } else { 1 });
        }
        Command::Generate { out_dir, count, seed, prefix } => {
            let seed = seed.unwrap_or_else(generate::seed_from_env);
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for (i, text) in generate::loop_corpus(seed, count, CheckConfig::default()).iter().enumerate() {
                let path = out_dir.join(format!("{prefix}_{i:02}.mi"));
                let program = parse(text).map_err(|e| anyhow!("generated program does not parse: {e}"))?;
                fs::write(&path, pretty_print(&program)).with_context(|| format!("writing {}", path.display()))?;
                println!("{}", path.display());
            }
            eprintln!("seed {seed}");
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
