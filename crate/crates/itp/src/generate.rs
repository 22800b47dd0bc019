//! Seeded random MiniImp programs.
//!
//! Loop programs keep every value inside the default checking domain
//! (assignments are constants, copies, counters or `% 3` sums), so the
//! nondet values of an abstraction can always reproduce the concrete ones.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use itp_core::checker::{CheckConfig, Checker, Observer, RunEnd};
use itp_core::itp::analyze;
use itp_core::transform::abstract_program;
use itp_core::{parse, Program};

pub const SEED_VAR: &str = "ITP_SEED";
pub const DEFAULT_SEED: u64 = 20_240_521;

/// The seed from `ITP_SEED`, or the default.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_VAR).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

const DATA: [&str; 4] = ["w", "x", "y", "z"];
const INPUTS: [&str; 2] = ["a", "b"];
const CMP: [&str; 6] = ["<", "<=", ">", ">=", "==", "!="];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).copied().unwrap_or("x")
}

fn operand(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..6) {
        0 => rng.gen_range(-1..=2).to_string(),
        1 => pick(rng, &INPUTS).to_string(),
        _ => pick(rng, &DATA).to_string(),
    }
}

fn rhs(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..5) {
        0 => rng.gen_range(-2..=2).to_string(),
        1 => operand(rng),
        2 => format!("({} + {}) % 3", operand(rng), operand(rng)),
        3 => format!("({} - {}) % 3", operand(rng), operand(rng)),
        _ => format!("{} % 2", operand(rng)),
    }
}

fn cond(rng: &mut ChaCha8Rng) -> String {
    let lhs = pick(rng, &DATA);
    let rhs = if rng.gen_bool(0.6) { rng.gen_range(-1..=2).to_string() } else { operand(rng) };
    format!("{lhs} {} {rhs}", pick(rng, &CMP))
}

fn assign(rng: &mut ChaCha8Rng, indent: &str) -> String {
    format!("{indent}{} = {};\n", pick(rng, &DATA), rhs(rng))
}

fn simple(rng: &mut ChaCha8Rng, indent: &str) -> String {
    if rng.gen_bool(0.35) {
        let inner = format!("{indent}    ");
        format!(
            "{indent}if ({}) {{\n{}{indent}}} else {{\n{}{indent}}}\n",
            cond(rng),
            assign(rng, &inner),
            assign(rng, &inner)
        )
    } else {
        assign(rng, indent)
    }
}

fn lines(rng: &mut ChaCha8Rng, indent: &str, lo: usize, hi: usize) -> String {
    (0..rng.gen_range(lo..=hi)).map(|_| simple(rng, indent)).collect()
}

/// A program with one or two counted loops bounded by the inputs, a final
/// branch on the data variables, and an assert.
pub fn loop_program_text(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::from("int a = input();\nint b = input();\nint i = 0;\nint j = 0;\n");
    for v in DATA {
        s += &format!("int {v} = {};\n", rng.gen_range(-1..=1));
    }
    s += &lines(rng, "", 0, 2);
    let bound = pick(rng, &INPUTS);
    s += &format!("while (i < {bound}) {{\n");
    s += &lines(rng, "    ", 1, 3);
    if rng.gen_bool(0.3) {
        let other = pick(rng, &INPUTS);
        s += &format!("    j = 0;\n    while (j < {other}) {{\n");
        s += &lines(rng, "        ", 1, 2);
        s += "        j = j + 1;\n    }\n";
    }
    s += "    i = i + 1;\n}\n";
    s += &lines(rng, "", 0, 2);
    s += &format!("if ({}) {{\n    w = {};\n}} else {{\n    w = {};\n}}\n", cond(rng), rhs(rng), rhs(rng));
    s += &format!("assert({});\n", cond(rng));
    s
}

struct Counter {
    runs: u64,
    limit: u64,
}

impl Observer for Counter {
    fn end_run(&mut self, _run: &RunEnd<'_>) -> bool {
        self.runs += 1;
        self.runs <= self.limit
    }
}

fn enumeration_fits(p: &Program, config: CheckConfig, limit: u64) -> bool {
    let mut c = Counter { runs: 0, limit };
    Checker::new(p, config).explore(&mut c);
    c.runs <= limit
}

/// Whether exhaustive checking of `p` and of every abstraction stays small.
pub fn tractable(p: &Program, config: CheckConfig, limit: u64) -> bool {
    if !enumeration_fits(p, config, limit) {
        return false;
    }
    let a = analyze(p);
    !a.reports.is_empty()
        && a.reports.iter().all(|r| enumeration_fits(&abstract_program(&r.site).abstract_program, config, limit))
}

/// `count` loop programs, drawn until each has an ITP predicate, is
/// tractable, and terminates within the budget on the whole domain.
pub fn loop_corpus(seed: u64, count: usize, config: CheckConfig) -> Vec<String> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let text = loop_program_text(&mut rng);
        let Ok(p) = parse(&text) else { continue };
        if !analyze(&p).reports.iter().any(|r| r.itp) || !tractable(&p, config, 40_000) {
            continue;
        }
        if matches!(Checker::new(&p, config).verify(), itp_core::Verdict::BudgetExceeded(_)) {
            continue;
        }
        out.push(text);
    }
    out
}

/// A straight-line suffix: inputs, the `skip;` marker, assignments (with an
/// occasional `*` read and one-armed branches), then the assert.
pub fn suffix_program_text(rng: &mut ChaCha8Rng) -> String {
    const VARS: [&str; 3] = ["p", "q", "r"];
    let mut s: String = VARS.iter().map(|v| format!("int {v} = input();\n")).collect();
    s += "skip;\n";
    let term = |rng: &mut ChaCha8Rng| -> String {
        if rng.gen_bool(0.3) {
            rng.gen_range(-2..=3).to_string()
        } else {
            pick(rng, &VARS).to_string()
        }
    };
    for _ in 0..rng.gen_range(1..=5) {
        let v = pick(rng, &VARS);
        match rng.gen_range(0..6) {
            0 => s += &format!("{v} = *;\n"),
            1 => {
                let c = format!("{} {} {}", pick(rng, &VARS), pick(rng, &CMP), term(rng));
                s += &format!("if ({c}) {{\n    {v} = {} + {};\n}}\n", term(rng), term(rng));
            }
            2 => s += &format!("{v} = {} * {};\n", term(rng), term(rng)),
            3 => s += &format!("{v} = {} - {};\n", term(rng), term(rng)),
            _ => s += &format!("{v} = {} + {};\n", term(rng), term(rng)),
        }
    }
    s += &format!("assert({} {} {});\n", pick(rng, &VARS), pick(rng, &CMP), term(rng));
    s
}
