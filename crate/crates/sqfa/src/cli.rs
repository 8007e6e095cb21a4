//! Command-line surface. Every verb is a thin composition of library
//! calls: machines come from `constructions` or a spec document, numbers
//! come from `analysis` and `montecarlo`, and this module only parses
//! flags and formats output.

use crate::analysis::report::ComplexityReport;
use crate::analysis::verify::{
    eq_promise_words_exhaustive, eq_promise_words_sampled, unary_words, verify_mode,
    VerificationReport,
};
use crate::analysis::{acceptance, report, AcceptanceResult};
use crate::constructions::{
    dfa_len, dfa_mod, eq_1qcfa, len_2qcfa, mod_2qcfa, moqfa_mod, tradeoff_1qcfa,
};
use crate::error::SqfaError;
use crate::exact::display_scalar;
use crate::machine::{serial, AcceptanceMode, Language, Machine};
use crate::montecarlo::{self, Estimate};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Seed used when neither `--seed` nor `SQFA_SEED` is given.
pub const DEFAULT_SEED: u64 = 1729;

#[derive(Debug, Parser)]
#[command(
    name = "sqfa",
    version,
    about = "Build, analyze, verify, and simulate semi-quantum finite automata"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a machine and write its spec document.
    Build {
        #[command(flatten)]
        source: MachineSource,
        /// Output path for the machine document.
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact acceptance law of one word: p_accept, p_reject, expected steps.
    Eval {
        #[command(flatten)]
        source: MachineSource,
        #[arg(long)]
        word: String,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Acceptance law for `a^l` over a length range (CSV columns:
    /// length, class, p_accept, p_reject, expected_steps).
    Sweep {
        #[command(flatten)]
        source: MachineSource,
        /// Inclusive length range, e.g. 1..25, or a single length.
        #[arg(long)]
        lengths: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo estimate of the acceptance law of one word.
    Simulate {
        #[command(flatten)]
        source: MachineSource,
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 100_000)]
        runs: u64,
        /// Censor runs at this many steps
        /// [default: 100x the analytic expectation].
        #[arg(long)]
        step_cap: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
    },
    /// Check a machine against an acceptance mode over a word set;
    /// exits 3 if any word violates its bound.
    Verify {
        #[command(flatten)]
        source: MachineSource,
        /// Unary families: inclusive length range
        /// [default: a multiple of the family period].
        #[arg(long)]
        lengths: Option<String>,
        /// Equality family: check every promise pair.
        #[arg(long)]
        exhaustive: bool,
        /// Equality family: check this many sampled members and
        /// no-instances instead.
        #[arg(long)]
        samples: Option<usize>,
        /// Override the machine's declared mode
        /// (one-sided, error-prob, cut-point, exact).
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Human)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// State-complexity table for a family (CSV columns documented per
    /// family in the module docs).
    Report {
        /// L (mod-p), C (exact length), or EQ (promised equality).
        #[arg(long)]
        family: ReportFamily,
        /// Inclusive parameter range for L, e.g. 2..31.
        #[arg(long)]
        p: Option<String>,
        /// Inclusive parameter range for C.
        #[arg(long)]
        m: Option<String>,
        /// Inclusive parameter range for EQ.
        #[arg(long)]
        n: Option<String>,
        #[arg(long, default_value_t = 0.25)]
        eps: f64,
        /// Constant in the two-way probabilistic lower bound.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct MachineSource {
    /// Machine document written by `build`. Exactly one of --spec and
    /// --family must be given.
    #[arg(long, conflicts_with = "family")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Modulus for mod-p families and the trade-off product.
    #[arg(long)]
    pub p: Option<u64>,
    /// Target length for the exact-length family.
    #[arg(long)]
    pub m: Option<u64>,
    /// Block length for the equality family.
    #[arg(long)]
    pub n: Option<u64>,
    /// First factor of the trade-off split p = q1 * q2.
    #[arg(long)]
    pub q1: Option<u64>,
    /// One-sided error bound for the quantum constructions.
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    /// RNG seed for randomized constructions and simulation
    /// [default: SQFA_SEED or 1729].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Two-way machine for the unary language of multiples of p.
    #[value(name = "mod-2qcfa")]
    Mod2qcfa,
    /// Two-way machine for the single-word language a^m.
    #[value(name = "len-2qcfa")]
    Len2qcfa,
    /// One-way machine for the promised equality problem x#y.
    #[value(name = "eq-1qcfa")]
    Eq1qcfa,
    /// Measure-once machine for multiples of p (randomized, certified).
    #[value(name = "moqfa-mod")]
    MoqfaMod,
    /// Deterministic baseline for multiples of p.
    #[value(name = "dfa-mod")]
    DfaMod,
    /// Deterministic baseline for a^m.
    #[value(name = "dfa-len")]
    DfaLen,
    /// Product machine trading quantum basis states for classical states.
    #[value(name = "tradeoff-1qcfa")]
    Tradeoff1qcfa,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFamily {
    #[value(name = "L", alias = "l")]
    L,
    #[value(name = "C", alias = "c")]
    C,
    #[value(name = "EQ", alias = "eq")]
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    /// JSON, one document per invocation.
    #[value(alias = "structured")]
    Json,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Machine(SqfaError),
    VerificationFailed { machine: String, failures: usize },
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Machine(e) => write!(f, "{e}"),
            CliError::VerificationFailed { machine, failures } => {
                write!(f, "verification failed: {machine} violates its bound on {failures} word(s)")
            }
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    /// 1 = usage, 2 = ill-formed machine or analysis error,
    /// 3 = verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Machine(_) | CliError::Io(_) => 2,
            CliError::VerificationFailed { .. } => 3,
        }
    }
}

impl From<SqfaError> for CliError {
    fn from(e: SqfaError) -> Self {
        CliError::Machine(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Inclusive `a..b` range, or a single value.
pub fn parse_range(s: &str) -> CliResult<Vec<u64>> {
    let parse_one = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| usage(format!("cannot parse '{t}' as a length in '{s}'")))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_one(a)?, parse_one(b)?);
        if a > b {
            return Err(usage(format!("empty range '{s}' (write low..high, both inclusive)")));
        }
        Ok((a..=b).collect())
    } else {
        Ok(vec![parse_one(s)?])
    }
}

fn resolve_seed(explicit: Option<u64>) -> u64 {
    explicit
        .or_else(|| std::env::var("SQFA_SEED").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(DEFAULT_SEED)
}

impl MachineSource {
    pub fn machine(&self) -> CliResult<Machine> {
        match (&self.spec, self.family) {
            (Some(path), None) => Ok(serial::spec_load(path)?),
            (None, Some(family)) => self.build_family(family),
            (None, None) | (Some(_), Some(_)) => {
                Err(usage("exactly one of --spec and --family is required"))
            }
        }
    }

    fn build_family(&self, family: Family) -> CliResult<Machine> {
        let need = |v: Option<u64>, flag: &str| {
            v.ok_or_else(|| usage(format!("family {family:?} requires {flag}")))
        };
        let seed = resolve_seed(self.seed);
        Ok(match family {
            Family::Mod2qcfa => Machine::TwoWay(mod_2qcfa(need(self.p, "--p")?, self.eps)?),
            Family::Len2qcfa => Machine::TwoWay(len_2qcfa(need(self.m, "--m")?, self.eps)?),
            Family::Eq1qcfa => {
                Machine::OneWay(eq_1qcfa(need(self.n, "--n")? as usize)?)
            }
            Family::MoqfaMod => {
                Machine::Moqfa(moqfa_mod(need(self.p, "--p")?, self.eps, seed)?)
            }
            Family::DfaMod => Machine::Dfa(dfa_mod(need(self.p, "--p")?)?),
            Family::DfaLen => Machine::Dfa(dfa_len(need(self.m, "--m")?)?),
            Family::Tradeoff1qcfa => Machine::OneWay(tradeoff_1qcfa(
                need(self.p, "--p")?,
                need(self.q1, "--q1")?,
                self.eps,
                seed,
            )?),
        })
    }
}

/// Run one parsed command, writing its output to `out`. Errors are
/// returned, not printed, so callers control the stream and exit code.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Build { source, out: path } => {
            let machine = source.machine()?;
            serial::spec_save(&machine, path)?;
            writeln!(out, "wrote {} ({}) to {}", machine.name(), machine.model(), path.display())?;
            Ok(())
        }
        Command::Eval { source, word, format } => {
            let machine = source.machine()?;
            let r = acceptance(&machine, word)?;
            emit(out, None, *format, &eval_payload(&machine, word, &r))?;
            Ok(())
        }
        Command::Sweep { source, lengths, format, out: path } => {
            let machine = source.machine()?;
            let mut rows = Vec::new();
            for len in parse_range(lengths)? {
                let word = "a".repeat(len as usize);
                let r = acceptance(&machine, &word)?;
                rows.push(sweep_row(&machine, len, &r));
            }
            emit(out, path.as_deref(), *format, &SweepPayload { machine: machine.name().to_string(), rows })?;
            Ok(())
        }
        Command::Simulate { source, word, runs, step_cap, format } => {
            let machine = source.machine()?;
            let seed = resolve_seed(source.seed);
            let cap = step_cap.unwrap_or_else(|| {
                acceptance(&machine, word)
                    .map(|r| montecarlo::cap_for(r.expected_steps.value()))
                    .unwrap_or(montecarlo::DEFAULT_STEP_CAP)
            });
            let est = montecarlo::estimate(&machine, word, *runs, seed, cap)?;
            emit(out, None, *format, &simulate_payload(&machine, word, seed, cap, &est))?;
            Ok(())
        }
        Command::Verify { source, lengths, exhaustive, samples, mode, format, out: path } => {
            let machine = source.machine()?;
            let report = run_verify(&machine, source, lengths, *exhaustive, *samples, mode)?;
            emit(out, path.as_deref(), *format, &report)?;
            if report.overall_pass {
                Ok(())
            } else {
                Err(CliError::VerificationFailed {
                    machine: report.machine.clone(),
                    failures: report.failures,
                })
            }
        }
        Command::Report { family, p, m, n, eps, b, format, out: path } => {
            let rep = run_report(*family, p, m, n, *eps, *b)?;
            emit(out, path.as_deref(), *format, &rep)?;
            Ok(())
        }
    }
}

fn parse_mode(name: &str, eps: f64) -> CliResult<AcceptanceMode> {
    match name {
        "one-sided" => Ok(AcceptanceMode::OneSided { eps }),
        "error-prob" => Ok(AcceptanceMode::ErrorProb { eps }),
        "exact" => Ok(AcceptanceMode::Exact),
        other => Err(usage(format!(
            "unknown mode '{other}' (expected one-sided, error-prob, or exact; \
             cut-point machines declare their own cut)"
        ))),
    }
}

fn run_verify(
    machine: &Machine,
    source: &MachineSource,
    lengths: &Option<String>,
    exhaustive: bool,
    samples: Option<usize>,
    mode_flag: &Option<String>,
) -> CliResult<VerificationReport> {
    let language = machine
        .language()
        .ok_or_else(|| usage(format!("{} declares no language to verify against", machine.name())))?
        .clone();
    let words = match (&language, lengths) {
        (_, Some(r)) => unary_words(parse_range(r)?),
        (Language::Mod { p }, None) => unary_words(1..=5 * p),
        (Language::Len { m }, None) => unary_words(1..=(3 * m).max(3)),
        (Language::EqPromise { n }, None) => {
            if let Some(k) = samples {
                eq_promise_words_sampled(*n, k, resolve_seed(source.seed))?
            } else if exhaustive || *n <= 8 {
                eq_promise_words_exhaustive(*n)?
            } else {
                eq_promise_words_sampled(*n, 200, resolve_seed(source.seed))?
            }
        }
    };
    let mode = match mode_flag {
        Some(name) => parse_mode(name, source.eps)?,
        None => machine.mode(),
    };
    Ok(verify_mode(machine, &mode, &language, &words)?)
}

fn run_report(
    family: ReportFamily,
    p: &Option<String>,
    m: &Option<String>,
    n: &Option<String>,
    eps: f64,
    b: f64,
) -> CliResult<ComplexityReport> {
    let range = |arg: &Option<String>, flag: &str| -> CliResult<Vec<u64>> {
        parse_range(arg.as_deref().ok_or_else(|| {
            usage(format!("report family {family:?} requires {flag} (inclusive range, e.g. 2..31)"))
        })?)
    };
    Ok(match family {
        ReportFamily::L => report::complexity_report_mod(&range(p, "--p")?, eps, b)?,
        ReportFamily::C => report::complexity_report_len(&range(m, "--m")?, eps, b)?,
        ReportFamily::Eq => report::complexity_report_eq(&range(n, "--n")?)?,
    })
}

// ---- output shaping ----------------------------------------------------

trait Payload: serde::Serialize {
    fn human(&self) -> String;
    fn csv(&self) -> String;
}

fn emit<P: Payload>(
    out: &mut dyn Write,
    path: Option<&Path>,
    format: Format,
    payload: &P,
) -> CliResult<()> {
    let text = match format {
        Format::Human => payload.human(),
        Format::Csv => payload.csv(),
        Format::Json => serde_json::to_string_pretty(payload)
            .map_err(|e| CliError::Machine(SqfaError::Json(e)))?
            + "\n",
    };
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct EvalPayload {
    machine: String,
    word: String,
    p_accept: f64,
    p_accept_exact: Option<String>,
    p_reject: f64,
    p_reject_exact: Option<String>,
    expected_steps: f64,
    expected_steps_exact: Option<String>,
    #[serde(skip)]
    human_lines: String,
}

fn eval_payload(machine: &Machine, word: &str, r: &AcceptanceResult) -> EvalPayload {
    let human_lines = format!(
        "machine: {}\nword: {}\np_accept = {}\np_reject = {}\nexpected_steps = {}\n",
        machine.name(),
        word,
        display_scalar(&r.p_accept),
        display_scalar(&r.p_reject),
        display_scalar(&r.expected_steps),
    );
    EvalPayload {
        machine: machine.name().to_string(),
        word: word.to_string(),
        p_accept: r.p_accept.value(),
        p_accept_exact: r.p_accept.as_exact().map(|x| x.to_string()),
        p_reject: r.p_reject.value(),
        p_reject_exact: r.p_reject.as_exact().map(|x| x.to_string()),
        expected_steps: r.expected_steps.value(),
        expected_steps_exact: r.expected_steps.as_exact().map(|x| x.to_string()),
        human_lines,
    }
}

impl Payload for EvalPayload {
    fn human(&self) -> String {
        self.human_lines.clone()
    }
    fn csv(&self) -> String {
        format!(
            "word,p_accept,p_reject,expected_steps\n{},{},{},{}\n",
            self.word, self.p_accept, self.p_reject, self.expected_steps
        )
    }
}

#[derive(serde::Serialize)]
struct SweepRow {
    length: u64,
    class: String,
    p_accept: f64,
    p_reject: f64,
    expected_steps: f64,
}

#[derive(serde::Serialize)]
struct SweepPayload {
    machine: String,
    rows: Vec<SweepRow>,
}

fn sweep_row(machine: &Machine, length: u64, r: &AcceptanceResult) -> SweepRow {
    let class = machine
        .language()
        .map(|l| {
            let word = "a".repeat(length as usize);
            match l.classify(&word) {
                crate::machine::Membership::Member => "yes",
                crate::machine::Membership::NonMember => "no",
                crate::machine::Membership::OutsidePromise => "outside-promise",
            }
        })
        .unwrap_or("-")
        .to_string();
    SweepRow {
        length,
        class,
        p_accept: r.p_accept.value(),
        p_reject: r.p_reject.value(),
        expected_steps: r.expected_steps.value(),
    }
}

impl Payload for SweepPayload {
    fn human(&self) -> String {
        let mut s = format!("machine: {}\n", self.machine);
        s.push_str(&format!(
            "{:>7} {:>16} {:>12} {:>12} {:>14}\n",
            "length", "class", "p_accept", "p_reject", "exp_steps"
        ));
        for r in &self.rows {
            s.push_str(&format!(
                "{:>7} {:>16} {:>12.6} {:>12.6} {:>14.4}\n",
                r.length, r.class, r.p_accept, r.p_reject, r.expected_steps
            ));
        }
        s
    }
    fn csv(&self) -> String {
        let mut s = "length,class,p_accept,p_reject,expected_steps\n".to_string();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.length, r.class, r.p_accept, r.p_reject, r.expected_steps
            ));
        }
        s
    }
}

#[derive(serde::Serialize)]
struct SimulatePayload {
    machine: String,
    word: String,
    seed: u64,
    step_cap: u64,
    #[serde(flatten)]
    estimate: Estimate,
}

fn simulate_payload(
    machine: &Machine,
    word: &str,
    seed: u64,
    step_cap: u64,
    est: &Estimate,
) -> SimulatePayload {
    SimulatePayload {
        machine: machine.name().to_string(),
        word: word.to_string(),
        seed,
        step_cap,
        estimate: est.clone(),
    }
}

impl Payload for SimulatePayload {
    fn human(&self) -> String {
        let e = &self.estimate;
        format!(
            "machine: {}\nword: {}\nruns: {} (seed {}, step cap {})\n\
             p_accept_hat = {:.6} ± {:.6} (3σ)\nmean_steps = {:.4}\n\
             mean_iterations = {:.4}\ncensored = {}\n",
            self.machine,
            self.word,
            e.n_runs,
            self.seed,
            self.step_cap,
            e.p_accept_hat,
            e.ci_halfwidth,
            e.mean_steps,
            e.mean_iterations,
            e.censored,
        )
    }
    fn csv(&self) -> String {
        let e = &self.estimate;
        format!(
            "word,n_runs,p_accept_hat,ci_halfwidth,mean_steps,mean_iterations,censored\n\
             {},{},{},{},{},{},{}\n",
            self.word, e.n_runs, e.p_accept_hat, e.ci_halfwidth, e.mean_steps,
            e.mean_iterations, e.censored
        )
    }
}

impl Payload for VerificationReport {
    fn human(&self) -> String {
        let mut s = format!(
            "machine: {}\nmode: {}\nwords checked: {} ({} failing)\n",
            self.machine, self.mode, self.words_checked, self.failures
        );
        s.push_str(&format!(
            "min margin: {:.3e}   max expected steps: {:.4}\n",
            self.min_margin, self.max_expected_steps
        ));
        s.push_str(&format!(
            "{:<20} {:>16} {:>12} {:>12} {:>14} {:>11} {:>5}\n",
            "word", "class", "p_accept", "p_reject", "exp_steps", "margin", "pass"
        ));
        for r in &self.rows {
            let word = if r.word.is_empty() { "(empty)" } else { r.word.as_str() };
            let shown = if word.len() > 20 { &word[..20] } else { word };
            s.push_str(&format!(
                "{:<20} {:>16} {:>12.6} {:>12.6} {:>14.4} {:>11.3e} {:>5}\n",
                shown, r.classification, r.p_accept, r.p_reject, r.expected_steps, r.margin,
                if r.pass { "ok" } else { "FAIL" }
            ));
        }
        s.push_str(if self.overall_pass { "result: PASS\n" } else { "result: FAIL\n" });
        s
    }
    fn csv(&self) -> String {
        let mut s =
            "word,class,p_accept,p_reject,expected_steps,margin,pass\n".to_string();
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.word, r.classification, r.p_accept, r.p_reject, r.expected_steps, r.margin,
                r.pass
            ));
        }
        s
    }
}

impl Payload for ComplexityReport {
    fn human(&self) -> String {
        self.to_human()
    }
    fn csv(&self) -> String {
        self.to_csv()
    }
}

// Re-exported so integration tests can drive the binary surface without
// spawning processes.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
