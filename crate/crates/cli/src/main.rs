//! Command line front end: condition checks, simulations, fixture
//! conformance and manifest replay.

mod manifest;
mod ranges;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use stochdom::checks::{run_check, Check, CheckResult};
use stochdom::fixtures::{self, CheckOutcome};
use stochdom::json::{self, Loaded};
use stochdom::model::WeightScheme;
use stochdom::simulate::{self, SimPlan, SimReport, Truncation};
use stochdom::{Execution, Verdict};

use manifest::{sha256_hex, Input, OutputRecord, RunManifest, TOOL};

/// Exit status for unreadable or invalid input.
const EXIT_PARSE: u8 = 2;

#[derive(Parser)]
#[command(name = "stochdom", version, about = "Stochastic domination and law of large numbers checks for arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run condition checkers and write JSON verdicts.
    Check(CheckArgs),
    /// Monte Carlo estimates of WLLN/SLLN exceedance probabilities.
    Simulate(SimulateArgs),
    /// Run the fixture conformance suite.
    VerifyFixtures(VerifyArgs),
    /// Rerun a simulation from its manifest and compare outputs byte for byte.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[group(required = true, multiple = false, id = "source")]
struct SourceArgs {
    /// JSON spec document.
    #[arg(long, group = "source")]
    spec: Option<PathBuf>,
    /// Named fixture generator.
    #[arg(long, group = "source")]
    fixture: Option<String>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelArgs {
    /// Override the exponent p.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<f64>,
    /// Override nu (iterated logarithms).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<u32>,
    /// Largest row index scanned when taking suprema over n.
    #[arg(long = "n-sup")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n_sup: Option<usize>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Comma list: cesaro-domination, weighted-domination (or domination),
    /// chandra-ghosal, series, b-regularity, b-regularity-l2, kG, ui,
    /// bounded-moment. Defaults to the attached expectations.
    #[arg(long)]
    conditions: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run scans on one thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Wlln,
    SllnSeries,
    SllnPath,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "wlln")]
    mode: Mode,
    /// `2^6..2^14` (doubling), `64..4096` or `10,100,1000`.
    #[arg(long, default_value = "2^6..2^16")]
    rows: String,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value = "0.1,0.5,1.0")]
    eps: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// none, clamp-at-b, indicator-at-b or symmetric-clamp:LEVEL.
    #[arg(long, default_value = "none")]
    truncation: String,
    /// Subtract the truncated means E X 1(|X| <= b_n).
    #[arg(long)]
    centering: bool,
    /// Ignore the coefficients c_{n,i} of c-normalized weights.
    #[arg(long)]
    unweighted: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    /// Manifest path (default `<out>.manifest.json`).
    #[arg(long)]
    #[serde(skip)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    sequential: bool,
    /// No progress on standard error.
    #[arg(long, short)]
    #[serde(skip)]
    quiet: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Restrict to these fixtures (repeatable).
    #[arg(long)]
    only: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Also rewrite the outputs.
    #[arg(long)]
    write: bool,
}

/// Failure classes mapped to exit statuses.
enum Failure {
    Parse(anyhow::Error),
    Run(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.into())
    }
}

type Outcome = std::result::Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(a) => cmd_check(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::VerifyFixtures(a) => cmd_verify_fixtures(&a),
        Command::Replay(a) => cmd_replay(&a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Parse(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_PARSE)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_source(source: &SourceArgs, model: &ModelArgs) -> std::result::Result<(Loaded, Input), Failure> {
    let parse = |e: anyhow::Error| Failure::Parse(e);
    let (mut doc, input) = match (&source.spec, &source.fixture) {
        (Some(path), None) => {
            let text = std::fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(parse)?;
            let doc = json::parse(std::str::from_utf8(&text).map_err(|e| parse(e.into()))?)
                .with_context(|| format!("parsing {}", path.display()))
                .map_err(parse)?;
            (doc, Input { fixture: None, spec: Some(path.clone()), spec_sha256: Some(sha256_hex(&text)) })
        }
        (None, Some(name)) => (
            json::SpecDocument { generator: Some(name.clone()), ..Default::default() },
            Input { fixture: Some(name.clone()), spec: None, spec_sha256: None },
        ),
        _ => return Err(parse(anyhow!("give exactly one of --spec or --fixture"))),
    };
    if model.p.is_some() {
        doc.p = model.p;
    }
    if model.nu.is_some() {
        doc.nu = model.nu;
    }
    if model.n_sup.is_some() {
        doc.n_sup = model.n_sup;
    }
    let loaded = doc.build().map_err(|e| parse(e.into()))?;
    Ok((loaded, input))
}

fn write_or_print(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ExpectationLine {
    check: Check,
    expected: Verdict,
    observed: Option<Verdict>,
    matches: bool,
}

#[derive(Serialize)]
struct CheckError {
    check: Check,
    error: String,
}

#[derive(Serialize)]
struct CheckDocument<'a> {
    tool: &'a str,
    version: &'a str,
    subject: String,
    fixture: Option<String>,
    input: Input,
    n_sup: usize,
    results: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    errors: Vec<CheckError>,
    expectations: Vec<ExpectationLine>,
    all_match: bool,
}

const DEFAULT_CHECKS: [Check; 5] =
    [Check::CesaroDomination, Check::WeightedDomination, Check::BRegularity, Check::VanishingKg, Check::Ui];

fn cmd_check(a: &CheckArgs) -> Outcome {
    let (mut loaded, input) = load_source(&a.source, &a.model)?;
    if a.sequential {
        loaded.subject.cfg.exec = Execution::Sequential;
    }
    let checks: Vec<Check> = match &a.conditions {
        Some(list) => list
            .split(',')
            .map(|s| s.parse::<Check>().map_err(|e| Failure::Parse(e.into())))
            .collect::<std::result::Result<_, _>>()?,
        None if !loaded.expect.is_empty() => loaded.expect.keys().copied().collect(),
        None => DEFAULT_CHECKS.to_vec(),
    };
    let mut results = Vec::new();
    let mut errors = Vec::new();
    for c in &checks {
        match run_check(&loaded.subject, *c) {
            Ok(r) => results.push(r),
            Err(e) => errors.push(CheckError { check: *c, error: e.to_string() }),
        }
    }
    let observed: BTreeMap<Check, Verdict> = results.iter().map(|r| (r.check, r.verdict)).collect();
    let expectations: Vec<ExpectationLine> = checks
        .iter()
        .filter_map(|c| {
            let want = *loaded.expect.get(c)?;
            let got = observed.get(c).copied();
            Some(ExpectationLine { check: *c, expected: want, observed: got, matches: got == Some(want) })
        })
        .collect();
    let all_match = errors.is_empty() && expectations.iter().all(|e| e.matches);
    let doc = CheckDocument {
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        subject: loaded.subject.label.clone(),
        fixture: loaded.fixture.clone(),
        input,
        n_sup: loaded.subject.cfg.n_sup,
        results,
        errors,
        expectations,
        all_match,
    };
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    write_or_print(a.out.as_deref(), text.as_bytes())?;
    for e in doc.expectations.iter().filter(|e| !e.matches) {
        eprintln!("mismatch: {} expected {} observed {:?}", e.check, e.expected, e.observed);
    }
    for e in &doc.errors {
        eprintln!("error in {}: {}", e.check, e.error);
    }
    Ok(all_match)
}

fn parse_truncation(s: &str) -> Result<Truncation> {
    Ok(match s {
        "none" => Truncation::None,
        "clamp-at-b" => Truncation::ClampAtB,
        "indicator-at-b" => Truncation::IndicatorAtB,
        _ => match s.strip_prefix("symmetric-clamp:") {
            Some(level) => Truncation::SymmetricClamp { level: level.parse().with_context(|| format!("bad level in `{s}`"))? },
            None => bail!("unknown truncation `{s}`"),
        },
    })
}

fn plan_from(a: &SimulateArgs, loaded: &Loaded) -> Result<SimPlan> {
    let s = &loaded.subject;
    let mut plan = SimPlan::new(s.array.clone(), s.b.clone());
    if !a.unweighted && matches!(s.weights, WeightScheme::CNormalized { .. }) {
        plan.weights = Some(s.weights.clone());
    }
    plan.rows = ranges::parse_rows(&a.rows)?;
    plan.reps = a.reps;
    plan.epsilons = ranges::parse_eps(&a.eps)?;
    plan.seed = a.seed;
    plan.truncation = parse_truncation(&a.truncation)?;
    plan.centering = a.centering;
    plan.exec = if a.sequential { Execution::Sequential } else { Execution::Parallel };
    plan.validate()?;
    Ok(plan)
}

fn report_csv(r: &SimReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match &r.path {
        Some(path) => {
            w.write_record(["n", "mean_tail_sup", "R", "seed"])?;
            for (n, v) in path.grid.iter().zip(&path.mean_tail_sup) {
                w.write_record([n.to_string(), v.to_string(), r.reps.to_string(), r.seed.to_string()])?;
            }
        }
        None => {
            w.write_record(["n", "epsilon", "p_hat", "se", "R", "seed"])?;
            for rec in r.csv_records() {
                w.write_record(&rec)?;
            }
        }
    }
    w.into_inner().map_err(|e| anyhow!("{e}"))
}

#[derive(Serialize)]
struct JsonReport<'a> {
    manifest: Option<String>,
    report: &'a SimReport,
}

/// Runs the simulation and renders its output bytes.
fn simulate_bytes(a: &SimulateArgs, loaded: &Loaded, manifest_path: Option<&Path>) -> std::result::Result<Vec<u8>, Failure> {
    let plan = plan_from(a, loaded).map_err(Failure::Parse)?;
    let mut progress = |done: usize, total: usize| {
        if !a.quiet {
            eprintln!("row {done}/{total}");
        }
    };
    let report = match a.mode {
        Mode::Wlln => simulate::wlln_estimate_with(&plan, &mut progress)?,
        Mode::SllnSeries => simulate::slln_series_estimate(&plan, &loaded.subject.l, loaded.subject.p)?,
        Mode::SllnPath => simulate::slln_path_diagnostic(&plan)?,
    };
    Ok(match a.format {
        Format::Csv => report_csv(&report)?,
        Format::Json => {
            let doc = JsonReport { manifest: manifest_path.map(|p| p.display().to_string()), report: &report };
            (serde_json::to_string_pretty(&doc)? + "\n").into_bytes()
        }
    })
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let (loaded, input) = load_source(&a.source, &a.model)?;
    let manifest_path = a.manifest.clone().or_else(|| a.out.as_deref().map(manifest::default_path));
    let bytes = simulate_bytes(a, &loaded, manifest_path.as_deref())?;
    write_or_print(a.out.as_deref(), &bytes)?;
    if let (Some(mp), Some(out)) = (&manifest_path, &a.out) {
        let m = RunManifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: "simulate".into(),
            input,
            args: a.clone(),
            seeds: vec![a.seed],
            outputs: vec![OutputRecord { path: out.clone(), sha256: sha256_hex(&bytes) }],
        };
        m.write(mp)?;
        if !a.quiet {
            eprintln!("wrote {} and {}", out.display(), mp.display());
        }
    }
    Ok(true)
}

fn cmd_verify_fixtures(a: &VerifyArgs) -> Outcome {
    for name in &a.only {
        if !fixtures::NAMES.contains(&name.as_str()) {
            return Err(Failure::Parse(anyhow!("unknown fixture `{name}`; known: {}", fixtures::NAMES.join(", "))));
        }
    }
    let outcomes: Vec<CheckOutcome> = fixtures::verify_all(&a.only)?;
    let mut out = std::io::stdout().lock();
    for o in &outcomes {
        writeln!(
            out,
            "{} {:<22} {:<62} expected {} observed {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.fixture,
            o.check,
            o.expected,
            o.observed
        )?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let fixtures_run: std::collections::BTreeSet<&str> = outcomes.iter().map(|o| o.fixture.as_str()).collect();
    writeln!(out, "{} fixtures, {} checks, {} failed", fixtures_run.len(), outcomes.len(), failed)?;
    if let Some(p) = &a.out {
        std::fs::write(p, serde_json::to_string_pretty(&outcomes)? + "\n")?;
    }
    Ok(failed == 0)
}

fn cmd_replay(a: &ReplayArgs) -> Outcome {
    let m = RunManifest::read(&a.manifest).map_err(Failure::Parse)?;
    if m.tool != TOOL || m.command != "simulate" {
        return Err(Failure::Parse(anyhow!("manifest is not a {TOOL} simulate run")));
    }
    if m.version != env!("CARGO_PKG_VERSION") {
        eprintln!("note: manifest written by version {}, replaying with {}", m.version, env!("CARGO_PKG_VERSION"));
    }
    let mut args = m.args.clone();
    args.quiet = true;
    let (loaded, input) = load_source(&args.source, &args.model)?;
    if input.spec_sha256 != m.input.spec_sha256 {
        eprintln!("spec file changed since the manifest was written");
        return Ok(false);
    }
    let mut ok = true;
    for rec in &m.outputs {
        let bytes = simulate_bytes(&args, &loaded, Some(&a.manifest))?;
        let digest = sha256_hex(&bytes);
        let same = digest == rec.sha256;
        println!("{} {} {}", if same { "MATCH" } else { "DIFFER" }, rec.path.display(), digest);
        ok &= same;
        if a.write {
            std::fs::write(&rec.path, &bytes)?;
        }
    }
    Ok(ok)
}
