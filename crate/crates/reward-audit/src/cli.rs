//! Command-line interface.
//!
//! Exit codes: 0 when every check passes and no warning was emitted (or
//! warnings without `--strict`), 1 when any check failed or a warning was
//! emitted under `--strict`, 2 on parse, validation or usage errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::checks::{self, CheckId, CheckResult, CheckStatus, RiskBaseline, DRUNK_TEEN_LABEL};
use crate::corpus;
use crate::evaluator::{eval_return, DiscountMode};
use crate::lang::{parse_baselines, parse_scenario, parse_spec_document};
use crate::model::{validate_spec, OutcomeTag, Severity};
use crate::report::{emit_report, fixed, ReportFormat};
use crate::trajectory::{synth_canonical, ScenarioSpec, TrajectoryKind};

/// Environment variable naming a baseline-override config file.
pub const BASELINES_ENV: &str = "REWARD_AUDIT_BASELINES";

#[derive(Parser)]
#[command(
    name = "reward-audit",
    version,
    about = "Audit reward-function specifications"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structural checks (1, 5-8) on a spec file.
    Lint {
        /// Path to a `.rspec` file
        spec: PathBuf,
        #[command(flatten)]
        strict: Strict,
    },
    /// Run the trajectory checks (2-4) on a spec over a scenario.
    Check {
        /// Path to a `.rspec` file
        spec: PathBuf,
        /// Path to a `.scn` scenario file
        #[arg(long, conflicts_with = "canonical")]
        scenario: Option<PathBuf>,
        /// Use the sibling `<spec>.scn` (or the built-in corpus scenario
        /// with the same id) and the three canonical trajectories
        #[arg(long)]
        canonical: bool,
        /// Comma-separated subset of checks to run, e.g. `2,3`
        #[arg(long)]
        checks: Option<String>,
        #[command(flatten)]
        strict: Strict,
    },
    /// Built-in corpus operations.
    Corpus {
        #[command(subcommand)]
        command: CorpusCommand,
    },
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// List the corpus entries.
    List,
    /// Audit every corpus entry and emit a report.
    Run {
        /// Write the report to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format
        #[arg(long, default_value = "text")]
        format: String,
        #[command(flatten)]
        strict: Strict,
    },
}

#[derive(Args)]
struct Strict {
    /// Treat warnings as failures (exit 1)
    #[arg(long)]
    strict: bool,
}

/// Parses argv and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap exits 0 for --help/--version and 2 for usage errors
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match cli.command {
        Command::Lint { spec, strict } => lint_command(&spec, strict.strict),
        Command::Check {
            spec,
            scenario,
            canonical,
            checks,
            strict,
        } => check_command(
            &spec,
            scenario.as_deref(),
            canonical,
            checks.as_deref(),
            strict.strict,
        ),
        Command::Corpus { command } => match command {
            CorpusCommand::List => corpus_list_command(),
            CorpusCommand::Run {
                out,
                format,
                strict,
            } => corpus_run_command(out.as_deref(), &format, strict.strict),
        },
    }
}

fn fail(message: &str) -> i32 {
    eprintln!("error: {message}");
    2
}

fn load_spec(path: &Path) -> Result<crate::lang::SpecDocument, i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return Err(fail(&format!("{}: {e}", path.display()))),
    };
    match parse_spec_document(&text) {
        Ok(doc) => Ok(doc),
        Err(e) => Err(fail(&format!("{}:{e}", path.display()))),
    }
}

/// Validates, printing findings; errors are fatal (exit 2).
fn validated(doc: &crate::lang::SpecDocument, path: &Path) -> Result<(), i32> {
    let findings = validate_spec(&doc.spec);
    let mut broken = false;
    for finding in &findings {
        eprintln!("{}: {finding}", path.display());
        broken |= finding.severity == Severity::Error;
    }
    if broken {
        Err(2)
    } else {
        Ok(())
    }
}

/// Default baselines merged with any override file named by the
/// environment.
fn load_baselines() -> Result<Vec<RiskBaseline>, String> {
    let mut baselines = checks::default_baselines();
    if let Ok(path) = std::env::var(BASELINES_ENV) {
        let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
        let overrides = parse_baselines(&text).map_err(|e| format!("{path}:{e}"))?;
        merge_baselines(&mut baselines, &overrides);
    }
    Ok(baselines)
}

fn merge_baselines(baselines: &mut Vec<RiskBaseline>, overrides: &[(String, f64)]) {
    for (label, km) in overrides {
        match baselines.iter_mut().find(|b| &b.label == label) {
            Some(existing) => {
                existing.km_per_collision = *km;
                existing.provenance = "config override".to_string();
            }
            None => baselines.push(RiskBaseline {
                label: label.clone(),
                km_per_collision: *km,
                provenance: "config override".to_string(),
            }),
        }
    }
}

fn print_check(result: &CheckResult) {
    println!(
        "check {} {}: {} - {}",
        result.check.number(),
        result.check.name(),
        result.status.as_str().to_uppercase(),
        result.message
    );
}

fn exit_code(results: &[CheckResult], strict: bool) -> i32 {
    let any_fail = results.iter().any(|r| r.status == CheckStatus::Fail);
    let any_warning = results.iter().any(|r| r.status == CheckStatus::Warning);
    if any_fail || (strict && any_warning) {
        1
    } else {
        0
    }
}

fn lint_command(path: &Path, strict: bool) -> i32 {
    let doc = match load_spec(path) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    if let Err(code) = validated(&doc, path) {
        return code;
    }
    let required: BTreeSet<OutcomeTag> = OutcomeTag::ALL.into_iter().collect();
    let results = vec![
        checks::shaping_lint(&doc.spec),
        checks::attribute_coverage_lint(&doc.spec, &required),
        checks::redundancy_lint(&doc.spec),
        checks::trial_and_error_lint(&doc.spec),
        checks::completeness_lint(&doc.spec),
    ];
    for result in &results {
        print_check(result);
    }
    exit_code(&results, strict)
}

fn resolve_scenario(
    spec_path: &Path,
    spec_id: &str,
    scenario: Option<&Path>,
    canonical: bool,
) -> Result<ScenarioSpec, i32> {
    if let Some(path) = scenario {
        let text =
            std::fs::read_to_string(path).map_err(|e| fail(&format!("{}: {e}", path.display())))?;
        return parse_scenario(&text).map_err(|e| fail(&format!("{}:{e}", path.display())));
    }
    if !canonical {
        return Err(fail("pass --scenario <file> or --canonical"));
    }
    let sibling = spec_path.with_extension("scn");
    if sibling.exists() {
        let text = std::fs::read_to_string(&sibling)
            .map_err(|e| fail(&format!("{}: {e}", sibling.display())))?;
        return parse_scenario(&text).map_err(|e| fail(&format!("{}:{e}", sibling.display())));
    }
    if let Some(id) = corpus::CorpusId::parse(spec_id) {
        return parse_scenario(corpus::scenario_text(id))
            .map_err(|e| fail(&format!("embedded scenario {spec_id}:{e}")));
    }
    Err(fail(&format!(
        "no scenario found: neither {} nor a corpus entry named `{spec_id}`",
        sibling.display()
    )))
}

fn parse_check_filter(list: Option<&str>) -> Result<BTreeSet<u8>, i32> {
    let mut wanted = BTreeSet::new();
    match list {
        None => {
            wanted.extend([2u8, 3, 4]);
        }
        Some(text) => {
            for part in text.split(',') {
                match part.trim().parse::<u8>() {
                    Ok(n @ 2..=4) => {
                        wanted.insert(n);
                    }
                    _ => {
                        return Err(fail(&format!(
                            "--checks takes a comma list drawn from 2,3,4 (got `{part}`)"
                        )))
                    }
                }
            }
        }
    }
    Ok(wanted)
}

fn check_command(
    spec_path: &Path,
    scenario: Option<&Path>,
    canonical: bool,
    checks_filter: Option<&str>,
    strict: bool,
) -> i32 {
    let doc = match load_spec(spec_path) {
        Ok(doc) => doc,
        Err(code) => return code,
    };
    if let Err(code) = validated(&doc, spec_path) {
        return code;
    }
    let wanted = match parse_check_filter(checks_filter) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let scn = match resolve_scenario(spec_path, &doc.spec.id, scenario, canonical) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let mut baselines = match load_baselines() {
        Ok(b) => b,
        Err(e) => return fail(&e),
    };
    merge_baselines(&mut baselines, &scn.baselines);
    let baseline = baselines
        .iter()
        .find(|b| b.label == DRUNK_TEEN_LABEL)
        .unwrap_or(&baselines[0])
        .clone();

    let spec = &doc.spec;
    let mut results: Vec<CheckResult> = Vec::new();

    let synth = |kind| synth_canonical(&scn, spec, kind);
    let returns = match (
        synth(TrajectoryKind::Crash),
        synth(TrajectoryKind::Idle),
        synth(TrajectoryKind::Succ),
    ) {
        (Ok(crash), Ok(idle), Ok(succ)) => {
            let g = |t| eval_return(spec, t, DiscountMode::Undiscounted).map(|b| b.total);
            match (g(&crash), g(&idle), g(&succ)) {
                (Ok(g_crash), Ok(g_idle), Ok(g_succ)) => Some((g_crash, g_idle, g_succ)),
                (c, i, s) => {
                    let detail = [c.err(), i.err(), s.err()]
                        .into_iter()
                        .flatten()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join("; ");
                    return fail(&format!("evaluation failed: {detail}"));
                }
            }
        }
        (c, i, s) => {
            let detail = [c.err(), i.err(), s.err()]
                .into_iter()
                .flatten()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            println!("canonical trajectories not evaluable: {detail}");
            None
        }
    };

    match returns {
        Some((g_crash, g_idle, g_succ)) => {
            println!(
                "returns: crash {g_crash}, idle {g_idle}, succ {g_succ} over {} km",
                scn.path_length_km
            );
            if wanted.contains(&2) {
                results.push(checks::preference_check(g_crash, g_idle));
            }
            if wanted.contains(&3) {
                let p = checks::indifference_ratio_raw(g_crash, g_idle, g_succ);
                let km = p.and_then(|p| checks::km_per_collision_raw(p, scn.path_length_km));
                match (p, km) {
                    (Some(p), Some(km)) => {
                        println!(
                            "indifference point p = {}, km per collision = {}",
                            fixed(p, 4),
                            fixed(km, 2)
                        );
                        results.push(checks::risk_tolerance_check(km, &baseline));
                    }
                    _ => results.push(CheckResult {
                        check: CheckId::RiskTolerance,
                        status: CheckStatus::NotEvaluable,
                        details: checks::CheckDetails::None,
                        message: "indifference point undefined for these returns".to_string(),
                    }),
                }
            }
        }
        None => {
            for (flag, check) in [
                (2u8, CheckId::PreferenceOrdering),
                (3, CheckId::RiskTolerance),
            ] {
                if wanted.contains(&flag) {
                    results.push(CheckResult {
                        check,
                        status: CheckStatus::NotEvaluable,
                        details: checks::CheckDetails::None,
                        message: "canonical trajectories not evaluable".to_string(),
                    });
                }
            }
        }
    }
    if wanted.contains(&4) {
        results.push(CheckResult {
            check: CheckId::LearnableLoophole,
            status: CheckStatus::NotEvaluable,
            details: checks::CheckDetails::None,
            message: "needs an observed trajectory pair (library: loophole_check)".to_string(),
        });
    }

    for result in &results {
        print_check(result);
    }
    exit_code(&results, strict)
}

fn corpus_list_command() -> i32 {
    for (id, title, evaluable) in corpus::list() {
        let flag = if evaluable {
            "evaluable"
        } else {
            "not-evaluable"
        };
        println!("{:<7} {:<14} {}", id.as_str(), flag, title);
    }
    0
}

fn corpus_run_command(out: Option<&Path>, format: &str, strict: bool) -> i32 {
    let format = match ReportFormat::parse(format) {
        Some(f) => f,
        None => return fail(&format!("unknown format `{format}` (text|md|csv|jsonl)")),
    };
    let baselines = match load_baselines() {
        Ok(b) => b,
        Err(e) => return fail(&e),
    };
    let config = corpus::RunConfig {
        baselines,
        ..corpus::RunConfig::default()
    };
    let report = corpus::run(&config);
    let rendered = emit_report(&report, format);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered.as_bytes()) {
                return fail(&format!("{}: {e}", path.display()));
            }
        }
        None => print!("{rendered}"),
    }
    if report.has_failures() || (strict && report.has_warnings()) {
        1
    } else {
        0
    }
}
