//! Audit report assembly and emission (text, markdown, CSV, JSON lines).
//!
//! Emission is byte-deterministic: identical inputs produce identical
//! bytes. Data formats carry no timestamps and no version strings; the
//! human-readable formats print the pinned tool and corpus versions.

use std::fmt::Write;

use crate::checks::{CheckId, CheckResult, CheckStatus};

/// Computed returns for one entry plus per-value print precision
/// (the precision its reference analysis uses).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsRow {
    pub g_crash: f64,
    pub g_idle: f64,
    pub g_succ: f64,
    pub decimals: (u8, u8, u8),
}

/// Everything the audit produced for one corpus entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryAudit {
    pub id: String,
    pub title: String,
    pub evaluable: bool,
    pub returns: Option<ReturnsRow>,
    /// Raw indifference ratio; outside (0, 1) when the preference ordering
    /// is wrong.
    pub p: Option<f64>,
    pub km_per_collision: Option<f64>,
    /// All eight checks, ordered by check number.
    pub checks: Vec<CheckResult>,
    /// Computed values that differ from their reference values beyond
    /// tolerance.
    pub mismatches: Vec<String>,
    /// Recorded discrepancies between stated and formula-derived values.
    pub notes: Vec<String>,
}

impl EntryAudit {
    pub fn check(&self, id: CheckId) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == id)
    }

    pub fn preference_status(&self) -> CheckStatus {
        self.check(CheckId::PreferenceOrdering)
            .map(|c| c.status)
            .unwrap_or(CheckStatus::NotEvaluable)
    }
}

/// Tally over per-entry statuses; always equals what the entries say.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Summary {
    pub preference_pass: usize,
    pub preference_fail: usize,
    pub preference_not_evaluable: usize,
    pub check_failures: usize,
    pub check_warnings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub entries: Vec<EntryAudit>,
    pub summary: Summary,
    pub tool_version: String,
    pub corpus_version: String,
}

impl AuditReport {
    /// Builds a report, deriving the summary from the entries.
    pub fn new(entries: Vec<EntryAudit>, corpus_version: &str) -> AuditReport {
        let summary = tally(&entries);
        AuditReport {
            entries,
            summary,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            corpus_version: corpus_version.to_string(),
        }
    }

    /// Plot-ready rows: entry id, km per collision, evaluable flag.
    pub fn figure_rows(&self) -> Vec<(String, Option<f64>, bool)> {
        self.entries
            .iter()
            .map(|e| (e.id.clone(), e.km_per_collision, e.evaluable))
            .collect()
    }

    pub fn has_failures(&self) -> bool {
        self.summary.check_failures > 0
    }

    pub fn has_warnings(&self) -> bool {
        self.summary.check_warnings > 0
    }
}

fn tally(entries: &[EntryAudit]) -> Summary {
    let mut summary = Summary::default();
    for entry in entries {
        match entry.preference_status() {
            CheckStatus::Pass => summary.preference_pass += 1,
            CheckStatus::Fail => summary.preference_fail += 1,
            CheckStatus::NotEvaluable | CheckStatus::Warning => {
                summary.preference_not_evaluable += 1
            }
        }
        for check in &entry.checks {
            match check.status {
                CheckStatus::Fail => summary.check_failures += 1,
                CheckStatus::Warning => summary.check_warnings += 1,
                _ => {}
            }
        }
    }
    summary
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Markdown,
    Csv,
    JsonLines,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<ReportFormat> {
        match s {
            "text" => Some(ReportFormat::Text),
            "md" => Some(ReportFormat::Markdown),
            "csv" => Some(ReportFormat::Csv),
            "jsonl" => Some(ReportFormat::JsonLines),
            _ => None,
        }
    }
}

/// Fixed-point decimal rendering used by every data format.
pub fn fixed(v: f64, decimals: u8) -> String {
    format!("{:.*}", decimals as usize, v)
}

/// Serializes the report. Output is UTF-8 with LF line endings.
pub fn emit_report(report: &AuditReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::JsonLines => emit_jsonl(report),
        ReportFormat::Markdown => emit_markdown(report),
        ReportFormat::Text => emit_text(report),
    }
}

pub const CSV_HEADER: &str =
    "entry_id,g_crash,g_idle,g_succ,preference_status,p,km_per_collision,evaluable";

fn row_fields(entry: &EntryAudit) -> (String, String, String, String, String, String, String) {
    match &entry.returns {
        Some(r) => (
            fixed(r.g_crash, r.decimals.0),
            fixed(r.g_idle, r.decimals.1),
            fixed(r.g_succ, r.decimals.2),
            entry.preference_status().as_str().to_string(),
            entry.p.map(|p| fixed(p, 4)).unwrap_or_default(),
            entry
                .km_per_collision
                .map(|km| fixed(km, 2))
                .unwrap_or_default(),
            entry.evaluable.to_string(),
        ),
        None => (
            String::new(),
            String::new(),
            String::new(),
            entry.preference_status().as_str().to_string(),
            String::new(),
            String::new(),
            entry.evaluable.to_string(),
        ),
    }
}

fn emit_csv(report: &AuditReport) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for entry in &report.entries {
        let (crash, idle, succ, pref, p, km, evaluable) = row_fields(entry);
        writeln!(
            out,
            "{},{crash},{idle},{succ},{pref},{p},{km},{evaluable}",
            entry.id
        )
        .unwrap();
    }
    out
}

fn emit_jsonl(report: &AuditReport) -> String {
    let mut out = String::new();
    for entry in &report.entries {
        let (crash, idle, succ, pref, p, km, evaluable) = row_fields(entry);
        let or_null = |s: &str| {
            if s.is_empty() {
                "null".to_string()
            } else {
                s.to_string()
            }
        };
        writeln!(
            out,
            "{{\"entry_id\":\"{}\",\"g_crash\":{},\"g_idle\":{},\"g_succ\":{},\"preference_status\":\"{}\",\"p\":{},\"km_per_collision\":{},\"evaluable\":{}}}",
            entry.id,
            or_null(&crash),
            or_null(&idle),
            or_null(&succ),
            pref,
            or_null(&p),
            or_null(&km),
            evaluable,
        )
        .unwrap();
    }
    out
}

fn emit_markdown(report: &AuditReport) -> String {
    let mut out = String::new();
    writeln!(out, "# Reward audit report").unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "tool {} / corpus {}",
        report.tool_version, report.corpus_version
    )
    .unwrap();
    writeln!(out).unwrap();
    writeln!(
        out,
        "preference ordering: {} pass, {} fail, {} not evaluable",
        report.summary.preference_pass,
        report.summary.preference_fail,
        report.summary.preference_not_evaluable
    )
    .unwrap();
    for entry in &report.entries {
        writeln!(out).unwrap();
        writeln!(out, "## {} ({})", entry.id, entry.title).unwrap();
        writeln!(out).unwrap();
        if let Some(r) = &entry.returns {
            writeln!(
                out,
                "G(crash) = {}, G(idle) = {}, G(succ) = {}",
                fixed(r.g_crash, r.decimals.0),
                fixed(r.g_idle, r.decimals.1),
                fixed(r.g_succ, r.decimals.2)
            )
            .unwrap();
            if let (Some(p), Some(km)) = (entry.p, entry.km_per_collision) {
                writeln!(
                    out,
                    "indifference point p = {}, km per collision = {}",
                    fixed(p, 4),
                    fixed(km, 2)
                )
                .unwrap();
            }
            writeln!(out).unwrap();
        }
        writeln!(out, "| # | check | status | detail |").unwrap();
        writeln!(out, "|--:|-------|--------|--------|").unwrap();
        for check in &entry.checks {
            writeln!(
                out,
                "| {} | {} | {} | {} |",
                check.check.number(),
                check.check.name(),
                check.status.as_str(),
                check.message.replace('|', "\\|")
            )
            .unwrap();
        }
        for note in &entry.notes {
            writeln!(out).unwrap();
            writeln!(out, "note: {note}").unwrap();
        }
        for mismatch in &entry.mismatches {
            writeln!(out).unwrap();
            writeln!(out, "mismatch: {mismatch}").unwrap();
        }
    }
    out
}

fn emit_text(report: &AuditReport) -> String {
    let mut out = String::new();
    for entry in &report.entries {
        writeln!(out, "== {} ({}) ==", entry.id, entry.title).unwrap();
        match &entry.returns {
            Some(r) => {
                let p = entry
                    .p
                    .map(|p| fixed(p, 4))
                    .unwrap_or_else(|| "-".to_string());
                let km = entry
                    .km_per_collision
                    .map(|km| fixed(km, 2))
                    .unwrap_or_else(|| "-".to_string());
                writeln!(
                    out,
                    "returns: crash {}, idle {}, succ {} | p {} | km/collision {}",
                    fixed(r.g_crash, r.decimals.0),
                    fixed(r.g_idle, r.decimals.1),
                    fixed(r.g_succ, r.decimals.2),
                    p,
                    km
                )
                .unwrap();
            }
            None => writeln!(out, "returns: not evaluable").unwrap(),
        }
        for check in &entry.checks {
            writeln!(
                out,
                "  {} {:<26} {:<13} {}",
                check.check.number(),
                check.check.name(),
                check.status.as_str(),
                check.message
            )
            .unwrap();
        }
        for note in &entry.notes {
            writeln!(out, "  note: {note}").unwrap();
        }
        for mismatch in &entry.mismatches {
            writeln!(out, "  mismatch: {mismatch}").unwrap();
        }
        writeln!(out).unwrap();
    }
    writeln!(
        out,
        "summary: preference {} pass / {} fail / {} not evaluable; {} check failures, {} warnings (tool {}, corpus {})",
        report.summary.preference_pass,
        report.summary.preference_fail,
        report.summary.preference_not_evaluable,
        report.summary.check_failures,
        report.summary.check_warnings,
        report.tool_version,
        report.corpus_version
    )
    .unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::CheckDetails;

    fn check(id: CheckId, status: CheckStatus) -> CheckResult {
        CheckResult {
            check: id,
            status,
            details: CheckDetails::None,
            message: "m".to_string(),
        }
    }

    fn sample_entry() -> EntryAudit {
        EntryAudit {
            id: "ise18".to_string(),
            title: "t".to_string(),
            evaluable: true,
            returns: Some(ReturnsRow {
                g_crash: -10.1,
                g_idle: -1.0,
                g_succ: 0.8,
                decimals: (1, 0, 1),
            }),
            p: Some(0.834_862_385_321_100_9),
            km_per_collision: Some(0.111_111_1),
            checks: vec![check(CheckId::PreferenceOrdering, CheckStatus::Pass)],
            mismatches: Vec::new(),
            notes: Vec::new(),
        }
    }

    #[test]
    fn csv_row_matches_reference_shape() {
        let report = AuditReport::new(vec![sample_entry()], "1");
        let csv = emit_csv(&report);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "ise18,-10.1,-1,0.8,pass,0.8349,0.11,true"
        );
    }

    #[test]
    fn non_evaluable_row_is_mostly_empty() {
        let entry = EntryAudit {
            id: "hue19".to_string(),
            title: "t".to_string(),
            evaluable: false,
            returns: None,
            p: None,
            km_per_collision: None,
            checks: vec![check(
                CheckId::PreferenceOrdering,
                CheckStatus::NotEvaluable,
            )],
            mismatches: Vec::new(),
            notes: Vec::new(),
        };
        let report = AuditReport::new(vec![entry], "1");
        let csv = emit_csv(&report);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "hue19,,,,not_evaluable,,,false"
        );
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = AuditReport::new(Vec::new(), "1");
        assert_eq!(emit_csv(&report), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn jsonl_uses_null_for_missing() {
        let entry = EntryAudit {
            id: "hue19".to_string(),
            title: "t".to_string(),
            evaluable: false,
            returns: None,
            p: None,
            km_per_collision: None,
            checks: vec![check(
                CheckId::PreferenceOrdering,
                CheckStatus::NotEvaluable,
            )],
            mismatches: Vec::new(),
            notes: Vec::new(),
        };
        let report = AuditReport::new(vec![entry], "1");
        let line = emit_jsonl(&report);
        assert_eq!(
            line.trim_end(),
            "{\"entry_id\":\"hue19\",\"g_crash\":null,\"g_idle\":null,\"g_succ\":null,\"preference_status\":\"not_evaluable\",\"p\":null,\"km_per_collision\":null,\"evaluable\":false}"
        );
    }

    #[test]
    fn summary_counts_equal_entry_tally() {
        let mut entry = sample_entry();
        entry
            .checks
            .push(check(CheckId::UnsafeShaping, CheckStatus::Fail));
        entry
            .checks
            .push(check(CheckId::MissingAttributes, CheckStatus::Warning));
        let report = AuditReport::new(vec![entry], "1");
        assert_eq!(report.summary.preference_pass, 1);
        assert_eq!(report.summary.check_failures, 1);
        assert_eq!(report.summary.check_warnings, 1);
    }

    #[test]
    fn markdown_has_one_table_row_per_check() {
        let mut entry = sample_entry();
        for id in CheckId::ALL {
            if id != CheckId::PreferenceOrdering {
                entry.checks.push(check(id, CheckStatus::Pass));
            }
        }
        let report = AuditReport::new(vec![entry], "1");
        let md = emit_markdown(&report);
        let rows = md.lines().filter(|l| l.starts_with("| ")).count();
        assert_eq!(rows, 9); // 8 checks + header row
    }
}
