//! Violations, inconclusive checks, and the run report with its JSON and
//! text renderings.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::engine::{LimitKind, Outcome, Solutions};
use crate::program::{AssertionId, Origin, Program};
use crate::rtcheck::CheckConfig;
use crate::span::SourceSpan;

pub const TOOL: &str = "hopl";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Calls,
    Success,
}

/// Which mechanism performed a check.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSite {
    Direct,
    TightRegistry,
    Wrapper { instance: u64 },
}

impl CheckSite {
    pub fn label(&self) -> String {
        match self {
            CheckSite::Direct => "direct".into(),
            CheckSite::TightRegistry => "tight registry".into(),
            CheckSite::Wrapper { instance } => format!("wrapper '$wrap_{instance}'"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Discovery index; consistent with derivation order.
    pub seq: u64,
    pub assertion_id: AssertionId,
    pub assertion_ids: Vec<AssertionId>,
    pub origin: Origin,
    pub kind: CheckKind,
    pub pred_key: String,
    pub check_site: CheckSite,
    /// The offending goal: at entry for calls checks, at exit for success checks.
    pub culprit: String,
    pub entry: String,
    pub exit: Option<String>,
    pub span: SourceSpan,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InconclusiveReason {
    Budget,
    UnboundRequired,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InconclusiveCheck {
    pub seq: u64,
    pub assertion_ids: Vec<AssertionId>,
    pub origin: Origin,
    pub kind: CheckKind,
    pub pred_key: String,
    pub check_site: CheckSite,
    pub culprit: String,
    pub reason: InconclusiveReason,
    pub span: SourceSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub var: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub text: String,
    pub bindings: Vec<Binding>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    /// exhausted | limit_hit | solution_cap | halted | error
    pub status: String,
    pub limit: Option<LimitKind>,
    pub detail: Option<String>,
    pub steps: u64,
}

impl OutcomeRecord {
    pub fn from_outcome(o: &Outcome, steps: u64) -> Self {
        OutcomeRecord {
            status: o.name().to_string(),
            limit: match o {
                Outcome::LimitHit(k) => Some(*k),
                _ => None,
            },
            detail: match o {
                Outcome::Error(e) => Some(e.to_string()),
                _ => None,
            },
            steps,
        }
    }

    pub fn is_abnormal(&self) -> bool {
        self.status == "limit_hit" || self.status == "error"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub semantics: String,
    pub error_mode: String,
    pub prop_budget: u64,
    pub respect_wrapper_predprops: bool,
    pub max_steps: u64,
    pub max_depth: usize,
    pub occurs_check: bool,
}

/// Everything a run produced. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub file: String,
    pub goal: String,
    pub config: ConfigEcho,
    pub answers: Vec<AnswerRecord>,
    pub violations: Vec<Violation>,
    pub inconclusive: Vec<InconclusiveCheck>,
    pub outcome: OutcomeRecord,
    pub wall_clock_ms: f64,
    pub exit_code: i32,
}

/// Process exit codes.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const VIOLATIONS: i32 = 1;
    pub const LOAD_ERROR: i32 = 2;
    pub const ENGINE_LIMIT: i32 = 3;
    pub const USAGE: i32 = 4;
}

/// Exit code of a run that loaded: violations first, then abnormal engine
/// termination, else success. Inconclusive checks never change it.
pub fn run_exit_code(violations: usize, outcome: &OutcomeRecord) -> i32 {
    if violations > 0 {
        exit_code::VIOLATIONS
    } else if outcome.is_abnormal() {
        exit_code::ENGINE_LIMIT
    } else {
        exit_code::OK
    }
}

pub struct RunArtifacts<'a> {
    pub program: &'a Program,
    pub goal: String,
    pub config: &'a CheckConfig,
    pub max_steps: u64,
    pub max_depth: usize,
    pub occurs_check: bool,
    pub solutions: Solutions,
    pub violations: Vec<Violation>,
    pub inconclusive: Vec<InconclusiveCheck>,
    pub wall_clock_ms: f64,
}

pub fn finalize_report(run: RunArtifacts<'_>) -> Report {
    let mut violations = run.violations;
    violations.sort_by_key(|v| v.seq);
    let mut inconclusive = run.inconclusive;
    inconclusive.sort_by_key(|v| v.seq);
    let answers = run
        .solutions
        .answers
        .iter()
        .map(|a| AnswerRecord {
            text: a.render_line(),
            bindings: a
                .bindings
                .iter()
                .zip(a.render())
                .map(|((name, _), line)| Binding {
                    var: name.clone(),
                    value: line[name.len() + 3..].to_string(),
                })
                .collect(),
        })
        .collect();
    let outcome = OutcomeRecord::from_outcome(&run.solutions.outcome, run.solutions.steps);
    let exit_code = run_exit_code(violations.len(), &outcome);
    Report {
        tool: TOOL.into(),
        version: VERSION.into(),
        file: run.program.origin.to_string(),
        goal: run.goal,
        config: ConfigEcho {
            semantics: run.config.semantics.name().into(),
            error_mode: run.config.error_mode.name().into(),
            prop_budget: run.config.prop_budget,
            respect_wrapper_predprops: run.config.respect_wrapper_predprops,
            max_steps: run.max_steps,
            max_depth: run.max_depth,
            occurs_check: run.occurs_check,
        },
        answers,
        violations,
        inconclusive,
        outcome,
        wall_clock_ms: run.wall_clock_ms,
        exit_code,
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn answer_texts(&self) -> Vec<String> {
        self.answers.iter().map(|a| a.text.clone()).collect()
    }

    /// Human-readable report. Violations are grouped by the assertion they
    /// breach, each group with an annotated source excerpt.
    pub fn to_text(&self, source: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "goal: {}", self.goal);
        let _ = writeln!(
            out,
            "semantics: {}, error mode: {}",
            self.config.semantics, self.config.error_mode
        );
        if self.answers.is_empty() {
            let _ = writeln!(out, "answers: none");
        } else {
            let _ = writeln!(out, "answers:");
            for a in &self.answers {
                let _ = writeln!(out, "  {}", a.text);
            }
        }
        let _ = writeln!(
            out,
            "outcome: {} ({} steps)",
            outcome_text(&self.outcome),
            self.outcome.steps
        );

        let _ = writeln!(out, "violations: {}", self.violations.len());
        let mut groups: Vec<(&SourceSpan, Vec<&Violation>)> = Vec::new();
        for v in &self.violations {
            match groups.iter_mut().find(|(s, _)| **s == v.span) {
                Some((_, vs)) => vs.push(v),
                None => groups.push((&v.span, vec![v])),
            }
        }
        for (span, vs) in groups {
            let first = vs[0];
            let _ = writeln!(
                out,
                "\n{span}: assertion {} ({})",
                first
                    .assertion_ids
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
                first.origin
            );
            out.push_str(&excerpt(source, span));
            for v in vs {
                let kind = match v.kind {
                    CheckKind::Calls => "calls",
                    CheckKind::Success => "success",
                };
                let _ = writeln!(
                    out,
                    "  #{} {kind} violation of {} via {}",
                    v.seq,
                    v.pred_key,
                    v.check_site.label()
                );
                let _ = writeln!(out, "     culprit: {}", v.culprit);
                if let Some(exit) = &v.exit {
                    let _ = writeln!(out, "     entry:   {}", v.entry);
                    let _ = writeln!(out, "     exit:    {exit}");
                }
                let _ = writeln!(out, "     {}", v.message);
            }
        }
        if !self.inconclusive.is_empty() {
            let _ = writeln!(
                out,
                "\nwarning: {} inconclusive check(s)",
                self.inconclusive.len()
            );
            for c in &self.inconclusive {
                let reason = match c.reason {
                    InconclusiveReason::Budget => "property budget exhausted",
                    InconclusiveReason::UnboundRequired => "property needed an unbound argument",
                };
                let _ = writeln!(
                    out,
                    "  {}: {:?} check of {} on {}: {reason}",
                    c.span, c.kind, c.pred_key, c.culprit
                );
            }
        }
        out
    }
}

fn outcome_text(o: &OutcomeRecord) -> String {
    match (&o.limit, &o.detail) {
        (Some(LimitKind::MaxSteps), _) => "limit hit (max_steps)".into(),
        (Some(LimitKind::MaxDepth), _) => "limit hit (max_depth)".into(),
        (_, Some(d)) => format!("{}: {d}", o.status),
        _ => o.status.clone(),
    }
}

/// The first line of `span` with a caret underline.
pub fn excerpt(source: &str, span: &SourceSpan) -> String {
    let Some(line) = span.line_text(source) else {
        return String::new();
    };
    let gutter = span.line.to_string();
    let pad = " ".repeat(gutter.len());
    let start = span.column.saturating_sub(1);
    let width = line
        .chars()
        .count()
        .saturating_sub(start)
        .min(span.length.max(1));
    format!(
        "{pad} |\n{gutter} | {line}\n{pad} | {}{}\n",
        " ".repeat(start),
        "^".repeat(width.max(1))
    )
}
