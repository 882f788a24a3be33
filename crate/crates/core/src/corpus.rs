//! Corpus harness: each case is `<name>.hopl` beside `<name>.expect.json`.
//!
//! The expectation file names the goal, the oracle behind the expected
//! values, and one cell per semantics and error mode. Expected violations are
//! partial violation objects: every field present must equal the report's
//! field, absent fields are not compared.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::engine::EngineOptions;
use crate::parser::{parse_program, parse_term};
use crate::program::Program;
use crate::report::Report;
use crate::rtcheck::{run, CheckConfig, ErrorMode, RunOptions, Semantics};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellExpect {
    #[serde(default)]
    pub violations: Vec<Value>,
    #[serde(default)]
    pub inconclusive: usize,
    /// Overrides the case-level outcome status.
    #[serde(default)]
    pub outcome: Option<String>,
    /// Overrides the case-level answers.
    #[serde(default)]
    pub answers: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseExpect {
    pub goal: String,
    pub oracle: String,
    #[serde(default)]
    pub notes: String,
    /// Answers of the unchecked run, in order.
    pub answers: Vec<String>,
    /// Outcome status of the unchecked run.
    pub outcome: String,
    #[serde(default)]
    pub max_steps: Option<u64>,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub prop_budget: Option<u64>,
    /// The program observes the name of a higher-order argument, so loose
    /// answers may differ from the unchecked ones.
    #[serde(default)]
    pub wrapper_identity: bool,
    /// semantics -> error mode -> expectation.
    pub cells: BTreeMap<String, BTreeMap<String, CellExpect>>,
}

#[derive(Clone, Debug)]
pub struct CorpusCase {
    pub name: String,
    pub path: PathBuf,
    pub source: String,
    pub program: Program,
    pub expect: CaseExpect,
}

impl CorpusCase {
    pub fn cell(&self, sem: Semantics, mode: ErrorMode) -> Option<&CellExpect> {
        self.expect.cells.get(sem.name())?.get(mode.name())
    }

    pub fn options(&self, sem: Semantics, mode: ErrorMode) -> RunOptions {
        let mut engine = EngineOptions::default();
        if let Some(s) = self.expect.max_steps {
            engine.limits.max_steps = s;
        }
        if let Some(d) = self.expect.max_depth {
            engine.limits.max_depth = d;
        }
        let mut check = CheckConfig::new(sem, mode);
        if let Some(b) = self.expect.prop_budget {
            check.prop_budget = b;
        }
        RunOptions {
            engine,
            check,
            trace: false,
        }
    }

    pub fn run(&self, sem: Semantics, mode: ErrorMode) -> Report {
        let goal = parse_term(&self.expect.goal).expect("goal parsed at load time");
        run(
            &self.program,
            &goal,
            &self.expect.goal,
            &self.options(sem, mode),
        )
        .report
    }
}

/// Both error modes, fail-fast first.
pub const MODES: [ErrorMode; 2] = [ErrorMode::FailFast, ErrorMode::GatherAll];

/// The default corpus directory of this repository.
pub fn default_dir() -> PathBuf {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    dir.canonicalize().unwrap_or(dir)
}

pub fn load_case(hopl: &Path) -> Result<CorpusCase, String> {
    let name = hopl
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| format!("{}: bad file name", hopl.display()))?
        .to_string();
    let source = fs::read_to_string(hopl).map_err(|e| format!("{}: {e}", hopl.display()))?;
    let program = parse_program(&source, &hopl.display().to_string())
        .map_err(|e| format!("{}: {e}", hopl.display()))?;
    let expect_path = hopl.with_extension("expect.json");
    let text =
        fs::read_to_string(&expect_path).map_err(|e| format!("{}: {e}", expect_path.display()))?;
    let expect: CaseExpect =
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", expect_path.display()))?;
    parse_term(&expect.goal).map_err(|e| format!("{}: goal: {e}", expect_path.display()))?;
    for sem in Semantics::ALL {
        for mode in MODES {
            let filled = expect
                .cells
                .get(sem.name())
                .is_some_and(|m| m.contains_key(mode.name()));
            if !filled {
                return Err(format!(
                    "{}: missing cell {}/{}",
                    expect_path.display(),
                    sem.name(),
                    mode.name()
                ));
            }
        }
    }
    Ok(CorpusCase {
        name,
        path: hopl.to_path_buf(),
        source,
        program,
        expect,
    })
}

/// Loads every case in `dir`, sorted by name.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusCase>, String> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "hopl"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_case(p)).collect()
}

/// One row of the harness table.
#[derive(Clone, Debug)]
pub struct CellResult {
    pub case: String,
    pub semantics: Semantics,
    pub mode: ErrorMode,
    pub report: Report,
    pub mismatches: Vec<String>,
}

impl CellResult {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// `expected` is a subset of `actual`: objects compare key by key, other
/// values by equality.
pub fn partial_match(expected: &Value, actual: &Value) -> bool {
    match (expected, actual) {
        (Value::Object(e), Value::Object(a)) => e
            .iter()
            .all(|(k, ev)| a.get(k).is_some_and(|av| partial_match(ev, av))),
        _ => expected == actual,
    }
}

/// Compares one report against its cell expectation.
pub fn compare(case: &CorpusCase, cell: &CellExpect, report: &Report) -> Vec<String> {
    let mut out = Vec::new();
    let answers = cell.answers.as_ref().unwrap_or(&case.expect.answers);
    let got = report.answer_texts();
    if &got != answers {
        out.push(format!("answers: expected {answers:?}, got {got:?}"));
    }
    let outcome = cell.outcome.as_ref().unwrap_or(&case.expect.outcome);
    if &report.outcome.status != outcome {
        out.push(format!(
            "outcome: expected {outcome}, got {}",
            report.outcome.status
        ));
    }
    if report.violations.len() != cell.violations.len() {
        out.push(format!(
            "violations: expected {}, got {}",
            cell.violations.len(),
            report.violations.len()
        ));
    }
    for (i, (e, v)) in cell.violations.iter().zip(&report.violations).enumerate() {
        let actual = serde_json::to_value(v).expect("violation serializes");
        if !partial_match(e, &actual) {
            out.push(format!("violation {}: expected {e}, got {actual}", i + 1));
        }
    }
    if report.inconclusive.len() != cell.inconclusive {
        out.push(format!(
            "inconclusive: expected {}, got {}",
            cell.inconclusive,
            report.inconclusive.len()
        ));
    }
    out
}

pub fn run_case(case: &CorpusCase) -> Vec<CellResult> {
    let mut rows = Vec::new();
    for sem in Semantics::ALL {
        for mode in MODES {
            let report = case.run(sem, mode);
            let mismatches = match case.cell(sem, mode) {
                Some(cell) => compare(case, cell, &report),
                None => vec!["no expectation for this cell".into()],
            };
            rows.push(CellResult {
                case: case.name.clone(),
                semantics: sem,
                mode,
                report,
                mismatches,
            });
        }
    }
    rows
}

/// Runs every case under all eight cells. Cases are independent and run on
/// separate threads.
pub fn run_corpus(cases: &[CorpusCase]) -> Vec<CellResult> {
    std::thread::scope(|s| {
        let handles: Vec<_> = cases.iter().map(|c| s.spawn(|| run_case(c))).collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("case thread"))
            .collect()
    })
}

/// Actual vs expected, one line per cell, mismatches indented below.
pub fn format_table(rows: &[CellResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<28} {:<6} {:<11} {:>5} {:>5} {:<10} result",
        "case", "sem", "mode", "viol", "inc", "outcome"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<28} {:<6} {:<11} {:>5} {:>5} {:<10} {}",
            r.case,
            r.semantics.name(),
            r.mode.name(),
            r.report.violations.len(),
            r.report.inconclusive.len(),
            r.report.outcome.status,
            if r.ok() { "ok" } else { "MISMATCH" }
        );
        for m in &r.mismatches {
            let _ = writeln!(out, "    {m}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn partial_match_ignores_absent_fields() {
        let actual =
            json!({"kind": "success", "seq": 3, "check_site": {"kind": "wrapper", "instance": 1}});
        assert!(partial_match(&json!({"kind": "success"}), &actual));
        assert!(partial_match(
            &json!({"check_site": {"kind": "wrapper"}}),
            &actual
        ));
        assert!(!partial_match(&json!({"kind": "calls"}), &actual));
        assert!(!partial_match(&json!({"missing": 1}), &actual));
    }
}
