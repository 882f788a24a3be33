use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
        .display()
        .to_string()
}

fn hopl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hopl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_run(file: &str, goal: &str, sem: &str) -> (i32, Value) {
    let out = hopl(&[
        "run",
        &corpus(file),
        "--goal",
        goal,
        "--semantics",
        sem,
        "--report",
        "json",
    ]);
    let v: Value = serde_json::from_slice(&out.stdout).expect("json report");
    (out.status.code().unwrap(), v)
}

fn temp_file(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hopl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn bad_comparator_under_each_semantics() {
    let (code, tight) = json_run("sort_bad_cmp.hopl", "main", "tight");
    assert_eq!(code, 1);
    let vs = tight["violations"].as_array().unwrap();
    assert_eq!(vs.len(), 1);
    assert_eq!(vs[0]["kind"], "success");
    assert_eq!(vs[0]["origin"]["kind"], "predprop");

    let (code, off) = json_run("sort_bad_cmp.hopl", "main", "off");
    assert_eq!(code, 0);
    assert_eq!(off["answers"], tight["answers"]);

    let (code, fo) = json_run("sort_bad_cmp.hopl", "main", "fo");
    assert_eq!(code, 0);
    assert_eq!(fo["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn defaults_are_tight_gather_all_text() {
    let out = hopl(&["run", &corpus("two_bugs.hopl"), "--goal", "main(V, F)"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("semantics: tight, error mode: gather_all"),
        "{text}"
    );
    assert!(text.contains("violations: 2"));
    assert!(text.contains("culprit: lookup(k2, two)"));
    // caret excerpt under the assertion line
    assert!(text.contains("| :- check pred lookup(K, V) : atm(K) => int(V)."));
    assert!(text.contains("^^^^"));
}

#[test]
fn error_mode_accepts_both_spellings() {
    for mode in ["fail-fast", "fail_fast"] {
        let out = hopl(&[
            "run",
            &corpus("two_bugs.hopl"),
            "--goal",
            "main(V, F)",
            "--error-mode",
            mode,
            "--report",
            "json",
        ]);
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["violations"].as_array().unwrap().len(), 1);
        assert_eq!(v["config"]["error_mode"], "fail_fast");
    }
}

#[test]
fn usage_and_load_errors() {
    assert_eq!(
        hopl(&["run", &corpus("map_clean.hopl")]).status.code(),
        Some(4)
    );
    assert_eq!(
        hopl(&["run", &corpus("map_clean.hopl"), "--goal", "main("])
            .status
            .code(),
        Some(4)
    );
    assert_eq!(hopl(&["frobnicate"]).status.code(), Some(4));
    assert_eq!(
        hopl(&[
            "run",
            &corpus("map_clean.hopl"),
            "--goal",
            "main(R)",
            "--semantics",
            "strict"
        ])
        .status
        .code(),
        Some(4)
    );

    let bad = temp_file("bad.hopl", "p(a.\nq(b) :- .\nr(c).\n");
    let out = hopl(&["run", bad.to_str().unwrap(), "--goal", "r(X)"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(
        err.lines().filter(|l| l.starts_with("error: ")).count(),
        2,
        "{err}"
    );
    assert!(err.contains(":1:"), "{err}");
    assert!(err.contains(":2:"), "{err}");
}

#[test]
fn check_command() {
    assert_eq!(
        hopl(&["check", &corpus("sort_clean.hopl")]).status.code(),
        Some(0)
    );

    let undefined = temp_file("undef.hopl", "p(_).\n:- check pred p(X) : sorted_by(X).\n");
    let out = hopl(&["check", undefined.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("undef.hopl:2:"), "{err}");
    assert!(err.contains("undefined property sorted_by/1"), "{err}");

    let dollar = temp_file("dollar.hopl", "'$secret'(a).\n");
    assert_eq!(
        hopl(&["check", dollar.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn list_text_and_json_agree() {
    let file = corpus("anon_disjunction.hopl");
    let json = hopl(&["list", &file, "--format", "json"]);
    assert_eq!(json.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&json.stdout).unwrap();
    let text = String::from_utf8(hopl(&["list", &file]).stdout).unwrap();
    let n_assert = v["assertions"].as_array().unwrap().len();
    let n_pp = v["predprops"].as_array().unwrap().len();
    assert!(text.contains(&format!("assertions: {n_assert}")));
    assert!(text.contains(&format!("predprops: {n_pp}")));
    assert_eq!(v["predprops"][0]["anon_assertions"], 2);
    assert_eq!(v["predprops"][0]["described_arity"], 2);
    assert_eq!(v["assertions"][0]["status"], "check");
    assert!(text.contains("same_kind/1 on 2: 2 anon assertion(s)"));
}

#[test]
fn trace_goes_to_stderr_one_event_per_line() {
    let p = temp_file("tr.hopl", "p(a).\np(b).\n");
    let out = hopl(&[
        "run",
        p.to_str().unwrap(),
        "--goal",
        "p(X), X = b",
        "--semantics",
        "off",
        "--trace",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(
        lines,
        [
            "call (0) p(X)",
            "exit (0) p(a)",
            "call (0) a = b",
            "fail (0) a = b",
            "redo (0) p(X)",
            "exit (0) p(b)",
            "call (0) b = b",
            "exit (0) b = b",
        ]
    );
}

#[test]
fn inconclusive_only_exits_zero_with_warning() {
    let out = hopl(&[
        "run",
        &corpus("looping_prop.hopl"),
        "--goal",
        "main",
        "--prop-budget",
        "500",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("warning: 1 inconclusive check(s)"), "{err}");
}

#[test]
fn limit_hit_exits_three() {
    let out = hopl(&[
        "run",
        &corpus("depth_limit.hopl"),
        "--goal",
        "main",
        "--max-depth",
        "50",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = hopl(&[
        "run",
        &corpus("depth_limit.hopl"),
        "--goal",
        "main",
        "--max-steps",
        "40",
        "--report",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["outcome"]["limit"], "max_steps");
}
