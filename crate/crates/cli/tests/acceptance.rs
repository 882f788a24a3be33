//! Acceptance criteria 1-9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use serde_json::Value;

use hopl::corpus::{default_dir, load_corpus, CorpusCase, MODES};
use hopl::engine::{solve, EngineOptions, NoHooks, Outcome};
use hopl::parser::{parse_program, parse_term};
use hopl::print::{print_program, print_term};
use hopl::subst::{unify, Substitution};
use hopl::term::{is_variant, Term};
use hopl::{ErrorMode, Report, Semantics};
use hopl_testkit::{fixpoint, fo_pair, program_from_seed, same_program, show, term};

const MIN_CORPUS: usize = 30;
const SOUNDNESS_PROGRAMS: u64 = 200;
const SOUNDNESS_SECONDS: f64 = 10.0;
const UNIFY_PAIRS: usize = 1000;
const RANDOM_TERMS: usize = 500;

/// Bug-seeded higher-order cases: fo must miss them, tight must not.
const SEEDED_HO: &[&str] = &[
    "map_bad",
    "map_partial_bad",
    "foldl_bad",
    "sort_bad_cmp",
    "compose_bad",
    "filter_bad",
    "nested_predprop",
    "anon_disjunction",
];

type Outcomes = Result<String, String>;
type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcomes + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gather(c: &CorpusCase, sem: Semantics) -> Report {
    c.run(sem, ErrorMode::GatherAll)
}

fn engine_outcome(r: &Report) -> (String, Option<String>) {
    (
        r.outcome.status.clone(),
        r.outcome.limit.map(|l| format!("{l:?}")),
    )
}

fn case<'a>(cases: &'a [CorpusCase], name: &str) -> Result<&'a CorpusCase, String> {
    cases
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| format!("corpus case {name} missing"))
}

fn criterion_1(cases: &[CorpusCase]) -> Outcomes {
    ensure(cases.len() >= MIN_CORPUS, || {
        format!("corpus has {} < {MIN_CORPUS} programs", cases.len())
    })?;
    let mut compared = 0;
    let mut exception_seen = false;
    for c in cases {
        let off = gather(c, Semantics::Off);
        for sem in [Semantics::Fo, Semantics::Tight, Semantics::Loose] {
            let r = gather(c, sem);
            if !r.violations.is_empty() {
                continue;
            }
            let same = r.answer_texts() == off.answer_texts()
                && engine_outcome(&r) == engine_outcome(&off);
            if sem == Semantics::Loose && c.expect.wrapper_identity {
                exception_seen |= !same;
                continue;
            }
            ensure(same, || {
                format!(
                    "{} under {sem}: {:?} vs off {:?}",
                    c.name,
                    r.answer_texts(),
                    off.answer_texts()
                )
            })?;
            compared += 1;
        }
    }
    ensure(exception_seen, || {
        "wrapper-identity case did not differ under loose".into()
    })?;
    Ok(format!(
        "{} programs, {compared} violation-free runs identical to off; wrapper-identity exception observed",
        cases.len()
    ))
}

fn criterion_2(cases: &[CorpusCase]) -> Outcomes {
    let mut cells = 0;
    for c in cases {
        for sem in Semantics::ALL {
            let [ff, all] = MODES.map(|m| c.run(sem, m));
            let first: Vec<_> = all.violations.iter().take(1).cloned().collect();
            ensure(ff.violations == first, || {
                format!("{} under {sem}: fail-fast differs", c.name)
            })?;
            cells += 1;
        }
    }
    let two = case(cases, "two_bugs")?;
    for sem in [Semantics::Fo, Semantics::Tight, Semantics::Loose] {
        let all = two.run(sem, ErrorMode::GatherAll).violations;
        let ff = two.run(sem, ErrorMode::FailFast).violations;
        ensure(all.len() == 2 && ff.len() == 1, || {
            format!(
                "two_bugs under {sem}: gather {} fail-fast {}",
                all.len(),
                ff.len()
            )
        })?;
        ensure(all[0].seq == 1 && all[1].seq == 2, || {
            "two_bugs seq order".into()
        })?;
    }
    Ok(format!(
        "{cells} (case, semantics) pairs; two_bugs gives 2 vs 1"
    ))
}

fn criterion_3(cases: &[CorpusCase]) -> Outcomes {
    let count = |name: &str, sem| case(cases, name).map(|c| gather(c, sem).violations.len());
    let (ct, cl) = (
        count("tight_context_witness", Semantics::Tight)?,
        count("tight_context_witness", Semantics::Loose)?,
    );
    let (lt, ll) = (
        count("loose_locality_witness", Semantics::Tight)?,
        count("loose_locality_witness", Semantics::Loose)?,
    );
    ensure(ct >= 1 && cl == 0, || {
        format!("context witness: tight {ct}, loose {cl}")
    })?;
    ensure(lt == 0 && ll >= 1, || {
        format!("locality witness: tight {lt}, loose {ll}")
    })?;
    Ok(format!(
        "context witness tight {ct} / loose {cl}; locality witness tight {lt} / loose {ll}"
    ))
}

fn criterion_4(cases: &[CorpusCase]) -> Outcomes {
    let mut parts = Vec::new();
    for name in SEEDED_HO {
        let c = case(cases, name)?;
        let fo = gather(c, Semantics::Fo).violations.len();
        let tight = gather(c, Semantics::Tight).violations.len();
        ensure(fo == 0 && tight >= 1, || {
            format!("{name}: fo {fo}, tight {tight}")
        })?;
        parts.push(format!("{name} {fo}/{tight}"));
    }
    Ok(format!("fo/tight: {}", parts.join(", ")))
}

fn criterion_5() -> Outcomes {
    let start = Instant::now();
    let mut queries = 0;
    for seed in 0..SOUNDNESS_PROGRAMS {
        let rp = program_from_seed(seed);
        let p = rp.program();
        let model = fixpoint(&p);
        for (i, (name, arity)) in rp.preds.iter().enumerate() {
            let q = rp.query(i);
            let (sols, _) = solve(
                &p,
                &parse_term(&q).unwrap(),
                EngineOptions::default(),
                NoHooks,
            );
            ensure(sols.outcome == Outcome::Exhausted, || {
                format!("seed {seed} {q}: {}", sols.outcome)
            })?;
            let got: BTreeSet<String> = sols
                .answers
                .iter()
                .map(|a| {
                    show(
                        &a.bindings
                            .iter()
                            .map(|(_, t)| t.clone())
                            .collect::<Vec<_>>(),
                    )
                })
                .collect();
            let want = model
                .get(&format!("{name}/{arity}"))
                .cloned()
                .unwrap_or_default();
            ensure(got == want, || {
                format!("seed {seed} {q}: {got:?} vs oracle {want:?}")
            })?;
            queries += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < SOUNDNESS_SECONDS, || format!("took {secs:.2}s"))?;
    Ok(format!(
        "{SOUNDNESS_PROGRAMS} programs, {queries} queries equal to the fixpoint in {secs:.2}s"
    ))
}

fn runner() -> TestRunner {
    TestRunner::new_with_rng(
        Config::default(),
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn sample<S: Strategy>(s: &S, r: &mut TestRunner) -> S::Value {
    s.new_tree(r).expect("strategy").current()
}

fn criterion_6() -> Outcomes {
    let mut r = runner();
    let gen = fo_pair();
    let mut unified = 0;
    for i in 0..UNIFY_PAIRS {
        let (a, b) = sample(&gen, &mut r);
        let ab = unify(&a, &b, &Substitution::new(), true);
        let ba = unify(&b, &a, &Substitution::new(), true);
        ensure(ab.is_some() == ba.is_some(), || {
            format!("pair {i}: asymmetric on {a} / {b}")
        })?;
        if let (Some(s1), Some(s2)) = (ab, ba) {
            unified += 1;
            ensure(s1.is_idempotent(), || {
                format!("pair {i}: MGU not idempotent")
            })?;
            ensure(s1.apply(&a) == s1.apply(&b), || {
                format!("pair {i}: not a unifier")
            })?;
            ensure(is_variant(&s1.apply(&a), &s2.apply(&a)), || {
                format!("pair {i}: not symmetric up to renaming")
            })?;
        }
        let x = Term::var(0);
        let cyclic = Term::compound("f", vec![a, x.clone()]);
        ensure(
            unify(&x, &cyclic, &Substitution::new(), true).is_none(),
            || format!("pair {i}: occurs check accepted a cycle"),
        )?;
    }
    ensure(unified >= UNIFY_PAIRS / 5, || {
        format!("only {unified} pairs unified")
    })?;
    Ok(format!(
        "{UNIFY_PAIRS} pairs ({unified} unifiable), {UNIFY_PAIRS} occurs-check rejections"
    ))
}

fn criterion_7(cases: &[CorpusCase]) -> Outcomes {
    for c in cases {
        let printed = print_program(&c.program);
        let again =
            parse_program(&printed, "printed.hopl").map_err(|e| format!("{}: {e}", c.name))?;
        ensure(same_program(&c.program, &again), || {
            format!("{}: program changed", c.name)
        })?;
    }
    let mut r = runner();
    let gen = term(4, 5);
    for _ in 0..RANDOM_TERMS {
        let t = sample(&gen, &mut r);
        let text = print_term(&t);
        let back = parse_term(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure(is_variant(&t, &back), || {
            format!("{text} changed on re-parse")
        })?;
    }
    Ok(format!(
        "{} corpus programs and {RANDOM_TERMS} random terms",
        cases.len()
    ))
}

fn criterion_8(cases: &[CorpusCase]) -> Outcomes {
    let mut n = 0;
    for c in cases.iter().filter(|c| !c.expect.wrapper_identity) {
        let off = gather(c, Semantics::Off);
        let loose = gather(c, Semantics::Loose);
        ensure(loose.answer_texts() == off.answer_texts(), || {
            format!(
                "{}: loose {:?} vs off {:?}",
                c.name,
                loose.answer_texts(),
                off.answer_texts()
            )
        })?;
        n += 1;
    }
    Ok(format!("{n} loose runs answer exactly as unwrapped"))
}

fn expected_exit(report: &Value) -> i64 {
    let violations = report["violations"].as_array().map_or(0, Vec::len);
    let status = report["outcome"]["status"].as_str().unwrap_or("");
    if violations > 0 {
        1
    } else if status == "limit_hit" || status == "error" {
        3
    } else {
        0
    }
}

fn hopl(args: &[String]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hopl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn criterion_9(cases: &[CorpusCase]) -> Outcomes {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/report.schema.json");
    let schema: Value =
        serde_json::from_str(&std::fs::read_to_string(&root).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let validator = jsonschema::validator_for(&schema).map_err(|e| format!("schema: {e}"))?;
    let mut reports = 0;
    for c in cases {
        for sem in Semantics::ALL {
            for mode in MODES {
                let mut args: Vec<String> = vec![
                    "run".into(),
                    c.path.display().to_string(),
                    "--goal".into(),
                    c.expect.goal.clone(),
                    "--semantics".into(),
                    sem.name().into(),
                    "--error-mode".into(),
                    mode.name().into(),
                    "--report".into(),
                    "json".into(),
                ];
                if let Some(d) = c.expect.max_depth {
                    args.extend(["--max-depth".into(), d.to_string()]);
                }
                if let Some(s) = c.expect.max_steps {
                    args.extend(["--max-steps".into(), s.to_string()]);
                }
                if let Some(b) = c.expect.prop_budget {
                    args.extend(["--prop-budget".into(), b.to_string()]);
                }
                let out = hopl(&args);
                let where_ = format!("{} {sem}/{mode}", c.name);
                let report: Value =
                    serde_json::from_slice(&out.stdout).map_err(|e| format!("{where_}: {e}"))?;
                if let Some(err) = validator.iter_errors(&report).next() {
                    return Err(format!(
                        "{where_}: schema: {err} at {}",
                        err.instance_path()
                    ));
                }
                let code = out.status.code().unwrap_or(-1) as i64;
                ensure(
                    code == expected_exit(&report) && report["exit_code"] == code,
                    || {
                        format!(
                            "{where_}: exit {code}, table says {}",
                            expected_exit(&report)
                        )
                    },
                )?;
                reports += 1;
            }
        }
    }
    let dir = std::env::temp_dir().join(format!("hopl-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let bad = dir.join("bad.hopl");
    std::fs::write(&bad, "p(a.\n").map_err(|e| e.to_string())?;
    let load = hopl(&[
        "run".into(),
        bad.display().to_string(),
        "--goal".into(),
        "p(X)".into(),
    ]);
    ensure(load.status.code() == Some(2), || {
        "load error did not exit 2".into()
    })?;
    let usage = hopl(&["run".into(), bad.display().to_string()]);
    ensure(usage.status.code() == Some(4), || {
        "missing goal did not exit 4".into()
    })?;
    Ok(format!(
        "{reports} JSON reports valid, exit codes per table; load error 2, usage 4"
    ))
}

fn main() {
    let dir: PathBuf = default_dir();
    let cases = match load_corpus(&dir) {
        Ok(c) => c,
        Err(e) => {
            println!("acceptance: cannot load corpus: {e}");
            std::process::exit(1);
        }
    };
    let criteria: Vec<Criterion> = vec![
        (1, "non-interference", Box::new(|| criterion_1(&cases))),
        (
            2,
            "gather-all vs fail-fast",
            Box::new(|| criterion_2(&cases)),
        ),
        (
            3,
            "tight/loose separation",
            Box::new(|| criterion_3(&cases)),
        ),
        (
            4,
            "first-order baseline blind spot",
            Box::new(|| criterion_4(&cases)),
        ),
        (5, "engine soundness", Box::new(criterion_5)),
        (6, "unification properties", Box::new(criterion_6)),
        (7, "parser round trip", Box::new(|| criterion_7(&cases))),
        (8, "wrapper transparency", Box::new(|| criterion_8(&cases))),
        (9, "report contract", Box::new(|| criterion_9(&cases))),
    ];
    let mut failed = 0;
    for (n, name, f) in &criteria {
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {n} ({name}): PASS: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL: {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
