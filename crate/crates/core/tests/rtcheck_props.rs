use hopl::corpus::{default_dir, load_corpus, MODES};
use hopl::parser::{parse_program, parse_term};
use hopl::rtcheck::{run, CheckConfig, ErrorMode, RunOptions, Semantics};
use hopl::Program;
use hopl_testkit::{program_from_seed, RandomProgram};

const PROPS: &[&str] = &["int", "atm", "ground", "nonvar", "list"];

/// The random program for `seed` with a pseudo-random check assertion on
/// some of its predicates.
fn with_assertions(seed: u64) -> (RandomProgram, Program) {
    let rp = program_from_seed(seed);
    let mut src = rp.source.clone();
    for (i, (name, arity)) in rp.preds.iter().enumerate() {
        if *arity == 0 || (seed >> i) & 1 == 0 {
            continue;
        }
        let args: Vec<String> = (0..*arity).map(|k| format!("A{k}")).collect();
        let pick = |k: u64| PROPS[((seed / 3 + i as u64 * 7 + k) % PROPS.len() as u64) as usize];
        src.push_str(&format!(
            ":- check pred {name}({}) : {}(A0) => {}(A{}).\n",
            args.join(", "),
            pick(0),
            pick(1),
            arity - 1
        ));
    }
    let p = parse_program(&src, "random.hopl").expect("parses");
    (rp, p)
}

fn run_with(p: &Program, goal: &str, sem: Semantics, mode: ErrorMode) -> hopl::Report {
    let opts = RunOptions {
        check: CheckConfig::new(sem, mode),
        ..Default::default()
    };
    run(p, &parse_term(goal).unwrap(), goal, &opts).report
}

#[test]
fn checking_never_changes_answers_of_first_order_programs() {
    let mut violating = 0;
    for seed in 0..150 {
        let (rp, p) = with_assertions(seed);
        for i in 0..rp.preds.len() {
            let g = rp.query(i);
            let off = run_with(&p, &g, Semantics::Off, ErrorMode::GatherAll);
            for sem in [Semantics::Fo, Semantics::Tight, Semantics::Loose] {
                let all = run_with(&p, &g, sem, ErrorMode::GatherAll);
                // Gather-all never stops the derivation, so answers match
                // even when assertions are violated.
                assert_eq!(all.answers, off.answers, "seed {seed} {g} {sem}");
                assert_eq!(all.outcome.status, off.outcome.status);
                let ff = run_with(&p, &g, sem, ErrorMode::FailFast);
                assert_eq!(
                    ff.violations,
                    all.violations.iter().take(1).cloned().collect::<Vec<_>>()
                );
                if !all.violations.is_empty() {
                    violating += 1;
                    assert_eq!(ff.outcome.status, "halted");
                    assert!(ff.answers.len() <= all.answers.len());
                    assert_eq!(ff.answers[..], all.answers[..ff.answers.len()]);
                }
            }
        }
    }
    assert!(violating > 50, "only {violating} violating runs");
}

#[test]
fn corpus_fail_fast_is_first_gathered_violation() {
    for c in load_corpus(&default_dir()).unwrap() {
        for sem in Semantics::ALL {
            let [ff, all] = MODES.map(|m| c.run(sem, m));
            assert_eq!(
                ff.violations,
                all.violations.iter().take(1).cloned().collect::<Vec<_>>(),
                "{} under {sem}",
                c.name
            );
        }
    }
}

#[test]
fn off_reports_nothing_on_the_corpus() {
    for c in load_corpus(&default_dir()).unwrap() {
        for m in MODES {
            let r = c.run(Semantics::Off, m);
            assert!(
                r.violations.is_empty() && r.inconclusive.is_empty(),
                "{}",
                c.name
            );
        }
    }
}
