//! Conditional-literal checking of assertions.
//!
//! The calls condition of a predicate is the disjunction of the
//! preconditions of its `check` assertions; each precondition is a
//! conjunction. A success condition `(pre, post)` requires `post` at every
//! exit of a call whose entry satisfied `pre`.
//!
//! Properties are run as goals in a separate engine with a step budget, so
//! they never bind the caller's variables and never trigger checking
//! themselves.

use std::collections::{HashMap, HashSet};

use crate::builtins;
use crate::engine::{solve, EngineError, EngineLimits, EngineOptions, NoHooks, Outcome};
use crate::parser::{ParseError, ParseErrorKind};
use crate::print::{print_term, print_term_canonical};
use crate::program::{Assertion, PredProp, Program, PropFlavor, PropLiteral};
use crate::report::{CheckKind, CheckSite, InconclusiveCheck, InconclusiveReason, Violation};
use crate::term::{PredKey, Term, VarCounter, VarId};

pub const DEFAULT_PROP_BUDGET: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropOutcome {
    Holds,
    Fails,
    Inconclusive(InconclusiveReason),
}

/// Classifies property literals and validates every assertion against the
/// program's predicates and predprops.
pub fn normalize_assertions(mut p: Program) -> Result<Program, Vec<ParseError>> {
    let mut errors = Vec::new();
    let predprops: HashMap<_, _> = p
        .predprops
        .values()
        .map(|pp| (pp.name.clone(), pp.is_wrapper))
        .collect();
    let defined: HashSet<PredKey> = p.defined_keys().cloned().collect();
    let classify = |a: &mut Assertion, errors: &mut Vec<ParseError>| {
        let head_vars: HashSet<VarId> = a.head_vars().into_iter().collect();
        for lit in a.pre.iter_mut().chain(a.post.iter_mut()) {
            let key = lit.key();
            lit.flavor = match predprops.get(&lit.name) {
                Some(&is_wrapper) if key.arity == 1 => {
                    if !matches!(&lit.args[0], Term::Var(v) if head_vars.contains(&v.id)) {
                        errors.push(ParseError::new(
                            ParseErrorKind::Validation,
                            lit.span.clone(),
                            format!(
                                "predprop literal {} must apply to a head variable",
                                print_term(&lit.to_term())
                            ),
                        ));
                    }
                    if is_wrapper {
                        PropFlavor::WrapperPredprop(lit.name.clone())
                    } else {
                        PropFlavor::Predprop(lit.name.clone())
                    }
                }
                _ if builtins::is_builtin_prop(&key) || defined.contains(&key) => {
                    PropFlavor::StateProp
                }
                _ => {
                    errors.push(ParseError::new(
                        ParseErrorKind::Validation,
                        lit.span.clone(),
                        format!("undefined property {key} (not a builtin, predicate, or predprop)"),
                    ));
                    PropFlavor::StateProp
                }
            };
        }
        let mut reachable = head_vars.clone();
        for lit in &a.pre {
            lit.to_term().for_each_var(&mut |v| {
                reachable.insert(v.id);
            });
        }
        for lit in &a.post {
            lit.to_term().for_each_var(&mut |v| {
                if !reachable.contains(&v.id) {
                    errors.push(ParseError::new(
                        ParseErrorKind::Validation,
                        a.span.clone(),
                        format!(
                            "variable {} in the postcondition does not occur in the head or precondition",
                            v.name.as_deref().unwrap_or("_")
                        ),
                    ));
                }
            });
        }
    };
    for a in p.assertions.iter_mut() {
        classify(a, &mut errors);
    }
    for pp in p.predprops.values_mut() {
        for a in pp.anon.iter_mut() {
            classify(a, &mut errors);
        }
    }
    if errors.is_empty() {
        Ok(p)
    } else {
        Err(errors)
    }
}

/// Checked assertions of one predicate, in source order.
pub fn calls_condition<'p>(p: &'p Program, key: &PredKey) -> Vec<&'p Assertion> {
    p.checked_assertions_for(key)
}

/// Runs a property goal in an isolated engine with `budget` steps.
pub fn eval_prop_goal(p: &Program, goal: &Term, budget: u64, occurs_check: bool) -> PropOutcome {
    let options = EngineOptions {
        limits: EngineLimits {
            max_steps: budget,
            max_solutions: Some(1),
            ..EngineLimits::default()
        },
        occurs_check,
    };
    let (sols, _) = solve(p, goal, options, NoHooks);
    if !sols.answers.is_empty() {
        return PropOutcome::Holds;
    }
    match sols.outcome {
        Outcome::LimitHit(_) => PropOutcome::Inconclusive(InconclusiveReason::Budget),
        Outcome::Error(EngineError::Instantiation(_)) => {
            PropOutcome::Inconclusive(InconclusiveReason::UnboundRequired)
        }
        _ => PropOutcome::Fails,
    }
}

/// Evaluates a state property literal on concrete argument values.
pub fn eval_prop(p: &Program, lit: &PropLiteral, args: &[Term], budget: u64) -> PropOutcome {
    debug_assert!(!lit.is_predprop());
    eval_prop_goal(p, &Term::app(lit.name.clone(), args.to_vec()), budget, true)
}

/// Maps an assertion's variables onto actual values: head variables to the
/// call's arguments, all others to fresh variables.
pub struct Instantiation {
    env: HashMap<VarId, Term>,
    counter: VarCounter,
}

impl Instantiation {
    pub fn new(a: &Assertion, args: &[Term]) -> Self {
        let env = a
            .head
            .args()
            .iter()
            .zip(args)
            .filter_map(|(h, v)| h.as_var().map(|hv| (hv.id, v.clone())))
            .collect();
        Instantiation {
            env,
            counter: VarCounter::above(args),
        }
    }

    pub fn apply(&mut self, t: &Term) -> Term {
        let Instantiation { env, counter } = self;
        t.map_vars(&mut |v| {
            env.entry(v.id)
                .or_insert_with(|| Term::Var(counter.fresh()))
                .clone()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    Pre,
    Post,
}

/// Outcome of one literal plus an optional explanation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiteralVerdict {
    pub outcome: PropOutcome,
    pub note: Option<String>,
}

impl LiteralVerdict {
    pub fn of(outcome: PropOutcome) -> Self {
        LiteralVerdict {
            outcome,
            note: None,
        }
    }
}

/// Decides predprop literals; the checking semantics plug in here.
pub trait PredPropHandler {
    /// `value` is the resolved argument; `arg_index` its position among the
    /// checked goal's arguments.
    fn predprop(
        &mut self,
        pp: &PredProp,
        value: &Term,
        arg_index: usize,
        position: Position,
    ) -> LiteralVerdict;
}

/// Treats a predprop literal as `callable/1` on its argument.
pub struct CallableOnly;

impl PredPropHandler for CallableOnly {
    fn predprop(&mut self, _: &PredProp, value: &Term, _: usize, _: Position) -> LiteralVerdict {
        LiteralVerdict::of(
            if matches!(
                value,
                Term::Atom(_) | Term::Struct(..) | Term::PredRef { .. }
            ) {
                PropOutcome::Holds
            } else {
                PropOutcome::Fails
            },
        )
    }
}

/// Shared inputs of one condition evaluation.
pub struct EvalCtx<'a> {
    pub program: &'a Program,
    pub budget: u64,
    pub occurs_check: bool,
}

/// Result of a conjunction: the first failing literal (printed) if any.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjVerdict {
    pub outcome: PropOutcome,
    pub failed: Option<String>,
}

/// Evaluates a conjunction left to right, stopping at the first failure.
pub fn eval_conj(
    cx: &EvalCtx<'_>,
    a: &Assertion,
    lits: &[PropLiteral],
    args: &[Term],
    position: Position,
    handler: &mut dyn PredPropHandler,
) -> ConjVerdict {
    let mut inst = Instantiation::new(a, args);
    let mut inconclusive = None;
    for lit in lits {
        let actual: Vec<Term> = lit.args.iter().map(|t| inst.apply(t)).collect();
        let printed = || print_term(&Term::app(lit.name.clone(), actual.clone()));
        let verdict = match &lit.flavor {
            PropFlavor::StateProp => LiteralVerdict::of(eval_prop_goal(
                cx.program,
                &Term::app(lit.name.clone(), actual.clone()),
                cx.budget,
                cx.occurs_check,
            )),
            PropFlavor::Predprop(name) | PropFlavor::WrapperPredprop(name) => {
                let pp = cx
                    .program
                    .predprop(name)
                    .expect("predprop validated at load");
                let index = a
                    .head
                    .args()
                    .iter()
                    .position(|h| h == &lit.args[0])
                    .expect("predprop literal applies to a head variable");
                handler.predprop(pp, &actual[0], index, position)
            }
        };
        match verdict.outcome {
            PropOutcome::Holds => {}
            PropOutcome::Fails => {
                let mut failed = printed();
                if let Some(note) = verdict.note {
                    failed.push_str(": ");
                    failed.push_str(&note);
                }
                return ConjVerdict {
                    outcome: PropOutcome::Fails,
                    failed: Some(failed),
                };
            }
            PropOutcome::Inconclusive(r) => {
                inconclusive.get_or_insert(r);
            }
        }
    }
    ConjVerdict {
        outcome: inconclusive.map_or(PropOutcome::Holds, PropOutcome::Inconclusive),
        failed: None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CallsVerdict {
    Pass,
    /// No disjunct held; the failing literal of each disjunct.
    Violated(Vec<String>),
    /// No disjunct held and at least one could not be decided.
    Inconclusive(InconclusiveReason),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CallsEval {
    pub verdict: CallsVerdict,
    /// Precondition outcome per assertion, in input order.
    pub pre: Vec<PropOutcome>,
}

/// Evaluates the calls condition formed by `assertions` on `args`.
pub fn eval_calls(
    cx: &EvalCtx<'_>,
    assertions: &[&Assertion],
    args: &[Term],
    handler: &mut dyn PredPropHandler,
) -> CallsEval {
    let mut pre = Vec::with_capacity(assertions.len());
    let mut failures = Vec::new();
    let mut inconclusive = None;
    for a in assertions {
        let v = eval_conj(cx, a, &a.pre, args, Position::Pre, handler);
        match v.outcome {
            PropOutcome::Fails => failures.push(v.failed.unwrap_or_default()),
            PropOutcome::Inconclusive(r) => {
                inconclusive.get_or_insert(r);
            }
            PropOutcome::Holds => {}
        }
        pre.push(v.outcome);
    }
    let verdict = if assertions.is_empty() || pre.contains(&PropOutcome::Holds) {
        CallsVerdict::Pass
    } else if let Some(r) = inconclusive {
        CallsVerdict::Inconclusive(r)
    } else {
        CallsVerdict::Violated(failures)
    };
    CallsEval { verdict, pre }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuccessFailure {
    /// Index into the assertion list.
    pub index: usize,
    pub outcome: PropOutcome,
    pub failed: Option<String>,
}

/// Evaluates postconditions of the assertions whose precondition held at
/// entry. Returns one entry per assertion whose postcondition did not hold.
pub fn eval_success(
    cx: &EvalCtx<'_>,
    assertions: &[&Assertion],
    pre: &[PropOutcome],
    exit_args: &[Term],
    handler: &mut dyn PredPropHandler,
) -> Vec<SuccessFailure> {
    let mut out = Vec::new();
    for (i, (a, p)) in assertions.iter().zip(pre).enumerate() {
        if *p != PropOutcome::Holds || a.post.is_empty() {
            continue;
        }
        let v = eval_conj(cx, a, &a.post, exit_args, Position::Post, handler);
        if v.outcome != PropOutcome::Holds {
            out.push(SuccessFailure {
                index: i,
                outcome: v.outcome,
                failed: v.failed,
            });
        }
    }
    out
}

/// Violations and undecided checks found by one check.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CheckResult {
    pub violations: Vec<Violation>,
    pub inconclusive: Vec<InconclusiveCheck>,
}

impl CheckResult {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty() && self.inconclusive.is_empty()
    }
}

/// Builds the violation record for a failed calls condition.
pub fn calls_violation(
    assertions: &[&Assertion],
    failures: &[String],
    pred_key: &PredKey,
    site: CheckSite,
    culprit: &str,
) -> Violation {
    let first = assertions[0];
    Violation {
        seq: 0,
        assertion_id: first.id,
        assertion_ids: assertions.iter().map(|a| a.id).collect(),
        origin: first.origin.clone(),
        kind: CheckKind::Calls,
        pred_key: pred_key.to_string(),
        check_site: site,
        culprit: culprit.to_string(),
        entry: culprit.to_string(),
        exit: None,
        span: first.span.clone(),
        message: format!("no calls condition holds: {}", failures.join("; ")),
    }
}

pub fn success_violation(
    a: &Assertion,
    failed: Option<&str>,
    pred_key: &PredKey,
    site: CheckSite,
    entry: &str,
    exit: &str,
) -> Violation {
    Violation {
        seq: 0,
        assertion_id: a.id,
        assertion_ids: vec![a.id],
        origin: a.origin.clone(),
        kind: CheckKind::Success,
        pred_key: pred_key.to_string(),
        check_site: site,
        culprit: exit.to_string(),
        entry: entry.to_string(),
        exit: Some(exit.to_string()),
        span: a.span.clone(),
        message: format!("postcondition does not hold: {}", failed.unwrap_or("?")),
    }
}

pub fn inconclusive_check(
    assertions: &[&Assertion],
    kind: CheckKind,
    reason: InconclusiveReason,
    pred_key: &PredKey,
    site: CheckSite,
    culprit: &str,
) -> InconclusiveCheck {
    InconclusiveCheck {
        seq: 0,
        assertion_ids: assertions.iter().map(|a| a.id).collect(),
        origin: assertions[0].origin.clone(),
        kind,
        pred_key: pred_key.to_string(),
        check_site: site,
        culprit: culprit.to_string(),
        reason,
        span: assertions[0].span.clone(),
    }
}

/// First-order calls check of `key` on `goal_args`. Predprop literals are
/// treated as `callable/1`.
pub fn check_calls(p: &Program, key: &PredKey, goal_args: &[Term], budget: u64) -> CheckResult {
    let assertions = calls_condition(p, key);
    let cx = EvalCtx {
        program: p,
        budget,
        occurs_check: true,
    };
    let culprit = print_term_canonical(&Term::app(key.name.clone(), goal_args.to_vec()));
    let eval = eval_calls(&cx, &assertions, goal_args, &mut CallableOnly);
    let mut out = CheckResult::default();
    match eval.verdict {
        CallsVerdict::Pass => {}
        CallsVerdict::Violated(f) => out.violations.push(calls_violation(
            &assertions,
            &f,
            key,
            CheckSite::Direct,
            &culprit,
        )),
        CallsVerdict::Inconclusive(r) => out.inconclusive.push(inconclusive_check(
            &assertions,
            CheckKind::Calls,
            r,
            key,
            CheckSite::Direct,
            &culprit,
        )),
    }
    out
}

/// First-order success check: preconditions are re-evaluated on the entry
/// snapshot, postconditions on the exit arguments.
pub fn check_success(
    p: &Program,
    key: &PredKey,
    entry_args: &[Term],
    exit_args: &[Term],
    budget: u64,
) -> CheckResult {
    let assertions = calls_condition(p, key);
    let cx = EvalCtx {
        program: p,
        budget,
        occurs_check: true,
    };
    let pre = eval_calls(&cx, &assertions, entry_args, &mut CallableOnly).pre;
    let entry = print_term_canonical(&Term::app(key.name.clone(), entry_args.to_vec()));
    let exit = print_term_canonical(&Term::app(key.name.clone(), exit_args.to_vec()));
    let mut out = CheckResult::default();
    for f in eval_success(&cx, &assertions, &pre, exit_args, &mut CallableOnly) {
        let a = assertions[f.index];
        match f.outcome {
            PropOutcome::Inconclusive(r) => out.inconclusive.push(inconclusive_check(
                &[a],
                CheckKind::Success,
                r,
                key,
                CheckSite::Direct,
                &exit,
            )),
            _ => out.violations.push(success_violation(
                a,
                f.failed.as_deref(),
                key,
                CheckSite::Direct,
                &entry,
                &exit,
            )),
        }
    }
    out
}
