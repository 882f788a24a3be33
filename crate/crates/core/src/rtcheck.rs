//! Run-time checking semantics as engine hooks.
//!
//! `fo` checks state properties only and reads predprop literals as
//! `callable/1`. `tight` attaches a predprop's anonymous assertions to the
//! predicate itself, so every later call to it is checked wherever it comes
//! from. `loose` replaces the predicate-valued argument with a fresh wrapper
//! predicate and checks only the calls that go through it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::assertions::{
    calls_violation, eval_conj, inconclusive_check, success_violation, CallableOnly, EvalCtx,
    LiteralVerdict, Position, PredPropHandler, PropOutcome, DEFAULT_PROP_BUDGET,
};
use crate::engine::{
    solve, BoxId, CallInfo, CheckHooks, DerivationEvent, EngineOptions, HookAction, HookCtx, Tracer,
};
use crate::print::{print_term, print_term_canonical};
use crate::program::{Assertion, PredProp, Program};
use crate::report::{
    finalize_report, CheckKind, CheckSite, InconclusiveCheck, Report, RunArtifacts, Violation,
};
use crate::span::SourceSpan;
use crate::term::{saturate, Clause, Goal, PredKey, Sym, Term, VarCounter};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    Off,
    Fo,
    #[default]
    Tight,
    Loose,
}

impl Semantics {
    pub const ALL: [Semantics; 4] = [
        Semantics::Off,
        Semantics::Fo,
        Semantics::Tight,
        Semantics::Loose,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Semantics::Off => "off",
            Semantics::Fo => "fo",
            Semantics::Tight => "tight",
            Semantics::Loose => "loose",
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Semantics {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Semantics::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown semantics {s:?} (expected off, fo, tight or loose)"))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    FailFast,
    #[default]
    GatherAll,
}

impl ErrorMode {
    pub const ALL: [ErrorMode; 2] = [ErrorMode::FailFast, ErrorMode::GatherAll];

    pub fn name(self) -> &'static str {
        match self {
            ErrorMode::FailFast => "fail_fast",
            ErrorMode::GatherAll => "gather_all",
        }
    }
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fail_fast" | "fail-fast" => Ok(ErrorMode::FailFast),
            "gather_all" | "gather-all" => Ok(ErrorMode::GatherAll),
            _ => Err(format!(
                "unknown error mode {s:?} (expected fail-fast or gather-all)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CheckConfig {
    pub semantics: Semantics,
    pub error_mode: ErrorMode,
    pub prop_budget: u64,
    pub respect_wrapper_predprops: bool,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            semantics: Semantics::Tight,
            error_mode: ErrorMode::GatherAll,
            prop_budget: DEFAULT_PROP_BUDGET,
            respect_wrapper_predprops: true,
        }
    }
}

impl CheckConfig {
    pub fn new(semantics: Semantics, error_mode: ErrorMode) -> Self {
        CheckConfig {
            semantics,
            error_mode,
            ..Default::default()
        }
    }
}

/// Predprops attached to predicates under tight semantics. Entries are
/// `(predprop name, offset)`: the anonymous assertions describe the
/// arguments from `offset` on, the leading ones being closed over by a
/// partial application.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TightRegistry {
    map: BTreeMap<PredKey, BTreeSet<(Sym, usize)>>,
}

impl TightRegistry {
    /// Returns false if the attachment already existed.
    pub fn attach(&mut self, key: PredKey, predprop: Sym, offset: usize) -> bool {
        self.map.entry(key).or_default().insert((predprop, offset))
    }

    pub fn attached(&self, key: &PredKey) -> impl Iterator<Item = &(Sym, usize)> {
        self.map.get(key).into_iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.map.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn pairs(&self) -> Vec<(PredKey, Sym, usize)> {
        self.map
            .iter()
            .flat_map(|(k, s)| s.iter().map(move |(n, o)| (k.clone(), n.clone(), *o)))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WrapperInstance {
    pub instance: u64,
    pub name: Sym,
    pub wrapped: Term,
    pub predprop: Sym,
    pub arity: usize,
    pub site: SourceSpan,
}

impl WrapperInstance {
    pub fn reference(&self) -> Term {
        if self.arity == 0 {
            Term::app(self.name.clone(), vec![])
        } else {
            Term::PredRef {
                name: self.name.clone(),
                arity: self.arity,
                closed: vec![],
            }
        }
    }
}

/// What a predicate-valued argument denotes: the underlying predicate and
/// how many leading arguments it already has.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredValue {
    pub key: PredKey,
    pub closed: usize,
}

pub fn pred_value(value: &Term, described_arity: usize) -> Result<PredValue, String> {
    match value {
        Term::Var(_) => Err("instantiation error: predicate argument is unbound".into()),
        Term::Atom(n) => Ok(PredValue {
            key: PredKey {
                name: n.clone(),
                arity: described_arity,
            },
            closed: 0,
        }),
        Term::PredRef {
            name,
            arity,
            closed,
        } => {
            if arity - closed.len() != described_arity {
                Err(format!(
                    "arity mismatch: {} takes {} more argument(s), predprop describes {described_arity}",
                    print_term(value),
                    arity - closed.len()
                ))
            } else {
                Ok(PredValue {
                    key: PredKey {
                        name: name.clone(),
                        arity: *arity,
                    },
                    closed: closed.len(),
                })
            }
        }
        _ => Err(format!(
            "{} is not a predicate reference",
            print_term(value)
        )),
    }
}

/// Registers `pp` on the predicate `value` denotes.
pub fn attach_tight(
    reg: &mut TightRegistry,
    pp: &PredProp,
    value: &Term,
) -> Result<PredKey, String> {
    let v = pred_value(value, pp.described_arity)?;
    reg.attach(v.key.clone(), pp.name.clone(), v.closed);
    Ok(v.key)
}

/// Mints `'$wrap_<n>'` around `value` and defines its clause in the run.
pub fn wrap_loose(
    ctx: &mut HookCtx<'_>,
    next_instance: &mut u64,
    pp: &PredProp,
    value: &Term,
    site: SourceSpan,
) -> Result<WrapperInstance, String> {
    pred_value(value, pp.described_arity)?;
    let (instance, name) = loop {
        *next_instance += 1;
        let name: Sym = format!("$wrap_{next_instance}").into();
        if !ctx.is_defined(&PredKey {
            name: name.clone(),
            arity: pp.described_arity,
        }) {
            break (*next_instance, name);
        }
    };
    let mut counter = VarCounter::above([value]);
    let vars: Vec<Term> = (0..pp.described_arity)
        .map(|_| Term::Var(counter.fresh()))
        .collect();
    let clause = Clause::new(
        Term::app(name.clone(), vars.clone()),
        vec![Goal::HOCall {
            callee: value.clone(),
            extra: vars,
        }],
    );
    ctx.define(clause);
    Ok(WrapperInstance {
        instance,
        name,
        wrapped: value.clone(),
        predprop: pp.name.clone(),
        arity: pp.described_arity,
        site,
    })
}

/// Collects violations and inconclusive checks in discovery order.
#[derive(Clone, Debug, Default)]
pub struct ViolationSink {
    pub violations: Vec<Violation>,
    pub inconclusive: Vec<InconclusiveCheck>,
}

impl ViolationSink {
    pub fn push_inconclusive(&mut self, mut c: InconclusiveCheck) {
        c.seq = self.inconclusive.len() as u64 + 1;
        self.inconclusive.push(c);
    }
}

/// Records `v`; under fail-fast the derivation must stop.
pub fn report_violation(
    cfg: &CheckConfig,
    mut v: Violation,
    sink: &mut ViolationSink,
) -> HookAction {
    v.seq = sink.violations.len() as u64 + 1;
    sink.violations.push(v);
    match cfg.error_mode {
        ErrorMode::FailFast => HookAction::Halt,
        ErrorMode::GatherAll => HookAction::Continue,
    }
}

/// Decides predprop literals according to the semantics.
struct Handler<'a> {
    cfg: &'a CheckConfig,
    registry: &'a mut TightRegistry,
    /// Wraps requested by the assertion being evaluated: (arg index, predprop).
    pending: Vec<(usize, Sym)>,
}

impl PredPropHandler for Handler<'_> {
    fn predprop(
        &mut self,
        pp: &PredProp,
        value: &Term,
        arg_index: usize,
        position: Position,
    ) -> LiteralVerdict {
        let wraps = match self.cfg.semantics {
            Semantics::Off | Semantics::Fo => {
                return CallableOnly.predprop(pp, value, arg_index, position)
            }
            Semantics::Tight => pp.is_wrapper && self.cfg.respect_wrapper_predprops,
            Semantics::Loose => true,
        };
        let checked = if wraps {
            pred_value(value, pp.described_arity).map(|_| {
                if position == Position::Pre {
                    self.pending.push((arg_index, pp.name.clone()));
                }
            })
        } else {
            attach_tight(self.registry, pp, value).map(|_| ())
        };
        match checked {
            Ok(()) => LiteralVerdict::of(PropOutcome::Holds),
            Err(note) => LiteralVerdict {
                outcome: PropOutcome::Fails,
                note: Some(note),
            },
        }
    }
}

/// An assertion taking part in a check, and where its head's arguments
/// start in the goal.
#[derive(Clone)]
struct Member<'p> {
    assertion: &'p Assertion,
    offset: usize,
    site: CheckSite,
}

/// The assertions forming one calls condition at a box.
struct Group<'p> {
    key: PredKey,
    members: Vec<Member<'p>>,
    /// Under a wrapper, the wrapped predicate value (for printing culprits).
    wrapped: Option<Term>,
}

impl Group<'_> {
    fn shown(&self, goal: &Term) -> String {
        if let Some(w) = &self.wrapped {
            if let Ok(t) = saturate(w, goal.args()) {
                return print_term_canonical(&t);
            }
        }
        print_term_canonical(goal)
    }

    /// Attached assertions take part, so the registry is named as the site.
    fn calls_site(&self) -> CheckSite {
        self.members
            .iter()
            .map(|m| m.site.clone())
            .find(|s| *s != CheckSite::Direct)
            .unwrap_or(CheckSite::Direct)
    }

    fn assertions(&self) -> Vec<&Assertion> {
        self.members.iter().map(|m| m.assertion).collect()
    }
}

fn slice(args: &[Term], offset: usize) -> &[Term] {
    &args[offset.min(args.len())..]
}

/// Success obligations of one box: members whose precondition held, with
/// the printed entry goal of their group.
struct Frame<'p> {
    obligations: Vec<(String, PredKey, Option<Term>, Member<'p>)>,
}

/// The checking hooks for one run.
pub struct Checker<'p> {
    program: &'p Program,
    cfg: CheckConfig,
    occurs_check: bool,
    registry: TightRegistry,
    wrappers: Vec<WrapperInstance>,
    wrapper_index: HashMap<PredKey, usize>,
    next_instance: u64,
    frames: HashMap<BoxId, Frame<'p>>,
    sink: ViolationSink,
}

impl<'p> Checker<'p> {
    pub fn new(program: &'p Program, cfg: CheckConfig, occurs_check: bool) -> Self {
        Checker {
            program,
            cfg,
            occurs_check,
            registry: TightRegistry::default(),
            wrappers: Vec::new(),
            wrapper_index: HashMap::new(),
            next_instance: 0,
            frames: HashMap::new(),
            sink: ViolationSink::default(),
        }
    }

    pub fn registry(&self) -> &TightRegistry {
        &self.registry
    }

    pub fn wrappers(&self) -> &[WrapperInstance] {
        &self.wrappers
    }

    pub fn sink(&self) -> &ViolationSink {
        &self.sink
    }

    pub fn into_sink(self) -> ViolationSink {
        self.sink
    }

    fn anon_checked(&self, pp: &Sym) -> Vec<&'p Assertion> {
        self.program
            .predprop(pp)
            .map(|pp| pp.anon.iter().filter(|a| a.is_checked()).collect())
            .unwrap_or_default()
    }

    /// The calls conditions at a call to `key`: the wrapper's predprop if
    /// `key` is a wrapper, and the predicate's own assertions together with
    /// those attached to it. Attached assertions become assertions of the
    /// predicate, so they join its disjunction.
    fn groups(&self, key: &PredKey) -> Vec<Group<'p>> {
        let mut out = Vec::new();
        if let Some(&i) = self.wrapper_index.get(key) {
            let w = &self.wrappers[i];
            let site = CheckSite::Wrapper {
                instance: w.instance,
            };
            out.push(Group {
                key: pred_value(&w.wrapped, w.arity)
                    .map(|v| v.key)
                    .unwrap_or_else(|_| key.clone()),
                members: self
                    .anon_checked(&w.predprop)
                    .into_iter()
                    .map(|assertion| Member {
                        assertion,
                        offset: 0,
                        site: site.clone(),
                    })
                    .collect(),
                wrapped: Some(w.wrapped.clone()),
            });
        }
        let mut members: Vec<Member<'p>> = self
            .program
            .checked_assertions_for(key)
            .into_iter()
            .map(|assertion| Member {
                assertion,
                offset: 0,
                site: CheckSite::Direct,
            })
            .collect();
        for (pp, offset) in self.registry.attached(key) {
            members.extend(self.anon_checked(pp).into_iter().map(|assertion| Member {
                assertion,
                offset: *offset,
                site: CheckSite::TightRegistry,
            }));
        }
        out.push(Group {
            key: key.clone(),
            members,
            wrapped: None,
        });
        out.retain(|g| !g.members.is_empty());
        out
    }

    fn has_checks(&self, key: &PredKey) -> bool {
        self.wrapper_index.contains_key(key)
            || !self.program.checked_assertions_for(key).is_empty()
            || self.registry.attached(key).next().is_some()
    }

    fn eval_ctx(&self) -> EvalCtx<'p> {
        EvalCtx {
            program: self.program,
            budget: self.cfg.prop_budget,
            occurs_check: self.occurs_check,
        }
    }

    /// True if `value` is already a wrapper enforcing `pp`.
    fn wrapped_for(&self, value: &Term, pp: &Sym) -> bool {
        match value {
            Term::PredRef {
                name,
                arity,
                closed,
            } if closed.is_empty() => self
                .wrapper_index
                .get(&PredKey {
                    name: name.clone(),
                    arity: *arity,
                })
                .is_some_and(|&i| self.wrappers[i].predprop == *pp),
            _ => false,
        }
    }
}

impl CheckHooks for Checker<'_> {
    fn on_call(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        let Some(key) = call.goal.goal_key() else {
            return HookAction::Continue;
        };
        if !self.has_checks(&key) {
            return HookAction::Continue;
        }
        let goal = ctx.resolve(call.goal);
        let args = goal.args().to_vec();
        let cx = self.eval_ctx();
        let mut wraps: Vec<(usize, Sym, SourceSpan)> = Vec::new();
        let mut obligations = Vec::new();

        for group in self.groups(&key) {
            let mut held = Vec::new();
            let mut failures = Vec::new();
            let mut inconclusive = None;
            for m in &group.members {
                let a = m.assertion;
                let mut h = Handler {
                    cfg: &self.cfg,
                    registry: &mut self.registry,
                    pending: Vec::new(),
                };
                let v = eval_conj(
                    &cx,
                    a,
                    &a.pre,
                    slice(&args, m.offset),
                    Position::Pre,
                    &mut h,
                );
                match v.outcome {
                    PropOutcome::Holds => {
                        wraps.extend(
                            h.pending
                                .into_iter()
                                .map(|(i, pp)| (i + m.offset, pp, a.span.clone())),
                        );
                        held.push(m.clone());
                    }
                    PropOutcome::Fails => failures.push(v.failed.unwrap_or_default()),
                    PropOutcome::Inconclusive(r) => {
                        inconclusive.get_or_insert(r);
                    }
                }
            }
            let shown = group.shown(&goal);
            if held.is_empty() {
                let assertions = group.assertions();
                if let Some(r) = inconclusive {
                    self.sink.push_inconclusive(inconclusive_check(
                        &assertions,
                        CheckKind::Calls,
                        r,
                        &group.key,
                        group.calls_site(),
                        &shown,
                    ));
                } else {
                    let v = calls_violation(
                        &assertions,
                        &failures,
                        &group.key,
                        group.calls_site(),
                        &shown,
                    );
                    if report_violation(&self.cfg, v, &mut self.sink) == HookAction::Halt {
                        return HookAction::Halt;
                    }
                }
            }
            for m in held {
                if !m.assertion.post.is_empty() {
                    obligations.push((shown.clone(), group.key.clone(), group.wrapped.clone(), m));
                }
            }
        }

        if !obligations.is_empty() {
            self.frames.insert(call.box_id, Frame { obligations });
        }

        if wraps.is_empty() {
            return HookAction::Continue;
        }
        let mut new_args = args;
        let mut changed = false;
        let mut seen = BTreeSet::new();
        for (i, pp_name, site) in wraps {
            if !seen.insert((i, pp_name.clone())) || self.wrapped_for(&new_args[i], &pp_name) {
                continue;
            }
            let pp = self.program.predprop(&pp_name).expect("declared predprop");
            let w = wrap_loose(ctx, &mut self.next_instance, pp, &new_args[i], site)
                .expect("wrap requested only for valid values");
            new_args[i] = w.reference();
            changed = true;
            self.wrapper_index.insert(
                PredKey {
                    name: w.name.clone(),
                    arity: w.arity,
                },
                self.wrappers.len(),
            );
            self.wrappers.push(w);
        }
        if changed {
            HookAction::Rewrite(Term::app(key.name.clone(), new_args))
        } else {
            HookAction::Continue
        }
    }

    fn on_exit(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        let Some(frame) = self.frames.get(&call.box_id) else {
            return HookAction::Continue;
        };
        let goal = ctx.resolve(call.goal);
        let cx = self.eval_ctx();
        let mut found = Vec::new();
        for (entry, key, wrapped, m) in &frame.obligations {
            let a = m.assertion;
            let exit = match wrapped.as_ref().and_then(|w| saturate(w, goal.args()).ok()) {
                Some(t) => print_term_canonical(&t),
                None => print_term_canonical(&goal),
            };
            let mut h = Handler {
                cfg: &self.cfg,
                registry: &mut self.registry,
                pending: Vec::new(),
            };
            let v = eval_conj(
                &cx,
                a,
                &a.post,
                slice(goal.args(), m.offset),
                Position::Post,
                &mut h,
            );
            match v.outcome {
                PropOutcome::Holds => {}
                PropOutcome::Fails => found.push(Ok(success_violation(
                    a,
                    v.failed.as_deref(),
                    key,
                    m.site.clone(),
                    entry,
                    &exit,
                ))),
                PropOutcome::Inconclusive(r) => found.push(Err(inconclusive_check(
                    &[a],
                    CheckKind::Success,
                    r,
                    key,
                    m.site.clone(),
                    &exit,
                ))),
            }
        }
        for f in found {
            match f {
                Ok(v) => {
                    if report_violation(&self.cfg, v, &mut self.sink) == HookAction::Halt {
                        return HookAction::Halt;
                    }
                }
                Err(c) => self.sink.push_inconclusive(c),
            }
        }
        HookAction::Continue
    }

    fn on_fail(&mut self, _ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        self.frames.remove(&call.box_id);
    }
}

/// The hooks for `cfg`; `None` (nothing installed) when checking is off.
pub fn install_hooks<'p>(
    cfg: &CheckConfig,
    p: &'p Program,
    occurs_check: bool,
) -> Option<Checker<'p>> {
    match cfg.semantics {
        Semantics::Off => None,
        _ => Some(Checker::new(p, *cfg, occurs_check)),
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub engine: EngineOptions,
    pub check: CheckConfig,
    pub trace: bool,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub report: Report,
    pub trace: Option<Vec<DerivationEvent>>,
    pub registry: TightRegistry,
    pub wrappers: Vec<WrapperInstance>,
}

/// Runs `goal` under the configured checking semantics.
pub fn run(p: &Program, goal: &Term, goal_text: &str, opts: &RunOptions) -> RunResult {
    let start = Instant::now();
    let checker = install_hooks(&opts.check, p, opts.engine.occurs_check);
    let tracer = opts.trace.then(Tracer::default);
    let (solutions, (checker, tracer)) = solve(p, goal, opts.engine, (checker, tracer));
    let wall_clock_ms = start.elapsed().as_secs_f64() * 1000.0;
    let (sink, registry, wrappers) = match checker {
        Some(c) => (c.sink, c.registry, c.wrappers),
        None => Default::default(),
    };
    let report = finalize_report(RunArtifacts {
        program: p,
        goal: goal_text.to_string(),
        config: &opts.check,
        max_steps: opts.engine.limits.max_steps,
        max_depth: opts.engine.limits.max_depth,
        occurs_check: opts.engine.occurs_check,
        solutions,
        violations: sink.violations,
        inconclusive: sink.inconclusive,
        wall_clock_ms,
    });
    RunResult {
        report,
        trace: tracer.map(|t| t.events),
        registry,
        wrappers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_term};
    use crate::program::Origin;

    const SORT: &str = "\
:- predprop comparator/1 on 3 {
    pred _(X, Y, O) : (int(X), int(Y)) => ord(O).
}.
ord(lt). ord(eq). ord(gt).
cmp(X, Y, R) :- cmp_(X, Y, R).
cmp_(1, 2, lt). cmp_(2, 1, gt). cmp_(1, 1, eq). cmp_(2, 2, eq).
cmp_(3, 1, bad).
use(P, X, Y, R) :- call(P, X, Y, R).
:- check pred use(P, X, Y, R) : comparator(P).
";

    fn go(src: &str, goal: &str, sem: Semantics, mode: ErrorMode) -> RunResult {
        let p = parse_program(src, "t.hopl").unwrap();
        let opts = RunOptions {
            check: CheckConfig::new(sem, mode),
            ..Default::default()
        };
        run(&p, &parse_term(goal).unwrap(), goal, &opts)
    }

    #[test]
    fn fo_is_blind_tight_sees_bad_order() {
        let g = "use(cmp~3, 3, 1, R)";
        let fo = go(SORT, g, Semantics::Fo, ErrorMode::GatherAll);
        assert!(fo.report.violations.is_empty());
        let tight = go(SORT, g, Semantics::Tight, ErrorMode::GatherAll);
        assert_eq!(tight.report.violations.len(), 1);
        let v = &tight.report.violations[0];
        assert_eq!(v.kind, CheckKind::Success);
        assert_eq!(v.origin, Origin::Predprop("comparator".into()));
        assert_eq!(v.check_site, CheckSite::TightRegistry);
        assert_eq!(v.pred_key, "cmp/3");
        assert_eq!(tight.report.answer_texts(), fo.report.answer_texts());
        let loose = go(SORT, g, Semantics::Loose, ErrorMode::GatherAll);
        assert_eq!(loose.report.violations.len(), 1);
        assert_eq!(
            loose.report.violations[0].check_site,
            CheckSite::Wrapper { instance: 1 }
        );
        assert_eq!(loose.report.violations[0].culprit, "cmp(3, 1, bad)");
        assert_eq!(loose.report.answer_texts(), fo.report.answer_texts());
    }

    #[test]
    fn tight_checks_later_direct_calls_loose_does_not() {
        let g = "use(cmp~3, 1, 2, _), cmp(3, 1, R)";
        let tight = go(SORT, g, Semantics::Tight, ErrorMode::GatherAll);
        assert_eq!(tight.report.violations.len(), 1);
        assert_eq!(tight.report.violations[0].culprit, "cmp(3, 1, bad)");
        let loose = go(SORT, g, Semantics::Loose, ErrorMode::GatherAll);
        assert!(loose.report.violations.is_empty());
        assert_eq!(tight.registry.len(), 1);
        assert!(loose.registry.is_empty());
    }

    #[test]
    fn attachment_is_idempotent() {
        let mut reg = TightRegistry::default();
        assert!(reg.attach(PredKey::new("cmp", 3), "comparator".into(), 0));
        assert!(!reg.attach(PredKey::new("cmp", 3), "comparator".into(), 0));
        assert_eq!(reg.len(), 1);
        let tight = go(
            SORT,
            "use(cmp~3, 1, 2, _), use(cmp~3, 3, 1, _)",
            Semantics::Tight,
            ErrorMode::GatherAll,
        );
        assert_eq!(tight.registry.len(), 1);
        assert_eq!(tight.report.violations.len(), 1);
    }

    #[test]
    fn wrong_arity_value_is_calls_violation() {
        let src = format!("{SORT}two(_, _).\n");
        let r = go(
            &src,
            "use(two~2, 1, 2, R)",
            Semantics::Tight,
            ErrorMode::GatherAll,
        );
        let v = &r.report.violations[0];
        assert_eq!(v.kind, CheckKind::Calls);
        assert_eq!(v.check_site, CheckSite::Direct);
        assert!(v.message.contains("arity mismatch"), "{}", v.message);
    }

    #[test]
    fn unbound_value_is_calls_violation() {
        let r = go(
            SORT,
            "use(P, 1, 2, R)",
            Semantics::Tight,
            ErrorMode::GatherAll,
        );
        assert_eq!(r.report.violations[0].kind, CheckKind::Calls);
        assert!(r.report.violations[0].message.contains("instantiation"));
    }

    #[test]
    fn fail_fast_is_prefix_of_gather_all() {
        let src = "\
p(X) :- q(X).
q(_).
:- check pred q(X) : int(X).
";
        let g = "p(a), p(3), p(b)";
        let all = go(src, g, Semantics::Fo, ErrorMode::GatherAll);
        assert_eq!(all.report.violations.len(), 2);
        assert_eq!(all.report.violations[0].culprit, "q(a)");
        assert_eq!(all.report.violations[1].culprit, "q(b)");
        let ff = go(src, g, Semantics::Fo, ErrorMode::FailFast);
        assert_eq!(ff.report.violations, all.report.violations[..1]);
        assert_eq!(ff.report.outcome.status, "halted");
    }

    #[test]
    fn success_checked_on_every_exit() {
        let src = "\
gen(1). gen(x). gen(2).
:- check pred gen(X) => int(X).
";
        let r = go(src, "gen(X)", Semantics::Fo, ErrorMode::GatherAll);
        assert_eq!(r.report.violations.len(), 1);
        assert_eq!(r.report.violations[0].exit.as_deref(), Some("gen(x)"));
        assert_eq!(r.report.answers.len(), 3);
    }

    #[test]
    fn partial_application_attaches_at_underlying_key() {
        let src = "\
:- predprop unary_int/1 on 2 {
    pred _(X, Y) : int(X) => int(Y).
}.
add(1, X, s(X)).
ap(P, X, Y) :- call(P, X, Y).
:- check pred ap(P, X, Y) : unary_int(P).
";
        let r = go(
            src,
            "ap(add(1)~3, 5, Y)",
            Semantics::Tight,
            ErrorMode::GatherAll,
        );
        assert_eq!(
            r.registry.pairs(),
            vec![(PredKey::new("add", 3), Sym::from("unary_int"), 1)]
        );
        assert_eq!(r.report.violations.len(), 1);
        assert_eq!(r.report.violations[0].culprit, "add(1, 5, s(5))");
    }

    #[test]
    fn off_installs_nothing() {
        let p = parse_program(SORT, "t.hopl").unwrap();
        assert!(install_hooks(
            &CheckConfig::new(Semantics::Off, ErrorMode::GatherAll),
            &p,
            true
        )
        .is_none());
        let r = go(
            SORT,
            "use(cmp~3, 3, 1, R)",
            Semantics::Off,
            ErrorMode::FailFast,
        );
        assert!(r.report.violations.is_empty());
        assert_eq!(r.report.answer_texts(), vec!["R = bad"]);
    }

    #[test]
    fn wrapper_predprop_wraps_under_tight() {
        let src = SORT.replace("predprop comparator", "predprop wrapper comparator");
        let r = go(
            &src,
            "use(cmp~3, 3, 1, R)",
            Semantics::Tight,
            ErrorMode::GatherAll,
        );
        assert!(r.registry.is_empty());
        assert_eq!(
            r.report.violations[0].check_site,
            CheckSite::Wrapper { instance: 1 }
        );
        let mut opts = RunOptions::default();
        opts.check.respect_wrapper_predprops = false;
        let p = parse_program(&src, "t.hopl").unwrap();
        let r = run(&p, &parse_term("use(cmp~3, 3, 1, R)").unwrap(), "", &opts);
        assert_eq!(r.report.violations[0].check_site, CheckSite::TightRegistry);
    }

    #[test]
    fn attached_assertions_join_the_disjunction() {
        let src = "\
:- predprop comparator/1 on 3 {
    pred _(X, Y, O) : (int(X), int(Y)) => ord(O).
}.
ord(lt). ord(gt).
acmp(a, b, lt). acmp(b, a, gt).
:- check pred acmp(X, Y, O) : atm(X).
use(P, X, Y, R) :- call(P, X, Y, R).
:- check pred use(P, X, Y, R) : comparator(P).
";
        let g = "use(acmp~3, b, a, R)";
        assert!(go(src, g, Semantics::Tight, ErrorMode::GatherAll)
            .report
            .violations
            .is_empty());
        let loose = go(src, g, Semantics::Loose, ErrorMode::GatherAll);
        assert_eq!(loose.report.violations.len(), 1);
        assert_eq!(loose.report.violations[0].kind, CheckKind::Calls);
        assert_eq!(loose.report.violations[0].culprit, "acmp(b, a, R)");
    }

    #[test]
    fn recursive_calls_do_not_stack_wrappers() {
        let src = "\
:- predprop f/1 on 2 { pred _(X, Y) : int(X) => int(Y). }.
map([], _, []).
map([X | Xs], P, [Y | Ys]) :- call(P, X, Y), map(Xs, P, Ys).
:- check pred map(L, P, R) : f(P).
nx(1, 2). nx(2, x).
";
        let r = go(
            src,
            "map([1, 2], nx~2, R)",
            Semantics::Loose,
            ErrorMode::GatherAll,
        );
        assert_eq!(r.wrappers.len(), 1);
        assert_eq!(r.report.violations.len(), 1);
        assert_eq!(r.report.answer_texts(), vec!["R = [2, x]"]);
    }
}
