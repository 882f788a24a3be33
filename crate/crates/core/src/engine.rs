//! SLD resolution with higher-order calls.
//!
//! The engine runs a leftmost-goal, textual-clause-order derivation over a
//! persistent goal list. Every call opens a box in the 4-port model
//! (call/exit/fail/redo); checker hooks observe each port and may rewrite
//! a goal at its call port or halt the run.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::builtins::{self, Native};
use crate::print::{print_term, print_terms_canonical};
use crate::program::Program;
use crate::subst::{Bindings, CyclicTerm};
use crate::term::{rename_apart, saturate, Clause, Goal, PredKey, SaturateError, Term, VarCounter};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EngineLimits {
    pub max_steps: u64,
    pub max_depth: usize,
    pub max_solutions: Option<usize>,
}

impl Default for EngineLimits {
    fn default() -> Self {
        EngineLimits {
            max_steps: 1_000_000,
            max_depth: 10_000,
            max_solutions: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EngineOptions {
    pub limits: EngineLimits,
    pub occurs_check: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            limits: EngineLimits::default(),
            occurs_check: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    MaxSteps,
    MaxDepth,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("instantiation error in {0}")]
    Instantiation(String),
    #[error(transparent)]
    Saturate(#[from] SaturateError),
    #[error("type error: {0} is not callable")]
    NotCallable(String),
    #[error("unknown predicate {0}")]
    UnknownPredicate(PredKey),
    #[error(transparent)]
    Cyclic(#[from] CyclicTerm),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Search space exhausted.
    Exhausted,
    LimitHit(LimitKind),
    /// `max_solutions` answers were produced.
    SolutionCap,
    /// A hook stopped the run.
    Halted,
    Error(EngineError),
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Exhausted => "exhausted",
            Outcome::LimitHit(_) => "limit_hit",
            Outcome::SolutionCap => "solution_cap",
            Outcome::Halted => "halted",
            Outcome::Error(_) => "error",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::LimitHit(LimitKind::MaxSteps) => f.write_str("limit hit (max_steps)"),
            Outcome::LimitHit(LimitKind::MaxDepth) => f.write_str("limit hit (max_depth)"),
            Outcome::Error(e) => write!(f, "error: {e}"),
            other => f.write_str(other.name()),
        }
    }
}

/// Bindings of the goal's named variables for one solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Answer {
    pub bindings: Vec<(String, Term)>,
}

impl Answer {
    /// `Name = value` lines, with unnamed variables numbered canonically so
    /// the text does not depend on internal variable ids.
    pub fn render(&self) -> Vec<String> {
        let printed = print_terms_canonical(self.bindings.iter().map(|(_, t)| t));
        self.bindings
            .iter()
            .zip(printed)
            .map(|((n, _), v)| format!("{n} = {v}"))
            .collect()
    }

    /// Single-line rendering; `true` when the goal has no named variables.
    pub fn render_line(&self) -> String {
        if self.bindings.is_empty() {
            "true".into()
        } else {
            self.render().join(", ")
        }
    }
}

pub type BoxId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    Call,
    Exit,
    Fail,
    Redo,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationEvent {
    pub port: Port,
    pub box_id: BoxId,
    pub depth: usize,
    pub goal: Term,
}

impl fmt::Display for DerivationEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let port = match self.port {
            Port::Call => "call",
            Port::Exit => "exit",
            Port::Fail => "fail",
            Port::Redo => "redo",
        };
        write!(f, "{port} ({}) {}", self.depth, print_term(&self.goal))
    }
}

/// What a hook wants the engine to do after a port.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HookAction {
    Continue,
    /// Resolve this goal instead (only honored at the call port).
    Rewrite(Term),
    Halt,
}

#[derive(Clone, Copy, Debug)]
pub struct CallInfo<'a> {
    pub box_id: BoxId,
    pub depth: usize,
    /// The goal as stored in the box; resolve through the context.
    pub goal: &'a Term,
}

/// Engine state visible to hooks.
pub struct HookCtx<'e> {
    program: &'e Program,
    bindings: &'e Bindings,
    counter: &'e mut VarCounter,
    dynamic: &'e mut HashMap<PredKey, Vec<Clause>>,
    occurs_check: bool,
}

impl HookCtx<'_> {
    pub fn program(&self) -> &Program {
        self.program
    }

    pub fn occurs_check(&self) -> bool {
        self.occurs_check
    }

    /// Current value of `t`. A cyclic binding is cut at the repeated variable.
    pub fn resolve(&self, t: &Term) -> Term {
        self.bindings
            .resolve(t)
            .unwrap_or_else(|_| self.bindings.to_substitution_lossy().apply(t))
    }

    pub fn fresh_var(&mut self) -> Term {
        Term::Var(self.counter.fresh())
    }

    /// Adds a clause for a run-local predicate.
    pub fn define(&mut self, clause: Clause) {
        self.dynamic.entry(clause.key()).or_default().push(clause);
    }

    pub fn is_defined(&self, key: &PredKey) -> bool {
        self.program.defines(key) || self.dynamic.contains_key(key)
    }
}

impl Bindings {
    fn to_substitution_lossy(&self) -> crate::subst::Substitution {
        crate::subst::Substitution::from_pairs(self.raw_pairs())
    }
}

/// Observer of derivation ports. All methods default to no-ops.
pub trait CheckHooks {
    fn on_call(&mut self, _ctx: &mut HookCtx<'_>, _call: CallInfo<'_>) -> HookAction {
        HookAction::Continue
    }
    fn on_exit(&mut self, _ctx: &mut HookCtx<'_>, _call: CallInfo<'_>) -> HookAction {
        HookAction::Continue
    }
    fn on_fail(&mut self, _ctx: &mut HookCtx<'_>, _call: CallInfo<'_>) {}
    fn on_redo(&mut self, _ctx: &mut HookCtx<'_>, _call: CallInfo<'_>) {}
}

#[derive(Clone, Copy, Debug, Default)]
pub struct NoHooks;

impl CheckHooks for NoHooks {}

impl<H: CheckHooks + ?Sized> CheckHooks for &mut H {
    fn on_call(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        (**self).on_call(ctx, call)
    }
    fn on_exit(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        (**self).on_exit(ctx, call)
    }
    fn on_fail(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        (**self).on_fail(ctx, call)
    }
    fn on_redo(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        (**self).on_redo(ctx, call)
    }
}

/// Runs `A` then `B` at each port. A rewrite from `A` is what `B` sees;
/// a halt from either wins.
impl<A: CheckHooks, B: CheckHooks> CheckHooks for (A, B) {
    fn on_call(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        match self.0.on_call(ctx, call) {
            HookAction::Halt => HookAction::Halt,
            HookAction::Continue => self.1.on_call(ctx, call),
            HookAction::Rewrite(t) => {
                let inner = CallInfo { goal: &t, ..call };
                match self.1.on_call(ctx, inner) {
                    HookAction::Continue => HookAction::Rewrite(t),
                    other => other,
                }
            }
        }
    }
    fn on_exit(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        let a = self.0.on_exit(ctx, call);
        let b = self.1.on_exit(ctx, call);
        if a == HookAction::Halt || b == HookAction::Halt {
            HookAction::Halt
        } else {
            HookAction::Continue
        }
    }
    fn on_fail(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        self.0.on_fail(ctx, call);
        self.1.on_fail(ctx, call);
    }
    fn on_redo(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        self.0.on_redo(ctx, call);
        self.1.on_redo(ctx, call);
    }
}

/// Absent hooks are inert.
impl<H: CheckHooks> CheckHooks for Option<H> {
    fn on_call(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        match self {
            Some(h) => h.on_call(ctx, call),
            None => HookAction::Continue,
        }
    }
    fn on_exit(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        match self {
            Some(h) => h.on_exit(ctx, call),
            None => HookAction::Continue,
        }
    }
    fn on_fail(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        if let Some(h) = self {
            h.on_fail(ctx, call)
        }
    }
    fn on_redo(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        if let Some(h) = self {
            h.on_redo(ctx, call)
        }
    }
}

/// Records every port as a [`DerivationEvent`].
#[derive(Clone, Debug, Default)]
pub struct Tracer {
    pub events: Vec<DerivationEvent>,
}

impl Tracer {
    fn record(&mut self, ctx: &HookCtx<'_>, port: Port, call: CallInfo<'_>) {
        self.events.push(DerivationEvent {
            port,
            box_id: call.box_id,
            depth: call.depth,
            goal: ctx.resolve(call.goal),
        });
    }
}

impl CheckHooks for Tracer {
    fn on_call(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        self.record(ctx, Port::Call, call);
        HookAction::Continue
    }
    fn on_exit(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) -> HookAction {
        self.record(ctx, Port::Exit, call);
        HookAction::Continue
    }
    fn on_fail(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        self.record(ctx, Port::Fail, call);
    }
    fn on_redo(&mut self, ctx: &mut HookCtx<'_>, call: CallInfo<'_>) {
        self.record(ctx, Port::Redo, call);
    }
}

enum Cont {
    Goal {
        goal: Goal,
        depth: usize,
        parent: Option<BoxId>,
    },
    /// Index of the box in `boxes`; the box outlives its continuation.
    Exit(usize),
}

struct Node {
    item: Cont,
    next: GoalList,
}

type GoalList = Option<Rc<Node>>;

fn push(list: GoalList, item: Cont) -> GoalList {
    Some(Rc::new(Node { item, next: list }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BoxState {
    Active,
    Exited,
    Failed,
}

struct BoxRec {
    id: BoxId,
    /// Index of the parent box; parents are older, so it outlives the child.
    parent: Option<usize>,
    depth: usize,
    goal: Term,
    state: BoxState,
}

struct ChoicePoint {
    box_id: BoxId,
    goal: Term,
    key: PredKey,
    next_clause: usize,
    depth: usize,
    cont: GoalList,
    trail_mark: usize,
    box_len: usize,
}

enum Flow {
    Continue,
    Fail,
    Stop(Outcome),
}

/// One derivation of one goal. Iterating yields answers; [`Engine::outcome`]
/// reports how the run ended.
pub struct Engine<'p, H: CheckHooks> {
    program: &'p Program,
    hooks: H,
    options: EngineOptions,
    bindings: Bindings,
    counter: VarCounter,
    goals: GoalList,
    choicepoints: Vec<ChoicePoint>,
    boxes: Vec<BoxRec>,
    next_box: BoxId,
    dynamic: HashMap<PredKey, Vec<Clause>>,
    query_vars: Vec<(String, Term)>,
    steps: u64,
    solutions: usize,
    resume: bool,
    outcome: Option<Outcome>,
}

impl<'p, H: CheckHooks> Engine<'p, H> {
    pub fn new(program: &'p Program, goal: &Term, options: EngineOptions, hooks: H) -> Self {
        let mut query_vars = Vec::new();
        for v in goal.vars() {
            if let Some(name) = &v.name {
                if !name.starts_with('_') {
                    query_vars.push((name.to_string(), Term::Var(v.clone())));
                }
            }
        }
        let mut goals: GoalList = None;
        for t in goal.clone().conjuncts().into_iter().rev() {
            let g = match t {
                Term::Var(_) => Goal::HOCall {
                    callee: t,
                    extra: Vec::new(),
                },
                other => Goal::from_term(other),
            };
            goals = push(
                goals,
                Cont::Goal {
                    goal: g,
                    depth: 0,
                    parent: None,
                },
            );
        }
        Engine {
            program,
            hooks,
            options,
            bindings: Bindings::new(),
            counter: VarCounter::above([goal]),
            goals,
            choicepoints: Vec::new(),
            boxes: Vec::new(),
            next_box: 0,
            dynamic: HashMap::new(),
            query_vars,
            steps: 0,
            solutions: 0,
            resume: false,
            outcome: None,
        }
    }

    /// How the run ended; `None` while answers may still follow.
    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn hooks(&self) -> &H {
        &self.hooks
    }

    pub fn into_hooks(self) -> H {
        self.hooks
    }

    fn box_index(&self, id: BoxId) -> Option<usize> {
        self.boxes.binary_search_by_key(&id, |b| b.id).ok()
    }

    fn emit(&mut self, port: Port, idx: usize) -> HookAction {
        let b = &self.boxes[idx];
        let info = CallInfo {
            box_id: b.id,
            depth: b.depth,
            goal: &b.goal,
        };
        let mut ctx = HookCtx {
            program: self.program,
            bindings: &self.bindings,
            counter: &mut self.counter,
            dynamic: &mut self.dynamic,
            occurs_check: self.options.occurs_check,
        };
        let h = &mut self.hooks;
        match port {
            Port::Call => h.on_call(&mut ctx, info),
            Port::Exit => h.on_exit(&mut ctx, info),
            Port::Fail => {
                h.on_fail(&mut ctx, info);
                HookAction::Continue
            }
            Port::Redo => {
                h.on_redo(&mut ctx, info);
                HookAction::Continue
            }
        }
    }

    fn answer(&self) -> Result<Answer, EngineError> {
        let bindings = self
            .query_vars
            .iter()
            .map(|(n, v)| Ok((n.clone(), self.bindings.resolve(v)?)))
            .collect::<Result<_, CyclicTerm>>()?;
        Ok(Answer { bindings })
    }

    fn finish(&mut self, outcome: Outcome) -> Option<Answer> {
        self.outcome = Some(outcome);
        None
    }

    fn next_answer(&mut self) -> Option<Answer> {
        if self.outcome.is_some() {
            return None;
        }
        if self.resume {
            self.resume = false;
            match self.backtrack() {
                Ok(true) => {}
                Ok(false) => return self.finish(Outcome::Exhausted),
                Err(o) => return self.finish(o),
            }
        }
        loop {
            let node = match self.goals.take() {
                None => {
                    let answer = match self.answer() {
                        Ok(a) => a,
                        Err(e) => return self.finish(Outcome::Error(e)),
                    };
                    self.solutions += 1;
                    if Some(self.solutions) == self.options.limits.max_solutions {
                        self.outcome = Some(Outcome::SolutionCap);
                    } else {
                        self.resume = true;
                    }
                    return Some(answer);
                }
                Some(node) => node,
            };
            self.goals = node.next.clone();
            let flow = match &node.item {
                Cont::Exit(idx) => self.exit(*idx),
                Cont::Goal {
                    goal,
                    depth,
                    parent,
                } => self.call(goal, *depth, *parent),
            };
            match flow {
                Flow::Continue => {}
                Flow::Stop(o) => return self.finish(o),
                Flow::Fail => match self.backtrack() {
                    Ok(true) => {}
                    Ok(false) => return self.finish(Outcome::Exhausted),
                    Err(o) => return self.finish(o),
                },
            }
        }
    }

    fn exit(&mut self, idx: usize) -> Flow {
        self.boxes[idx].state = BoxState::Exited;
        match self.emit(Port::Exit, idx) {
            HookAction::Halt => Flow::Stop(Outcome::Halted),
            _ => Flow::Continue,
        }
    }

    fn fail_box(&mut self, idx: usize) {
        self.boxes[idx].state = BoxState::Failed;
        self.emit(Port::Fail, idx);
    }

    /// Turns a goal into the callable term it denotes.
    fn callable_term(&self, goal: &Goal) -> Result<Term, EngineError> {
        let mut goal = goal.clone();
        loop {
            let t = match goal {
                Goal::Literal(t) => t,
                Goal::HOCall { callee, extra } => {
                    let c = self.bindings.walk(&callee).clone();
                    if c.is_var() {
                        let shown = self
                            .bindings
                            .resolve(&Goal::HOCall { callee, extra }.to_term())?;
                        return Err(EngineError::Instantiation(print_term(&shown)));
                    }
                    saturate(&c, &extra)?
                }
            };
            let t = self.bindings.walk(&t).clone();
            match t {
                Term::Struct(ref f, _) if &**f == "call" => goal = Goal::from_term(t),
                Term::Atom(_) | Term::Struct(..) => return Ok(t),
                Term::Var(_) => return Err(EngineError::Instantiation("call/1".into())),
                Term::PredRef {
                    ref name,
                    arity,
                    ref closed,
                } => {
                    return Err(EngineError::Saturate(SaturateError::Arity {
                        name: name.clone(),
                        arity,
                        supplied: closed.len(),
                    }))
                }
                Term::Int(i) => return Err(EngineError::NotCallable(i.to_string())),
            }
        }
    }

    fn call(&mut self, goal: &Goal, depth: usize, parent: Option<BoxId>) -> Flow {
        if self.steps >= self.options.limits.max_steps {
            return Flow::Stop(Outcome::LimitHit(LimitKind::MaxSteps));
        }
        self.steps += 1;
        if depth > self.options.limits.max_depth {
            return Flow::Stop(Outcome::LimitHit(LimitKind::MaxDepth));
        }
        let term = match self.callable_term(goal) {
            Ok(t) => t,
            Err(e) => return Flow::Stop(Outcome::Error(e)),
        };

        let id = self.next_box;
        self.next_box += 1;
        self.boxes.push(BoxRec {
            id,
            parent: parent.and_then(|p| self.box_index(p)),
            depth,
            goal: term,
            state: BoxState::Active,
        });
        let idx = self.boxes.len() - 1;
        match self.emit(Port::Call, idx) {
            HookAction::Halt => return Flow::Stop(Outcome::Halted),
            HookAction::Rewrite(t) => self.boxes[idx].goal = t,
            HookAction::Continue => {}
        }
        let term = self.boxes[idx].goal.clone();
        let key = term.goal_key().expect("callable goal");

        if let Some(native) = builtins::native(&key) {
            return match self.native(native, term.args()) {
                Ok(true) => {
                    self.goals = push(self.goals.take(), Cont::Exit(idx));
                    Flow::Continue
                }
                Ok(false) => {
                    self.fail_box(idx);
                    Flow::Fail
                }
                Err(e) => Flow::Stop(Outcome::Error(e)),
            };
        }
        if !self.program.defines(&key) && !self.dynamic.contains_key(&key) {
            return Flow::Stop(Outcome::Error(EngineError::UnknownPredicate(key)));
        }
        let cont = self.goals.take();
        if self.try_clauses(id, &term, &key, 0, depth, cont) {
            Flow::Continue
        } else {
            self.fail_box(idx);
            Flow::Fail
        }
    }

    fn native(&mut self, n: Native, args: &[Term]) -> Result<bool, EngineError> {
        let arg = |i: usize| self.bindings.walk(&args[i]);
        Ok(match n {
            Native::True => true,
            Native::Unify => {
                let mark = self.bindings.mark();
                let ok = self
                    .bindings
                    .unify(&args[0], &args[1], self.options.occurs_check);
                if !ok {
                    self.bindings.undo_to(mark);
                }
                ok
            }
            Native::Int => matches!(arg(0), Term::Int(_)),
            Native::Atm => matches!(arg(0), Term::Atom(_)),
            Native::Var => arg(0).is_var(),
            Native::Nonvar => !arg(0).is_var(),
            Native::Callable => matches!(
                arg(0),
                Term::Atom(_) | Term::Struct(..) | Term::PredRef { .. }
            ),
            Native::Ground => self.bindings.resolve(&args[0])?.is_ground(),
        })
    }

    fn clause_count(&self, key: &PredKey) -> usize {
        match self.dynamic.get(key) {
            Some(cs) => cs.len(),
            None => self.program.clauses_for(key).len(),
        }
    }

    fn clause_at(&self, key: &PredKey, i: usize) -> &Clause {
        clause_at(self.program, &self.dynamic, key, i)
    }

    /// Cheap first-level clash test used to avoid leaving useless choicepoints.
    fn may_match(&self, goal: &Term, head: &Term) -> bool {
        goal.args().iter().zip(head.args()).all(|(g, h)| {
            let g = self.bindings.walk(g);
            match (g, h) {
                (Term::Var(_), _) | (_, Term::Var(_)) => true,
                (Term::Atom(a), Term::Atom(b)) => a == b,
                (Term::Int(a), Term::Int(b)) => a == b,
                (Term::Struct(f, xs), Term::Struct(g2, ys)) => f == g2 && xs.len() == ys.len(),
                (
                    Term::PredRef {
                        name: a, arity: k, ..
                    },
                    Term::PredRef {
                        name: b, arity: j, ..
                    },
                ) => a == b && k == j,
                _ => false,
            }
        })
    }

    fn next_candidate(&self, goal: &Term, key: &PredKey, from: usize) -> Option<usize> {
        (from..self.clause_count(key)).find(|j| self.may_match(goal, &self.clause_at(key, *j).head))
    }

    /// Reopens the exited boxes among `id` and its ancestors, emitting redo
    /// outermost first. An active box has no exited ancestor, so the walk
    /// stops at the first active one.
    fn redo_chain(&mut self, id: BoxId) {
        let mut chain = Vec::new();
        let mut cur = self.box_index(id);
        while let Some(idx) = cur {
            if self.boxes[idx].state != BoxState::Exited {
                break;
            }
            chain.push(idx);
            cur = self.boxes[idx].parent;
        }
        for idx in chain.into_iter().rev() {
            self.boxes[idx].state = BoxState::Active;
            self.emit(Port::Redo, idx);
        }
    }

    fn try_clauses(
        &mut self,
        box_id: BoxId,
        goal: &Term,
        key: &PredKey,
        start: usize,
        depth: usize,
        cont: GoalList,
    ) -> bool {
        let mut i = match self.next_candidate(goal, key, start) {
            Some(i) => i,
            None => return false,
        };
        loop {
            let later = self.next_candidate(goal, key, i + 1);
            let mark = self.bindings.mark();
            let clause = rename_apart(
                clause_at(self.program, &self.dynamic, key, i),
                &mut self.counter,
            );
            if self
                .bindings
                .unify(goal, &clause.head, self.options.occurs_check)
            {
                if let Some(j) = later {
                    self.choicepoints.push(ChoicePoint {
                        box_id,
                        goal: goal.clone(),
                        key: key.clone(),
                        next_clause: j,
                        depth,
                        cont: cont.clone(),
                        trail_mark: mark,
                        box_len: self.boxes.len(),
                    });
                }
                let idx = self.box_index(box_id).expect("live box");
                let mut goals = push(cont, Cont::Exit(idx));
                for g in clause.body.into_iter().rev() {
                    goals = push(
                        goals,
                        Cont::Goal {
                            goal: g,
                            depth: depth + 1,
                            parent: Some(box_id),
                        },
                    );
                }
                self.goals = goals;
                return true;
            }
            self.bindings.undo_to(mark);
            match later {
                Some(j) => i = j,
                None => return false,
            }
        }
    }

    /// Resumes the newest choicepoint. `Ok(false)` when none is left.
    fn backtrack(&mut self) -> Result<bool, Outcome> {
        loop {
            let cp = match self.choicepoints.pop() {
                Some(cp) => cp,
                None => {
                    self.discard_boxes_from(0);
                    return Ok(false);
                }
            };
            self.bindings.undo_to(cp.trail_mark);
            self.discard_boxes_from(cp.box_len);
            self.redo_chain(cp.box_id);
            if self.try_clauses(
                cp.box_id,
                &cp.goal,
                &cp.key,
                cp.next_clause,
                cp.depth,
                cp.cont,
            ) {
                return Ok(true);
            }
            let idx = self.box_index(cp.box_id).expect("choicepoint box is live");
            self.fail_box(idx);
        }
    }

    /// Drops boxes at positions `from..`, failing those still active
    /// (innermost first).
    fn discard_boxes_from(&mut self, from: usize) {
        for idx in (from..self.boxes.len()).rev() {
            if self.boxes[idx].state == BoxState::Active {
                self.fail_box(idx);
            }
        }
        self.boxes.truncate(from);
    }
}

fn clause_at<'a>(
    program: &'a Program,
    dynamic: &'a HashMap<PredKey, Vec<Clause>>,
    key: &PredKey,
    i: usize,
) -> &'a Clause {
    match dynamic.get(key) {
        Some(cs) => &cs[i],
        None => program.clauses_for(key)[i],
    }
}

impl<H: CheckHooks> Iterator for Engine<'_, H> {
    type Item = Answer;

    fn next(&mut self) -> Option<Answer> {
        self.next_answer()
    }
}

/// All answers of a run together with how it ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solutions {
    pub answers: Vec<Answer>,
    pub outcome: Outcome,
    pub steps: u64,
}

impl Solutions {
    pub fn rendered(&self) -> Vec<String> {
        self.answers.iter().map(Answer::render_line).collect()
    }
}

/// Runs `goal` to completion (or a limit), returning the answers in order and
/// the hooks back.
pub fn solve<H: CheckHooks>(
    program: &Program,
    goal: &Term,
    options: EngineOptions,
    hooks: H,
) -> (Solutions, H) {
    let mut engine = Engine::new(program, goal, options, hooks);
    let answers: Vec<Answer> = engine.by_ref().collect();
    let outcome = engine.outcome().cloned().unwrap_or(Outcome::Exhausted);
    let steps = engine.steps();
    (
        Solutions {
            answers,
            outcome,
            steps,
        },
        engine.into_hooks(),
    )
}

/// Runs `goal` recording the derivation event stream.
pub fn trace(
    program: &Program,
    goal: &Term,
    options: EngineOptions,
) -> (Solutions, Vec<DerivationEvent>) {
    let (sols, tracer) = solve(program, goal, options, Tracer::default());
    (sols, tracer.events)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, parse_term};

    fn run(src: &str, goal: &str) -> Solutions {
        let p = parse_program(src, "t.hopl").unwrap();
        solve(
            &p,
            &parse_term(goal).unwrap(),
            EngineOptions::default(),
            NoHooks,
        )
        .0
    }

    fn events(src: &str, goal: &str) -> Vec<String> {
        let p = parse_program(src, "t.hopl").unwrap();
        trace(&p, &parse_term(goal).unwrap(), EngineOptions::default())
            .1
            .iter()
            .map(|e| e.to_string())
            .collect()
    }

    #[test]
    fn facts_in_clause_order() {
        let s = run("p(a). p(b).", "p(X)");
        assert_eq!(s.rendered(), vec!["X = a", "X = b"]);
        assert_eq!(s.outcome, Outcome::Exhausted);
    }

    #[test]
    fn higher_order_apply() {
        let src = "apply1(P, X, Y) :- call(P, X, Y).\ndouble(X, Y) :- Y = s(s(X)).\n";
        let s = run(src, "apply1(double~2, 0, Y)");
        assert_eq!(s.rendered(), vec!["Y = s(s(0))"]);
    }

    #[test]
    fn partial_application_call() {
        let src = "add3(A, B, C, r(A, B, C)).\nuse(P, R) :- call(P, c, R).\n";
        let s = run(src, "use(add3(a, b)~4, R)");
        assert_eq!(s.rendered(), vec!["R = r(a, b, c)"]);
    }

    #[test]
    fn unbound_callee_is_instantiation_error() {
        let s = run("q.", "call(P, a)");
        assert!(matches!(
            s.outcome,
            Outcome::Error(EngineError::Instantiation(_))
        ));
    }

    #[test]
    fn over_application_is_arity_error() {
        let s = run("add(_, _, _).", "call(add(1)~3, 2, 3, 4)");
        assert!(matches!(
            s.outcome,
            Outcome::Error(EngineError::Saturate(SaturateError::Arity {
                supplied: 4,
                ..
            }))
        ));
    }

    #[test]
    fn unknown_predicate() {
        let s = run("p(a).", "q(X)");
        assert_eq!(
            s.outcome,
            Outcome::Error(EngineError::UnknownPredicate(PredKey::new("q", 1)))
        );
    }

    #[test]
    fn step_limit_is_distinct_from_exhaustion() {
        let s = run("loop :- loop.", "loop");
        assert_eq!(s.outcome, Outcome::LimitHit(LimitKind::MaxDepth));
        let p = parse_program("loop :- loop.", "t.hopl").unwrap();
        let mut opts = EngineOptions::default();
        opts.limits.max_steps = 50;
        let s = solve(&p, &parse_term("loop").unwrap(), opts, NoHooks).0;
        assert_eq!(s.outcome, Outcome::LimitHit(LimitKind::MaxSteps));
        assert_eq!(s.steps, 50);
    }

    #[test]
    fn trace_single_fact() {
        assert_eq!(
            events("p(a).", "p(a)"),
            vec!["call (0) p(a)", "exit (0) p(a)"]
        );
    }

    #[test]
    fn trace_failure() {
        assert_eq!(
            events("p(a).", "p(c)"),
            vec!["call (0) p(c)", "fail (0) p(c)"]
        );
    }

    #[test]
    fn trace_redo_on_backtracking() {
        // Hand-derived 4-port trace.
        assert_eq!(
            events("p(a). p(b).", "p(X), X = b"),
            vec![
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
    fn trace_nested_failure_fails_ancestors() {
        let src = "q(X) :- p(X), r(X).\np(a). p(b).\nr(b).\n";
        assert_eq!(
            events(src, "q(c)"),
            vec![
                "call (0) q(c)",
                "call (1) p(c)",
                "fail (1) p(c)",
                "fail (0) q(c)",
            ]
        );
        assert_eq!(
            events(src, "q(X)"),
            vec![
                "call (0) q(X)",
                "call (1) p(X)",
                "exit (1) p(a)",
                "call (1) r(a)",
                "fail (1) r(a)",
                "redo (1) p(X)",
                "exit (1) p(b)",
                "call (1) r(b)",
                "exit (1) r(b)",
                "exit (0) q(b)",
            ]
        );
    }

    #[test]
    fn builtins_and_prelude() {
        let s = run("dummy.", "member(X, [a, b, c])");
        assert_eq!(s.rendered(), vec!["X = a", "X = b", "X = c"]);
        assert_eq!(
            run("dummy.", "T = [], list([a | T])").rendered(),
            vec!["T = []"]
        );
        assert!(run("dummy.", "list(f(a))").answers.is_empty());
        assert_eq!(
            run(
                "dummy.",
                "int(3), atm(a), var(V), nonvar(f(V)), ground(g(1)), callable(c~2)"
            )
            .answers
            .len(),
            1
        );
        assert!(run("dummy.", "ground(g(V))").answers.is_empty());
    }

    #[test]
    fn occurs_check_on_by_default() {
        assert!(run("dummy.", "X = f(X)").answers.is_empty());
        let p = parse_program("dummy.", "t.hopl").unwrap();
        let opts = EngineOptions {
            occurs_check: false,
            ..Default::default()
        };
        let s = solve(&p, &parse_term("X = f(X)").unwrap(), opts, NoHooks).0;
        assert!(matches!(s.outcome, Outcome::Error(EngineError::Cyclic(_))));
    }

    #[test]
    fn max_solutions_caps_answers() {
        let p = parse_program("p(a). p(b). p(c).", "t.hopl").unwrap();
        let mut opts = EngineOptions::default();
        opts.limits.max_solutions = Some(2);
        let s = solve(&p, &parse_term("p(X)").unwrap(), opts, NoHooks).0;
        assert_eq!(s.answers.len(), 2);
        assert_eq!(s.outcome, Outcome::SolutionCap);
    }
}
