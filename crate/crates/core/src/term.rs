//! Terms extended with predicate references, plus clauses and goals.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::span::SourceSpan;

pub type Sym = Arc<str>;
pub type VarId = u64;

pub const NIL: &str = "[]";
pub const CONS: &str = ".";

/// A logic variable. Identity is the id; the name is only kept for printing.
#[derive(Clone, Debug)]
pub struct Var {
    pub id: VarId,
    pub name: Option<Sym>,
}

impl Var {
    pub fn new(id: VarId) -> Self {
        Var { id, name: None }
    }

    pub fn named(id: VarId, name: &str) -> Self {
        Var {
            id,
            name: Some(name.into()),
        }
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> Ordering {
        self.id.cmp(&other.id)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Atom(Sym),
    Int(i64),
    /// Compound term; always at least one argument.
    Struct(Sym, Vec<Term>),
    /// Reference to predicate `name/arity` with some leading arguments fixed.
    /// `closed.len() < arity` always holds.
    PredRef {
        name: Sym,
        arity: usize,
        closed: Vec<Term>,
    },
}

/// `name/arity` of a predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredKey {
    pub name: Sym,
    pub arity: usize,
}

impl PredKey {
    pub fn new(name: &str, arity: usize) -> Self {
        PredKey {
            name: name.into(),
            arity,
        }
    }
}

impl fmt::Display for PredKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", crate::print::atom_text(&self.name), self.arity)
    }
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Atom(name.into())
    }

    pub fn int(v: i64) -> Term {
        Term::Int(v)
    }

    pub fn var(id: VarId) -> Term {
        Term::Var(Var::new(id))
    }

    pub fn named_var(id: VarId, name: &str) -> Term {
        Term::Var(Var::named(id, name))
    }

    /// Builds `name(args...)`, collapsing to an atom when `args` is empty.
    pub fn compound(name: &str, args: Vec<Term>) -> Term {
        Term::app(name.into(), args)
    }

    pub fn app(name: Sym, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Atom(name)
        } else {
            Term::Struct(name, args)
        }
    }

    pub fn pred_ref(name: &str, arity: usize, closed: Vec<Term>) -> Term {
        debug_assert!(closed.len() < arity);
        Term::PredRef {
            name: name.into(),
            arity,
            closed,
        }
    }

    pub fn nil() -> Term {
        Term::atom(NIL)
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Struct(CONS.into(), vec![head, tail])
    }

    /// Builds a list from `items` ending in `tail`.
    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Term {
        items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::cons(item, acc))
    }

    pub fn list(items: Vec<Term>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Key of the predicate this term would call, if it is a callable goal.
    pub fn goal_key(&self) -> Option<PredKey> {
        match self {
            Term::Atom(name) => Some(PredKey {
                name: name.clone(),
                arity: 0,
            }),
            Term::Struct(name, args) => Some(PredKey {
                name: name.clone(),
                arity: args.len(),
            }),
            _ => None,
        }
    }

    /// Arguments of a compound term; empty for everything else.
    pub fn args(&self) -> &[Term] {
        match self {
            Term::Struct(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Atom(_) | Term::Int(_) => true,
            Term::Struct(_, args) => args.iter().all(Term::is_ground),
            Term::PredRef { closed, .. } => closed.iter().all(Term::is_ground),
        }
    }

    /// Visits every variable occurrence, left to right.
    pub fn for_each_var<F: FnMut(&Var)>(&self, f: &mut F) {
        match self {
            Term::Var(v) => f(v),
            Term::Atom(_) | Term::Int(_) => {}
            Term::Struct(_, args) | Term::PredRef { closed: args, .. } => {
                for a in args {
                    a.for_each_var(f);
                }
            }
        }
    }

    /// Distinct variables in order of first occurrence.
    pub fn vars(&self) -> Vec<Var> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        self.for_each_var(&mut |v| {
            if seen.insert(v.id) {
                out.push(v.clone());
            }
        });
        out
    }

    pub fn occurs(&self, id: VarId) -> bool {
        match self {
            Term::Var(v) => v.id == id,
            Term::Atom(_) | Term::Int(_) => false,
            Term::Struct(_, args) | Term::PredRef { closed: args, .. } => {
                args.iter().any(|a| a.occurs(id))
            }
        }
    }

    pub fn max_var_id(&self) -> Option<VarId> {
        let mut max = None;
        self.for_each_var(&mut |v| max = max.max(Some(v.id)));
        max
    }

    /// Replaces variables through `f`; untouched variables are kept.
    pub fn map_vars<F: FnMut(&Var) -> Term>(&self, f: &mut F) -> Term {
        match self {
            Term::Var(v) => f(v),
            Term::Atom(_) | Term::Int(_) => self.clone(),
            Term::Struct(name, args) => {
                Term::Struct(name.clone(), args.iter().map(|a| a.map_vars(f)).collect())
            }
            Term::PredRef {
                name,
                arity,
                closed,
            } => Term::PredRef {
                name: name.clone(),
                arity: *arity,
                closed: closed.iter().map(|a| a.map_vars(f)).collect(),
            },
        }
    }

    /// Splits a conjunction `(A, B)` into its conjuncts.
    pub fn conjuncts(self) -> Vec<Term> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Struct(name, mut args) if &*name == "," && args.len() == 2 => {
                    let rest = args.pop().unwrap();
                    let first = args.pop().unwrap();
                    out.extend(first.conjuncts());
                    cur = rest;
                }
                other => {
                    out.push(other);
                    return out;
                }
            }
        }
    }

    /// Iterates the elements of a proper list, or `None` if `self` is not one.
    pub fn list_items(&self) -> Option<Vec<&Term>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Atom(a) if &**a == NIL => return Some(items),
                Term::Struct(f, args) if &**f == CONS && args.len() == 2 => {
                    items.push(&args[0]);
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::print::print_term(self))
    }
}

/// True when `a` and `b` are equal up to a consistent renaming of variables.
pub fn is_variant(a: &Term, b: &Term) -> bool {
    fn go(
        a: &Term,
        b: &Term,
        fwd: &mut HashMap<VarId, VarId>,
        back: &mut HashMap<VarId, VarId>,
    ) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => {
                let f = *fwd.entry(x.id).or_insert(y.id);
                let r = *back.entry(y.id).or_insert(x.id);
                f == y.id && r == x.id
            }
            (Term::Atom(x), Term::Atom(y)) => x == y,
            (Term::Int(x), Term::Int(y)) => x == y,
            (Term::Struct(f1, a1), Term::Struct(f2, a2)) => {
                f1 == f2
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| go(x, y, fwd, back))
            }
            (
                Term::PredRef {
                    name: n1,
                    arity: k1,
                    closed: c1,
                },
                Term::PredRef {
                    name: n2,
                    arity: k2,
                    closed: c2,
                },
            ) => {
                n1 == n2
                    && k1 == k2
                    && c1.len() == c2.len()
                    && c1.iter().zip(c2).all(|(x, y)| go(x, y, fwd, back))
            }
            _ => false,
        }
    }
    go(a, b, &mut HashMap::new(), &mut HashMap::new())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Goal {
    Literal(Term),
    /// `call(Callee, Extra...)`.
    HOCall {
        callee: Term,
        extra: Vec<Term>,
    },
}

impl Goal {
    /// Classifies a body term, turning `call/N` into a higher-order call.
    pub fn from_term(t: Term) -> Goal {
        match t {
            Term::Struct(name, mut args) if &*name == "call" => {
                let extra = args.split_off(1);
                let callee = args.pop().unwrap();
                Goal::HOCall { callee, extra }
            }
            other => Goal::Literal(other),
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Goal::Literal(t) => t.clone(),
            Goal::HOCall { callee, extra } => {
                let mut args = vec![callee.clone()];
                args.extend(extra.iter().cloned());
                Term::compound("call", args)
            }
        }
    }

    pub fn map_vars<F: FnMut(&Var) -> Term>(&self, f: &mut F) -> Goal {
        match self {
            Goal::Literal(t) => Goal::Literal(t.map_vars(f)),
            Goal::HOCall { callee, extra } => Goal::HOCall {
                callee: callee.map_vars(f),
                extra: extra.iter().map(|a| a.map_vars(f)).collect(),
            },
        }
    }

    pub fn for_each_var<F: FnMut(&Var)>(&self, f: &mut F) {
        match self {
            Goal::Literal(t) => t.for_each_var(f),
            Goal::HOCall { callee, extra } => {
                callee.for_each_var(f);
                for a in extra {
                    a.for_each_var(f);
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Clause {
    pub head: Term,
    pub body: Vec<Goal>,
    pub span: SourceSpan,
}

impl Clause {
    pub fn new(head: Term, body: Vec<Goal>) -> Self {
        Clause {
            head,
            body,
            span: SourceSpan::default(),
        }
    }

    pub fn key(&self) -> PredKey {
        self.head
            .goal_key()
            .expect("clause head is an atom or compound")
    }

    pub fn max_var_id(&self) -> Option<VarId> {
        let mut max = self.head.max_var_id();
        for g in &self.body {
            g.for_each_var(&mut |v| max = max.max(Some(v.id)));
        }
        max
    }
}

/// Structural equality ignoring spans; variables compared up to renaming
/// across the whole clause.
pub fn clause_variant(a: &Clause, b: &Clause) -> bool {
    let wrap = |c: &Clause| {
        let mut parts = vec![c.head.clone()];
        parts.extend(c.body.iter().map(Goal::to_term));
        Term::compound("$clause", parts)
    };
    is_variant(&wrap(a), &wrap(b))
}

/// Source of fresh variable ids for one engine run.
#[derive(Debug, Clone, Default)]
pub struct VarCounter {
    next: VarId,
}

impl VarCounter {
    pub fn starting_at(next: VarId) -> Self {
        VarCounter { next }
    }

    /// Counter whose ids are disjoint from every variable in `terms`.
    pub fn above<'a, I: IntoIterator<Item = &'a Term>>(terms: I) -> Self {
        let next = terms
            .into_iter()
            .filter_map(Term::max_var_id)
            .max()
            .map_or(0, |m| m + 1);
        VarCounter { next }
    }

    pub fn fresh(&mut self) -> Var {
        let v = Var::new(self.next);
        self.next += 1;
        v
    }

    pub fn peek(&self) -> VarId {
        self.next
    }
}

/// Copies `t` with every variable replaced by a fresh, unnamed one.
pub fn copy_term(t: &Term, counter: &mut VarCounter) -> Term {
    let mut map: HashMap<VarId, Term> = HashMap::new();
    t.map_vars(&mut |v| {
        map.entry(v.id)
            .or_insert_with(|| Term::Var(counter.fresh()))
            .clone()
    })
}

/// A variant of `c` whose variables are all fresh.
pub fn rename_apart(c: &Clause, counter: &mut VarCounter) -> Clause {
    let mut map: HashMap<VarId, Term> = HashMap::new();
    let mut rename = |v: &Var| {
        map.entry(v.id)
            .or_insert_with(|| Term::Var(counter.fresh()))
            .clone()
    };
    let head = c.head.map_vars(&mut rename);
    let body = c.body.iter().map(|g| g.map_vars(&mut rename)).collect();
    Clause {
        head,
        body,
        span: c.span.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SaturateError {
    #[error("instantiation error: callee is unbound")]
    Instantiation,
    #[error("arity error: {name}/{arity} applied to {supplied} arguments")]
    Arity {
        name: Sym,
        arity: usize,
        supplied: usize,
    },
    #[error("type error: {0} is not callable")]
    NotCallable(String),
}

/// Applies `extra` arguments to a callee: an atom or a predicate reference.
///
/// Under-application of a reference yields a new reference with more closed
/// arguments; exact application yields the first-order goal.
pub fn saturate(callee: &Term, extra: &[Term]) -> Result<Term, SaturateError> {
    match callee {
        Term::Var(_) => Err(SaturateError::Instantiation),
        Term::Atom(name) => Ok(Term::app(name.clone(), extra.to_vec())),
        Term::PredRef {
            name,
            arity,
            closed,
        } => {
            let supplied = closed.len() + extra.len();
            match supplied.cmp(arity) {
                Ordering::Greater => Err(SaturateError::Arity {
                    name: name.clone(),
                    arity: *arity,
                    supplied,
                }),
                Ordering::Equal => {
                    let mut args = closed.clone();
                    args.extend(extra.iter().cloned());
                    Ok(Term::app(name.clone(), args))
                }
                Ordering::Less => {
                    let mut args = closed.clone();
                    args.extend(extra.iter().cloned());
                    Ok(Term::PredRef {
                        name: name.clone(),
                        arity: *arity,
                        closed: args,
                    })
                }
            }
        }
        other => Err(SaturateError::NotCallable(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Term {
        Term::atom(s)
    }

    #[test]
    fn rename_apart_is_fresh_variant() {
        let x = Term::named_var(0, "X");
        let c = Clause::new(
            Term::compound("p", vec![x.clone()]),
            vec![Goal::Literal(Term::compound("q", vec![x]))],
        );
        let mut counter = VarCounter::above([&c.head]);
        let r1 = rename_apart(&c, &mut counter);
        let r2 = rename_apart(&c, &mut counter);
        assert!(clause_variant(&c, &r1));
        assert!(clause_variant(&r1, &r2));
        // head and body share the renamed variable
        assert_eq!(r1.head.args()[0], r1.body[0].to_term().args()[0]);
        let ids = |c: &Clause| c.head.vars().into_iter().map(|v| v.id).collect::<Vec<_>>();
        assert_ne!(ids(&r1), ids(&c));
        assert!(ids(&r1).iter().all(|i| !ids(&r2).contains(i)));
    }

    #[test]
    fn rename_ground_clause_is_identical() {
        let c = Clause::new(Term::compound("p", vec![a("a")]), vec![]);
        let mut counter = VarCounter::default();
        let r = rename_apart(&c, &mut counter);
        assert_eq!(r.head, c.head);
        assert!(r.body.is_empty());
    }

    #[test]
    fn saturate_atom() {
        let x = Term::named_var(0, "O");
        let t = saturate(&a("sort_pair"), &[a("a"), a("b"), x.clone()]).unwrap();
        assert_eq!(t, Term::compound("sort_pair", vec![a("a"), a("b"), x]));
    }

    #[test]
    fn saturate_closure_completion() {
        let z = Term::var(9);
        let r = Term::pred_ref("add", 3, vec![Term::int(1)]);
        let t = saturate(&r, &[Term::int(2), z.clone()]).unwrap();
        assert_eq!(
            t,
            Term::compound("add", vec![Term::int(1), Term::int(2), z])
        );
    }

    #[test]
    fn saturate_over_application() {
        let r = Term::pred_ref("add", 3, vec![Term::int(1)]);
        let err = saturate(&r, &[Term::int(2), Term::int(3), Term::int(4)]).unwrap_err();
        assert_eq!(
            err,
            SaturateError::Arity {
                name: "add".into(),
                arity: 3,
                supplied: 4
            }
        );
    }

    #[test]
    fn saturate_under_application_extends_closure() {
        let r = Term::pred_ref("add", 3, vec![]);
        let t = saturate(&r, &[Term::int(1)]).unwrap();
        assert_eq!(t, Term::pred_ref("add", 3, vec![Term::int(1)]));
    }

    #[test]
    fn saturate_unbound_callee() {
        assert_eq!(
            saturate(&Term::var(0), &[a("a")]),
            Err(SaturateError::Instantiation)
        );
    }

    #[test]
    fn saturate_rejects_compound_callee() {
        assert!(matches!(
            saturate(&Term::compound("f", vec![a("x")]), &[a("a")]),
            Err(SaturateError::NotCallable(_))
        ));
    }

    #[test]
    fn variant_checks_consistency() {
        let x = Term::var(1);
        let y = Term::var(2);
        let f = |p: Term, q: Term| Term::compound("f", vec![p, q]);
        assert!(is_variant(
            &f(x.clone(), y.clone()),
            &f(y.clone(), x.clone())
        ));
        assert!(!is_variant(
            &f(x.clone(), x.clone()),
            &f(x.clone(), y.clone())
        ));
        assert!(!is_variant(
            &f(x.clone(), y.clone()),
            &f(x.clone(), x.clone())
        ));
    }

    #[test]
    fn conjuncts_flatten_nested() {
        let t = Term::compound(
            ",",
            vec![
                Term::compound(",", vec![a("a"), a("b")]),
                Term::compound(",", vec![a("c"), a("d")]),
            ],
        );
        assert_eq!(t.conjuncts(), vec![a("a"), a("b"), a("c"), a("d")]);
    }

    #[test]
    fn call_goal_classification() {
        let g = Goal::from_term(Term::compound("call", vec![Term::var(0), a("x")]));
        assert_eq!(
            g,
            Goal::HOCall {
                callee: Term::var(0),
                extra: vec![a("x")]
            }
        );
    }
}
