//! Predefined predicates: `=`/2, the builtin properties, and `call/N`.

use std::sync::OnceLock;

use crate::term::{Clause, Goal, PredKey, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Native {
    Unify,
    True,
    Int,
    Atm,
    Var,
    Nonvar,
    Ground,
    Callable,
}

pub fn native(key: &PredKey) -> Option<Native> {
    Some(match (&*key.name, key.arity) {
        ("=", 2) => Native::Unify,
        ("true", 0) => Native::True,
        ("int", 1) => Native::Int,
        ("atm", 1) => Native::Atm,
        ("var", 1) => Native::Var,
        ("nonvar", 1) => Native::Nonvar,
        ("ground", 1) => Native::Ground,
        ("callable", 1) => Native::Callable,
        _ => return None,
    })
}

/// Properties usable in assertions without a definition.
pub const BUILTIN_PROPS: &[(&str, usize)] = &[
    ("int", 1),
    ("atm", 1),
    ("var", 1),
    ("nonvar", 1),
    ("ground", 1),
    ("list", 1),
    ("callable", 1),
    ("true", 0),
    ("member", 2),
];

pub fn is_builtin_prop(key: &PredKey) -> bool {
    BUILTIN_PROPS
        .iter()
        .any(|(n, a)| **n == *key.name && *a == key.arity)
}

pub fn is_call(key: &PredKey) -> bool {
    &*key.name == "call" && key.arity >= 1
}

/// Anything user code may not redefine.
pub fn is_builtin(key: &PredKey) -> bool {
    native(key).is_some() || is_builtin_prop(key) || is_call(key)
}

/// Clauses for builtins that are defined in the logic language itself.
pub fn prelude_clauses(key: &PredKey) -> Vec<&'static Clause> {
    prelude().iter().filter(|c| c.key() == *key).collect()
}

fn prelude() -> &'static [Clause] {
    static PRELUDE: OnceLock<Vec<Clause>> = OnceLock::new();
    PRELUDE.get_or_init(|| {
        let x = || Term::named_var(0, "X");
        let t = || Term::named_var(1, "T");
        let anon = || Term::var(2);
        vec![
            // list([]).
            Clause::new(Term::compound("list", vec![Term::nil()]), vec![]),
            // list([_|T]) :- list(T).
            Clause::new(
                Term::compound("list", vec![Term::cons(anon(), t())]),
                vec![Goal::Literal(Term::compound("list", vec![t()]))],
            ),
            // member(X, [X|_]).
            Clause::new(
                Term::compound("member", vec![x(), Term::cons(x(), anon())]),
                vec![],
            ),
            // member(X, [_|T]) :- member(X, T).
            Clause::new(
                Term::compound("member", vec![x(), Term::cons(anon(), t())]),
                vec![Goal::Literal(Term::compound("member", vec![x(), t()]))],
            ),
        ]
    })
}
