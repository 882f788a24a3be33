//! Test support: random terms and programs, and a bottom-up fixpoint
//! evaluator used as an oracle for the engine.

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use hopl::parser::parse_program;
use hopl::program::{Assertion, PropLiteral};
use hopl::term::{clause_variant, is_variant, Goal, Term, VarId};
use hopl::Program;

// ------------------------------------------------------------------ terms

const ATOMS: &[&str] = &[
    "a", "b", "c", "nil", "foo_bar", "[]", "Hello", "x y", "$w", "it's",
];
const FUNCTORS: &[&str] = &["f", "g", "h", "point", "Weird"];

fn leaf(vars: u64) -> BoxedStrategy<Term> {
    prop_oneof![
        (0..vars).prop_map(Term::var),
        prop::sample::select(ATOMS).prop_map(Term::atom),
        (-20i64..20).prop_map(Term::int),
    ]
    .boxed()
}

/// Terms of depth at most `depth` over variable ids `0..vars`, including
/// lists and predicate references.
pub fn term(depth: u32, vars: u64) -> BoxedStrategy<Term> {
    leaf(vars)
        .prop_recursive(depth, 64, 3, move |inner| {
            prop_oneof![
                (
                    prop::sample::select(FUNCTORS),
                    prop::collection::vec(inner.clone(), 1..4)
                )
                    .prop_map(|(f, args)| Term::compound(f, args)),
                prop::collection::vec(inner.clone(), 0..4).prop_map(Term::list),
                (prop::collection::vec(inner.clone(), 1..3), inner.clone())
                    .prop_map(|(items, tail)| Term::list_with_tail(items, tail)),
                (
                    prop::sample::select(FUNCTORS),
                    prop::collection::vec(inner, 0..3),
                    0usize..3
                )
                    .prop_map(|(f, closed, extra)| {
                        let arity = closed.len() + 1 + extra;
                        Term::pred_ref(f, arity, closed)
                    }),
            ]
        })
        .boxed()
}

/// First-order terms without predicate references, for unification.
pub fn fo_term(depth: u32, vars: u64) -> BoxedStrategy<Term> {
    let leaf = prop_oneof![
        (0..vars).prop_map(Term::var),
        prop::sample::select(&["a", "b", "c"][..]).prop_map(Term::atom),
        (0i64..3).prop_map(Term::int),
    ];
    leaf.prop_recursive(depth, 32, 3, |inner| {
        (
            prop::sample::select(&["f", "g"][..]),
            prop::collection::vec(inner, 1..4),
        )
            .prop_map(|(f, args)| Term::compound(f, args))
    })
    .boxed()
}

/// Pairs of first-order terms of depth at most 5. Half are independent;
/// half pair a term with an instance of it under a random substitution over
/// the same variables, so a good share of pairs unify.
pub fn fo_pair() -> BoxedStrategy<(Term, Term)> {
    let independent = (fo_term(5, 4), fo_term(5, 4));
    let related =
        (fo_term(4, 4), prop::collection::vec(fo_term(1, 4), 4)).prop_map(|(a, range)| {
            let b = a.map_vars(&mut |v| range[v.id as usize % range.len()].clone());
            (a, b)
        });
    prop_oneof![independent, related].boxed()
}

// --------------------------------------------------------------- programs

/// A random stratified Datalog-style program with function symbols in facts:
/// up to 6 predicates, up to 3 clauses each, rule bodies only calling
/// lower-numbered predicates. SLD resolution terminates on every query.
#[derive(Clone, Debug)]
pub struct RandomProgram {
    pub source: String,
    /// `(name, arity)` of every predicate, in definition order.
    pub preds: Vec<(String, usize)>,
}

const CONSTS: &[&str] = &["a", "b", "c", "f(a)", "f(f(b))", "g(a, c)", "1", "2"];
const VARS: &[&str] = &["X", "Y", "Z"];

pub fn random_program<R: Rng>(rng: &mut R) -> RandomProgram {
    let n = rng.gen_range(1..=6);
    let preds: Vec<(String, usize)> = (0..n)
        .map(|i| (format!("p{i}"), rng.gen_range(0..=2)))
        .collect();
    let mut source = String::new();
    for (i, (name, arity)) in preds.iter().enumerate() {
        let clauses = rng.gen_range(1..=3);
        for _ in 0..clauses {
            if i == 0 || rng.gen_bool(0.4) {
                let args: Vec<String> = (0..*arity)
                    .map(|_| CONSTS.choose(rng).unwrap().to_string())
                    .collect();
                source.push_str(&atom_text(name, &args));
                source.push_str(".\n");
                continue;
            }
            let mut body = Vec::new();
            let mut bound: Vec<&str> = Vec::new();
            for _ in 0..rng.gen_range(1..=2) {
                let (bname, barity) = &preds[rng.gen_range(0..i)];
                let args: Vec<String> = (0..*barity)
                    .map(|_| {
                        if rng.gen_bool(0.75) {
                            let v = *VARS.choose(rng).unwrap();
                            bound.push(v);
                            v.to_string()
                        } else {
                            CONSTS.choose(rng).unwrap().to_string()
                        }
                    })
                    .collect();
                body.push(atom_text(bname, &args));
            }
            let head_args: Vec<String> = (0..*arity)
                .map(|_| match (bound.choose(rng), rng.gen_range(0..4)) {
                    (Some(v), 0) => format!("f({v})"),
                    (Some(v), 1 | 2) => v.to_string(),
                    _ => CONSTS.choose(rng).unwrap().to_string(),
                })
                .collect();
            source.push_str(&atom_text(name, &head_args));
            source.push_str(" :- ");
            source.push_str(&body.join(", "));
            source.push_str(".\n");
        }
    }
    RandomProgram { source, preds }
}

fn atom_text(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("{name}({})", args.join(", "))
    }
}

impl RandomProgram {
    pub fn program(&self) -> Program {
        parse_program(&self.source, "random.hopl").expect("generated program parses")
    }

    /// The most general query for predicate `i`, with variables `V0..`.
    pub fn query(&self, i: usize) -> String {
        let (name, arity) = &self.preds[i];
        let args: Vec<String> = (0..*arity).map(|k| format!("V{k}")).collect();
        atom_text(name, &args)
    }
}

// ---------------------------------------------------------------- oracle

type Tuple = Vec<Term>;

/// Least Herbrand model of a range-restricted definite program, computed by
/// naive iteration, as printed ground tuples per `name/arity`. The model must
/// be finite, which holds for the stratified programs generated above.
pub fn fixpoint(p: &Program) -> HashMap<String, BTreeSet<String>> {
    let mut model: HashMap<(String, usize), Vec<Tuple>> = HashMap::new();
    loop {
        let mut changed = false;
        for c in p.clauses() {
            let body: Vec<&Term> = c
                .body
                .iter()
                .map(|g| match g {
                    Goal::Literal(t) => t,
                    other => panic!("oracle supports plain calls only, got {other:?}"),
                })
                .collect();
            let mut envs = vec![HashMap::new()];
            for atom in body {
                let key = (atom.goal_key().unwrap().name.to_string(), atom.args().len());
                let facts = model.get(&key).cloned().unwrap_or_default();
                let mut next = Vec::new();
                for env in &envs {
                    for fact in &facts {
                        let mut e = env.clone();
                        if atom
                            .args()
                            .iter()
                            .zip(fact)
                            .all(|(pat, t)| matches(pat, t, &mut e))
                        {
                            next.push(e);
                        }
                    }
                }
                envs = next;
            }
            let hkey = (c.key().name.to_string(), c.key().arity);
            for env in envs {
                let tuple: Tuple = c.head.args().iter().map(|a| instantiate(a, &env)).collect();
                let entry = model.entry(hkey.clone()).or_default();
                if !entry.contains(&tuple) {
                    entry.push(tuple);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    model
        .into_iter()
        .map(|((name, arity), tuples)| {
            (
                format!("{name}/{arity}"),
                tuples.iter().map(|t| show(t)).collect(),
            )
        })
        .collect()
}

/// One-way matching of a pattern against a ground term.
fn matches(pat: &Term, t: &Term, env: &mut HashMap<VarId, Term>) -> bool {
    match pat {
        Term::Var(v) => match env.get(&v.id) {
            Some(b) => same(b, t),
            None => {
                env.insert(v.id, t.clone());
                true
            }
        },
        Term::Atom(a) => matches!(t, Term::Atom(b) if a == b),
        Term::Int(a) => matches!(t, Term::Int(b) if a == b),
        Term::Struct(f, args) => match t {
            Term::Struct(g, targs) if f == g && args.len() == targs.len() => {
                args.iter().zip(targs).all(|(p, x)| matches(p, x, env))
            }
            _ => false,
        },
        Term::PredRef { .. } => panic!("oracle does not support predicate references"),
    }
}

fn same(a: &Term, b: &Term) -> bool {
    show(std::slice::from_ref(a)) == show(std::slice::from_ref(b))
}

fn instantiate(t: &Term, env: &HashMap<VarId, Term>) -> Term {
    t.map_vars(&mut |v| env.get(&v.id).cloned().expect("range-restricted clause"))
}

/// Canonical text of a ground tuple.
pub fn show(tuple: &[Term]) -> String {
    let parts: Vec<String> = tuple.iter().map(hopl::print_term).collect();
    format!("({})", parts.join(", "))
}

/// The random program for `seed`.
pub fn program_from_seed(seed: u64) -> RandomProgram {
    use rand::SeedableRng;
    random_program(&mut rand::rngs::StdRng::seed_from_u64(seed))
}

// ------------------------------------------------------------ programs eq

fn assertion_term(a: &Assertion) -> Term {
    let lits = |ls: &[PropLiteral]| Term::list(ls.iter().map(|l| l.to_term()).collect());
    Term::compound(
        a.status.keyword(),
        vec![a.head.clone(), lits(&a.pre), lits(&a.post)],
    )
}

fn same_assertions(x: &[Assertion], y: &[Assertion]) -> bool {
    x.len() == y.len()
        && x.iter().zip(y).all(|(a, b)| {
            a.origin == b.origin && is_variant(&assertion_term(a), &assertion_term(b))
        })
}

/// Structural equality of programs, up to variable renaming per clause and
/// assertion.
pub fn same_program(p: &Program, q: &Program) -> bool {
    p.clauses().len() == q.clauses().len()
        && p.clauses()
            .iter()
            .zip(q.clauses())
            .all(|(a, b)| clause_variant(a, b))
        && same_assertions(&p.assertions, &q.assertions)
        && p.predprops.len() == q.predprops.len()
        && p.predprops
            .values()
            .zip(q.predprops.values())
            .all(|(a, b)| {
                a.name == b.name
                    && a.described_arity == b.described_arity
                    && a.is_wrapper == b.is_wrapper
                    && same_assertions(&a.anon, &b.anon)
            })
}
