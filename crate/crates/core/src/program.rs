//! Programs: clauses, assertions, and predicate properties.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::builtins;
use crate::span::SourceSpan;
use crate::term::{Clause, PredKey, Sym, Term};

pub type AssertionId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertionStatus {
    Check,
    Trust,
    True,
}

impl AssertionStatus {
    pub fn keyword(self) -> &'static str {
        match self {
            AssertionStatus::Check => "check",
            AssertionStatus::Trust => "trust",
            AssertionStatus::True => "true",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "check" => Some(AssertionStatus::Check),
            "trust" => Some(AssertionStatus::Trust),
            "true" => Some(AssertionStatus::True),
            _ => None,
        }
    }
}

/// Where an assertion came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "snake_case")]
pub enum Origin {
    User,
    Predprop(String),
    Wrapper(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::User => f.write_str("user"),
            Origin::Predprop(n) => write!(f, "predprop({n})"),
            Origin::Wrapper(n) => write!(f, "wrapper({n})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropFlavor {
    StateProp,
    Predprop(Sym),
    WrapperPredprop(Sym),
}

/// One property literal in an assertion's precondition or postcondition.
#[derive(Clone, Debug)]
pub struct PropLiteral {
    pub name: Sym,
    pub args: Vec<Term>,
    pub flavor: PropFlavor,
    pub span: SourceSpan,
}

impl PropLiteral {
    pub fn key(&self) -> PredKey {
        PredKey {
            name: self.name.clone(),
            arity: self.args.len(),
        }
    }

    pub fn to_term(&self) -> Term {
        Term::app(self.name.clone(), self.args.clone())
    }

    pub fn is_predprop(&self) -> bool {
        !matches!(self.flavor, PropFlavor::StateProp)
    }
}

/// The head functor used by anonymous assertions inside a predprop.
pub const PLACEHOLDER: &str = "_";

#[derive(Clone, Debug)]
pub struct Assertion {
    pub id: AssertionId,
    pub status: AssertionStatus,
    /// `name(V1, ..., Vn)` with pairwise distinct variables.
    pub head: Term,
    pub pre: Vec<PropLiteral>,
    pub post: Vec<PropLiteral>,
    pub span: SourceSpan,
    pub origin: Origin,
}

impl Assertion {
    pub fn key(&self) -> PredKey {
        self.head.goal_key().expect("assertion head is callable")
    }

    pub fn is_checked(&self) -> bool {
        self.status == AssertionStatus::Check
    }

    pub fn head_vars(&self) -> Vec<u64> {
        self.head.vars().into_iter().map(|v| v.id).collect()
    }
}

#[derive(Clone, Debug)]
pub struct PredProp {
    pub name: Sym,
    pub described_arity: usize,
    pub anon: Vec<Assertion>,
    pub is_wrapper: bool,
    pub span: SourceSpan,
}

impl PredProp {
    /// The property as used in assertions: `name/1`.
    pub fn key(&self) -> PredKey {
        PredKey {
            name: self.name.clone(),
            arity: 1,
        }
    }
}

/// A parsed and validated program.
#[derive(Clone, Debug, Default)]
pub struct Program {
    pub origin: Arc<str>,
    pub source: Arc<str>,
    clauses: Vec<Clause>,
    clause_index: HashMap<PredKey, Vec<usize>>,
    pub assertions: Vec<Assertion>,
    pub predprops: BTreeMap<Sym, PredProp>,
    assertion_index: HashMap<PredKey, Vec<usize>>,
}

impl Program {
    pub fn new(origin: &str, source: &str) -> Self {
        Program {
            origin: origin.into(),
            source: source.into(),
            ..Default::default()
        }
    }

    /// Builds a program from clauses only.
    pub fn from_clauses(clauses: Vec<Clause>) -> Self {
        let mut p = Program::new("<memory>", "");
        for c in clauses {
            p.add_clause(c);
        }
        p
    }

    pub fn add_clause(&mut self, c: Clause) {
        self.clause_index
            .entry(c.key())
            .or_default()
            .push(self.clauses.len());
        self.clauses.push(c);
    }

    pub fn add_assertion(&mut self, a: Assertion) {
        self.assertion_index
            .entry(a.key())
            .or_default()
            .push(self.assertions.len());
        self.assertions.push(a);
    }

    pub fn add_predprop(&mut self, pp: PredProp) {
        self.predprops.insert(pp.name.clone(), pp);
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// User clauses for `key` in textual order, falling back to the prelude.
    pub fn clauses_for<'a>(&'a self, key: &PredKey) -> Vec<&'a Clause> {
        match self.clause_index.get(key) {
            Some(ix) => ix.iter().map(|i| &self.clauses[*i]).collect(),
            None => builtins::prelude_clauses(key),
        }
    }

    pub fn is_user_defined(&self, key: &PredKey) -> bool {
        self.clause_index.contains_key(key)
    }

    /// Defined by user clauses, the prelude, or natively.
    pub fn defines(&self, key: &PredKey) -> bool {
        self.is_user_defined(key) || builtins::is_builtin(key)
    }

    pub fn defined_keys(&self) -> impl Iterator<Item = &PredKey> {
        self.clause_index.keys()
    }

    pub fn assertions_for(&self, key: &PredKey) -> Vec<&Assertion> {
        self.assertion_index
            .get(key)
            .map(|ix| ix.iter().map(|i| &self.assertions[*i]).collect())
            .unwrap_or_default()
    }

    /// Assertions with status `check` for `key`; the ones run-time checking uses.
    pub fn checked_assertions_for(&self, key: &PredKey) -> Vec<&Assertion> {
        self.assertions_for(key)
            .into_iter()
            .filter(|a| a.is_checked())
            .collect()
    }

    pub fn predprop(&self, name: &str) -> Option<&PredProp> {
        self.predprops.get(name)
    }

    /// Looks up a user or predprop-anonymous assertion by id.
    pub fn assertion(&self, id: AssertionId) -> Option<&Assertion> {
        self.assertions
            .iter()
            .chain(self.predprops.values().flat_map(|pp| pp.anon.iter()))
            .find(|a| a.id == id)
    }

    pub fn all_assertions(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions
            .iter()
            .chain(self.predprops.values().flat_map(|pp| pp.anon.iter()))
    }
}
