//! Substitutions, the trailed binding store used by the engine, and unification.

use std::collections::{BTreeMap, HashMap};

use crate::term::{Term, Var, VarId};

/// An explicit substitution, kept in idempotent form by the public operations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<VarId, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (VarId, Term)>>(pairs: I) -> Self {
        Substitution {
            bindings: pairs.into_iter().collect(),
        }
    }

    pub fn get(&self, id: VarId) -> Option<&Term> {
        self.bindings.get(&id)
    }

    /// Adds a binding without normalizing.
    pub fn insert(&mut self, id: VarId, t: Term) {
        self.bindings.insert(id, t);
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Term)> {
        self.bindings.iter().map(|(k, v)| (*k, v))
    }

    /// Applies the substitution, following binding chains to a fixed point.
    /// A variable reached again while being expanded is left in place.
    pub fn apply(&self, t: &Term) -> Term {
        fn go(s: &Substitution, t: &Term, active: &mut Vec<VarId>) -> Term {
            match t {
                Term::Var(v) => match s.bindings.get(&v.id) {
                    Some(b) if !active.contains(&v.id) => {
                        active.push(v.id);
                        let r = go(s, b, active);
                        active.pop();
                        r
                    }
                    _ => t.clone(),
                },
                _ => t.map_children(&mut |c| go(s, c, active)),
            }
        }
        go(self, t, &mut Vec::new())
    }

    /// Idempotent form: every binding fully applied.
    pub fn normalize(&self) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .map(|(k, v)| (*k, self.apply(v)))
                .collect(),
        }
    }

    pub fn is_idempotent(&self) -> bool {
        self.bindings.values().all(|v| {
            let mut ok = true;
            v.for_each_var(&mut |x| ok &= !self.bindings.contains_key(&x.id));
            ok
        })
    }
}

pub fn apply_subst(t: &Term, s: &Substitution) -> Term {
    s.apply(t)
}

/// Most general unifier of `a` and `b` extending `s`, or `None`.
///
/// With `occurs_check` off the binding step skips the occurs test; a cyclic
/// result is still rejected when the substitution is normalized.
pub fn unify(a: &Term, b: &Term, s: &Substitution, occurs_check: bool) -> Option<Substitution> {
    let mut store = Bindings::from_substitution(s);
    if !store.unify(a, b, occurs_check) {
        return None;
    }
    store.to_substitution().ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cyclic term through variable _G{0}")]
pub struct CyclicTerm(pub VarId);

/// Triangular binding store with an undo trail.
#[derive(Debug, Default, Clone)]
pub struct Bindings {
    map: HashMap<VarId, Term>,
    trail: Vec<VarId>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_substitution(s: &Substitution) -> Self {
        Bindings {
            map: s.iter().map(|(k, v)| (k, v.clone())).collect(),
            trail: Vec::new(),
        }
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo_to(&mut self, mark: usize) {
        for id in self.trail.drain(mark..) {
            self.map.remove(&id);
        }
    }

    pub fn is_bound(&self, id: VarId) -> bool {
        self.map.contains_key(&id)
    }

    fn bind(&mut self, id: VarId, t: Term) {
        self.map.insert(id, t);
        self.trail.push(id);
    }

    /// Dereferences variable chains at the top level only.
    pub fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.map.get(&v.id) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, id: VarId, t: &Term) -> bool {
        let mut stack = vec![t];
        while let Some(t) = stack.pop() {
            match self.walk(t) {
                Term::Var(v) => {
                    if v.id == id {
                        return true;
                    }
                }
                Term::Atom(_) | Term::Int(_) => {}
                Term::Struct(_, args) | Term::PredRef { closed: args, .. } => {
                    stack.extend(args.iter())
                }
            }
        }
        false
    }

    /// Unifies in place. On failure some bindings may remain; callers undo to
    /// a mark taken beforehand.
    pub fn unify(&mut self, a: &Term, b: &Term, occurs_check: bool) -> bool {
        let mut stack = vec![(a.clone(), b.clone())];
        while let Some((x, y)) = stack.pop() {
            let x = self.walk(&x).clone();
            let y = self.walk(&y).clone();
            match (x, y) {
                (Term::Var(v), Term::Var(w)) if v.id == w.id => {}
                // Newer variables point at older ones, so answers keep query names.
                (Term::Var(v), Term::Var(w)) => {
                    if v.id > w.id {
                        self.bind(v.id, Term::Var(w));
                    } else {
                        self.bind(w.id, Term::Var(v));
                    }
                }
                (Term::Var(v), other) | (other, Term::Var(v)) => {
                    if occurs_check && !other.is_var() && self.occurs(v.id, &other) {
                        return false;
                    }
                    self.bind(v.id, other);
                }
                (Term::Atom(p), Term::Atom(q)) => {
                    if p != q {
                        return false;
                    }
                }
                (Term::Int(p), Term::Int(q)) => {
                    if p != q {
                        return false;
                    }
                }
                (Term::Struct(f, xs), Term::Struct(g, ys)) => {
                    if f != g || xs.len() != ys.len() {
                        return false;
                    }
                    stack.extend(xs.into_iter().zip(ys).rev());
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
                    if n1 != n2 || k1 != k2 || c1.len() != c2.len() {
                        return false;
                    }
                    stack.extend(c1.into_iter().zip(c2).rev());
                }
                _ => return false,
            }
        }
        true
    }

    /// Fully applies the current bindings to `t`.
    pub fn resolve(&self, t: &Term) -> Result<Term, CyclicTerm> {
        fn go(b: &Bindings, t: &Term, active: &mut Vec<VarId>) -> Result<Term, CyclicTerm> {
            match t {
                Term::Var(v) => match b.map.get(&v.id) {
                    Some(next) => {
                        if active.contains(&v.id) {
                            return Err(CyclicTerm(v.id));
                        }
                        active.push(v.id);
                        let r = go(b, next, active);
                        active.pop();
                        r
                    }
                    None => Ok(t.clone()),
                },
                Term::Atom(_) | Term::Int(_) => Ok(t.clone()),
                _ => t.try_map_children(&mut |c| go(b, c, active)),
            }
        }
        go(self, t, &mut Vec::new())
    }

    pub(crate) fn raw_pairs(&self) -> impl Iterator<Item = (VarId, Term)> + '_ {
        self.map.iter().map(|(k, v)| (*k, v.clone()))
    }

    /// Idempotent substitution equivalent to the store.
    pub fn to_substitution(&self) -> Result<Substitution, CyclicTerm> {
        let mut out = Substitution::new();
        for id in self.map.keys() {
            let t = self.resolve(&Term::Var(Var::new(*id)))?;
            out.insert(*id, t);
        }
        Ok(out)
    }
}

impl Term {
    pub(crate) fn map_children<F: FnMut(&Term) -> Term>(&self, f: &mut F) -> Term {
        match self {
            Term::Var(_) | Term::Atom(_) | Term::Int(_) => self.clone(),
            Term::Struct(name, args) => Term::Struct(name.clone(), args.iter().map(f).collect()),
            Term::PredRef {
                name,
                arity,
                closed,
            } => Term::PredRef {
                name: name.clone(),
                arity: *arity,
                closed: closed.iter().map(f).collect(),
            },
        }
    }

    pub(crate) fn try_map_children<E, F: FnMut(&Term) -> Result<Term, E>>(
        &self,
        f: &mut F,
    ) -> Result<Term, E> {
        Ok(match self {
            Term::Var(_) | Term::Atom(_) | Term::Int(_) => self.clone(),
            Term::Struct(name, args) => {
                Term::Struct(name.clone(), args.iter().map(f).collect::<Result<_, _>>()?)
            }
            Term::PredRef {
                name,
                arity,
                closed,
            } => Term::PredRef {
                name: name.clone(),
                arity: *arity,
                closed: closed.iter().map(f).collect::<Result<_, _>>()?,
            },
        })
    }
}
