//! Printing of terms, clauses, assertions and predprops in the `.hopl` syntax.
//!
//! Output always re-parses to an equal object up to variable renaming.

use std::collections::HashMap;
use std::fmt::Write;

use crate::program::{Assertion, PredProp, Program, PropLiteral, PLACEHOLDER};
use crate::term::{Clause, Goal, Term, VarId, CONS, NIL};

fn is_plain_atom(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}

/// Atom text, quoted when it would not lex back as a bare atom.
pub fn atom_text(name: &str) -> String {
    if is_plain_atom(name) || name == NIL {
        return name.to_string();
    }
    let mut out = String::with_capacity(name.len() + 2);
    out.push('\'');
    for c in name.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// How unnamed variables are rendered.
enum VarNames<'a> {
    /// `_G<id>`
    ById,
    /// `_G0`, `_G1`, ... by first occurrence; shared across one rendering job.
    Canonical(&'a mut HashMap<VarId, usize>),
}

struct Printer<'a> {
    out: String,
    names: VarNames<'a>,
}

impl Printer<'_> {
    fn var(&mut self, id: VarId, name: Option<&str>) {
        if let Some(n) = name {
            self.out.push_str(n);
            return;
        }
        match &mut self.names {
            VarNames::ById => {
                let _ = write!(self.out, "_G{id}");
            }
            VarNames::Canonical(map) => {
                let next = map.len();
                let n = *map.entry(id).or_insert(next);
                let _ = write!(self.out, "_G{n}");
            }
        }
    }

    fn args(&mut self, args: &[Term]) {
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                self.out.push_str(", ");
            }
            self.term(a, true);
        }
    }

    fn term(&mut self, t: &Term, nested: bool) {
        match t {
            Term::Var(v) => self.var(v.id, v.name.as_deref()),
            Term::Atom(a) => self.out.push_str(&atom_text(a)),
            Term::Int(i) => {
                let _ = write!(self.out, "{i}");
            }
            Term::Struct(f, args) if &**f == CONS && args.len() == 2 => self.list(t),
            Term::Struct(f, args) if &**f == "=" && args.len() == 2 => {
                if nested {
                    self.out.push('(');
                }
                self.term(&args[0], true);
                self.out.push_str(" = ");
                self.term(&args[1], true);
                if nested {
                    self.out.push(')');
                }
            }
            Term::Struct(f, args) if &**f == "," && args.len() == 2 => {
                self.out.push('(');
                self.term(&args[0], false);
                self.out.push_str(", ");
                self.term(&args[1], false);
                self.out.push(')');
            }
            Term::Struct(f, args) => {
                self.out.push_str(&atom_text(f));
                self.out.push('(');
                self.args(args);
                self.out.push(')');
            }
            Term::PredRef {
                name,
                arity,
                closed,
            } => {
                self.out.push_str(&atom_text(name));
                if !closed.is_empty() {
                    self.out.push('(');
                    self.args(closed);
                    self.out.push(')');
                }
                let _ = write!(self.out, "~{arity}");
            }
        }
    }

    fn list(&mut self, t: &Term) {
        self.out.push('[');
        let mut cur = t;
        let mut first = true;
        loop {
            match cur {
                Term::Struct(f, args) if &**f == CONS && args.len() == 2 => {
                    if !first {
                        self.out.push_str(", ");
                    }
                    first = false;
                    self.term(&args[0], true);
                    cur = &args[1];
                }
                Term::Atom(a) if &**a == NIL => break,
                tail => {
                    self.out.push_str(" | ");
                    self.term(tail, true);
                    break;
                }
            }
        }
        self.out.push(']');
    }
}

pub fn print_term(t: &Term) -> String {
    let mut p = Printer {
        out: String::new(),
        names: VarNames::ById,
    };
    p.term(t, false);
    p.out
}

/// Prints one term with unnamed variables numbered `_G0`, `_G1`, ...
pub fn print_term_canonical(t: &Term) -> String {
    print_terms_canonical([t]).remove(0)
}

/// Prints several terms with unnamed variables numbered by first occurrence
/// across all of them, so output does not depend on internal variable ids.
pub fn print_terms_canonical<'t, I: IntoIterator<Item = &'t Term>>(terms: I) -> Vec<String> {
    let mut map = HashMap::new();
    terms
        .into_iter()
        .map(|t| {
            let mut p = Printer {
                out: String::new(),
                names: VarNames::Canonical(&mut map),
            };
            p.term(t, false);
            p.out
        })
        .collect()
}

pub fn print_goal(g: &Goal) -> String {
    print_term(&g.to_term())
}

pub fn print_clause(c: &Clause) -> String {
    let mut out = print_term(&c.head);
    if !c.body.is_empty() {
        out.push_str(" :- ");
        let body: Vec<String> = c.body.iter().map(print_goal).collect();
        out.push_str(&body.join(", "));
    }
    out.push('.');
    out
}

pub fn print_literals(lits: &[PropLiteral]) -> String {
    let parts: Vec<String> = lits.iter().map(|l| print_term(&l.to_term())).collect();
    format!("({})", parts.join(", "))
}

fn assertion_body(a: &Assertion) -> String {
    let head = match &a.head {
        Term::Struct(name, args) if &**name == PLACEHOLDER => {
            let args: Vec<String> = args.iter().map(print_term).collect();
            format!("{PLACEHOLDER}({})", args.join(", "))
        }
        other => print_term(other),
    };
    let mut out = format!("{} pred {head}", a.status.keyword());
    if !a.pre.is_empty() {
        out.push_str(" : ");
        out.push_str(&print_literals(&a.pre));
    }
    if !a.post.is_empty() {
        out.push_str(" => ");
        out.push_str(&print_literals(&a.post));
    }
    out
}

pub fn print_assertion(a: &Assertion) -> String {
    format!(":- {}.", assertion_body(a))
}

pub fn print_predprop(pp: &PredProp) -> String {
    let mut out = String::from(":- predprop ");
    if pp.is_wrapper {
        out.push_str("wrapper ");
    }
    let _ = writeln!(
        out,
        "{}/1 on {} {{",
        atom_text(&pp.name),
        pp.described_arity
    );
    for a in &pp.anon {
        let _ = writeln!(out, "    {}.", assertion_body(a));
    }
    out.push_str("}.");
    out
}

/// Source text for a whole program: predprops, then assertions, then clauses.
pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for pp in p.predprops.values() {
        out.push_str(&print_predprop(pp));
        out.push('\n');
    }
    for a in &p.assertions {
        out.push_str(&print_assertion(a));
        out.push('\n');
    }
    for c in p.clauses() {
        out.push_str(&print_clause(c));
        out.push('\n');
    }
    out
}
