//! Parser for `.hopl` source: clauses, assertion directives and predprop
//! declarations.
//!
//! Errors are collected per clause; after an error the parser skips to the
//! next clause terminator and carries on.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::assertions::normalize_assertions;
use crate::builtins;
use crate::program::{
    Assertion, AssertionId, AssertionStatus, Origin, PredProp, Program, PropFlavor, PropLiteral,
    PLACEHOLDER,
};
use crate::span::SourceSpan;
use crate::term::{Clause, Goal, Sym, Term, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UnterminatedClause,
    UnknownDirective,
    Validation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseError {
    pub fn new(kind: ParseErrorKind, span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError {
            kind,
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{} error(s) while loading {}", .0.len(), .0.first().map(|e| e.span.file.to_string()).unwrap_or_default())]
pub struct ParseErrors(pub Vec<ParseError>);

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Atom { name: String, quoted: bool },
    Var(String),
    Int(i64),
    Punct(char),
    Sym(String),
    End,
    Eof,
    Error(String),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: SourceSpan,
}

const SYMBOL_CHARS: &str = "+-*/\\^<>=~:?@#&";

fn lex(text: &str, file: &Arc<str>) -> Vec<Token> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |c| c.0);

    while i < chars.len() {
        let (off, c) = chars[i];
        let start = (i, line, col);
        let advance = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i].1 == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i].1 != '\n' {
                advance(&mut i, &mut line, &mut col);
            }
            continue;
        }
        let tok = if c.is_ascii_lowercase() {
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                advance(&mut i, &mut line, &mut col);
            }
            Tok::Atom {
                name: text[off..byte_at(i)].to_string(),
                quoted: false,
            }
        } else if c.is_ascii_uppercase() || c == '_' {
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                advance(&mut i, &mut line, &mut col);
            }
            Tok::Var(text[off..byte_at(i)].to_string())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                advance(&mut i, &mut line, &mut col);
            }
            let digits = &text[off..byte_at(i)];
            match digits.parse::<i64>() {
                Ok(v) => Tok::Int(v),
                Err(_) => Tok::Error(format!("integer literal {digits} out of range")),
            }
        } else if c == '\'' {
            advance(&mut i, &mut line, &mut col);
            let mut name = String::new();
            let mut closed = false;
            let mut bad_escape = None;
            while i < chars.len() {
                let ch = chars[i].1;
                advance(&mut i, &mut line, &mut col);
                match ch {
                    '\'' => {
                        closed = true;
                        break;
                    }
                    '\\' if i < chars.len() => {
                        let e = chars[i].1;
                        advance(&mut i, &mut line, &mut col);
                        match e {
                            '\'' => name.push('\''),
                            '\\' => name.push('\\'),
                            'n' => name.push('\n'),
                            't' => name.push('\t'),
                            other => bad_escape = Some(other),
                        }
                    }
                    '\n' => break,
                    ch => name.push(ch),
                }
            }
            if !closed {
                Tok::Error("unterminated quoted atom".into())
            } else if let Some(e) = bad_escape {
                Tok::Error(format!("unknown escape sequence \\{e} in quoted atom"))
            } else {
                Tok::Atom { name, quoted: true }
            }
        } else if c == '[' && chars.get(i + 1).map(|c| c.1) == Some(']') {
            advance(&mut i, &mut line, &mut col);
            advance(&mut i, &mut line, &mut col);
            Tok::Atom {
                name: "[]".into(),
                quoted: false,
            }
        } else if "()[]{},|".contains(c) {
            advance(&mut i, &mut line, &mut col);
            Tok::Punct(c)
        } else if c == '.' {
            advance(&mut i, &mut line, &mut col);
            match chars.get(i).map(|c| c.1) {
                None => Tok::End,
                Some(n) if n.is_whitespace() || n == '%' => Tok::End,
                Some(n) => Tok::Error(format!("unexpected character '{n}' after '.'")),
            }
        } else if SYMBOL_CHARS.contains(c) {
            while i < chars.len() && SYMBOL_CHARS.contains(chars[i].1) {
                advance(&mut i, &mut line, &mut col);
            }
            Tok::Sym(text[off..byte_at(i)].to_string())
        } else {
            advance(&mut i, &mut line, &mut col);
            Tok::Error(format!("unexpected character '{c}'"))
        };
        let (_, l0, c0) = start;
        out.push(Token {
            tok,
            span: SourceSpan {
                file: file.clone(),
                line: l0,
                column: c0,
                length: byte_at(i) - off,
                offset: off,
            },
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan {
            file: file.clone(),
            line,
            column: col,
            length: 0,
            offset: text.len(),
        },
    });
    out
}

enum Item {
    Clause(Clause),
    Assertion(Assertion),
    PredProp(PredProp),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    vars: HashMap<String, VarId>,
    next_var: VarId,
    brace_depth: i32,
    next_assertion: AssertionId,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Parser {
            tokens,
            pos: 0,
            vars: HashMap::new(),
            next_var: 0,
            brace_depth: 0,
            next_assertion: 1,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        match t.tok {
            Tok::Punct('{') => self.brace_depth += 1,
            Tok::Punct('}') => self.brace_depth -= 1,
            _ => {}
        }
        t
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span.clone()
    }

    fn reset_scope(&mut self) {
        self.vars.clear();
        self.next_var = 0;
    }

    fn fresh_var(&mut self) -> Term {
        let id = self.next_var;
        self.next_var += 1;
        Term::var(id)
    }

    fn var(&mut self, name: &str) -> Term {
        if name == "_" {
            return self.fresh_var();
        }
        let id = match self.vars.get(name) {
            Some(id) => *id,
            None => {
                let id = self.next_var;
                self.next_var += 1;
                self.vars.insert(name.to_string(), id);
                id
            }
        };
        Term::named_var(id, name)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let t = self.peek();
        match &t.tok {
            Tok::Eof => ParseError::new(
                ParseErrorKind::UnterminatedClause,
                t.span.clone(),
                format!("unterminated clause: missing {expected} before end of input"),
            ),
            Tok::Error(msg) => {
                ParseError::new(ParseErrorKind::Lexical, t.span.clone(), msg.clone())
            }
            other => ParseError::new(
                ParseErrorKind::Syntax,
                t.span.clone(),
                format!("expected {expected}, found {}", describe(other)),
            ),
        }
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.peek().tok == Tok::Punct(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{c}'")))
        }
    }

    fn expect_end(&mut self) -> PResult<()> {
        if self.peek().tok == Tok::End {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected("'.'"))
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(&self.peek().tok, Tok::Sym(x) if x == s)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(&self.peek().tok, Tok::Atom { name, quoted: false } if name == w)
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.is_word(w) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{w}'")))
        }
    }

    fn expect_int(&mut self, what: &str) -> PResult<i64> {
        match self.peek().tok {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    /// Skips to just past the next clause terminator outside any braces.
    fn recover(&mut self) {
        loop {
            let t = self.bump();
            match t.tok {
                Tok::Eof => break,
                Tok::End if self.brace_depth <= 0 => break,
                _ => {}
            }
        }
        self.brace_depth = 0;
    }

    /// `term := primary [ '=' primary ]`
    fn term(&mut self) -> PResult<Term> {
        let left = self.primary()?;
        if self.is_sym("=") {
            self.bump();
            let right = self.primary()?;
            return Ok(Term::compound("=", vec![left, right]));
        }
        Ok(left)
    }

    /// Comma-separated terms folded into a right-nested `','/2`.
    fn conj(&mut self) -> PResult<Term> {
        let mut items = vec![self.term()?];
        while self.peek().tok == Tok::Punct(',') {
            self.bump();
            items.push(self.term()?);
        }
        let last = items.pop().unwrap();
        Ok(items
            .into_iter()
            .rev()
            .fold(last, |acc, t| Term::compound(",", vec![t, acc])))
    }

    fn arglist(&mut self) -> PResult<Vec<Term>> {
        let mut args = vec![self.term()?];
        loop {
            match self.peek().tok {
                Tok::Punct(',') => {
                    self.bump();
                    args.push(self.term()?);
                }
                Tok::Punct(')') => {
                    self.bump();
                    return Ok(args);
                }
                _ => return Err(self.unexpected("',' or ')'")),
            }
        }
    }

    fn primary(&mut self) -> PResult<Term> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Var(name) => {
                self.bump();
                Ok(self.var(&name))
            }
            Tok::Int(v) => {
                self.bump();
                Ok(Term::Int(v))
            }
            Tok::Sym(s) if s == "-" => {
                let next = self.peek_at(1).clone();
                match next.tok {
                    Tok::Int(v) if next.span.offset == t.span.offset + 1 => {
                        self.bump();
                        self.bump();
                        Ok(Term::Int(-v))
                    }
                    _ => Err(self.unexpected("a term")),
                }
            }
            Tok::Atom { name, .. } => {
                self.bump();
                let name: Sym = name.into();
                let adjacent_paren = self.peek().tok == Tok::Punct('(')
                    && self.peek().span.offset == t.span.offset + t.span.length;
                let args = if adjacent_paren {
                    self.bump();
                    self.arglist()?
                } else {
                    Vec::new()
                };
                if self.is_sym("~") {
                    let tilde = self.bump();
                    let n = self.expect_int("an arity after '~'")?;
                    let arity = usize::try_from(n).unwrap_or(0);
                    if arity == 0 || args.len() >= arity {
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            t.span.to(&tilde.span),
                            format!(
                                "partial application {}~{n} must leave at least one open argument",
                                crate::print::atom_text(&name)
                            ),
                        ));
                    }
                    return Ok(Term::PredRef {
                        name,
                        arity,
                        closed: args,
                    });
                }
                Ok(Term::app(name, args))
            }
            Tok::Punct('(') => {
                self.bump();
                let inner = self.conj()?;
                self.expect_punct(')')?;
                Ok(inner)
            }
            Tok::Punct('[') => {
                self.bump();
                let mut items = vec![self.term()?];
                loop {
                    match self.peek().tok {
                        Tok::Punct(',') => {
                            self.bump();
                            items.push(self.term()?);
                        }
                        Tok::Punct('|') => {
                            self.bump();
                            let tail = self.term()?;
                            self.expect_punct(']')?;
                            return Ok(Term::list_with_tail(items, tail));
                        }
                        Tok::Punct(']') => {
                            self.bump();
                            return Ok(Term::list(items));
                        }
                        _ => return Err(self.unexpected("',', '|' or ']'")),
                    }
                }
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    fn body_goal(&mut self, t: Term, span: &SourceSpan) -> PResult<Goal> {
        match t {
            Term::Var(_) => Ok(Goal::HOCall {
                callee: t,
                extra: Vec::new(),
            }),
            Term::Atom(_) | Term::Struct(..) => Ok(Goal::from_term(t)),
            other => Err(ParseError::new(
                ParseErrorKind::Syntax,
                span.clone(),
                format!(
                    "{} is not a callable goal",
                    crate::print::print_term(&other)
                ),
            )),
        }
    }

    fn item(&mut self) -> PResult<Item> {
        self.reset_scope();
        let start = self.peek().span.clone();
        if self.is_sym(":-") {
            self.bump();
            return self.directive(start);
        }
        let head = self.term()?;
        if !matches!(head, Term::Atom(_) | Term::Struct(..)) || is_operator_head(&head) {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                start.to(&self.prev_span()),
                format!(
                    "clause head {} must be an atom or compound term",
                    crate::print::print_term(&head)
                ),
            ));
        }
        let mut body = Vec::new();
        if self.is_sym(":-") {
            self.bump();
            loop {
                let gstart = self.peek().span.clone();
                let t = self.term()?;
                let gspan = gstart.to(&self.prev_span());
                for part in t.conjuncts() {
                    body.push(self.body_goal(part, &gspan)?);
                }
                if self.peek().tok == Tok::Punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_end()?;
        Ok(Item::Clause(Clause {
            head,
            body,
            span: start.to(&self.prev_span()),
        }))
    }

    fn directive(&mut self, start: SourceSpan) -> PResult<Item> {
        let word = match &self.peek().tok {
            Tok::Atom {
                name,
                quoted: false,
            } => name.clone(),
            _ => return Err(self.unexpected("a directive")),
        };
        if word == "predprop" {
            self.bump();
            return self.predprop(start);
        }
        let status = if word == "pred" {
            AssertionStatus::Check
        } else if let Some(s) = AssertionStatus::from_keyword(&word) {
            self.bump();
            s
        } else {
            let t = self.peek().span.clone();
            return Err(ParseError::new(
                ParseErrorKind::UnknownDirective,
                t,
                format!("unknown directive '{word}'"),
            ));
        };
        self.expect_word("pred")?;
        let head = self.term()?;
        let (pre, post) = self.conditions()?;
        self.expect_end()?;
        let id = self.next_assertion;
        self.next_assertion += 1;
        Ok(Item::Assertion(Assertion {
            id,
            status,
            head,
            pre,
            post,
            span: start.to(&self.prev_span()),
            origin: Origin::User,
        }))
    }

    /// `[':' conj] ['=>' conj]`
    fn conditions(&mut self) -> PResult<(Vec<PropLiteral>, Vec<PropLiteral>)> {
        let mut pre = Vec::new();
        let mut post = Vec::new();
        if self.is_sym(":") {
            self.bump();
            pre = self.literals()?;
        }
        if self.is_sym("=>") {
            self.bump();
            post = self.literals()?;
        }
        Ok((pre, post))
    }

    fn literals(&mut self) -> PResult<Vec<PropLiteral>> {
        let mut out = Vec::new();
        loop {
            let start = self.peek().span.clone();
            let t = self.term()?;
            let span = start.to(&self.prev_span());
            for part in t.conjuncts() {
                match part {
                    Term::Atom(name) => out.push(PropLiteral {
                        name,
                        args: Vec::new(),
                        flavor: PropFlavor::StateProp,
                        span: span.clone(),
                    }),
                    Term::Struct(name, args) => out.push(PropLiteral {
                        name,
                        args,
                        flavor: PropFlavor::StateProp,
                        span: span.clone(),
                    }),
                    other => {
                        return Err(ParseError::new(
                            ParseErrorKind::Syntax,
                            span,
                            format!(
                                "{} is not a property literal",
                                crate::print::print_term(&other)
                            ),
                        ))
                    }
                }
            }
            if self.peek().tok == Tok::Punct(',') {
                self.bump();
            } else {
                return Ok(out);
            }
        }
    }

    /// `predprop [wrapper] Name/1 on K { anon-assertion... }`
    fn predprop(&mut self, start: SourceSpan) -> PResult<Item> {
        let is_wrapper = if self.is_word("wrapper") {
            self.bump();
            true
        } else {
            false
        };
        let name: Sym = match &self.peek().tok {
            Tok::Atom { name, .. } => name.as_str().into(),
            _ => return Err(self.unexpected("a predprop name")),
        };
        self.bump();
        if !self.is_sym("/") {
            return Err(self.unexpected("'/'"));
        }
        self.bump();
        let arity_span = self.peek().span.clone();
        if self.expect_int("the property arity")? != 1 {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                arity_span,
                "a predprop is a property of one argument: declare it as Name/1",
            ));
        }
        self.expect_word("on")?;
        let k_span = self.peek().span.clone();
        let k = self.expect_int("the described arity")?;
        let described_arity = usize::try_from(k).map_err(|_| {
            ParseError::new(
                ParseErrorKind::Syntax,
                k_span,
                "described arity must be nonnegative",
            )
        })?;
        self.expect_punct('{')?;
        let origin = if is_wrapper {
            Origin::Wrapper(name.to_string())
        } else {
            Origin::Predprop(name.to_string())
        };
        let mut anon = Vec::new();
        while self.peek().tok != Tok::Punct('}') {
            anon.push(self.anon_assertion(origin.clone())?);
        }
        self.expect_punct('}')?;
        self.expect_end()?;
        let span = start.to(&self.prev_span());
        if anon.is_empty() {
            return Err(ParseError::new(
                ParseErrorKind::Syntax,
                span,
                format!("predprop {name}/1 declares no assertions"),
            ));
        }
        Ok(Item::PredProp(PredProp {
            name,
            described_arity,
            anon,
            is_wrapper,
            span,
        }))
    }

    fn anon_assertion(&mut self, origin: Origin) -> PResult<Assertion> {
        self.reset_scope();
        let start = self.peek().span.clone();
        let status = match &self.peek().tok {
            Tok::Atom {
                name,
                quoted: false,
            } if name != "pred" => match AssertionStatus::from_keyword(name) {
                Some(s) => {
                    self.bump();
                    s
                }
                None => return Err(self.unexpected("'pred' or an assertion status")),
            },
            _ => AssertionStatus::Check,
        };
        self.expect_word("pred")?;
        if self.peek().tok != Tok::Var(PLACEHOLDER.into()) {
            return Err(self.unexpected("the placeholder '_'"));
        }
        let ph = self.bump();
        let adjacent = self.peek().tok == Tok::Punct('(')
            && self.peek().span.offset == ph.span.offset + ph.span.length;
        let args = if adjacent {
            self.bump();
            self.arglist()?
        } else {
            Vec::new()
        };
        let head = Term::app(PLACEHOLDER.into(), args);
        let (pre, post) = self.conditions()?;
        self.expect_end()?;
        let id = self.next_assertion;
        self.next_assertion += 1;
        Ok(Assertion {
            id,
            status,
            head,
            pre,
            post,
            span: start.to(&self.prev_span()),
            origin,
        })
    }
}

fn is_operator_head(t: &Term) -> bool {
    matches!(t, Term::Struct(f, args) if (&**f == "," || &**f == "=") && args.len() == 2)
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Atom { name, .. } => format!("atom {}", crate::print::atom_text(name)),
        Tok::Var(v) => format!("variable {v}"),
        Tok::Int(i) => format!("integer {i}"),
        Tok::Punct(c) => format!("'{c}'"),
        Tok::Sym(s) => format!("'{s}'"),
        Tok::End => "'.'".into(),
        Tok::Eof => "end of input".into(),
        Tok::Error(m) => m.clone(),
    }
}

/// Parses a whole program and runs load-time validation and assertion
/// normalization. All independent errors are reported together.
pub fn parse_program(text: &str, origin: &str) -> Result<Program, ParseErrors> {
    let file: Arc<str> = origin.into();
    let mut parser = Parser::new(lex(text, &file));
    let mut errors = Vec::new();
    let mut items = Vec::new();
    while parser.peek().tok != Tok::Eof {
        match parser.item() {
            Ok(item) => items.push(item),
            Err(e) => {
                errors.push(e);
                parser.recover();
            }
        }
    }

    let mut program = Program::new(origin, text);
    for item in items {
        match item {
            Item::Clause(c) => program.add_clause(c),
            Item::Assertion(a) => program.add_assertion(a),
            Item::PredProp(pp) => {
                if let Some(prev) = program.predprop(&pp.name) {
                    errors.push(ParseError::new(
                        ParseErrorKind::Validation,
                        pp.span.clone(),
                        format!(
                            "predprop {}/1 is already declared at {}",
                            pp.name, prev.span
                        ),
                    ));
                } else {
                    program.add_predprop(pp);
                }
            }
        }
    }
    errors.extend(validate_structure(&program));
    if !errors.is_empty() {
        errors.sort_by_key(|e| e.span.offset);
        return Err(ParseErrors(errors));
    }
    normalize_assertions(program).map_err(|mut es| {
        es.sort_by_key(|e| e.span.offset);
        ParseErrors(es)
    })
}

fn validate_structure(p: &Program) -> Vec<ParseError> {
    let mut errors = Vec::new();
    let mut reported = HashSet::new();
    for c in p.clauses() {
        let key = c.key();
        if key.name.starts_with('$') {
            errors.push(ParseError::new(
                ParseErrorKind::Validation,
                c.span.clone(),
                format!("predicate names starting with '$' are reserved: {key}"),
            ));
        } else if builtins::is_builtin(&key) && reported.insert(key.clone()) {
            errors.push(ParseError::new(
                ParseErrorKind::Validation,
                c.span.clone(),
                format!("cannot redefine builtin predicate {key}"),
            ));
        }
    }
    for pp in p.predprops.values() {
        if p.defines(&pp.key()) {
            errors.push(ParseError::new(
                ParseErrorKind::Validation,
                pp.span.clone(),
                format!(
                    "predprop {} clashes with a predicate of the same name",
                    pp.key()
                ),
            ));
        }
        for a in &pp.anon {
            if a.head.args().len() != pp.described_arity {
                errors.push(ParseError::new(
                    ParseErrorKind::Validation,
                    a.span.clone(),
                    format!(
                        "assertion in predprop {}/1 has {} arguments but the predprop describes predicates of arity {}",
                        pp.name,
                        a.head.args().len(),
                        pp.described_arity
                    ),
                ));
            }
            if let Some(e) = check_head_vars(a) {
                errors.push(e);
            }
        }
    }
    for a in &p.assertions {
        let key = a.key();
        if key.name.starts_with('$') || &*key.name == PLACEHOLDER {
            errors.push(ParseError::new(
                ParseErrorKind::Validation,
                a.span.clone(),
                format!("assertion on reserved predicate name {key}"),
            ));
        } else if !p.defines(&key) {
            errors.push(ParseError::new(
                ParseErrorKind::Validation,
                a.span.clone(),
                format!("assertion on undefined predicate {key}"),
            ));
        }
        if let Some(e) = check_head_vars(a) {
            errors.push(e);
        }
    }
    errors
}

fn check_head_vars(a: &Assertion) -> Option<ParseError> {
    let mut seen = HashSet::new();
    for arg in a.head.args() {
        match arg {
            Term::Var(v) if seen.insert(v.id) => {}
            _ => {
                return Some(ParseError::new(
                    ParseErrorKind::Validation,
                    a.span.clone(),
                    format!(
                        "assertion head {} must have pairwise distinct variables as arguments",
                        crate::print::print_term(&a.head)
                    ),
                ))
            }
        }
    }
    None
}

/// Parses a single term, such as a goal given on the command line. A
/// top-level comma list becomes a conjunction; a trailing '.' is allowed.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let file: Arc<str> = "<term>".into();
    let mut parser = Parser::new(lex(text, &file));
    let t = parser.conj()?;
    if parser.peek().tok == Tok::End {
        parser.bump();
    }
    if parser.peek().tok != Tok::Eof {
        return Err(parser.unexpected("end of input"));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::print::print_term;
    use crate::term::is_variant;

    #[test]
    fn single_fact() {
        let p = parse_program("p(a).", "t.hopl").unwrap();
        assert_eq!(p.clauses().len(), 1);
        assert_eq!(
            p.clauses()[0].head,
            Term::compound("p", vec![Term::atom("a")])
        );
        assert!(p.clauses()[0].body.is_empty());
    }

    #[test]
    fn assertion_with_pre_and_post() {
        let src = "int_transformer_ok(X, Y) :- Y = X.\n\
                   :- predprop int_transformer/1 on 2 { pred _(X, Y) : int(X) => int(Y). }.\n\
                   map([], _, []).\n\
                   :- check pred map(L,P,R) : (list(L), int_transformer(P)) => list(R).";
        let p = parse_program(src, "t.hopl").unwrap();
        assert_eq!(p.assertions.len(), 1);
        let a = &p.assertions[0];
        assert_eq!(a.status, AssertionStatus::Check);
        assert_eq!(a.pre.len(), 2);
        assert_eq!(a.post.len(), 1);
        assert_eq!(
            a.pre[1].flavor,
            PropFlavor::Predprop("int_transformer".into())
        );
        let printed = crate::print::print_assertion(a);
        assert_eq!(
            printed,
            ":- check pred map(L, P, R) : (list(L), int_transformer(P)) => (list(R))."
        );
    }

    #[test]
    fn missing_terminator() {
        let errs = parse_program("p(a", "t.hopl").unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].kind, ParseErrorKind::UnterminatedClause);
        assert_eq!(errs[0].span.line, 1);
        assert!(errs[0].message.contains("missing"), "{}", errs[0].message);
    }

    #[test]
    fn reports_every_clause_error() {
        let src = "p(a.\nq(b).\nr(.\ns(c).\n:- frobnicate foo.\n";
        let errs = parse_program(src, "t.hopl").unwrap_err().0;
        let lines: Vec<usize> = errs.iter().map(|e| e.span.line).collect();
        assert_eq!(lines, vec![1, 3, 5]);
        assert_eq!(errs[2].kind, ParseErrorKind::UnknownDirective);
    }

    #[test]
    fn parse_term_cases() {
        let t = parse_term("f(X, g(a))").unwrap();
        assert!(matches!(&t, Term::Struct(f, args) if &**f == "f" && args.len() == 2));
        assert_eq!(
            parse_term("add(1)~3").unwrap(),
            Term::pred_ref("add", 3, vec![Term::int(1)])
        );
        assert_eq!(
            parse_term("cmp~3").unwrap(),
            Term::pred_ref("cmp", 3, vec![])
        );
        assert!(parse_term("f(").is_err());
        assert!(parse_term("add(1,2,3)~3").is_err());
        assert!(parse_term("f~0").is_err());
    }

    #[test]
    fn term_round_trip_samples() {
        for s in [
            "f(X, g(a))",
            "[1, 2 | T]",
            "'$wrap_1'~3",
            "(p(X), X = b)",
            "f((a = b), -3)",
            "'hello world'(x)",
            "[]",
            "add(f(Y), [Y])~4",
        ] {
            let t = parse_term(s).unwrap();
            let back = parse_term(&print_term(&t)).unwrap();
            assert!(is_variant(&t, &back), "{s} -> {}", print_term(&t));
        }
    }

    #[test]
    fn rejects_reserved_and_builtin_heads() {
        let errs = parse_program("'$x'(a).\nint(3).\n", "t.hopl")
            .unwrap_err()
            .0;
        assert_eq!(errs.len(), 2);
        assert!(errs[0].message.contains("reserved"));
        assert!(errs[1].message.contains("builtin"));
    }

    #[test]
    fn undefined_predprop_reference() {
        let src = "sort(_, _, _).\n:- check pred sort(L, P, S) : comparator(P).\n";
        let errs = parse_program(src, "t.hopl").unwrap_err().0;
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].span.line, 2);
        assert!(errs[0].message.contains("comparator/1"));
    }

    #[test]
    fn predprop_declaration() {
        let src = ":- predprop wrapper cmp_ok/1 on 3 {\n  pred _(X, Y, O) : (int(X), int(Y)) => atm(O).\n  trust pred _(X, Y, O).\n}.\n";
        let p = parse_program(src, "t.hopl").unwrap();
        let pp = p.predprop("cmp_ok").unwrap();
        assert!(pp.is_wrapper);
        assert_eq!(pp.described_arity, 3);
        assert_eq!(pp.anon.len(), 2);
        assert_eq!(pp.anon[0].origin, Origin::Wrapper("cmp_ok".into()));
        assert_eq!(pp.anon[1].status, AssertionStatus::Trust);
        assert_eq!(pp.span.line, 1);
    }

    #[test]
    fn predprop_head_arity_must_match() {
        let src = ":- predprop bad/1 on 2 { pred _(X) : int(X). }.\n";
        let errs = parse_program(src, "t.hopl").unwrap_err().0;
        assert!(errs[0].message.contains("arity 2"), "{}", errs[0].message);
    }

    #[test]
    fn spans_are_within_input() {
        let src = "p(a).\n% comment\nq(X) :-\n    p(X),\n    X = a.\n";
        let p = parse_program(src, "t.hopl").unwrap();
        let q = &p.clauses()[1];
        assert_eq!((q.span.line, q.span.column), (3, 1));
        assert_eq!(
            &src[q.span.offset..q.span.offset + q.span.length],
            "q(X) :-\n    p(X),\n    X = a."
        );
    }

    #[test]
    fn variable_goal_is_higher_order_call() {
        let p = parse_program("run(G) :- G.\n", "t.hopl").unwrap();
        assert!(
            matches!(p.clauses()[0].body[0], Goal::HOCall { ref extra, .. } if extra.is_empty())
        );
    }
}
