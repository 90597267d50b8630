//! Evaluator for the SPARQL subset the compiler emits.
//!
//! Supported: `PREFIX` lines (names are kept opaque), `SELECT [DISTINCT]
//! ?v.. WHERE { .. }`, triple patterns, nested groups joined by `UNION`,
//! `BIND( e AS ?v )` and `FILTER( e )` where `e` is built from variables,
//! `true`/`false`, `!`, `&&`, `||` and parentheses. Within a group all
//! patterns are joined first and the `BIND`/`FILTER` clauses then run in
//! source order, so a leading `BIND` sees its operands.

use std::collections::BTreeMap;

use super::{Binding, BindingSet};
use crate::knowledge::triples::{TripleStore, FALSE_LITERAL, TRUE_LITERAL};
use crate::knowledge::StoreError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Term {
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq)]
enum Expr {
    Var(String),
    Lit(bool),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Element {
    Triple(Term, Term, Term),
    /// One or more groups joined by UNION.
    Union(Vec<Group>),
    Bind(Expr, String),
    Filter(Expr),
}

#[derive(Clone, Debug, PartialEq, Default)]
struct Group(Vec<Element>);

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedQuery {
    select: Vec<String>,
    pattern: Group,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Var(String),
    Iri(String),
    Lit(String),
    Sym(&'static str),
}

fn unsupported(msg: impl Into<String>) -> StoreError {
    StoreError::Unsupported(msg.into())
}

fn lex(text: &str) -> Result<Vec<Tok>, StoreError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        if two == "||" || two == "&&" {
            out.push(Tok::Sym(if two == "||" { "||" } else { "&&" }));
            i += 2;
            continue;
        }
        let sym = match c {
            '{' => Some("{"),
            '}' => Some("}"),
            '(' => Some("("),
            ')' => Some(")"),
            '!' => Some("!"),
            '*' => Some("*"),
            _ => None,
        };
        if let Some(s) = sym {
            out.push(Tok::Sym(s));
            i += 1;
            continue;
        }
        let read_until = |start: usize, end: char| -> Result<(String, usize), StoreError> {
            let mut j = start;
            while j < chars.len() && chars[j] != end {
                j += 1;
            }
            if j == chars.len() {
                return Err(unsupported(format!("unterminated `{end}`")));
            }
            Ok((chars[start..j].iter().collect(), j + 1))
        };
        match c {
            '<' => {
                let (s, next) = read_until(i + 1, '>')?;
                out.push(Tok::Iri(s));
                i = next;
            }
            '"' => {
                let (s, next) = read_until(i + 1, '"')?;
                out.push(Tok::Lit(s));
                i = next;
            }
            '?' | '$' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                out.push(Tok::Var(chars[i + 1..j].iter().collect()));
                i = j;
            }
            _ => {
                let mut j = i;
                while j < chars.len() && !chars[j].is_whitespace() && !"{}()!<\"".contains(chars[j]) {
                    if chars[j] == '.' && (j + 1 == chars.len() || chars[j + 1].is_whitespace() || chars[j + 1] == '}') {
                        break;
                    }
                    j += 1;
                }
                if j == i {
                    // lone '.'
                    out.push(Tok::Sym("."));
                    i += 1;
                } else {
                    out.push(Tok::Word(chars[i..j].iter().collect()));
                    i = j;
                }
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), StoreError> {
        match self.next() {
            Some(Tok::Sym(t)) if t == s => Ok(()),
            other => Err(unsupported(format!("expected `{s}`, found {other:?}"))),
        }
    }

    fn query(&mut self) -> Result<ParsedQuery, StoreError> {
        while self.keyword("PREFIX") {
            self.pos += 1;
            match (self.next(), self.next()) {
                (Some(Tok::Word(_)), Some(Tok::Iri(_))) => {}
                _ => return Err(unsupported("malformed PREFIX")),
            }
        }
        if !self.keyword("SELECT") {
            return Err(unsupported("only SELECT queries are supported"));
        }
        self.pos += 1;
        if self.keyword("DISTINCT") {
            self.pos += 1;
        }
        let mut select = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Var(v)) => {
                    select.push(v.clone());
                    self.pos += 1;
                }
                Some(Tok::Sym("*")) => {
                    self.pos += 1;
                }
                _ => break,
            }
        }
        if !self.keyword("WHERE") {
            return Err(unsupported("expected WHERE"));
        }
        self.pos += 1;
        let pattern = self.group()?;
        if self.pos != self.toks.len() {
            return Err(unsupported("trailing tokens after the WHERE clause (solution modifiers are not supported)"));
        }
        Ok(ParsedQuery { select, pattern })
    }

    fn term(&mut self) -> Result<Term, StoreError> {
        match self.next() {
            Some(Tok::Var(v)) => Ok(Term::Var(v)),
            Some(Tok::Iri(s)) | Some(Tok::Lit(s)) | Some(Tok::Word(s)) => Ok(Term::Const(s)),
            other => Err(unsupported(format!("expected a term, found {other:?}"))),
        }
    }

    fn group(&mut self) -> Result<Group, StoreError> {
        self.expect_sym("{")?;
        let mut elems = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Sym("}")) => {
                    self.pos += 1;
                    return Ok(Group(elems));
                }
                Some(Tok::Sym("{")) => {
                    let mut branches = vec![self.group()?];
                    while self.keyword("UNION") {
                        self.pos += 1;
                        branches.push(self.group()?);
                    }
                    elems.push(Element::Union(branches));
                }
                Some(Tok::Sym(".")) => {
                    self.pos += 1;
                }
                _ if self.keyword("BIND") => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let e = self.expr()?;
                    if !self.keyword("AS") {
                        return Err(unsupported("expected AS in BIND"));
                    }
                    self.pos += 1;
                    let Some(Tok::Var(v)) = self.next() else {
                        return Err(unsupported("BIND target must be a variable"));
                    };
                    self.expect_sym(")")?;
                    elems.push(Element::Bind(e, v));
                }
                _ if self.keyword("FILTER") => {
                    self.pos += 1;
                    self.expect_sym("(")?;
                    let e = self.expr()?;
                    self.expect_sym(")")?;
                    elems.push(Element::Filter(e));
                }
                None => return Err(unsupported("unterminated group")),
                _ => {
                    let s = self.term()?;
                    let p = self.term()?;
                    let o = self.term()?;
                    elems.push(Element::Triple(s, p, o));
                }
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, StoreError> {
        let mut lhs = self.conj()?;
        while matches!(self.peek(), Some(Tok::Sym("||"))) {
            self.pos += 1;
            lhs = Expr::Or(Box::new(lhs), Box::new(self.conj()?));
        }
        Ok(lhs)
    }

    fn conj(&mut self) -> Result<Expr, StoreError> {
        let mut lhs = self.unary()?;
        while matches!(self.peek(), Some(Tok::Sym("&&"))) {
            self.pos += 1;
            lhs = Expr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, StoreError> {
        match self.next() {
            Some(Tok::Sym("!")) => Ok(Expr::Not(Box::new(self.unary()?))),
            Some(Tok::Sym("(")) => {
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Some(Tok::Var(v)) => Ok(Expr::Var(v)),
            Some(Tok::Word(w)) if w == TRUE_LITERAL => Ok(Expr::Lit(true)),
            Some(Tok::Word(w)) if w == FALSE_LITERAL => Ok(Expr::Lit(false)),
            other => Err(unsupported(format!("unsupported expression token {other:?}"))),
        }
    }
}

/// Parses query text into the supported algebra.
pub fn parse_query(text: &str) -> Result<ParsedQuery, StoreError> {
    Parser { toks: lex(text)?, pos: 0 }.query()
}

/// `None` is an evaluation error (unbound or non-boolean operand).
fn eval_expr(e: &Expr, b: &Binding) -> Option<bool> {
    match e {
        Expr::Lit(v) => Some(*v),
        Expr::Var(v) => match b.get(v).map(String::as_str) {
            Some(TRUE_LITERAL) => Some(true),
            Some(FALSE_LITERAL) => Some(false),
            _ => None,
        },
        Expr::Not(inner) => eval_expr(inner, b).map(|v| !v),
        Expr::And(l, r) => match (eval_expr(l, b), eval_expr(r, b)) {
            (Some(false), _) | (_, Some(false)) => Some(false),
            (Some(true), Some(true)) => Some(true),
            _ => None,
        },
        Expr::Or(l, r) => match (eval_expr(l, b), eval_expr(r, b)) {
            (Some(true), _) | (_, Some(true)) => Some(true),
            (Some(false), Some(false)) => Some(false),
            _ => None,
        },
    }
}

fn bind_term(term: &Term, value: &str, b: &mut Binding) -> bool {
    match term {
        Term::Const(c) => c == value,
        Term::Var(v) => match b.get(v) {
            Some(existing) => existing == value,
            None => {
                b.insert(v.clone(), value.to_string());
                true
            }
        },
    }
}

fn resolved<'a>(term: &'a Term, b: &'a Binding) -> Option<&'a str> {
    match term {
        Term::Const(c) => Some(c),
        Term::Var(v) => b.get(v).map(String::as_str),
    }
}

fn match_triple(store: &TripleStore, s: &Term, p: &Term, o: &Term, b: &Binding) -> Vec<Binding> {
    let mut candidates: Vec<(String, String, String)> = Vec::new();
    match resolved(p, b) {
        Some(prop) if store.is_predicate_property(prop) => {
            let subjects: Vec<&str> = match resolved(s, b) {
                Some(id) if store.is_entity(id) => vec![id],
                Some(_) => vec![],
                None => store.entities().iter().map(String::as_str).collect(),
            };
            for id in subjects {
                let v = if store.holds(prop, id) { TRUE_LITERAL } else { FALSE_LITERAL };
                candidates.push((id.to_string(), prop.to_string(), v.to_string()));
            }
        }
        Some(prop) => match (resolved(s, b), resolved(o, b)) {
            (Some(subj), _) => {
                candidates.extend(store.objects(prop, subj).map(|obj| (subj.to_string(), prop.to_string(), obj.to_string())))
            }
            (None, Some(obj)) => {
                candidates.extend(store.subjects(prop, obj).map(|subj| (subj.to_string(), prop.to_string(), obj.to_string())))
            }
            (None, None) => candidates.extend(
                store.triples().filter(|t| t.1 == prop).map(|(a, p, c)| (a.to_string(), p.to_string(), c.to_string())),
            ),
        },
        None => candidates.extend(store.triples().map(|(a, p, c)| (a.to_string(), p.to_string(), c.to_string()))),
    }
    candidates
        .into_iter()
        .filter_map(|(cs, cp, co)| {
            let mut nb = b.clone();
            (bind_term(s, &cs, &mut nb) && bind_term(p, &cp, &mut nb) && bind_term(o, &co, &mut nb)).then_some(nb)
        })
        .collect()
}

fn compatible_merge(a: &Binding, b: &Binding) -> Option<Binding> {
    let mut out = a.clone();
    for (k, v) in b {
        match out.get(k) {
            Some(existing) if existing != v => return None,
            _ => {
                out.insert(k.clone(), v.clone());
            }
        }
    }
    Some(out)
}

fn eval_group(store: &TripleStore, group: &Group) -> Result<Vec<Binding>, StoreError> {
    let mut sols = vec![Binding::new()];
    for el in &group.0 {
        match el {
            Element::Triple(s, p, o) => {
                sols = sols.iter().flat_map(|b| match_triple(store, s, p, o, b)).collect();
            }
            Element::Union(branches) => {
                let mut right = Vec::new();
                for g in branches {
                    right.extend(eval_group(store, g)?);
                }
                sols = sols.iter().flat_map(|l| right.iter().filter_map(move |r| compatible_merge(l, r))).collect();
            }
            Element::Bind(..) | Element::Filter(_) => {}
        }
    }
    for el in &group.0 {
        match el {
            Element::Bind(e, var) => {
                for b in &mut sols {
                    if b.contains_key(var) {
                        return Err(unsupported(format!("BIND target ?{var} is already bound")));
                    }
                    if let Some(v) = eval_expr(e, b) {
                        b.insert(var.clone(), if v { TRUE_LITERAL } else { FALSE_LITERAL }.to_string());
                    }
                }
            }
            Element::Filter(e) => sols.retain(|b| eval_expr(e, b) == Some(true)),
            _ => {}
        }
    }
    Ok(sols)
}

/// Runs a parsed query, projecting onto the selected variables (all
/// variables for `SELECT *`). Solutions are returned as a set.
pub fn execute_parsed(store: &TripleStore, q: &ParsedQuery) -> Result<BindingSet, StoreError> {
    let sols = eval_group(store, &q.pattern)?;
    Ok(sols
        .into_iter()
        .map(|b| {
            if q.select.is_empty() {
                b
            } else {
                b.into_iter().filter(|(k, _)| q.select.contains(k)).collect::<BTreeMap<_, _>>()
            }
        })
        .collect())
}

pub fn execute_local(store: &TripleStore, text: &str) -> Result<BindingSet, StoreError> {
    execute_parsed(store, &parse_query(text)?)
}
