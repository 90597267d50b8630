//! DSL parser.
//!
//! ```text
//! expr    := primary ( "(" expr ")" )*          f(g) chains g into f
//! primary := ("union" | "intersection" | "land" | "lor") "(" expr "," expr ")"
//!          | "map" "{" body "}"
//!          | "filter" "{" body "}"
//!          | "map-filter" "{" body "," body "}"
//!          | "(" expr ")"
//!          | atomic
//! body    := ("λ" | "\") ident "." expr | expr
//! atomic  := (ident | quoted) ( "[" tag "]" )*
//! tag     := lang | lang "->" lang | "inv"
//! ```
//!
//! Whitespace is insignificant. Inside a lambda body the bound variable
//! stands for the identity, so `map{λx. f(x)}` and `map{f}` parse to the
//! same tree.

use super::catalog::{is_ident_char, AtomicName, Catalog, LangTag, TaskKind};
use super::expr::TaskExpr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown atomic task `{name}` at byte {offset}")]
    UnknownAtomic { name: String, offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Quoted(String),
    Tag(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Dot,
    Lambda,
}

fn describe(tok: Option<&(Tok, usize)>) -> String {
    match tok.map(|t| &t.0) {
        None => "end of input".into(),
        Some(Tok::Ident(s)) => format!("`{s}`"),
        Some(Tok::Quoted(s)) => format!("\"{s}\""),
        Some(Tok::Tag(s)) => format!("`[{s}]`"),
        Some(Tok::LParen) => "`(`".into(),
        Some(Tok::RParen) => "`)`".into(),
        Some(Tok::LBrace) => "`{`".into(),
        Some(Tok::RBrace) => "`}`".into(),
        Some(Tok::Comma) => "`,`".into(),
        Some(Tok::Dot) => "`.`".into(),
        Some(Tok::Lambda) => "`λ`".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            'λ' | '\\' => Some(Tok::Lambda),
            _ => None,
        };
        if let Some(tok) = single {
            toks.push((tok, i));
            chars.next();
            continue;
        }
        if c.is_whitespace() {
            chars.next();
        } else if c == '[' {
            let close = src[i..].find(']').ok_or(ParseError::Syntax { offset: i, message: "unterminated `[`".into() })?;
            toks.push((Tok::Tag(src[i + 1..i + close].trim().to_string()), i));
            while chars.peek().is_some_and(|&(j, _)| j <= i + close) {
                chars.next();
            }
        } else if c == '"' {
            let close = src[i + 1..].find('"').ok_or(ParseError::Syntax { offset: i, message: "unterminated quote".into() })?;
            toks.push((Tok::Quoted(src[i + 1..i + 1 + close].to_string()), i));
            while chars.peek().is_some_and(|&(j, _)| j <= i + 1 + close) {
                chars.next();
            }
        } else if is_ident_char(c) {
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if !is_ident_char(d) {
                    break;
                }
                end = j + d.len_utf8();
                chars.next();
            }
            toks.push((Tok::Ident(src[i..end].to_string()), i));
        } else {
            return Err(ParseError::Syntax { offset: i, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(toks)
}

enum Node {
    /// The lambda-bound variable.
    Var,
    Expr(TaskExpr),
}

impl Node {
    fn into_expr(self) -> TaskExpr {
        match self {
            Node::Var => TaskExpr::identity(),
            Node::Expr(e) => e,
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    len: usize,
    catalog: &'a Catalog,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Tok> {
        self.toks.get(self.pos + ahead).map(|t| &t.0)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.1)
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: format!("expected {expected}, found {}", describe(self.toks.get(self.pos))),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn expr(&mut self, bound: Option<&str>) -> Result<Node, ParseError> {
        let mut node = self.primary(bound)?;
        while self.peek() == Some(&Tok::LParen) {
            let at = self.offset();
            self.pos += 1;
            let arg = self.expr(bound)?;
            self.expect(Tok::RParen, "`)`")?;
            node = match (node, arg) {
                (Node::Var, _) => {
                    return Err(ParseError::Syntax { offset: at, message: "the bound variable cannot be applied".into() })
                }
                (f, Node::Var) => f,
                (Node::Expr(f), Node::Expr(a)) => Node::Expr(TaskExpr::chain(f, a)),
            };
        }
        Ok(node)
    }

    fn body(&mut self, bound: Option<&str>) -> Result<TaskExpr, ParseError> {
        if self.peek() == Some(&Tok::Lambda) {
            self.pos += 1;
            let var = match self.peek() {
                Some(Tok::Ident(v)) => v.clone(),
                _ => return self.error("a variable name after `λ`"),
            };
            self.pos += 1;
            self.expect(Tok::Dot, "`.`")?;
            return Ok(self.expr(Some(&var))?.into_expr());
        }
        Ok(self.expr(bound)?.into_expr())
    }

    fn primary(&mut self, bound: Option<&str>) -> Result<Node, ParseError> {
        let start = self.offset();
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr(bound)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Tok::Ident(word)) => {
                let next = self.peek_at(1);
                let binary = match word.as_str() {
                    "union" => Some(TaskExpr::union as fn(TaskExpr, TaskExpr) -> TaskExpr),
                    "intersection" => Some(TaskExpr::intersection as fn(_, _) -> _),
                    "land" => Some(TaskExpr::land as fn(_, _) -> _),
                    "lor" => Some(TaskExpr::lor as fn(_, _) -> _),
                    _ => None,
                };
                if let (Some(build), Some(Tok::LParen)) = (binary, next) {
                    self.pos += 2;
                    let a = self.expr(bound)?.into_expr();
                    self.expect(Tok::Comma, "`,`")?;
                    let b = self.expr(bound)?.into_expr();
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Node::Expr(build(a, b)));
                }
                if next == Some(&Tok::LBrace) {
                    match word.as_str() {
                        "map" | "filter" => {
                            self.pos += 2;
                            let body = self.body(bound)?;
                            self.expect(Tok::RBrace, "`}`")?;
                            return Ok(Node::Expr(if word == "map" { TaskExpr::map(body) } else { TaskExpr::filter(body) }));
                        }
                        "map-filter" => {
                            self.pos += 2;
                            let m = self.body(bound)?;
                            self.expect(Tok::Comma, "`,`")?;
                            let p = self.body(bound)?;
                            self.expect(Tok::RBrace, "`}`")?;
                            return Ok(Node::Expr(TaskExpr::map_filter(m, p)));
                        }
                        _ => {}
                    }
                }
                if Some(word.as_str()) == bound && !matches!(next, Some(Tok::Tag(_))) {
                    self.pos += 1;
                    return Ok(Node::Var);
                }
                self.pos += 1;
                self.atomic(word, start).map(Node::Expr)
            }
            Some(Tok::Quoted(printed)) => {
                self.pos += 1;
                let dsl = self.catalog.dsl_name(printed.trim());
                self.atomic(dsl, start).map(Node::Expr)
            }
            _ => self.error("a task expression"),
        }
    }

    fn atomic(&mut self, base: String, start: usize) -> Result<TaskExpr, ParseError> {
        if !self.catalog.has_base(&base) {
            return Err(ParseError::UnknownAtomic { name: base, offset: start });
        }
        let mut name = AtomicName::new(base);
        while let Some(Tok::Tag(tag)) = self.peek().cloned() {
            let at = self.offset();
            if tag == "inv" {
                name.inverted = true;
            } else {
                match LangTag::parse(&tag) {
                    Some(lang) if name.lang.is_none() => name.lang = Some(lang),
                    _ => return Err(ParseError::Syntax { offset: at, message: format!("bad tag `[{tag}]`") }),
                }
            }
            self.pos += 1;
        }
        if name.lang.is_none() && self.catalog.lookup(&name).is_none() {
            // An untagged name stands for its only tagged variant.
            let mut tagged = self.catalog.tasks().filter(|t| t.name.base == name.base && t.name.lang.is_some());
            if let (Some(only), None) = (tagged.next(), tagged.next()) {
                name.lang = only.name.lang.clone();
            }
        }
        match self.catalog.lookup(&name) {
            Some(spec) if name.inverted && spec.kind == TaskKind::Predicate => Err(ParseError::Syntax {
                offset: start,
                message: format!("predicate `{}` cannot be inverted", name.forward()),
            }),
            Some(_) => Ok(TaskExpr::Atomic(name)),
            None => {
                let forward_is_pred = name.inverted
                    && self.catalog.lookup(&name.forward()).is_some_and(|s| s.kind == TaskKind::Predicate);
                if forward_is_pred {
                    Err(ParseError::Syntax {
                        offset: start,
                        message: format!("predicate `{}` cannot be inverted", name.forward()),
                    })
                } else {
                    Err(ParseError::UnknownAtomic { name: name.to_string(), offset: start })
                }
            }
        }
    }
}

/// Parses DSL text into a task tree, resolving atomic names against `catalog`.
pub fn parse(source: &str, catalog: &Catalog) -> Result<TaskExpr, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser { toks, pos: 0, len: source.len(), catalog };
    let expr = parser.expr(None)?.into_expr();
    if parser.pos != parser.toks.len() {
        return parser.error("end of input");
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> Result<TaskExpr, ParseError> {
        parse(src, &Catalog::paper())
    }

    fn atom(key: &str) -> TaskExpr {
        TaskExpr::Atomic(AtomicName::parse_key(key).unwrap())
    }

    #[test]
    fn union_of_parents() {
        assert_eq!(p("union(mother, father)").unwrap(), TaskExpr::union(atom("mother"), atom("father")));
    }

    #[test]
    fn single_atomic() {
        assert_eq!(p("father").unwrap(), atom("father"));
    }

    #[test]
    fn lambda_sugar() {
        let expected = TaskExpr::map(atom("synonyms[eng]"));
        assert_eq!(p("map{λx. synonyms[eng](x)}").unwrap(), expected);
        assert_eq!(p("map{λx. synonyms[eng]}").unwrap(), expected);
        assert_eq!(p("map{synonyms[eng]}").unwrap(), expected);
        assert_eq!(p("map{\\w.synonyms[eng](w)}").unwrap(), expected);
    }

    #[test]
    fn nested_lambda_application_chains() {
        let e = p("map{λx.occupation(father(x))}").unwrap();
        assert_eq!(e, TaskExpr::map(TaskExpr::chain(atom("occupation"), atom("father"))));
        let e = p("map{λx.occupation(x)}(map{λx. father(x)})").unwrap();
        assert_eq!(e, TaskExpr::chain(TaskExpr::map(atom("occupation")), TaskExpr::map(atom("father"))));
    }

    #[test]
    fn bound_variable_alone_is_identity() {
        assert_eq!(p("map-filter{λx.x, λx.true}").unwrap(), TaskExpr::map_filter(TaskExpr::identity(), TaskExpr::const_true()));
    }

    #[test]
    fn quoted_printed_names() {
        assert_eq!(p("mother(\"head of state\")").unwrap(), TaskExpr::chain(atom("mother"), atom("head-of-state")));
        assert_eq!(p("child [ inv ]").unwrap(), atom("child[inv]"));
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(p("  land ( is-occupation-actor ,is-birthplace-nyc )  ").unwrap(), p("land(is-occupation-actor, is-birthplace-nyc)").unwrap());
    }

    #[test]
    fn unknown_atomic_names_identifier() {
        let err = p("union(mother, grandfather)").unwrap_err();
        assert_eq!(err, ParseError::UnknownAtomic { name: "grandfather".into(), offset: 14 });
        let err = p("synonyms[fra]").unwrap_err();
        assert!(matches!(err, ParseError::UnknownAtomic { ref name, .. } if name == "synonyms[fra]"));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert!(matches!(p("union(mother father)").unwrap_err(), ParseError::Syntax { offset: 13, .. }));
        assert!(matches!(p("map{mother").unwrap_err(), ParseError::Syntax { offset: 10, .. }));
        assert!(matches!(p("mother)").unwrap_err(), ParseError::Syntax { offset: 6, .. }));
        assert!(matches!(p("").unwrap_err(), ParseError::Syntax { offset: 0, .. }));
        assert!(matches!(p("mother $").unwrap_err(), ParseError::Syntax { offset: 7, .. }));
    }

    #[test]
    fn inverted_predicate_rejected() {
        assert!(matches!(p("is-instance-human[inv]").unwrap_err(), ParseError::Syntax { .. }));
    }
}
