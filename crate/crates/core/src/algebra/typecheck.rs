use std::fmt;

use serde::{Deserialize, Serialize};

use super::catalog::{Catalog, Domain, TaskKind};
use super::expr::TaskExpr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Word,
    Sequence,
}

/// Type of a task: what it returns, whether it works on words or
/// sequences, and the domains it reads from and writes to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskSignature {
    pub kind: TaskKind,
    pub level: Level,
    pub input: Domain,
    /// Equal to `input` for predicates.
    pub output: Domain,
}

impl TaskSignature {
    pub fn is_word_relation(&self) -> bool {
        self.kind == TaskKind::Relation && self.level == Level::Word
    }

    pub fn is_word_predicate(&self) -> bool {
        self.kind == TaskKind::Predicate && self.level == Level::Word
    }

    pub fn is_sequential(&self) -> bool {
        self.level == Level::Sequence
    }
}

impl fmt::Display for TaskSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.level {
            Level::Word => "word",
            Level::Sequence => "sequence",
        };
        match self.kind {
            TaskKind::Predicate => write!(f, "({}, {level}) over {}", self.kind, self.input),
            TaskKind::Relation => write!(f, "({}, {level}) {} -> {}", self.kind, self.input, self.output),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("`{node}`: expected {expected}, found {found}")]
    Mismatch { node: String, expected: String, found: String },
    #[error("unknown atomic task `{0}`")]
    Unknown(String),
}

fn mismatch<T>(node: &TaskExpr, expected: impl Into<String>, found: &TaskSignature) -> Result<T, TypeError> {
    Err(TypeError::Mismatch { node: node.to_string(), expected: expected.into(), found: found.to_string() })
}

fn unify(node: &TaskExpr, what: &str, a: &Domain, b: &Domain) -> Result<Domain, TypeError> {
    a.unify(b).ok_or_else(|| TypeError::Mismatch {
        node: node.to_string(),
        expected: format!("{what} domains to agree"),
        found: format!("{a} vs {b}"),
    })
}

/// Infers the signature of `expr`.
///
/// `chain` composes two word-level relations or two sequential tasks. It
/// also accepts a word-level predicate applied to a word-level relation,
/// read existentially: `p(f)(x)` holds when some `y` in `f(x)` satisfies
/// `p`. Normalization produces that form for nested filters.
pub fn typecheck(expr: &TaskExpr, catalog: &Catalog) -> Result<TaskSignature, TypeError> {
    match expr {
        TaskExpr::Atomic(name) => {
            let spec = catalog.lookup(name).ok_or_else(|| TypeError::Unknown(name.to_string()))?;
            let output = match spec.kind {
                TaskKind::Predicate => spec.input.clone(),
                TaskKind::Relation => spec.output.clone(),
            };
            Ok(TaskSignature { kind: spec.kind, level: Level::Word, input: spec.input, output })
        }
        TaskExpr::Chain(outer, inner) => {
            let o = typecheck(outer, catalog)?;
            let i = typecheck(inner, catalog)?;
            if o.level != i.level {
                return mismatch(expr, format!("{} task inside `{outer}(..)`", describe_level(o.level)), &i);
            }
            if i.kind != TaskKind::Relation {
                return mismatch(expr, "a relation as the inner task of a chain", &i);
            }
            if o.level == Level::Sequence && o.kind != TaskKind::Relation {
                return mismatch(expr, "a sequential relation as the outer task", &o);
            }
            let mid = unify(expr, "chained", &o.input, &i.output)?;
            let input = if i.input == Domain::Any { mid.clone() } else { i.input.clone() };
            let output = match o.kind {
                TaskKind::Predicate => input.clone(),
                TaskKind::Relation if o.output == Domain::Any => mid,
                TaskKind::Relation => o.output.clone(),
            };
            Ok(TaskSignature { kind: o.kind, level: o.level, input, output })
        }
        TaskExpr::Union(a, b) | TaskExpr::Intersection(a, b) => {
            let sa = typecheck(a, catalog)?;
            let sb = typecheck(b, catalog)?;
            for s in [&sa, &sb] {
                if !s.is_word_relation() {
                    return mismatch(expr, "(relation, word) operands", s);
                }
            }
            let input = unify(expr, "input", &sa.input, &sb.input)?;
            let output = unify(expr, "output", &sa.output, &sb.output)?;
            Ok(TaskSignature { kind: TaskKind::Relation, level: Level::Word, input, output })
        }
        TaskExpr::LAnd(a, b) | TaskExpr::LOr(a, b) => {
            let sa = typecheck(a, catalog)?;
            let sb = typecheck(b, catalog)?;
            for s in [&sa, &sb] {
                if !s.is_word_predicate() {
                    return mismatch(expr, "(predicate, word) operands", s);
                }
            }
            let input = unify(expr, "input", &sa.input, &sb.input)?;
            Ok(TaskSignature { kind: TaskKind::Predicate, level: Level::Word, output: input.clone(), input })
        }
        TaskExpr::Map(body) => {
            let s = typecheck(body, catalog)?;
            if !s.is_word_relation() {
                return mismatch(expr, "a (relation, word) body", &s);
            }
            Ok(TaskSignature { kind: TaskKind::Relation, level: Level::Sequence, input: s.input, output: s.output })
        }
        TaskExpr::Filter(body) => {
            let s = typecheck(body, catalog)?;
            if !s.is_word_predicate() {
                return mismatch(expr, "a (predicate, word) body", &s);
            }
            Ok(TaskSignature { kind: TaskKind::Relation, level: Level::Sequence, output: s.input.clone(), input: s.input })
        }
        TaskExpr::MapFilter(m, p) => {
            let sm = typecheck(m, catalog)?;
            let sp = typecheck(p, catalog)?;
            if !sm.is_word_relation() {
                return mismatch(expr, "a (relation, word) map body", &sm);
            }
            if !sp.is_word_predicate() {
                return mismatch(expr, "a (predicate, word) filter body", &sp);
            }
            let input = unify(expr, "map and filter", &sm.input, &sp.input)?;
            let output = if sm.output == Domain::Any { input.clone() } else { sm.output };
            Ok(TaskSignature { kind: TaskKind::Relation, level: Level::Sequence, input, output })
        }
    }
}

fn describe_level(level: Level) -> &'static str {
    match level {
        Level::Word => "a word-level",
        Level::Sequence => "a sequential",
    }
}
