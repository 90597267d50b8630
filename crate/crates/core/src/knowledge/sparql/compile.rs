//! Compiles word-level factual tasks into SPARQL.
//!
//! `fragment(T, in, out)` follows one rule per operator:
//!
//! | task                  | fragment                                      |
//! |-----------------------|-----------------------------------------------|
//! | `A(x)`                | `?x A ?y .`                                   |
//! | `union(T1, T2)`       | `{ frag(T1, y) } UNION { frag(T2, y) }`       |
//! | `intersection(T1,T2)` | `frag(T1, y) frag(T2, y)`                     |
//! | `lor(T1, T2)`         | `BIND( ?y1 \|\| ?y2 AS ?y ) frag(T1, y1) frag(T2, y2)` |
//! | `land(T1, T2)`        | `BIND( ?y1 && ?y2 AS ?y ) frag(T1, y1) frag(T2, y2)`   |
//! | `T1(T2)`              | `frag(T2, m) frag(T1 with ?m as input, y)`    |
//!
//! Inverted atomics swap subject and object. Fresh variables are `?y1`,
//! `?y2`, ... in allocation order.

use super::{QueryMode, SparqlQuery};
use crate::algebra::{Catalog, Source, TaskExpr, TaskKind};
use crate::algebra::typecheck;
use crate::knowledge::StoreError;
use std::collections::BTreeMap;

/// Where `BIND` clauses go relative to their operand fragments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BindPlacement {
    /// `BIND(..) frag1 frag2`, as in the rule table.
    #[default]
    Leading,
    /// `frag1 frag2 BIND(..)`, which strict SPARQL 1.1 endpoints need for
    /// the operands to be in scope.
    Trailing,
}

#[derive(Clone, Debug, Default)]
pub struct CompileOptions {
    pub bind: BindPlacement,
    /// Property term per atomic base name; unmapped bases are emitted verbatim.
    pub properties: BTreeMap<String, String>,
    /// Text placed before `SELECT`, e.g. `PREFIX` declarations.
    pub prologue: String,
}

impl CompileOptions {
    fn property<'a>(&'a self, base: &'a str) -> &'a str {
        self.properties.get(base).map_or(base, String::as_str)
    }
}

/// Renders an entity id as a constant term.
pub fn entity_term(id: &str) -> Result<String, StoreError> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"' | '{' | '}')) {
        return Err(StoreError::Unsupported(format!("entity id `{id}` cannot be written as an IRI")));
    }
    Ok(format!("<{id}>"))
}

struct Fresh(usize);

impl Fresh {
    fn next(&mut self) -> String {
        self.0 += 1;
        format!("y{}", self.0)
    }
}

fn fragment(
    expr: &TaskExpr,
    catalog: &Catalog,
    input: &str,
    out: &str,
    fresh: &mut Fresh,
    opts: &CompileOptions,
) -> Result<String, StoreError> {
    Ok(match expr {
        TaskExpr::Atomic(name) => {
            let spec = catalog.lookup(name).ok_or_else(|| StoreError::UnknownRelation(name.to_string()))?;
            if spec.source != Source::Factual {
                return Err(StoreError::NotFactual(name.to_string()));
            }
            let prop = opts.property(&name.base);
            if name.inverted {
                format!("?{out} {prop} {input} .")
            } else {
                format!("{input} {prop} ?{out} .")
            }
        }
        TaskExpr::Union(a, b) => format!(
            "{{ {} }} UNION {{ {} }}",
            fragment(a, catalog, input, out, fresh, opts)?,
            fragment(b, catalog, input, out, fresh, opts)?
        ),
        TaskExpr::Intersection(a, b) => format!(
            "{} {}",
            fragment(a, catalog, input, out, fresh, opts)?,
            fragment(b, catalog, input, out, fresh, opts)?
        ),
        TaskExpr::LOr(a, b) | TaskExpr::LAnd(a, b) => {
            let op = if matches!(expr, TaskExpr::LOr(..)) { "||" } else { "&&" };
            let (va, vb) = (fresh.next(), fresh.next());
            let fa = fragment(a, catalog, input, &va, fresh, opts)?;
            let fb = fragment(b, catalog, input, &vb, fresh, opts)?;
            let bind = format!("BIND( ?{va} {op} ?{vb} AS ?{out} )");
            match opts.bind {
                BindPlacement::Leading => format!("{bind} {fa} {fb}"),
                BindPlacement::Trailing => format!("{fa} {fb} {bind}"),
            }
        }
        TaskExpr::Chain(outer, inner) => {
            let mid = fresh.next();
            let fi = fragment(inner, catalog, input, &mid, fresh, opts)?;
            let fo = fragment(outer, catalog, &format!("?{mid}"), out, fresh, opts)?;
            format!("{fi} {fo}")
        }
        other => {
            return Err(StoreError::Unsupported(format!("`{other}` is not a word-level task")));
        }
    })
}

/// Fragment for `expr` reading `?x` and writing `?y`.
pub fn task_fragment(expr: &TaskExpr, catalog: &Catalog, opts: &CompileOptions) -> Result<String, StoreError> {
    fragment(expr, catalog, "?x", "y", &mut Fresh(0), opts)
}

/// Compiles `expr` into a query of the requested mode.
///
/// Relations support sample and function queries; predicates support
/// positive-sample, negative-sample and function queries. A function query
/// without an input keeps `?x` free.
pub fn compile_sparql(expr: &TaskExpr, catalog: &Catalog, mode: &QueryMode, opts: &CompileOptions) -> Result<SparqlQuery, StoreError> {
    let sig = typecheck(expr, catalog).map_err(|e| StoreError::Unsupported(e.to_string()))?;
    if sig.is_sequential() {
        return Err(StoreError::Unsupported(format!("`{expr}` is sequential")));
    }
    let input = match mode {
        QueryMode::Function { input: Some(id) } => entity_term(id)?,
        _ => "?x".to_string(),
    };
    let frag = fragment(expr, catalog, &input, "y", &mut Fresh(0), opts)?;
    let (select, body) = match (mode, sig.kind) {
        (QueryMode::Sample, TaskKind::Relation) => ("x", frag),
        (QueryMode::Function { .. }, _) => ("y", frag),
        (QueryMode::PositiveSample, TaskKind::Predicate) => ("x", format!("{frag} FILTER( ?y )")),
        (QueryMode::NegativeSample, TaskKind::Predicate) => ("x", format!("{frag} FILTER( !?y )")),
        (mode, kind) => {
            return Err(StoreError::Unsupported(format!("{} query for a {kind} task", mode.name())));
        }
    };
    Ok(SparqlQuery { mode: mode.clone(), select: select.to_string(), body, prologue: opts.prologue.clone() })
}

/// Every query a task needs: sample + function for relations, positive +
/// negative + function for predicates.
pub fn compile_all(expr: &TaskExpr, catalog: &Catalog, input: Option<&str>, opts: &CompileOptions) -> Result<Vec<SparqlQuery>, StoreError> {
    let sig = typecheck(expr, catalog).map_err(|e| StoreError::Unsupported(e.to_string()))?;
    let function = QueryMode::Function { input: input.map(str::to_string) };
    let modes = match sig.kind {
        TaskKind::Relation => vec![QueryMode::Sample, function],
        TaskKind::Predicate => vec![QueryMode::PositiveSample, QueryMode::NegativeSample, function],
    };
    modes.iter().map(|m| compile_sparql(expr, catalog, m, opts)).collect()
}
