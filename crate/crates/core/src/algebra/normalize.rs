//! Map-filter normal form and canonical ordering.
//!
//! Any nesting of `map` and `filter` collapses to one word-level relation
//! applied to the words that pass one word-level predicate:
//!
//! ```text
//! map{f}                          = map-filter{f, true}
//! filter{p}                       = map-filter{identity, p}
//! map{f'}(map-filter{f, p})       = map-filter{f'(f), p}
//! filter{p'}(map-filter{f, p})    = map-filter{f, land(p, p'(f))}
//! ```
//!
//! `p'(f)` is the existential reading of a predicate over a relation. The
//! smart constructors drop identities and constant-true conjuncts so that
//! `filter{p}` normalizes to exactly `(identity, p)`.

use std::fmt;

use super::catalog::Catalog;
use super::expr::TaskExpr;
use super::typecheck::{typecheck, Level, TypeError};
use crate::algebra::catalog::TaskKind;

/// `map-filter{map_rel, filter_pred}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MapFilterNF {
    pub map_rel: TaskExpr,
    pub filter_pred: TaskExpr,
}

impl MapFilterNF {
    pub fn identity() -> Self {
        MapFilterNF { map_rel: TaskExpr::identity(), filter_pred: TaskExpr::const_true() }
    }

    pub fn to_expr(&self) -> TaskExpr {
        TaskExpr::map_filter(self.map_rel.clone(), self.filter_pred.clone())
    }

    pub fn has_trivial_filter(&self) -> bool {
        self.filter_pred.is_const_true()
    }
}

impl fmt::Display for MapFilterNF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "map-filter{{{}, {}}}", self.map_rel, self.filter_pred)
    }
}

/// `outer(inner)` with identities elided.
pub fn compose(outer: TaskExpr, inner: TaskExpr) -> TaskExpr {
    if outer.is_identity() {
        inner
    } else if inner.is_identity() {
        outer
    } else {
        TaskExpr::chain(outer, inner)
    }
}

/// `land(a, b)` with constant-true operands elided.
pub fn conjoin(a: TaskExpr, b: TaskExpr) -> TaskExpr {
    if a.is_const_true() {
        b
    } else if b.is_const_true() {
        a
    } else {
        TaskExpr::land(a, b)
    }
}

/// Normalizes a sequential relation.
pub fn normalize(expr: &TaskExpr, catalog: &Catalog) -> Result<MapFilterNF, TypeError> {
    let sig = typecheck(expr, catalog)?;
    if sig.level != Level::Sequence || sig.kind != TaskKind::Relation {
        return Err(TypeError::Mismatch {
            node: expr.to_string(),
            expected: "a (relation, sequence) task".into(),
            found: sig.to_string(),
        });
    }
    Ok(to_nf(expr))
}

fn to_nf(expr: &TaskExpr) -> MapFilterNF {
    match expr {
        TaskExpr::Map(f) => MapFilterNF { map_rel: (**f).clone(), filter_pred: TaskExpr::const_true() },
        TaskExpr::Filter(p) => MapFilterNF { map_rel: TaskExpr::identity(), filter_pred: (**p).clone() },
        TaskExpr::MapFilter(f, p) => MapFilterNF { map_rel: (**f).clone(), filter_pred: (**p).clone() },
        TaskExpr::Chain(outer, inner) => apply(outer, to_nf(inner)),
        // typecheck admits nothing else at sequence level
        other => unreachable!("`{other}` is not sequential"),
    }
}

fn apply(outer: &TaskExpr, nf: MapFilterNF) -> MapFilterNF {
    match outer {
        TaskExpr::Map(f) => MapFilterNF { map_rel: compose((**f).clone(), nf.map_rel), filter_pred: nf.filter_pred },
        TaskExpr::Filter(p) => {
            let guard = compose((**p).clone(), nf.map_rel.clone());
            MapFilterNF { filter_pred: conjoin(nf.filter_pred, guard), map_rel: nf.map_rel }
        }
        TaskExpr::MapFilter(f, p) => {
            let filtered = apply(&TaskExpr::Filter(p.clone()), nf);
            apply(&TaskExpr::Map(f.clone()), filtered)
        }
        TaskExpr::Chain(o1, o2) => apply(o1, apply(o2, nf)),
        other => unreachable!("`{other}` is not sequential"),
    }
}

/// Sorts the operands of commutative operators by their printed form, bottom up.
pub fn canonicalize(expr: &TaskExpr) -> TaskExpr {
    fn sorted(a: &TaskExpr, b: &TaskExpr) -> (TaskExpr, TaskExpr) {
        let (a, b) = (canonicalize(a), canonicalize(b));
        if a.to_string().as_bytes() <= b.to_string().as_bytes() {
            (a, b)
        } else {
            (b, a)
        }
    }
    match expr {
        TaskExpr::Atomic(_) => expr.clone(),
        TaskExpr::Chain(o, i) => TaskExpr::chain(canonicalize(o), canonicalize(i)),
        TaskExpr::Union(a, b) => {
            let (a, b) = sorted(a, b);
            TaskExpr::union(a, b)
        }
        TaskExpr::Intersection(a, b) => {
            let (a, b) = sorted(a, b);
            TaskExpr::intersection(a, b)
        }
        TaskExpr::LAnd(a, b) => {
            let (a, b) = sorted(a, b);
            TaskExpr::land(a, b)
        }
        TaskExpr::LOr(a, b) => {
            let (a, b) = sorted(a, b);
            TaskExpr::lor(a, b)
        }
        TaskExpr::Map(f) => TaskExpr::map(canonicalize(f)),
        TaskExpr::Filter(p) => TaskExpr::filter(canonicalize(p)),
        TaskExpr::MapFilter(f, p) => TaskExpr::map_filter(canonicalize(f), canonicalize(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse;

    fn nf(src: &str) -> MapFilterNF {
        let cat = Catalog::paper();
        normalize(&parse(src, &cat).unwrap(), &cat).unwrap()
    }

    fn e(src: &str) -> TaskExpr {
        parse(src, &Catalog::paper()).unwrap()
    }

    #[test]
    fn map_base_case() {
        assert_eq!(nf("map{synonyms[eng]}"), MapFilterNF { map_rel: e("synonyms[eng]"), filter_pred: TaskExpr::const_true() });
    }

    #[test]
    fn filter_base_case() {
        assert_eq!(nf("filter{is-POS-noun[eng]}"), MapFilterNF { map_rel: TaskExpr::identity(), filter_pred: e("is-POS-noun[eng]") });
    }

    #[test]
    fn nested_maps_chain() {
        let got = nf("map{λx.occupation(x)}(map{λx. father(x)})");
        assert_eq!(got.map_rel, e("occupation(father)"));
        assert!(got.has_trivial_filter());
    }

    #[test]
    fn filter_after_map_guards_on_image() {
        let got = nf("filter{is-occupation-actor}(map{child})");
        assert_eq!(got.map_rel, e("child"));
        assert_eq!(got.filter_pred, e("is-occupation-actor(child)"));
        let got = nf("filter{is-occupation-actor}(filter{is-instance-human})");
        assert_eq!(got.filter_pred, e("land(is-instance-human, is-occupation-actor)"));
    }

    #[test]
    fn normalize_rejects_word_level() {
        let cat = Catalog::paper();
        assert!(normalize(&e("father"), &cat).is_err());
    }

    #[test]
    fn canonical_union_order() {
        assert_eq!(canonicalize(&e("union(mother, father)")), canonicalize(&e("union(father, mother)")));
        assert_eq!(canonicalize(&e("union(mother, father)")).to_string(), "union(father, mother)");
        assert_eq!(canonicalize(&e("mother(father)")), e("mother(father)"));
        assert_eq!(
            canonicalize(&e("lor(is-birthplace-nyc, is-birthplace-london)")).to_string(),
            "lor(is-birthplace-london, is-birthplace-nyc)"
        );
    }
}
