use std::collections::BTreeMap;

use super::catalog::{Catalog, TaskKind};
use super::expr::TaskExpr;
use super::normalize::canonicalize;
use super::typecheck::{typecheck, TaskSignature};

/// Enumerates tasks of word-level depth at most two over `catalog`.
///
/// The result holds every atomic task, every well-typed binary composition
/// of two atomics (`chain` of relations, `union`/`intersection` of
/// relations, `land`/`lor` of predicates), and the sequential wrapper of
/// each word-level task (`map` for relations, `filter` for predicates).
/// Commutative operators never pair a task with itself, and tasks that
/// canonicalize identically are kept once. Output is sorted by canonical
/// DSL text and truncated to `limit`.
pub fn enumerate_depth2(catalog: &Catalog, limit: usize) -> Vec<TaskExpr> {
    let atoms: Vec<(TaskExpr, TaskSignature)> = catalog
        .tasks()
        .filter_map(|spec| {
            let expr = TaskExpr::Atomic(spec.name.clone());
            typecheck(&expr, catalog).ok().map(|sig| (expr, sig))
        })
        .collect();

    let mut word_level: Vec<TaskExpr> = atoms.iter().map(|(e, _)| e.clone()).collect();
    for (i, (a, sa)) in atoms.iter().enumerate() {
        for (j, (b, sb)) in atoms.iter().enumerate() {
            let candidates: Vec<TaskExpr> = match (sa.kind, sb.kind) {
                (TaskKind::Relation, TaskKind::Relation) => {
                    let mut v = vec![TaskExpr::chain(a.clone(), b.clone())];
                    if i < j {
                        v.push(TaskExpr::union(a.clone(), b.clone()));
                        v.push(TaskExpr::intersection(a.clone(), b.clone()));
                    }
                    v
                }
                (TaskKind::Predicate, TaskKind::Predicate) if i < j => {
                    vec![TaskExpr::land(a.clone(), b.clone()), TaskExpr::lor(a.clone(), b.clone())]
                }
                _ => continue,
            };
            word_level.extend(candidates.into_iter().filter(|e| typecheck(e, catalog).is_ok()));
        }
    }

    let mut unique: BTreeMap<String, TaskExpr> = BTreeMap::new();
    for expr in word_level {
        let Ok(sig) = typecheck(&expr, catalog) else { continue };
        let wrapped = match sig.kind {
            TaskKind::Relation => TaskExpr::map(expr.clone()),
            TaskKind::Predicate => TaskExpr::filter(expr.clone()),
        };
        for e in [expr, wrapped] {
            let canon = canonicalize(&e);
            unique.entry(canon.to_string()).or_insert(canon);
        }
    }
    unique.into_values().take(limit).collect()
}
