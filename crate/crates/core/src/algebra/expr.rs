use std::fmt;

use super::catalog::AtomicName;

/// Abstract syntax tree of a task.
///
/// `Chain(outer, inner)` is `outer(inner)`: the inner task runs first.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TaskExpr {
    Atomic(AtomicName),
    Chain(Box<TaskExpr>, Box<TaskExpr>),
    Union(Box<TaskExpr>, Box<TaskExpr>),
    Intersection(Box<TaskExpr>, Box<TaskExpr>),
    LAnd(Box<TaskExpr>, Box<TaskExpr>),
    LOr(Box<TaskExpr>, Box<TaskExpr>),
    Map(Box<TaskExpr>),
    Filter(Box<TaskExpr>),
    MapFilter(Box<TaskExpr>, Box<TaskExpr>),
}

/// Operator tag used to group tasks in analyses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operator {
    Atomic,
    Chain,
    Union,
    Intersection,
    LAnd,
    LOr,
    Map,
    Filter,
    MapFilter,
}

impl Operator {
    pub fn name(self) -> &'static str {
        match self {
            Operator::Atomic => "atomic",
            Operator::Chain => "chain",
            Operator::Union => "union",
            Operator::Intersection => "intersection",
            Operator::LAnd => "land",
            Operator::LOr => "lor",
            Operator::Map => "map",
            Operator::Filter => "filter",
            Operator::MapFilter => "map-filter",
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TaskExpr {
    pub fn atomic(name: AtomicName) -> Self {
        TaskExpr::Atomic(name)
    }

    /// Atomic task with no tags.
    pub fn named(base: &str) -> Self {
        TaskExpr::Atomic(AtomicName::new(base))
    }

    pub fn identity() -> Self {
        TaskExpr::Atomic(AtomicName::identity())
    }

    pub fn const_true() -> Self {
        TaskExpr::Atomic(AtomicName::const_true())
    }

    pub fn chain(outer: TaskExpr, inner: TaskExpr) -> Self {
        TaskExpr::Chain(Box::new(outer), Box::new(inner))
    }

    pub fn union(a: TaskExpr, b: TaskExpr) -> Self {
        TaskExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn intersection(a: TaskExpr, b: TaskExpr) -> Self {
        TaskExpr::Intersection(Box::new(a), Box::new(b))
    }

    pub fn land(a: TaskExpr, b: TaskExpr) -> Self {
        TaskExpr::LAnd(Box::new(a), Box::new(b))
    }

    pub fn lor(a: TaskExpr, b: TaskExpr) -> Self {
        TaskExpr::LOr(Box::new(a), Box::new(b))
    }

    pub fn map(body: TaskExpr) -> Self {
        TaskExpr::Map(Box::new(body))
    }

    pub fn filter(body: TaskExpr) -> Self {
        TaskExpr::Filter(Box::new(body))
    }

    pub fn map_filter(map: TaskExpr, filter: TaskExpr) -> Self {
        TaskExpr::MapFilter(Box::new(map), Box::new(filter))
    }

    pub fn operator(&self) -> Operator {
        match self {
            TaskExpr::Atomic(_) => Operator::Atomic,
            TaskExpr::Chain(..) => Operator::Chain,
            TaskExpr::Union(..) => Operator::Union,
            TaskExpr::Intersection(..) => Operator::Intersection,
            TaskExpr::LAnd(..) => Operator::LAnd,
            TaskExpr::LOr(..) => Operator::LOr,
            TaskExpr::Map(_) => Operator::Map,
            TaskExpr::Filter(_) => Operator::Filter,
            TaskExpr::MapFilter(..) => Operator::MapFilter,
        }
    }

    pub fn children(&self) -> Vec<&TaskExpr> {
        match self {
            TaskExpr::Atomic(_) => vec![],
            TaskExpr::Map(b) | TaskExpr::Filter(b) => vec![b],
            TaskExpr::Chain(a, b)
            | TaskExpr::Union(a, b)
            | TaskExpr::Intersection(a, b)
            | TaskExpr::LAnd(a, b)
            | TaskExpr::LOr(a, b)
            | TaskExpr::MapFilter(a, b) => vec![a, b],
        }
    }

    /// Atomic leaves count as depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Atomic leaves in left-to-right order, builtins included.
    pub fn atomics(&self) -> Vec<&AtomicName> {
        let mut out = Vec::new();
        self.collect_atomics(&mut out);
        out
    }

    fn collect_atomics<'a>(&'a self, out: &mut Vec<&'a AtomicName>) {
        match self {
            TaskExpr::Atomic(name) => out.push(name),
            _ => self.children().into_iter().for_each(|c| c.collect_atomics(out)),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, TaskExpr::Atomic(n) if n.is_identity())
    }

    pub fn is_const_true(&self) -> bool {
        matches!(self, TaskExpr::Atomic(n) if n.is_const_true())
    }
}

/// Prints canonical DSL text; `parse` inverts this exactly.
impl fmt::Display for TaskExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskExpr::Atomic(name) => write!(f, "{name}"),
            TaskExpr::Chain(outer, inner) => write!(f, "{outer}({inner})"),
            TaskExpr::Union(a, b) => write!(f, "union({a}, {b})"),
            TaskExpr::Intersection(a, b) => write!(f, "intersection({a}, {b})"),
            TaskExpr::LAnd(a, b) => write!(f, "land({a}, {b})"),
            TaskExpr::LOr(a, b) => write!(f, "lor({a}, {b})"),
            TaskExpr::Map(body) => write!(f, "map{{{body}}}"),
            TaskExpr::Filter(body) => write!(f, "filter{{{body}}}"),
            TaskExpr::MapFilter(m, p) => write!(f, "map-filter{{{m}, {p}}}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prints_nested_forms() {
        let e = TaskExpr::map(TaskExpr::chain(TaskExpr::named("occupation"), TaskExpr::named("father")));
        assert_eq!(e.to_string(), "map{occupation(father)}");
        assert_eq!(e.depth(), 3);
        let e = TaskExpr::chain(TaskExpr::union(TaskExpr::named("a"), TaskExpr::named("b")), TaskExpr::named("c"));
        assert_eq!(e.to_string(), "union(a, b)(c)");
        assert_eq!(e.atomics().len(), 3);
    }
}
