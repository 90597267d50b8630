//! Knowledge backends and the task interpreter.
//!
//! [`Stores`] bundles a catalog with a lexical store, a factual backend
//! (in-memory triples or a remote SPARQL endpoint) and the seeded random
//! relations. [`eval_expr`] interprets word-level tasks and [`eval_seq`]
//! applies a map-filter normal form to a word sequence.

pub mod lexical;
pub mod random;
pub mod sparql;
pub mod triples;

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::algebra::{normalize, AtomicName, Catalog, Domain, MapFilterNF, Source, TaskExpr, TaskKind};
use lexical::LexicalStore;
use random::RandomRelation;
use sparql::{column, entity_term, RemoteEndpoint};
use triples::{TripleStore, TRUE_LITERAL};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown atomic task `{0}`")]
    UnknownRelation(String),
    #[error("`{0}` is not a factual task")]
    NotFactual(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid store: {0}")]
    Invalid(String),
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("remote endpoint: {message}")]
    Remote { message: String, retriable: bool },
    #[error("no {0} backend is loaded")]
    MissingBackend(&'static str),
    #[error("`{0}` is not a word-level task")]
    NotWordLevel(String),
    #[error("{count} output sequences exceed the cap of {cap}")]
    TooLarge { count: u128, cap: usize },
}

impl StoreError {
    /// Transient failures worth retrying (timeouts, connection errors, 5xx, 429).
    pub fn is_retriable(&self) -> bool {
        matches!(self, StoreError::Remote { retriable: true, .. })
    }
}

/// Output of a word-level task.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Set(BTreeSet<String>),
    Bool(bool),
}

impl Value {
    pub fn as_set(&self) -> Option<&BTreeSet<String>> {
        match self {
            Value::Set(s) => Some(s),
            Value::Bool(_) => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            Value::Set(_) => None,
        }
    }

    pub fn into_set(self) -> BTreeSet<String> {
        match self {
            Value::Set(s) => s,
            Value::Bool(_) => BTreeSet::new(),
        }
    }
}

/// Output of a sequential task: the cross-product of per-word image sets.
///
/// Enumeration is lazy; [`SequenceSet::count`] is exact.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SequenceSet {
    slots: Vec<Vec<String>>,
}

impl SequenceSet {
    /// Each slot is deduplicated and sorted.
    pub fn new(slots: Vec<BTreeSet<String>>) -> Self {
        SequenceSet { slots: slots.into_iter().map(|s| s.into_iter().collect()).collect() }
    }

    pub fn slots(&self) -> &[Vec<String>] {
        &self.slots
    }

    /// Length of every member sequence.
    pub fn seq_len(&self) -> usize {
        self.slots.len()
    }

    /// Number of sequences, saturating at `u128::MAX`.
    pub fn count(&self) -> u128 {
        self.slots.iter().fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().any(Vec::is_empty)
    }

    pub fn contains(&self, seq: &[String]) -> bool {
        seq.len() == self.slots.len()
            && seq.iter().zip(&self.slots).all(|(w, slot)| slot.binary_search(w).is_ok())
    }

    /// Sequences in lexicographic slot order.
    pub fn iter(&self) -> SequenceIter<'_> {
        SequenceIter { set: self, odometer: vec![0; self.slots.len()], done: self.is_empty() }
    }

    /// All sequences, or `TooLarge` when there are more than `cap`.
    pub fn materialize(&self, cap: usize) -> Result<Vec<Vec<String>>, StoreError> {
        let count = self.count();
        if count > cap as u128 {
            return Err(StoreError::TooLarge { count, cap });
        }
        Ok(self.iter().collect())
    }

    /// A uniformly random member; `None` when empty.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<String>> {
        if self.is_empty() {
            return None;
        }
        Some(self.slots.iter().map(|s| s[rng.random_range(0..s.len())].clone()).collect())
    }
}

pub struct SequenceIter<'a> {
    set: &'a SequenceSet,
    odometer: Vec<usize>,
    done: bool,
}

impl Iterator for SequenceIter<'_> {
    type Item = Vec<String>;

    fn next(&mut self) -> Option<Vec<String>> {
        if self.done {
            return None;
        }
        let item = self.odometer.iter().zip(&self.set.slots).map(|(&i, s)| s[i].clone()).collect();
        let mut pos = self.odometer.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.odometer[pos] += 1;
            if self.odometer[pos] < self.set.slots[pos].len() {
                break;
            }
            self.odometer[pos] = 0;
        }
        Some(item)
    }
}

/// Source of factual answers.
#[derive(Clone, Debug)]
pub enum FactualBackend {
    Local(TripleStore),
    /// Words are used directly as entity ids in function queries.
    Remote(RemoteEndpoint),
}

/// Everything needed to evaluate tasks.
#[derive(Clone, Debug)]
pub struct Stores {
    catalog: Catalog,
    lexical: Option<LexicalStore>,
    factual: Option<FactualBackend>,
    random: BTreeMap<AtomicName, RandomRelation>,
    random_vocab: BTreeMap<String, Vec<String>>,
}

impl Stores {
    pub fn new(catalog: Catalog) -> Self {
        Stores { catalog, lexical: None, factual: None, random: BTreeMap::new(), random_vocab: BTreeMap::new() }
    }

    /// Random relations draw from the frequent vocabulary of their language.
    pub fn with_lexical(mut self, store: LexicalStore) -> Self {
        self.lexical = Some(store);
        self.rebuild_random();
        self
    }

    pub fn with_factual(mut self, backend: FactualBackend) -> Self {
        self.factual = Some(backend);
        self
    }

    /// Uses an in-memory graph; factual predicates of the catalog that the
    /// graph never mentions are declared so they read as false.
    pub fn with_triples(self, mut store: TripleStore) -> Result<Self, StoreError> {
        let preds: Vec<String> = self
            .catalog
            .tasks()
            .filter(|t| t.source == Source::Factual && t.kind == TaskKind::Predicate)
            .map(|t| t.name.base.clone())
            .collect();
        store.declare_predicates(preds)?;
        Ok(self.with_factual(FactualBackend::Local(store)))
    }

    /// Overrides the vocabulary random relations over `lang` map within.
    pub fn with_random_vocabulary(mut self, lang: &str, words: Vec<String>) -> Self {
        self.random_vocab.insert(lang.to_string(), words);
        self.rebuild_random();
        self
    }

    fn rebuild_random(&mut self) {
        self.random.clear();
        for spec in self.catalog.tasks().filter(|t| t.source == Source::Random) {
            let Domain::Lang(lang) = &spec.input else { continue };
            let vocab = match (self.random_vocab.get(lang), &self.lexical) {
                (Some(v), _) => v.clone(),
                (None, Some(lex)) => lex.frequent_words(lang).to_vec(),
                (None, None) => continue,
            };
            if !vocab.is_empty() {
                self.random.insert(spec.name.forward(), RandomRelation::new(spec.seed.unwrap_or(0), vocab));
            }
        }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn lexical(&self) -> Option<&LexicalStore> {
        self.lexical.as_ref()
    }

    pub fn factual(&self) -> Option<&FactualBackend> {
        self.factual.as_ref()
    }

    /// The in-memory triple store, when the factual backend is local.
    pub fn triples(&self) -> Option<&TripleStore> {
        match &self.factual {
            Some(FactualBackend::Local(t)) => Some(t),
            _ => None,
        }
    }

    pub fn random_relation(&self, name: &AtomicName) -> Option<&RandomRelation> {
        self.random.get(&name.forward())
    }

    /// Every word of a domain, sorted: frequent words for a language,
    /// entity surfaces for the local graph.
    pub fn universe(&self, domain: &Domain) -> Result<Vec<String>, StoreError> {
        match domain {
            Domain::Lang(lang) => {
                let mut words: BTreeSet<String> =
                    self.lexical.iter().flat_map(|l| l.frequent_words(lang).iter().cloned()).collect();
                if let Some(v) = self.random_vocab.get(lang) {
                    words.extend(v.iter().cloned());
                }
                Ok(words.into_iter().collect())
            }
            Domain::Entity => match &self.factual {
                Some(FactualBackend::Local(t)) => Ok(t.surfaces()),
                Some(FactualBackend::Remote(_)) => {
                    Err(StoreError::Unsupported("the entity universe of a remote endpoint cannot be listed".into()))
                }
                None => Err(StoreError::MissingBackend("factual")),
            },
            Domain::Any => Err(StoreError::Unsupported("the unconstrained domain has no finite universe".into())),
        }
    }
}

fn remote_objects(endpoint: &RemoteEndpoint, property: &str, inverted: bool, word: &str) -> Result<BTreeSet<String>, StoreError> {
    let term = entity_term(word)?;
    let body = if inverted { format!("?y {property} {term} .") } else { format!("{term} {property} ?y .") };
    Ok(column(&endpoint.select(&format!("SELECT ?y WHERE {{ {body} }}"))?, "y"))
}

/// Applies one atomic task. Absent keys give the empty set or `false`.
pub fn eval_atomic(stores: &Stores, name: &AtomicName, word: &str) -> Result<Value, StoreError> {
    let spec = stores.catalog.lookup(name).ok_or_else(|| StoreError::UnknownRelation(name.to_string()))?;
    let predicate = spec.kind == TaskKind::Predicate;
    match spec.source {
        Source::Builtin => Ok(if predicate { Value::Bool(true) } else { Value::Set(BTreeSet::from([word.to_string()])) }),
        Source::Lexical => {
            let lex = stores.lexical.as_ref().ok_or(StoreError::MissingBackend("lexical"))?;
            Ok(if predicate { Value::Bool(lex.predicate(name, word)) } else { Value::Set(lex.relation(name, word)) })
        }
        Source::Random => {
            let rel = stores.random_relation(name).ok_or(StoreError::MissingBackend("random-relation vocabulary"))?;
            Ok(Value::Set(if name.inverted { rel.invert(word) } else { rel.apply(word) }))
        }
        Source::Factual => match stores.factual.as_ref().ok_or(StoreError::MissingBackend("factual"))? {
            FactualBackend::Local(t) => Ok(if predicate {
                Value::Bool(t.predicate(&name.base, word))
            } else {
                Value::Set(t.relation(&name.base, name.inverted, word))
            }),
            FactualBackend::Remote(endpoint) => {
                let objects = remote_objects(endpoint, &name.base, name.inverted && !predicate, word)?;
                Ok(if predicate { Value::Bool(objects.contains(TRUE_LITERAL)) } else { Value::Set(objects) })
            }
        },
    }
}

fn expect_set(v: Value, node: &TaskExpr) -> Result<BTreeSet<String>, StoreError> {
    match v {
        Value::Set(s) => Ok(s),
        Value::Bool(_) => Err(StoreError::Unsupported(format!("`{node}` yields a boolean where a set is needed"))),
    }
}

fn expect_bool(v: Value, node: &TaskExpr) -> Result<bool, StoreError> {
    match v {
        Value::Bool(b) => Ok(b),
        Value::Set(_) => Err(StoreError::Unsupported(format!("`{node}` yields a set where a boolean is needed"))),
    }
}

/// Interprets a word-level task on one input word.
///
/// A chain unions the outer images over every intermediate word; a
/// predicate applied to a set holds if it holds for some member.
pub fn eval_expr(stores: &Stores, expr: &TaskExpr, word: &str) -> Result<Value, StoreError> {
    match expr {
        TaskExpr::Atomic(name) => eval_atomic(stores, name, word),
        TaskExpr::Chain(outer, inner) => {
            let mids = expect_set(eval_expr(stores, inner, word)?, inner)?;
            let mut set = BTreeSet::new();
            let mut any = false;
            let mut predicate = None;
            for m in &mids {
                match eval_expr(stores, outer, m)? {
                    Value::Set(s) => {
                        predicate = Some(false);
                        set.extend(s);
                    }
                    Value::Bool(b) => {
                        predicate = Some(true);
                        any |= b;
                        if any {
                            break;
                        }
                    }
                }
            }
            let predicate = match predicate {
                Some(p) => p,
                None => outer_is_predicate(stores, outer)?,
            };
            Ok(if predicate { Value::Bool(any) } else { Value::Set(set) })
        }
        TaskExpr::Union(a, b) => {
            let mut s = expect_set(eval_expr(stores, a, word)?, a)?;
            s.extend(expect_set(eval_expr(stores, b, word)?, b)?);
            Ok(Value::Set(s))
        }
        TaskExpr::Intersection(a, b) => {
            let s = expect_set(eval_expr(stores, a, word)?, a)?;
            let t = expect_set(eval_expr(stores, b, word)?, b)?;
            Ok(Value::Set(s.intersection(&t).cloned().collect()))
        }
        TaskExpr::LAnd(a, b) => {
            let x = expect_bool(eval_expr(stores, a, word)?, a)?;
            let y = expect_bool(eval_expr(stores, b, word)?, b)?;
            Ok(Value::Bool(x && y))
        }
        TaskExpr::LOr(a, b) => {
            let x = expect_bool(eval_expr(stores, a, word)?, a)?;
            let y = expect_bool(eval_expr(stores, b, word)?, b)?;
            Ok(Value::Bool(x || y))
        }
        TaskExpr::Map(_) | TaskExpr::Filter(_) | TaskExpr::MapFilter(..) => Err(StoreError::NotWordLevel(expr.to_string())),
    }
}

fn outer_is_predicate(stores: &Stores, outer: &TaskExpr) -> Result<bool, StoreError> {
    crate::algebra::typecheck(outer, &stores.catalog)
        .map(|s| s.kind == TaskKind::Predicate)
        .map_err(|e| StoreError::Unsupported(e.to_string()))
}

/// Applies a normal form to a word sequence: words failing the filter are
/// dropped, every survivor is replaced by its image set.
pub fn eval_seq(stores: &Stores, nf: &MapFilterNF, words: &[String]) -> Result<SequenceSet, StoreError> {
    let mut slots = Vec::new();
    for w in words {
        if expect_bool(eval_expr(stores, &nf.filter_pred, w)?, &nf.filter_pred)? {
            slots.push(expect_set(eval_expr(stores, &nf.map_rel, w)?, &nf.map_rel)?);
        }
    }
    Ok(SequenceSet::new(slots))
}

/// Normalizes a sequential task and applies it.
pub fn eval_sequential(stores: &Stores, expr: &TaskExpr, words: &[String]) -> Result<SequenceSet, StoreError> {
    let nf = normalize(expr, &stores.catalog).map_err(|e| StoreError::Unsupported(e.to_string()))?;
    eval_seq(stores, &nf, words)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse;
    use rand::SeedableRng;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn sequence_set_enumeration() {
        let set = SequenceSet::new(vec![
            BTreeSet::from(["a".into(), "b".into()]),
            BTreeSet::from(["c".into()]),
            BTreeSet::from(["d".into(), "e".into(), "f".into()]),
        ]);
        assert_eq!(set.count(), 6);
        let all: Vec<_> = set.iter().collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], words("a c d"));
        assert_eq!(all[5], words("b c f"));
        assert!(all.iter().all(|s| set.contains(s)));
        assert!(set.materialize(5).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert!(set.contains(&set.sample_uniform(&mut rng).unwrap()));
    }

    #[test]
    fn empty_and_unit_sets() {
        assert_eq!(SequenceSet::new(vec![]).iter().collect::<Vec<_>>(), vec![Vec::<String>::new()]);
        let empty = SequenceSet::new(vec![BTreeSet::new()]);
        assert_eq!(empty.count(), 0);
        assert_eq!(empty.iter().count(), 0);
    }

    #[test]
    fn builtins_and_missing_backends() {
        let cat = Catalog::paper();
        let stores = Stores::new(cat.clone());
        let id = parse("map{identity}", &cat).unwrap();
        let out = eval_sequential(&stores, &id, &words("x y z")).unwrap();
        assert_eq!(out.iter().collect::<Vec<_>>(), vec![words("x y z")]);
        let e = parse("father", &cat).unwrap();
        assert!(matches!(eval_expr(&stores, &e, "a"), Err(StoreError::MissingBackend(_))));
    }

    #[test]
    fn random_relation_from_vocabulary() {
        let cat = Catalog::paper();
        let stores = Stores::new(cat.clone()).with_random_vocabulary("eng", words("cling bones breed eight"));
        let e = parse("random-seed0[eng]", &cat).unwrap();
        let a = eval_expr(&stores, &e, "cling").unwrap();
        assert_eq!(a.as_set().unwrap().len(), 1);
        assert_eq!(a, eval_expr(&stores, &e, "cling").unwrap());
    }
}
