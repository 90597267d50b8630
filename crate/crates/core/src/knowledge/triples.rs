//! In-memory entity graph.
//!
//! Triples are `subject<TAB>property<TAB>object`; labels are
//! `entity<TAB>surface`. Properties are named by the DSL spelling of the
//! atomic task they answer. A property whose objects are all the literals
//! `true`/`false` is a predicate property and is read closed-world: an
//! entity without a `true` triple is false.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use super::StoreError;

/// Boolean literal objects.
pub const TRUE_LITERAL: &str = "true";
pub const FALSE_LITERAL: &str = "false";

fn is_bool(s: &str) -> bool {
    s == TRUE_LITERAL || s == FALSE_LITERAL
}

/// Surface strings shared by more than one entity.
pub type LabelCollisions = BTreeMap<String, BTreeSet<String>>;

#[derive(Clone, Debug, Default)]
pub struct TripleStore {
    triples: BTreeSet<(String, String, String)>,
    labels: BTreeMap<String, String>,
    by_subject: BTreeMap<(String, String), BTreeSet<String>>,
    by_object: BTreeMap<(String, String), BTreeSet<String>>,
    predicate_props: BTreeSet<String>,
    entities: BTreeSet<String>,
    surfaces: BTreeMap<String, BTreeSet<String>>,
}

impl TripleStore {
    /// Builds a store, checking that predicate properties only have
    /// boolean objects and that every labelled entity occurs in a triple.
    pub fn new(
        triples: impl IntoIterator<Item = (String, String, String)>,
        labels: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, StoreError> {
        let mut store = TripleStore::default();
        let mut object_kinds: BTreeMap<String, (bool, bool)> = BTreeMap::new();
        for (s, p, o) in triples {
            let kinds = object_kinds.entry(p.clone()).or_default();
            if is_bool(&o) {
                kinds.0 = true;
            } else {
                kinds.1 = true;
                store.entities.insert(o.clone());
            }
            store.entities.insert(s.clone());
            store.triples.insert((s, p, o));
        }
        for (p, (bools, others)) in object_kinds {
            match (bools, others) {
                (true, true) => {
                    return Err(StoreError::Invalid(format!("property `{p}` mixes boolean and entity objects")));
                }
                (true, false) => {
                    store.predicate_props.insert(p);
                }
                _ => {}
            }
        }
        for (s, p, o) in &store.triples {
            store.by_subject.entry((p.clone(), s.clone())).or_default().insert(o.clone());
            store.by_object.entry((p.clone(), o.clone())).or_default().insert(s.clone());
        }
        for (entity, label) in labels {
            if !store.entities.contains(&entity) {
                return Err(StoreError::Invalid(format!("label for `{entity}` which occurs in no triple")));
            }
            store.labels.insert(entity, label);
        }
        for e in &store.entities {
            store.surfaces.entry(store.surface(e).to_string()).or_default().insert(e.clone());
        }
        Ok(store)
    }

    /// Marks properties as predicates even when no triple uses them, so
    /// they read as false everywhere instead of matching nothing.
    pub fn declare_predicates(&mut self, properties: impl IntoIterator<Item = String>) -> Result<(), StoreError> {
        for p in properties {
            if self.predicate_props.contains(&p) {
                continue;
            }
            if self.triples.iter().any(|t| t.1 == p) {
                return Err(StoreError::Invalid(format!("predicate property `{p}` has entity objects")));
            }
            self.predicate_props.insert(p);
        }
        Ok(())
    }

    pub fn parse(triples: &str, labels: &str, triples_path: &str, labels_path: &str) -> Result<Self, StoreError> {
        let mut ts = Vec::new();
        for (idx, line) in triples.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [s, p, o] = cols[..] else {
                return Err(StoreError::Malformed {
                    path: triples_path.to_string(),
                    line: idx + 1,
                    message: "expected `subject<TAB>property<TAB>object`".into(),
                });
            };
            ts.push((s.to_string(), p.to_string(), o.to_string()));
        }
        let mut ls = Vec::new();
        for (idx, line) in labels.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (e, l) = line.split_once('\t').ok_or_else(|| StoreError::Malformed {
                path: labels_path.to_string(),
                line: idx + 1,
                message: "expected `entity<TAB>label`".into(),
            })?;
            ls.push((e.to_string(), l.to_string()));
        }
        TripleStore::new(ts, ls)
    }

    pub fn load(triples: &Path, labels: &Path) -> Result<Self, StoreError> {
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|source| StoreError::Io { path: p.display().to_string(), source });
        TripleStore::parse(&read(triples)?, &read(labels)?, &triples.display().to_string(), &labels.display().to_string())
    }

    /// Sorted re-export in the ingestion format: (triples, labels).
    pub fn export(&self) -> (String, String) {
        let mut t = String::new();
        for (s, p, o) in &self.triples {
            let _ = writeln!(t, "{s}\t{p}\t{o}");
        }
        let mut l = String::new();
        for (e, label) in &self.labels {
            let _ = writeln!(l, "{e}\t{label}");
        }
        (t, l)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.triples.iter().map(|(s, p, o)| (s.as_str(), p.as_str(), o.as_str()))
    }

    pub fn entities(&self) -> &BTreeSet<String> {
        &self.entities
    }

    pub fn is_entity(&self, id: &str) -> bool {
        self.entities.contains(id)
    }

    pub fn is_predicate_property(&self, property: &str) -> bool {
        self.predicate_props.contains(property)
    }

    /// Label of an entity, or its id when unlabelled.
    pub fn surface<'a>(&'a self, id: &'a str) -> &'a str {
        self.labels.get(id).map_or(id, String::as_str)
    }

    /// Entities whose surface string is `word`.
    pub fn resolve(&self, word: &str) -> impl Iterator<Item = &str> {
        self.surfaces.get(word).into_iter().flatten().map(String::as_str)
    }

    /// All entity surface strings, sorted and unique.
    pub fn surfaces(&self) -> Vec<String> {
        self.surfaces.keys().cloned().collect()
    }

    pub fn label_collisions(&self) -> LabelCollisions {
        self.surfaces.iter().filter(|(_, ids)| ids.len() > 1).map(|(s, ids)| (s.clone(), ids.clone())).collect()
    }

    /// Objects of `(subject, property, ?)`.
    pub fn objects(&self, property: &str, subject: &str) -> impl Iterator<Item = &str> {
        self.by_subject.get(&(property.to_string(), subject.to_string())).into_iter().flatten().map(String::as_str)
    }

    /// Subjects of `(?, property, object)`.
    pub fn subjects(&self, property: &str, object: &str) -> impl Iterator<Item = &str> {
        self.by_object.get(&(property.to_string(), object.to_string())).into_iter().flatten().map(String::as_str)
    }

    /// Closed-world truth of a predicate property.
    pub fn holds(&self, property: &str, subject: &str) -> bool {
        self.triples.contains(&(subject.to_string(), property.to_string(), TRUE_LITERAL.to_string()))
    }

    /// Relation lookup on surface strings: images of every entity carrying
    /// the surface `word`, as surfaces.
    pub fn relation(&self, property: &str, inverted: bool, word: &str) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for id in self.resolve(word) {
            let hits: Vec<&str> =
                if inverted { self.subjects(property, id).collect() } else { self.objects(property, id).collect() };
            out.extend(hits.into_iter().map(|h| self.surface(h).to_string()));
        }
        out
    }

    pub fn predicate(&self, property: &str, word: &str) -> bool {
        self.resolve(word).any(|id| self.holds(property, id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> TripleStore {
        TripleStore::parse(
            "Q1\tfather\tQ2\nQ1\tmother\tQ3\nQ4\tfather\tQ2\nQ1\tis-instance-human\ttrue\nQ2\tis-instance-human\tfalse\n",
            "Q1\tElizabeth I of England\nQ2\tHenry VIII of England\nQ3\tAnne Boleyn\nQ4\tEdward VI\n",
            "t",
            "l",
        )
        .unwrap()
    }

    #[test]
    fn relation_and_inverse_by_surface() {
        let s = store();
        assert_eq!(s.relation("father", false, "Elizabeth I of England"), BTreeSet::from(["Henry VIII of England".to_string()]));
        assert_eq!(s.relation("father", true, "Henry VIII of England").len(), 2);
        assert!(s.relation("father", false, "Nobody").is_empty());
    }

    #[test]
    fn predicates_are_closed_world() {
        let s = store();
        assert!(s.is_predicate_property("is-instance-human"));
        assert!(s.predicate("is-instance-human", "Elizabeth I of England"));
        assert!(!s.predicate("is-instance-human", "Henry VIII of England"));
        assert!(!s.predicate("is-instance-human", "Anne Boleyn"));
    }

    #[test]
    fn invalid_fixtures() {
        assert!(TripleStore::parse("a\tp\ttrue\nb\tp\tc\n", "", "t", "l").is_err());
        assert!(TripleStore::parse("a\tp\tb\n", "zz\tLabel\n", "t", "l").is_err());
        let err = TripleStore::parse("a p b\n", "", "t.tsv", "l").unwrap_err();
        assert!(err.to_string().contains("t.tsv:1"));
    }

    #[test]
    fn collisions_are_reported() {
        let s = TripleStore::parse("a\tp\tb\n", "a\tSame\nb\tSame\n", "t", "l").unwrap();
        assert_eq!(s.label_collisions().get("Same").map(|ids| ids.len()), Some(2));
        assert_eq!(s.relation("p", false, "Same"), BTreeSet::from(["Same".to_string()]));
    }
}
