//! WordNet-style lexical store loaded from TSV.
//!
//! * vocabulary, one file per language: `word<TAB>count`
//! * relations: `relation<TAB>source-word<TAB>target-word`
//! * predicates: `predicate<TAB>word<TAB>0|1`
//!
//! Relation and predicate names use catalog keys (`synonyms[eng]`,
//! `translate[eng->spa]`). Rows whose words are missing from the
//! vocabulary of the relevant language are dropped and counted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::algebra::{AtomicName, Catalog, Domain, Source, TaskKind};

/// Minimum corpus count for a word to enter the input vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyRules {
    pub min_count: BTreeMap<String, u64>,
    pub default_min: u64,
}

impl Default for FrequencyRules {
    /// English words seen more than five times, Spanish words seen at least once.
    fn default() -> Self {
        FrequencyRules { min_count: BTreeMap::from([("eng".into(), 6), ("spa".into(), 1)]), default_min: 1 }
    }
}

impl FrequencyRules {
    pub fn min_for(&self, lang: &str) -> u64 {
        self.min_count.get(lang).copied().unwrap_or(self.default_min)
    }
}

/// Rows dropped during ingestion because a word was outside the vocabulary.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IngestReport {
    pub relation_rows: usize,
    pub predicate_rows: usize,
    pub dropped_relation_rows: usize,
    pub dropped_predicate_rows: usize,
}

#[derive(Clone, Debug, Default)]
pub struct LexicalStore {
    vocab: BTreeMap<String, BTreeMap<String, u64>>,
    frequent: BTreeMap<String, Vec<String>>,
    forward: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    reverse: BTreeMap<String, BTreeMap<String, BTreeSet<String>>>,
    predicates: BTreeMap<String, BTreeMap<String, bool>>,
    rules: FrequencyRules,
}

fn malformed(path: &str, line: usize, message: impl Into<String>) -> StoreError {
    StoreError::Malformed { path: path.to_string(), line, message: message.into() }
}

fn langs_of(catalog: &Catalog, name: &AtomicName, path: &str, line: usize) -> Result<(TaskKind, String, String), StoreError> {
    let spec = catalog
        .lookup(name)
        .filter(|s| s.source == Source::Lexical && !name.inverted)
        .ok_or_else(|| malformed(path, line, format!("`{name}` is not a lexical task in the catalog")))?;
    let lang = |d: &Domain| match d {
        Domain::Lang(l) => Ok(l.clone()),
        other => Err(malformed(path, line, format!("`{name}` has non-language domain {other}"))),
    };
    Ok((spec.kind, lang(&spec.input)?, lang(&spec.output)?))
}

impl LexicalStore {
    pub fn new(rules: FrequencyRules) -> Self {
        LexicalStore { rules, ..Default::default() }
    }

    pub fn rules(&self) -> &FrequencyRules {
        &self.rules
    }

    /// Adds `word<TAB>count` lines for `lang`.
    pub fn ingest_vocab(&mut self, lang: &str, text: &str, path: &str) -> Result<(), StoreError> {
        let table = self.vocab.entry(lang.to_string()).or_default();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| malformed(path, idx + 1, "expected `word<TAB>count`"))?;
            let count: u64 = count.trim().parse().map_err(|_| malformed(path, idx + 1, format!("bad count `{count}`")))?;
            *table.entry(word.to_string()).or_default() += count;
        }
        self.refresh_frequent();
        Ok(())
    }

    fn refresh_frequent(&mut self) {
        self.frequent = self
            .vocab
            .iter()
            .map(|(lang, words)| {
                let min = self.rules.min_for(lang);
                (lang.clone(), words.iter().filter(|(_, &c)| c >= min).map(|(w, _)| w.clone()).collect())
            })
            .collect();
    }

    fn in_vocab(&self, lang: &str, word: &str) -> bool {
        self.vocab.get(lang).is_some_and(|v| v.contains_key(word))
    }

    pub fn ingest_relations(&mut self, text: &str, path: &str, catalog: &Catalog, report: &mut IngestReport) -> Result<(), StoreError> {
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [rel, src, dst] = cols[..] else {
                return Err(malformed(path, idx + 1, "expected `relation<TAB>source<TAB>target`"));
            };
            let name = AtomicName::parse_key(rel).ok_or_else(|| malformed(path, idx + 1, format!("bad relation `{rel}`")))?;
            let (kind, in_lang, out_lang) = langs_of(catalog, &name, path, idx + 1)?;
            if kind != TaskKind::Relation {
                return Err(malformed(path, idx + 1, format!("`{name}` is a predicate")));
            }
            report.relation_rows += 1;
            if !self.in_vocab(&in_lang, src) || !self.in_vocab(&out_lang, dst) {
                report.dropped_relation_rows += 1;
                continue;
            }
            let key = name.to_string();
            self.forward.entry(key.clone()).or_default().entry(src.to_string()).or_default().insert(dst.to_string());
            self.reverse.entry(key).or_default().entry(dst.to_string()).or_default().insert(src.to_string());
        }
        Ok(())
    }

    pub fn ingest_predicates(&mut self, text: &str, path: &str, catalog: &Catalog, report: &mut IngestReport) -> Result<(), StoreError> {
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [pred, word, flag] = cols[..] else {
                return Err(malformed(path, idx + 1, "expected `predicate<TAB>word<TAB>0|1`"));
            };
            let name = AtomicName::parse_key(pred).ok_or_else(|| malformed(path, idx + 1, format!("bad predicate `{pred}`")))?;
            let (kind, lang, _) = langs_of(catalog, &name, path, idx + 1)?;
            if kind != TaskKind::Predicate {
                return Err(malformed(path, idx + 1, format!("`{name}` is a relation")));
            }
            let value = match flag.trim() {
                "1" => true,
                "0" => false,
                other => return Err(malformed(path, idx + 1, format!("expected 0 or 1, found `{other}`"))),
            };
            report.predicate_rows += 1;
            if !self.in_vocab(&lang, word) {
                report.dropped_predicate_rows += 1;
                continue;
            }
            self.predicates.entry(name.to_string()).or_default().insert(word.to_string(), value);
        }
        Ok(())
    }

    /// Loads `vocab.<lang>.tsv`, `relations.tsv` and `predicates.tsv` from `dir`.
    /// The relation and predicate files are optional.
    pub fn load_dir(dir: &Path, catalog: &Catalog, rules: FrequencyRules) -> Result<(Self, IngestReport), StoreError> {
        let mut store = LexicalStore::new(rules);
        let mut report = IngestReport::default();
        let read = |p: &Path| std::fs::read_to_string(p).map_err(|source| StoreError::Io { path: p.display().to_string(), source });
        let entries = std::fs::read_dir(dir).map_err(|source| StoreError::Io { path: dir.display().to_string(), source })?;
        let mut vocab_files: Vec<(String, std::path::PathBuf)> = entries
            .filter_map(Result::ok)
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                let lang = name.strip_prefix("vocab.")?.strip_suffix(".tsv")?.to_string();
                Some((lang, e.path()))
            })
            .collect();
        vocab_files.sort();
        for (lang, path) in vocab_files {
            store.ingest_vocab(&lang, &read(&path)?, &path.display().to_string())?;
        }
        let rel = dir.join("relations.tsv");
        if rel.exists() {
            store.ingest_relations(&read(&rel)?, &rel.display().to_string(), catalog, &mut report)?;
        }
        let pred = dir.join("predicates.tsv");
        if pred.exists() {
            store.ingest_predicates(&read(&pred)?, &pred.display().to_string(), catalog, &mut report)?;
        }
        Ok((store, report))
    }

    /// Writes the store back out in the ingestion format, sorted.
    pub fn export_dir(&self, dir: &Path) -> Result<(), StoreError> {
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|source| StoreError::Io { path: path.display().to_string(), source })
        };
        for (lang, words) in &self.vocab {
            let mut text = String::new();
            for (w, c) in words {
                let _ = writeln!(text, "{w}\t{c}");
            }
            write(&format!("vocab.{lang}.tsv"), text)?;
        }
        let mut text = String::new();
        for (rel, table) in &self.forward {
            for (src, dsts) in table {
                for dst in dsts {
                    let _ = writeln!(text, "{rel}\t{src}\t{dst}");
                }
            }
        }
        write("relations.tsv", text)?;
        let mut text = String::new();
        for (pred, table) in &self.predicates {
            for (word, v) in table {
                let _ = writeln!(text, "{pred}\t{word}\t{}", u8::from(*v));
            }
        }
        write("predicates.tsv", text)
    }

    /// Input vocabulary of `lang`: words meeting the frequency threshold, sorted.
    pub fn frequent_words(&self, lang: &str) -> &[String] {
        self.frequent.get(lang).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, lang: &str, word: &str) -> Option<u64> {
        self.vocab.get(lang)?.get(word).copied()
    }

    /// Image of `word`; empty when absent.
    pub fn relation(&self, name: &AtomicName, word: &str) -> BTreeSet<String> {
        let index = if name.inverted { &self.reverse } else { &self.forward };
        index
            .get(&name.forward().to_string())
            .and_then(|t| t.get(word))
            .cloned()
            .unwrap_or_default()
    }

    /// Truth value for `word`; false when absent.
    pub fn predicate(&self, name: &AtomicName, word: &str) -> bool {
        self.predicates.get(&name.to_string()).and_then(|t| t.get(word)).copied().unwrap_or(false)
    }
}
