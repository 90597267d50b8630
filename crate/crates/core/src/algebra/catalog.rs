//! Registry of atomic tasks.
//!
//! The built-in catalog mirrors the benchmark's published atomic task list:
//! lexical predicates and relations over English/Spanish vocabularies,
//! factual predicates and relations over an entity graph, and four seeded
//! random relations. Factual names that are printed with spaces
//! (`head of state`) are spelled with hyphens in DSL source
//! (`head-of-state`); [`Catalog::dsl_name`] and [`Catalog::printed_name`]
//! translate between the two.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Reserved name of the identity relation `w -> {w}`.
pub const IDENTITY: &str = "identity";
/// Reserved name of the constant-true predicate.
pub const TRUE: &str = "true";

/// Language annotation on an atomic name: `[eng]` or `[eng->spa]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LangTag {
    Lang(String),
    Pair(String, String),
}

impl LangTag {
    pub fn parse(text: &str) -> Option<LangTag> {
        let text = text.trim();
        if let Some((src, dst)) = text.split_once("->") {
            let (src, dst) = (src.trim(), dst.trim());
            if is_lang(src) && is_lang(dst) {
                return Some(LangTag::Pair(src.to_string(), dst.to_string()));
            }
            return None;
        }
        is_lang(text).then(|| LangTag::Lang(text.to_string()))
    }

    pub fn source(&self) -> &str {
        match self {
            LangTag::Lang(l) | LangTag::Pair(l, _) => l,
        }
    }

    pub fn target(&self) -> &str {
        match self {
            LangTag::Lang(l) | LangTag::Pair(_, l) => l,
        }
    }
}

fn is_lang(s: &str) -> bool {
    !s.is_empty() && s != "inv" && s.chars().all(|c| c.is_ascii_lowercase())
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LangTag::Lang(l) => f.write_str(l),
            LangTag::Pair(a, b) => write!(f, "{a}->{b}"),
        }
    }
}

/// Name of an atomic task as written in the DSL, e.g. `synonyms[eng]`,
/// `translate[eng->spa]` or `child[inv]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomicName {
    pub base: String,
    pub lang: Option<LangTag>,
    pub inverted: bool,
}

impl AtomicName {
    pub fn new(base: impl Into<String>) -> Self {
        AtomicName { base: base.into(), lang: None, inverted: false }
    }

    pub fn with_lang(mut self, lang: LangTag) -> Self {
        self.lang = Some(lang);
        self
    }

    pub fn inverse(mut self) -> Self {
        self.inverted = !self.inverted;
        self
    }

    pub fn identity() -> Self {
        AtomicName::new(IDENTITY)
    }

    pub fn const_true() -> Self {
        AtomicName::new(TRUE)
    }

    pub fn is_identity(&self) -> bool {
        self.base == IDENTITY && self.lang.is_none() && !self.inverted
    }

    pub fn is_const_true(&self) -> bool {
        self.base == TRUE && self.lang.is_none() && !self.inverted
    }

    /// The same name without the inversion flag.
    pub fn forward(&self) -> AtomicName {
        AtomicName { inverted: false, ..self.clone() }
    }

    /// Parses the bracketed form used in catalog and lexical files,
    /// e.g. `synonyms[eng]` or `child[inv]`. Bases must already be in DSL
    /// (hyphenated) spelling.
    pub fn parse_key(text: &str) -> Option<AtomicName> {
        let text = text.trim();
        let (base, mut rest) = match text.find('[') {
            Some(i) => (&text[..i], &text[i..]),
            None => (text, ""),
        };
        if base.is_empty() || !base.chars().all(is_ident_char) {
            return None;
        }
        let mut name = AtomicName::new(base);
        while !rest.is_empty() {
            let close = rest.find(']')?;
            if !rest.starts_with('[') {
                return None;
            }
            let tag = rest[1..close].trim();
            if tag == "inv" {
                name.inverted = true;
            } else {
                if name.lang.is_some() {
                    return None;
                }
                name.lang = Some(LangTag::parse(tag)?);
            }
            rest = &rest[close + 1..];
        }
        Some(name)
    }
}

pub(crate) fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '-' || c == '_'
}

impl fmt::Display for AtomicName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.base)?;
        if let Some(lang) = &self.lang {
            write!(f, "[{lang}]")?;
        }
        if self.inverted {
            f.write_str("[inv]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Predicate,
    Relation,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskKind::Predicate => "predicate",
            TaskKind::Relation => "relation",
        })
    }
}

/// Which backend answers an atomic task.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Lexical,
    Factual,
    Random,
    Builtin,
}

/// Input or output domain of a word-level task.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Words of a natural-language vocabulary (`eng`, `spa`, ...).
    Lang(String),
    /// Entities of the factual graph, addressed by surface label.
    Entity,
    /// Unconstrained; only the builtin identity and constant-true use this.
    Any,
}

impl Domain {
    /// Most specific domain compatible with both, if any.
    pub fn unify(&self, other: &Domain) -> Option<Domain> {
        match (self, other) {
            (Domain::Any, d) | (d, Domain::Any) => Some(d.clone()),
            (a, b) if a == b => Some(a.clone()),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Lang(l) => f.write_str(l),
            Domain::Entity => f.write_str("entity"),
            Domain::Any => f.write_str("any"),
        }
    }
}

/// Catalog entry describing one atomic task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomicSpec {
    pub name: AtomicName,
    pub kind: TaskKind,
    pub source: Source,
    pub input: Domain,
    pub output: Domain,
    /// Seed of a random relation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl AtomicSpec {
    fn inverted(&self) -> AtomicSpec {
        AtomicSpec {
            name: self.name.clone().inverse(),
            input: self.output.clone(),
            output: self.input.clone(),
            ..self.clone()
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Set of registered atomic tasks.
///
/// `tasks` lists the entries that enumeration draws from. Lookups also
/// accept the inverse of any registered relation and the builtins
/// `identity` / `true`, which are never enumerated.
#[derive(Clone, Debug, Default)]
pub struct Catalog {
    tasks: BTreeMap<AtomicName, AtomicSpec>,
    bases: BTreeSet<String>,
    aliases: BTreeMap<String, String>,
}

impl Catalog {
    pub fn empty() -> Self {
        Catalog::default()
    }

    /// Registers an atomic task. Re-registering a name replaces it.
    pub fn register(&mut self, spec: AtomicSpec) {
        self.bases.insert(spec.name.base.clone());
        self.tasks.insert(spec.name.clone(), spec);
    }

    /// Records a printed (space-separated) spelling for a DSL base name.
    pub fn alias(&mut self, printed: &str, dsl: &str) {
        self.aliases.insert(printed.to_string(), dsl.to_string());
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    /// Registered entries in name order.
    pub fn tasks(&self) -> impl Iterator<Item = &AtomicSpec> {
        self.tasks.values()
    }

    pub fn has_base(&self, base: &str) -> bool {
        base == IDENTITY || base == TRUE || self.bases.contains(base)
    }

    /// DSL spelling for a printed name (`head of state` -> `head-of-state`).
    pub fn dsl_name(&self, printed: &str) -> String {
        self.aliases
            .get(printed)
            .cloned()
            .unwrap_or_else(|| printed.split_whitespace().collect::<Vec<_>>().join("-"))
    }

    /// Printed spelling for a DSL base name.
    pub fn printed_name(&self, dsl: &str) -> String {
        self.aliases
            .iter()
            .find(|(_, d)| d.as_str() == dsl)
            .map(|(p, _)| p.clone())
            .unwrap_or_else(|| dsl.to_string())
    }

    /// Resolves a name to its spec, including builtins and inverses of
    /// registered relations.
    pub fn lookup(&self, name: &AtomicName) -> Option<AtomicSpec> {
        if name.is_identity() {
            return Some(AtomicSpec {
                name: name.clone(),
                kind: TaskKind::Relation,
                source: Source::Builtin,
                input: Domain::Any,
                output: Domain::Any,
                seed: None,
            });
        }
        if name.is_const_true() {
            return Some(AtomicSpec {
                name: name.clone(),
                kind: TaskKind::Predicate,
                source: Source::Builtin,
                input: Domain::Any,
                output: Domain::Any,
                seed: None,
            });
        }
        if let Some(spec) = self.tasks.get(name) {
            return Some(spec.clone());
        }
        if name.inverted {
            let forward = self.tasks.get(&name.forward())?;
            if forward.kind == TaskKind::Relation {
                return Some(forward.inverted());
            }
        }
        None
    }

    /// The published atomic task list.
    pub fn paper() -> Self {
        let mut cat = Catalog::empty();
        let eng = || Domain::Lang("eng".into());
        let spa = || Domain::Lang("spa".into());

        for pos in ["noun", "verb", "adjective", "adverb"] {
            cat.register(lexical_pred(&format!("is-POS-{pos}"), "eng"));
        }
        for s in ["positive", "negative", "neutral"] {
            cat.register(lexical_pred(&format!("is-sentiment-{s}"), "eng"));
        }
        for rel in ["synonyms", "antonyms", "hyponyms", "entailments"] {
            for lang in ["eng", "spa"] {
                cat.register(AtomicSpec {
                    name: AtomicName::new(rel).with_lang(LangTag::Lang(lang.into())),
                    kind: TaskKind::Relation,
                    source: Source::Lexical,
                    input: Domain::Lang(lang.into()),
                    output: Domain::Lang(lang.into()),
                    seed: None,
                });
            }
        }
        cat.register(AtomicSpec {
            name: AtomicName::new("translate").with_lang(LangTag::Pair("eng".into(), "spa".into())),
            kind: TaskKind::Relation,
            source: Source::Lexical,
            input: eng(),
            output: spa(),
            seed: None,
        });
        cat.register(AtomicSpec {
            name: AtomicName::new("translate").with_lang(LangTag::Pair("spa".into(), "eng".into())),
            kind: TaskKind::Relation,
            source: Source::Lexical,
            input: spa(),
            output: eng(),
            seed: None,
        });

        for class in ["human", "film", "book", "city", "taxon"] {
            cat.register(factual(&format!("is-instance-{class}"), TaskKind::Predicate, false));
        }
        for occ in ["actor", "politician", "writer", "journalist", "teacher", "composer"] {
            cat.register(factual(&format!("is-occupation-{occ}"), TaskKind::Predicate, false));
        }
        for city in ["london", "nyc", "la", "buenosaires"] {
            cat.register(factual(&format!("is-birthplace-{city}"), TaskKind::Predicate, false));
        }

        const FACTUAL_RELATIONS: [(&str, bool); 38] = [
            ("child", false),
            ("child", true),
            ("continent", false),
            ("country of citizenship", false),
            ("country of origin", false),
            ("country", false),
            ("creator", false),
            ("creator", true),
            ("developer", false),
            ("diplomatic relation", false),
            ("father", false),
            ("father", true),
            ("genre", false),
            ("has part", false),
            ("head of state", false),
            ("head of state", true),
            ("influenced by", false),
            ("languages spoken written or signed", false),
            ("location", false),
            ("location", true),
            ("manufacturer", false),
            ("member of political party", false),
            ("member of sports team", false),
            ("mother", false),
            ("mother", true),
            ("named after", false),
            ("native language", false),
            ("occupation", false),
            ("official language", false),
            ("original language of film or TV show", false),
            ("owned by", false),
            ("performer", false),
            ("place of birth", false),
            ("place of death", false),
            ("position held", false),
            ("position played on team", false),
            ("record label", false),
            ("sex or gender", false),
        ];
        for (printed, inverted) in FACTUAL_RELATIONS {
            let dsl = printed.replace(' ', "-");
            if printed.contains(' ') {
                cat.alias(printed, &dsl);
            }
            cat.register(factual(&dsl, TaskKind::Relation, inverted));
        }

        for seed in 0..4u64 {
            cat.register(AtomicSpec {
                name: AtomicName::new(format!("random-seed{seed}")).with_lang(LangTag::Lang("eng".into())),
                kind: TaskKind::Relation,
                source: Source::Random,
                input: eng(),
                output: eng(),
                seed: Some(seed),
            });
        }
        cat
    }

    /// Loads a catalog file: one entry per line,
    /// `name<TAB>kind<TAB>source<TAB>input<TAB>output[<TAB>seed]`.
    /// Blank lines and `#` comments are skipped.
    pub fn from_tsv(text: &str, path: &str) -> Result<Self, CatalogError> {
        let mut cat = Catalog::empty();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let bad = |message: String| CatalogError::Malformed {
                path: path.to_string(),
                line: line_no,
                message,
            };
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() < 5 || cols.len() > 6 {
                return Err(bad(format!("expected 5 or 6 tab-separated columns, found {}", cols.len())));
            }
            let printed_base = cols[0].split('[').next().unwrap_or_default();
            let dsl_base = printed_base.split_whitespace().collect::<Vec<_>>().join("-");
            let key = format!("{dsl_base}{}", &cols[0][printed_base.len()..]);
            let name = AtomicName::parse_key(&key).ok_or_else(|| bad(format!("bad atomic name `{}`", cols[0])))?;
            let kind = match cols[1] {
                "predicate" => TaskKind::Predicate,
                "relation" => TaskKind::Relation,
                other => return Err(bad(format!("unknown kind `{other}`"))),
            };
            if name.inverted && kind == TaskKind::Predicate {
                return Err(bad("predicates cannot be inverted".into()));
            }
            let source = match cols[2] {
                "lexical" => Source::Lexical,
                "factual" => Source::Factual,
                "random" => Source::Random,
                other => return Err(bad(format!("unknown source `{other}`"))),
            };
            let domain = |s: &str| match s {
                "entity" => Ok(Domain::Entity),
                l if is_lang(l) => Ok(Domain::Lang(l.to_string())),
                other => Err(bad(format!("unknown domain `{other}`"))),
            };
            let seed = match cols.get(5) {
                Some(s) => Some(s.parse::<u64>().map_err(|_| bad(format!("bad seed `{s}`")))?),
                None if source == Source::Random => return Err(bad("random relation needs a seed".into())),
                None => None,
            };
            if printed_base.contains(' ') {
                cat.alias(printed_base, &dsl_base);
            }
            cat.register(AtomicSpec { name, kind, source, input: domain(cols[3])?, output: domain(cols[4])?, seed });
        }
        Ok(cat)
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CatalogError::Io { path: path.display().to_string(), source })?;
        Catalog::from_tsv(&text, &path.display().to_string())
    }
}

fn lexical_pred(base: &str, lang: &str) -> AtomicSpec {
    AtomicSpec {
        name: AtomicName::new(base).with_lang(LangTag::Lang(lang.into())),
        kind: TaskKind::Predicate,
        source: Source::Lexical,
        input: Domain::Lang(lang.into()),
        output: Domain::Lang(lang.into()),
        seed: None,
    }
}

fn factual(base: &str, kind: TaskKind, inverted: bool) -> AtomicSpec {
    let mut name = AtomicName::new(base);
    name.inverted = inverted;
    AtomicSpec { name, kind, source: Source::Factual, input: Domain::Entity, output: Domain::Entity, seed: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_catalog_sizes() {
        let cat = Catalog::paper();
        let count = |kind, source| cat.tasks().filter(|t| t.kind == kind && t.source == source).count();
        assert_eq!(count(TaskKind::Predicate, Source::Lexical), 7);
        assert_eq!(count(TaskKind::Relation, Source::Lexical), 10);
        assert_eq!(count(TaskKind::Predicate, Source::Factual), 15);
        assert_eq!(count(TaskKind::Relation, Source::Factual), 38);
        assert_eq!(count(TaskKind::Relation, Source::Random), 4);
    }

    #[test]
    fn aliases_round_trip() {
        let cat = Catalog::paper();
        assert_eq!(cat.dsl_name("head of state"), "head-of-state");
        assert_eq!(cat.printed_name("head-of-state"), "head of state");
        assert_eq!(cat.printed_name("father"), "father");
    }

    #[test]
    fn inverse_lookup_swaps_domains() {
        let cat = Catalog::paper();
        let inv = cat.lookup(&AtomicName::parse_key("translate[eng->spa][inv]").unwrap()).unwrap();
        assert_eq!(inv.input, Domain::Lang("spa".into()));
        assert_eq!(inv.output, Domain::Lang("eng".into()));
        assert!(cat.lookup(&AtomicName::parse_key("is-instance-human[inv]").unwrap()).is_none());
    }

    #[test]
    fn parse_key_forms() {
        let n = AtomicName::parse_key("translate[eng->spa]").unwrap();
        assert_eq!(n.lang, Some(LangTag::Pair("eng".into(), "spa".into())));
        assert_eq!(n.to_string(), "translate[eng->spa]");
        assert!(AtomicName::parse_key("child[inv]").unwrap().inverted);
        assert!(AtomicName::parse_key("bad name").is_none());
        assert!(AtomicName::parse_key("x[eng][spa]").is_none());
    }

    #[test]
    fn tsv_catalog() {
        let text = "# toy\nr1[eng]\trelation\tlexical\teng\teng\nhead of state\trelation\tfactual\tentity\tentity\nrnd[eng]\trelation\trandom\teng\teng\t7\n";
        let cat = Catalog::from_tsv(text, "toy.tsv").unwrap();
        assert_eq!(cat.len(), 3);
        assert!(cat.has_base("head-of-state"));
        assert_eq!(cat.printed_name("head-of-state"), "head of state");
        let err = Catalog::from_tsv("p\tpredicate\tlexical\teng\n", "x.tsv").unwrap_err();
        assert!(err.to_string().starts_with("x.tsv:1:"));
    }
}
