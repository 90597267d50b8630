//! Small bundled stores used by the tests, the examples and the CLI's
//! `--fixture` option.
//!
//! * `paper`: a lexical store and an entity graph containing the worked
//!   examples (Russia's head of state, the Tudors, the filter and map
//!   sequences, ...).
//! * `toy`: ten English words with three relations and three predicates,
//!   small enough for exhaustive checks over short sequences.

use crate::algebra::Catalog;
use crate::knowledge::lexical::{FrequencyRules, IngestReport, LexicalStore};
use crate::knowledge::triples::TripleStore;
use crate::knowledge::{StoreError, Stores};

pub const PAPER_TRIPLES: &str = include_str!("../fixtures/triples/triples.tsv");
pub const PAPER_LABELS: &str = include_str!("../fixtures/triples/labels.tsv");

const PAPER_VOCAB: [(&str, &str); 2] = [
    ("eng", include_str!("../fixtures/lexical/vocab.eng.tsv")),
    ("spa", include_str!("../fixtures/lexical/vocab.spa.tsv")),
];
const PAPER_RELATIONS: &str = include_str!("../fixtures/lexical/relations.tsv");
const PAPER_PREDICATES: &str = include_str!("../fixtures/lexical/predicates.tsv");

const TOY_VOCAB: &str = include_str!("../fixtures/toy/vocab.eng.tsv");
const TOY_RELATIONS: &str = include_str!("../fixtures/toy/relations.tsv");
const TOY_PREDICATES: &str = include_str!("../fixtures/toy/predicates.tsv");

fn lexical(vocab: &[(&str, &str)], relations: &str, predicates: &str, catalog: &Catalog) -> Result<(LexicalStore, IngestReport), StoreError> {
    let mut store = LexicalStore::new(FrequencyRules::default());
    let mut report = IngestReport::default();
    for (lang, text) in vocab {
        store.ingest_vocab(lang, text, &format!("vocab.{lang}.tsv"))?;
    }
    store.ingest_relations(relations, "relations.tsv", catalog, &mut report)?;
    store.ingest_predicates(predicates, "predicates.tsv", catalog, &mut report)?;
    Ok((store, report))
}

pub fn paper_lexical(catalog: &Catalog) -> Result<(LexicalStore, IngestReport), StoreError> {
    lexical(&PAPER_VOCAB, PAPER_RELATIONS, PAPER_PREDICATES, catalog)
}

pub fn paper_triples() -> Result<TripleStore, StoreError> {
    TripleStore::parse(PAPER_TRIPLES, PAPER_LABELS, "triples.tsv", "labels.tsv")
}

/// Published catalog over the bundled lexical store and entity graph.
pub fn paper_stores() -> Result<Stores, StoreError> {
    let catalog = Catalog::paper();
    let (lex, _) = paper_lexical(&catalog)?;
    Stores::new(catalog).with_lexical(lex).with_triples(paper_triples()?)
}

pub fn toy_lexical(catalog: &Catalog) -> Result<LexicalStore, StoreError> {
    lexical(&[("eng", TOY_VOCAB)], TOY_RELATIONS, TOY_PREDICATES, catalog).map(|(s, _)| s)
}

/// Published catalog over the ten-word toy store.
pub fn toy_stores() -> Result<Stores, StoreError> {
    let catalog = Catalog::paper();
    let lex = toy_lexical(&catalog)?;
    Ok(Stores::new(catalog).with_lexical(lex))
}
