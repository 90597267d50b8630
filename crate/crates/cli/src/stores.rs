//! Store flags shared by the commands that evaluate tasks.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::anyhow;
use clap::{Args, ValueEnum};
use taskforge::algebra::Catalog;
use taskforge::eval::EvalError;
use taskforge::fixtures;
use taskforge::forge::{ForgeError, Manifest};
use taskforge::knowledge::lexical::{FrequencyRules, LexicalStore};
use taskforge::knowledge::sparql::RemoteEndpoint;
use taskforge::knowledge::triples::TripleStore;
use taskforge::knowledge::{FactualBackend, StoreError, Stores};

use crate::{Failure, BACKEND, DATA};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixture {
    Paper,
    Toy,
}

impl Fixture {
    fn name(self) -> &'static str {
        match self {
            Fixture::Paper => "paper",
            Fixture::Toy => "toy",
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct StoreArgs {
    /// Bundled stores; other store flags are then ignored.
    #[arg(long, value_enum)]
    pub fixture: Option<Fixture>,
    /// Catalog TSV; the built-in catalog when absent.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Directory with `vocab.<lang>.tsv`, `relations.tsv`, `predicates.tsv`.
    #[arg(long)]
    pub lexical: Option<PathBuf>,
    /// `LANG=N` minimum corpus count; may be repeated.
    #[arg(long = "min-count")]
    pub min_count: Vec<String>,
    /// Entity triples TSV (needs `--labels`).
    #[arg(long, requires = "labels")]
    pub triples: Option<PathBuf>,
    #[arg(long, requires = "triples")]
    pub labels: Option<PathBuf>,
    /// SPARQL endpoint for factual tasks.
    #[arg(long, conflicts_with = "triples")]
    pub endpoint: Option<String>,
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long = "timeout-secs", default_value_t = 60)]
    pub timeout_secs: u64,
    #[arg(long = "max-in-flight", default_value_t = 4)]
    pub max_in_flight: usize,
}

/// Exit code for a store failure: remote trouble is a backend error.
pub fn store_failure(e: StoreError) -> Failure {
    let code = if matches!(e, StoreError::Remote { .. }) { BACKEND } else { DATA };
    Failure { code, error: Some(e.into()) }
}

pub fn forge_failure(e: ForgeError) -> Failure {
    match e {
        ForgeError::Store(s) => store_failure(s),
        other => Failure::data(other),
    }
}

pub fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::Store(s) => store_failure(s),
        other => Failure::data(other),
    }
}

pub fn load_catalog(path: Option<&Path>, manifest: &mut Manifest) -> Result<Catalog, Failure> {
    match path {
        Some(p) => {
            manifest.input(p).map_err(forge_failure)?;
            Catalog::load(p).map_err(Failure::data)
        }
        None => Ok(Catalog::paper()),
    }
}

fn rules(pairs: &[String]) -> Result<FrequencyRules, Failure> {
    let mut rules = FrequencyRules::default();
    for pair in pairs {
        let (lang, n) = pair.split_once('=').ok_or_else(|| Failure::usage(anyhow!("--min-count expects LANG=N, got `{pair}`")))?;
        let n = n.parse().map_err(|_| Failure::usage(anyhow!("--min-count `{pair}`: bad count")))?;
        rules.min_count.insert(lang.to_string(), n);
    }
    Ok(rules)
}

impl StoreArgs {
    pub fn build(&self, manifest: &mut Manifest) -> Result<Stores, Failure> {
        let catalog = load_catalog(self.catalog.as_deref(), manifest)?;
        if let Some(fixture) = self.fixture {
            manifest.param("fixture", fixture.name());
            return match fixture {
                Fixture::Paper => {
                    let (lex, _) = fixtures::paper_lexical(&catalog).map_err(store_failure)?;
                    Stores::new(catalog).with_lexical(lex).with_triples(fixtures::paper_triples().map_err(store_failure)?)
                }
                Fixture::Toy => Ok(Stores::new(catalog.clone()).with_lexical(fixtures::toy_lexical(&catalog).map_err(store_failure)?)),
            }
            .map_err(store_failure);
        }
        let mut stores = Stores::new(catalog);
        if let Some(dir) = &self.lexical {
            manifest.input(dir).map_err(forge_failure)?;
            let rules = rules(&self.min_count)?;
            manifest.param("min-count", &rules.min_count);
            let (lex, report) = LexicalStore::load_dir(dir, stores.catalog(), rules).map_err(store_failure)?;
            manifest.param("ingest", report);
            stores = stores.with_lexical(lex);
        }
        if let (Some(t), Some(l)) = (&self.triples, &self.labels) {
            manifest.input(t).map_err(forge_failure)?;
            manifest.input(l).map_err(forge_failure)?;
            stores = stores.with_triples(TripleStore::load(t, l).map_err(store_failure)?).map_err(store_failure)?;
        }
        if let Some(url) = &self.endpoint {
            manifest.param("endpoint", url);
            let endpoint = RemoteEndpoint::with_options(
                url.clone(),
                self.cache_dir.clone(),
                Duration::from_secs(self.timeout_secs),
                self.max_in_flight.max(1),
            );
            stores = stores.with_factual(FactualBackend::Remote(endpoint));
        }
        Ok(stores)
    }
}
