//! SPARQL for factual tasks: compilation, a local evaluator for the
//! emitted subset, and an HTTP client for real endpoints.

mod compile;
mod local;
mod remote;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use compile::{compile_all, compile_sparql, entity_term, task_fragment, BindPlacement, CompileOptions};
pub use local::{execute_local, parse_query, ParsedQuery};
pub use remote::{parse_results_json, RemoteEndpoint};

use super::triples::TripleStore;
use super::StoreError;

/// One solution: variable name (without `?`) to value.
pub type Binding = BTreeMap<String, String>;
pub type BindingSet = BTreeSet<Binding>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum QueryMode {
    /// Inputs that participate in a relation.
    Sample,
    /// Outputs for one input; `None` leaves `?x` free.
    Function { input: Option<String> },
    /// Inputs for which a predicate holds.
    PositiveSample,
    /// Inputs for which a predicate fails.
    NegativeSample,
}

impl QueryMode {
    pub fn name(&self) -> &'static str {
        match self {
            QueryMode::Sample => "sample",
            QueryMode::Function { .. } => "function",
            QueryMode::PositiveSample => "positive-sample",
            QueryMode::NegativeSample => "negative-sample",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparqlQuery {
    pub mode: QueryMode,
    /// Selected variable without `?`.
    pub select: String,
    /// Contents of the `WHERE` group.
    pub body: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub prologue: String,
}

impl SparqlQuery {
    pub fn text(&self) -> String {
        format!("{}SELECT ?{} WHERE {{ {} }}", self.prologue, self.select, self.body)
    }
}

impl fmt::Display for SparqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text())
    }
}

/// Where a query runs.
#[derive(Clone, Copy, Debug)]
pub enum Executor<'a> {
    Local(&'a TripleStore),
    Remote(&'a RemoteEndpoint),
}

/// Runs `query` and returns its solutions as a set.
pub fn execute_sparql(executor: Executor<'_>, query: &SparqlQuery) -> Result<BindingSet, StoreError> {
    match executor {
        Executor::Local(store) => execute_local(store, &query.text()),
        Executor::Remote(endpoint) => endpoint.select(&query.text()),
    }
}

/// Values of one variable across a binding set.
pub fn column(bindings: &BindingSet, var: &str) -> BTreeSet<String> {
    bindings.iter().filter_map(|b| b.get(var).cloned()).collect()
}
