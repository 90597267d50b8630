//! Scoring prediction files.
//!
//! Per-example accuracy is the best per-position accuracy over the answer
//! set, with sequential predictions first grouped into words. Adaptability
//! is the mean accuracy on the train split (`mem`) or the eval split
//! (`gen`).

mod accuracy;
mod mass;
mod regression;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::forge::{bool_word, Answers, Dataset, Split};
use crate::knowledge::StoreError;

pub use accuracy::{best_grouping, position_accuracy, segment_align, segment_align_product, token_accuracy, Alignment};
pub use mass::{distribution_mass, DistributionMassReport, MassRow, MassSummary};
pub use regression::{
    composition_regression, fit_groups, parse_composition_table, CompositionRow, GroupFit, RegressionFit, MIN_SIGNIFICANT_POINTS,
};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}:{line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("prediction for `{0}` appears more than once")]
    DuplicateId(String),
    #[error("prediction for `{0}` has no candidate list")]
    MissingCandidates(String),
    #[error("{0}")]
    Invalid(String),
    #[error("regression: {0}")]
    Regression(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub prob: f64,
}

/// One model output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Candidate>>,
}

/// Tolerance on the candidate probability total.
const MASS_SLACK: f64 = 1e-9;

fn check_candidates(r: &PredictionRecord) -> Result<(), String> {
    let Some(cands) = &r.candidates else { return Ok(()) };
    let mut total = 0.0;
    for c in cands {
        if !(0.0..=1.0).contains(&c.prob) {
            return Err(format!("candidate `{}` has probability {} outside [0, 1]", c.text, c.prob));
        }
        total += c.prob;
    }
    if total > 1.0 + MASS_SLACK {
        return Err(format!("candidate probabilities sum to {total} > 1"));
    }
    Ok(())
}

/// Parses a prediction file: one JSON record per line.
pub fn parse_predictions(text: &str, path: &str) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| EvalError::Malformed { path: path.to_string(), line: idx + 1, message };
        let rec: PredictionRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        check_candidates(&rec).map_err(bad)?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRecord>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io { path: path.display().to_string(), source })?;
    parse_predictions(&text, &path.display().to_string())
}

pub fn render_predictions(records: &[PredictionRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("predictions serialize") + "\n").collect()
}

pub(crate) fn index_predictions(preds: &[PredictionRecord]) -> Result<BTreeMap<&str, &PredictionRecord>, EvalError> {
    let mut map = BTreeMap::new();
    for p in preds {
        if map.insert(p.id.as_str(), p).is_some() {
            return Err(EvalError::DuplicateId(p.id.clone()));
        }
    }
    Ok(map)
}

/// Memorization (train split) or generalization (eval split).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Which {
    Mem,
    Gen,
}

impl Which {
    pub fn split(self) -> Split {
        match self {
            Which::Mem => Split::Train,
            Which::Gen => Split::Eval,
        }
    }
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::Mem => "mem",
            Which::Gen => "gen",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub id: String,
    pub accuracy: f64,
    /// Word grouping chosen for sequential predictions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segmentation: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub which: Which,
    /// Mean accuracy over scored examples.
    pub aggregate: f64,
    pub scored: usize,
    pub expected: usize,
    /// `scored / expected`; 1 for an empty split.
    pub coverage: f64,
    /// Split examples without a prediction, excluded from the mean.
    pub missing: Vec<String>,
    pub examples: Vec<ExampleScore>,
}

/// Accuracy of one prediction text on one example's answers.
pub fn score_example(text: &str, answers: &Answers, separator: Option<&str>) -> (f64, Option<Vec<String>>) {
    match answers {
        Answers::Set(words) => {
            let pred: Vec<&str> = text.split_whitespace().collect();
            let ys: Vec<Vec<&str>> = words.iter().map(|w| w.split_whitespace().collect()).collect();
            (token_accuracy(&pred, &ys), None)
        }
        Answers::Bool(b) => {
            let pred: Vec<&str> = text.split_whitespace().collect();
            (token_accuracy(&pred, &[vec![bool_word(*b)]]), None)
        }
        Answers::Product(slots) => {
            let a = segment_align_product(text, slots, separator);
            (a.accuracy, Some(a.words))
        }
    }
}

/// Mean accuracy of `preds` on one split of `ds`.
pub fn adaptability(preds: &[PredictionRecord], ds: &Dataset, which: Which) -> Result<EvalReport, EvalError> {
    let index = index_predictions(preds)?;
    let sep = ds.separator.as_deref();
    let mut examples = Vec::new();
    let mut missing = Vec::new();
    let mut expected = 0;
    for e in ds.split(which.split()) {
        expected += 1;
        match index.get(e.id.as_str()) {
            Some(p) => {
                let (accuracy, segmentation) = score_example(&p.text, &e.answers, sep);
                examples.push(ExampleScore { id: e.id.clone(), accuracy, segmentation });
            }
            None => missing.push(e.id.clone()),
        }
    }
    let scored = examples.len();
    let aggregate = if scored == 0 { 0.0 } else { examples.iter().map(|s| s.accuracy).sum::<f64>() / scored as f64 };
    let coverage = if expected == 0 { 1.0 } else { scored as f64 / expected as f64 };
    Ok(EvalReport { task: ds.task.clone(), which, aggregate, scored, expected, coverage, missing, examples })
}

/// Predictions that emit each example's sampled label.
pub fn oracle_predictions(ds: &Dataset) -> Vec<PredictionRecord> {
    ds.examples
        .iter()
        .map(|e| PredictionRecord { id: e.id.clone(), text: e.label_text(ds.separator.as_deref()), candidates: None })
        .collect()
}
