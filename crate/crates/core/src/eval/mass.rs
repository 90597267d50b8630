//! Probability mass a model puts on each constituent of a union.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{index_predictions, EvalError, PredictionRecord};
use crate::algebra::TaskExpr;
use crate::forge::Dataset;
use crate::knowledge::{eval_expr, Stores};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub id: String,
    pub input: String,
    /// Total probability of candidates in `f_e(x)`.
    pub mass_e: f64,
    pub mass_h: f64,
    /// Highest single candidate probability inside each answer set.
    pub top_e: f64,
    pub top_h: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MassSummary {
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation over √n).
    pub std_err: f64,
}

impl MassSummary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return MassSummary::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std_err = if v.len() < 2 {
            0.0
        } else {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
        };
        MassSummary { mean, std_err }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionMassReport {
    pub task_e: String,
    pub task_h: String,
    pub rows: Vec<MassRow>,
    /// Predictions whose input is outside one of the two domains.
    pub outside_domain: Vec<String>,
    pub mass_e: MassSummary,
    pub mass_h: MassSummary,
    pub top_e: MassSummary,
    pub top_h: MassSummary,
    /// Masses only cover the listed candidates, not the full output space.
    pub note: String,
}

fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Sums candidate probabilities inside `f_e(x)` and `f_h(x)` for every
/// prediction whose input lies in both domains. A candidate in both sets
/// counts toward both.
pub fn distribution_mass(
    preds: &[PredictionRecord],
    ds: &Dataset,
    f_e: &TaskExpr,
    f_h: &TaskExpr,
    stores: &Stores,
) -> Result<DistributionMassReport, EvalError> {
    let index = index_predictions(preds)?;
    let mut rows = Vec::new();
    let mut outside = Vec::new();
    for e in &ds.examples {
        let Some(p) = index.get(e.id.as_str()) else { continue };
        let cands = p.candidates.as_ref().ok_or_else(|| EvalError::MissingCandidates(p.id.clone()))?;
        let [x] = e.input.as_slice() else {
            return Err(EvalError::Invalid(format!("example `{}` is not word-level", e.id)));
        };
        let a_e: BTreeSet<String> = eval_expr(stores, f_e, x)?.into_set();
        let a_h: BTreeSet<String> = eval_expr(stores, f_h, x)?.into_set();
        if a_e.is_empty() || a_h.is_empty() {
            outside.push(e.id.clone());
            continue;
        }
        let mut row = MassRow { id: e.id.clone(), input: x.clone(), mass_e: 0.0, mass_h: 0.0, top_e: 0.0, top_h: 0.0 };
        for c in cands {
            let t = normalized(&c.text);
            if a_e.contains(&t) {
                row.mass_e += c.prob;
                row.top_e = row.top_e.max(c.prob);
            }
            if a_h.contains(&t) {
                row.mass_h += c.prob;
                row.top_h = row.top_h.max(c.prob);
            }
        }
        row.mass_e = row.mass_e.min(1.0);
        row.mass_h = row.mass_h.min(1.0);
        rows.push(row);
    }
    Ok(DistributionMassReport {
        task_e: f_e.to_string(),
        task_h: f_h.to_string(),
        mass_e: MassSummary::of(rows.iter().map(|r| r.mass_e)),
        mass_h: MassSummary::of(rows.iter().map(|r| r.mass_h)),
        top_e: MassSummary::of(rows.iter().map(|r| r.top_e)),
        top_h: MassSummary::of(rows.iter().map(|r| r.top_h)),
        rows,
        outside_domain: outside,
        note: "masses cover only the listed candidates".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{parse, Level, TaskKind};
    use crate::eval::Candidate;
    use crate::fixtures::paper_stores;
    use crate::forge::{Answers, Example, GenerationConfig, Split};

    fn one(input: &str) -> Dataset {
        Dataset {
            task: "u".into(),
            kind: TaskKind::Relation,
            level: Level::Word,
            config: GenerationConfig::default(),
            separator: None,
            examples: vec![Example {
                id: "0".into(),
                split: Split::Eval,
                input: vec![input.into()],
                answers: Answers::Set(vec![]),
                sampled_label: vec![],
                label_source: None,
            }],
        }
    }

    fn rec(c: &[(&str, f64)]) -> Vec<PredictionRecord> {
        vec![PredictionRecord {
            id: "0".into(),
            text: String::new(),
            candidates: Some(c.iter().map(|(t, p)| Candidate { text: t.to_string(), prob: *p }).collect()),
        }]
    }

    #[test]
    fn sums_and_overlap() {
        let stores = paper_stores().unwrap();
        let cat = stores.catalog();
        let (fe, fh) = (parse("antonyms[eng]", cat).unwrap(), parse("entailments[eng]", cat).unwrap());
        let r = distribution_mass(&rec(&[("die", 0.4), ("breathe", 0.3), ("other", 0.3)]), &one("live"), &fe, &fh, &stores).unwrap();
        assert!((r.rows[0].mass_e - 0.4).abs() < 1e-12 && (r.rows[0].mass_h - 0.3).abs() < 1e-12);
        let (fs, fe2) = (parse("synonyms[eng]", cat).unwrap(), parse("entailments[eng]", cat).unwrap());
        let r = distribution_mass(&rec(&[("be", 0.2)]), &one("live"), &fs, &fe2, &stores).unwrap();
        assert_eq!((r.rows[0].mass_e, r.rows[0].mass_h), (0.2, 0.2));
        let r = distribution_mass(&rec(&[("zzz", 0.9)]), &one("live"), &fe, &fh, &stores).unwrap();
        assert_eq!((r.rows[0].mass_e, r.rows[0].mass_h), (0.0, 0.0));
        let r = distribution_mass(&rec(&[("x", 0.9)]), &one("bones"), &fe, &fh, &stores).unwrap();
        assert_eq!(r.outside_domain, vec!["0"]);
    }
}
