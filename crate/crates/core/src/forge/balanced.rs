//! Balanced training sets for `union(f_e, f_h)`.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::build::{is_factual, sample_inputs, split_sizes};
use super::{rng_for, Answers, Dataset, Example, ForgeError, GenerationConfig, Outcome, RejectReason, Rejection, Split};
use crate::algebra::{canonicalize, typecheck, TaskExpr, TaskSignature};
use crate::knowledge::sparql::QueryMode;
use crate::knowledge::{eval_expr, Stores};

fn relation_sig(stores: &Stores, e: &TaskExpr) -> Result<TaskSignature, ForgeError> {
    let sig = typecheck(e, stores.catalog()).map_err(|err| ForgeError::Type(err.to_string()))?;
    if !sig.is_word_relation() {
        return Err(ForgeError::Type(format!("`{e}` is not a word-level relation")));
    }
    Ok(sig)
}

fn candidates(stores: &Stores, e: &TaskExpr, sig: &TaskSignature) -> Result<Vec<String>, ForgeError> {
    if is_factual(e, stores.catalog()) {
        sample_inputs(stores, e, QueryMode::Sample)
    } else {
        Ok(stores.universe(&sig.input)?)
    }
}

/// One input with the sources it will be labelled from.
struct Unit {
    input: String,
    answers: Vec<String>,
    labels: Vec<(String, Vec<String>)>,
}

/// Dataset for `union(f_e, f_h)` in which as many labels come from `f_e`
/// as from `f_h`.
///
/// Inputs in both domains come first, each contributing one label from
/// each task. Remaining room is filled with equally many inputs from each
/// side of the symmetric difference. A unit's examples share a split, and
/// the final list is shuffled as a whole.
pub fn build_balanced_union(stores: &Stores, f_e: &TaskExpr, f_h: &TaskExpr, config: &GenerationConfig) -> Result<Outcome, ForgeError> {
    let sig_e = relation_sig(stores, f_e)?;
    let sig_h = relation_sig(stores, f_h)?;
    if sig_e.input.unify(&sig_h.input).is_none() {
        return Err(ForgeError::Type(format!("inputs of `{f_e}` and `{f_h}` are in different domains")));
    }
    let union = canonicalize(&TaskExpr::union(f_e.clone(), f_h.clone()));
    let task = union.to_string();
    let (tag_e, tag_h) = (canonicalize(f_e).to_string(), canonicalize(f_h).to_string());
    let mut rng = rng_for(config.seed, &format!("balanced {tag_e} {tag_h}"));

    let pool: BTreeSet<String> = candidates(stores, f_e, &sig_e)?.into_iter().chain(candidates(stores, f_h, &sig_h)?).collect();
    let (mut both, mut only_e, mut only_h) = (Vec::new(), Vec::new(), Vec::new());
    for x in pool {
        let a_e: Vec<String> = eval_expr(stores, f_e, &x)?.into_set().into_iter().collect();
        let a_h: Vec<String> = eval_expr(stores, f_h, &x)?.into_set().into_iter().collect();
        match (a_e.is_empty(), a_h.is_empty()) {
            (false, false) => both.push((x, a_e, a_h)),
            (false, true) => only_e.push((x, a_e, a_h)),
            (true, false) => only_h.push((x, a_e, a_h)),
            (true, true) => {}
        }
    }
    if both.is_empty() {
        return Ok(Outcome::Rejected(Rejection { task, reason: RejectReason::EmptyIntersection }));
    }
    both.shuffle(&mut rng);
    only_e.shuffle(&mut rng);
    only_h.shuffle(&mut rng);

    let total = config.total();
    let shared = both.len().min(total / 2);
    let top_up = ((total - 2 * shared) / 2).min(only_e.len()).min(only_h.len());

    let pick = |a: &[String], rng: &mut rand_chacha::ChaCha8Rng| a[rng.random_range(0..a.len())].clone();
    let mut units = Vec::new();
    for (x, a_e, a_h) in both.into_iter().take(shared) {
        let labels = vec![(tag_e.clone(), vec![pick(&a_e, &mut rng)]), (tag_h.clone(), vec![pick(&a_h, &mut rng)])];
        let answers: BTreeSet<String> = a_e.into_iter().chain(a_h).collect();
        units.push(Unit { input: x, answers: answers.into_iter().collect(), labels });
    }
    for (x, a_e, _) in only_e.into_iter().take(top_up) {
        let labels = vec![(tag_e.clone(), vec![pick(&a_e, &mut rng)])];
        units.push(Unit { input: x, answers: a_e, labels });
    }
    for (x, _, a_h) in only_h.into_iter().take(top_up) {
        let labels = vec![(tag_h.clone(), vec![pick(&a_h, &mut rng)])];
        units.push(Unit { input: x, answers: a_h, labels });
    }

    let count = 2 * shared + 2 * top_up;
    if count < config.min_examples {
        return Ok(Outcome::Rejected(Rejection {
            task,
            reason: RejectReason::TooFewExamples { survivors: count, min: config.min_examples },
        }));
    }

    units.shuffle(&mut rng);
    let train_target = split_sizes(count, config);
    let mut train_count = 0;
    let mut examples = Vec::with_capacity(count);
    for unit in units {
        let split = if train_count + unit.labels.len() <= train_target {
            train_count += unit.labels.len();
            Split::Train
        } else {
            Split::Eval
        };
        for (source, label) in unit.labels {
            examples.push(Example {
                id: String::new(),
                split,
                input: vec![unit.input.clone()],
                answers: Answers::Set(unit.answers.clone()),
                sampled_label: label,
                label_source: Some(source),
            });
        }
    }
    examples.shuffle(&mut rng);
    let width = count.max(1).to_string().len().max(6);
    for (i, e) in examples.iter_mut().enumerate() {
        e.id = format!("{i:0width$}");
    }
    Ok(Outcome::Accepted(Dataset {
        task,
        kind: sig_e.kind,
        level: sig_e.level,
        config: config.clone(),
        separator: None,
        examples,
    }))
}
