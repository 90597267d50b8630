use std::collections::BTreeSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::sequence::{seq_pools, seq_sample_from};
use super::{bool_word, rng_for, Answers, Dataset, Example, ForgeError, GenerationConfig, Outcome, RejectReason, Rejection, Split};
use crate::algebra::{canonicalize, normalize, typecheck, Catalog, Level, Source, TaskExpr, TaskKind, TaskSignature};
use crate::knowledge::sparql::{column, compile_sparql, execute_sparql, CompileOptions, Executor, QueryMode};
use crate::knowledge::{eval_expr, eval_seq, FactualBackend, Stores, Value};

pub(super) fn is_factual(expr: &TaskExpr, catalog: &Catalog) -> bool {
    expr.atomics().iter().all(|a| catalog.lookup(a).is_some_and(|s| s.source == Source::Factual))
}

/// Runs a sample query and returns the matching inputs as words.
pub(super) fn sample_inputs(stores: &Stores, expr: &TaskExpr, mode: QueryMode) -> Result<Vec<String>, ForgeError> {
    let query = compile_sparql(expr, stores.catalog(), &mode, &CompileOptions::default())?;
    let words: BTreeSet<String> = match stores.factual() {
        Some(FactualBackend::Local(t)) => column(&execute_sparql(Executor::Local(t), &query)?, "x")
            .iter()
            .map(|id| t.surface(id).to_string())
            .collect(),
        Some(FactualBackend::Remote(r)) => column(&execute_sparql(Executor::Remote(r), &query)?, "x"),
        None => return Err(crate::knowledge::StoreError::MissingBackend("factual").into()),
    };
    Ok(words.into_iter().collect())
}

/// Split sizes for `n` survivors, proportional when fewer than requested.
pub(super) fn split_sizes(n: usize, config: &GenerationConfig) -> usize {
    let total = config.total();
    if total == 0 || n >= total {
        config.train_size.min(n)
    } else {
        ((n as u128 * config.train_size as u128 + total as u128 / 2) / total as u128) as usize
    }
}

fn finish(task: String, sig: &TaskSignature, config: &GenerationConfig, items: Vec<(Vec<String>, Answers, Vec<String>)>) -> Outcome {
    if items.len() < config.min_examples {
        return Outcome::Rejected(Rejection {
            task,
            reason: RejectReason::TooFewExamples { survivors: items.len(), min: config.min_examples },
        });
    }
    let train = split_sizes(items.len(), config);
    let width = items.len().max(1).to_string().len().max(6);
    let examples = items
        .into_iter()
        .enumerate()
        .map(|(i, (input, answers, sampled_label))| Example {
            id: format!("{i:0width$}"),
            split: if i < train { Split::Train } else { Split::Eval },
            input,
            answers,
            sampled_label,
            label_source: None,
        })
        .collect();
    Outcome::Accepted(Dataset {
        task,
        kind: sig.kind,
        level: sig.level,
        config: config.clone(),
        separator: None,
        examples,
    })
}

/// Builds the dataset of a task, or the reason it is rejected.
///
/// Word-level inputs come from the sample queries for factual tasks and
/// from the frequent vocabulary otherwise; predicates take equally many
/// positive and negative inputs. Inputs with empty answers are dropped.
/// Inputs are distinct, so the train and eval words never overlap.
pub fn build_dataset(stores: &Stores, expr: &TaskExpr, config: &GenerationConfig) -> Result<Outcome, ForgeError> {
    let catalog = stores.catalog();
    let sig = typecheck(expr, catalog).map_err(|e| ForgeError::Type(e.to_string()))?;
    let task = canonicalize(expr).to_string();
    let mut rng = rng_for(config.seed, &format!("dataset {task}"));
    if sig.is_sequential() {
        return build_sequential(stores, expr, &sig, task, config, &mut rng);
    }
    let total = config.total();
    let factual = is_factual(expr, catalog);
    let items = match sig.kind {
        TaskKind::Relation => {
            let mut pool =
                if factual { sample_inputs(stores, expr, QueryMode::Sample)? } else { stores.universe(&sig.input)? };
            pool.shuffle(&mut rng);
            let mut items = Vec::new();
            for w in pool {
                if items.len() == total {
                    break;
                }
                let answers: Vec<String> = eval_expr(stores, expr, &w)?.into_set().into_iter().collect();
                if answers.is_empty() {
                    continue;
                }
                let label = answers[rng.random_range(0..answers.len())].clone();
                items.push((vec![w], Answers::Set(answers), vec![label]));
            }
            items
        }
        TaskKind::Predicate => {
            let (mut pos, mut neg) = if factual {
                (sample_inputs(stores, expr, QueryMode::PositiveSample)?, sample_inputs(stores, expr, QueryMode::NegativeSample)?)
            } else {
                let mut pos = Vec::new();
                let mut neg = Vec::new();
                for w in stores.universe(&sig.input)? {
                    if eval_expr(stores, expr, &w)? == Value::Bool(true) {
                        pos.push(w);
                    } else {
                        neg.push(w);
                    }
                }
                (pos, neg)
            };
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let k = pos.len().min(neg.len());
            let (take_pos, take_neg) = (k.min(total.div_ceil(2)), k.min(total / 2));
            let mut items = Vec::new();
            for (words, take) in [(pos, take_pos), (neg, take_neg)] {
                for w in words.into_iter().take(take) {
                    let b = eval_expr(stores, expr, &w)?.as_bool().unwrap_or(false);
                    items.push((vec![w], Answers::Bool(b), vec![bool_word(b).to_string()]));
                }
            }
            items.shuffle(&mut rng);
            items
        }
    };
    Ok(finish(task, &sig, config, items))
}

fn build_sequential<R: Rng>(
    stores: &Stores,
    expr: &TaskExpr,
    sig: &TaskSignature,
    task: String,
    config: &GenerationConfig,
    rng: &mut R,
) -> Result<Outcome, ForgeError> {
    let nf = normalize(expr, stores.catalog()).map_err(|e| ForgeError::Type(e.to_string()))?;
    let pools = seq_pools(stores, &nf)?;
    let n = config.seq_len;
    let reject = |reason| Ok(Outcome::Rejected(Rejection { task: task.clone(), reason }));
    let total = config.total();
    let mut seen = BTreeSet::new();
    let mut items = Vec::new();
    let attempts = total.saturating_mul(4).saturating_add(16);
    for _ in 0..attempts {
        if items.len() == total {
            break;
        }
        let m = match config.seq_out_len {
            Some(m) => m,
            None if pools.failing.is_empty() || n == 0 => n,
            None => rng.random_range(1..=n),
        };
        let input = match seq_sample_from(&pools, n, m, rng) {
            Ok(s) => s,
            Err(reason) => return reject(reason),
        };
        if !seen.insert(input.clone()) {
            continue;
        }
        let out = eval_seq(stores, &nf, &input)?;
        let Some(label) = out.sample_uniform(rng) else { continue };
        items.push((input, Answers::Product(out.slots().to_vec()), label));
    }
    debug_assert_eq!(sig.level, Level::Sequence);
    Ok(finish(task, sig, config, items))
}

/// Renders sequential text with `sep` between word spans.
pub fn with_separators(ds: &Dataset, sep: &str) -> Result<Dataset, ForgeError> {
    if ds.level != Level::Sequence {
        return Err(ForgeError::Invalid(format!("`{}` is not a sequential dataset", ds.task)));
    }
    if sep.is_empty() || sep.contains(char::is_whitespace) {
        return Err(ForgeError::Invalid(format!("separator `{sep}` must be a single non-empty token")));
    }
    Ok(Dataset { separator: Some(sep.to_string()), ..ds.clone() })
}

/// Keeps a seeded uniform subset of `k` train examples; eval is untouched.
pub fn subsample_fewshot(ds: &Dataset, k: usize, trial_seed: u64) -> Result<Dataset, ForgeError> {
    let train: Vec<usize> = ds.examples.iter().enumerate().filter(|(_, e)| e.split == Split::Train).map(|(i, _)| i).collect();
    if k > train.len() {
        return Err(ForgeError::Invalid(format!("cannot take {k} of {} train examples", train.len())));
    }
    let mut rng = rng_for(trial_seed, &format!("fewshot {}", ds.task));
    let mut chosen: Vec<usize> = index::sample(&mut rng, train.len(), k).into_iter().map(|i| train[i]).collect();
    chosen.sort_unstable();
    let keep: BTreeSet<usize> = chosen.into_iter().collect();
    let examples = ds
        .examples
        .iter()
        .enumerate()
        .filter(|(i, e)| e.split == Split::Eval || keep.contains(i))
        .map(|(_, e)| e.clone())
        .collect();
    Ok(Dataset { examples, ..ds.clone() })
}
