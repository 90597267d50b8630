//! Input sequences for sequential tasks.
//!
//! A sequence of length `n` with `m` surviving words takes `m` words that
//! pass the filter and have a non-empty image under the map, `n - m` words
//! that fail the filter, and shuffles them. Words may repeat within a
//! sequence.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{rng_for, ForgeError, RejectReason};
use crate::algebra::{typecheck, Domain, MapFilterNF};
use crate::knowledge::{eval_expr, Stores};

/// Candidate words for one normal form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SeqPools {
    /// Pass the filter and lie in the domain of the map.
    pub passing: Vec<String>,
    /// Fail the filter.
    pub failing: Vec<String>,
}

fn input_domain(stores: &Stores, nf: &MapFilterNF) -> Result<Domain, ForgeError> {
    let sig = |e| typecheck(e, stores.catalog()).map_err(|err| ForgeError::Type(err.to_string()));
    let m = sig(&nf.map_rel)?;
    let f = sig(&nf.filter_pred)?;
    m.input.unify(&f.input).ok_or_else(|| {
        ForgeError::Type(format!("map input `{}` and filter input `{}` do not agree", m.input, f.input))
    })
}

pub fn seq_pools(stores: &Stores, nf: &MapFilterNF) -> Result<SeqPools, ForgeError> {
    let domain = input_domain(stores, nf)?;
    let mut pools = SeqPools::default();
    for w in stores.universe(&domain)? {
        let pass = eval_expr(stores, &nf.filter_pred, &w)?.as_bool().unwrap_or(false);
        if !pass {
            pools.failing.push(w);
        } else if !eval_expr(stores, &nf.map_rel, &w)?.into_set().is_empty() {
            pools.passing.push(w);
        }
    }
    Ok(pools)
}

/// Draws one sequence of `n` words of which exactly `m` survive.
pub fn seq_sample_from<R: Rng + ?Sized>(pools: &SeqPools, n: usize, m: usize, rng: &mut R) -> Result<Vec<String>, RejectReason> {
    let infeasible = |detail: String| Err(RejectReason::Infeasible { detail });
    if m > n {
        return infeasible(format!("output length {m} exceeds input length {n}"));
    }
    if m > 0 && pools.passing.is_empty() {
        return infeasible("no word passes the filter inside the map's domain".into());
    }
    if n > m && pools.failing.is_empty() {
        return infeasible("no word fails the filter".into());
    }
    let mut seq: Vec<String> = (0..m).map(|_| pools.passing[rng.random_range(0..pools.passing.len())].clone()).collect();
    seq.extend((m..n).map(|_| pools.failing[rng.random_range(0..pools.failing.len())].clone()));
    seq.shuffle(rng);
    Ok(seq)
}

/// Seeded single draw; see [`seq_sample_from`].
pub fn seq_sample(
    stores: &Stores,
    nf: &MapFilterNF,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Result<Vec<String>, RejectReason>, ForgeError> {
    let pools = seq_pools(stores, nf)?;
    let mut rng = rng_for(seed, &format!("seq-sample {nf} {n} {m}"));
    Ok(seq_sample_from(&pools, n, m, &mut rng))
}
