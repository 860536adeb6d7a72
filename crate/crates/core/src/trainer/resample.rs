//! Shrinking an N-best list to `m` hypotheses.
//!
//! The `⌊m/3⌋` best and `⌊m/3⌋` worst hypotheses by sentence BLEU are always
//! kept. The remaining `m - 2⌊m/3⌋` slots are filled from the middle of the
//! list by sequential draws without replacement, each draw proportional to
//! `exp(h · w)` over the hypotheses not yet drawn.

use rand::Rng;

use crate::corpus::NBestList;
use crate::error::{Error, Result};
use crate::pl_model::logsumexp;
use crate::rng::{self, Purpose};

/// Indices (ascending) of the hypotheses kept when resampling to `m`.
pub fn resample_indices(
    list: &NBestList,
    bleus: &[f64],
    m: usize,
    weights: &[f64],
    seed: u64,
    round: u64,
) -> Result<Vec<usize>> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "sample size must be at least 3, got {m}"
        )));
    }
    let n = list.len();
    if bleus.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} BLEU scores for a list of {n}",
            bleus.len()
        )));
    }
    if m >= n {
        return Ok((0..n).collect());
    }

    let anchors = m / 3;
    let mut by_bleu: Vec<usize> = (0..n).collect();
    by_bleu.sort_by(|&a, &b| bleus[b].total_cmp(&bleus[a]));
    let mut keep = vec![false; n];
    for &i in by_bleu[..anchors].iter().chain(&by_bleu[n - anchors..]) {
        keep[i] = true;
    }

    let mut pool: Vec<usize> = (0..n).filter(|&i| !keep[i]).collect();
    let mut log_weights: Vec<f64> = pool
        .iter()
        .map(|&i| list.hypotheses[i].dot(weights))
        .collect();
    let mut rng = rng::stream(seed, Purpose::Resample, list.sent_id, round);
    for _ in 0..m - 2 * anchors {
        let norm = logsumexp(&log_weights);
        let u: f64 = rng.random();
        let mut cumulative = 0.0;
        let mut pick = pool.len() - 1;
        for (j, lw) in log_weights.iter().enumerate() {
            cumulative += (lw - norm).exp();
            if u < cumulative {
                pick = j;
                break;
            }
        }
        keep[pool.swap_remove(pick)] = true;
        log_weights.swap_remove(pick);
    }
    Ok((0..n).filter(|&i| keep[i]).collect())
}

/// Resampled copy of `list`, preserving the original relative order.
pub fn resample(
    list: &NBestList,
    bleus: &[f64],
    m: usize,
    weights: &[f64],
    seed: u64,
    round: u64,
) -> Result<NBestList> {
    let kept = resample_indices(list, bleus, m, weights, seed, round)?;
    Ok(NBestList {
        sent_id: list.sent_id,
        hypotheses: kept
            .into_iter()
            .map(|i| list.hypotheses[i].clone())
            .collect(),
    })
}
