//! BLEU statistics, add-one smoothed sentence BLEU, corpus BLEU, and the
//! BLEU-ordered ground-truth permutations used as training targets.

use std::collections::HashMap;
use std::ops::{Add, AddAssign};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{NBestList, ReferenceSet};
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub const DEFAULT_MAX_N: usize = 4;

/// Clipped n-gram matches and lengths for one sentence or a whole corpus.
/// Index `n - 1` of `matches`/`totals` holds the order-`n` counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn zero(max_n: usize) -> Self {
        Self {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            hyp_len: 0,
            ref_len: 0,
        }
    }

    pub fn max_n(&self) -> usize {
        self.matches.len()
    }
}

impl AddAssign<&BleuStats> for BleuStats {
    fn add_assign(&mut self, rhs: &BleuStats) {
        assert_eq!(self.max_n(), rhs.max_n(), "BLEU orders differ");
        for (a, b) in self.matches.iter_mut().zip(&rhs.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&rhs.totals) {
            *a += b;
        }
        self.hyp_len += rhs.hyp_len;
        self.ref_len += rhs.ref_len;
    }
}

impl Add<&BleuStats> for BleuStats {
    type Output = BleuStats;

    fn add(mut self, rhs: &BleuStats) -> BleuStats {
        self += rhs;
        self
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

/// Per-order maximum n-gram counts over a sentence's references, built once
/// and reused for every hypothesis of the sentence.
#[derive(Debug, Clone)]
pub struct ReferenceNgrams<'a> {
    lengths: Vec<u64>,
    max_counts: Vec<HashMap<&'a [String], u64>>,
}

impl<'a> ReferenceNgrams<'a> {
    pub fn new(refs: &'a [Vec<String>], max_n: usize) -> Result<Self> {
        if refs.is_empty() {
            return Err(Error::InvalidArgument("no references given".into()));
        }
        if max_n == 0 {
            return Err(Error::InvalidArgument(
                "BLEU order must be at least 1".into(),
            ));
        }
        let max_counts = (1..=max_n)
            .map(|n| {
                let mut max_ref: HashMap<&[String], u64> = HashMap::new();
                for r in refs {
                    for (gram, count) in ngram_counts(r, n) {
                        let slot = max_ref.entry(gram).or_insert(0);
                        *slot = (*slot).max(count);
                    }
                }
                max_ref
            })
            .collect();
        Ok(Self {
            lengths: refs.iter().map(|r| r.len() as u64).collect(),
            max_counts,
        })
    }

    pub fn max_n(&self) -> usize {
        self.max_counts.len()
    }

    /// Statistics of `hyp` against these references.
    pub fn stats(&self, hyp: &[String]) -> BleuStats {
        let hyp_len = hyp.len() as u64;
        let ref_len = self
            .lengths
            .iter()
            .copied()
            .min_by_key(|&len| (len.abs_diff(hyp_len), len))
            .expect("references are non-empty");
        let mut stats = BleuStats::zero(self.max_n());
        stats.hyp_len = hyp_len;
        stats.ref_len = ref_len;
        for (order, max_ref) in self.max_counts.iter().enumerate() {
            let n = order + 1;
            stats.totals[order] = hyp_len.saturating_sub(n as u64 - 1);
            stats.matches[order] = ngram_counts(hyp, n)
                .iter()
                .map(|(gram, &c)| c.min(max_ref.get(*gram).copied().unwrap_or(0)))
                .sum();
        }
        stats
    }
}

/// Collects BLEU statistics of `hyp` against one or more references.
///
/// Matches are clipped by the maximum count of each n-gram in any single
/// reference. The effective reference length is the reference length closest
/// to the hypothesis length, the shorter one on ties.
pub fn ngram_stats(hyp: &[String], refs: &[Vec<String>], max_n: usize) -> Result<BleuStats> {
    Ok(ReferenceNgrams::new(refs, max_n)?.stats(hyp))
}

fn brevity_penalty(hyp_len: u64, ref_len: u64) -> f64 {
    if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len.max(1) as f64).exp()
    }
}

/// Sentence BLEU with `(match + 1) / (total + 1)` precisions at every order.
/// An empty hypothesis scores 0.
pub fn sentence_bleu(stats: &BleuStats) -> f64 {
    if stats.hyp_len == 0 {
        return 0.0;
    }
    let log_precision: f64 = stats
        .matches
        .iter()
        .zip(&stats.totals)
        .map(|(&m, &t)| ((m + 1) as f64 / (t + 1) as f64).ln())
        .sum::<f64>()
        / stats.max_n() as f64;
    brevity_penalty(stats.hyp_len, stats.ref_len) * log_precision.exp()
}

/// Unsmoothed corpus BLEU over summed statistics; 0 if any order has no
/// matches or no n-grams.
pub fn corpus_bleu(stats: &BleuStats) -> f64 {
    if stats
        .matches
        .iter()
        .zip(&stats.totals)
        .any(|(&m, &t)| m == 0 || t == 0)
    {
        return 0.0;
    }
    let log_precision: f64 = stats
        .matches
        .iter()
        .zip(&stats.totals)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum::<f64>()
        / stats.max_n() as f64;
    brevity_penalty(stats.hyp_len, stats.ref_len) * log_precision.exp()
}

/// Sentence BLEU of every hypothesis in `list`.
pub fn list_bleus(list: &NBestList, refs: &ReferenceSet) -> Result<Vec<f64>> {
    let references = ReferenceNgrams::new(refs.require(list.sent_id)?, DEFAULT_MAX_N)?;
    Ok(list
        .hypotheses
        .iter()
        .map(|h| sentence_bleu(&references.stats(&h.tokens)))
        .collect())
}

/// A (possibly partial) ranking: `ranks[j]` is the index of the hypothesis
/// placed at position `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    pub sent_id: u64,
    ranks: Vec<usize>,
}

impl Permutation {
    /// Checks that `ranks` is non-empty, no longer than `n`, and holds
    /// distinct indices below `n`.
    pub fn new(sent_id: u64, ranks: Vec<usize>, n: usize) -> Result<Self> {
        if ranks.is_empty() || ranks.len() > n {
            return Err(Error::InvalidArgument(format!(
                "permutation length {} outside 1..={n}",
                ranks.len()
            )));
        }
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r >= n || std::mem::replace(&mut seen[r], true) {
                return Err(Error::InvalidArgument(format!(
                    "index {r} repeated or outside 0..{n}"
                )));
            }
        }
        Ok(Self { sent_id, ranks })
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }
}

/// Descending numeric order for finite scores; `-0.0` and `0.0` compare equal
/// so stable sorts keep input order among zero scores.
pub fn descending(a: f64, b: f64) -> std::cmp::Ordering {
    b.partial_cmp(&a).unwrap_or(std::cmp::Ordering::Equal)
}

/// Orders indices by descending score, shuffling every group of exactly
/// equal scores with `rng`, and keeps the first `k`.
pub fn rank_by_score<R: Rng + ?Sized>(
    sent_id: u64,
    scores: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Permutation> {
    let n = scores.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "permutation length {k} outside 1..={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| descending(scores[a], scores[b]));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        if end - start > 1 {
            order[start..end].shuffle(rng);
        }
        if end >= k {
            break;
        }
        start = end;
    }
    order.truncate(k);
    Permutation::new(sent_id, order, n)
}

/// Ranks `list` by sentence BLEU, breaking ties with the stream derived from
/// `(seed, sent_id, round)`.
pub fn ground_truth_permutation(
    list: &NBestList,
    refs: &ReferenceSet,
    k: usize,
    seed: u64,
    round: u64,
) -> Result<Permutation> {
    let bleus = list_bleus(list, refs)?;
    let mut rng = rng::stream(seed, Purpose::TieBreak, list.sent_id, round);
    rank_by_score(list.sent_id, &bleus, k, &mut rng)
}
