//! The Plackett-Luce permutation model over an N-best list.
//!
//! Hypothesis `j` of a list gets the log-linear probability
//! `p_j = exp(s_j) / Σ_t exp(s_t)` with `s_j = h_j · w`. A ranking `π` of
//! length `k` is generated by drawing without replacement, so
//!
//! ```text
//! log p(π) = Σ_{j<k} [ log p_{π(j)} - log Z_j ],   Z_j = Σ_{t ∈ R_j} p_t
//! ```
//!
//! where `R_j` is the pool of hypotheses not placed before position `j`.
//! `log Z_j` is a log-sum-exp over the remaining log-probabilities rather than
//! `log(1 - Σ p)`, which loses every digit once one hypothesis dominates.
//!
//! The training objective adds a Gaussian prior:
//! `L(w) = Σ_i log p(π*_i) - (λ/2) w·w`, with gradient
//!
//! ```text
//! ∂L/∂w = Σ_i Σ_j [ h_{π*(j)} - Σ_{t ∈ R_j} h_t p_t / Z_j ] - λ w
//! ```
//!
//! Evaluation is parallel over lists. Lists are processed in fixed-size
//! blocks whose partial results are combined by a fixed pairwise tree, so the
//! result is bit-identical for any number of worker threads.

use std::ops::Deref;

use rayon::prelude::*;

use crate::bleu::Permutation;
use crate::corpus::{FeatureIndex, WeightMap};
use crate::error::{Error, Result};

/// Sparse feature vector: `(feature id, value)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

/// Dense weight vector aligned with a [`FeatureIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("weight {i} is not finite")));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Looks up every feature of `index` in `map`; missing names get 0.
    /// Also returns the names in `map` that `index` does not know.
    pub fn from_map(map: &WeightMap, index: &FeatureIndex) -> (Self, Vec<String>) {
        let values = index
            .names()
            .iter()
            .map(|n| map.get(n).copied().unwrap_or(0.0))
            .collect();
        let unknown = map
            .keys()
            .filter(|n| index.get(n).is_none())
            .cloned()
            .collect();
        (Self(values), unknown)
    }

    pub fn to_map(&self, index: &FeatureIndex) -> WeightMap {
        index
            .names()
            .iter()
            .zip(&self.0)
            .map(|(n, &v)| (n.clone(), v))
            .collect()
    }
}

impl Deref for Weights {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn dot(row: &[(usize, f64)], w: &[f64]) -> f64 {
    row.iter().map(|&(i, v)| v * w[i]).sum()
}

/// `log Σ exp(x)` with max subtraction; `-inf` for an empty slice.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + pairwise_sum_by(xs, |x| (x - max).exp()).ln()
}

const PAIRWISE_LEAF: usize = 8;

/// Pairwise (tree) summation in a fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs, |x| x)
}

fn pairwise_sum_by(xs: &[f64], f: impl Fn(f64) -> f64 + Copy) -> f64 {
    if xs.len() <= PAIRWISE_LEAF {
        xs.iter().map(|&x| f(x)).sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum_by(a, f) + pairwise_sum_by(b, f)
    }
}

fn pairwise_sum_vectors(mut parts: Vec<Vec<f64>>, dim: usize) -> Vec<f64> {
    fn tree(parts: &mut [Vec<f64>]) -> Vec<f64> {
        match parts.len() {
            1 => std::mem::take(&mut parts[0]),
            n => {
                let (a, b) = parts.split_at_mut(n / 2);
                let mut left = tree(a);
                let right = tree(b);
                for (l, r) in left.iter_mut().zip(&right) {
                    *l += r;
                }
                left
            }
        }
    }
    if parts.is_empty() {
        vec![0.0; dim]
    } else {
        tree(&mut parts)
    }
}

/// Log-probabilities of the hypotheses of one list.
#[derive(Debug, Clone, PartialEq)]
pub struct ListDistribution {
    log_probs: Vec<f64>,
}

impl ListDistribution {
    /// Normalizes raw scores: `log p_j = s_j - logsumexp(s)`.
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidArgument("empty hypothesis list".into()));
        }
        let norm = logsumexp(scores);
        Ok(Self {
            log_probs: scores.iter().map(|s| s - norm).collect(),
        })
    }

    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let logs: Vec<f64> = probs.iter().map(|p| p.ln()).collect();
        Self::from_scores(&logs)
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_probs.is_empty()
    }
}

/// Distribution of a list of sparse feature rows under weights `w`.
pub fn list_distribution(rows: &[SparseRow], w: &[f64]) -> Result<ListDistribution> {
    let scores: Vec<f64> = rows.iter().map(|r| dot(r, w)).collect();
    ListDistribution::from_scores(&scores)
}

/// `log Z_j` for each position of `ranks`: the log total probability of the
/// hypotheses not yet placed.
fn log_normalizers(log_probs: &[f64], ranks: &[usize]) -> Vec<f64> {
    let mut remaining = vec![true; log_probs.len()];
    let mut pool = Vec::with_capacity(log_probs.len());
    let mut out = Vec::with_capacity(ranks.len());
    for (j, &chosen) in ranks.iter().enumerate() {
        if j == 0 {
            // the whole list; exactly 0 up to rounding
            out.push(logsumexp(log_probs));
        } else {
            pool.clear();
            pool.extend(
                log_probs
                    .iter()
                    .zip(&remaining)
                    .filter(|(_, &r)| r)
                    .map(|(&l, _)| l),
            );
            out.push(logsumexp(&pool));
        }
        remaining[chosen] = false;
    }
    out
}

/// Log-probability of the (partial) ranking `ranks` under `dist`.
pub fn permutation_log_prob(dist: &ListDistribution, ranks: &[usize]) -> f64 {
    let lp = dist.log_probs();
    let log_z = log_normalizers(lp, ranks);
    ranks.iter().zip(&log_z).map(|(&r, &z)| lp[r] - z).sum()
}

/// One training list: dense-id feature rows and its ground-truth ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct PlInstance {
    rows: Vec<SparseRow>,
    ground_truth: Permutation,
    feature_bound: usize,
}

impl PlInstance {
    pub fn new(rows: Vec<SparseRow>, ground_truth: Permutation) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyList(ground_truth.sent_id));
        }
        if let Some(&bad) = ground_truth.ranks().iter().find(|&&r| r >= rows.len()) {
            return Err(Error::InvalidArgument(format!(
                "ground truth index {bad} outside list of {}",
                rows.len()
            )));
        }
        let feature_bound = rows
            .iter()
            .flat_map(|r| r.iter().map(|&(i, _)| i + 1))
            .max()
            .unwrap_or(0);
        Ok(Self {
            rows,
            ground_truth,
            feature_bound,
        })
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn ground_truth(&self) -> &Permutation {
        &self.ground_truth
    }

    fn log_likelihood(&self, w: &[f64]) -> f64 {
        let dist = list_distribution(&self.rows, w).expect("instance lists are non-empty");
        permutation_log_prob(&dist, self.ground_truth.ranks())
    }

    /// Adds this instance's gradient into `grad`, returns its log-likelihood.
    fn accumulate(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let dist = list_distribution(&self.rows, w).expect("instance lists are non-empty");
        let lp = dist.log_probs();
        let ranks = self.ground_truth.ranks();
        let log_z = log_normalizers(lp, ranks);

        // coef[t] = [t ranked] - Σ_{j : t ∈ R_j} p_t / Z_j
        let mut coef = vec![0.0; lp.len()];
        let mut remaining = vec![true; lp.len()];
        let mut value = 0.0;
        for (&chosen, &z) in ranks.iter().zip(&log_z) {
            value += lp[chosen] - z;
            coef[chosen] += 1.0;
            for (t, c) in coef.iter_mut().enumerate() {
                if remaining[t] {
                    *c -= (lp[t] - z).exp();
                }
            }
            remaining[chosen] = false;
        }
        for (row, &c) in self.rows.iter().zip(&coef) {
            if c != 0.0 {
                for &(i, v) in row {
                    grad[i] += c * v;
                }
            }
        }
        value
    }
}

const BLOCK: usize = 32;

fn check_dims(instances: &[PlInstance], w: &[f64], l2_scale: f64) -> Result<()> {
    if !(l2_scale >= 0.0 && l2_scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "l2 scale must be a finite non-negative number, got {l2_scale}"
        )));
    }
    let needed = instances.iter().map(|i| i.feature_bound).max().unwrap_or(0);
    if needed > w.len() {
        return Err(Error::DimensionMismatch {
            expected: needed,
            found: w.len(),
        });
    }
    Ok(())
}

fn penalty(w: &[f64], l2_scale: f64) -> f64 {
    let sq: Vec<f64> = w.iter().map(|v| v * v).collect();
    0.5 * l2_scale * pairwise_sum(&sq)
}

/// Penalized log-likelihood of all ground-truth rankings.
pub fn objective(instances: &[PlInstance], w: &[f64], l2_scale: f64) -> Result<f64> {
    check_dims(instances, w, l2_scale)?;
    let values: Vec<f64> = instances
        .par_iter()
        .with_min_len(BLOCK)
        .map(|inst| inst.log_likelihood(w))
        .collect();
    Ok(pairwise_sum(&values) - penalty(w, l2_scale))
}

/// Gradient of [`objective`] with respect to `w`.
pub fn gradient(instances: &[PlInstance], w: &[f64], l2_scale: f64) -> Result<Vec<f64>> {
    objective_and_gradient(instances, w, l2_scale).map(|(_, g)| g)
}

/// [`objective`] and [`gradient`] in one pass.
pub fn objective_and_gradient(
    instances: &[PlInstance],
    w: &[f64],
    l2_scale: f64,
) -> Result<(f64, Vec<f64>)> {
    check_dims(instances, w, l2_scale)?;
    let dim = w.len();
    let blocks: Vec<(Vec<f64>, Vec<f64>)> = instances
        .par_chunks(BLOCK)
        .map(|block| {
            let mut grad = vec![0.0; dim];
            let values = block
                .iter()
                .map(|inst| inst.accumulate(w, &mut grad))
                .collect();
            (values, grad)
        })
        .collect();
    let mut values = Vec::with_capacity(instances.len());
    let mut grads = Vec::with_capacity(blocks.len());
    for (v, g) in blocks {
        values.extend(v);
        grads.push(g);
    }
    let mut grad = pairwise_sum_vectors(grads, dim);
    for (g, &wi) in grad.iter_mut().zip(w) {
        *g -= l2_scale * wi;
    }
    Ok((pairwise_sum(&values) - penalty(w, l2_scale), grad))
}
