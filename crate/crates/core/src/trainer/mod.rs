//! Fitting weights by maximizing the Plackett-Luce likelihood of BLEU-ordered
//! ground-truth rankings.

mod lbfgs;
mod resample;

use std::io::Write;

use rayon::prelude::*;

pub use lbfgs::{lbfgs_maximize, WOLFE_C1, WOLFE_C2};
pub use resample::{resample, resample_indices};

use crate::bleu::{list_bleus, rank_by_score};
use crate::corpus::{dedup, Corpus, ReferenceSet};
use crate::error::{Error, Result};
use crate::pl_model::{objective_and_gradient, PlInstance, SparseRow, Weights};
use crate::rng::{self, Purpose};

pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_K: usize = 5;
pub const DEFAULT_RICHNESS_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Ground-truth ranking length (the `k` of PL(k)); clamped per list.
    pub k: usize,
    pub max_iters: usize,
    pub lbfgs_memory: usize,
    /// Stop once the gradient infinity-norm is at most this.
    pub grad_tol: f64,
    /// Precision of the Gaussian prior on the weights; 1 is a unit-variance prior.
    pub l2_scale: f64,
    /// Resample every list to this many hypotheses before training.
    pub sample_size: Option<usize>,
    pub seed: u64,
    /// Tuning round; selects fresh tie-break and resampling streams.
    pub round: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            max_iters: DEFAULT_MAX_ITERS,
            lbfgs_memory: 10,
            grad_tol: 1e-6,
            l2_scale: 1.0,
            sample_size: None,
            seed: 42,
            round: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1".into());
        }
        if self.lbfgs_memory < 1 {
            return bad("lbfgs_memory must be at least 1".into());
        }
        if self.grad_tol.is_nan() || self.grad_tol <= 0.0 {
            return bad(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if !(self.l2_scale >= 0.0 && self.l2_scale.is_finite()) {
            return bad(format!(
                "l2_scale must be non-negative, got {}",
                self.l2_scale
            ));
        }
        if let Some(m) = self.sample_size {
            if m < 3 {
                return bad(format!("sample size must be at least 3, got {m}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub objective: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_weights: Weights,
    /// The starting point followed by every accepted step.
    pub history: Vec<HistoryRecord>,
    pub converged: bool,
    pub iterations_used: usize,
}

impl TrainReport {
    pub fn final_objective(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |h| h.objective)
    }

    /// Writes `iteration,objective,grad_norm` CSV.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,objective,grad_norm")?;
        for h in &self.history {
            writeln!(out, "{},{},{}", h.iteration, h.objective, h.grad_norm)?;
        }
        Ok(())
    }
}

/// Feature count over mean list size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichnessReport {
    pub feature_count: usize,
    pub avg_list_size: f64,
    pub r: f64,
}

impl RichnessReport {
    pub fn new(feature_count: usize, avg_list_size: f64) -> Self {
        Self {
            feature_count,
            avg_list_size,
            r: feature_count as f64 / avg_list_size,
        }
    }

    /// Lists are too long for the feature set and should be resampled.
    pub fn needs_resampling(&self, threshold: f64) -> bool {
        self.r < threshold
    }
}

/// Richness of `corpus`, measured on deduplicated lists.
pub fn richness(corpus: &Corpus) -> Result<RichnessReport> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let total: usize = corpus.lists().iter().map(|l| dedup(l.clone()).len()).sum();
    let avg = total as f64 / corpus.lists().len() as f64;
    Ok(RichnessReport::new(corpus.feature_index().len(), avg))
}

/// Turns every list into a training instance: optional resampling under
/// `weights`, then a BLEU-ordered ground truth of length `min(k, N)`.
pub fn build_instances(
    corpus: &Corpus,
    refs: &ReferenceSet,
    cfg: &TrainConfig,
    weights: &[f64],
) -> Result<Vec<PlInstance>> {
    cfg.validate()?;
    corpus
        .lists()
        .par_iter()
        .map(|list| {
            let list = dedup(list.clone());
            if list.is_empty() {
                return Err(Error::EmptyList(list.sent_id));
            }
            let bleus = list_bleus(&list, refs)?;
            let kept = match cfg.sample_size {
                Some(m) => resample_indices(&list, &bleus, m, weights, cfg.seed, cfg.round)?,
                None => (0..list.len()).collect(),
            };
            let rows: Vec<SparseRow> = kept
                .iter()
                .map(|&i| list.hypotheses[i].features.clone())
                .collect();
            let scores: Vec<f64> = kept.iter().map(|&i| bleus[i]).collect();
            let k = cfg.k.min(rows.len());
            let mut rng = rng::stream(cfg.seed, Purpose::TieBreak, list.sent_id, cfg.round);
            let truth = rank_by_score(list.sent_id, &scores, k, &mut rng)?;
            PlInstance::new(rows, truth)
        })
        .collect()
}

/// Trains weights for `corpus` from `w0`.
pub fn train(
    corpus: &Corpus,
    refs: &ReferenceSet,
    cfg: &TrainConfig,
    w0: &Weights,
) -> Result<TrainReport> {
    let dim = corpus.feature_index().len();
    if w0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: w0.len(),
        });
    }
    let instances = build_instances(corpus, refs, cfg, w0)?;
    let l2 = cfg.l2_scale;
    lbfgs_maximize(
        |w| objective_and_gradient(&instances, w, l2).expect("dimensions checked"),
        w0.clone(),
        cfg,
    )
}
