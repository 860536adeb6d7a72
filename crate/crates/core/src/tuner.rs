//! The iterative tuning loop, reranking, and a synthetic decoder.
//!
//! Each round asks a [`Decoder`] for hypotheses under the current weights,
//! merges them into the accumulated corpus, and retrains from the current
//! weights. Lists are resampled before training whenever the accumulated
//! corpus is not rich enough (feature count over mean list size below the
//! threshold).
//!
//! [`SyntheticDecoder`] stands in for a real decoder. Every sentence owns a
//! fixed pool of candidates with random sparse features and a latent quality
//! `w†·h + noise`. A candidate's tokens are a prefix of the sentence's
//! reference whose length grows with the candidate's quality rank in the
//! pool, padded to the reference length, so sentence BLEU orders candidates
//! exactly by latent quality. Each round returns the candidates that score
//! highest under the weights being tuned.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::bleu::{corpus_bleu, descending, BleuStats, ReferenceNgrams, DEFAULT_MAX_N};
use crate::corpus::{merge, Corpus, Hypothesis, NBestList, ReferenceSet, WeightMap};
use crate::error::{Error, Result};
use crate::pl_model::{SparseRow, Weights};
use crate::rng::{self, Purpose};
use crate::trainer::{richness, train, TrainConfig, DEFAULT_RICHNESS_THRESHOLD};

/// Produces N-best lists for the tuning set under the given weights.
pub trait Decoder {
    fn decode(&mut self, weights: &WeightMap, round: usize) -> Result<Corpus>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub max_rounds: usize,
    pub per_round_size: usize,
    pub train_cfg: TrainConfig,
    pub richness_threshold: f64,
    pub resample_m: usize,
    /// Stop as soon as a round adds no new hypothesis.
    pub stop_on_saturation: bool,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            max_rounds: 40,
            per_round_size: 200,
            train_cfg: TrainConfig::default(),
            richness_threshold: DEFAULT_RICHNESS_THRESHOLD,
            resample_m: 30,
            stop_on_saturation: true,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds < 1 {
            return Err(Error::InvalidArgument(
                "max_rounds must be at least 1".into(),
            ));
        }
        if self.per_round_size < 1 {
            return Err(Error::InvalidArgument(
                "per_round_size must be at least 1".into(),
            ));
        }
        if self.resample_m < 3 {
            return Err(Error::InvalidArgument(
                "resample_m must be at least 3".into(),
            ));
        }
        self.train_cfg.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Corpus BLEU of the top-1 reranked hypotheses of the accumulated corpus.
    pub dev_bleu: f64,
    pub objective: f64,
    pub corpus_size: usize,
    pub richness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneOutcome {
    pub weights: WeightMap,
    pub records: Vec<RoundRecord>,
    pub corpus: Corpus,
}

impl TuneOutcome {
    /// Writes `round,dev_bleu,objective,corpus_size,richness` CSV.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "round,dev_bleu,objective,corpus_size,richness")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.round, r.dev_bleu, r.objective, r.corpus_size, r.richness
            )?;
        }
        Ok(())
    }
}

/// Sorts every list by `h · w` (descending, input order on ties) and keeps
/// the first `top`. The returned hypotheses carry the model score in
/// `decoder_score`.
pub fn rerank(corpus: &Corpus, weights: &[f64], top: usize) -> Result<Vec<NBestList>> {
    if top < 1 {
        return Err(Error::InvalidArgument("top must be at least 1".into()));
    }
    let dim = corpus.feature_index().len();
    if weights.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: weights.len(),
        });
    }
    Ok(corpus
        .lists()
        .par_iter()
        .map(|list| {
            let mut scored: Vec<(f64, &Hypothesis)> = list
                .hypotheses
                .iter()
                .map(|h| (h.dot(weights), h))
                .collect();
            scored.sort_by(|a, b| descending(a.0, b.0));
            NBestList {
                sent_id: list.sent_id,
                hypotheses: scored
                    .into_iter()
                    .take(top)
                    .map(|(score, h)| Hypothesis {
                        decoder_score: score,
                        ..h.clone()
                    })
                    .collect(),
            }
        })
        .collect())
}

/// Corpus BLEU of the top-1 hypothesis of every list under `weights`.
pub fn top1_bleu(corpus: &Corpus, refs: &ReferenceSet, weights: &[f64]) -> Result<f64> {
    let best = rerank(corpus, weights, 1)?;
    let mut total = BleuStats::zero(DEFAULT_MAX_N);
    for list in &best {
        let references = ReferenceNgrams::new(refs.require(list.sent_id)?, DEFAULT_MAX_N)?;
        if let Some(h) = list.hypotheses.first() {
            total += &references.stats(&h.tokens);
        }
    }
    Ok(corpus_bleu(&total))
}

/// Runs up to `cfg.max_rounds` decode/merge/train rounds from `w0`.
pub fn run_tuning<D: Decoder + ?Sized>(
    decoder: &mut D,
    refs: &ReferenceSet,
    cfg: &TuneConfig,
    w0: &WeightMap,
) -> Result<TuneOutcome> {
    cfg.validate()?;
    let mut accumulated = Corpus::new();
    let mut weights = w0.clone();
    let mut records = Vec::new();
    for round in 1..=cfg.max_rounds {
        let decoded = decoder.decode(&weights, round)?;
        if round == 1 && decoded.num_hypotheses() == 0 {
            return Err(Error::InvalidArgument(
                "decoder produced no hypotheses in the first round".into(),
            ));
        }
        let before = accumulated.num_hypotheses();
        accumulated = merge(accumulated, decoded);
        if round > 1 && cfg.stop_on_saturation && accumulated.num_hypotheses() == before {
            break;
        }

        let rich = richness(&accumulated)?;
        let mut train_cfg = cfg.train_cfg.clone();
        train_cfg.round = round as u64;
        train_cfg.sample_size = rich
            .needs_resampling(cfg.richness_threshold)
            .then_some(cfg.resample_m);
        let (start, _) = Weights::from_map(&weights, accumulated.feature_index());
        let report = train(&accumulated, refs, &train_cfg, &start)?;
        let dev_bleu = top1_bleu(&accumulated, refs, &report.final_weights)?;
        records.push(RoundRecord {
            round,
            dev_bleu,
            objective: report.final_objective(),
            corpus_size: accumulated.num_hypotheses(),
            richness: rich.r,
        });
        // names the corpus has not seen yet keep their previous values
        let mut next = weights;
        next.extend(report.final_weights.to_map(accumulated.feature_index()));
        weights = next;
    }
    Ok(TuneOutcome {
        weights,
        records,
        corpus: accumulated,
    })
}

/// Parameters of the synthetic decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDecoderSpec {
    /// Planted weights `w†`, one per feature.
    pub latent_weights: Vec<f64>,
    pub num_sentences: usize,
    pub feature_dim: usize,
    pub noise_scale: f64,
    pub seed: u64,
    /// Candidates per sentence; also the reference length.
    pub pool_size: usize,
    /// Non-zero features per candidate.
    pub active_features: usize,
}

impl SyntheticDecoderSpec {
    /// A spec whose planted weights are standard normal draws from `seed`.
    pub fn random(
        num_sentences: usize,
        feature_dim: usize,
        pool_size: usize,
        noise_scale: f64,
        seed: u64,
    ) -> Self {
        Self {
            latent_weights: planted_weights(feature_dim, seed),
            num_sentences,
            feature_dim,
            noise_scale,
            seed,
            pool_size,
            active_features: feature_dim.min(10),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.feature_dim < 1 {
            return bad("feature_dim must be at least 1".into());
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad(format!(
                "noise_scale must be non-negative, got {}",
                self.noise_scale
            ));
        }
        if self.latent_weights.len() != self.feature_dim {
            return bad(format!(
                "{} latent weights for {} features",
                self.latent_weights.len(),
                self.feature_dim
            ));
        }
        if self.latent_weights.iter().any(|w| !w.is_finite()) {
            return bad("latent weights must be finite".into());
        }
        if self.pool_size < 1 {
            return bad("pool_size must be at least 1".into());
        }
        if self.active_features < 1 || self.active_features > self.feature_dim {
            return bad(format!(
                "active_features must be in 1..={}, got {}",
                self.feature_dim, self.active_features
            ));
        }
        Ok(())
    }

    /// Reads `key=value` lines. `latent_weights` (comma separated) and `seed`
    /// are optional; missing weights are drawn from the seed, a missing seed
    /// falls back to `default_seed`.
    pub fn parse<R: BufRead>(reader: R, default_seed: u64) -> Result<Self> {
        let mut values: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, "expected key=value"))?;
            let key = key.trim();
            const KEYS: [&str; 7] = [
                "num_sentences",
                "feature_dim",
                "noise_scale",
                "seed",
                "pool_size",
                "active_features",
                "latent_weights",
            ];
            if !KEYS.contains(&key) {
                return Err(Error::parse(lineno, format!("unknown key {key:?}")));
            }
            if values
                .insert(key.to_owned(), (lineno, value.trim().to_owned()))
                .is_some()
            {
                return Err(Error::parse(lineno, format!("duplicate key {key:?}")));
            }
        }
        fn get<T: std::str::FromStr>(
            values: &BTreeMap<String, (usize, String)>,
            key: &str,
        ) -> Result<Option<T>> {
            values
                .get(key)
                .map(|(line, v)| {
                    v.parse()
                        .map_err(|_| Error::parse(*line, format!("invalid value for {key}: {v:?}")))
                })
                .transpose()
        }
        let required = |key: &str| Error::InvalidArgument(format!("spec file lacks {key}"));
        let num_sentences =
            get(&values, "num_sentences")?.ok_or_else(|| required("num_sentences"))?;
        let feature_dim: usize =
            get(&values, "feature_dim")?.ok_or_else(|| required("feature_dim"))?;
        let noise_scale = get(&values, "noise_scale")?.unwrap_or(0.1);
        let seed = get(&values, "seed")?.unwrap_or(default_seed);
        let pool_size = get(&values, "pool_size")?.ok_or_else(|| required("pool_size"))?;
        let active_features = get(&values, "active_features")?.unwrap_or(feature_dim.min(10));
        let latent_weights = match values.get("latent_weights") {
            Some((line, list)) => list
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(*line, format!("invalid latent weight {v:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
            None => planted_weights(feature_dim, seed),
        };
        let spec = Self {
            latent_weights,
            num_sentences,
            feature_dim,
            noise_scale,
            seed,
            pool_size,
            active_features,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn feature_name(j: usize) -> String {
        format!("f{j}")
    }

    fn reference_tokens(&self) -> Vec<String> {
        (0..self.pool_size).map(|i| format!("t{i}")).collect()
    }

    /// The reference every candidate of every sentence is scored against.
    pub fn references(&self) -> ReferenceSet {
        let mut refs = ReferenceSet::new();
        let tokens = self.reference_tokens();
        for s in 0..self.num_sentences {
            refs.add(s as u64, tokens.clone());
        }
        refs
    }
}

fn planted_weights(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, Purpose::SyntheticWeights, 0, 0);
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// One candidate of a synthetic pool.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub features: Vec<(usize, f64)>,
    /// `w† · h` without noise.
    pub latent_score: f64,
    pub tokens: Vec<String>,
}

fn build_pool(spec: &SyntheticDecoderSpec, sent_id: u64, reference: &[String]) -> Vec<Candidate> {
    let mut rng = rng::stream(spec.seed, Purpose::SyntheticPool, sent_id, 0);
    // features, latent score, noisy quality
    let mut drafts: Vec<(SparseRow, f64, f64)> = (0..spec.pool_size)
        .map(|_| {
            let mut ids = sample(&mut rng, spec.feature_dim, spec.active_features).into_vec();
            ids.sort_unstable();
            let features: Vec<(usize, f64)> = ids
                .into_iter()
                .map(|j| (j, rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let latent: f64 = features
                .iter()
                .map(|&(j, v)| v * spec.latent_weights[j])
                .sum();
            let noise: f64 = rng.sample(StandardNormal);
            (features, latent, latent + spec.noise_scale * noise)
        })
        .collect();
    let mut by_quality: Vec<usize> = (0..drafts.len()).collect();
    by_quality.sort_by(|&a, &b| drafts[a].2.total_cmp(&drafts[b].2));
    let mut prefix = vec![0; drafts.len()];
    for (rank, &i) in by_quality.iter().enumerate() {
        prefix[i] = rank + 1;
    }
    drafts
        .drain(..)
        .zip(prefix)
        .map(|((features, latent_score, _), len)| {
            let mut tokens = reference[..len].to_vec();
            tokens.resize(reference.len(), "<x>".to_owned());
            Candidate {
                features,
                latent_score,
                tokens,
            }
        })
        .collect()
}

/// A decoder over fixed synthetic candidate pools.
#[derive(Debug, Clone)]
pub struct SyntheticDecoder {
    spec: SyntheticDecoderSpec,
    per_round_size: usize,
    pools: Vec<Vec<Candidate>>,
}

impl SyntheticDecoder {
    pub fn new(spec: SyntheticDecoderSpec, per_round_size: usize) -> Result<Self> {
        spec.validate()?;
        if per_round_size < 1 {
            return Err(Error::InvalidArgument(
                "per_round_size must be at least 1".into(),
            ));
        }
        let reference = spec.reference_tokens();
        let pools = (0..spec.num_sentences as u64)
            .into_par_iter()
            .map(|s| build_pool(&spec, s, &reference))
            .collect();
        Ok(Self {
            spec,
            per_round_size,
            pools,
        })
    }

    pub fn spec(&self) -> &SyntheticDecoderSpec {
        &self.spec
    }

    pub fn pool(&self, sent_id: u64) -> &[Candidate] {
        &self.pools[sent_id as usize]
    }

    /// The `per_round_size` candidates per sentence with the highest
    /// `h · w`, pool order on ties.
    pub fn decode_dense(&self, weights: &[f64]) -> Corpus {
        let mut corpus = Corpus::new();
        let names: Vec<String> = (0..self.spec.feature_dim)
            .map(SyntheticDecoderSpec::feature_name)
            .collect();
        for (s, pool) in self.pools.iter().enumerate() {
            let mut scored: Vec<(f64, &Candidate)> = pool
                .iter()
                .map(|c| (c.features.iter().map(|&(j, v)| v * weights[j]).sum(), c))
                .collect();
            scored.sort_by(|a, b| descending(a.0, b.0));
            for (score, c) in scored.into_iter().take(self.per_round_size) {
                let feats: Vec<(&str, f64)> = c
                    .features
                    .iter()
                    .map(|&(j, v)| (names[j].as_str(), v))
                    .collect();
                corpus.push_named(s as u64, c.tokens.clone(), &feats, score);
            }
        }
        corpus
    }
}

impl Decoder for SyntheticDecoder {
    fn decode(&mut self, weights: &WeightMap, _round: usize) -> Result<Corpus> {
        let dense: Vec<f64> = (0..self.spec.feature_dim)
            .map(|j| {
                weights
                    .get(&SyntheticDecoderSpec::feature_name(j))
                    .copied()
                    .unwrap_or(0.0)
            })
            .collect();
        Ok(self.decode_dense(&dense))
    }
}

/// One round of synthetic decoding. The pools depend only on the spec, so
/// `round` does not change the output.
pub fn synthetic_decode(
    spec: &SyntheticDecoderSpec,
    per_round_size: usize,
    weights: &WeightMap,
    round: usize,
) -> Result<Corpus> {
    SyntheticDecoder::new(spec.clone(), per_round_size)?.decode(weights, round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bleu::list_bleus;

    fn spec(noise: f64) -> SyntheticDecoderSpec {
        SyntheticDecoderSpec::random(3, 20, 60, noise, 11)
    }

    fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len();
        let mut concordant = 0i64;
        let mut discordant = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                let s = (a[i] - a[j]).signum() * (b[i] - b[j]).signum();
                if s > 0.0 {
                    concordant += 1;
                } else if s < 0.0 {
                    discordant += 1;
                }
            }
        }
        (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
    }

    #[test]
    fn noiseless_bleu_order_follows_planted_scores() {
        let s = spec(0.0);
        let dec = SyntheticDecoder::new(s.clone(), 60).unwrap();
        let corpus = dec.decode_dense(&[0.0; 20]);
        let refs = s.references();
        for list in corpus.lists() {
            let bleus = list_bleus(list, &refs).unwrap();
            let pool = dec.pool(list.sent_id);
            let mut by_bleu: Vec<usize> = (0..bleus.len()).collect();
            by_bleu.sort_by(|&a, &b| bleus[b].total_cmp(&bleus[a]));
            let mut by_latent: Vec<usize> = (0..pool.len()).collect();
            by_latent.sort_by(|&a, &b| pool[b].latent_score.total_cmp(&pool[a].latent_score));
            assert_eq!(by_bleu, by_latent);
            // no ties, so the ground truth is unique
            let mut sorted = bleus.clone();
            sorted.sort_by(f64::total_cmp);
            assert!(sorted.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn decoding_is_deterministic() {
        let w: WeightMap = [("f3".to_string(), 0.5)].into_iter().collect();
        let a = synthetic_decode(&spec(0.1), 10, &w, 2).unwrap();
        let b = synthetic_decode(&spec(0.1), 10, &w, 2).unwrap();
        assert_eq!(a, b);
        assert!(a.lists().iter().all(|l| l.len() == 10));
    }

    #[test]
    fn bleu_tracks_planted_scores_under_noise() {
        let s = SyntheticDecoderSpec::random(1, 50, 200, 0.1, 5);
        let dec = SyntheticDecoder::new(s.clone(), 200).unwrap();
        let corpus = dec.decode_dense(&vec![0.0; 50]);
        let list = &corpus.lists()[0];
        let bleus = list_bleus(list, &s.references()).unwrap();
        let latent: Vec<f64> = dec.pool(0).iter().map(|c| c.latent_score).collect();
        let tau = kendall_tau(&latent, &bleus);
        assert!(tau >= 0.95, "tau = {tau}");
    }

    #[test]
    fn decoder_returns_top_scoring_candidates() {
        let s = spec(0.1);
        let dec = SyntheticDecoder::new(s.clone(), 5).unwrap();
        let corpus = dec.decode_dense(&s.latent_weights);
        for list in corpus.lists() {
            let pool = dec.pool(list.sent_id);
            let mut best: Vec<f64> = pool.iter().map(|c| c.latent_score).collect();
            best.sort_by(|a, b| b.total_cmp(a));
            let got: Vec<f64> = list.hypotheses.iter().map(|h| h.decoder_score).collect();
            for (g, b) in got.iter().zip(&best) {
                assert!((g - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spec_file_parsing() {
        let text = "# synthetic\nnum_sentences=4\nfeature_dim=3\npool_size=8\nnoise_scale=0.2\nlatent_weights=1,-2,0.5\n";
        let s = SyntheticDecoderSpec::parse(text.as_bytes(), 9).unwrap();
        assert_eq!(s.latent_weights, vec![1.0, -2.0, 0.5]);
        assert_eq!(s.seed, 9);
        assert_eq!(s.active_features, 3);
        assert_eq!(s.references().len(), 4);

        let random = SyntheticDecoderSpec::parse(
            "num_sentences=1\nfeature_dim=4\npool_size=2\nseed=3\n".as_bytes(),
            0,
        )
        .unwrap();
        assert_eq!(random.latent_weights.len(), 4);
        assert_eq!(random.seed, 3);

        for bad in [
            "num_sentences=1\nfeature_dim=0\npool_size=2\n",
            "num_sentences=1\nfeature_dim=2\npool_size=2\nlatent_weights=1\n",
            "num_sentences=1\nfeature_dim=2\n",
            "num_sentences=x\nfeature_dim=2\npool_size=2\n",
            "bogus=1\n",
            "num_sentences=1\nnum_sentences=2\n",
            "num_sentences=1\nfeature_dim=2\npool_size=2\nnoise_scale=-1\n",
        ] {
            assert!(
                SyntheticDecoderSpec::parse(bad.as_bytes(), 0).is_err(),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn rerank_orders_by_model_score() {
        let mut c = Corpus::new();
        c.push_named(0, vec!["a".into()], &[("x", 1.0)], 0.0);
        c.push_named(0, vec!["b".into()], &[("y", 1.0)], 0.0);
        c.push_named(0, vec!["c".into()], &[("x", 1.0), ("y", 1.0)], 0.0);
        let out = rerank(&c, &[0.0, 0.0], 3).unwrap();
        let order: Vec<&str> = out[0]
            .hypotheses
            .iter()
            .map(|h| h.tokens[0].as_str())
            .collect();
        assert_eq!(order, ["a", "b", "c"]);

        let out = rerank(&c, &[0.0, 1.0], 1).unwrap();
        assert_eq!(out[0].hypotheses.len(), 1);
        assert_eq!(out[0].hypotheses[0].tokens[0], "b");
        assert_eq!(out[0].hypotheses[0].decoder_score, 1.0);
        assert!(rerank(&c, &[0.0, 1.0], 0).is_err());
    }

    struct Fixed(Corpus);

    impl Decoder for Fixed {
        fn decode(&mut self, _: &WeightMap, _: usize) -> Result<Corpus> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn fixed_pool_saturates() {
        let s = spec(0.1);
        let corpus = SyntheticDecoder::new(s.clone(), 20)
            .unwrap()
            .decode_dense(&[0.0; 20]);
        let cfg = TuneConfig {
            max_rounds: 5,
            train_cfg: TrainConfig {
                max_iters: 20,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = run_tuning(&mut Fixed(corpus), &s.references(), &cfg, &WeightMap::new()).unwrap();
        assert_eq!(out.records.len(), 1);
    }

    #[test]
    fn empty_first_round_is_an_error() {
        let cfg = TuneConfig::default();
        let err = run_tuning(
            &mut Fixed(Corpus::new()),
            &ReferenceSet::new(),
            &cfg,
            &WeightMap::new(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn accumulation_grows_without_duplicates() {
        let s = SyntheticDecoderSpec::random(4, 30, 80, 0.1, 1);
        let mut dec = SyntheticDecoder::new(s.clone(), 15).unwrap();
        let cfg = TuneConfig {
            max_rounds: 4,
            per_round_size: 15,
            train_cfg: TrainConfig {
                max_iters: 30,
                ..Default::default()
            },
            ..Default::default()
        };
        let out = run_tuning(&mut dec, &s.references(), &cfg, &WeightMap::new()).unwrap();
        for pair in out.records.windows(2) {
            assert!(pair[1].corpus_size >= pair[0].corpus_size);
        }
        for list in out.corpus.lists() {
            let distinct: std::collections::HashSet<_> =
                list.hypotheses.iter().map(|h| &h.tokens).collect();
            assert_eq!(distinct.len(), list.len());
        }
    }
}
