use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use pltune::bleu::{corpus_bleu, BleuStats, ReferenceNgrams, DEFAULT_MAX_N};
use pltune::corpus::{
    parse_id_tokens, parse_nbest, parse_refs, parse_weights, write_nbest, write_refs,
    write_weights, Corpus, ReferenceSet, WeightMap,
};
use pltune::pl_model::Weights;
use pltune::trainer::{richness as richness_of, train as train_corpus, TrainConfig};
use pltune::tuner::{
    rerank as rerank_corpus, run_tuning, SyntheticDecoder, SyntheticDecoderSpec, TuneConfig,
};

use crate::{EvaluateArgs, RerankArgs, RichnessArgs, SynthArgs, TrainArgs, TuneSimArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag values or combinations.
    Usage(String),
    /// Unreadable, malformed or inconsistent input, or failed output.
    Data(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn in_file(path: &str) -> impl Fn(pltune::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{path}: {e}"))
}

fn usage(e: pltune::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn open(path: &str) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{path}: {e}")))
}

fn check_output(path: &str) -> CliResult {
    let parent = Path::new(path)
        .parent()
        .filter(|p| !p.as_os_str().is_empty());
    match parent {
        Some(dir) if !dir.is_dir() => Err(CliError::Data(format!(
            "{path}: directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn check_input(path: &str) -> CliResult {
    open(path).map(drop)
}

fn create<F>(path: &str, write: F) -> CliResult
where
    F: FnOnce(&mut BufWriter<File>) -> pltune::Result<()>,
{
    let file = File::create(path).map_err(|e| CliError::Data(format!("{path}: {e}")))?;
    let mut out = BufWriter::new(file);
    write(&mut out)
        .and_then(|()| out.flush().map_err(Into::into))
        .map_err(in_file(path))
}

fn read_corpus(path: &str) -> CliResult<Corpus> {
    parse_nbest(open(path)?).map_err(in_file(path))
}

fn read_refs(path: &str) -> CliResult<ReferenceSet> {
    parse_refs(open(path)?).map_err(in_file(path))
}

fn read_spec(path: &str, seed: u64) -> CliResult<SyntheticDecoderSpec> {
    SyntheticDecoderSpec::parse(open(path)?, seed).map_err(in_file(path))
}

pub fn train(a: TrainArgs) -> CliResult {
    let cfg = TrainConfig {
        k: a.k,
        max_iters: a.max_iter,
        l2_scale: a.l2,
        sample_size: a.sample_size,
        seed: a.seed,
        ..TrainConfig::default()
    };
    cfg.validate().map_err(usage)?;
    check_input(&a.nbest)?;
    check_input(&a.refs)?;
    check_output(&a.out)?;
    if let Some(h) = &a.history {
        check_output(h)?;
    }

    let corpus = read_corpus(&a.nbest)?;
    let refs = read_refs(&a.refs)?;
    if corpus.is_empty() {
        return Err(CliError::Data(format!("{}: no hypotheses", a.nbest)));
    }
    let w0 = Weights::zeros(corpus.feature_index().len());
    let report = train_corpus(&corpus, &refs, &cfg, &w0)
        .map_err(|e| CliError::Data(format!("training failed: {e}")))?;

    create(&a.out, |out| {
        write_weights(&report.final_weights.to_map(corpus.feature_index()), out)
    })?;
    if let Some(h) = &a.history {
        create(h, |out| report.write_history_csv(out))?;
    }
    println!(
        "objective={} iterations={} converged={}",
        report.final_objective(),
        report.iterations_used,
        report.converged
    );
    Ok(())
}

pub fn rerank(a: RerankArgs) -> CliResult {
    if a.top < 1 {
        return Err(CliError::Usage("--top must be at least 1".into()));
    }
    check_input(&a.nbest)?;
    check_input(&a.weights)?;
    let corpus = read_corpus(&a.nbest)?;
    let map: WeightMap = parse_weights(open(&a.weights)?).map_err(in_file(&a.weights))?;
    let (weights, unknown) = Weights::from_map(&map, corpus.feature_index());
    for name in unknown {
        eprintln!(
            "pltune: warning: {}: feature {name:?} does not occur in {}, ignored",
            a.weights, a.nbest
        );
    }
    let lists = rerank_corpus(&corpus, &weights, a.top).map_err(usage)?;

    let mut reranked = Corpus::new();
    let index = corpus.feature_index();
    for list in lists {
        for h in list.hypotheses {
            let feats: Vec<(&str, f64)> = h
                .features
                .iter()
                .map(|&(j, v)| (index.name(j), v))
                .collect();
            reranked.push_named(h.sent_id, h.tokens, &feats, h.decoder_score);
        }
    }
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    write_nbest(&reranked, &mut out)
        .and_then(|()| out.flush().map_err(Into::into))
        .map_err(|e| CliError::Data(format!("stdout: {e}")))
}

pub fn evaluate(a: EvaluateArgs) -> CliResult {
    check_input(&a.hyp)?;
    check_input(&a.refs)?;
    let refs = read_refs(&a.refs)?;
    let mut hyps = std::collections::BTreeMap::new();
    let reader = open(&a.hyp)?;
    for (i, line) in io::BufRead::lines(reader).enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("{}: {e}", a.hyp)))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (id, tokens) = parse_id_tokens(line, i + 1).map_err(in_file(&a.hyp))?;
        if hyps.insert(id, tokens).is_some() {
            return Err(CliError::Data(format!(
                "{}: line {}: second hypothesis for sentence {id}",
                a.hyp,
                i + 1
            )));
        }
    }
    if let Some(id) = hyps.keys().find(|id| refs.get(**id).is_none()) {
        return Err(CliError::Data(format!(
            "sentence {id} has a hypothesis in {} but no reference in {}",
            a.hyp, a.refs
        )));
    }
    if let Some(id) = refs.sent_ids().find(|id| !hyps.contains_key(id)) {
        return Err(CliError::Data(format!(
            "sentence {id} has a reference in {} but no hypothesis in {}",
            a.refs, a.hyp
        )));
    }
    let mut total = BleuStats::zero(DEFAULT_MAX_N);
    for (id, tokens) in &hyps {
        let r = ReferenceNgrams::new(refs.require(*id).map_err(in_file(&a.refs))?, DEFAULT_MAX_N)
            .map_err(in_file(&a.refs))?;
        total += &r.stats(tokens);
    }
    println!("BLEU = {:.2}", 100.0 * corpus_bleu(&total));
    Ok(())
}

pub fn richness(a: RichnessArgs) -> CliResult {
    if !(a.threshold.is_finite() && a.threshold > 0.0) {
        return Err(CliError::Usage(
            "--threshold must be a positive number".into(),
        ));
    }
    let corpus = read_corpus(&a.nbest)?;
    let report = richness_of(&corpus).map_err(in_file(&a.nbest))?;
    println!(
        "features={} avg_list={:.2} r={:.2}",
        report.feature_count, report.avg_list_size, report.r
    );
    if report.needs_resampling(a.threshold) {
        println!("recommendation: resample lists (r < {})", a.threshold);
    } else {
        println!(
            "recommendation: no resampling needed (r >= {})",
            a.threshold
        );
    }
    Ok(())
}

pub fn tune_sim(a: TuneSimArgs) -> CliResult {
    let cfg = TuneConfig {
        max_rounds: a.rounds,
        per_round_size: a.per_round,
        train_cfg: TrainConfig {
            k: a.k,
            max_iters: a.max_iter,
            l2_scale: a.l2,
            seed: a.seed,
            ..TrainConfig::default()
        },
        richness_threshold: a.threshold,
        resample_m: a.sample_size,
        stop_on_saturation: !a.no_early_stop,
    };
    cfg.validate().map_err(usage)?;
    if !(a.threshold.is_finite() && a.threshold > 0.0) {
        return Err(CliError::Usage(
            "--threshold must be a positive number".into(),
        ));
    }
    check_input(&a.spec)?;
    check_input(&a.refs)?;
    check_output(&a.out)?;
    check_output(&a.history)?;

    let spec = read_spec(&a.spec, a.seed)?;
    let refs = read_refs(&a.refs)?;
    if let Some(s) = (0..spec.num_sentences as u64).find(|s| refs.get(*s).is_none()) {
        return Err(CliError::Data(format!(
            "{}: no reference for sentence {s}",
            a.refs
        )));
    }
    let mut decoder = SyntheticDecoder::new(spec, a.per_round).map_err(in_file(&a.spec))?;
    let outcome = run_tuning(&mut decoder, &refs, &cfg, &WeightMap::new())
        .map_err(|e| CliError::Data(format!("tuning failed: {e}")))?;

    create(&a.out, |out| write_weights(&outcome.weights, out))?;
    create(&a.history, |out| outcome.write_history_csv(out))?;
    if let Some(last) = outcome.records.last() {
        println!(
            "rounds={} dev_bleu={:.2} objective={} corpus_size={}",
            outcome.records.len(),
            100.0 * last.dev_bleu,
            last.objective,
            last.corpus_size
        );
    }
    Ok(())
}

pub fn synth(a: SynthArgs) -> CliResult {
    if a.per_round == Some(0) {
        return Err(CliError::Usage("--per-round must be at least 1".into()));
    }
    check_input(&a.spec)?;
    check_output(&a.nbest)?;
    check_output(&a.refs)?;
    let spec = read_spec(&a.spec, a.seed)?;
    let per_round = a.per_round.unwrap_or(spec.pool_size);
    let refs = spec.references();
    let decoder = SyntheticDecoder::new(spec, per_round).map_err(in_file(&a.spec))?;
    let corpus = decoder.decode_dense(&vec![0.0; decoder.spec().feature_dim]);
    create(&a.nbest, |out| write_nbest(&corpus, out))?;
    create(&a.refs, |out| write_refs(&refs, out))?;
    Ok(())
}
