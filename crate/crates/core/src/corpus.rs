//! N-best lists, reference translations and the plain-text formats they are
//! read from and written to.
//!
//! An N-best file holds one hypothesis per line:
//!
//! ```text
//! <sent_id> ||| <tokens> ||| <name>=<value> <name>=<value> ... ||| <decoder_score>
//! ```
//!
//! A reference file holds `<sent_id> ||| <tokens>` lines, repeating the id for
//! every extra reference. Weights files hold one `<name>\t<value>` pair per
//! line, sorted by name.
//!
//! Numbers are written with the shortest digit string that parses back to the
//! same `f64`, so a canonically formatted file survives a parse/write cycle
//! byte for byte.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const FIELD_SEPARATOR: &str = "|||";

/// Feature names interned to dense, 0-based indices in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureIndex {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl FeatureIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Returns the index of `name`, assigning the next free one if unseen.
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }
}

/// One candidate translation. Feature ids refer to the owning corpus's
/// [`FeatureIndex`]; features not listed are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub sent_id: u64,
    pub tokens: Vec<String>,
    pub features: Vec<(usize, f64)>,
    pub decoder_score: f64,
}

impl Hypothesis {
    /// Inner product of the sparse feature vector with a dense weight slice.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.features.iter().map(|&(id, v)| v * weights[id]).sum()
    }
}

/// All hypotheses produced for one source sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct NBestList {
    pub sent_id: u64,
    pub hypotheses: Vec<Hypothesis>,
}

impl NBestList {
    pub fn new(sent_id: u64) -> Self {
        Self {
            sent_id,
            hypotheses: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }
}

/// Drops every hypothesis whose token sequence already appeared earlier in
/// the list. The first occurrence keeps its features and score.
pub fn dedup(list: NBestList) -> NBestList {
    let mut seen: HashSet<Vec<String>> = HashSet::with_capacity(list.hypotheses.len());
    let hypotheses = list
        .hypotheses
        .into_iter()
        .filter(|h| seen.insert(h.tokens.clone()))
        .collect();
    NBestList {
        sent_id: list.sent_id,
        hypotheses,
    }
}

/// A set of N-best lists sharing one feature index.
///
/// Lists are kept in the order their sentence ids first appeared.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    lists: Vec<NBestList>,
    positions: HashMap<u64, usize>,
    features: FeatureIndex,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lists(&self) -> &[NBestList] {
        &self.lists
    }

    pub fn list(&self, sent_id: u64) -> Option<&NBestList> {
        self.positions.get(&sent_id).map(|&p| &self.lists[p])
    }

    pub fn feature_index(&self) -> &FeatureIndex {
        &self.features
    }

    pub fn num_hypotheses(&self) -> usize {
        self.lists.iter().map(NBestList::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// Appends a hypothesis given with named features, interning the names.
    pub fn push_named<S: AsRef<str>>(
        &mut self,
        sent_id: u64,
        tokens: Vec<String>,
        features: &[(S, f64)],
        decoder_score: f64,
    ) {
        let features = features
            .iter()
            .map(|(name, v)| (self.features.intern(name.as_ref()), *v))
            .collect();
        self.push(Hypothesis {
            sent_id,
            tokens,
            features,
            decoder_score,
        });
    }

    /// Appends a hypothesis whose feature ids already refer to this corpus.
    pub(crate) fn push(&mut self, hyp: Hypothesis) {
        let next = self.lists.len();
        let pos = *self.positions.entry(hyp.sent_id).or_insert(next);
        if pos == next {
            self.lists.push(NBestList::new(hyp.sent_id));
        }
        self.lists[pos].hypotheses.push(hyp);
    }

    /// Applies [`dedup`] to every list.
    pub fn dedup(self) -> Corpus {
        let Corpus {
            lists,
            positions,
            features,
        } = self;
        Corpus {
            lists: lists.into_iter().map(dedup).collect(),
            positions,
            features,
        }
    }
}

/// Concatenates `a`'s and `b`'s list for every sentence id, then deduplicates.
///
/// The result's feature index extends `a`'s index with `b`'s new names.
pub fn merge(a: Corpus, b: Corpus) -> Corpus {
    let mut out = a;
    let remap: Vec<usize> = b
        .features
        .names()
        .iter()
        .map(|name| out.features.intern(name))
        .collect();
    for list in b.lists {
        for mut hyp in list.hypotheses {
            for f in &mut hyp.features {
                f.0 = remap[f.0];
            }
            out.push(hyp);
        }
    }
    out.dedup()
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(FIELD_SEPARATOR)
        .map(|f| f.strip_prefix(' ').unwrap_or(f))
        .map(|f| f.strip_suffix(' ').unwrap_or(f))
        .collect()
}

fn parse_sent_id(field: &str, line: usize) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid sentence id {:?}", field.trim())))
}

fn parse_number(field: &str, line: usize, what: &str) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(
            line,
            format!("invalid {what} {:?}", field.trim()),
        )),
    }
}

fn tokenize(field: &str) -> Vec<String> {
    field.split_whitespace().map(str::to_owned).collect()
}

/// Parses an N-best file. Lines are grouped by sentence id, keeping input
/// order within each list; blank lines are skipped.
pub fn parse_nbest<R: BufRead>(reader: R) -> Result<Corpus> {
    let mut corpus = Corpus::new();
    let mut names_on_line: HashSet<String> = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_fields(line);
        if fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!(
                    "expected 4 fields separated by '|||', found {}",
                    fields.len()
                ),
            ));
        }
        let sent_id = parse_sent_id(fields[0], lineno)?;
        let tokens = tokenize(fields[1]);
        names_on_line.clear();
        let mut features = Vec::new();
        for item in fields[2].split_whitespace() {
            let (name, value) = item
                .rsplit_once('=')
                .ok_or_else(|| Error::parse(lineno, format!("feature {item:?} lacks '='")))?;
            if name.is_empty() {
                return Err(Error::parse(
                    lineno,
                    format!("empty feature name in {item:?}"),
                ));
            }
            if !names_on_line.insert(name.to_owned()) {
                return Err(Error::parse(lineno, format!("duplicate feature {name:?}")));
            }
            let value = parse_number(value, lineno, "feature value")?;
            features.push((corpus.features.intern(name), value));
        }
        let decoder_score = parse_number(fields[3], lineno, "decoder score")?;
        corpus.push(Hypothesis {
            sent_id,
            tokens,
            features,
            decoder_score,
        });
    }
    Ok(corpus)
}

/// Renders `value` as the shortest decimal string that parses back to it.
///
/// Plain notation is used for magnitudes in `[1e-5, 1e16)`, exponent notation
/// otherwise.
pub fn format_number(value: f64) -> String {
    let magnitude = value.abs();
    if magnitude == 0.0 || (1e-5..1e16).contains(&magnitude) {
        format!("{value}")
    } else {
        format!("{value:e}")
    }
}

/// Writes one hypothesis as an N-best line (without the trailing newline).
pub fn format_hypothesis(hyp: &Hypothesis, features: &FeatureIndex) -> String {
    let feats: Vec<String> = hyp
        .features
        .iter()
        .map(|&(id, v)| format!("{}={}", features.name(id), format_number(v)))
        .collect();
    format!(
        "{} ||| {} ||| {} ||| {}",
        hyp.sent_id,
        hyp.tokens.join(" "),
        feats.join(" "),
        format_number(hyp.decoder_score)
    )
}

pub fn write_nbest<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for list in corpus.lists() {
        for hyp in &list.hypotheses {
            writeln!(out, "{}", format_hypothesis(hyp, corpus.feature_index()))?;
        }
    }
    Ok(())
}

/// Reference translations, one or more per sentence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceSet {
    refs: BTreeMap<u64, Vec<Vec<String>>>,
}

impl ReferenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, sent_id: u64, tokens: Vec<String>) {
        self.refs.entry(sent_id).or_default().push(tokens);
    }

    pub fn get(&self, sent_id: u64) -> Option<&[Vec<String>]> {
        self.refs.get(&sent_id).map(Vec::as_slice)
    }

    pub fn require(&self, sent_id: u64) -> Result<&[Vec<String>]> {
        self.get(sent_id).ok_or(Error::MissingReference(sent_id))
    }

    pub fn sent_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.refs.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }
}

pub fn parse_refs<R: BufRead>(reader: R) -> Result<ReferenceSet> {
    let mut refs = ReferenceSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (id, tokens) = parse_id_tokens(line, lineno)?;
        refs.add(id, tokens);
    }
    Ok(refs)
}

/// Parses a `<sent_id> ||| <tokens>` line; trailing `|||` fields are ignored
/// so full N-best lines are accepted too.
pub fn parse_id_tokens(line: &str, lineno: usize) -> Result<(u64, Vec<String>)> {
    let fields = split_fields(line);
    if fields.len() != 2 && fields.len() != 4 {
        return Err(Error::parse(
            lineno,
            format!(
                "expected '<id> ||| <tokens>', found {} fields",
                fields.len()
            ),
        ));
    }
    Ok((parse_sent_id(fields[0], lineno)?, tokenize(fields[1])))
}

pub fn write_refs<W: Write>(refs: &ReferenceSet, mut out: W) -> Result<()> {
    for (id, list) in &refs.refs {
        for tokens in list {
            writeln!(out, "{id} ||| {}", tokens.join(" "))?;
        }
    }
    Ok(())
}

/// Named weights, ordered by feature name as in the weights file.
pub type WeightMap = BTreeMap<String, f64>;

pub fn parse_weights<R: BufRead>(reader: R) -> Result<WeightMap> {
    let mut map = WeightMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (name, value) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(lineno, "expected '<name>\\t<value>'"))?;
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::parse(
                lineno,
                format!("invalid feature name {name:?}"),
            ));
        }
        let value = parse_number(value, lineno, "weight")?;
        if map.insert(name.to_owned(), value).is_some() {
            return Err(Error::parse(lineno, format!("duplicate feature {name:?}")));
        }
    }
    Ok(map)
}

pub fn write_weights<W: Write>(weights: &WeightMap, mut out: W) -> Result<()> {
    for (name, value) in weights {
        writeln!(out, "{name}\t{}", format_number(*value))?;
    }
    Ok(())
}
