//! Vocabulary, content-word filtering, embeddings, tf-idf and cosine
//! similarity.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{Document, Sentence, StopwordSet};

pub const DEFAULT_VOCAB_CAP: usize = 50_000;
pub const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.txt");

/// Header keyword of the sentence-embedding interchange format.
pub const INTERCHANGE_MAGIC: &str = "graphlss-embeddings";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    frequency: Vec<u64>,
    sentence_df: Vec<u64>,
}

/// Frequency-ranked token table with dense ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    frequency: Vec<u64>,
    sentence_df: Vec<u64>,
    index: HashMap<String, u32>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens: r.tokens,
            frequency: r.frequency,
            sentence_df: r.sentence_df,
            index,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            frequency: v.frequency,
            sentence_df: v.sentence_df,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn frequency(&self, token: &str) -> Option<u64> {
        self.id(token).map(|i| self.frequency[i as usize])
    }

    /// Number of corpus sentences containing `token`.
    pub fn sentence_df(&self, token: &str) -> Option<u64> {
        self.id(token).map(|i| self.sentence_df[i as usize])
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// Counts content tokens over the corpus and keeps the `cap` most frequent,
/// ties broken lexicographically.
pub fn build_vocabulary<'a>(
    corpus: impl IntoIterator<Item = &'a Document>,
    cap: usize,
) -> Result<Vocabulary> {
    let mut freq: HashMap<&str, (u64, u64)> = HashMap::new();
    let mut docs = 0usize;
    for doc in corpus {
        docs += 1;
        for sent in &doc.sentences {
            let mut seen = HashSet::new();
            for tok in &sent.content_tokens {
                let entry = freq.entry(tok.as_str()).or_insert((0, 0));
                entry.0 += 1;
                if seen.insert(tok.as_str()) {
                    entry.1 += 1;
                }
            }
        }
    }
    if docs == 0 {
        return Err(Error::Data("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut ranked: Vec<(&str, (u64, u64))> = freq.into_iter().collect();
    ranked.sort_unstable_by(|a, b| b.1 .0.cmp(&a.1 .0).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(cap);
    Ok(VocabularyRepr {
        tokens: ranked.iter().map(|(t, _)| t.to_string()).collect(),
        frequency: ranked.iter().map(|(_, (f, _))| *f).collect(),
        sentence_df: ranked.iter().map(|(_, (_, d))| *d).collect(),
    }
    .into())
}

/// Coarse part-of-speech tag set, stored as bit flags.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TagSet(u8);

impl TagSet {
    pub const NOUN: TagSet = TagSet(1);
    pub const VERB: TagSet = TagSet(2);
    pub const ADJECTIVE: TagSet = TagSet(4);
    pub const ADVERB: TagSet = TagSet(8);
    pub const OTHER: TagSet = TagSet(16);
    pub const CONTENT: TagSet = TagSet(1 | 2 | 4);

    pub fn union(self, other: TagSet) -> TagSet {
        TagSet(self.0 | other.0)
    }

    pub fn intersects(self, other: TagSet) -> bool {
        self.0 & other.0 != 0
    }

    fn parse_tag(tag: &str) -> TagSet {
        match tag.trim().to_ascii_lowercase().as_str() {
            "noun" | "n" | "nn" => TagSet::NOUN,
            "verb" | "v" | "vb" => TagSet::VERB,
            "adj" | "adjective" | "a" | "jj" => TagSet::ADJECTIVE,
            "adv" | "adverb" | "r" | "rb" => TagSet::ADVERB,
            _ => TagSet::OTHER,
        }
    }
}

/// Decides which normalised tokens become word nodes.
pub trait ContentWordFilter: Send + Sync {
    fn is_content(&self, token: &str) -> bool;
}

const SUFFIX_RULES: &[(&str, TagSet)] = &[
    ("tion", TagSet::NOUN),
    ("ness", TagSet::NOUN),
    ("ment", TagSet::NOUN),
    ("ize", TagSet::VERB),
    ("ise", TagSet::VERB),
    ("ify", TagSet::VERB),
    ("ous", TagSet::ADJECTIVE),
    ("ful", TagSet::ADJECTIVE),
    ("ive", TagSet::ADJECTIVE),
    ("al", TagSet::ADJECTIVE),
    ("ly", TagSet::ADVERB),
];

/// Lexicon lookup with suffix fallback. Unknown tokens are tagged as nouns
/// and therefore kept; all-digit tokens and stopwords are dropped.
#[derive(Debug, Clone, Default)]
pub struct LexiconFilter {
    stopwords: StopwordSet,
    lexicon: HashMap<String, TagSet>,
}

impl LexiconFilter {
    pub fn new(stopwords: StopwordSet, lexicon: HashMap<String, TagSet>) -> Self {
        LexiconFilter { stopwords, lexicon }
    }

    /// Parses `token tag[,tag...]` lines; `#` starts a comment line.
    pub fn parse_lexicon(text: &str) -> HashMap<String, TagSet> {
        let mut lexicon = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(token), Some(tags)) = (parts.next(), parts.next()) else {
                continue;
            };
            let tags = tags
                .split(',')
                .map(TagSet::parse_tag)
                .fold(TagSet::default(), TagSet::union);
            let entry: &mut TagSet = lexicon.entry(token.to_lowercase()).or_default();
            *entry = entry.union(tags);
        }
        lexicon
    }

    /// Shipped stopwords and lexicon.
    pub fn english() -> Self {
        LexiconFilter::new(StopwordSet::english(), Self::parse_lexicon(DEFAULT_LEXICON))
    }

    pub fn load(stopwords: &Path, lexicon: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(lexicon).map_err(|e| Error::io(lexicon, e))?;
        Ok(LexiconFilter::new(
            StopwordSet::load(stopwords)?,
            Self::parse_lexicon(&text),
        ))
    }

    pub fn tags(&self, token: &str) -> TagSet {
        if let Some(&tags) = self.lexicon.get(token) {
            return tags;
        }
        if token.bytes().all(|b| b.is_ascii_digit()) {
            return TagSet::OTHER;
        }
        SUFFIX_RULES
            .iter()
            .find(|(suffix, _)| token.len() > suffix.len() + 1 && token.ends_with(suffix))
            .map(|&(_, tag)| tag)
            .unwrap_or(TagSet::NOUN)
    }
}

impl ContentWordFilter for LexiconFilter {
    fn is_content(&self, token: &str) -> bool {
        !token.is_empty() && !self.stopwords.contains(token) && self.tags(token).intersects(TagSet::CONTENT)
    }
}

pub fn content_words<F: ContentWordFilter + ?Sized>(tokens: &[String], filter: &F) -> Vec<String> {
    tokens.iter().filter(|t| filter.is_content(t)).cloned().collect()
}

/// What an embedding table returns for a token it has no vector for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissPolicy {
    #[default]
    Zero,
    /// Unit vector drawn from a generator seeded by the token's hash.
    Hashed,
}

impl std::str::FromStr for MissPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(MissPolicy::Zero),
            "hashed" | "random" => Ok(MissPolicy::Hashed),
            other => Err(Error::Config(format!("unknown miss policy `{other}`"))),
        }
    }
}

fn hashed_unit_vector(token: &str, dim: usize) -> Vec<f32> {
    let seed: [u8; 32] = Sha256::digest(token.as_bytes()).into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    let mut v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

/// Word vectors restricted to a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
    miss: MissPolicy,
}

impl EmbeddingTable {
    pub fn new(dim: usize, miss: MissPolicy) -> Self {
        EmbeddingTable {
            dim,
            vectors: HashMap::new(),
            miss,
        }
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("embedding vector has non-finite entries".into()));
        }
        self.vectors.insert(token.into(), vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn miss_policy(&self) -> MissPolicy {
        self.miss
    }

    pub fn get(&self, token: &str) -> Option<&[f32]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// The stored vector, or the miss-policy vector.
    pub fn vector(&self, token: &str) -> Vec<f32> {
        match (self.get(token), self.miss) {
            (Some(v), _) => v.to_vec(),
            (None, MissPolicy::Zero) => vec![0.0; self.dim],
            (None, MissPolicy::Hashed) => hashed_unit_vector(token, self.dim),
        }
    }
}

/// Reads a whitespace-separated `token v1 ... vd` file, keeping only
/// vocabulary tokens. Every line must have the same dimension.
pub fn load_word_embeddings(path: &Path, vocab: &Vocabulary, miss: MissPolicy) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_word_embeddings(BufReader::new(file), path, vocab, miss)
}

pub fn read_word_embeddings<R: BufRead>(
    reader: R,
    path: &Path,
    vocab: &Vocabulary,
    miss: MissPolicy,
) -> Result<EmbeddingTable> {
    let mut table: Option<EmbeddingTable> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else {
            continue;
        };
        let values: Vec<&str> = fields.collect();
        // word2vec-style "count dim" header
        if i == 0 && values.len() == 1 && token.parse::<u64>().is_ok() && values[0].parse::<u64>().is_ok() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let table = table.get_or_insert_with(|| EmbeddingTable::new(values.len(), miss));
        if values.len() != table.dim || values.is_empty() {
            return Err(parse_err(format!(
                "expected {} components, found {}",
                table.dim,
                values.len()
            )));
        }
        if !vocab.contains(token) {
            continue;
        }
        let vector = values
            .iter()
            .map(|v| v.parse::<f32>())
            .collect::<std::result::Result<Vec<f32>, _>>()
            .map_err(|e| parse_err(e.to_string()))?;
        table.insert(token, vector).map_err(|e| parse_err(e.to_string()))?;
    }
    match table {
        Some(t) if !t.is_empty() => Ok(t),
        _ => Err(Error::Data(format!(
            "{}: no vocabulary token has an embedding",
            path.display()
        ))),
    }
}

/// Precomputed sentence vectors keyed by `(doc_id, sentence_index)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SentenceEmbeddings {
    dim: usize,
    rows: BTreeMap<(String, usize), Vec<f32>>,
}

impl SentenceEmbeddings {
    pub fn new(dim: usize) -> Self {
        SentenceEmbeddings {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, doc_id: &str, index: usize, vector: Vec<f32>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if doc_id.is_empty() || doc_id.contains(char::is_whitespace) {
            return Err(Error::Data(format!("document id `{doc_id}` cannot be written to the interchange format")));
        }
        self.rows.insert((doc_id.to_string(), index), vector);
        Ok(())
    }

    pub fn get(&self, doc_id: &str, index: usize) -> Option<&[f32]> {
        self.rows.get(&(doc_id.to_string(), index)).map(Vec::as_slice)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), path)
    }

    /// Parses the interchange format: a `graphlss-embeddings v1 dim=<d>`
    /// header followed by `<doc_id> <sentence_index> v1 ... vd` rows.
    pub fn read<R: BufRead>(reader: R, path: &Path) -> Result<Self> {
        let mut lines = reader.lines();
        let perr = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let header = lines
            .next()
            .ok_or_else(|| perr(1, "missing header".into()))?
            .map_err(|e| Error::io(path, e))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let dim = match parts.as_slice() {
            [magic, "v1", dim] if *magic == INTERCHANGE_MAGIC => dim
                .strip_prefix("dim=")
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&d| d > 0)
                .ok_or_else(|| perr(1, format!("bad dimension field `{dim}`")))?,
            _ => return Err(perr(1, format!("unrecognised header `{header}`"))),
        };
        let mut out = SentenceEmbeddings::new(dim);
        for (i, line) in lines.enumerate() {
            let line_no = i + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if fields.len() != dim + 2 {
                return Err(perr(
                    line_no,
                    format!("expected {} fields, found {}", dim + 2, fields.len()),
                ));
            }
            let index = fields[1]
                .parse::<usize>()
                .map_err(|e| perr(line_no, format!("sentence index: {e}")))?;
            let vector = fields[2..]
                .iter()
                .map(|v| v.parse::<f32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| perr(line_no, e.to_string()))?;
            if vector.iter().any(|x| !x.is_finite()) {
                return Err(perr(line_no, "non-finite component".into()));
            }
            out.insert(fields[0], index, vector)?;
        }
        Ok(out)
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{INTERCHANGE_MAGIC} v1 dim={}", self.dim)?;
        for ((doc, idx), v) in &self.rows {
            write!(out, "{doc} {idx}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Where sentence feature vectors come from.
#[derive(Debug, Clone, Copy)]
pub enum SentenceSource<'a> {
    External(&'a SentenceEmbeddings),
    /// Mean of the word vectors of the sentence's content tokens.
    MeanPooled(&'a EmbeddingTable),
}

impl SentenceSource<'_> {
    pub fn dim(&self) -> usize {
        match self {
            SentenceSource::External(e) => e.dim(),
            SentenceSource::MeanPooled(t) => t.dim(),
        }
    }
}

pub fn mean_pooled(sentence: &Sentence, table: &EmbeddingTable) -> Vec<f32> {
    let mut acc = vec![0.0f64; table.dim()];
    let mut count = 0usize;
    for tok in &sentence.content_tokens {
        if let Some(v) = table.get(tok) {
            acc.iter_mut().zip(v).for_each(|(a, &x)| *a += x as f64);
            count += 1;
        }
    }
    if count == 0 {
        return vec![0.0; table.dim()];
    }
    acc.into_iter().map(|a| (a / count as f64) as f32).collect()
}

pub fn sentence_embeddings(doc: &Document, source: SentenceSource<'_>) -> Result<Vec<Vec<f32>>> {
    doc.sentences
        .iter()
        .map(|s| match source {
            SentenceSource::External(store) => store.get(&doc.id, s.index).map(<[f32]>::to_vec).ok_or_else(|| {
                Error::Data(format!(
                    "no sentence embedding for document `{}` sentence {}",
                    doc.id, s.index
                ))
            }),
            SentenceSource::MeanPooled(table) => Ok(mean_pooled(s, table)),
        })
        .collect()
}

/// Per-document sentence frequencies for tf-idf, where each sentence plays
/// the role of a document.
#[derive(Debug, Clone)]
pub struct DocTermStats<'a> {
    doc: &'a Document,
    df: HashMap<&'a str, usize>,
}

impl<'a> DocTermStats<'a> {
    pub fn new(doc: &'a Document) -> Self {
        let mut df = HashMap::new();
        for sent in &doc.sentences {
            let unique: HashSet<&str> = sent.content_tokens.iter().map(String::as_str).collect();
            for tok in unique {
                *df.entry(tok).or_insert(0) += 1;
            }
        }
        DocTermStats { doc, df }
    }

    pub fn df(&self, token: &str) -> usize {
        self.df.get(token).copied().unwrap_or(0)
    }

    /// `tf * (ln((1 + n) / (1 + df)) + 1)`, tf relative to the sentence's
    /// content-token count.
    pub fn tf_idf(&self, token: &str, sentence: usize) -> Result<f64> {
        let sent = self
            .doc
            .sentences
            .get(sentence)
            .ok_or_else(|| Error::Data(format!("sentence {sentence} out of range")))?;
        let count = sent.content_tokens.iter().filter(|t| *t == token).count();
        if count == 0 {
            return Err(Error::Data(format!(
                "token `{token}` does not occur in sentence {sentence}"
            )));
        }
        let tf = count as f64 / sent.content_tokens.len() as f64;
        let n = self.doc.sentences.len() as f64;
        let idf = ((1.0 + n) / (1.0 + self.df(token) as f64)).ln() + 1.0;
        Ok(tf * idf)
    }
}

pub fn tf_idf(token: &str, sentence: &Sentence, doc: &Document) -> Result<f64> {
    DocTermStats::new(doc).tf_idf(token, sentence.index)
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension {
            expected: u.len(),
            found: v.len(),
        });
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a as f64, b as f64);
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn vec3() -> impl Strategy<Value = Vec<f32>> {
        proptest::collection::vec(-10.0f32..10.0, 3)
    }

    proptest! {
        #[test]
        fn cosine_properties(u in vec3(), v in vec3(), alpha in 0.01f32..100.0) {
            let c = cosine(&u, &v).unwrap();
            prop_assert!(c.abs() <= 1.0);
            prop_assert_eq!(c, cosine(&v, &u).unwrap());
            let scaled: Vec<f32> = u.iter().map(|x| x * alpha).collect();
            prop_assert!((cosine(&scaled, &v).unwrap() - c).abs() < 1e-5);
        }

        #[test]
        fn tf_sums_to_one_and_weights_nonnegative(
            sents in proptest::collection::vec(proptest::collection::vec(0u8..6, 1..8), 1..6)
        ) {
            let doc = Document {
                id: "p".into(),
                sentences: sents.iter().enumerate().map(|(i, s)| {
                    let t: Vec<String> = s.iter().map(|x| format!("w{x}")).collect();
                    Sentence { index: i, raw_text: String::new(), tokens: t.clone(), content_tokens: t }
                }).collect(),
                abstract_sentences: vec![],
            };
            let stats = DocTermStats::new(&doc);
            for (i, s) in doc.sentences.iter().enumerate() {
                let unique: HashSet<&String> = s.content_tokens.iter().collect();
                let mut tf_sum = 0.0;
                for tok in unique {
                    let w = stats.tf_idf(tok, i).unwrap();
                    prop_assert!(w >= 0.0);
                    let idf = ((1.0 + doc.sentences.len() as f64) / (1.0 + stats.df(tok) as f64)).ln() + 1.0;
                    tf_sum += w / idf;
                }
                prop_assert!((tf_sum - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn content_words_idempotent(toks in proptest::collection::vec("[a-z]{1,9}", 0..12)) {
            let f = LexiconFilter::english();
            let once = content_words(&toks, &f);
            prop_assert_eq!(content_words(&once, &f), once.clone());
        }

        #[test]
        fn vocabulary_deterministic(toks in proptest::collection::vec("[a-e]{1,2}", 1..30)) {
            let doc = Document {
                id: "p".into(),
                sentences: vec![Sentence { index: 0, raw_text: String::new(), tokens: toks.clone(), content_tokens: toks }],
                abstract_sentences: vec![],
            };
            let a = build_vocabulary([&doc], 5).unwrap();
            let b = build_vocabulary([&doc], 5).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
