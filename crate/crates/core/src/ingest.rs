//! Corpus ingestion: JSON-lines loading, text cleaning, rule-based sentence
//! splitting, short-sentence merging, token normalisation and document
//! filtering.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Stopword list shipped with the crate.
pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Minimum number of alphabetic tokens a non-initial sentence needs to stay
/// on its own.
pub const DEFAULT_MIN_TOKENS: usize = 5;

/// Abbreviations that never end a sentence. Compared against the lowercased
/// word preceding the period, trailing period removed.
const ABBREVIATIONS: &[&str] = &[
    "fig", "figs", "eq", "eqs", "e.g", "i.e", "et al", "al", "dr", "no", "vs", "mr", "mrs", "ms",
    "prof", "approx", "ref", "refs", "resp", "cf", "etc", "st", "jr", "sr", "vol", "pp", "sec",
    "tab", "ca", "viz", "nos",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub article_text: String,
    pub abstract_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub raw_text: String,
    /// Lowercased, ASCII-only, punctuation-free tokens. Stopwords are kept;
    /// these are the tokens ROUGE is computed on.
    pub tokens: Vec<String>,
    /// `tokens` with stopwords removed.
    pub content_tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
    pub abstract_sentences: Vec<Vec<String>>,
}

impl Document {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }

    pub fn abstract_token_count(&self) -> usize {
        self.abstract_sentences.iter().map(Vec::len).sum()
    }

    /// Flat abstract token sequence.
    pub fn abstract_tokens(&self) -> Vec<String> {
        self.abstract_sentences.iter().flatten().cloned().collect()
    }

    /// The cleaned article text, reconstructed from the sentences.
    pub fn article_text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| s.raw_text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// Streaming reader over a JSON-lines corpus.
///
/// Malformed lines and records without an abstract are skipped and counted.
pub struct DatasetReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    malformed: usize,
    missing_abstract: usize,
}

impl DatasetReader {
    pub fn malformed(&self) -> usize {
        self.malformed
    }

    pub fn missing_abstract(&self) -> usize {
        self.missing_abstract
    }

    pub fn skipped(&self) -> usize {
        self.malformed + self.missing_abstract
    }
}

impl Iterator for DatasetReader {
    type Item = RawDocument;

    fn next(&mut self) -> Option<RawDocument> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(err) => {
                    log::warn!("{}: read error: {err}", self.path.display());
                    return None;
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            match parse_record(&line, self.line_no) {
                Ok(Some(doc)) => return Some(doc),
                Ok(None) => {
                    log::warn!(
                        "{}:{}: record has no abstract, skipped",
                        self.path.display(),
                        self.line_no
                    );
                    self.missing_abstract += 1;
                }
                Err(err) => {
                    log::warn!(
                        "{}:{}: malformed record skipped: {err}",
                        self.path.display(),
                        self.line_no
                    );
                    self.malformed += 1;
                }
            }
        }
    }
}

/// Opens a corpus for one split. `path` is either a JSON-lines file or a
/// directory holding `<split>.jsonl` (or `<split>.txt`, as in the public
/// PubMed/arXiv releases).
pub fn load_dataset(path: &Path, split: &Split) -> Result<DatasetReader> {
    let file_path = if path.is_dir() {
        let candidates = [
            path.join(format!("{}.jsonl", split.as_str())),
            path.join(format!("{}.txt", split.as_str())),
            path.join(format!("{}.json", split.as_str())),
        ];
        candidates
            .into_iter()
            .find(|p| p.is_file())
            .ok_or_else(|| {
                Error::io(
                    path.join(format!("{}.jsonl", split.as_str())),
                    std::io::Error::new(std::io::ErrorKind::NotFound, "split file not found"),
                )
            })?
    } else {
        path.to_path_buf()
    };
    let file = File::open(&file_path).map_err(|e| Error::io(&file_path, e))?;
    Ok(DatasetReader {
        path: file_path,
        lines: BufReader::new(file).lines(),
        line_no: 0,
        malformed: 0,
        missing_abstract: 0,
    })
}

fn text_field(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Array(items) => {
            let parts: Vec<&str> = items.iter().filter_map(Value::as_str).collect();
            Some(parts.join(" "))
        }
        _ => None,
    }
}

fn strip_sentence_tags(text: &str) -> String {
    text.replace("<S>", " ").replace("</S>", " ")
}

fn parse_record(line: &str, line_no: usize) -> std::result::Result<Option<RawDocument>, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value.as_object().ok_or("record is not a JSON object")?;

    let id = ["id", "article_id", "doc_id"]
        .iter()
        .find_map(|k| obj.get(*k))
        .and_then(|v| match v {
            Value::String(s) if !s.is_empty() => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        })
        .unwrap_or_else(|| format!("line-{line_no}"));

    let article_text = obj
        .get("article_text")
        .and_then(text_field)
        .or_else(|| obj.get("article_sections").and_then(text_field))
        .or_else(|| {
            // released PubMed/arXiv files carry `sections` as list of lists
            obj.get("sections").and_then(|v| {
                v.as_array().map(|secs| {
                    secs.iter()
                        .filter_map(text_field)
                        .collect::<Vec<_>>()
                        .join(" ")
                })
            })
        })
        .unwrap_or_default();

    let Some(abstract_text) = obj.get("abstract_text").and_then(text_field) else {
        return Ok(None);
    };

    Ok(Some(RawDocument {
        id,
        article_text,
        abstract_text: strip_sentence_tags(&abstract_text),
    }))
}

/// Replaces special characters with blanks, collapses whitespace and trims.
pub fn clean_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                while chars.peek() == Some(&'\\') {
                    chars.next();
                }
                out.push(' ');
            }
            '`' if chars.peek() == Some(&'`') => {
                chars.next();
                out.push(' ');
            }
            '\'' if chars.peek() == Some(&'\'') => {
                chars.next();
                out.push(' ');
            }
            '…' | '»' | '«' | '“' | '”' | '\n' | '\r' | '\t' | '\u{a0}' => out.push(' '),
            _ => out.push(c),
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, ')' | ']' | '"' | '\'')
}

/// Start offset and lowercased text of the word ending at byte `end`.
fn preceding_word(text: &str, end: usize) -> (usize, String) {
    let head = &text[..end];
    let start = head
        .rfind(char::is_whitespace)
        .map(|i| i + 1)
        .unwrap_or(0);
    (start, head[start..].to_lowercase())
}

fn is_abbreviation(text: &str, period_at: usize) -> bool {
    let (start, word) = preceding_word(text, period_at);
    if word.is_empty() {
        return false;
    }
    if ABBREVIATIONS.contains(&word.as_str()) {
        return true;
    }
    // two-word forms such as "et al."
    let before = text[..start].trim_end();
    let (_, prev) = preceding_word(before, before.len());
    let pair = format!("{prev} {word}");
    ABBREVIATIONS.contains(&pair.as_str())
}

/// Rule-based sentence boundary detection.
///
/// A boundary falls after `.`, `!` or `?` (plus any closing brackets or
/// quotes) when followed by whitespace and then an uppercase letter or a
/// digit, unless the period ends a known abbreviation. The abbreviation
/// check looks at the whole whitespace-delimited word, so `(fig.` is not
/// protected while `fig.` is.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
            j += 1;
        }
        let end = chars.get(j).map(|&(p, _)| p).unwrap_or(text.len());
        let followed_by_space = j < chars.len() && chars[j].1.is_whitespace();
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let next_ok = k < chars.len() && (chars[k].1.is_uppercase() || chars[k].1.is_ascii_digit());
        let abbrev = c == '.' && is_abbreviation(text, pos);
        if followed_by_space && next_ok && !abbrev {
            let piece = text[start..end].trim();
            if !piece.is_empty() {
                sentences.push(piece.to_string());
            }
            start = chars[k].0;
            i = k;
        } else {
            i = j;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

fn alphabetic_token_count(sentence: &str) -> usize {
    sentence
        .split_whitespace()
        .filter(|t| t.chars().any(|c| c.is_alphabetic()))
        .count()
}

/// Merges every sentence with fewer than `min_tokens` alphabetic tokens into
/// the sentence before it. The first sentence is never merged away.
pub fn merge_short_sentences(sents: &[String], min_tokens: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(sents.len());
    for sent in sents {
        match out.last_mut() {
            Some(prev) if alphabetic_token_count(sent) < min_tokens => {
                prev.push(' ');
                prev.push_str(sent);
            }
            _ => out.push(sent.clone()),
        }
    }
    out
}

/// Lowercases, drops non-ASCII characters and splits on ASCII punctuation
/// and whitespace. Stopwords are kept.
pub fn normalize_words(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if !c.is_ascii() {
            continue;
        }
        if c.is_ascii_alphanumeric() {
            current.push(c.to_ascii_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Normalised tokens with stopwords removed.
pub fn normalize_tokens(sentence_text: &str, stopwords: &StopwordSet) -> Vec<String> {
    normalize_words(sentence_text)
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct StopwordSet {
    words: HashSet<String>,
}

impl StopwordSet {
    /// Parses one word per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        StopwordSet { words }
    }

    pub fn english() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopwordSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopwordSet {
            words: iter.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub stopwords: StopwordSet,
    pub min_tokens: usize,
}

impl Default for Preprocessor {
    fn default() -> Self {
        Preprocessor {
            stopwords: StopwordSet::english(),
            min_tokens: DEFAULT_MIN_TOKENS,
        }
    }
}

impl Preprocessor {
    pub fn sentences(&self, text: &str) -> Vec<String> {
        let cleaned = clean_text(text);
        merge_short_sentences(&split_sentences(&cleaned), self.min_tokens)
    }

    /// Cleans, splits, merges and tokenises one raw record.
    pub fn process(&self, raw: &RawDocument) -> Document {
        let sentences = self
            .sentences(&raw.article_text)
            .into_iter()
            .enumerate()
            .map(|(index, raw_text)| {
                let tokens = normalize_words(&raw_text);
                let content_tokens = tokens
                    .iter()
                    .filter(|t| !self.stopwords.contains(t))
                    .cloned()
                    .collect();
                Sentence {
                    index,
                    raw_text,
                    tokens,
                    content_tokens,
                }
            })
            .collect();
        let abstract_sentences = split_sentences(&clean_text(&raw.abstract_text))
            .iter()
            .map(|s| normalize_words(s))
            .filter(|t| !t.is_empty())
            .collect();
        Document {
            id: raw.id.clone(),
            sentences,
            abstract_sentences,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub kept: usize,
    pub duplicates: usize,
    pub empty: usize,
    pub abstract_too_long: usize,
}

impl FilterStats {
    pub fn removed(&self) -> usize {
        self.duplicates + self.empty + self.abstract_too_long
    }
}

/// Streaming document filter. Keeps the first occurrence of each cleaned
/// article text and drops empty documents and documents whose abstract is
/// at least as long as the article.
#[derive(Debug, Default)]
pub struct DocumentFilter {
    seen: HashSet<[u8; 32]>,
    stats: FilterStats,
}

impl DocumentFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn admit(&mut self, doc: &Document) -> bool {
        if doc.sentences.is_empty() || doc.abstract_token_count() == 0 {
            self.stats.empty += 1;
            return false;
        }
        if doc.abstract_token_count() >= doc.token_count() {
            self.stats.abstract_too_long += 1;
            return false;
        }
        let digest: [u8; 32] = Sha256::digest(doc.article_text().as_bytes()).into();
        if !self.seen.insert(digest) {
            self.stats.duplicates += 1;
            return false;
        }
        self.stats.kept += 1;
        true
    }

    pub fn stats(&self) -> FilterStats {
        self.stats
    }
}

pub fn filter_documents(docs: impl IntoIterator<Item = Document>) -> (Vec<Document>, FilterStats) {
    let mut filter = DocumentFilter::new();
    let kept = docs.into_iter().filter(|d| filter.admit(d)).collect();
    (kept, filter.stats())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn clean_text_examples() {
        assert_eq!(clean_text("a\nb"), "a b");
        assert_eq!(clean_text("plain text"), "plain text");
        assert_eq!(clean_text("x » y … z"), "x y z");
        assert_eq!(clean_text("``quoted'' a\\\\b"), "quoted a b");
        assert_eq!(clean_text("  lots   of\t\tspace "), "lots of space");
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_sentences("A cat. A dog."), strings(&["A cat.", "A dog."]));
        assert!(split_sentences("").is_empty());
        assert_eq!(
            split_sentences("Results in (fig. 1). Next."),
            strings(&["Results in (fig.", "1).", "Next."])
        );
    }

    #[test]
    fn split_respects_abbreviations() {
        assert_eq!(
            split_sentences("See fig. 2 for details. Smith et al. Showed this. Done."),
            strings(&["See fig. 2 for details.", "Smith et al. Showed this.", "Done."])
        );
        assert_eq!(
            split_sentences("We use e.g. Newton. Then vs. Others."),
            strings(&["We use e.g. Newton.", "Then vs. Others."])
        );
        assert_eq!(split_sentences("lowercase. next word"), strings(&["lowercase. next word"]));
        assert_eq!(split_sentences("Really?! Yes."), strings(&["Really?!", "Yes."]));
    }

    #[test]
    fn merge_examples() {
        let s = strings(&[
            "Neptune masses can be excluded by our limits determinations (fig.",
            "1).",
            "Next.",
        ]);
        assert_eq!(
            merge_short_sentences(&s, 1),
            strings(&[
                "Neptune masses can be excluded by our limits determinations (fig. 1).",
                "Next."
            ])
        );
        let s = strings(&["long sentence one here", "long sentence two here"]);
        assert_eq!(merge_short_sentences(&s, 2), s);
        assert_eq!(
            merge_short_sentences(&strings(&["a b c", "x"]), 2),
            strings(&["a b c x"])
        );
        // short first sentence stays
        assert_eq!(
            merge_short_sentences(&strings(&["x", "a b c"]), 2),
            strings(&["x", "a b c"])
        );
    }

    #[test]
    fn normalize_examples() {
        let stop: StopwordSet = ["the"].into_iter().collect();
        assert_eq!(normalize_tokens("The Cat RAN.", &stop), strings(&["cat", "ran"]));
        assert!(normalize_tokens("", &stop).is_empty());
        assert_eq!(normalize_tokens("naïve café", &stop), strings(&["nave", "caf"]));
    }

    #[test]
    fn shipped_stopwords() {
        let s = StopwordSet::english();
        assert!(s.len() > 150);
        assert!(s.contains("the") && s.contains("and") && !s.contains("cat"));
    }

    fn doc(id: &str, article: &str, abs: &str) -> Document {
        Preprocessor::default().process(&RawDocument {
            id: id.into(),
            article_text: article.into(),
            abstract_text: abs.into(),
        })
    }

    #[test]
    fn filter_rules() {
        let a = doc("a", "The cat sat on the mat today. The dog ran far away.", "cat sat");
        let b = doc("b", "The cat sat on the mat today. The dog ran far away.", "cat");
        let short = doc("c", "Tiny article.", "a much longer abstract than the article");
        let empty = doc("d", "", "something");
        let (kept, stats) = filter_documents(vec![a.clone(), b, short, empty]);
        assert_eq!(kept, vec![a]);
        assert_eq!(
            stats,
            FilterStats {
                kept: 1,
                duplicates: 1,
                empty: 1,
                abstract_too_long: 1
            }
        );
    }

    #[test]
    fn filter_length_rule_example() {
        let article = vec!["word"; 200].join(" ");
        let abs = vec!["word"; 300].join(" ");
        let (kept, _) = filter_documents(vec![doc("x", &article, &abs)]);
        assert!(kept.is_empty());
    }

    #[test]
    fn filter_is_idempotent() {
        let docs = vec![
            doc("a", "Alpha beta gamma delta epsilon. Zeta eta theta iota kappa.", "alpha"),
            doc("b", "Alpha beta gamma delta epsilon. Zeta eta theta iota kappa.", "beta"),
            doc("c", "Other text entirely here now. And more words follow it.", "other"),
        ];
        let (once, _) = filter_documents(docs);
        let (twice, _) = filter_documents(once.clone());
        assert_eq!(once, twice);
    }

    #[test]
    fn process_assigns_contiguous_indices() {
        let d = doc(
            "x",
            "First sentence is here for you. (fig. 1). Second sentence is also here now.\nThird one.",
            "first",
        );
        for (i, s) in d.sentences.iter().enumerate() {
            assert_eq!(s.index, i);
            assert!(s.content_tokens.iter().all(|t| s.tokens.contains(t)));
        }
        assert_eq!(d.sentences.len(), 2);
    }

    #[test]
    fn load_dataset_skips_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.jsonl");
        let mut f = File::create(&path).unwrap();
        writeln!(f, r#"{{"id":"1","article_text":"A b.","abstract_text":"a"}}"#).unwrap();
        writeln!(f, r#"{{"id":"2","article_text":"","abstract_text":"a"}}"#).unwrap();
        writeln!(f, r#"{{"id":"3","article_text":"A b." "#).unwrap();
        writeln!(
            f,
            r#"{{"article_id":"4","article_text":["s one.","s two."],"abstract_text":["<S> a b . </S>"]}}"#
        )
        .unwrap();
        writeln!(f, r#"{{"id":"5","article_sections":["x","y"],"abstract_text":"q"}}"#).unwrap();
        writeln!(f, r#"{{"id":"6","article_text":"no abstract"}}"#).unwrap();
        drop(f);

        let mut reader = load_dataset(dir.path(), &Split::Train).unwrap();
        let docs: Vec<RawDocument> = reader.by_ref().collect();
        let ids: Vec<&str> = docs.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["1", "2", "4", "5"]);
        assert_eq!(docs[1].article_text, "");
        assert_eq!(docs[2].article_text, "s one. s two.");
        assert_eq!(docs[3].article_text, "x y");
        assert_eq!(reader.malformed(), 1);
        assert_eq!(reader.missing_abstract(), 1);
    }

    #[test]
    fn load_dataset_missing_file() {
        let err = load_dataset(Path::new("/nonexistent/file.jsonl"), &Split::Test);
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
