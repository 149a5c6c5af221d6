//! Text cleaning, whitespace tokenization with stopword removal, and
//! TF-IDF feature extraction.
//!
//! The pipeline is deliberately simple: NFC normalization, URL and
//! punctuation stripping, whitespace tokenization, exact-match stopword
//! filtering, then smoothed-IDF bag-of-words features with L2-normalized
//! vectors. Latin-script fragments embedded in Urdu text are lowercased.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

/// Bundled Urdu stopword list (one token per line, `#` comments).
pub const BUNDLED_URDU_STOPWORDS: &str = include_str!("../data/stopwords_ur.txt");

#[derive(Debug, Error)]
pub enum TextprepError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot fit TF-IDF on an empty corpus")]
    EmptyCorpus,
}

/// Exact-match stopword set. Entries are NFC-normalized and trimmed, so
/// membership testing is insensitive to encoding variants of the same
/// text.
#[derive(Debug, Clone, Default)]
pub struct StopwordList {
    words: std::collections::HashSet<String>,
}

// Serialized as a sorted list so model files are byte-stable.
impl Serialize for StopwordList {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut sorted: Vec<&str> = self.words.iter().map(String::as_str).collect();
        sorted.sort_unstable();
        sorted.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StopwordList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<StopwordList, D::Error> {
        let words: Vec<String> = Vec::deserialize(d)?;
        Ok(StopwordList { words: words.into_iter().collect() })
    }
}

impl StopwordList {
    pub fn empty() -> StopwordList {
        StopwordList::default()
    }

    /// Parse stopwords from text: one token per line, blank lines and
    /// `#` comments skipped.
    pub fn from_text(text: &str) -> StopwordList {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.nfc().collect::<String>())
            .collect();
        StopwordList { words }
    }

    pub fn from_file(path: &Path) -> Result<StopwordList, TextprepError> {
        let text = fs::read_to_string(path)
            .map_err(|source| TextprepError::Io { path: path.to_path_buf(), source })?;
        Ok(StopwordList::from_text(&text))
    }

    /// The bundled Urdu list.
    pub fn bundled_urdu() -> StopwordList {
        StopwordList::from_text(BUNDLED_URDU_STOPWORDS)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

fn is_punctuation(c: char) -> bool {
    matches!(
        get_general_category(c),
        GeneralCategory::ConnectorPunctuation
            | GeneralCategory::DashPunctuation
            | GeneralCategory::OpenPunctuation
            | GeneralCategory::ClosePunctuation
            | GeneralCategory::InitialPunctuation
            | GeneralCategory::FinalPunctuation
            | GeneralCategory::OtherPunctuation
    )
}

fn is_url_token(token: &str) -> bool {
    if token.starts_with("www.") {
        return true;
    }
    match token.find("://") {
        Some(pos) if pos > 0 => token[..pos].chars().all(|c| c.is_ascii_alphabetic()),
        _ => false,
    }
}

/// Normalize to NFC, drop URL tokens, strip Unicode punctuation,
/// lowercase, and collapse whitespace to single spaces.
pub fn clean_text(s: &str) -> String {
    let normalized: String = s.nfc().collect();
    let mut out = String::with_capacity(normalized.len());
    for token in normalized.split_whitespace() {
        if is_url_token(token) {
            continue;
        }
        let stripped: String = token
            .chars()
            .filter(|&c| !is_punctuation(c))
            .flat_map(char::to_lowercase)
            .collect();
        if stripped.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&stripped);
    }
    out
}

/// Whitespace tokenization with stopword removal. Order and duplicates
/// are preserved; empty tokens never appear.
pub fn tokenize(s: &str, stop: &StopwordList) -> Vec<String> {
    s.split_whitespace()
        .filter(|t| !stop.contains(t))
        .map(str::to_string)
        .collect()
}

/// Token count of the cleaned, stopword-filtered text.
pub fn count_tokens(s: &str, stop: &StopwordList) -> usize {
    tokenize(&clean_text(s), stop).len()
}

/// Fitted TF-IDF vocabulary and inverse-document-frequency weights.
///
/// `idf[t] = ln((1 + doc_count) / (1 + df(t))) + 1`, so every weight is
/// at least 1 and unseen tokens would be well-defined. Vocabulary order
/// (and thus column index) is document frequency descending, token
/// lexicographic ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "TfidfModelWire")]
pub struct TfidfModel {
    terms: Vec<String>,
    idf: Vec<f64>,
    doc_count: usize,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct TfidfModelWire {
    terms: Vec<String>,
    idf: Vec<f64>,
    doc_count: usize,
}

impl From<TfidfModelWire> for TfidfModel {
    fn from(w: TfidfModelWire) -> TfidfModel {
        TfidfModel::from_parts(w.terms, w.idf, w.doc_count)
    }
}

impl TfidfModel {
    fn from_parts(terms: Vec<String>, idf: Vec<f64>, doc_count: usize) -> TfidfModel {
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TfidfModel { terms, idf, doc_count, index }
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn term_index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn idf(&self, index: usize) -> f64 {
        self.idf[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// Sparse feature vector: (column, weight) pairs with strictly
/// increasing columns. After normalization the L2 norm is 1, or 0 for
/// the empty vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dot product against a dense weight vector.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i as usize]).sum()
    }

    /// Largest column index plus one; 0 for the empty vector.
    pub fn min_dim(&self) -> usize {
        self.entries.last().map(|&(i, _)| i as usize + 1).unwrap_or(0)
    }
}

/// Fit a TF-IDF model on tokenized documents.
///
/// The vocabulary keeps tokens with document frequency >= `min_df`,
/// truncated to `max_vocab` entries by (df descending, token ascending).
pub fn fit_tfidf(
    docs: &[Vec<String>],
    min_df: usize,
    max_vocab: usize,
) -> Result<TfidfModel, TextprepError> {
    if docs.is_empty() {
        return Err(TextprepError::EmptyCorpus);
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for token in seen {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    let mut candidates: Vec<(&str, usize)> =
        df.into_iter().filter(|&(_, n)| n >= min_df).collect();
    candidates.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    candidates.truncate(max_vocab);

    let doc_count = docs.len();
    let terms: Vec<String> = candidates.iter().map(|(t, _)| t.to_string()).collect();
    let idf: Vec<f64> = candidates
        .iter()
        .map(|&(_, df)| ((1.0 + doc_count as f64) / (1.0 + df as f64)).ln() + 1.0)
        .collect();
    Ok(TfidfModel::from_parts(terms, idf, doc_count))
}

/// Map a tokenized document into the fitted feature space:
/// `tf * idf` per in-vocabulary token, L2-normalized. Out-of-vocabulary
/// tokens are ignored.
pub fn transform_tfidf(model: &TfidfModel, doc: &[String]) -> SparseVector {
    let mut tf: HashMap<usize, f64> = HashMap::new();
    for token in doc {
        if let Some(i) = model.term_index(token) {
            *tf.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(u32, f64)> =
        tf.into_iter().map(|(i, n)| (i as u32, n * model.idf[i])).collect();
    entries.sort_unstable_by_key(|&(i, _)| i);
    let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut entries {
            *w /= norm;
        }
    }
    SparseVector { entries }
}

/// Clean, tokenize, and vectorize one raw text.
pub fn vectorize_text(model: &TfidfModel, text: &str, stop: &StopwordList) -> SparseVector {
    transform_tfidf(model, &tokenize(&clean_text(text), stop))
}
