//! Data model, ingestion, label algebra, stratified splitting, and
//! descriptive statistics for four-label news datasets.
//!
//! The four-way label ([`Label4`]) is in exact bijection with the pair
//! ([`Origin`], [`Veracity`]); the two-letter codes `HF`, `HT`, `MF`, `MT`
//! are the canonical on-disk forms.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::{self, StopwordList};

/// Who wrote the text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Human,
    Machine,
}

/// Whether the news item is true or fabricated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Veracity {
    True,
    Fake,
}

/// The four-class label. Fixed order HF < HT < MF < MT everywhere
/// (class vectors, confusion-matrix axes, tie-breaking).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label4 {
    HumanFake,
    HumanTrue,
    MachineFake,
    MachineTrue,
}

impl Label4 {
    /// All four labels in canonical order.
    pub const ALL: [Label4; 4] = [
        Label4::HumanFake,
        Label4::HumanTrue,
        Label4::MachineFake,
        Label4::MachineTrue,
    ];

    /// Canonical two-letter code.
    pub fn code(self) -> &'static str {
        match self {
            Label4::HumanFake => "HF",
            Label4::HumanTrue => "HT",
            Label4::MachineFake => "MF",
            Label4::MachineTrue => "MT",
        }
    }

    /// Parse the exact two-letter code (case-sensitive).
    pub fn from_code(s: &str) -> Option<Label4> {
        match s {
            "HF" => Some(Label4::HumanFake),
            "HT" => Some(Label4::HumanTrue),
            "MF" => Some(Label4::MachineFake),
            "MT" => Some(Label4::MachineTrue),
            _ => None,
        }
    }

    /// Position in [`Label4::ALL`].
    pub fn index(self) -> usize {
        match self {
            Label4::HumanFake => 0,
            Label4::HumanTrue => 1,
            Label4::MachineFake => 2,
            Label4::MachineTrue => 3,
        }
    }

    pub fn origin(self) -> Origin {
        decompose_label4(self).0
    }

    pub fn veracity(self) -> Veracity {
        decompose_label4(self).1
    }

    pub fn is_machine(self) -> bool {
        self.origin() == Origin::Machine
    }
}

impl fmt::Display for Label4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl Serialize for Label4 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code())
    }
}

impl<'de> Deserialize<'de> for Label4 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Label4, D::Error> {
        let s = String::deserialize(d)?;
        Label4::from_code(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown label code {s:?}")))
    }
}

/// Split a four-way label into its (origin, veracity) components.
pub fn decompose_label4(l: Label4) -> (Origin, Veracity) {
    match l {
        Label4::HumanFake => (Origin::Human, Veracity::Fake),
        Label4::HumanTrue => (Origin::Human, Veracity::True),
        Label4::MachineFake => (Origin::Machine, Veracity::Fake),
        Label4::MachineTrue => (Origin::Machine, Veracity::True),
    }
}

/// Inverse of [`decompose_label4`].
pub fn compose_label4(o: Origin, v: Veracity) -> Label4 {
    match (o, v) {
        (Origin::Human, Veracity::Fake) => Label4::HumanFake,
        (Origin::Human, Veracity::True) => Label4::HumanTrue,
        (Origin::Machine, Veracity::Fake) => Label4::MachineFake,
        (Origin::Machine, Veracity::True) => Label4::MachineTrue,
    }
}

/// Which of the four source datasets a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetTag {
    D1,
    D2,
    D3,
    D4,
}

impl DatasetTag {
    pub const ALL: [DatasetTag; 4] = [DatasetTag::D1, DatasetTag::D2, DatasetTag::D3, DatasetTag::D4];

    pub fn name(self) -> &'static str {
        match self {
            DatasetTag::D1 => "D1",
            DatasetTag::D2 => "D2",
            DatasetTag::D3 => "D3",
            DatasetTag::D4 => "D4",
        }
    }

    pub fn from_name(s: &str) -> Option<DatasetTag> {
        match s {
            "D1" => Some(DatasetTag::D1),
            "D2" => Some(DatasetTag::D2),
            "D3" => Some(DatasetTag::D3),
            "D4" => Some(DatasetTag::D4),
            _ => None,
        }
    }
}

impl fmt::Display for DatasetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One news item. `parent_id` and `prompt_id` are set exactly when the
/// record is machine-generated; a machine record inherits its parent's
/// veracity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub id: String,
    pub text: String,
    pub label: Label4,
    pub dataset: DatasetTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_id: Option<u8>,
}

impl NewsRecord {
    /// Validate the provenance invariants for a single record.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.text.trim().is_empty() {
            return Err(CorpusError::EmptyText { id: self.id.clone() });
        }
        let machine = self.label.is_machine();
        if machine != self.parent_id.is_some() {
            return Err(CorpusError::ProvenanceMismatch {
                id: self.id.clone(),
                reason: if machine {
                    "machine-generated record must carry parent_id"
                } else {
                    "human record must not carry parent_id"
                },
            });
        }
        if let Some(p) = self.prompt_id {
            if !machine {
                return Err(CorpusError::ProvenanceMismatch {
                    id: self.id.clone(),
                    reason: "prompt_id is only valid on machine-generated records",
                });
            }
            if !(1..=5).contains(&p) {
                return Err(CorpusError::ProvenanceMismatch {
                    id: self.id.clone(),
                    reason: "prompt_id out of range 1..5",
                });
            }
        }
        Ok(())
    }
}

/// Train/dev/test fractions and the shuffle seed. The stratification key
/// is always [`Label4`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub dev_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> SplitSpec {
        SplitSpec { train_frac: 0.60, dev_frac: 0.20, test_frac: 0.20, seed }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let sum = self.train_frac + self.dev_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9
            || self.train_frac < 0.0
            || self.dev_frac < 0.0
            || self.test_frac < 0.0
        {
            return Err(CorpusError::InvalidSplitSpec);
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> SplitSpec {
        SplitSpec::new(0)
    }
}

/// Short vs long corpus, decided by the mean of per-label average token
/// counts against a configurable threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthCategory {
    Short,
    Long,
}

/// Default boundary (in stopword-filtered tokens) between the Short and
/// Long corpus categories.
pub const DEFAULT_SHORT_LONG_THRESHOLD: f64 = 300.0;

/// Per-label counts and mean token lengths for one corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Counts indexed by [`Label4::index`] (HF, HT, MF, MT).
    pub counts: [usize; 4],
    /// Mean stopword-filtered token count per label; 0.0 for empty strata.
    pub mean_tokens: [f64; 4],
    pub category: LengthCategory,
}

impl CorpusStats {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn count(&self, l: Label4) -> usize {
        self.counts[l.index()]
    }

    pub fn mean_tokens(&self, l: Label4) -> f64 {
        self.mean_tokens[l.index()]
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed json on line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing required column {0:?}")]
    MissingColumn(&'static str),
    #[error("unknown label {value:?} on row {row}")]
    UnknownLabel { row: usize, value: String },
    #[error("unknown dataset tag {value:?} on row {row}")]
    UnknownDataset { row: usize, value: String },
    #[error("invalid prompt_id {value:?} on row {row}")]
    InvalidPromptId { row: usize, value: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("empty text for record {id:?}")]
    EmptyText { id: String },
    #[error("record {id:?}: {reason}")]
    ProvenanceMismatch { id: String, reason: &'static str },
    #[error("split fractions must be non-negative and sum to 1")]
    InvalidSplitSpec,
    #[error("stratum {0} is empty")]
    EmptyStratum(Label4),
}

/// On-disk serialization format for record files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FileFormat {
    Csv,
    Jsonl,
}

impl FileFormat {
    /// Guess from the file extension; defaults to CSV.
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => FileFormat::Jsonl,
            _ => FileFormat::Csv,
        }
    }
}

/// Load a record file, defaulting the dataset tag to D1 when the column
/// is absent. See [`load_dataset_with_tag`].
pub fn load_dataset(path: &Path, format: FileFormat) -> Result<Vec<NewsRecord>, CorpusError> {
    load_dataset_with_tag(path, format, DatasetTag::D1)
}

/// Load a CSV or JSONL record file. Row order is preserved; duplicate
/// ids, unknown labels, and empty texts are rejected.
pub fn load_dataset_with_tag(
    path: &Path,
    format: FileFormat,
    default_tag: DatasetTag,
) -> Result<Vec<NewsRecord>, CorpusError> {
    let records = match format {
        FileFormat::Csv => load_csv(path, default_tag)?,
        FileFormat::Jsonl => load_jsonl(path, default_tag)?,
    };
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.id.clone()) {
            return Err(CorpusError::DuplicateId(r.id.clone()));
        }
        r.validate()?;
    }
    Ok(records)
}

fn load_csv(path: &Path, default_tag: DatasetTag) -> Result<Vec<NewsRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &'static str| headers.iter().position(|h| h == name);
    let id_col = col("id").ok_or(CorpusError::MissingColumn("id"))?;
    let text_col = col("text").ok_or(CorpusError::MissingColumn("text"))?;
    let label_col = col("label").ok_or(CorpusError::MissingColumn("label"))?;
    let dataset_col = col("dataset");
    let parent_col = col("parent_id");
    let prompt_col = col("prompt_id");

    let mut records = Vec::new();
    for (row, result) in reader.records().enumerate() {
        let row = row + 2; // 1-based, after header
        let rec = result?;
        let get = |i: usize| rec.get(i).unwrap_or("").to_string();
        let label_str = get(label_col);
        let label = Label4::from_code(&label_str)
            .ok_or(CorpusError::UnknownLabel { row, value: label_str })?;
        let dataset = match dataset_col.map(|i| get(i)).filter(|s| !s.is_empty()) {
            Some(s) => DatasetTag::from_name(&s)
                .ok_or(CorpusError::UnknownDataset { row, value: s })?,
            None => default_tag,
        };
        let parent_id = parent_col.map(|i| get(i)).filter(|s| !s.is_empty());
        let prompt_id = match prompt_col.map(|i| get(i)).filter(|s| !s.is_empty()) {
            Some(s) => Some(
                s.parse::<u8>()
                    .map_err(|_| CorpusError::InvalidPromptId { row, value: s })?,
            ),
            None => None,
        };
        records.push(NewsRecord {
            id: get(id_col),
            text: get(text_col),
            label,
            dataset,
            parent_id,
            prompt_id,
        });
    }
    Ok(records)
}

fn load_jsonl(path: &Path, default_tag: DatasetTag) -> Result<Vec<NewsRecord>, CorpusError> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        text: String,
        label: String,
        dataset: Option<String>,
        parent_id: Option<String>,
        prompt_id: Option<u8>,
    }

    let file = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (line_no, line) in file.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line)
            .map_err(|source| CorpusError::Json { line: line_no, source })?;
        let label = Label4::from_code(&row.label)
            .ok_or(CorpusError::UnknownLabel { row: line_no, value: row.label.clone() })?;
        let dataset = match row.dataset.filter(|s| !s.is_empty()) {
            Some(s) => DatasetTag::from_name(&s)
                .ok_or(CorpusError::UnknownDataset { row: line_no, value: s })?,
            None => default_tag,
        };
        records.push(NewsRecord {
            id: row.id,
            text: row.text,
            label,
            dataset,
            parent_id: row.parent_id.filter(|s| !s.is_empty()),
            prompt_id: row.prompt_id,
        });
    }
    Ok(records)
}

/// Write records back out in the same schema `load_dataset` reads.
pub fn save_dataset(
    records: &[NewsRecord],
    path: &Path,
    format: FileFormat,
) -> Result<(), CorpusError> {
    match format {
        FileFormat::Csv => {
            let mut writer = csv::Writer::from_path(path)?;
            writer.write_record(["id", "text", "label", "dataset", "parent_id", "prompt_id"])?;
            for r in records {
                writer.write_record([
                    r.id.as_str(),
                    r.text.as_str(),
                    r.label.code(),
                    r.dataset.name(),
                    r.parent_id.as_deref().unwrap_or(""),
                    &r.prompt_id.map(|p| p.to_string()).unwrap_or_default(),
                ])?;
            }
            writer.flush()?;
        }
        FileFormat::Jsonl => {
            let mut file = File::create(path)?;
            for r in records {
                let line = serde_json::to_string(r).expect("record serializes");
                writeln!(file, "{line}")?;
            }
        }
    }
    Ok(())
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Stratified train/dev/test split keyed on [`Label4`].
///
/// Per stratum of size `n`: `|test| = round(test_frac * n)` (half-up),
/// `|dev|` is carved from the remainder at `dev_frac / (1 - test_frac)`,
/// and the rest is train. Randomness comes only from `spec.seed`.
pub fn stratified_split(
    records: &[NewsRecord],
    spec: &SplitSpec,
) -> Result<(Vec<NewsRecord>, Vec<NewsRecord>, Vec<NewsRecord>), CorpusError> {
    spec.validate()?;
    let mut strata: [Vec<usize>; 4] = Default::default();
    for (i, r) in records.iter().enumerate() {
        strata[r.label.index()].push(i);
    }
    for label in Label4::ALL {
        if strata[label.index()].is_empty() {
            return Err(CorpusError::EmptyStratum(label));
        }
    }

    let dev_of_rest = spec.dev_frac / (1.0 - spec.test_frac);
    let mut train_idx = Vec::new();
    let mut dev_idx = Vec::new();
    let mut test_idx = Vec::new();
    for label in Label4::ALL {
        // Per-stratum RNG keyed on (seed, label) so strata are independent.
        let mut rng = ChaCha20Rng::seed_from_u64(
            spec.seed.wrapping_mul(4).wrapping_add(label.index() as u64),
        );
        let mut idx = strata[label.index()].clone();
        idx.shuffle(&mut rng);
        let n = idx.len();
        let n_test = round_half_up(spec.test_frac * n as f64).min(n);
        let n_dev = round_half_up(dev_of_rest * (n - n_test) as f64).min(n - n_test);
        test_idx.extend_from_slice(&idx[..n_test]);
        dev_idx.extend_from_slice(&idx[n_test..n_test + n_dev]);
        train_idx.extend_from_slice(&idx[n_test + n_dev..]);
    }
    // Stable output order: original record order within each split.
    train_idx.sort_unstable();
    dev_idx.sort_unstable();
    test_idx.sort_unstable();
    let pick = |idx: &[usize]| idx.iter().map(|&i| records[i].clone()).collect();
    Ok((pick(&train_idx), pick(&dev_idx), pick(&test_idx)))
}

/// Per-label counts and mean token lengths, with the Short/Long category
/// decided by `threshold` (see [`DEFAULT_SHORT_LONG_THRESHOLD`]).
pub fn corpus_stats_with_threshold(
    records: &[NewsRecord],
    stopwords: &StopwordList,
    threshold: f64,
) -> CorpusStats {
    let mut counts = [0usize; 4];
    let mut token_sums = [0u64; 4];
    for r in records {
        let i = r.label.index();
        counts[i] += 1;
        token_sums[i] += textprep::count_tokens(&r.text, stopwords) as u64;
    }
    let mut mean_tokens = [0.0f64; 4];
    for i in 0..4 {
        if counts[i] > 0 {
            mean_tokens[i] = token_sums[i] as f64 / counts[i] as f64;
        }
    }
    let present: Vec<f64> = (0..4).filter(|&i| counts[i] > 0).map(|i| mean_tokens[i]).collect();
    let overall = if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    };
    let category = if overall < threshold { LengthCategory::Short } else { LengthCategory::Long };
    CorpusStats { counts, mean_tokens, category }
}

/// [`corpus_stats_with_threshold`] at the default 300-token boundary.
pub fn corpus_stats(records: &[NewsRecord], stopwords: &StopwordList) -> CorpusStats {
    corpus_stats_with_threshold(records, stopwords, DEFAULT_SHORT_LONG_THRESHOLD)
}
