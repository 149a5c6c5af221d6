//! Machine-paraphrase dataset construction: the five-prompt catalog,
//! chat-completion batch request building, response ingestion, QC
//! filtering, machine-label assignment, and augmentation merge.
//!
//! Live API calls sit behind [`ParaphraseTransport`]; the bundled
//! [`OfflineStub`] deterministically shuffles each article's words so
//! the whole pipeline runs without network or credentials.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{compose_label4, NewsRecord, Origin, Veracity};
use crate::textprep::{count_tokens, StopwordList};

/// Chat-completion endpoint path used in every batch request line.
pub const CHAT_COMPLETIONS_URL: &str = "/v1/chat/completions";

/// Line added before each template's last sentence in re-engineered mode.
pub const ANTI_HALLUCINATION_SUFFIX: &str = "Please directly rewrite without opening words like \
    Of course I can help you with rewriting, and note that do not generate or extend extra \
    information that is not included in the given article, DO NOT HALLUCINATE EXTRA INFORMATION.";

/// Bundled refusal/preface prefix patterns.
pub const BUNDLED_QC_PATTERNS: &str = include_str!("../data/qc_patterns.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptAuthor {
    Human,
    Model,
}

/// One of the five rewrite prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: u8,
    pub text: String,
    pub author: PromptAuthor,
    pub anti_hallucination_suffix_applied: bool,
}

const BASE_PROMPTS: [(&str, PromptAuthor); 5] = [
    (
        "I am going to provide you with an Urdu article. Please rewrite that article while \
         keeping the same narrative. Feel free to completely change everything, every single \
         word if you have to. In fact, I would appreciate it if there is very little similarity \
         between the original article and what you write. Just the idea and narrative should \
         essentially be the same. The article follows:",
        PromptAuthor::Human,
    ),
    (
        "I will provide you with an Urdu article. Your task is to rewrite this article while \
         maintaining the same core message and narrative. Ensure that the wording and structure \
         are significantly different from the original. Here is the article:",
        PromptAuthor::Model,
    ),
    (
        "Here is an Urdu article that I need you to rewrite. Please keep the underlying story \
         and narrative intact, but rephrase it thoroughly so that it appears entirely new. Aim \
         for minimal similarity to the original text. The article is as follows:",
        PromptAuthor::Model,
    ),
    (
        "Please take the following Urdu article and rewrite it in such a way that the narrative \
         and main idea remain unchanged, but the language and wording are entirely different. \
         Your goal is to create a version with minimal resemblance to the original. Here is the \
         article:",
        PromptAuthor::Model,
    ),
    (
        "Given the following Urdu article, I need you to produce a rewritten version that \
         preserves the same story and narrative. Feel free to alter the wording and sentence \
         structure extensively to ensure the new version is distinct from the original. The \
         article is:",
        PromptAuthor::Model,
    ),
];

/// Insert the anti-hallucination line before the template's last
/// sentence.
fn apply_suffix(text: &str) -> String {
    match text.rfind(". ") {
        Some(pos) => {
            let (head, last) = text.split_at(pos + 2);
            format!("{head}{ANTI_HALLUCINATION_SUFFIX} {last}")
        }
        None => format!("{ANTI_HALLUCINATION_SUFFIX} {text}"),
    }
}

/// The template with the given id (1..=5), optionally re-engineered.
pub fn prompt_template(id: u8, reengineered: bool) -> PromptTemplate {
    assert!((1..=5).contains(&id), "prompt id must be 1..=5");
    let (base, author) = BASE_PROMPTS[(id - 1) as usize];
    let text = if reengineered { apply_suffix(base) } else { base.to_string() };
    PromptTemplate {
        id,
        text,
        author,
        anti_hallucination_suffix_applied: reengineered,
    }
}

fn stable_hash(record_id: &str, seed: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(record_id.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Deterministic pseudo-random prompt choice keyed on (record id, seed).
pub fn select_prompt(record_id: &str, seed: u64) -> PromptTemplate {
    let idx = (stable_hash(record_id, seed) % 5) as u8;
    prompt_template(idx + 1, false)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestBody {
    pub model: String,
    pub messages: Vec<Message>,
    pub max_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
}

/// One line of the batch request JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchRequest {
    pub custom_id: String,
    pub method: String,
    pub url: String,
    pub body: RequestBody,
}

/// Knobs for batch request construction. Decoding parameters are
/// pass-through with no asserted defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationSettings {
    pub model: String,
    pub max_tokens: u32,
    pub seed: u64,
    pub reengineered: bool,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default)]
    pub top_p: Option<f64>,
}

#[derive(Debug, Error)]
pub enum MgtError {
    #[error("record {0:?} is machine-generated and cannot be re-paraphrased")]
    MachineRecordRejected(String),
    #[error("record {0:?} has empty text")]
    EmptyText(String),
    #[error("no records to build a batch from")]
    EmptyBatch,
    #[error("response custom_id {0:?} does not match any source record")]
    UnknownCustomId(String),
    #[error("malformed response line {0}")]
    MalformedResponseLine(usize),
    #[error("malformed request line {0}")]
    MalformedRequestLine(usize),
    #[error("record {0:?} lacks the label required by the merge axis")]
    AxisLabelMissing(String),
}

/// Build one batch request line per human-written record. Machine
/// records are rejected: paraphrases are never re-paraphrased.
pub fn build_batch_requests(
    records: &[NewsRecord],
    settings: &GenerationSettings,
) -> Result<Vec<BatchRequest>, MgtError> {
    if records.is_empty() {
        return Err(MgtError::EmptyBatch);
    }
    let mut requests = Vec::with_capacity(records.len());
    for record in records {
        if record.label.is_machine() {
            return Err(MgtError::MachineRecordRejected(record.id.clone()));
        }
        if record.text.trim().is_empty() {
            return Err(MgtError::EmptyText(record.id.clone()));
        }
        let mut prompt = select_prompt(&record.id, settings.seed);
        if settings.reengineered {
            prompt = prompt_template(prompt.id, true);
        }
        requests.push(BatchRequest {
            custom_id: record.id.clone(),
            method: "POST".to_string(),
            url: CHAT_COMPLETIONS_URL.to_string(),
            body: RequestBody {
                model: settings.model.clone(),
                messages: vec![Message {
                    role: "user".to_string(),
                    content: format!("{}\n\n{}", prompt.text, record.text),
                }],
                max_tokens: settings.max_tokens,
                temperature: settings.temperature,
                top_p: settings.top_p,
            },
        });
    }
    Ok(requests)
}

/// Serialize requests as JSONL, one object per line.
pub fn requests_to_jsonl(requests: &[BatchRequest]) -> String {
    let mut out = String::new();
    for r in requests {
        out.push_str(&serde_json::to_string(r).expect("request serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_requests_jsonl(jsonl: &str) -> Result<Vec<BatchRequest>, MgtError> {
    let mut out = Vec::new();
    for (line_no, line) in jsonl.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|_| MgtError::MalformedRequestLine(line_no + 1))?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseChoice {
    pub message: Message,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseBody {
    pub choices: Vec<ResponseChoice>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEnvelope {
    pub status_code: u16,
    pub body: ResponseBody,
}

/// One line of the batch response JSONL: either a response envelope or
/// an error object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResponseLine {
    pub custom_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<ResponseEnvelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<serde_json::Value>,
}

/// A generated paraphrase joined back to its source record.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedPair {
    pub parent: NewsRecord,
    pub text: String,
    pub prompt_id: u8,
}

/// A response line that did not yield a usable generation. Reported,
/// never silently dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestFailure {
    pub custom_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOutcome {
    pub pairs: Vec<GeneratedPair>,
    pub failures: Vec<IngestFailure>,
}

/// Join batch output lines to their source records on custom_id. The
/// prompt id is recomputed from (custom_id, seed), which is exact
/// because [`select_prompt`] is deterministic.
pub fn ingest_responses(
    batch_output: &str,
    originals: &[NewsRecord],
    seed: u64,
) -> Result<IngestOutcome, MgtError> {
    let by_id: HashMap<&str, &NewsRecord> =
        originals.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    for (line_no, line) in batch_output.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: BatchResponseLine = serde_json::from_str(line)
            .map_err(|_| MgtError::MalformedResponseLine(line_no + 1))?;
        let parent = *by_id
            .get(parsed.custom_id.as_str())
            .ok_or_else(|| MgtError::UnknownCustomId(parsed.custom_id.clone()))?;
        if let Some(err) = parsed.error {
            failures.push(IngestFailure {
                custom_id: parsed.custom_id,
                reason: format!("api error: {err}"),
            });
            continue;
        }
        let Some(envelope) = parsed.response else {
            failures.push(IngestFailure {
                custom_id: parsed.custom_id,
                reason: "line has neither response nor error".to_string(),
            });
            continue;
        };
        if envelope.status_code != 200 {
            failures.push(IngestFailure {
                custom_id: parsed.custom_id,
                reason: format!("status {}", envelope.status_code),
            });
            continue;
        }
        let Some(choice) = envelope.body.choices.first() else {
            failures.push(IngestFailure {
                custom_id: parsed.custom_id,
                reason: "empty choices".to_string(),
            });
            continue;
        };
        pairs.push(GeneratedPair {
            parent: parent.clone(),
            text: choice.message.content.clone(),
            prompt_id: select_prompt(&parsed.custom_id, seed).id,
        });
    }
    Ok(IngestOutcome { pairs, failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QcStatus {
    Pass,
    TokenDeltaExceeded,
    RefusalDetected,
    PrefaceDetected,
    EmptyGeneration,
}

impl QcStatus {
    pub fn name(self) -> &'static str {
        match self {
            QcStatus::Pass => "Pass",
            QcStatus::TokenDeltaExceeded => "TokenDeltaExceeded",
            QcStatus::RefusalDetected => "RefusalDetected",
            QcStatus::PrefaceDetected => "PrefaceDetected",
            QcStatus::EmptyGeneration => "EmptyGeneration",
        }
    }
}

/// QC outcome for one generated paraphrase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcVerdict {
    pub record_id: String,
    pub status: QcStatus,
    pub token_delta_pct: f64,
}

/// Curated refusal/preface opening patterns, matched case-insensitively
/// against the start of a generation.
#[derive(Debug, Clone, Default)]
pub struct QcPatterns {
    refusal: Vec<String>,
    preface: Vec<String>,
}

impl QcPatterns {
    /// Parse `kind|prefix` lines; `#` comments and blanks are skipped.
    pub fn from_text(text: &str) -> QcPatterns {
        let mut patterns = QcPatterns::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((kind, prefix)) = line.split_once('|') {
                let prefix = prefix.trim().to_lowercase();
                match kind.trim() {
                    "refusal" => patterns.refusal.push(prefix),
                    "preface" => patterns.preface.push(prefix),
                    _ => {}
                }
            }
        }
        patterns
    }

    pub fn bundled() -> QcPatterns {
        QcPatterns::from_text(BUNDLED_QC_PATTERNS)
    }

    fn matches_refusal(&self, text: &str) -> bool {
        let opening = text.trim_start().to_lowercase();
        self.refusal.iter().any(|p| opening.starts_with(p.as_str()))
    }

    fn matches_preface(&self, text: &str) -> bool {
        let opening = text.trim_start().to_lowercase();
        self.preface.iter().any(|p| opening.starts_with(p.as_str()))
    }
}

/// The default QC token-delta threshold, in percent.
pub const DEFAULT_QC_THRESHOLD_PCT: f64 = 20.0;

/// Judge one generated paraphrase. Pattern checks precede the length
/// check; the delta fails only when strictly above the threshold.
pub fn qc_verdict(
    pair: &GeneratedPair,
    stop: &StopwordList,
    patterns: &QcPatterns,
    threshold_pct: f64,
) -> QcVerdict {
    assert!(threshold_pct > 0.0, "threshold_pct must be positive");
    let parent_tokens = count_tokens(&pair.parent.text, stop);
    let gen_tokens = count_tokens(&pair.text, stop);
    let token_delta_pct = 100.0 * (gen_tokens as f64 - parent_tokens as f64).abs()
        / (parent_tokens.max(1) as f64);

    let status = if pair.text.trim().is_empty() {
        QcStatus::EmptyGeneration
    } else if patterns.matches_refusal(&pair.text) {
        QcStatus::RefusalDetected
    } else if patterns.matches_preface(&pair.text) {
        QcStatus::PrefaceDetected
    } else if token_delta_pct > threshold_pct {
        QcStatus::TokenDeltaExceeded
    } else {
        QcStatus::Pass
    };
    QcVerdict { record_id: pair.parent.id.clone(), status, token_delta_pct }
}

/// Filter generated pairs: every pair receives exactly one verdict, and
/// the accepted set is exactly the Pass verdicts.
pub fn qc_filter(
    pairs: &[GeneratedPair],
    stop: &StopwordList,
    patterns: &QcPatterns,
    threshold_pct: f64,
) -> (Vec<GeneratedPair>, Vec<QcVerdict>) {
    let mut accepted = Vec::new();
    let mut verdicts = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let verdict = qc_verdict(pair, stop, patterns, threshold_pct);
        if verdict.status == QcStatus::Pass {
            accepted.push(pair.clone());
        }
        verdicts.push(verdict);
    }
    (accepted, verdicts)
}

/// `record_id,status,token_delta_pct` CSV of QC verdicts.
pub fn qc_report_csv(verdicts: &[QcVerdict]) -> String {
    let mut out = String::from("record_id,status,token_delta_pct\n");
    for v in verdicts {
        out.push_str(&format!("{},{},{:.2}\n", v.record_id, v.status.name(), v.token_delta_pct));
    }
    out
}

/// Turn accepted paraphrases into machine-labeled records: veracity is
/// inherited from the parent, origin becomes Machine, and ids are fresh.
pub fn assign_machine_labels(accepted: &[GeneratedPair]) -> Vec<NewsRecord> {
    accepted
        .iter()
        .map(|pair| NewsRecord {
            id: format!("{}-mgt", pair.parent.id),
            text: pair.text.clone(),
            label: compose_label4(Origin::Machine, pair.parent.label.veracity()),
            dataset: pair.parent.dataset,
            parent_id: Some(pair.parent.id.clone()),
            prompt_id: Some(pair.prompt_id),
        })
        .collect()
}

/// A training example that may carry only one axis of the label, as in
/// external MGT-detection corpora that know origin but not veracity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisExample {
    pub id: String,
    pub text: String,
    pub origin: Option<Origin>,
    pub veracity: Option<Veracity>,
    pub provenance: String,
}

impl AxisExample {
    pub fn from_record(r: &NewsRecord) -> AxisExample {
        AxisExample {
            id: r.id.clone(),
            text: r.text.clone(),
            origin: Some(r.label.origin()),
            veracity: Some(r.label.veracity()),
            provenance: r.dataset.name().to_string(),
        }
    }

    /// Binary sign on the given axis, if that component is known.
    pub fn axis_sign(&self, axis: crate::hierarchy::Axis) -> Option<i8> {
        use crate::hierarchy::{origin_sign, veracity_sign, Axis};
        match axis {
            Axis::Origin => self.origin.map(origin_sign),
            Axis::Veracity => self.veracity.map(veracity_sign),
        }
    }
}

/// Concatenate a base corpus with extra single-axis examples for one
/// head's training. Every extra record must carry the axis label.
pub fn merge_augmentation(
    base: &[NewsRecord],
    extra: &[AxisExample],
    axis: crate::hierarchy::Axis,
) -> Result<Vec<AxisExample>, MgtError> {
    let mut merged: Vec<AxisExample> = base.iter().map(AxisExample::from_record).collect();
    for e in extra {
        if e.axis_sign(axis).is_none() {
            return Err(MgtError::AxisLabelMissing(e.id.clone()));
        }
        merged.push(e.clone());
    }
    Ok(merged)
}

/// Transport over which a request batch is executed.
pub trait ParaphraseTransport {
    fn execute(&self, requests: &[BatchRequest]) -> Vec<BatchResponseLine>;
}

/// Deterministic offline paraphraser: echoes each article with its
/// words shuffled, keyed on (custom_id, seed). Token counts are
/// preserved exactly, so stub output always passes the delta filter.
#[derive(Debug, Clone, Copy)]
pub struct OfflineStub {
    pub seed: u64,
}

impl OfflineStub {
    /// Generate response JSONL for a request JSONL document.
    pub fn run_jsonl(&self, request_jsonl: &str) -> Result<String, MgtError> {
        let requests = parse_requests_jsonl(request_jsonl)?;
        let responses = self.execute(&requests);
        let mut out = String::new();
        for r in &responses {
            out.push_str(&serde_json::to_string(r).expect("response serializes"));
            out.push('\n');
        }
        Ok(out)
    }
}

impl ParaphraseTransport for OfflineStub {
    fn execute(&self, requests: &[BatchRequest]) -> Vec<BatchResponseLine> {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;

        requests
            .iter()
            .map(|req| {
                let content = req
                    .body
                    .messages
                    .first()
                    .map(|m| m.content.as_str())
                    .unwrap_or("");
                // the article follows the prompt after a blank line
                let article = content.split_once("\n\n").map(|(_, a)| a).unwrap_or(content);
                let mut words: Vec<&str> = article.split_whitespace().collect();
                let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(stable_hash(
                    &req.custom_id,
                    self.seed,
                ));
                words.shuffle(&mut rng);
                BatchResponseLine {
                    custom_id: req.custom_id.clone(),
                    response: Some(ResponseEnvelope {
                        status_code: 200,
                        body: ResponseBody {
                            choices: vec![ResponseChoice {
                                message: Message {
                                    role: "assistant".to_string(),
                                    content: words.join(" "),
                                },
                            }],
                        },
                    }),
                    error: None,
                }
            })
            .collect()
    }
}
