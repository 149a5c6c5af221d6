//! Hinge-loss linear classifiers trained from scratch by deterministic
//! epoch-shuffled stochastic subgradient descent (Pegasos-style), plus
//! one-vs-rest composition for the flat four-class baseline and grid
//! search over the cost parameter.
//!
//! The binary objective is
//!
//! ```text
//! f(w, b) = 1/(2 C n) * ||w||^2 + 1/n * sum_i max(0, 1 - y_i (w.x_i + b))
//! ```
//!
//! with step size `eta_t = 1 / (lambda (t + t0))`, `lambda = 1/(C n)`,
//! and the bias left unregularized. The returned model is the best
//! end-of-epoch snapshot by objective value, so the final objective
//! equals the best seen across epochs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Label4;
use crate::textprep::{self, SparseVector, StopwordList, TfidfModel};

/// Default cost-parameter grid for [`grid_search_c`].
pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

/// Offset in the step-size schedule; keeps `eta_t * lambda < 1` from the
/// first update.
const STEP_OFFSET: f64 = 1.0;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set contains a single class")]
    SingleClassInput,
    #[error("dimension mismatch: model has {expected} features, input needs {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature and label counts differ: {features} vs {labels}")]
    LengthMismatch { features: usize, labels: usize },
    #[error("need at least 2 training examples, got {0}")]
    TooFewExamples(usize),
    #[error("binary labels must be -1 or +1")]
    InvalidLabel,
    #[error("class {0} is missing from the training set")]
    MissingClass(Label4),
    #[error("cost parameter grid is empty")]
    EmptyGrid,
    #[error("cost parameter must be positive, got {0}")]
    NonPositiveCost(f64),
    #[error("fitting features failed: {0}")]
    Features(#[from] textprep::TextprepError),
}

/// Hyperparameters for one training run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub cost_c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(cost_c: f64, epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig { cost_c, epochs, seed }
    }

    pub fn with_cost(self, cost_c: f64) -> TrainConfig {
        TrainConfig { cost_c, ..self }
    }

    fn validate(&self, n: usize) -> Result<(), TrainError> {
        if self.cost_c <= 0.0 {
            return Err(TrainError::NonPositiveCost(self.cost_c));
        }
        if n < 2 {
            return Err(TrainError::TooFewExamples(n));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig { cost_c: 1.0, epochs: 50, seed: 0 }
    }
}

/// One binary hinge-loss head: dense weights plus bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub cost_c: f64,
    pub seed: u64,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: &SparseVector) -> Result<(), TrainError> {
        if x.min_dim() > self.weights.len() {
            return Err(TrainError::DimensionMismatch {
                expected: self.weights.len(),
                got: x.min_dim(),
            });
        }
        Ok(())
    }
}

/// The regularized hinge objective at (w, b).
pub fn hinge_objective(
    weights: &[f64],
    bias: f64,
    xs: &[SparseVector],
    ys: &[i8],
    cost_c: f64,
) -> f64 {
    let n = xs.len() as f64;
    let reg = weights.iter().map(|w| w * w).sum::<f64>() / (2.0 * cost_c * n);
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| (1.0 - y as f64 * (x.dot(weights) + bias)).max(0.0))
        .sum();
    reg + hinge / n
}

/// Analytic subgradient of [`hinge_objective`] at (w, b), using the
/// zero subgradient at the hinge kink.
pub fn hinge_subgradient(
    weights: &[f64],
    bias: f64,
    xs: &[SparseVector],
    ys: &[i8],
    cost_c: f64,
) -> (Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mut grad_w: Vec<f64> = weights.iter().map(|w| w / (cost_c * n)).collect();
    let mut grad_b = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let margin = y as f64 * (x.dot(weights) + bias);
        if margin < 1.0 {
            let y = y as f64;
            for &(i, v) in &x.entries {
                grad_w[i as usize] -= y * v / n;
            }
            grad_b -= y / n;
        }
    }
    (grad_w, grad_b)
}

/// End-of-epoch objective trace from one training run.
#[derive(Debug, Clone)]
pub struct TrainTrace {
    /// Objective value after each epoch.
    pub epoch_objectives: Vec<f64>,
    /// Running minimum of `epoch_objectives`.
    pub best_objectives: Vec<f64>,
}

fn validate_binary_inputs(
    dim: usize,
    xs: &[SparseVector],
    ys: &[i8],
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    if xs.len() != ys.len() {
        return Err(TrainError::LengthMismatch { features: xs.len(), labels: ys.len() });
    }
    cfg.validate(xs.len())?;
    if ys.iter().any(|&y| y != 1 && y != -1) {
        return Err(TrainError::InvalidLabel);
    }
    if !ys.contains(&1) || !ys.contains(&-1) {
        return Err(TrainError::SingleClassInput);
    }
    for x in xs {
        if x.min_dim() > dim {
            return Err(TrainError::DimensionMismatch { expected: dim, got: x.min_dim() });
        }
    }
    Ok(())
}

/// Train one binary head, returning the model and the per-epoch
/// objective trace.
pub fn train_hinge_binary_traced(
    dim: usize,
    xs: &[SparseVector],
    ys: &[i8],
    cfg: &TrainConfig,
) -> Result<(LinearModel, TrainTrace), TrainError> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    validate_binary_inputs(dim, xs, ys, cfg)?;
    let n = xs.len();
    let lambda = 1.0 / (cfg.cost_c * n as f64);

    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut weights = vec![0.0f64; dim];
    let mut bias = 0.0f64;
    let mut step = 0usize;

    let mut best_weights = weights.clone();
    let mut best_bias = bias;
    let mut best_obj = f64::INFINITY;
    let mut epoch_objectives = Vec::with_capacity(cfg.epochs);
    let mut best_objectives = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let eta = 1.0 / (lambda * (step as f64 + STEP_OFFSET));
            let x = &xs[i];
            let y = ys[i] as f64;
            let margin = y * (x.dot(&weights) + bias);
            let shrink = 1.0 - eta * lambda;
            for w in &mut weights {
                *w *= shrink;
            }
            if margin < 1.0 {
                for &(j, v) in &x.entries {
                    weights[j as usize] += eta * y * v;
                }
                bias += eta * y;
            }
        }
        let obj = hinge_objective(&weights, bias, xs, ys, cfg.cost_c);
        epoch_objectives.push(obj);
        if obj < best_obj {
            best_obj = obj;
            best_weights.copy_from_slice(&weights);
            best_bias = bias;
        }
        best_objectives.push(best_obj);
    }

    let model = LinearModel {
        weights: best_weights,
        bias: best_bias,
        cost_c: cfg.cost_c,
        seed: cfg.seed,
    };
    Ok((model, TrainTrace { epoch_objectives, best_objectives }))
}

/// Train one binary head on sparse features with labels in {-1, +1}.
pub fn train_hinge_binary(
    dim: usize,
    xs: &[SparseVector],
    ys: &[i8],
    cfg: &TrainConfig,
) -> Result<LinearModel, TrainError> {
    train_hinge_binary_traced(dim, xs, ys, cfg).map(|(m, _)| m)
}

/// Raw decision value `w.x + b`.
pub fn decision_score(model: &LinearModel, x: &SparseVector) -> Result<f64, TrainError> {
    model.check_dim(x)?;
    Ok(x.dot(&model.weights) + model.bias)
}

/// Sign thresholding; a score of exactly 0 goes to the positive class.
pub fn predict_binary(model: &LinearModel, x: &SparseVector) -> Result<i8, TrainError> {
    Ok(if decision_score(model, x)? >= 0.0 { 1 } else { -1 })
}

/// Four one-vs-rest heads in canonical class order HF, HT, MF, MT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrModel {
    pub heads: Vec<LinearModel>,
}

impl OvrModel {
    pub fn dim(&self) -> usize {
        self.heads.first().map(LinearModel::dim).unwrap_or(0)
    }
}

/// Train four one-vs-rest heads on shared features.
pub fn train_ovr4(
    dim: usize,
    xs: &[SparseVector],
    ys: &[Label4],
    cfg: &TrainConfig,
) -> Result<OvrModel, TrainError> {
    if xs.len() != ys.len() {
        return Err(TrainError::LengthMismatch { features: xs.len(), labels: ys.len() });
    }
    for label in Label4::ALL {
        if !ys.contains(&label) {
            return Err(TrainError::MissingClass(label));
        }
    }
    let mut heads = Vec::with_capacity(4);
    for label in Label4::ALL {
        let binary: Vec<i8> = ys.iter().map(|&y| if y == label { 1 } else { -1 }).collect();
        heads.push(train_hinge_binary(dim, xs, &binary, cfg)?);
    }
    Ok(OvrModel { heads })
}

/// Per-class decision scores in canonical class order.
pub fn ovr_scores(model: &OvrModel, x: &SparseVector) -> Result<[f64; 4], TrainError> {
    let mut scores = [0.0f64; 4];
    for (s, head) in scores.iter_mut().zip(&model.heads) {
        *s = decision_score(head, x)?;
    }
    Ok(scores)
}

/// Argmax over the four head scores, ties broken by class order
/// HF < HT < MF < MT.
pub fn predict_ovr4(model: &OvrModel, x: &SparseVector) -> Result<Label4, TrainError> {
    let scores = ovr_scores(model, x)?;
    let mut best = 0;
    for i in 1..4 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Ok(Label4::ALL[best])
}

/// Pick the cost parameter with the highest dev score; ties go to the
/// smallest C. `evaluate` trains on the train split and returns dev
/// accuracy for one C.
pub fn grid_search_c<F>(grid: &[f64], mut evaluate: F) -> Result<(f64, f64), TrainError>
where
    F: FnMut(f64) -> Result<f64, TrainError>,
{
    if grid.is_empty() {
        return Err(TrainError::EmptyGrid);
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite grid values"));
    let mut best_c = f64::NAN;
    let mut best_acc = f64::NEG_INFINITY;
    for c in sorted {
        let acc = evaluate(c)?;
        if acc > best_acc {
            best_acc = acc;
            best_c = c;
        }
    }
    Ok((best_c, best_acc))
}

/// Grid search for a binary head: trains on (xs, ys), scores accuracy on
/// (dev_xs, dev_ys).
pub fn grid_search_binary(
    dim: usize,
    xs: &[SparseVector],
    ys: &[i8],
    dev_xs: &[SparseVector],
    dev_ys: &[i8],
    grid: &[f64],
    cfg: &TrainConfig,
) -> Result<(f64, f64), TrainError> {
    grid_search_c(grid, |c| {
        let model = train_hinge_binary(dim, xs, ys, &cfg.with_cost(c))?;
        let mut correct = 0usize;
        for (x, &y) in dev_xs.iter().zip(dev_ys) {
            if predict_binary(&model, x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / dev_xs.len().max(1) as f64)
    })
}

/// Grid search for the flat one-vs-rest model on four-class dev accuracy.
pub fn grid_search_ovr4(
    dim: usize,
    xs: &[SparseVector],
    ys: &[Label4],
    dev_xs: &[SparseVector],
    dev_ys: &[Label4],
    grid: &[f64],
    cfg: &TrainConfig,
) -> Result<(f64, f64), TrainError> {
    grid_search_c(grid, |c| {
        let model = train_ovr4(dim, xs, ys, &cfg.with_cost(c))?;
        let mut correct = 0usize;
        for (x, &y) in dev_xs.iter().zip(dev_ys) {
            if predict_ovr4(&model, x)? == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / dev_xs.len().max(1) as f64)
    })
}

/// TF-IDF fitting knobs shared by the flat and hierarchical pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub min_df: usize,
    pub max_vocab: usize,
}

impl Default for FeatureParams {
    fn default() -> FeatureParams {
        FeatureParams { min_df: 2, max_vocab: 50_000 }
    }
}

/// The flat four-class baseline: one TF-IDF space plus four OvR heads,
/// end to end from raw text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatModel {
    pub tfidf: TfidfModel,
    pub stopwords: StopwordList,
    pub ovr: OvrModel,
    pub config: TrainConfig,
}

impl FlatModel {
    pub fn vectorize(&self, text: &str) -> SparseVector {
        textprep::vectorize_text(&self.tfidf, text, &self.stopwords)
    }

    pub fn predict(&self, text: &str) -> Label4 {
        predict_ovr4(&self.ovr, &self.vectorize(text)).expect("model-owned feature space")
    }

    pub fn scores(&self, text: &str) -> [f64; 4] {
        ovr_scores(&self.ovr, &self.vectorize(text)).expect("model-owned feature space")
    }
}

/// Fit TF-IDF on the train texts, grid-search C on dev, and train the
/// final flat OvR model at the winning C.
pub fn train_flat(
    train: &[(String, Label4)],
    dev: &[(String, Label4)],
    stopwords: &StopwordList,
    params: FeatureParams,
    grid: &[f64],
    cfg: &TrainConfig,
) -> Result<FlatModel, TrainError> {
    let train_docs: Vec<Vec<String>> = train
        .iter()
        .map(|(text, _)| textprep::tokenize(&textprep::clean_text(text), stopwords))
        .collect();
    let tfidf = textprep::fit_tfidf(&train_docs, params.min_df, params.max_vocab)?;
    let dim = tfidf.vocab_size();

    let xs: Vec<SparseVector> =
        train_docs.iter().map(|d| textprep::transform_tfidf(&tfidf, d)).collect();
    let ys: Vec<Label4> = train.iter().map(|(_, y)| *y).collect();
    let dev_xs: Vec<SparseVector> = dev
        .iter()
        .map(|(text, _)| textprep::vectorize_text(&tfidf, text, stopwords))
        .collect();
    let dev_ys: Vec<Label4> = dev.iter().map(|(_, y)| *y).collect();

    let (best_c, _) = grid_search_ovr4(dim, &xs, &ys, &dev_xs, &dev_ys, grid, cfg)?;
    let cfg = cfg.with_cost(best_c);
    let ovr = train_ovr4(dim, &xs, &ys, &cfg)?;
    Ok(FlatModel { tfidf, stopwords: stopwords.clone(), ovr, config: cfg })
}

pub mod persist {
    //! Versioned JSON model files. The flat model is `hfnd_model_v1`;
    //! head weights are stored as sparse index/value arrays.

    use std::fs;
    use std::path::{Path, PathBuf};

    use serde::{Deserialize, Serialize};
    use thiserror::Error;

    use super::{FlatModel, LinearModel, OvrModel, TrainConfig};
    use crate::corpus::Label4;
    use crate::textprep::{StopwordList, TfidfModel};

    pub const FLAT_MAGIC: &str = "hfnd_model_v1";

    #[derive(Debug, Error)]
    pub enum ModelIoError {
        #[error("io error on {path}: {source}")]
        Io {
            path: PathBuf,
            #[source]
            source: std::io::Error,
        },
        #[error("json error: {0}")]
        Json(#[from] serde_json::Error),
        #[error("unexpected model magic {found:?}, wanted {wanted:?}")]
        WrongMagic { found: String, wanted: &'static str },
        #[error("model file is inconsistent: {0}")]
        Inconsistent(&'static str),
    }

    #[derive(Serialize, Deserialize)]
    pub struct HeadWire {
        pub class: String,
        pub indices: Vec<u32>,
        pub values: Vec<f64>,
        pub bias: f64,
    }

    impl HeadWire {
        pub fn from_head(class: &str, head: &LinearModel) -> HeadWire {
            let mut indices = Vec::new();
            let mut values = Vec::new();
            for (i, &w) in head.weights.iter().enumerate() {
                if w != 0.0 {
                    indices.push(i as u32);
                    values.push(w);
                }
            }
            HeadWire { class: class.to_string(), indices, values, bias: head.bias }
        }

        pub fn to_head(&self, dim: usize, cfg: &TrainConfig) -> Result<LinearModel, ModelIoError> {
            if self.indices.len() != self.values.len() {
                return Err(ModelIoError::Inconsistent("index/value arrays differ in length"));
            }
            let mut weights = vec![0.0f64; dim];
            for (&i, &v) in self.indices.iter().zip(&self.values) {
                let i = i as usize;
                if i >= dim {
                    return Err(ModelIoError::Inconsistent("weight index beyond vocabulary"));
                }
                weights[i] = v;
            }
            Ok(LinearModel { weights, bias: self.bias, cost_c: cfg.cost_c, seed: cfg.seed })
        }
    }

    #[derive(Serialize, Deserialize)]
    struct FlatFile {
        magic: String,
        tfidf: TfidfModel,
        stopwords: StopwordList,
        class_order: Vec<String>,
        heads: Vec<HeadWire>,
        config: TrainConfig,
    }

    pub fn save_flat(model: &FlatModel, path: &Path) -> Result<(), ModelIoError> {
        let file = FlatFile {
            magic: FLAT_MAGIC.to_string(),
            tfidf: model.tfidf.clone(),
            stopwords: model.stopwords.clone(),
            class_order: Label4::ALL.iter().map(|l| l.code().to_string()).collect(),
            heads: Label4::ALL
                .iter()
                .zip(&model.ovr.heads)
                .map(|(l, h)| HeadWire::from_head(l.code(), h))
                .collect(),
            config: model.config,
        };
        let json = serde_json::to_string_pretty(&file)?;
        fs::write(path, json).map_err(|source| ModelIoError::Io { path: path.into(), source })
    }

    pub fn load_flat(path: &Path) -> Result<FlatModel, ModelIoError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ModelIoError::Io { path: path.into(), source })?;
        let file: FlatFile = serde_json::from_str(&text)?;
        if file.magic != FLAT_MAGIC {
            return Err(ModelIoError::WrongMagic { found: file.magic, wanted: FLAT_MAGIC });
        }
        if file.heads.len() != 4 {
            return Err(ModelIoError::Inconsistent("flat model must have 4 heads"));
        }
        let dim = file.tfidf.vocab_size();
        let heads = file
            .heads
            .iter()
            .map(|h| h.to_head(dim, &file.config))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FlatModel {
            tfidf: file.tfidf,
            stopwords: file.stopwords,
            ovr: OvrModel { heads },
            config: file.config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(entries: &[(u32, f64)]) -> SparseVector {
        SparseVector { entries: entries.to_vec() }
    }

    fn one_hot(i: u32) -> SparseVector {
        sv(&[(i, 1.0)])
    }

    #[test]
    fn separable_one_hot() {
        let xs = vec![one_hot(0), one_hot(1), one_hot(0), one_hot(1)];
        let ys = vec![1, -1, 1, -1];
        let cfg = TrainConfig::new(1.0, 100, 7);
        let model = train_hinge_binary(2, &xs, &ys, &cfg).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(predict_binary(&model, x).unwrap(), y);
        }
    }

    #[test]
    fn label_flip_negates_scores() {
        let xs = vec![
            sv(&[(0, 0.9), (1, 0.1)]),
            sv(&[(0, 0.2), (1, 0.8)]),
            sv(&[(0, 0.7), (2, 0.3)]),
            sv(&[(1, 0.6), (2, 0.4)]),
        ];
        let ys: Vec<i8> = vec![1, -1, 1, -1];
        let flipped: Vec<i8> = ys.iter().map(|y| -y).collect();
        let cfg = TrainConfig::new(1.0, 40, 5);
        let a = train_hinge_binary(3, &xs, &ys, &cfg).unwrap();
        let b = train_hinge_binary(3, &xs, &flipped, &cfg).unwrap();
        for x in &xs {
            let sa = decision_score(&a, x).unwrap();
            let sb = decision_score(&b, x).unwrap();
            assert!((sa + sb).abs() < 1e-6, "scores {sa} and {sb} not mirrored");
        }
    }

    #[test]
    fn deterministic_training() {
        let xs = vec![one_hot(0), one_hot(1), sv(&[(0, 0.5), (1, 0.5)]), one_hot(2)];
        let ys = vec![1, -1, 1, -1];
        let cfg = TrainConfig::new(0.5, 30, 11);
        let a = train_hinge_binary(3, &xs, &ys, &cfg).unwrap();
        let b = train_hinge_binary(3, &xs, &ys, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![one_hot(0), one_hot(1)];
        assert!(matches!(
            train_hinge_binary(2, &xs, &[1, 1], &TrainConfig::default()),
            Err(TrainError::SingleClassInput)
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let xs = vec![one_hot(0), one_hot(5)];
        assert!(matches!(
            train_hinge_binary(2, &xs, &[1, -1], &TrainConfig::default()),
            Err(TrainError::DimensionMismatch { .. })
        ));
        let model = LinearModel { weights: vec![0.0; 2], bias: 0.0, cost_c: 1.0, seed: 0 };
        assert!(decision_score(&model, &one_hot(7)).is_err());
    }

    #[test]
    fn zero_vector_scores_bias() {
        let model = LinearModel { weights: vec![1.0, -2.0], bias: 0.25, cost_c: 1.0, seed: 0 };
        let score = decision_score(&model, &sv(&[])).unwrap();
        assert_eq!(score, 0.25);
    }

    #[test]
    fn score_linearity() {
        let model = LinearModel { weights: vec![0.3, -1.1, 2.0], bias: 0.7, cost_c: 1.0, seed: 0 };
        let x = sv(&[(0, 0.5), (2, 0.25)]);
        let alpha = 3.5;
        let scaled = sv(&[(0, 0.5 * alpha), (2, 0.25 * alpha)]);
        let s = decision_score(&model, &x).unwrap();
        let s_scaled = decision_score(&model, &scaled).unwrap();
        assert!((s_scaled - model.bias - alpha * (s - model.bias)).abs() < 1e-12);
    }

    #[test]
    fn fixture_dot_product_by_hand() {
        // w = (0.5, -1.0, 2.0), b = 0.1; x = {0: 2.0, 2: 0.5}
        // w.x + b = 1.0 + 1.0 + 0.1 = 2.1
        let model = LinearModel { weights: vec![0.5, -1.0, 2.0], bias: 0.1, cost_c: 1.0, seed: 0 };
        let x = sv(&[(0, 2.0), (2, 0.5)]);
        assert!((decision_score(&model, &x).unwrap() - 2.1).abs() < 1e-12);
        assert_eq!(predict_binary(&model, &x).unwrap(), 1);
    }

    #[test]
    fn best_seen_objective_non_increasing() {
        let xs: Vec<SparseVector> = (0..20)
            .map(|i| sv(&[(0, (i as f64 * 0.37).sin()), (1, (i as f64 * 0.91).cos())]))
            .collect();
        let ys: Vec<i8> = (0..20).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
        let cfg = TrainConfig::new(1.0, 25, 3);
        let (model, trace) = train_hinge_binary_traced(2, &xs, &ys, &cfg).unwrap();
        for pair in trace.best_objectives.windows(2) {
            assert!(pair[1] <= pair[0]);
        }
        let final_obj = hinge_objective(&model.weights, model.bias, &xs, &ys, cfg.cost_c);
        let best = trace.best_objectives.last().unwrap();
        assert!((final_obj - best).abs() <= 1e-12 * best.abs().max(1.0));
    }

    /// Brute-force lattice oracle: the trained objective must come
    /// within 1% of the best objective on a (w1, w2, b) grid.
    #[test]
    fn objective_beats_lattice_oracle() {
        let xs: Vec<SparseVector> = (0..20)
            .map(|i| {
                let a = (i as f64 * 0.7).sin();
                let b = (i as f64 * 1.3).cos();
                sv(&[(0, a), (1, b)])
            })
            .collect();
        let ys: Vec<i8> = xs
            .iter()
            .map(|x| {
                let a = x.entries[0].1;
                let b = x.entries[1].1;
                if a + 0.5 * b > 0.1 { 1 } else { -1 }
            })
            .collect();
        assert!(ys.contains(&1) && ys.contains(&-1));

        let cfg = TrainConfig::new(1.0, 400, 9);
        let model = train_hinge_binary(2, &xs, &ys, &cfg).unwrap();
        let trained = hinge_objective(&model.weights, model.bias, &xs, &ys, cfg.cost_c);

        let mut lattice_best = f64::INFINITY;
        let grid: Vec<f64> = (-30..=30).map(|i| i as f64 * 0.1).collect();
        for &w0 in &grid {
            for &w1 in &grid {
                for &b in &grid {
                    let obj = hinge_objective(&[w0, w1], b, &xs, &ys, cfg.cost_c);
                    if obj < lattice_best {
                        lattice_best = obj;
                    }
                }
            }
        }
        assert!(
            trained <= lattice_best * 1.01,
            "trained objective {trained} not within 1% of lattice best {lattice_best}"
        );
    }

    #[test]
    fn subgradient_matches_finite_differences() {
        let xs: Vec<SparseVector> = (0..8)
            .map(|i| sv(&[(0, (i as f64 + 1.0) * 0.2), (1, (i as f64 * 0.5).sin())]))
            .collect();
        let ys: Vec<i8> = (0..8).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let w = vec![0.3, -0.7];
        let b = 0.21;
        let c = 2.0;
        let (gw, gb) = hinge_subgradient(&w, b, &xs, &ys, c);
        let h = 1e-5;
        for j in 0..2 {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += h;
            wm[j] -= h;
            let fd = (hinge_objective(&wp, b, &xs, &ys, c) - hinge_objective(&wm, b, &xs, &ys, c))
                / (2.0 * h);
            assert!((fd - gw[j]).abs() < 1e-4, "coord {j}: fd {fd} vs analytic {}", gw[j]);
        }
        let fd_b = (hinge_objective(&w, b + h, &xs, &ys, c)
            - hinge_objective(&w, b - h, &xs, &ys, c))
            / (2.0 * h);
        assert!((fd_b - gb).abs() < 1e-4);
    }

    fn ovr_fixture() -> (Vec<SparseVector>, Vec<Label4>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, label) in Label4::ALL.iter().enumerate() {
            for j in 0..3 {
                xs.push(sv(&[(i as u32, 1.0), (4 + j as u32, 0.05)]));
                ys.push(*label);
            }
        }
        (xs, ys)
    }

    #[test]
    fn ovr_separable_clusters() {
        let (xs, ys) = ovr_fixture();
        let cfg = TrainConfig::new(1.0, 100, 2);
        let model = train_ovr4(7, &xs, &ys, &cfg).unwrap();
        for (x, &y) in xs.iter().zip(&ys) {
            assert_eq!(predict_ovr4(&model, x).unwrap(), y);
        }
    }

    #[test]
    fn ovr_matches_per_head_oracle() {
        let (xs, ys) = ovr_fixture();
        let cfg = TrainConfig::new(1.0, 20, 2);
        let model = train_ovr4(7, &xs, &ys, &cfg).unwrap();
        for (k, label) in Label4::ALL.iter().enumerate() {
            let binary: Vec<i8> = ys.iter().map(|&y| if y == *label { 1 } else { -1 }).collect();
            let head = train_hinge_binary(7, &xs, &binary, &cfg).unwrap();
            assert_eq!(model.heads[k], head);
        }
    }

    #[test]
    fn ovr_missing_class_rejected() {
        let (xs, mut ys) = ovr_fixture();
        for y in &mut ys {
            if *y == Label4::MachineTrue {
                *y = Label4::MachineFake;
            }
        }
        assert!(matches!(
            train_ovr4(7, &xs, &ys, &TrainConfig::default()),
            Err(TrainError::MissingClass(Label4::MachineTrue))
        ));
    }

    #[test]
    fn ovr_argmax_and_tie_break() {
        let head = |w: Vec<f64>, b: f64| LinearModel { weights: w, bias: b, cost_c: 1.0, seed: 0 };
        let model = OvrModel {
            heads: vec![
                head(vec![0.0], 2.0),
                head(vec![0.0], 0.1),
                head(vec![0.0], -1.0),
                head(vec![0.0], -1.0),
            ],
        };
        assert_eq!(predict_ovr4(&model, &sv(&[])).unwrap(), Label4::HumanFake);

        let tied = OvrModel {
            heads: vec![head(vec![0.0], 0.5); 4],
        };
        assert_eq!(predict_ovr4(&tied, &sv(&[])).unwrap(), Label4::HumanFake);
    }

    #[test]
    fn ovr_argmax_shift_invariant() {
        let head = |b: f64| LinearModel { weights: vec![0.0], bias: b, cost_c: 1.0, seed: 0 };
        let base = [0.4, -0.2, 1.7, 0.0];
        let model = OvrModel { heads: base.iter().map(|&b| head(b)).collect() };
        let shifted = OvrModel { heads: base.iter().map(|&b| head(b + 10.0)).collect() };
        let x = sv(&[]);
        assert_eq!(predict_ovr4(&model, &x).unwrap(), predict_ovr4(&shifted, &x).unwrap());
    }

    #[test]
    fn grid_single_value() {
        let (c, _) = grid_search_c(&[0.7], |c| Ok(c)).unwrap();
        assert_eq!(c, 0.7);
    }

    #[test]
    fn grid_tie_prefers_smaller_c() {
        let (c, acc) = grid_search_c(&[10.0, 0.1, 1.0], |_| Ok(0.5)).unwrap();
        assert_eq!(c, 0.1);
        assert_eq!(acc, 0.5);
    }

    #[test]
    fn grid_empty_rejected() {
        assert!(matches!(grid_search_c(&[], |c| Ok(c)), Err(TrainError::EmptyGrid)));
    }

    #[test]
    fn grid_matches_exhaustive_oracle() {
        let (xs, ys) = ovr_fixture();
        // noisy dev set: reuse train with one flipped label
        let mut dev_ys = ys.clone();
        dev_ys[0] = Label4::MachineTrue;
        let cfg = TrainConfig::new(1.0, 15, 4);
        let grid = DEFAULT_C_GRID;
        let (best_c, best_acc) =
            grid_search_ovr4(7, &xs, &ys, &xs, &dev_ys, &grid, &cfg).unwrap();

        // independently written exhaustive loop
        let mut oracle: Vec<(f64, f64)> = Vec::new();
        for &c in &grid {
            let model = train_ovr4(7, &xs, &ys, &cfg.with_cost(c)).unwrap();
            let correct = xs
                .iter()
                .zip(&dev_ys)
                .filter(|(x, &y)| predict_ovr4(&model, x).unwrap() == y)
                .count();
            oracle.push((c, correct as f64 / xs.len() as f64));
        }
        oracle.sort_by(|a, b| {
            b.1.partial_cmp(&a.1).unwrap().then(a.0.partial_cmp(&b.0).unwrap())
        });
        assert_eq!(best_c, oracle[0].0);
        assert!((best_acc - oracle[0].1).abs() < 1e-12);
    }

    #[test]
    fn flat_model_file_round_trip() {
        let train: Vec<(String, Label4)> = vec![
            ("ایک جھوٹی خبر یہاں ہے".into(), Label4::HumanFake),
            ("سچی خبر آج شائع ہوئی".into(), Label4::HumanTrue),
            ("مشین کی جھوٹی خبر یہاں".into(), Label4::MachineFake),
            ("مشین کی سچی خبر آج".into(), Label4::MachineTrue),
            ("ایک اور جھوٹی خبر ہے".into(), Label4::HumanFake),
            ("ایک اور سچی خبر شائع".into(), Label4::HumanTrue),
            ("مشین جھوٹی خبر پھر یہاں".into(), Label4::MachineFake),
            ("مشین سچی خبر پھر آج".into(), Label4::MachineTrue),
        ];
        let stop = StopwordList::empty();
        let params = FeatureParams { min_df: 1, max_vocab: 1000 };
        let cfg = TrainConfig::new(1.0, 30, 1);
        let model = train_flat(&train, &train, &stop, params, &[1.0], &cfg).unwrap();

        let f = tempfile::NamedTempFile::with_suffix(".json").unwrap();
        persist::save_flat(&model, f.path()).unwrap();
        let loaded = persist::load_flat(f.path()).unwrap();
        for (text, _) in &train {
            assert_eq!(model.predict(text), loaded.predict(text));
            assert_eq!(model.scores(text), loaded.scores(text));
        }

        let raw = std::fs::read_to_string(f.path()).unwrap();
        assert!(raw.contains("hfnd_model_v1"));
    }
}
