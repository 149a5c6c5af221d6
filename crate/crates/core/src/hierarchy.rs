//! The hierarchical detector: one binary head for origin (human vs
//! machine) and one for veracity (true vs fake), trained on projected
//! labels over a single shared TF-IDF space and composed back into the
//! four-way label at prediction time.
//!
//! Sign conventions for the binary heads: +1 = Machine on the origin
//! axis, +1 = Fake on the veracity axis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{compose_label4, Label4, Origin, Veracity};
use crate::linear::{
    self, FeatureParams, LinearModel, TrainConfig, TrainError,
};
use crate::textprep::{self, SparseVector, StopwordList, TfidfModel};

/// Which component of [`Label4`] a projection keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Origin,
    Veracity,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Origin => "origin",
            Axis::Veracity => "veracity",
        })
    }
}

/// Binary sign of a label's component on the given axis.
pub fn axis_sign(label: Label4, axis: Axis) -> i8 {
    match axis {
        Axis::Origin => origin_sign(label.origin()),
        Axis::Veracity => veracity_sign(label.veracity()),
    }
}

pub fn origin_sign(o: Origin) -> i8 {
    match o {
        Origin::Machine => 1,
        Origin::Human => -1,
    }
}

pub fn veracity_sign(v: Veracity) -> i8 {
    match v {
        Veracity::Fake => 1,
        Veracity::True => -1,
    }
}

pub fn origin_from_sign(sign: i8) -> Origin {
    if sign >= 0 { Origin::Machine } else { Origin::Human }
}

pub fn veracity_from_sign(sign: i8) -> Veracity {
    if sign >= 0 { Veracity::Fake } else { Veracity::True }
}

/// Replace each four-way label by its binary component on `axis`,
/// leaving the payload untouched and preserving order.
pub fn project_labels<T: Clone>(items: &[(T, Label4)], axis: Axis) -> Vec<(T, i8)> {
    items.iter().map(|(t, l)| (t.clone(), axis_sign(*l, axis))).collect()
}

/// Two independently trained binary heads over one shared feature space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchicalModel {
    pub tfidf: TfidfModel,
    pub stopwords: StopwordList,
    pub origin_head: LinearModel,
    pub veracity_head: LinearModel,
    pub epochs: usize,
    pub seed: u64,
}

impl HierarchicalModel {
    pub fn vectorize(&self, text: &str) -> SparseVector {
        textprep::vectorize_text(&self.tfidf, text, &self.stopwords)
    }

    /// (origin score, veracity score); positive means Machine / Fake.
    pub fn head_scores(&self, x: &SparseVector) -> (f64, f64) {
        let o = linear::decision_score(&self.origin_head, x).expect("shared feature space");
        let v = linear::decision_score(&self.veracity_head, x).expect("shared feature space");
        (o, v)
    }

    pub fn predict_from_vector(&self, x: &SparseVector) -> Label4 {
        let o = linear::predict_binary(&self.origin_head, x).expect("shared feature space");
        let v = linear::predict_binary(&self.veracity_head, x).expect("shared feature space");
        compose_label4(origin_from_sign(o), veracity_from_sign(v))
    }

    pub fn predict(&self, text: &str) -> Label4 {
        self.predict_from_vector(&self.vectorize(text))
    }
}

/// Compose two head predictions into the four-way label. This is the
/// entire inference rule; there is no post-hoc reconciliation.
pub fn compose_predictions(origin: Origin, veracity: Veracity) -> Label4 {
    compose_label4(origin, veracity)
}

/// Fit one shared TF-IDF model on the train texts, then train each head
/// on its projected labels with its own grid search on the projected dev
/// set.
pub fn train_hierarchical(
    train: &[(String, Label4)],
    dev: &[(String, Label4)],
    stopwords: &StopwordList,
    params: FeatureParams,
    grid: &[f64],
    cfg: &TrainConfig,
) -> Result<HierarchicalModel, TrainError> {
    train_hierarchical_augmented(train, dev, stopwords, params, grid, cfg, &[], None)
}

/// [`train_hierarchical`] with extra single-axis examples appended to
/// one head's training set. The shared TF-IDF space is still fit on the
/// base train texts only, so the other head is unaffected.
#[allow(clippy::too_many_arguments)]
pub fn train_hierarchical_augmented(
    train: &[(String, Label4)],
    dev: &[(String, Label4)],
    stopwords: &StopwordList,
    params: FeatureParams,
    grid: &[f64],
    cfg: &TrainConfig,
    extra: &[(String, i8)],
    extra_axis: Option<Axis>,
) -> Result<HierarchicalModel, TrainError> {
    for label in Label4::ALL {
        if !train.iter().any(|(_, l)| *l == label) {
            return Err(TrainError::MissingClass(label));
        }
    }

    let train_docs: Vec<Vec<String>> = train
        .iter()
        .map(|(text, _)| textprep::tokenize(&textprep::clean_text(text), stopwords))
        .collect();
    let tfidf = textprep::fit_tfidf(&train_docs, params.min_df, params.max_vocab)?;
    let dim = tfidf.vocab_size();

    let xs: Vec<SparseVector> =
        train_docs.iter().map(|d| textprep::transform_tfidf(&tfidf, d)).collect();
    let dev_xs: Vec<SparseVector> = dev
        .iter()
        .map(|(text, _)| textprep::vectorize_text(&tfidf, text, stopwords))
        .collect();

    let train_head = |axis: Axis| -> Result<LinearModel, TrainError> {
        let mut head_xs: Vec<SparseVector> = xs.clone();
        let mut head_ys: Vec<i8> = train.iter().map(|(_, l)| axis_sign(*l, axis)).collect();
        if extra_axis == Some(axis) {
            for (text, sign) in extra {
                head_xs.push(textprep::vectorize_text(&tfidf, text, stopwords));
                head_ys.push(*sign);
            }
        }
        let dev_ys: Vec<i8> = dev.iter().map(|(_, l)| axis_sign(*l, axis)).collect();
        let (best_c, _) =
            linear::grid_search_binary(dim, &head_xs, &head_ys, &dev_xs, &dev_ys, grid, cfg)?;
        linear::train_hinge_binary(dim, &head_xs, &head_ys, &cfg.with_cost(best_c))
    };

    let origin_head = train_head(Axis::Origin)?;
    let veracity_head = train_head(Axis::Veracity)?;

    Ok(HierarchicalModel {
        tfidf,
        stopwords: stopwords.clone(),
        origin_head,
        veracity_head,
        epochs: cfg.epochs,
        seed: cfg.seed,
    })
}

pub mod persist {
    //! Versioned `hfnd_hier_v1` JSON model files.

    use std::fs;
    use std::path::Path;

    use serde::{Deserialize, Serialize};

    use super::HierarchicalModel;
    use crate::linear::persist::{HeadWire, ModelIoError};
    use crate::linear::TrainConfig;
    use crate::textprep::{StopwordList, TfidfModel};

    pub const HIER_MAGIC: &str = "hfnd_hier_v1";

    #[derive(Serialize, Deserialize)]
    struct HierFile {
        magic: String,
        tfidf: TfidfModel,
        stopwords: StopwordList,
        origin: HeadWire,
        origin_config: TrainConfig,
        veracity: HeadWire,
        veracity_config: TrainConfig,
    }

    pub fn save_hier(model: &HierarchicalModel, path: &Path) -> Result<(), ModelIoError> {
        let file = HierFile {
            magic: HIER_MAGIC.to_string(),
            tfidf: model.tfidf.clone(),
            stopwords: model.stopwords.clone(),
            origin: HeadWire::from_head("origin", &model.origin_head),
            origin_config: TrainConfig {
                cost_c: model.origin_head.cost_c,
                epochs: model.epochs,
                seed: model.seed,
            },
            veracity: HeadWire::from_head("veracity", &model.veracity_head),
            veracity_config: TrainConfig {
                cost_c: model.veracity_head.cost_c,
                epochs: model.epochs,
                seed: model.seed,
            },
        };
        let json = serde_json::to_string_pretty(&file)?;
        fs::write(path, json).map_err(|source| ModelIoError::Io { path: path.into(), source })
    }

    pub fn load_hier(path: &Path) -> Result<HierarchicalModel, ModelIoError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ModelIoError::Io { path: path.into(), source })?;
        let file: HierFile = serde_json::from_str(&text)?;
        if file.magic != HIER_MAGIC {
            return Err(ModelIoError::WrongMagic { found: file.magic, wanted: HIER_MAGIC });
        }
        let dim = file.tfidf.vocab_size();
        Ok(HierarchicalModel {
            origin_head: file.origin.to_head(dim, &file.origin_config)?,
            veracity_head: file.veracity.to_head(dim, &file.veracity_config)?,
            tfidf: file.tfidf,
            stopwords: file.stopwords,
            epochs: file.origin_config.epochs,
            seed: file.origin_config.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::decompose_label4;
    use crate::linear::predict_binary;

    #[test]
    fn projection_definitions() {
        let items: Vec<((), Label4)> = Label4::ALL.iter().map(|&l| ((), l)).collect();
        let origins: Vec<Origin> = project_labels(&items, Axis::Origin)
            .iter()
            .map(|&(_, s)| origin_from_sign(s))
            .collect();
        assert_eq!(origins, [Origin::Human, Origin::Human, Origin::Machine, Origin::Machine]);
        let veracities: Vec<Veracity> = project_labels(&items, Axis::Veracity)
            .iter()
            .map(|&(_, s)| veracity_from_sign(s))
            .collect();
        assert_eq!(
            veracities,
            [Veracity::Fake, Veracity::True, Veracity::Fake, Veracity::True]
        );
    }

    #[test]
    fn project_both_axes_round_trip() {
        let items: Vec<(u32, Label4)> =
            Label4::ALL.iter().cycle().take(20).enumerate().map(|(i, &l)| (i as u32, l)).collect();
        let origins = project_labels(&items, Axis::Origin);
        let veracities = project_labels(&items, Axis::Veracity);
        for ((&(_, l), &(_, o)), &(_, v)) in items.iter().zip(&origins).zip(&veracities) {
            assert_eq!(compose_label4(origin_from_sign(o), veracity_from_sign(v)), l);
        }
    }

    /// Four separable clusters: cluster k of the vocabulary marks label k.
    pub(crate) fn separable_corpus(per_label: usize) -> Vec<(String, Label4)> {
        let mut out = Vec::new();
        for (k, label) in Label4::ALL.iter().enumerate() {
            for i in 0..per_label {
                // distinct filler per item so the corpus is not degenerate
                out.push((format!("marker{k} marker{k} filler{i}"), *label));
            }
        }
        out
    }

    fn quick_cfg() -> TrainConfig {
        TrainConfig::new(1.0, 40, 3)
    }

    #[test]
    fn separable_corpus_perfect_accuracy() {
        let train = separable_corpus(6);
        let dev = separable_corpus(3);
        let stop = StopwordList::empty();
        let params = FeatureParams { min_df: 1, max_vocab: 10_000 };
        let model =
            train_hierarchical(&train, &dev, &stop, params, &[1.0], &quick_cfg()).unwrap();
        for (text, label) in &dev {
            assert_eq!(model.predict(text), *label);
        }
    }

    #[test]
    fn head_equals_manual_two_step_training() {
        let train = separable_corpus(5);
        let dev = separable_corpus(2);
        let stop = StopwordList::empty();
        let params = FeatureParams { min_df: 1, max_vocab: 10_000 };
        let cfg = quick_cfg();
        let model = train_hierarchical(&train, &dev, &stop, params, &[1.0], &cfg).unwrap();

        // manual two-step oracle: project, vectorize, train with same seed
        let docs: Vec<Vec<String>> = train
            .iter()
            .map(|(t, _)| textprep::tokenize(&textprep::clean_text(t), &stop))
            .collect();
        let tfidf = textprep::fit_tfidf(&docs, 1, 10_000).unwrap();
        let xs: Vec<SparseVector> =
            docs.iter().map(|d| textprep::transform_tfidf(&tfidf, d)).collect();
        let ys: Vec<i8> = train.iter().map(|(_, l)| axis_sign(*l, Axis::Origin)).collect();
        let manual =
            linear::train_hinge_binary(tfidf.vocab_size(), &xs, &ys, &cfg.with_cost(1.0))
                .unwrap();
        assert_eq!(model.origin_head, manual);
    }

    #[test]
    fn swapped_head_roles_are_detectable() {
        let train = separable_corpus(6);
        let dev = separable_corpus(3);
        let stop = StopwordList::empty();
        let params = FeatureParams { min_df: 1, max_vocab: 10_000 };
        let model =
            train_hierarchical(&train, &dev, &stop, params, &[1.0], &quick_cfg()).unwrap();

        let swapped = HierarchicalModel {
            tfidf: model.tfidf.clone(),
            stopwords: model.stopwords.clone(),
            origin_head: model.veracity_head.clone(),
            veracity_head: model.origin_head.clone(),
            epochs: model.epochs,
            seed: model.seed,
        };
        let acc = |m: &HierarchicalModel| {
            dev.iter().filter(|(t, l)| m.predict(t) == *l).count() as f64 / dev.len() as f64
        };
        assert_eq!(acc(&model), 1.0);
        assert!(acc(&swapped) < 1.0, "swapping head roles went undetected");
    }

    #[test]
    fn prediction_is_exactly_head_composition() {
        let train = separable_corpus(5);
        let stop = StopwordList::empty();
        let params = FeatureParams { min_df: 1, max_vocab: 10_000 };
        let model =
            train_hierarchical(&train, &train, &stop, params, &[1.0], &quick_cfg()).unwrap();
        for (text, _) in &train {
            let x = model.vectorize(text);
            let o = predict_binary(&model.origin_head, &x).unwrap();
            let v = predict_binary(&model.veracity_head, &x).unwrap();
            assert_eq!(
                model.predict(text),
                compose_label4(origin_from_sign(o), veracity_from_sign(v))
            );
        }
    }

    #[test]
    fn composition_rule() {
        assert_eq!(
            compose_predictions(Origin::Machine, Veracity::True),
            Label4::MachineTrue
        );
        for l in Label4::ALL {
            let (o, v) = decompose_label4(l);
            assert_eq!(compose_predictions(o, v), l);
        }
    }

    #[test]
    fn augmenting_origin_leaves_veracity_head_untouched() {
        let train = separable_corpus(5);
        let dev = separable_corpus(2);
        let stop = StopwordList::empty();
        let params = FeatureParams { min_df: 1, max_vocab: 10_000 };
        let cfg = quick_cfg();
        let base = train_hierarchical(&train, &dev, &stop, params, &[1.0], &cfg).unwrap();
        let extra = vec![
            ("marker2 marker2 extra0".to_string(), 1i8),
            ("marker0 marker0 extra1".to_string(), -1i8),
        ];
        let augmented = train_hierarchical_augmented(
            &train,
            &dev,
            &stop,
            params,
            &[1.0],
            &cfg,
            &extra,
            Some(Axis::Origin),
        )
        .unwrap();
        assert_eq!(base.veracity_head, augmented.veracity_head);
        assert_ne!(base.origin_head, augmented.origin_head);
    }

    #[test]
    fn hier_model_file_round_trip() {
        let train = separable_corpus(5);
        let stop = StopwordList::empty();
        let params = FeatureParams { min_df: 1, max_vocab: 10_000 };
        let model =
            train_hierarchical(&train, &train, &stop, params, &[1.0], &quick_cfg()).unwrap();
        let f = tempfile::NamedTempFile::with_suffix(".json").unwrap();
        persist::save_hier(&model, f.path()).unwrap();
        let loaded = persist::load_hier(f.path()).unwrap();
        for (text, _) in &train {
            assert_eq!(model.predict(text), loaded.predict(text));
        }
        let raw = std::fs::read_to_string(f.path()).unwrap();
        assert!(raw.contains("hfnd_hier_v1"));
    }
}
