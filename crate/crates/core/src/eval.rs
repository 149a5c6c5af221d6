//! Metrics, confusion matrices, in-domain and cross-domain evaluation,
//! and deterministic report/heatmap rendering.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label4, NewsRecord, Veracity};
use crate::hierarchy::HierarchicalModel;
use crate::linear::FlatModel;
use crate::textprep::{self, StopwordList};

/// Axis order of the cross-domain matrix, for both train configs and
/// test splits.
pub const CROSS_DOMAIN_AXES: [&str; 7] = ["D1", "D2", "D3", "D4", "Short", "Long", "All"];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold and predicted lists differ in length: {gold} vs {pred}")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("cannot evaluate an empty list")]
    EmptyInput,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Anything that maps raw text to a four-way label. Implemented by both
/// the flat baseline and the hierarchical model so evaluation code is
/// agnostic to which one it measures.
pub trait Classifier4: Sync {
    fn predict4(&self, text: &str) -> Label4;

    /// Signed score toward the Fake side of the veracity axis; used by
    /// the length-bias probe.
    fn fake_margin(&self, text: &str) -> f64;
}

impl Classifier4 for FlatModel {
    fn predict4(&self, text: &str) -> Label4 {
        self.predict(text)
    }

    fn fake_margin(&self, text: &str) -> f64 {
        let s = self.scores(text);
        // fake classes are HF (0) and MF (2); true classes HT (1), MT (3)
        s[0].max(s[2]) - s[1].max(s[3])
    }
}

impl Classifier4 for HierarchicalModel {
    fn predict4(&self, text: &str) -> Label4 {
        self.predict(text)
    }

    fn fake_margin(&self, text: &str) -> f64 {
        self.head_scores(&self.vectorize(text)).1
    }
}

/// 4x4 counts; rows are gold labels, columns predictions, both in the
/// fixed order HF, HT, MF, MT.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn get(&self, gold: Label4, pred: Label4) -> u64 {
        self.counts[gold.index()][pred.index()]
    }

    fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }
}

/// Count (gold, predicted) pairs into a confusion matrix.
pub fn confusion_matrix(gold: &[Label4], pred: &[Label4]) -> Result<ConfusionMatrix, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch { gold: gold.len(), pred: pred.len() });
    }
    if gold.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&g, &p) in gold.iter().zip(pred) {
        cm.counts[g.index()][p.index()] += 1;
    }
    Ok(cm)
}

/// trace / total.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyInput);
    }
    let trace: u64 = (0..4).map(|i| cm.counts[i][i]).sum();
    Ok(trace as f64 / total as f64)
}

/// Per-class F1 in class order, with the zero-denominator convention:
/// precision (or recall) is 0 when its denominator is 0, and F1 is 0
/// when precision + recall is 0.
pub fn f1_per_class(cm: &ConfusionMatrix) -> [f64; 4] {
    let mut f1 = [0.0f64; 4];
    for (i, slot) in f1.iter_mut().enumerate() {
        let tp = cm.counts[i][i] as f64;
        let col = cm.col_sum(i) as f64;
        let row = cm.row_sum(i) as f64;
        let precision = if col > 0.0 { tp / col } else { 0.0 };
        let recall = if row > 0.0 { tp / row } else { 0.0 };
        *slot = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
    }
    f1
}

/// Full metrics for one (train config, test set) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub train_config: String,
    pub test_set: String,
    pub accuracy: f64,
    /// Per-class F1 indexed by [`Label4::index`].
    pub f1: [f64; 4],
    pub confusion: ConfusionMatrix,
}

#[derive(Serialize, Deserialize)]
struct EvalReportWire {
    train_config: String,
    test_set: String,
    accuracy: f64,
    f1: F1Wire,
    confusion: [[u64; 4]; 4],
}

#[derive(Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms)]
struct F1Wire {
    #[serde(rename = "HF")]
    hf: f64,
    #[serde(rename = "HT")]
    ht: f64,
    #[serde(rename = "MF")]
    mf: f64,
    #[serde(rename = "MT")]
    mt: f64,
}

impl Serialize for EvalReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        EvalReportWire {
            train_config: self.train_config.clone(),
            test_set: self.test_set.clone(),
            accuracy: self.accuracy,
            f1: F1Wire { hf: self.f1[0], ht: self.f1[1], mf: self.f1[2], mt: self.f1[3] },
            confusion: self.confusion.counts,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for EvalReport {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<EvalReport, D::Error> {
        let w = EvalReportWire::deserialize(d)?;
        Ok(EvalReport {
            train_config: w.train_config,
            test_set: w.test_set,
            accuracy: w.accuracy,
            f1: [w.f1.hf, w.f1.ht, w.f1.mf, w.f1.mt],
            confusion: ConfusionMatrix { counts: w.confusion },
        })
    }
}

impl EvalReport {
    /// Build a report from already-paired gold and predicted labels.
    pub fn from_pairs(
        gold: &[Label4],
        pred: &[Label4],
        train_config: &str,
        test_set: &str,
    ) -> Result<EvalReport, EvalError> {
        let confusion = confusion_matrix(gold, pred)?;
        Ok(EvalReport {
            train_config: train_config.to_string(),
            test_set: test_set.to_string(),
            accuracy: accuracy(&confusion)?,
            f1: f1_per_class(&confusion),
            confusion,
        })
    }

    /// Human-readable table: one row per class F1 plus accuracy.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "train={} test={}\n",
            self.train_config, self.test_set
        ));
        out.push_str("class    F1\n");
        for l in Label4::ALL {
            out.push_str(&format!("{:<8} {:.2}\n", l.code(), self.f1[l.index()]));
        }
        out.push_str(&format!("Acc      {:.2}\n", self.accuracy));
        out
    }
}

/// Run a model over a test set and assemble the full report.
pub fn evaluate_run(
    model: &dyn Classifier4,
    test: &[NewsRecord],
    train_config: &str,
    test_set: &str,
) -> Result<EvalReport, EvalError> {
    let gold: Vec<Label4> = test.iter().map(|r| r.label).collect();
    let pred: Vec<Label4> = test.iter().map(|r| model.predict4(&r.text)).collect();
    EvalReport::from_pairs(&gold, &pred, train_config, test_set)
}

/// 7x7 accuracies; rows are train configs, columns test splits, both in
/// [`CROSS_DOMAIN_AXES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainMatrix {
    pub values: [[f64; 7]; 7],
}

impl CrossDomainMatrix {
    pub fn mean_diagonal(&self) -> f64 {
        (0..7).map(|i| self.values[i][i]).sum::<f64>() / 7.0
    }

    pub fn mean_off_diagonal(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..7 {
            for j in 0..7 {
                if i != j {
                    sum += self.values[i][j];
                }
            }
        }
        sum / 42.0
    }

    /// 8x8 CSV with config names on the header row and column, values
    /// to 4 decimals.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("train\\test");
        for name in CROSS_DOMAIN_AXES {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, name) in CROSS_DOMAIN_AXES.iter().enumerate() {
            out.push_str(name);
            for j in 0..7 {
                out.push_str(&format!(",{:.4}", self.values[i][j]));
            }
            out.push('\n');
        }
        out
    }
}

/// Train the 7 cross-domain models and evaluate each on the 7 test
/// splits. `trainer` receives the row index into [`CROSS_DOMAIN_AXES`];
/// `jobs` caps worker threads (cells are independent, so scheduling
/// never changes a value).
pub fn cross_domain_matrix<M, E, F>(
    trainer: F,
    test_sets: &[Vec<NewsRecord>; 7],
    jobs: usize,
) -> Result<CrossDomainMatrix, E>
where
    M: Classifier4,
    E: Send,
    F: Fn(usize) -> Result<M, E> + Sync,
{
    let compute_row = |row: usize| -> Result<[f64; 7], E> {
        let model = trainer(row)?;
        let mut accs = [0.0f64; 7];
        for (col, test) in test_sets.iter().enumerate() {
            let correct =
                test.iter().filter(|r| model.predict4(&r.text) == r.label).count();
            accs[col] = correct as f64 / test.len().max(1) as f64;
        }
        Ok(accs)
    };

    let jobs = jobs.clamp(1, 7);
    let results: Mutex<Vec<Option<Result<[f64; 7], E>>>> =
        Mutex::new((0..7).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let row = next.fetch_add(1, Ordering::SeqCst);
                if row >= 7 {
                    break;
                }
                let r = compute_row(row);
                results.lock().expect("no poisoned row")[row] = Some(r);
            });
        }
    });

    let mut values = [[0.0f64; 7]; 7];
    for (row, slot) in results.into_inner().expect("no poisoned rows").into_iter().enumerate() {
        values[row] = slot.expect("every row computed")?;
    }
    Ok(CrossDomainMatrix { values })
}

fn ramp_color(v: f64) -> (u8, u8, u8) {
    // linear white -> dark blue over [0, 1]
    let v = v.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + v * (b - a)).round() as u8;
    (lerp(255.0, 8.0), lerp(255.0, 48.0), lerp(255.0, 107.0))
}

/// Self-contained SVG heatmap of the cross-domain matrix. Output is a
/// pure function of the matrix, so golden-file tests are byte-exact.
pub fn heatmap_svg_string(m: &CrossDomainMatrix) -> String {
    const CELL: i32 = 64;
    const LEFT: i32 = 70;
    const TOP: i32 = 40;
    let width = LEFT + 7 * CELL + 10;
    let height = TOP + 7 * CELL + 10;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (j, name) in CROSS_DOMAIN_AXES.iter().enumerate() {
        let x = LEFT + j as i32 * CELL + CELL / 2;
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"13\">{name}</text>\n",
            TOP - 12
        ));
    }
    for (i, name) in CROSS_DOMAIN_AXES.iter().enumerate() {
        let y = TOP + i as i32 * CELL + CELL / 2 + 5;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{y}\" text-anchor=\"end\" font-family=\"sans-serif\" \
             font-size=\"13\">{name}</text>\n",
            LEFT - 8
        ));
    }
    for i in 0..7 {
        for j in 0..7 {
            let v = m.values[i][j];
            let (r, g, b) = ramp_color(v);
            let x = LEFT + j as i32 * CELL;
            let y = TOP + i as i32 * CELL;
            svg.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                 fill=\"rgb({r},{g},{b})\" stroke=\"#999\" stroke-width=\"1\"/>\n"
            ));
            let text_fill = if v > 0.5 { "white" } else { "black" };
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"14\" fill=\"{text_fill}\">{v:.2}</text>\n",
                x + CELL / 2,
                y + CELL / 2 + 5
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write the heatmap SVG to disk.
pub fn render_heatmap_svg(m: &CrossDomainMatrix, path: &Path) -> Result<(), EvalError> {
    let svg = heatmap_svg_string(m);
    let mut file = std::fs::File::create(path)
        .map_err(|source| EvalError::Io { path: path.into(), source })?;
    file.write_all(svg.as_bytes())
        .map_err(|source| EvalError::Io { path: path.into(), source })
}

/// Per-quartile fake-prediction rates for the length-bias probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBin {
    pub count: usize,
    pub mean_tokens: f64,
    pub fake_rate: f64,
}

/// Result of [`length_bias_probe`]: does the model treat text length as
/// a feature?
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBiasReport {
    /// Token-count quartiles, shortest first.
    pub bins: Vec<LengthBin>,
    /// Pearson correlation between token count and fake-score margin;
    /// 0 when either side has no variance.
    pub pearson_r: f64,
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Bin test items by token-count quartile and report the per-bin
/// fake-prediction rate plus the length/margin correlation.
pub fn length_bias_probe(
    model: &dyn Classifier4,
    test: &[NewsRecord],
    stop: &StopwordList,
) -> LengthBiasReport {
    if test.is_empty() {
        return LengthBiasReport { bins: Vec::new(), pearson_r: 0.0 };
    }
    let counts: Vec<usize> =
        test.iter().map(|r| textprep::count_tokens(&r.text, stop)).collect();
    let margins: Vec<f64> = test.iter().map(|r| model.fake_margin(&r.text)).collect();
    let predicted_fake: Vec<bool> = test
        .iter()
        .map(|r| model.predict4(&r.text).veracity() == Veracity::Fake)
        .collect();

    let mut order: Vec<usize> = (0..test.len()).collect();
    order.sort_by_key(|&i| (counts[i], i));

    let n = test.len();
    let mut bins = Vec::with_capacity(4);
    for q in 0..4 {
        let lo = q * n / 4;
        let hi = (q + 1) * n / 4;
        let members = &order[lo..hi];
        if members.is_empty() {
            bins.push(LengthBin { count: 0, mean_tokens: 0.0, fake_rate: 0.0 });
            continue;
        }
        let mean_tokens =
            members.iter().map(|&i| counts[i] as f64).sum::<f64>() / members.len() as f64;
        let fake = members.iter().filter(|&&i| predicted_fake[i]).count();
        bins.push(LengthBin {
            count: members.len(),
            mean_tokens,
            fake_rate: fake as f64 / members.len() as f64,
        });
    }

    let counts_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    LengthBiasReport { bins, pearson_r: pearson(&counts_f, &margins) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha20Rng;

    use crate::corpus::DatasetTag;

    fn labels(codes: &[&str]) -> Vec<Label4> {
        codes.iter().map(|c| Label4::from_code(c).unwrap()).collect()
    }

    #[test]
    fn perfect_prediction_diagonal() {
        let gold = labels(&["HF", "HT", "MF", "MT"]);
        let cm = confusion_matrix(&gold, &gold).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(cm.counts[i][j], u64::from(i == j));
            }
        }
        assert_eq!(accuracy(&cm).unwrap(), 1.0);
        assert_eq!(f1_per_class(&cm), [1.0; 4]);
    }

    #[test]
    fn single_off_diagonal_cell() {
        let gold = labels(&["HF", "HF"]);
        let pred = labels(&["HT", "HT"]);
        let cm = confusion_matrix(&gold, &pred).unwrap();
        assert_eq!(cm.get(Label4::HumanFake, Label4::HumanTrue), 2);
        assert_eq!(cm.total(), 2);
        assert_eq!(accuracy(&cm).unwrap(), 0.0);
    }

    #[test]
    fn length_mismatch_and_empty() {
        let gold = labels(&["HF"]);
        assert!(matches!(
            confusion_matrix(&gold, &[]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(confusion_matrix(&[], &[]), Err(EvalError::EmptyInput)));
        assert!(matches!(accuracy(&ConfusionMatrix::default()), Err(EvalError::EmptyInput)));
    }

    #[test]
    fn uniform_matrix_quarter_accuracy() {
        let cm = ConfusionMatrix { counts: [[1; 4]; 4] };
        assert_eq!(accuracy(&cm).unwrap(), 0.25);
    }

    #[test]
    fn f1_direct_formula() {
        // class HF: TP=2, FP=1 (one HT predicted HF), FN=1 (one HF predicted HT)
        // precision 2/3, recall 2/3, F1 = 2/3
        let gold = labels(&["HF", "HF", "HF", "HT", "HT"]);
        let pred = labels(&["HF", "HF", "HT", "HF", "HT"]);
        let cm = confusion_matrix(&gold, &pred).unwrap();
        let f1 = f1_per_class(&cm);
        assert!((f1[Label4::HumanFake.index()] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn f1_zero_denominator_rule() {
        // MT never gold and never predicted -> F1 = 0
        let gold = labels(&["HF", "HT"]);
        let pred = labels(&["HF", "HT"]);
        let cm = confusion_matrix(&gold, &pred).unwrap();
        let f1 = f1_per_class(&cm);
        assert_eq!(f1[Label4::MachineTrue.index()], 0.0);
    }

    /// Independent brute-force metric oracle used by several tests.
    pub(crate) fn oracle_metrics(gold: &[Label4], pred: &[Label4]) -> ([[u64; 4]; 4], f64, [f64; 4]) {
        let mut counts = [[0u64; 4]; 4];
        for k in 0..gold.len() {
            let mut gi = 0;
            let mut pi = 0;
            for (idx, l) in Label4::ALL.iter().enumerate() {
                if gold[k] == *l {
                    gi = idx;
                }
                if pred[k] == *l {
                    pi = idx;
                }
            }
            counts[gi][pi] += 1;
        }
        let mut correct = 0u64;
        for k in 0..gold.len() {
            if gold[k] == pred[k] {
                correct += 1;
            }
        }
        let acc = correct as f64 / gold.len() as f64;
        let mut f1 = [0.0f64; 4];
        for c in 0..4 {
            let mut tp = 0u64;
            let mut fp = 0u64;
            let mut fn_ = 0u64;
            for k in 0..gold.len() {
                let g = gold[k].index() == c;
                let p = pred[k].index() == c;
                if g && p {
                    tp += 1;
                } else if !g && p {
                    fp += 1;
                } else if g && !p {
                    fn_ += 1;
                }
            }
            let prec = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
            let rec = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
            f1[c] = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
        }
        (counts, acc, f1)
    }

    #[test]
    fn random_lists_match_counting_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.gen_range(1..=50);
            let gold: Vec<Label4> =
                (0..n).map(|_| Label4::ALL[rng.gen_range(0..4)]).collect();
            let pred: Vec<Label4> =
                (0..n).map(|_| Label4::ALL[rng.gen_range(0..4)]).collect();
            let cm = confusion_matrix(&gold, &pred).unwrap();
            let (oc, oacc, of1) = oracle_metrics(&gold, &pred);
            assert_eq!(cm.counts, oc);
            assert!((accuracy(&cm).unwrap() - oacc).abs() < 1e-12);
            let f1 = f1_per_class(&cm);
            for c in 0..4 {
                assert!((f1[c] - of1[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let n = 40;
        let gold: Vec<Label4> = (0..n).map(|_| Label4::ALL[rng.gen_range(0..4)]).collect();
        let pred: Vec<Label4> = (0..n).map(|_| Label4::ALL[rng.gen_range(0..4)]).collect();
        let cm = confusion_matrix(&gold, &pred).unwrap();

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let gold_p: Vec<Label4> = perm.iter().map(|&i| gold[i]).collect();
        let pred_p: Vec<Label4> = perm.iter().map(|&i| pred[i]).collect();
        assert_eq!(confusion_matrix(&gold_p, &pred_p).unwrap(), cm);
    }

    #[test]
    fn report_matches_individual_ops() {
        let gold = labels(&["HF", "HT", "MF", "MT", "HF", "MT"]);
        let pred = labels(&["HF", "HF", "MF", "MT", "HT", "MT"]);
        let report = EvalReport::from_pairs(&gold, &pred, "t", "s").unwrap();
        let cm = confusion_matrix(&gold, &pred).unwrap();
        assert_eq!(report.confusion, cm);
        assert_eq!(report.accuracy, accuracy(&cm).unwrap());
        assert_eq!(report.f1, f1_per_class(&cm));
    }

    #[test]
    fn planted_error_rate() {
        // 200 items, exactly 10% planted errors -> accuracy 0.90 exactly
        let mut gold = Vec::new();
        let mut pred = Vec::new();
        for i in 0..200usize {
            let l = Label4::ALL[i % 4];
            gold.push(l);
            if i % 10 == 0 {
                pred.push(Label4::ALL[(i + 1) % 4]);
            } else {
                pred.push(l);
            }
        }
        let report = EvalReport::from_pairs(&gold, &pred, "t", "s").unwrap();
        assert_eq!(report.accuracy, 0.90);
    }

    #[test]
    fn report_json_schema() {
        let gold = labels(&["HF", "HT", "MF", "MT"]);
        let report = EvalReport::from_pairs(&gold, &gold, "D1", "D1-test").unwrap();
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["train_config"], "D1");
        assert_eq!(json["test_set"], "D1-test");
        assert_eq!(json["accuracy"], 1.0);
        assert_eq!(json["f1"]["HF"], 1.0);
        assert_eq!(json["f1"]["MT"], 1.0);
        assert_eq!(json["confusion"][0][0], 1);
        let back: EvalReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, report);
    }

    struct ConstModel(Label4, f64);

    impl Classifier4 for ConstModel {
        fn predict4(&self, _: &str) -> Label4 {
            self.0
        }
        fn fake_margin(&self, _: &str) -> f64 {
            self.1
        }
    }

    fn rec(id: usize, text: &str, label: Label4) -> NewsRecord {
        NewsRecord {
            id: format!("r{id}"),
            text: text.to_string(),
            label,
            dataset: DatasetTag::D1,
            parent_id: label.is_machine().then(|| "p".to_string()),
            prompt_id: None,
        }
    }

    #[test]
    fn cross_domain_diagonal_consistency() {
        // trivially perfect "models": row k predicts the label that test
        // set k is made of, so the diagonal is 1 and off-diagonal cells
        // equal label agreement.
        let test_sets: [Vec<NewsRecord>; 7] = std::array::from_fn(|k| {
            let l = Label4::ALL[k % 4];
            (0..5).map(|i| rec(k * 10 + i, "متن", l)).collect()
        });
        let m = cross_domain_matrix::<_, EvalError, _>(
            |row| Ok(ConstModel(Label4::ALL[row % 4], 0.0)),
            &test_sets,
            3,
        )
        .unwrap();
        for k in 0..7 {
            assert_eq!(m.values[k][k], 1.0);
            let model = ConstModel(Label4::ALL[k % 4], 0.0);
            let report = evaluate_run(&model, &test_sets[k], "t", "s").unwrap();
            assert_eq!(m.values[k][k], report.accuracy);
        }
        // independent of jobs count
        let m1 = cross_domain_matrix::<_, EvalError, _>(
            |row| Ok(ConstModel(Label4::ALL[row % 4], 0.0)),
            &test_sets,
            1,
        )
        .unwrap();
        assert_eq!(m, m1);
    }

    #[test]
    fn csv_shape_and_precision() {
        let mut values = [[0.0f64; 7]; 7];
        values[0][0] = 0.63;
        values[6][6] = 1.0 / 3.0;
        let m = CrossDomainMatrix { values };
        let csv = m.to_csv_string();
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines[0].starts_with("train\\test,D1,D2"));
        assert!(lines[1].contains("0.6300"));
        assert!(lines[7].contains("0.3333"));
        for line in &lines {
            assert_eq!(line.split(',').count(), 8);
        }
    }

    #[test]
    fn heatmap_monotone_ramp() {
        let mut values = [[0.0f64; 7]; 7];
        for i in 0..7 {
            values[i][i] = 1.0;
        }
        let svg = heatmap_svg_string(&CrossDomainMatrix { values });
        // darkest color on the diagonal, lightest off it
        assert!(svg.contains("rgb(8,48,107)"));
        assert!(svg.contains("rgb(255,255,255)"));

        let all_zero = heatmap_svg_string(&CrossDomainMatrix { values: [[0.0; 7]; 7] });
        assert!(!all_zero.contains("rgb(8,48,107)"));
    }

    #[test]
    fn heatmap_deterministic() {
        let mut values = [[0.25f64; 7]; 7];
        values[2][3] = 0.87;
        let m = CrossDomainMatrix { values };
        assert_eq!(heatmap_svg_string(&m), heatmap_svg_string(&m));
    }

    #[test]
    fn constant_predictor_uniform_fake_rate() {
        let test: Vec<NewsRecord> = (0..40)
            .map(|i| {
                let words = vec!["لفظ"; i % 10 + 1].join(" ");
                rec(i, &words, Label4::ALL[i % 4])
            })
            .collect();
        let model = ConstModel(Label4::HumanFake, 0.0);
        let report = length_bias_probe(&model, &test, &StopwordList::empty());
        assert_eq!(report.bins.len(), 4);
        for bin in &report.bins {
            assert_eq!(bin.fake_rate, 1.0);
        }
        assert_eq!(report.pearson_r, 0.0);
    }

    #[test]
    fn pearson_perfect_and_degenerate() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]) + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), 0.0);
    }
}
