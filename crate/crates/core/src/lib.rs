//! Four-class fake news detection (human/machine x true/fake) for Urdu news.
//!
//! The crate decomposes the four-way label into two binary axes -- who wrote
//! the text (origin) and whether it is true (veracity) -- and provides:
//!
//! - [`corpus`]: data model, CSV/JSONL ingestion, label algebra, stratified
//!   splitting, and descriptive statistics
//! - [`textprep`]: cleaning, whitespace tokenization with stopword removal,
//!   and TF-IDF feature extraction
//! - [`linear`]: hinge-loss linear classifiers trained by stochastic
//!   subgradient descent, binary and one-vs-rest, with grid search
//! - [`hierarchy`]: the composed two-head classifier (origin head +
//!   veracity head)
//! - [`eval`]: confusion matrices, accuracy, per-class F1, cross-domain
//!   evaluation, and SVG heatmap rendering
//! - [`mgtgen`]: machine-paraphrase dataset construction -- prompt catalog,
//!   batch request building, response ingestion, QC filtering, and
//!   augmentation merge

pub mod corpus;
pub mod eval;
pub mod hierarchy;
pub mod linear;
pub mod mgtgen;
pub mod textprep;

pub use corpus::{CorpusStats, DatasetTag, Label4, NewsRecord, Origin, SplitSpec, Veracity};
pub use eval::{ConfusionMatrix, CrossDomainMatrix, EvalReport};
pub use hierarchy::HierarchicalModel;
pub use linear::{LinearModel, OvrModel, TrainConfig};
pub use textprep::{SparseVector, StopwordList, TfidfModel};
