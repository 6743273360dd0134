//! A rumor-detection engine for microblog messages.
//!
//! The pipeline: line-delimited event records are loaded into a
//! [`data::Dataset`], turned into fixed-order numeric features at a
//! detecting deadline by [`features::materialize`], and classified by a
//! pair of boosted regression-tree score models ([`boost::RumorDetector`])
//! whose softmax picks the label. Feature importance is the split-count
//! share of each column over the whole ensemble, and the evaluation
//! harness runs repeated stratified cross-validation plus deadline and
//! hyperparameter sweeps.
//!
//! Everything is deterministic given (input bytes, configuration, seed):
//! training breaks split ties by smallest feature index then smallest
//! threshold, fold shuffles derive from `seed + repeat`, and model files
//! serialize with round-trip-exact numbers.

pub mod boost;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod importance;
pub mod model_io;
pub mod tree;

pub use boost::{
    fit_score_model, train_detector, LossTrace, RumorDetector, ScoreModel, Stage, TrainConfig,
    TrainTraces,
};
pub use data::{
    load_dataset, parse_event, validate_dataset, Dataset, Gender, Interaction, InteractionKind,
    Label, MessageEvent, UserRecord, ValidationReport,
};
pub use error::{Error, Result};
pub use eval::{
    confusion, deadline_sweep, hyperparam_sweep, kfold_cv, metrics, ConfusionMatrix, CvResult,
    EvalReport, FoldReport, HyperGrid, MetricSummary, SweepAxis, SweepPoint, SweepResult,
};
pub use features::{
    count_changing, extract_constant_features, materialize, user_influence, Deadline, Feature,
    FeatureMatrix, FeatureSchema,
};
pub use importance::{
    feature_importance, select_features, split_counts, ImportanceEntry, ImportanceReport,
};
pub use model_io::{load_model, model_from_bytes, model_to_bytes, save_model};
pub use tree::{best_split, fit_regression_tree, BestSplit, RegressionTree, TreeNode};
