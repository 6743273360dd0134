//! Split-count feature importance and top-u selection.
//!
//! The importance of a feature is the fraction of internal nodes across
//! every tree of both per-class models that route on it. Features that
//! are never chosen for a split score zero; dropping them provably
//! cannot change any training prediction.

use crate::boost::{train_detector, RumorDetector, TrainConfig};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::tree::{RegressionTree, TreeNode};

/// One ranked feature.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceEntry {
    pub feature_index: usize,
    pub name: String,
    pub split_count: u64,
    /// `split_count / total_splits`, or 0 when no splits exist.
    pub importance: f64,
}

/// Importance of every feature, sorted by descending importance with
/// ties broken by ascending feature index.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub entries: Vec<ImportanceEntry>,
    pub total_splits: u64,
}

impl ImportanceReport {
    /// Importances back in feature-index order.
    pub fn by_index(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.entries.len()];
        for e in &self.entries {
            out[e.feature_index] = e.importance;
        }
        out
    }

    /// Tab-delimited export: rank, feature name, split count, importance
    /// to six decimal places.
    pub fn to_table(&self) -> String {
        let mut out = String::from("rank\tfeature\tsplit_count\timportance\n");
        for (rank, e) in self.entries.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\n",
                rank + 1,
                e.name,
                e.split_count,
                e.importance
            ));
        }
        out
    }
}

/// How many internal nodes of one tree route on each feature.
pub fn split_counts(tree: &RegressionTree) -> Vec<u64> {
    let mut counts = vec![0u64; tree.feature_count()];
    fn walk(node: &TreeNode, counts: &mut [u64]) {
        if let TreeNode::Internal {
            feature_index,
            left,
            right,
            ..
        } = node
        {
            counts[*feature_index] += 1;
            walk(left, counts);
            walk(right, counts);
        }
    }
    walk(tree.root(), &mut counts);
    counts
}

/// Split counts summed over every tree of both per-class score models,
/// normalized by the grand total.
pub fn feature_importance(detector: &RumorDetector) -> ImportanceReport {
    let d = detector.schema().len();
    let mut counts = vec![0u64; d];
    for model in [detector.score_rumor(), detector.score_nonrumor()] {
        for stage in &model.stages {
            for (i, c) in split_counts(&stage.tree).iter().enumerate() {
                counts[i] += c;
            }
        }
    }
    let total_splits: u64 = counts.iter().sum();
    let names = detector.schema().names();
    let mut entries: Vec<ImportanceEntry> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| ImportanceEntry {
            feature_index: i,
            name: names[i].to_string(),
            split_count: c,
            importance: if total_splits == 0 {
                0.0
            } else {
                c as f64 / total_splits as f64
            },
        })
        .collect();
    entries.sort_by(|a, b| {
        b.split_count
            .cmp(&a.split_count)
            .then(a.feature_index.cmp(&b.feature_index))
    });
    ImportanceReport {
        entries,
        total_splits,
    }
}

/// Train a detector on all candidate columns of `matrix`, rank them by
/// split-count importance, and return the first `keep` column indices.
pub fn select_features(
    matrix: &FeatureMatrix,
    cfg: &TrainConfig,
    keep: usize,
) -> Result<(ImportanceReport, Vec<usize>)> {
    let candidates = matrix.cols();
    if keep < 1 || keep > candidates {
        return Err(Error::BadU1 { keep, candidates });
    }
    if matrix.labels().is_none() {
        return Err(Error::MissingLabels);
    }
    let (detector, _) = train_detector(matrix, cfg)?;
    let report = feature_importance(&detector);
    let selected = report.entries[..keep]
        .iter()
        .map(|e| e.feature_index)
        .collect();
    Ok((report, selected))
}
