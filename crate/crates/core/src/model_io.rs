//! Versioned on-disk model format.
//!
//! A model file is one JSON document: format version, the schema's
//! feature names, the training configuration, and the two per-class
//! score models with their trees flattened in preorder. Numbers are
//! written in shortest round-trip decimal form, so a save/load cycle
//! reproduces predictions bit for bit and identical models serialize to
//! identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boost::{RumorDetector, ScoreModel, Stage, TrainConfig};
use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::tree::{RegressionTree, TreeNode};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u64,
    schema: Vec<String>,
    config: TrainConfig,
    rumor: ScoreModelRecord,
    nonrumor: ScoreModelRecord,
}

#[derive(Serialize, Deserialize)]
struct ScoreModelRecord {
    base_score: f64,
    stages: Vec<StageRecord>,
}

#[derive(Serialize, Deserialize)]
struct StageRecord {
    gamma: f64,
    /// Preorder node list.
    tree: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NodeRecord {
    Split { feature: usize, threshold: f64 },
    Leaf { value: f64, count: usize },
}

fn flatten(node: &TreeNode, out: &mut Vec<NodeRecord>) {
    match node {
        TreeNode::Leaf {
            value,
            sample_count,
        } => out.push(NodeRecord::Leaf {
            value: *value,
            count: *sample_count,
        }),
        TreeNode::Internal {
            feature_index,
            threshold,
            left,
            right,
        } => {
            out.push(NodeRecord::Split {
                feature: *feature_index,
                threshold: *threshold,
            });
            flatten(left, out);
            flatten(right, out);
        }
    }
}

fn score_model_record(model: &ScoreModel) -> ScoreModelRecord {
    ScoreModelRecord {
        base_score: model.base_score,
        stages: model
            .stages
            .iter()
            .map(|stage| {
                let mut tree = Vec::new();
                flatten(stage.tree.root(), &mut tree);
                StageRecord {
                    gamma: stage.gamma,
                    tree,
                }
            })
            .collect(),
    }
}

fn read_node(iter: &mut std::slice::Iter<'_, NodeRecord>, cols: usize) -> Result<TreeNode> {
    match iter.next() {
        None => Err(Error::CorruptModel("truncated tree node list".into())),
        Some(NodeRecord::Leaf { value, count }) => {
            if !value.is_finite() {
                return Err(Error::CorruptModel(format!(
                    "non-finite leaf value {value}"
                )));
            }
            Ok(TreeNode::Leaf {
                value: *value,
                sample_count: *count,
            })
        }
        Some(NodeRecord::Split { feature, threshold }) => {
            if *feature >= cols {
                return Err(Error::CorruptModel(format!(
                    "split feature {feature} out of range for {cols} features"
                )));
            }
            if !threshold.is_finite() {
                return Err(Error::CorruptModel(format!(
                    "non-finite threshold {threshold}"
                )));
            }
            let left = read_node(iter, cols)?;
            let right = read_node(iter, cols)?;
            Ok(TreeNode::Internal {
                feature_index: *feature,
                threshold: *threshold,
                left: Box::new(left),
                right: Box::new(right),
            })
        }
    }
}

fn restore_score_model(
    record: &ScoreModelRecord,
    config: &TrainConfig,
    cols: usize,
) -> Result<ScoreModel> {
    if !record.base_score.is_finite() {
        return Err(Error::CorruptModel(format!(
            "non-finite base score {}",
            record.base_score
        )));
    }
    let mut stages = Vec::with_capacity(record.stages.len());
    for s in &record.stages {
        if !s.gamma.is_finite() {
            return Err(Error::CorruptModel(format!(
                "non-finite stage weight {}",
                s.gamma
            )));
        }
        let mut iter = s.tree.iter();
        let root = read_node(&mut iter, cols)?;
        if iter.next().is_some() {
            return Err(Error::CorruptModel("trailing nodes after tree".into()));
        }
        stages.push(Stage {
            gamma: s.gamma,
            tree: RegressionTree::from_parts(root, config.max_depth, config.min_region_size, cols),
        });
    }
    Ok(ScoreModel {
        base_score: record.base_score,
        learning_rate: config.learning_rate,
        stages,
    })
}

/// Serialize a detector to its canonical byte form.
pub fn model_to_bytes(detector: &RumorDetector) -> Vec<u8> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        schema: detector
            .schema()
            .names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        config: detector.config().clone(),
        rumor: score_model_record(detector.score_rumor()),
        nonrumor: score_model_record(detector.score_nonrumor()),
    };
    let mut bytes = serde_json::to_vec(&file).expect("model serialization cannot fail");
    bytes.push(b'\n');
    bytes
}

/// Parse a detector from bytes produced by [`model_to_bytes`].
pub fn model_from_bytes(bytes: &[u8]) -> Result<RumorDetector> {
    let value: serde_json::Value = serde_json::from_slice(bytes)
        .map_err(|e| Error::CorruptModel(format!("invalid JSON: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::CorruptModel("missing format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let file: ModelFile = serde_json::from_value(value)
        .map_err(|e| Error::CorruptModel(format!("bad model structure: {e}")))?;
    file.config
        .validate()
        .map_err(|e| Error::CorruptModel(format!("bad config: {e}")))?;
    let schema = FeatureSchema::from_names(&file.schema)?;
    let cols = schema.len();
    let rumor = restore_score_model(&file.rumor, &file.config, cols)?;
    let nonrumor = restore_score_model(&file.nonrumor, &file.config, cols)?;
    Ok(RumorDetector::from_parts(
        rumor,
        nonrumor,
        schema,
        file.config,
    ))
}

/// Write a detector to disk.
pub fn save_model(detector: &RumorDetector, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_bytes(detector)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a detector back from disk.
pub fn load_model(path: impl AsRef<Path>) -> Result<RumorDetector> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_bytes(&bytes)
}
