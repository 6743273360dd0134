//! Stage-wise gradient boosting over regression trees, and the two-model
//! rumor detector built on top of it.
//!
//! One score model per class is trained on 0/1 one-vs-rest targets under
//! squared loss. Stage `m` fits a tree to the residuals `y - F_{m-1}(x)`,
//! weights it with the closed-form line search `gamma = sum(z*h) /
//! sum(h^2)` (zero when the tree is identically zero), and updates
//! `F_m = F_{m-1} + alpha * gamma * tree`. The label decision is a
//! two-way softmax over the class scores.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSchema};
use crate::tree::{fit_with_presorted, presort, Presorted, RegressionTree};

/// Boosting hyperparameters. Defaults are the production configuration:
/// 500 trees of depth 6 at learning rate 0.2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of boosted stages (M).
    pub trees: usize,
    /// Maximum tree depth (P).
    pub max_depth: usize,
    /// Shrinkage applied to every stage (alpha), in (0, 1].
    pub learning_rate: f64,
    /// A region with fewer rows than this is never split (H).
    pub min_region_size: usize,
    /// Reserved for reproducibility bookkeeping; training itself is
    /// deterministic.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            trees: 500,
            max_depth: 6,
            learning_rate: 0.2,
            min_region_size: 2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trees < 1 {
            return Err(Error::InvalidConfig("trees must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be in (0, 1], got {}",
                self.learning_rate
            )));
        }
        if self.min_region_size < 1 {
            return Err(Error::InvalidConfig("min_region_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Training mean squared error after each stage; entry 0 is the error of
/// the constant model `F_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTrace(Vec<f64>);

impl LossTrace {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn initial(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        *self.0.last().expect("trace has at least the stage-0 entry")
    }
}

/// One boosted stage: a tree and its line-search weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub gamma: f64,
    pub tree: RegressionTree,
}

/// A stage-wise additive score for one class:
/// `F(x) = base_score + sum_m alpha * gamma_m * tree_m(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub stages: Vec<Stage>,
}

impl ScoreModel {
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let mut f = self.base_score;
        for stage in &self.stages {
            f += self.learning_rate * stage.gamma * stage.tree.predict(x)?;
        }
        Ok(f)
    }

    fn score_unchecked(&self, x: &[f64]) -> f64 {
        let mut f = self.base_score;
        for stage in &self.stages {
            f += self.learning_rate * stage.gamma * stage.tree.predict_unchecked(x);
        }
        f
    }
}

fn mse(predictions: &[f64], targets: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (p, y) in predictions.iter().zip(targets) {
        let d = p - y;
        sum += d * d;
    }
    sum / predictions.len() as f64
}

pub(crate) fn fit_score_model_presorted(
    x: &[f64],
    rows: usize,
    cols: usize,
    y01: &[f64],
    cfg: &TrainConfig,
    pre: &Presorted,
) -> Result<(ScoreModel, LossTrace)> {
    cfg.validate()?;
    if rows < 2 {
        return Err(Error::EmptyInput);
    }
    if y01.len() != rows {
        return Err(Error::LengthMismatch {
            left: y01.len(),
            right: rows,
        });
    }
    if let Some(&bad) = y01.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::NonBinaryTargets(bad));
    }

    // F_0: the constant minimizing squared loss, i.e. the target mean.
    let base_score = y01.iter().sum::<f64>() / rows as f64;
    let mut f: Vec<f64> = vec![base_score; rows];
    let mut trace = vec![mse(&f, y01)];

    let mut residuals = vec![0.0; rows];
    let mut h = vec![0.0; rows];
    let mut stages = Vec::with_capacity(cfg.trees);
    for _ in 0..cfg.trees {
        for i in 0..rows {
            residuals[i] = y01[i] - f[i];
        }
        let tree = fit_with_presorted(
            x,
            rows,
            cols,
            &residuals,
            cfg.max_depth,
            cfg.min_region_size,
            pre,
        )?;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..rows {
            h[i] = tree.predict_unchecked(&x[i * cols..(i + 1) * cols]);
            num += residuals[i] * h[i];
            den += h[i] * h[i];
        }
        let gamma = if den == 0.0 { 0.0 } else { num / den };
        let step = cfg.learning_rate * gamma;
        for i in 0..rows {
            f[i] += step * h[i];
        }
        trace.push(mse(&f, y01));
        stages.push(Stage { gamma, tree });
    }

    Ok((
        ScoreModel {
            base_score,
            learning_rate: cfg.learning_rate,
            stages,
        },
        LossTrace(trace),
    ))
}

/// Fit one boosted score model on 0/1 targets. Returns the model and its
/// per-stage training MSE trace (length `trees + 1`, non-increasing).
pub fn fit_score_model(
    x: &[f64],
    rows: usize,
    cols: usize,
    y01: &[f64],
    cfg: &TrainConfig,
) -> Result<(ScoreModel, LossTrace)> {
    let pre = presort(x, rows, cols);
    fit_score_model_presorted(x, rows, cols, y01, cfg, &pre)
}

/// The trained two-class detector: one score model per class plus the
/// schema it expects and the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RumorDetector {
    pub(crate) score_rumor: ScoreModel,
    pub(crate) score_nonrumor: ScoreModel,
    pub(crate) schema: FeatureSchema,
    pub(crate) config: TrainConfig,
}

/// Training loss traces for the two per-class models.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTraces {
    pub rumor: LossTrace,
    pub nonrumor: LossTrace,
}

/// Train the detector on a labeled feature matrix: the rumor model gets
/// target 1 on rumor rows, the non-rumor model target 1 on the rest.
/// Both share the matrix and the configuration.
pub fn train_detector(
    matrix: &FeatureMatrix,
    cfg: &TrainConfig,
) -> Result<(RumorDetector, TrainTraces)> {
    let labels = matrix.labels().ok_or(Error::MissingLabels)?;
    let rows = matrix.rows();
    let cols = matrix.cols();
    let y_rumor: Vec<f64> = labels
        .iter()
        .map(|l| if *l == Label::Rumor { 1.0 } else { 0.0 })
        .collect();
    let y_nonrumor: Vec<f64> = y_rumor.iter().map(|y| 1.0 - y).collect();

    let pre = presort(matrix.values(), rows, cols);
    let (score_rumor, trace_rumor) =
        fit_score_model_presorted(matrix.values(), rows, cols, &y_rumor, cfg, &pre)?;
    let (score_nonrumor, trace_nonrumor) =
        fit_score_model_presorted(matrix.values(), rows, cols, &y_nonrumor, cfg, &pre)?;

    Ok((
        RumorDetector {
            score_rumor,
            score_nonrumor,
            schema: matrix.schema().clone(),
            config: cfg.clone(),
        },
        TrainTraces {
            rumor: trace_rumor,
            nonrumor: trace_nonrumor,
        },
    ))
}

impl RumorDetector {
    pub(crate) fn from_parts(
        score_rumor: ScoreModel,
        score_nonrumor: ScoreModel,
        schema: FeatureSchema,
        config: TrainConfig,
    ) -> Self {
        RumorDetector {
            score_rumor,
            score_nonrumor,
            schema,
            config,
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn score_rumor(&self) -> &ScoreModel {
        &self.score_rumor
    }

    pub fn score_nonrumor(&self) -> &ScoreModel {
        &self.score_nonrumor
    }

    /// Class probabilities `(p_rumor, p_nonrumor)`: a softmax over the
    /// two scores, computed with the max subtracted so extreme scores do
    /// not overflow. The pair sums to 1 within 1e-12.
    pub fn predict_proba(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.schema.len() {
            return Err(Error::DimensionMismatch {
                expected: self.schema.len(),
                got: x.len(),
            });
        }
        let f_rumor = self.score_rumor.score_unchecked(x);
        let f_nonrumor = self.score_nonrumor.score_unchecked(x);
        let max = f_rumor.max(f_nonrumor);
        let e1 = (f_rumor - max).exp();
        let e2 = (f_nonrumor - max).exp();
        let z = e1 + e2;
        Ok((e1 / z, e2 / z))
    }

    /// The most probable label. An exact probability tie goes to
    /// `NonRumor`: no flag without evidence.
    pub fn predict_label(&self, x: &[f64]) -> Result<Label> {
        let (p_rumor, p_nonrumor) = self.predict_proba(x)?;
        Ok(if p_rumor > p_nonrumor {
            Label::Rumor
        } else {
            Label::NonRumor
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Deadline, FeatureSchema};

    fn matrix_from(values: Vec<f64>, rows: usize, labels: Vec<Label>) -> FeatureMatrix {
        // a 1-column schema for unit fixtures
        let schema =
            FeatureSchema::from_features(vec![crate::features::Feature::MessageLength]).unwrap();
        FeatureMatrix::new(values, rows, schema, Deadline::All, Some(labels)).unwrap()
    }

    #[test]
    fn constant_targets_fixed_point() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let (model, trace) = fit_score_model(
            &x,
            4,
            1,
            &[1.0, 1.0, 1.0, 1.0],
            &TrainConfig {
                trees: 5,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(model.base_score, 1.0);
        assert!(model.stages.iter().all(|s| s.gamma == 0.0));
        assert_eq!(model.score(&[9.0]).unwrap(), 1.0);
        assert!(trace.values().iter().all(|&l| l == 0.0));
    }

    #[test]
    fn rejects_non_binary_targets() {
        let err =
            fit_score_model(&[1.0, 2.0], 2, 1, &[0.0, 0.5], &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NonBinaryTargets(v) if v == 0.5));
    }

    #[test]
    fn rejects_tiny_input() {
        let err = fit_score_model(&[1.0], 1, 1, &[1.0], &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyInput));
    }

    #[test]
    fn loss_trace_is_monotone() {
        // deliberately noisy targets
        let x: Vec<f64> = (0..40).map(|i| (i * 7 % 13) as f64).collect();
        let y: Vec<f64> = (0..40).map(|i| ((i * 5 + 3) % 2) as f64).collect();
        let (_, trace) = fit_score_model(
            &x,
            40,
            1,
            &y,
            &TrainConfig {
                trees: 30,
                max_depth: 2,
                learning_rate: 0.5,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert_eq!(trace.values().len(), 31);
        for w in trace.values().windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "trace increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn train_detector_separable_fixture() {
        // 2 rumors + 2 non-rumors split by one feature
        let m = matrix_from(
            vec![1.0, 2.0, 10.0, 11.0],
            4,
            vec![Label::NonRumor, Label::NonRumor, Label::Rumor, Label::Rumor],
        );
        let cfg = TrainConfig {
            trees: 10,
            max_depth: 2,
            ..TrainConfig::default()
        };
        let (det, traces) = train_detector(&m, &cfg).unwrap();
        for i in 0..4 {
            assert_eq!(det.predict_label(m.row(i)).unwrap(), m.labels().unwrap()[i]);
        }
        assert!(traces.rumor.last() < traces.rumor.initial());
    }

    #[test]
    fn all_rumor_dataset_degenerates() {
        let m = matrix_from(vec![1.0, 2.0, 3.0], 3, vec![Label::Rumor; 3]);
        let (det, _) = train_detector(
            &m,
            &TrainConfig {
                trees: 3,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        let (p_rumor, p_nonrumor) = det.predict_proba(&[5.0]).unwrap();
        assert!(p_rumor > p_nonrumor);
        assert_eq!(det.predict_label(&[5.0]).unwrap(), Label::Rumor);
    }

    #[test]
    fn unlabeled_matrix_is_rejected() {
        let schema =
            FeatureSchema::from_features(vec![crate::features::Feature::MessageLength]).unwrap();
        let m = FeatureMatrix::new(vec![1.0, 2.0], 2, schema, Deadline::All, None).unwrap();
        assert!(matches!(
            train_detector(&m, &TrainConfig::default()),
            Err(Error::MissingLabels)
        ));
    }

    #[test]
    fn softmax_contracts() {
        let schema =
            FeatureSchema::from_features(vec![crate::features::Feature::MessageLength]).unwrap();
        let det = RumorDetector::from_parts(
            ScoreModel {
                base_score: 1.0,
                learning_rate: 0.2,
                stages: vec![],
            },
            ScoreModel {
                base_score: 0.0,
                learning_rate: 0.2,
                stages: vec![],
            },
            schema.clone(),
            TrainConfig::default(),
        );
        let (p1, p2) = det.predict_proba(&[0.0]).unwrap();
        let e = std::f64::consts::E;
        assert!((p1 - e / (e + 1.0)).abs() < 1e-12);
        assert!((p2 - 1.0 / (e + 1.0)).abs() < 1e-12);
        assert!((p1 + p2 - 1.0).abs() <= 1e-12);

        // equal scores split evenly and tie to NonRumor
        let det_eq = RumorDetector::from_parts(
            ScoreModel {
                base_score: 0.7,
                learning_rate: 0.2,
                stages: vec![],
            },
            ScoreModel {
                base_score: 0.7,
                learning_rate: 0.2,
                stages: vec![],
            },
            schema.clone(),
            TrainConfig::default(),
        );
        assert_eq!(det_eq.predict_proba(&[0.0]).unwrap(), (0.5, 0.5));
        assert_eq!(det_eq.predict_label(&[0.0]).unwrap(), Label::NonRumor);

        // huge scores must not overflow
        let det_hot = RumorDetector::from_parts(
            ScoreModel {
                base_score: 800.0,
                learning_rate: 0.2,
                stages: vec![],
            },
            ScoreModel {
                base_score: 0.0,
                learning_rate: 0.2,
                stages: vec![],
            },
            schema,
            TrainConfig::default(),
        );
        let (p1, p2) = det_hot.predict_proba(&[0.0]).unwrap();
        assert!(p1.is_finite() && p2.is_finite());
        assert!(p1 > 1.0 - 1e-12);
        assert!(p2 < 1e-12);
    }

    #[test]
    fn predict_label_matches_argmax() {
        let m = matrix_from(
            vec![1.0, 2.0, 10.0, 11.0],
            4,
            vec![Label::NonRumor, Label::NonRumor, Label::Rumor, Label::Rumor],
        );
        let (det, _) = train_detector(
            &m,
            &TrainConfig {
                trees: 5,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        for i in 0..100 {
            let x = [(i as f64) * 0.17 - 3.0];
            let (p1, p2) = det.predict_proba(&x).unwrap();
            let expect = if p1 > p2 {
                Label::Rumor
            } else {
                Label::NonRumor
            };
            assert_eq!(det.predict_label(&x).unwrap(), expect);
        }
    }

    #[test]
    fn dimension_mismatch_on_predict() {
        let m = matrix_from(vec![1.0, 2.0], 2, vec![Label::Rumor, Label::NonRumor]);
        let (det, _) = train_detector(
            &m,
            &TrainConfig {
                trees: 2,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert!(matches!(
            det.predict_proba(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig {
            trees: 0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            max_depth: 0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: 1.5,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            min_region_size: 0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn interpolation_on_distinct_feature() {
        // 16 rows, three label blocks, alpha = 1: training MSE reaches 0
        let x: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..16)
            .map(|i| if (5..11).contains(&i) { 1.0 } else { 0.0 })
            .collect();
        let cfg = TrainConfig {
            trees: 50,
            max_depth: 5,
            learning_rate: 1.0,
            ..TrainConfig::default()
        };
        let (model, trace) = fit_score_model(&x, 16, 1, &y, &cfg).unwrap();
        assert!(trace.last() <= 1e-10, "final MSE {}", trace.last());
        for i in 0..16 {
            assert!((model.score(&[x[i]]).unwrap() - y[i]).abs() <= 1e-10);
        }
    }
}
