//! Confusion-matrix metrics, repeated stratified k-fold cross-validation,
//! and the deadline / hyperparameter sweep harnesses.
//!
//! Rumor is the positive class. Fold assignment for repeat `r` comes from
//! a ChaCha stream seeded with `seed + r`: each class's indices are
//! shuffled and dealt round-robin across the `k` folds, so per-fold class
//! counts differ from perfect proportion by at most one. All harness
//! output is a pure function of (dataset, config, seed).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boost::{train_detector, TrainConfig};
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::features::{materialize, Deadline, FeatureMatrix, FeatureSchema};

/// Counts of prediction outcomes with Rumor as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    /// The same counts with the positive class swapped.
    pub fn swapped(&self) -> ConfusionMatrix {
        ConfusionMatrix {
            true_pos: self.true_neg,
            false_pos: self.false_neg,
            true_neg: self.true_pos,
            false_neg: self.false_pos,
        }
    }
}

/// Count prediction outcomes against ground truth.
pub fn confusion(pred: &[Label], truth: &[Label]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut m = ConfusionMatrix::default();
    for (p, t) in pred.iter().zip(truth) {
        match (p, t) {
            (Label::Rumor, Label::Rumor) => m.true_pos += 1,
            (Label::Rumor, Label::NonRumor) => m.false_pos += 1,
            (Label::NonRumor, Label::Rumor) => m.false_neg += 1,
            (Label::NonRumor, Label::NonRumor) => m.true_neg += 1,
        }
    }
    Ok(m)
}

/// Accuracy, precision, recall and F1 for one confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matrix: ConfusionMatrix,
    /// Set when any 0/0 metric was defined to 0 instead of NaN.
    pub zero_division: bool,
}

/// Compute the four metrics. 0/0 cases (no predicted positives, no true
/// positives, or precision + recall = 0) yield 0.0 and set the flag.
pub fn metrics(m: &ConfusionMatrix) -> Result<EvalReport> {
    let total = m.total();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let mut zero_division = false;
    let accuracy = (m.true_pos + m.true_neg) as f64 / total as f64;
    let precision = if m.true_pos + m.false_pos == 0 {
        zero_division = true;
        0.0
    } else {
        m.true_pos as f64 / (m.true_pos + m.false_pos) as f64
    };
    let recall = if m.true_pos + m.false_neg == 0 {
        zero_division = true;
        0.0
    } else {
        m.true_pos as f64 / (m.true_pos + m.false_neg) as f64
    };
    let f1 = if precision + recall == 0.0 {
        zero_division = true;
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(EvalReport {
        accuracy,
        precision,
        recall,
        f1,
        matrix: *m,
        zero_division,
    })
}

/// Mean or spread of the four metrics over folds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// The evaluation of one held-out fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub repeat: usize,
    pub fold: usize,
    pub report: EvalReport,
}

/// Outcome of repeated stratified k-fold cross-validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub folds: Vec<FoldReport>,
    pub mean: MetricSummary,
    pub std: MetricSummary,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

fn summarize(folds: &[FoldReport]) -> (MetricSummary, MetricSummary) {
    let n = folds.len() as f64;
    let mut mean = MetricSummary::default();
    for f in folds {
        mean.accuracy += f.report.accuracy;
        mean.precision += f.report.precision;
        mean.recall += f.report.recall;
        mean.f1 += f.report.f1;
    }
    mean.accuracy /= n;
    mean.precision /= n;
    mean.recall /= n;
    mean.f1 /= n;

    let mut std = MetricSummary::default();
    if folds.len() > 1 {
        for f in folds {
            std.accuracy += (f.report.accuracy - mean.accuracy).powi(2);
            std.precision += (f.report.precision - mean.precision).powi(2);
            std.recall += (f.report.recall - mean.recall).powi(2);
            std.f1 += (f.report.f1 - mean.f1).powi(2);
        }
        let denom = n - 1.0;
        std.accuracy = (std.accuracy / denom).sqrt();
        std.precision = (std.precision / denom).sqrt();
        std.recall = (std.recall / denom).sqrt();
        std.f1 = (std.f1 / denom).sqrt();
    }
    (mean, std)
}

impl CvResult {
    /// Long-form tab-delimited export: one row per (repeat, fold) with
    /// both the Rumor-positive metrics and the class-swapped ones, then a
    /// `#`-prefixed summary block.
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "repeat\tfold\ttp\tfp\ttn\tfn\taccuracy\tprecision\trecall\tf1\tprecision_swapped\trecall_swapped\tf1_swapped\n",
        );
        for f in &self.folds {
            let m = &f.report.matrix;
            let sw = metrics(&m.swapped()).expect("nonempty fold");
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                f.repeat,
                f.fold,
                m.true_pos,
                m.false_pos,
                m.true_neg,
                m.false_neg,
                f.report.accuracy,
                f.report.precision,
                f.report.recall,
                f.report.f1,
                sw.precision,
                sw.recall,
                sw.f1,
            ));
        }
        out.push_str(&format!(
            "# folds={} repeats={} seed={}\n# metric\tmean\tstddev\n",
            self.k, self.repeats, self.seed
        ));
        for (name, mean, std) in [
            ("accuracy", self.mean.accuracy, self.std.accuracy),
            ("precision", self.mean.precision, self.std.precision),
            ("recall", self.mean.recall, self.std.recall),
            ("f1", self.mean.f1, self.std.f1),
        ] {
            out.push_str(&format!("# {name}\t{mean}\t{std}\n"));
        }
        out
    }
}

/// Stratified fold assignment: shuffle each class's indices with a
/// ChaCha stream seeded by `rng_seed`, then deal round-robin over `k`
/// folds, continuing the rotation across classes so folds stay level.
pub fn stratified_folds(labels: &[Label], k: usize, rng_seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut rumor: Vec<usize> = Vec::new();
    let mut nonrumor: Vec<usize> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            Label::Rumor => rumor.push(i),
            Label::NonRumor => nonrumor.push(i),
        }
    }
    rumor.shuffle(&mut rng);
    nonrumor.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, &e) in rumor.iter().enumerate() {
        folds[i % k].push(e);
    }
    for (i, &e) in nonrumor.iter().enumerate() {
        folds[(rumor.len() + i) % k].push(e);
    }
    folds
}

fn check_cv_args(labels: &[Label], k: usize, repeats: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::TooFewSamples(format!("k must be >= 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::TooFewSamples(format!(
            "{} events cannot fill {k} folds",
            labels.len()
        )));
    }
    if repeats < 1 {
        return Err(Error::InvalidConfig("repeats must be >= 1".into()));
    }
    let rumors = labels.iter().filter(|l| **l == Label::Rumor).count();
    if rumors == 0 || rumors == labels.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

fn cv_on_matrix(
    matrix: &FeatureMatrix,
    cfg: &TrainConfig,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvResult> {
    let labels = matrix.labels().ok_or(Error::MissingLabels)?.to_vec();
    check_cv_args(&labels, k, repeats)?;
    cfg.validate()?;

    let n = matrix.rows();
    let mut folds_out = Vec::with_capacity(k * repeats);
    for r in 0..repeats {
        let folds = stratified_folds(&labels, k, seed.wrapping_add(r as u64));
        for (fi, fold) in folds.iter().enumerate() {
            let mut in_test = vec![false; n];
            for &i in fold {
                in_test[i] = true;
            }
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            let test_idx: Vec<usize> = (0..n).filter(|&i| in_test[i]).collect();

            let train = matrix.subset_rows(&train_idx);
            let (detector, _) = train_detector(&train, cfg)?;
            let mut pred = Vec::with_capacity(test_idx.len());
            let mut truth = Vec::with_capacity(test_idx.len());
            for &i in &test_idx {
                pred.push(detector.predict_label(matrix.row(i))?);
                truth.push(labels[i]);
            }
            let report = metrics(&confusion(&pred, &truth)?)?;
            folds_out.push(FoldReport {
                repeat: r,
                fold: fi,
                report,
            });
        }
    }
    let (mean, std) = summarize(&folds_out);
    Ok(CvResult {
        folds: folds_out,
        mean,
        std,
        k,
        repeats,
        seed,
    })
}

/// Repeated stratified k-fold cross-validation of the detector on a
/// dataset, with features materialized once at deadline `T`.
pub fn kfold_cv(
    dataset: &Dataset,
    deadline: Deadline,
    cfg: &TrainConfig,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvResult> {
    let labels = dataset.labels().ok_or(Error::MissingLabels)?;
    check_cv_args(&labels, k, repeats)?;
    let matrix = materialize(dataset, deadline, &FeatureSchema::selected())?;
    cv_on_matrix(&matrix, cfg, k, repeats, seed)
}

/// The axis a sweep walked.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepAxis {
    Deadlines(Vec<Deadline>),
    Grid {
        trees: Vec<usize>,
        depths: Vec<usize>,
        rates: Vec<f64>,
    },
}

/// One sweep grid point with its full provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub deadline: Deadline,
    pub config: TrainConfig,
    pub mean: MetricSummary,
    pub std: MetricSummary,
}

/// All grid points of a deadline or hyperparameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
}

impl SweepResult {
    /// Long-form tab-delimited export, one row per grid point.
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "deadline\ttrees\tmax_depth\tlearning_rate\tmin_region\tfolds\trepeats\tseed\taccuracy\taccuracy_std\tprecision\trecall\tf1\n",
        );
        for p in &self.points {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                p.deadline,
                p.config.trees,
                p.config.max_depth,
                p.config.learning_rate,
                p.config.min_region_size,
                self.k,
                self.repeats,
                self.seed,
                p.mean.accuracy,
                p.std.accuracy,
                p.mean.precision,
                p.mean.recall,
                p.mean.f1,
            ));
        }
        out
    }
}

/// Cross-validate at each deadline. The seed is shared, so fold
/// assignments are identical across deadlines and only the observation
/// window varies.
pub fn deadline_sweep(
    dataset: &Dataset,
    deadlines: &[Deadline],
    cfg: &TrainConfig,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<SweepResult> {
    if deadlines.is_empty() {
        return Err(Error::InvalidConfig(
            "deadline sweep needs at least one deadline".into(),
        ));
    }
    let mut points = Vec::with_capacity(deadlines.len());
    for &deadline in deadlines {
        let cv = kfold_cv(dataset, deadline, cfg, k, repeats, seed)?;
        points.push(SweepPoint {
            deadline,
            config: cfg.clone(),
            mean: cv.mean,
            std: cv.std,
        });
    }
    Ok(SweepResult {
        axis: SweepAxis::Deadlines(deadlines.to_vec()),
        points,
        k,
        repeats,
        seed,
    })
}

/// Value lists for the hyperparameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperGrid {
    pub trees: Vec<usize>,
    pub depths: Vec<usize>,
    pub rates: Vec<f64>,
}

/// Cross-validate once per `(trees, depth, rate)` grid point at a fixed
/// deadline. Unswept settings come from `base`.
pub fn hyperparam_sweep(
    dataset: &Dataset,
    grid: &HyperGrid,
    deadline: Deadline,
    base: &TrainConfig,
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<SweepResult> {
    if grid.trees.is_empty() || grid.depths.is_empty() || grid.rates.is_empty() {
        return Err(Error::InvalidConfig(
            "hyperparameter grid has an empty axis".into(),
        ));
    }
    // materialize once; the grid only changes training settings
    let labels = dataset.labels().ok_or(Error::MissingLabels)?;
    check_cv_args(&labels, k, repeats)?;
    let matrix = materialize(dataset, deadline, &FeatureSchema::selected())?;

    let mut points = Vec::new();
    for &m in &grid.trees {
        for &p in &grid.depths {
            for &a in &grid.rates {
                let cfg = TrainConfig {
                    trees: m,
                    max_depth: p,
                    learning_rate: a,
                    ..base.clone()
                };
                let cv = cv_on_matrix(&matrix, &cfg, k, repeats, seed)?;
                points.push(SweepPoint {
                    deadline,
                    config: cfg,
                    mean: cv.mean,
                    std: cv.std,
                });
            }
        }
    }
    Ok(SweepResult {
        axis: SweepAxis::Grid {
            trees: grid.trees.clone(),
            depths: grid.depths.clone(),
            rates: grid.rates.clone(),
        },
        points,
        k,
        repeats,
        seed,
    })
}
