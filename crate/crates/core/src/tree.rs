//! Regression trees with exhaustive squared-error split search.
//!
//! A tree recursively partitions rows by axis-aligned thresholds. Split
//! candidates are the midpoints between consecutive distinct sorted
//! values of a column; the chosen split minimizes the summed squared
//! error of the two child regions around their means. Ties break toward
//! the smallest feature index, then the smallest threshold, which makes
//! training fully deterministic. Loss comparisons are exact — no epsilon.
//!
//! Rows sort once per fit; node partitions are stable, so every scan
//! visits values in (value, original row) order no matter how deep the
//! node sits. This keeps results identical to the naive sort-per-node
//! search while doing O(d·n) work per level.

use crate::error::{Error, Result};

/// One node of a fitted tree. Routing sends `x` left iff
/// `x[feature_index] <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature_index: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Mean target of the rows routed here at fit time.
        value: f64,
        sample_count: usize,
    },
}

/// A fitted regression tree over `feature_count` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    root: TreeNode,
    depth_limit: usize,
    min_region_size: usize,
    feature_count: usize,
}

impl RegressionTree {
    pub(crate) fn from_parts(
        root: TreeNode,
        depth_limit: usize,
        min_region_size: usize,
        feature_count: usize,
    ) -> Self {
        RegressionTree {
            root,
            depth_limit,
            min_region_size,
            feature_count,
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn depth_limit(&self) -> usize {
        self.depth_limit
    }

    pub fn min_region_size(&self) -> usize {
        self.min_region_size
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    /// Route a sample to its leaf and return the leaf value.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count {
            return Err(Error::DimensionMismatch {
                expected: self.feature_count,
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Internal {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature_index] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }
}

/// The winning threshold for one column, together with its squared loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSplit {
    pub threshold: f64,
    pub loss: f64,
}

/// Scan `(value, target)` pairs already sorted by value. Returns the
/// midpoint threshold minimizing `SSE(left) + SSE(right)`, or `None`
/// when the column holds a single distinct value. A single left-to-right
/// prefix pass; ties keep the first (smallest) threshold.
fn scan_sorted(values: &[f64], targets: &[f64]) -> Option<BestSplit> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mut total_sum = 0.0;
    let mut total_sq = 0.0;
    for &t in targets {
        total_sum += t;
        total_sq += t * t;
    }
    let mut left_sum = 0.0;
    let mut left_sq = 0.0;
    let mut best: Option<BestSplit> = None;
    for i in 0..n - 1 {
        let t = targets[i];
        left_sum += t;
        left_sq += t * t;
        if values[i] == values[i + 1] {
            continue;
        }
        let n_left = (i + 1) as f64;
        let n_right = (n - i - 1) as f64;
        let sse_left = left_sq - left_sum * left_sum / n_left;
        let right_sum = total_sum - left_sum;
        let right_sq = total_sq - left_sq;
        let sse_right = right_sq - right_sum * right_sum / n_right;
        let loss = sse_left + sse_right;
        if best.is_none_or(|b| loss < b.loss) {
            best = Some(BestSplit {
                threshold: (values[i] + values[i + 1]) / 2.0,
                loss,
            });
        }
    }
    best
}

/// Best squared-error split of one column. Candidate thresholds are the
/// midpoints between consecutive distinct sorted values; returns `None`
/// when no candidate exists. Ties on loss break toward the smallest
/// threshold.
pub fn best_split(column: &[f64], targets: &[f64]) -> Result<Option<BestSplit>> {
    if column.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: column.len(),
            right: targets.len(),
        });
    }
    let mut order: Vec<u32> = (0..column.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        column[a as usize]
            .total_cmp(&column[b as usize])
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&r| column[r as usize]).collect();
    let sorted_targets: Vec<f64> = order.iter().map(|&r| targets[r as usize]).collect();
    Ok(scan_sorted(&values, &sorted_targets))
}

/// Per-column row orderings shared by every tree of a boosting run.
/// `by_feature[j]` holds all row ids sorted by `(column j value, row id)`.
pub(crate) struct Presorted {
    by_feature: Vec<Vec<u32>>,
}

pub(crate) fn presort(x: &[f64], rows: usize, cols: usize) -> Presorted {
    let mut by_feature = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut order: Vec<u32> = (0..rows as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            x[a as usize * cols + j]
                .total_cmp(&x[b as usize * cols + j])
                .then(a.cmp(&b))
        });
        by_feature.push(order);
    }
    Presorted { by_feature }
}

struct NodeRows {
    /// Node rows in ascending original order.
    rows: Vec<u32>,
    /// Node rows per feature, in that feature's sorted order.
    by_feature: Vec<Vec<u32>>,
}

struct FitCtx<'a> {
    x: &'a [f64],
    cols: usize,
    targets: &'a [f64],
    max_depth: usize,
    /// A region smaller than this cannot split: `max(H, 2)`.
    min_split: usize,
    scratch_vals: Vec<f64>,
    scratch_tgts: Vec<f64>,
}

fn grow(ctx: &mut FitCtx<'_>, node: NodeRows, depth: usize) -> TreeNode {
    let n = node.rows.len();
    let mut sum = 0.0;
    for &r in &node.rows {
        sum += ctx.targets[r as usize];
    }
    let mean = sum / n as f64;

    let first = ctx.targets[node.rows[0] as usize];
    let constant = node.rows.iter().all(|&r| ctx.targets[r as usize] == first);
    if depth >= ctx.max_depth || n < ctx.min_split || constant {
        return TreeNode::Leaf {
            value: mean,
            sample_count: n,
        };
    }

    let mut best: Option<(f64, usize, f64)> = None;
    for j in 0..ctx.cols {
        ctx.scratch_vals.clear();
        ctx.scratch_tgts.clear();
        for &r in &node.by_feature[j] {
            ctx.scratch_vals.push(ctx.x[r as usize * ctx.cols + j]);
            ctx.scratch_tgts.push(ctx.targets[r as usize]);
        }
        if let Some(s) = scan_sorted(&ctx.scratch_vals, &ctx.scratch_tgts) {
            if best.is_none_or(|(loss, _, _)| s.loss < loss) {
                best = Some((s.loss, j, s.threshold));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return TreeNode::Leaf {
            value: mean,
            sample_count: n,
        };
    };

    let goes_left = |r: u32| ctx.x[r as usize * ctx.cols + feature] <= threshold;
    let mut rows_left = Vec::new();
    let mut rows_right = Vec::new();
    for &r in &node.rows {
        if goes_left(r) {
            rows_left.push(r);
        } else {
            rows_right.push(r);
        }
    }
    let mut bf_left = Vec::with_capacity(ctx.cols);
    let mut bf_right = Vec::with_capacity(ctx.cols);
    for list in node.by_feature {
        let mut l = Vec::with_capacity(rows_left.len());
        let mut r = Vec::with_capacity(rows_right.len());
        for row in list {
            if goes_left(row) {
                l.push(row);
            } else {
                r.push(row);
            }
        }
        bf_left.push(l);
        bf_right.push(r);
    }

    let left = grow(
        ctx,
        NodeRows {
            rows: rows_left,
            by_feature: bf_left,
        },
        depth + 1,
    );
    let right = grow(
        ctx,
        NodeRows {
            rows: rows_right,
            by_feature: bf_right,
        },
        depth + 1,
    );
    TreeNode::Internal {
        feature_index: feature,
        threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

pub(crate) fn fit_with_presorted(
    x: &[f64],
    rows: usize,
    cols: usize,
    targets: &[f64],
    max_depth: usize,
    min_region: usize,
    pre: &Presorted,
) -> Result<RegressionTree> {
    if rows == 0 {
        return Err(Error::EmptyInput);
    }
    if targets.len() != rows {
        return Err(Error::LengthMismatch {
            left: targets.len(),
            right: rows,
        });
    }
    if x.len() != rows * cols {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: rows * cols,
        });
    }
    let mut ctx = FitCtx {
        x,
        cols,
        targets,
        max_depth,
        min_split: min_region.max(2),
        scratch_vals: Vec::with_capacity(rows),
        scratch_tgts: Vec::with_capacity(rows),
    };
    let root = grow(
        &mut ctx,
        NodeRows {
            rows: (0..rows as u32).collect(),
            by_feature: pre.by_feature.clone(),
        },
        0,
    );
    Ok(RegressionTree::from_parts(
        root, max_depth, min_region, cols,
    ))
}

/// Fit a regression tree on a flat row-major matrix.
///
/// A node becomes a leaf (with the mean target as value) when it reaches
/// `max_depth`, holds fewer than `max(min_region, 2)` rows, has constant
/// targets, or no column admits a split.
pub fn fit_regression_tree(
    x: &[f64],
    rows: usize,
    cols: usize,
    targets: &[f64],
    max_depth: usize,
    min_region: usize,
) -> Result<RegressionTree> {
    if rows == 0 {
        return Err(Error::EmptyInput);
    }
    if x.len() != rows * cols {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: rows * cols,
        });
    }
    let pre = presort(x, rows, cols);
    fit_with_presorted(x, rows, cols, targets, max_depth, min_region, &pre)
}
