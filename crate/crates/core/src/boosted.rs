//! Gradient-boosted regression trees with second-order (Newton) leaf values.
//!
//! Trees grow level by level with an exact greedy split search over midpoints
//! between consecutive distinct feature values. The split score is
//! `G_L^2/H_L + G_R^2/H_R - G^2/H` and a leaf predicts `-G/H`, with no
//! regularization terms. Squared loss gives point forecasts; pinball loss
//! with a unit surrogate hessian gives quantile forecasts.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::metrics::{pinball_grad_unchecked, pinball_unchecked, ForecastDistribution};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loss {
    Squared,
    Pinball { tau: f64 },
}

impl Loss {
    fn validate(&self) -> Result<()> {
        match *self {
            Loss::Pinball { tau } if !(tau > 0.0 && tau < 1.0) => {
                Err(Error::InvalidArgument(format!("pinball level {tau} outside (0, 1)")))
            }
            _ => Ok(()),
        }
    }

    /// Mean loss: squared error (halved) or pinball.
    pub fn mean_loss(&self, y: &[f64], pred: &[f64]) -> f64 {
        let total: f64 = match *self {
            Loss::Squared => y.iter().zip(pred).map(|(a, b)| 0.5 * (b - a) * (b - a)).sum(),
            Loss::Pinball { tau } => y.iter().zip(pred).map(|(&a, &b)| pinball_unchecked(a, b, tau)).sum(),
        };
        total / y.len().max(1) as f64
    }

    /// Validation metric used for early stopping: RMSE or mean pinball.
    pub fn validation_metric(&self, y: &[f64], pred: &[f64]) -> f64 {
        match self {
            Loss::Squared => libm::sqrt(2.0 * self.mean_loss(y, pred)),
            Loss::Pinball { .. } => self.mean_loss(y, pred),
        }
    }
}

/// First and second derivatives of the loss with respect to each prediction.
pub fn loss_gradients(loss: Loss, y: &[f64], pred: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if y.len() != pred.len() {
        return Err(Error::LengthMismatch {
            expected: y.len(),
            actual: pred.len(),
        });
    }
    loss.validate()?;
    let grad = match loss {
        Loss::Squared => y.iter().zip(pred).map(|(a, b)| b - a).collect(),
        Loss::Pinball { tau } => y
            .iter()
            .zip(pred)
            .map(|(&a, &b)| pinball_grad_unchecked(a, b, tau))
            .collect(),
    };
    Ok((grad, vec![1.0; y.len()]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    /// Rows with `x[feature] < threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    /// `nodes[0]` is the root.
    pub nodes: Vec<TreeNode>,
    pub max_depth: usize,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if row[feature] < threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }
}

/// Row-major feature values plus, per feature, row indices sorted by value.
/// Built once and shared by every tree of an ensemble.
struct SortedColumns<'a> {
    data: &'a [f64],
    n_rows: usize,
    n_features: usize,
    order: Vec<Vec<u32>>,
}

impl<'a> SortedColumns<'a> {
    fn new(data: &'a [f64], n_rows: usize, n_features: usize) -> Self {
        let order = (0..n_features)
            .map(|f| {
                let mut idx: Vec<u32> = (0..n_rows as u32).collect();
                idx.sort_by(|&a, &b| {
                    data[a as usize * n_features + f]
                        .total_cmp(&data[b as usize * n_features + f])
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Self {
            data,
            n_rows,
            n_features,
            order,
        }
    }

    fn value(&self, row: usize, feature: usize) -> f64 {
        self.data[row * self.n_features + feature]
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Stats {
    grad: f64,
    hess: f64,
    count: usize,
}

impl Stats {
    fn score(&self) -> f64 {
        if self.hess > 0.0 {
            self.grad * self.grad / self.hess
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

const UNASSIGNED: u32 = u32::MAX;

fn grow_tree(
    cols: &SortedColumns<'_>,
    grad: &[f64],
    hess: &[f64],
    max_depth: usize,
    min_samples_leaf: usize,
) -> RegressionTree {
    let min_leaf = min_samples_leaf.max(1);
    let mut nodes: Vec<TreeNode> = vec![TreeNode::Leaf { value: 0.0 }];
    // Frontier node id per row, or UNASSIGNED once the row sits in a finished leaf.
    let mut slot_of_row = vec![0u32; cols.n_rows];
    let mut frontier: Vec<usize> = vec![0];
    let mut stats = vec![Stats::default()];
    for r in 0..cols.n_rows {
        stats[0].grad += grad[r];
        stats[0].hess += hess[r];
        stats[0].count += 1;
    }

    for depth in 0..=max_depth {
        let mut best: Vec<Option<Candidate>> = vec![None; frontier.len()];
        if depth < max_depth {
            let mut left = vec![Stats::default(); frontier.len()];
            let mut last_value = vec![f64::NAN; frontier.len()];
            for f in 0..cols.n_features {
                left.iter_mut().for_each(|s| *s = Stats::default());
                for &r in &cols.order[f] {
                    let r = r as usize;
                    let slot = slot_of_row[r];
                    if slot == UNASSIGNED {
                        continue;
                    }
                    let slot = slot as usize;
                    let x = cols.value(r, f);
                    let l = left[slot];
                    let parent = stats[slot];
                    if l.count >= min_leaf && parent.count - l.count >= min_leaf && x > last_value[slot] {
                        let right = Stats {
                            grad: parent.grad - l.grad,
                            hess: parent.hess - l.hess,
                            count: parent.count - l.count,
                        };
                        let gain = l.score() + right.score() - parent.score();
                        // Strict comparison keeps the lowest feature, then lowest threshold, on ties.
                        if best[slot].is_none_or(|b| gain > b.gain) {
                            let lo = last_value[slot];
                            let mut threshold = lo + (x - lo) / 2.0;
                            if threshold <= lo {
                                threshold = x;
                            }
                            best[slot] = Some(Candidate {
                                gain,
                                feature: f,
                                threshold,
                            });
                        }
                    }
                    left[slot].grad += grad[r];
                    left[slot].hess += hess[r];
                    left[slot].count += 1;
                    last_value[slot] = x;
                }
                last_value.iter_mut().for_each(|v| *v = f64::NAN);
            }
        }

        let mut next_frontier = Vec::new();
        let mut next_stats = Vec::new();
        // New frontier slot ids for (left, right) children of each splitting slot.
        let mut child_slots: Vec<Option<(u32, u32)>> = vec![None; frontier.len()];
        for (slot, &node) in frontier.iter().enumerate() {
            let s = stats[slot];
            let parent_score = s.score();
            match best[slot] {
                Some(c) if c.gain > 1e-12 * parent_score.max(1e-12) => {
                    let left_id = nodes.len();
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes.push(TreeNode::Leaf { value: 0.0 });
                    nodes[node] = TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: left_id,
                        right: left_id + 1,
                    };
                    child_slots[slot] = Some((next_frontier.len() as u32, next_frontier.len() as u32 + 1));
                    next_frontier.push(left_id);
                    next_frontier.push(left_id + 1);
                    next_stats.push(Stats::default());
                    next_stats.push(Stats::default());
                }
                _ => {
                    nodes[node] = TreeNode::Leaf {
                        value: if s.hess > 0.0 { -s.grad / s.hess } else { 0.0 },
                    };
                }
            }
        }
        if next_frontier.is_empty() {
            break;
        }
        for r in 0..cols.n_rows {
            let slot = slot_of_row[r];
            if slot == UNASSIGNED {
                continue;
            }
            slot_of_row[r] = match child_slots[slot as usize] {
                None => UNASSIGNED,
                Some((l, rt)) => {
                    let TreeNode::Split { feature, threshold, .. } = nodes[frontier[slot as usize]] else {
                        unreachable!("splitting slot points at a split node")
                    };
                    let child = if cols.value(r, feature) < threshold { l } else { rt };
                    let st = &mut next_stats[child as usize];
                    st.grad += grad[r];
                    st.hess += hess[r];
                    st.count += 1;
                    child
                }
            };
        }
        frontier = next_frontier;
        stats = next_stats;
    }
    RegressionTree { nodes, max_depth }
}

/// Fit one tree to gradients and hessians over the rows of `x`.
pub fn fit_tree(
    x: &FeatureMatrix,
    grad: &[f64],
    hess: &[f64],
    max_depth: usize,
    min_samples_leaf: usize,
) -> Result<RegressionTree> {
    let n = x.n_rows();
    if grad.len() != n || hess.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: grad.len().min(hess.len()),
        });
    }
    if n < 2 * min_samples_leaf.max(1) {
        return Err(Error::TooShort {
            needed: 2 * min_samples_leaf.max(1) - 1,
            actual: n,
        });
    }
    let cols = SortedColumns::new(x.data(), n, x.n_features());
    Ok(grow_tree(&cols, grad, hess, max_depth, min_samples_leaf))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub early_stopping_rounds: usize,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            n_estimators: 1000,
            learning_rate: 0.05,
            max_depth: 6,
            min_samples_leaf: 20,
            early_stopping_rounds: 10,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate {} outside (0, 1]",
                self.learning_rate
            )));
        }
        if self.early_stopping_rounds == 0 {
            return Err(Error::InvalidArgument("early_stopping_rounds must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub feature_names: Vec<String>,
    pub params: GbdtParams,
    pub loss: Loss,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
    /// Number of leading trees used for prediction.
    pub best_iteration: usize,
    /// Validation metric after 0, 1, ... trees.
    pub validation_history: Vec<f64>,
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn empirical_quantile(values: &[f64], tau: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = tau * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Boost trees on the training set, tracking the validation metric after every
/// round and stopping once it has not improved for `early_stopping_rounds`.
pub fn gbdt_fit(
    x_train: &FeatureMatrix,
    y_train: &[f64],
    x_val: &FeatureMatrix,
    y_val: &[f64],
    loss: Loss,
    params: GbdtParams,
) -> Result<GbdtModel> {
    params.validate()?;
    loss.validate()?;
    if x_train.n_rows() == 0 || x_val.n_rows() == 0 {
        return Err(Error::EmptySeries);
    }
    if y_train.len() != x_train.n_rows() || y_val.len() != x_val.n_rows() {
        return Err(Error::LengthMismatch {
            expected: x_train.n_rows(),
            actual: y_train.len(),
        });
    }
    if x_val.feature_names() != x_train.feature_names() {
        return Err(Error::Shape("validation features differ from training features".into()));
    }
    let base_score = match loss {
        Loss::Squared => y_train.iter().sum::<f64>() / y_train.len() as f64,
        Loss::Pinball { tau } => empirical_quantile(y_train, tau),
    };
    let cols = SortedColumns::new(x_train.data(), x_train.n_rows(), x_train.n_features());
    let mut pred_train = vec![base_score; y_train.len()];
    let mut pred_val = vec![base_score; y_val.len()];
    let mut history = vec![loss.validation_metric(y_val, &pred_val)];
    let mut best_iteration = 0;
    let mut trees = Vec::new();

    for round in 1..=params.n_estimators {
        let (grad, hess) = loss_gradients(loss, y_train, &pred_train)?;
        let tree = grow_tree(&cols, &grad, &hess, params.max_depth, params.min_samples_leaf);
        for (r, p) in pred_train.iter_mut().enumerate() {
            *p += params.learning_rate * tree.predict_row(x_train.row(r));
        }
        for (r, p) in pred_val.iter_mut().enumerate() {
            *p += params.learning_rate * tree.predict_row(x_val.row(r));
        }
        trees.push(tree);
        let metric = loss.validation_metric(y_val, &pred_val);
        history.push(metric);
        if metric < history[best_iteration] {
            best_iteration = round;
        } else if round - best_iteration >= params.early_stopping_rounds {
            break;
        }
    }
    Ok(GbdtModel {
        feature_names: x_train.feature_names().to_vec(),
        params,
        loss,
        base_score,
        learning_rate: params.learning_rate,
        trees,
        best_iteration,
        validation_history: history,
    })
}

impl GbdtModel {
    /// `base_score + learning_rate * sum(tree(x))` over the first `best_iteration` trees.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base_score
            + self.trees[..self.best_iteration]
                .iter()
                .map(|t| self.learning_rate * t.predict_row(row))
                .sum::<f64>()
    }
}

/// Predict every row of `x`, whose columns are matched to the training features by name.
pub fn gbdt_predict(model: &GbdtModel, x: &FeatureMatrix) -> Result<Vec<f64>> {
    let x = if x.feature_names() == model.feature_names.as_slice() {
        x.clone()
    } else {
        x.select(&model.feature_names)?
    };
    Ok((0..x.n_rows()).map(|r| model.predict_row(x.row(r))).collect())
}

/// One pinball model per level; rows are sorted to remove quantile crossing.
pub fn gbdt_predict_quantiles(models: &[GbdtModel], x: &FeatureMatrix) -> Result<ForecastDistribution> {
    let levels = models
        .iter()
        .map(|m| match m.loss {
            Loss::Pinball { tau } => Ok(tau),
            Loss::Squared => Err(Error::InvalidArgument("quantile ensemble needs pinball models".into())),
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = models.iter().map(|m| gbdt_predict(m, x)).collect::<Result<Vec<_>>>()?;
    ForecastDistribution::from_unsorted(x.timestamps().to_vec(), levels, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
        let f = rows.first().map_or(0, Vec::len);
        FeatureMatrix::new(
            (0..f).map(|i| format!("x{i}")).collect(),
            (0..rows.len() as i64).map(|i| i * 3600).collect(),
            rows.iter().flatten().copied().collect(),
            vec![0.0; rows.len()],
        )
        .unwrap()
    }

    /// Brute force: best (gain, feature, threshold) over all splits of the root.
    fn brute_force_root(rows: &[Vec<f64>], grad: &[f64], min_leaf: usize) -> Option<(f64, usize, f64)> {
        let score = |idx: &[usize]| {
            let g: f64 = idx.iter().map(|&i| grad[i]).sum();
            g * g / idx.len() as f64
        };
        let all: Vec<usize> = (0..rows.len()).collect();
        let parent = score(&all);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..rows[0].len() {
            let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for w in values.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| rows[i][f] < t);
                if l.len() < min_leaf || r.len() < min_leaf {
                    continue;
                }
                let gain = score(&l) + score(&r) - parent;
                if best.is_none_or(|b| gain > b.0) {
                    best = Some((gain, f, t));
                }
            }
        }
        best
    }

    #[test]
    fn squared_and_pinball_gradients() {
        let (g, h) = loss_gradients(Loss::Squared, &[3.0], &[5.0]).unwrap();
        assert_eq!((g[0], h[0]), (2.0, 1.0));
        let (g, _) = loss_gradients(Loss::Pinball { tau: 0.9 }, &[10.0], &[8.0]).unwrap();
        assert_eq!(g[0], -0.9);
        let y = [1.0, 5.0, 3.0];
        let pred = [2.0, 4.0, 3.0];
        let (g, _) = loss_gradients(Loss::Pinball { tau: 0.5 }, &y, &pred).unwrap();
        assert_eq!(g, vec![0.5, -0.5, 0.5]);
        assert!(loss_gradients(Loss::Pinball { tau: 1.5 }, &y, &pred).is_err());
    }

    #[test]
    fn separated_gradients_split_at_midpoint() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * 7 % 10) as f64]).collect();
        let grad: Vec<f64> = (0..10).map(|i| if i < 5 { -1.0 } else { 1.0 }).collect();
        let tree = fit_tree(&matrix(&rows), &grad, &[1.0; 10], 1, 1).unwrap();
        let (bf_gain, bf_f, bf_t) = brute_force_root(&rows, &grad, 1).unwrap();
        assert_eq!((bf_f, bf_t), (0, 4.5));
        assert!((bf_gain - 10.0).abs() < 1e-12);
        match tree.nodes[0] {
            TreeNode::Split { feature, threshold, .. } => assert_eq!((feature, threshold), (0, 4.5)),
            other => panic!("expected split, got {other:?}"),
        }
        assert_eq!(tree.predict_row(&[0.0, 0.0]), 1.0);
        assert_eq!(tree.predict_row(&[9.0, 0.0]), -1.0);
    }

    #[test]
    fn constant_gradient_gives_single_leaf() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let tree = fit_tree(&matrix(&rows), &[2.0; 8], &[1.0; 8], 4, 1).unwrap();
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { value: -2.0 }]);
    }

    #[test]
    fn xor_gradients_have_no_root_gain() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        let grad = [1.0, -1.0, -1.0, 1.0];
        let (gain, _, _) = brute_force_root(&rows, &grad, 1).unwrap();
        assert_eq!(gain, 0.0);
        let tree = fit_tree(&matrix(&rows), &grad, &[1.0; 4], 1, 1).unwrap();
        assert_eq!(tree.nodes, vec![TreeNode::Leaf { value: 0.0 }]);
    }

    #[test]
    fn root_split_matches_brute_force_on_random_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..40)
                .map(|_| (0..3).map(|_| rng.random_range(0..8) as f64).collect())
                .collect();
            let grad: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
            let tree = fit_tree(&matrix(&rows), &grad, &[1.0; 40], 1, 3).unwrap();
            let bf = brute_force_root(&rows, &grad, 3).unwrap();
            match tree.nodes[0] {
                TreeNode::Split { feature, threshold, .. } => assert_eq!((feature, threshold), (bf.1, bf.2)),
                TreeNode::Leaf { .. } => assert!(bf.0 <= 1e-12),
            }
        }
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let mut grad = vec![0.0; 10];
        grad[0] = 5.0;
        let tree = fit_tree(&matrix(&rows), &grad, &[1.0; 10], 3, 3).unwrap();
        let m = matrix(&rows);
        let mut leaf_counts = alloc::collections::BTreeMap::new();
        for r in 0..10 {
            *leaf_counts.entry(tree.predict_row(m.row(r)).to_bits()).or_insert(0) += 1;
        }
        assert!(leaf_counts.values().all(|&c| c >= 3));
        assert!(tree.depth() <= 3);
        assert!(fit_tree(&m.rows(0..5), &grad[..5], &[1.0; 5], 3, 3).is_err());
    }

    #[test]
    fn zero_trees_predict_base_score() {
        let model = GbdtModel {
            feature_names: vec!["x0".to_string()],
            params: GbdtParams::default(),
            loss: Loss::Squared,
            base_score: 3.25,
            learning_rate: 0.05,
            trees: vec![],
            best_iteration: 0,
            validation_history: vec![],
        };
        assert_eq!(
            gbdt_predict(&model, &matrix(&[vec![1.0], vec![2.0]])).unwrap(),
            vec![3.25, 3.25]
        );
    }

    #[test]
    fn single_tree_composition() {
        let model = GbdtModel {
            feature_names: vec!["x0".to_string()],
            params: GbdtParams::default(),
            loss: Loss::Squared,
            base_score: 1.0,
            learning_rate: 0.05,
            trees: vec![RegressionTree {
                nodes: vec![TreeNode::Leaf { value: -2.0 }],
                max_depth: 0,
            }],
            best_iteration: 1,
            validation_history: vec![],
        };
        let p = gbdt_predict(&model, &matrix(&[vec![0.0]])).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn unknown_feature_is_rejected() {
        let model = GbdtModel {
            feature_names: vec!["lag_1hr".to_string()],
            params: GbdtParams::default(),
            loss: Loss::Squared,
            base_score: 0.0,
            learning_rate: 0.05,
            trees: vec![],
            best_iteration: 0,
            validation_history: vec![],
        };
        assert_eq!(
            gbdt_predict(&model, &matrix(&[vec![0.0]])).unwrap_err(),
            Error::UnknownFeature("lag_1hr".into())
        );
    }

    #[test]
    fn quantile_ensemble_is_sorted() {
        let q = |tau: f64, base: f64| GbdtModel {
            feature_names: vec!["x0".to_string()],
            params: GbdtParams::default(),
            loss: Loss::Pinball { tau },
            base_score: base,
            learning_rate: 0.05,
            trees: vec![],
            best_iteration: 0,
            validation_history: vec![],
        };
        let models = [q(0.05, 0.3), q(0.5, 0.2), q(0.95, 0.9)];
        let d = gbdt_predict_quantiles(&models, &matrix(&[vec![0.0]])).unwrap();
        assert_eq!(d.row(0), vec![0.2, 0.3, 0.9]);
    }

    #[test]
    fn squared_loss_training_loss_never_increases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> = (0..200)
            .map(|_| vec![rng.random_range(0.0..10.0), rng.random_range(0.0..1.0)])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| libm::sin(r[0]) * 3.0 + r[1] + rng.random_range(-0.5..0.5))
            .collect();
        let x = matrix(&rows);
        let params = GbdtParams {
            n_estimators: 50,
            min_samples_leaf: 5,
            max_depth: 3,
            early_stopping_rounds: 1000,
            ..Default::default()
        };
        let model = gbdt_fit(&x, &y, &x, &y, Loss::Squared, params).unwrap();
        // Validation set = training set here, so the history is the training RMSE.
        assert!(model.validation_history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }
}
