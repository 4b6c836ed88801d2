//! Gradient boosted decision trees for the binary logistic objective.
//!
//! Each round computes per-sample gradients `g = p - y` and hessians
//! `h = p (1 - p)`, both multiplied by `scale_pos_weight` for positive
//! samples, then grows one tree level by level with an exact greedy split
//! search over every stored feature value. A split sends `x < threshold`
//! to the left child; absent sparse entries are zeros and follow the same
//! rule. Leaves hold `-G / (H + lambda)` and the ensemble adds
//! `eta * leaf` per tree to `logit(base_score)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_binary_targets, logit, sigmoid};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    /// Preset label recorded in saved models.
    pub preset: String,
    pub scale_pos_weight: f64,
    pub reg_lambda: f64,
    pub eta: f64,
    pub max_depth: usize,
    pub n_trees: usize,
    pub min_child_hessian: f64,
    pub base_score: f64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig::xgb_like()
    }
}

impl GbdtConfig {
    pub fn xgb_like() -> Self {
        GbdtConfig {
            preset: "xgb-like".into(),
            scale_pos_weight: 0.8,
            reg_lambda: 3.0,
            eta: 0.3,
            max_depth: 6,
            n_trees: 100,
            min_child_hessian: 1.0,
            base_score: 0.5,
        }
    }

    /// Same parameters as `xgb_like`; ordered boosting is not modelled.
    pub fn cb_like() -> Self {
        GbdtConfig {
            preset: "cb-like".into(),
            ..GbdtConfig::xgb_like()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "xgb-like" | "xgb" => Some(GbdtConfig::xgb_like()),
            "cb-like" | "cb" => Some(GbdtConfig::cb_like()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = self.scale_pos_weight > 0.0 && self.reg_lambda > 0.0 && self.eta > 0.0;
        if !positive || self.max_depth == 0 || self.min_child_hessian.is_nan() || self.min_child_hessian < 0.0 {
            return Err(Error::InvalidInput(format!("invalid GBDT parameters: {self:?}")));
        }
        if !(self.base_score > 0.0 && self.base_score < 1.0) {
            return Err(Error::InvalidInput(format!(
                "base_score must lie in (0, 1), got {}",
                self.base_score
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
        sum_grad: f64,
        sum_hess: f64,
    },
    Leaf {
        weight: f64,
        sum_grad: f64,
        sum_hess: f64,
    },
}

impl Node {
    pub fn sums(&self) -> (f64, f64) {
        match *self {
            Node::Split { sum_grad, sum_hess, .. } | Node::Leaf { sum_grad, sum_hess, .. } => (sum_grad, sum_hess),
        }
    }
}

/// A regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Index of the leaf `x` falls into.
    pub fn leaf_index(&self, x: &FeatureVector) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x.get(feature) < threshold { left } else { right };
                }
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn leaf_weight(&self, x: &FeatureVector) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { weight, .. } => weight,
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub config: GbdtConfig,
    pub fingerprint: String,
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl GbdtModel {
    fn check(&self, x: &FeatureVector) -> Result<()> {
        if x.fingerprint() != self.fingerprint || x.len() != self.n_features {
            return Err(Error::LayoutMismatch {
                expected: self.fingerprint.clone(),
                found: x.fingerprint().to_string(),
            });
        }
        Ok(())
    }

    pub fn margin(&self, x: &FeatureVector) -> Result<f64> {
        self.check(x)?;
        let mut m = logit(self.config.base_score);
        for t in &self.trees {
            m += self.config.eta * t.leaf_weight(x);
        }
        Ok(m)
    }

    pub fn predict_proba(&self, x: &FeatureVector) -> Result<f64> {
        self.margin(x).map(sigmoid)
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<bool> {
        self.predict_proba(x).map(|p| p >= 0.5)
    }
}

/// Per-round training diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GbdtTrace {
    /// Weighted mean log-loss before the first tree and after each tree.
    pub loss: Vec<f64>,
}

/// Sample weight: `scale_pos_weight` for positives, 1 otherwise.
pub fn sample_weight(label: bool, scale_pos_weight: f64) -> f64 {
    if label {
        scale_pos_weight
    } else {
        1.0
    }
}

/// Weighted gradient and hessian of the log-loss at margin `m`.
pub fn gradient_pair(margin: f64, label: bool, scale_pos_weight: f64) -> (f64, f64) {
    let p = sigmoid(margin);
    let w = sample_weight(label, scale_pos_weight);
    let y = if label { 1.0 } else { 0.0 };
    ((p - y) * w, p * (1.0 - p) * w)
}

pub fn weighted_log_loss(margins: &[f64], y: &[bool], scale_pos_weight: f64) -> f64 {
    let mut total = 0.0;
    let mut weight = 0.0;
    for (&m, &label) in margins.iter().zip(y) {
        let w = sample_weight(label, scale_pos_weight);
        // -log(sigmoid(m)) for positives, -log(1 - sigmoid(m)) for negatives
        let z = if label { -m } else { m };
        let loss = if z > 0.0 {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        };
        total += w * loss;
        weight += w;
    }
    total / weight
}

/// Feature values sorted ascending. Sparse columns omit zero rows.
struct Column {
    entries: Vec<(f64, u32)>,
    complete: bool,
}

fn build_columns(x: &FeatureMatrix) -> Vec<Column> {
    let mut cols: Vec<Vec<(f64, u32)>> = vec![Vec::new(); x.n_cols()];
    for (r, row) in x.rows().iter().enumerate() {
        row.for_each(|j, v| {
            cols[j].push((v, r as u32));
        });
    }
    let n = x.n_rows();
    cols.into_par_iter()
        .map(|mut entries| {
            entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let complete = entries.len() == n;
            if !complete {
                entries.retain(|e| e.0 != 0.0);
            }
            Column { entries, complete }
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

#[derive(Debug, Clone, Copy)]
struct OpenNode {
    id: usize,
    grad: f64,
    hess: f64,
    count: usize,
}

const NO_SLOT: u32 = u32::MAX;

struct SplitParams {
    lambda: f64,
    min_child_hessian: f64,
}

impl SplitParams {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.lambda)
    }

    fn gain(&self, gl: f64, hl: f64, node: &OpenNode) -> Option<f64> {
        let (gr, hr) = (node.grad - gl, node.hess - hl);
        if hl < self.min_child_hessian || hr < self.min_child_hessian {
            return None;
        }
        Some(0.5 * (self.score(gl, hl) + self.score(gr, hr) - self.score(node.grad, node.hess)))
    }
}

fn split_threshold(lower: f64, upper: f64) -> f64 {
    let mid = lower + (upper - lower) / 2.0;
    if mid > lower && mid <= upper {
        mid
    } else {
        upper
    }
}

/// Best split of every open node along one feature column.
fn scan_column(
    feature: usize,
    col: &Column,
    slots: &[u32],
    open: &[OpenNode],
    grads: &[(f64, f64)],
    params: &SplitParams,
) -> Vec<Option<Candidate>> {
    let k = open.len();
    let mut gl = vec![0.0; k];
    let mut hl = vec![0.0; k];
    let mut last: Vec<Option<f64>> = vec![None; k];
    let mut best: Vec<Option<Candidate>> = vec![None; k];

    let consider = |slot: usize, value: f64, gl: f64, hl: f64, last: Option<f64>, best: &mut Vec<Option<Candidate>>| {
        if let Some(lv) = last {
            if value > lv {
                if let Some(gain) = params.gain(gl, hl, &open[slot]) {
                    if best[slot].is_none_or(|b| gain > b.gain) {
                        best[slot] = Some(Candidate {
                            gain,
                            feature,
                            threshold: split_threshold(lv, value),
                        });
                    }
                }
            }
        }
    };

    // zero group of each node in a sparse column: node totals minus stored
    let zero_group: Option<Vec<(f64, f64, usize)>> = (!col.complete).then(|| {
        let mut stored = vec![(0.0, 0.0, 0usize); k];
        for &(_, r) in &col.entries {
            let s = slots[r as usize];
            if s != NO_SLOT {
                let e = &mut stored[s as usize];
                e.0 += grads[r as usize].0;
                e.1 += grads[r as usize].1;
                e.2 += 1;
            }
        }
        open.iter()
            .zip(stored)
            .map(|(n, (g, h, c))| (n.grad - g, n.hess - h, n.count - c))
            .collect()
    });

    let first_non_negative = col.entries.partition_point(|e| e.0 < 0.0);
    let (negative, rest) = col.entries.split_at(first_non_negative);
    let visit = |entries: &[(f64, u32)],
                 gl: &mut [f64],
                 hl: &mut [f64],
                 last: &mut [Option<f64>],
                 best: &mut Vec<Option<Candidate>>| {
        for &(value, r) in entries {
            let s = slots[r as usize];
            if s == NO_SLOT {
                continue;
            }
            let s = s as usize;
            consider(s, value, gl[s], hl[s], last[s], best);
            gl[s] += grads[r as usize].0;
            hl[s] += grads[r as usize].1;
            last[s] = Some(value);
        }
    };
    visit(negative, &mut gl, &mut hl, &mut last, &mut best);
    if let Some(zeros) = &zero_group {
        for (s, &(g, h, count)) in zeros.iter().enumerate() {
            if count == 0 {
                continue;
            }
            consider(s, 0.0, gl[s], hl[s], last[s], &mut best);
            gl[s] += g;
            hl[s] += h;
            last[s] = Some(0.0);
        }
    }
    visit(rest, &mut gl, &mut hl, &mut last, &mut best);
    best
}

fn grow_tree(x: &FeatureMatrix, columns: &[Column], grads: &[(f64, f64)], cfg: &GbdtConfig) -> (Tree, Vec<usize>) {
    let n = x.n_rows();
    let params = SplitParams {
        lambda: cfg.reg_lambda,
        min_child_hessian: cfg.min_child_hessian,
    };
    let sums = |rows: &mut dyn Iterator<Item = usize>| {
        rows.fold((0.0, 0.0, 0usize), |(g, h, c), r| {
            (g + grads[r].0, h + grads[r].1, c + 1)
        })
    };

    let (g0, h0, _) = sums(&mut (0..n));
    let mut nodes = vec![Node::Leaf {
        weight: -g0 / (h0 + cfg.reg_lambda),
        sum_grad: g0,
        sum_hess: h0,
    }];
    let mut node_of_row = vec![0usize; n];
    let mut open = vec![OpenNode {
        id: 0,
        grad: g0,
        hess: h0,
        count: n,
    }];
    let mut slots = vec![0u32; n];

    for _depth in 0..cfg.max_depth {
        if open.is_empty() {
            break;
        }
        let per_feature: Vec<Vec<Option<Candidate>>> = columns
            .par_iter()
            .enumerate()
            .map(|(j, col)| scan_column(j, col, &slots, &open, grads, &params))
            .collect();
        // reduce in feature order: ties keep the lowest feature index
        let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
        for cands in &per_feature {
            for (b, c) in best.iter_mut().zip(cands) {
                if let Some(c) = c {
                    if b.is_none_or(|cur| c.gain > cur.gain) {
                        *b = Some(*c);
                    }
                }
            }
        }

        let mut next_open = Vec::new();
        let mut slot_of_node = std::collections::HashMap::new();
        for (slot, node) in open.iter().enumerate() {
            let Some(c) = best[slot].filter(|c| c.gain > 0.0) else {
                continue;
            };
            let rows: Vec<usize> = (0..n).filter(|&r| slots[r] == slot as u32).collect();
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&r| x.rows()[r].get(c.feature) < c.threshold);
            let mut children = [0usize; 2];
            for (k, side) in [&left_rows, &right_rows].into_iter().enumerate() {
                let (g, h, count) = sums(&mut side.iter().copied());
                let id = nodes.len();
                nodes.push(Node::Leaf {
                    weight: -g / (h + cfg.reg_lambda),
                    sum_grad: g,
                    sum_hess: h,
                });
                for &r in side {
                    node_of_row[r] = id;
                }
                children[k] = id;
                slot_of_node.insert(id, next_open.len());
                next_open.push(OpenNode {
                    id,
                    grad: g,
                    hess: h,
                    count,
                });
            }
            nodes[node.id] = Node::Split {
                feature: c.feature,
                threshold: c.threshold,
                left: children[0],
                right: children[1],
                gain: c.gain,
                sum_grad: node.grad,
                sum_hess: node.hess,
            };
        }
        for r in 0..n {
            slots[r] = slot_of_node.get(&node_of_row[r]).map_or(NO_SLOT, |&s| s as u32);
        }
        open = next_open;
    }
    (Tree { nodes }, node_of_row)
}

pub fn train_gbdt(x: &FeatureMatrix, y: &[bool], cfg: &GbdtConfig) -> Result<GbdtModel> {
    fit_gbdt(x, y, cfg).map(|(m, _)| m)
}

pub fn fit_gbdt(x: &FeatureMatrix, y: &[bool], cfg: &GbdtConfig) -> Result<(GbdtModel, GbdtTrace)> {
    cfg.validate()?;
    check_binary_targets(x, y)?;
    let columns = build_columns(x);
    let mut margins = vec![logit(cfg.base_score); x.n_rows()];
    let mut trace = GbdtTrace {
        loss: vec![weighted_log_loss(&margins, y, cfg.scale_pos_weight)],
    };
    let mut trees = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        let grads: Vec<(f64, f64)> = margins
            .iter()
            .zip(y)
            .map(|(&m, &label)| gradient_pair(m, label, cfg.scale_pos_weight))
            .collect();
        let (tree, leaf_of_row) = grow_tree(x, &columns, &grads, cfg);
        for (m, &leaf) in margins.iter_mut().zip(&leaf_of_row) {
            if let Node::Leaf { weight, .. } = tree.nodes[leaf] {
                *m += cfg.eta * weight;
            }
        }
        trees.push(tree);
        trace.loss.push(weighted_log_loss(&margins, y, cfg.scale_pos_weight));
    }
    Ok((
        GbdtModel {
            config: cfg.clone(),
            fingerprint: x.fingerprint().to_string(),
            n_features: x.n_cols(),
            trees,
        },
        trace,
    ))
}
