//! Independent reference implementations used as test oracles.
//!
//! Everything here is written directly from the textbook definitions, with
//! dense loops and no shared code with the library.

#![allow(dead_code)]

use std::collections::BTreeMap;

use ami_core::features::{FeatureMatrix, FeatureVector};
use ami_core::models::gbdt::Node;
use ami_core::models::GbdtModel;
use std::path::PathBuf;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// SplitMix64, enough for reproducible random fixtures.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform().max(1e-300);
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Smooth-idf TF-IDF with L2 row normalisation, as sparse maps per document.
pub fn tfidf(docs: &[Vec<&str>]) -> Vec<BTreeMap<String, f64>> {
    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.clone();
        seen.sort();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_default() += 1.0;
        }
    }
    docs.iter()
        .map(|doc| {
            let mut tf: BTreeMap<&str, f64> = BTreeMap::new();
            for t in doc {
                *tf.entry(t).or_default() += 1.0;
            }
            let raw: BTreeMap<String, f64> = tf
                .iter()
                .map(|(t, c)| (t.to_string(), c * (((1.0 + n) / (1.0 + df[t])).ln() + 1.0)))
                .collect();
            let norm = raw.values().map(|v| v * v).sum::<f64>().sqrt();
            raw.into_iter().map(|(t, v)| (t, v / norm)).collect()
        })
        .collect()
}

/// `0.5 * |w|^2 + c * sum log(1 + exp(-s_i (w.x_i + b)))`, `s_i = ±1`.
pub fn logistic_objective(x: &[Vec<f64>], y: &[bool], c: f64, w: &[f64], b: f64) -> f64 {
    let reg: f64 = w.iter().map(|v| v * v).sum::<f64>() / 2.0;
    let mut loss = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
        let s = if label { 1.0 } else { -1.0 };
        loss += (1.0 + (-s * z).exp()).ln();
    }
    reg + c * loss
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    (0..at.len())
        .map(|k| {
            let mut plus = at.to_vec();
            let mut minus = at.to_vec();
            plus[k] += h;
            minus[k] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

pub fn sigmoid(m: f64) -> f64 {
    if m >= 0.0 {
        1.0 / (1.0 + (-m).exp())
    } else {
        m.exp() / (1.0 + m.exp())
    }
}

/// Log-loss gradient and hessian, both scaled by the sample weight.
pub fn grad_hess(margin: f64, label: bool, scale_pos_weight: f64) -> (f64, f64) {
    let p = sigmoid(margin);
    let (y, w) = if label { (1.0, scale_pos_weight) } else { (0.0, 1.0) };
    ((p - y) * w, p * (1.0 - p) * w)
}

/// Sums in row order.
pub fn node_sums(rows: &[usize], gh: &[(f64, f64)]) -> (f64, f64) {
    let mut g = 0.0;
    let mut h = 0.0;
    for &r in rows {
        g += gh[r].0;
        h += gh[r].1;
    }
    (g, h)
}

pub fn split_gain(gl: f64, hl: f64, gr: f64, hr: f64, lambda: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda);
    0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr))
}

#[derive(Debug, Clone, Copy)]
pub struct BruteSplit {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Tries every midpoint between consecutive distinct values of every
/// feature over `rows` and returns the best admissible split.
#[allow(clippy::needless_range_loop)]
pub fn best_split(
    x: &[Vec<f64>],
    rows: &[usize],
    gh: &[(f64, f64)],
    lambda: f64,
    min_child_hessian: f64,
) -> Option<BruteSplit> {
    let mut best: Option<BruteSplit> = None;
    for j in 0..x[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[r][j]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let mid = (pair[0] + pair[1]) / 2.0;
            let threshold = if mid > pair[0] { mid } else { pair[1] };
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x[r][j] < threshold).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&r| x[r][j] >= threshold).collect();
            let (gl, hl) = node_sums(&left, gh);
            let (gr, hr) = node_sums(&right, gh);
            if hl < min_child_hessian || hr < min_child_hessian {
                continue;
            }
            let gain = split_gain(gl, hl, gr, hr, lambda);
            if gain > 0.0 && best.is_none_or(|b| gain > b.gain) {
                best = Some(BruteSplit {
                    feature: j,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Per-class (tp, fp, fn) by direct enumeration.
pub fn counts<T: PartialEq>(gold: &[T], pred: &[T], class: &T) -> (usize, usize, usize) {
    let mut tp = 0;
    let mut fp = 0;
    let mut fn_ = 0;
    for (g, p) in gold.iter().zip(pred) {
        match (g == class, p == class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    (tp, fp, fn_)
}

pub fn f1<T: PartialEq>(gold: &[T], pred: &[T], class: &T) -> f64 {
    let (tp, fp, fn_) = counts(gold, pred, class);
    let p = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let r = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn macro_f1<T: PartialEq>(gold: &[T], pred: &[T], classes: &[T]) -> f64 {
    classes.iter().map(|c| f1(gold, pred, c)).sum::<f64>() / classes.len() as f64
}

pub fn accuracy<T: PartialEq>(gold: &[T], pred: &[T]) -> f64 {
    gold.iter().zip(pred).filter(|(g, p)| g == p).count() as f64 / gold.len() as f64
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

/// Replays boosting with oracle gradients and checks every node of every
/// tree: sums are exact row-order sums, leaves are -G/(H+lambda), each
/// split has the best brute-force gain, and unsplit nodes above the depth
/// limit have no admissible split.
pub fn audit_gbdt(rows: &[Vec<f64>], y: &[bool], m: &GbdtModel) -> Result<(), String> {
    let cfg = &m.config;
    let base = (cfg.base_score / (1.0 - cfg.base_score)).ln();
    let mut margins = vec![base; rows.len()];
    for (t, tree) in m.trees.iter().enumerate() {
        let gh: Vec<(f64, f64)> = margins
            .iter()
            .zip(y)
            .map(|(&mg, &l)| grad_hess(mg, l, cfg.scale_pos_weight))
            .collect();
        let mut stack = vec![(0usize, (0..rows.len()).collect::<Vec<_>>(), 0usize)];
        while let Some((id, members, depth)) = stack.pop() {
            let (g, h) = node_sums(&members, &gh);
            ensure!(
                tree.nodes[id].sums() == (g, h),
                "tree {t} node {id}: sums {:?} vs oracle {:?}",
                tree.nodes[id].sums(),
                (g, h)
            );
            match tree.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    gain,
                    ..
                } => {
                    let best = best_split(rows, &members, &gh, cfg.reg_lambda, cfg.min_child_hessian)
                        .ok_or_else(|| format!("tree {t} node {id}: split where the oracle finds none"))?;
                    let tol = 1e-9 * best.gain.abs().max(1.0);
                    ensure!(
                        (gain - best.gain).abs() <= tol,
                        "tree {t} node {id}: gain {gain} vs oracle {}",
                        best.gain
                    );
                    let (l, r): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&i| rows[i][feature] < threshold);
                    let (gl, hl) = node_sums(&l, &gh);
                    let (gr, hr) = node_sums(&r, &gh);
                    let recomputed = split_gain(gl, hl, gr, hr, cfg.reg_lambda);
                    ensure!(
                        (recomputed - best.gain).abs() <= tol,
                        "tree {t} node {id}: partition gain {recomputed} vs {}",
                        best.gain
                    );
                    stack.push((left, l, depth + 1));
                    stack.push((right, r, depth + 1));
                }
                Node::Leaf { weight, .. } => {
                    ensure!(
                        weight == -g / (h + cfg.reg_lambda),
                        "tree {t} leaf {id}: weight {weight} vs {}",
                        -g / (h + cfg.reg_lambda)
                    );
                    if depth < cfg.max_depth {
                        ensure!(
                            best_split(rows, &members, &gh, cfg.reg_lambda, cfg.min_child_hessian).is_none(),
                            "tree {t} leaf {id}: oracle finds an admissible split"
                        );
                    }
                    for &i in &members {
                        margins[i] += cfg.eta * weight;
                    }
                }
            }
        }
    }
    let x = FeatureMatrix::from_dense(rows).map_err(|e| e.to_string())?;
    let mut model = m.clone();
    model.fingerprint = x.fingerprint().to_string();
    for (i, row) in rows.iter().enumerate() {
        let v = FeatureVector::with_layout(x.layout(), row.clone()).map_err(|e| e.to_string())?;
        let got = model.margin(&v).map_err(|e| e.to_string())?;
        ensure!(
            (got - margins[i]).abs() <= 1e-12,
            "row {i}: margin {got} vs replay {}",
            margins[i]
        );
    }
    Ok(())
}
