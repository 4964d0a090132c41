//! Multiclass gradient-boosted trees with a softmax log-loss objective.
//!
//! Each round computes softmax probabilities `p` from the current scores and
//! grows one tree per class on `g = p_c − 1[y = c]`, `h = p_c (1 − p_c)` by
//! exact greedy search over midpoints of sorted distinct values. Split gain
//! is `½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ`, leaves hold
//! `−G/(H+λ)` and scores move by `η` times the leaf value.

mod tree;

use std::fs;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contour_io::ShapeClass;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureVector};
use crate::rng;

pub use tree::TreeNode;

pub const MODEL_VERSION: &str = "cellshape-gbt/1";
/// Lower bound on per-row hessians, so fully saturated rows cannot produce a
/// zero denominator when λ = 0.
const MIN_HESSIAN: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_child_weight: f64,
    pub reg_lambda: f64,
    pub gamma: f64,
    pub subsample: f64,
    pub colsample: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            n_rounds: 100,
            learning_rate: 0.3,
            max_depth: 6,
            min_child_weight: 1.0,
            reg_lambda: 1.0,
            gamma: 0.0,
            subsample: 1.0,
            colsample: 1.0,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        let problem = if !in_unit(self.learning_rate) {
            Some("learning_rate must be in (0, 1]")
        } else if !in_unit(self.subsample) || !in_unit(self.colsample) {
            Some("subsample and colsample must be in (0, 1]")
        } else if !(self.reg_lambda >= 0.0 && self.gamma >= 0.0 && self.min_child_weight >= 0.0) {
            Some("reg_lambda, gamma and min_child_weight must be non-negative")
        } else if !(self.reg_lambda.is_finite() && self.gamma.is_finite() && self.min_child_weight.is_finite()) {
            Some("regularization parameters must be finite")
        } else {
            None
        };
        match problem {
            Some(m) => Err(Error::InvalidParams(m.into())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTree {
    pub class: usize,
    pub nodes: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub version: String,
    pub feature_names: Vec<String>,
    pub n_classes: usize,
    pub hyperparams: HyperParams,
    /// Round-major: trees `r·n_classes .. (r+1)·n_classes` form round `r`.
    pub trees: Vec<ClassTree>,
}

/// Training output with the mean training log-loss after each round.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: GbtModel,
    pub loss_history: Vec<f64>,
}

fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

/// Trains on a labeled feature matrix.
pub fn train(x: &FeatureMatrix, hp: &HyperParams) -> Result<GbtModel> {
    let labels = x.class_indices()?;
    Ok(train_dense(x.data(), &labels, x.names.clone(), ShapeClass::COUNT, hp)?.model)
}

/// Trains on row-major `data` with `feature_names.len()` columns.
pub fn train_dense(
    data: &[f64],
    labels: &[usize],
    feature_names: Vec<String>,
    n_classes: usize,
    hp: &HyperParams,
) -> Result<TrainOutput> {
    hp.validate()?;
    let d = feature_names.len();
    let n = labels.len();
    if n_classes < 2 {
        return Err(Error::InvalidParams("need at least 2 classes".into()));
    }
    if n == 0 || d == 0 {
        return Err(Error::InsufficientData(format!(
            "cannot train on {n} rows x {d} features"
        )));
    }
    if data.len() != n * d {
        return Err(Error::DimensionMismatch {
            expected: n * d,
            got: data.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::LabelOutOfRange(bad as i64));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature { row: i / d, col: i % d });
    }

    let sorted = tree::Presorted::new(data, d);
    let params = tree::TreeParams {
        max_depth: hp.max_depth,
        min_child_weight: hp.min_child_weight,
        lambda: hp.reg_lambda,
        gamma: hp.gamma,
    };

    let mut rng = rng::substream(hp.seed, 0);
    let mut scores = vec![0.0; n * n_classes];
    let mut probs = vec![0.0; n * n_classes];
    let mut trees = Vec::with_capacity(hp.n_rounds * n_classes);
    let mut loss_history = Vec::with_capacity(hp.n_rounds);
    let mut gh = vec![[0.0; 2]; n * n_classes];

    for _ in 0..hp.n_rounds {
        let in_bag: Vec<bool> = if hp.subsample < 1.0 {
            let mut bag: Vec<bool> = (0..n).map(|_| rng.gen::<f64>() < hp.subsample).collect();
            if !bag.iter().any(|&b| b) {
                bag[rng.gen_range(0..n)] = true;
            }
            bag
        } else {
            vec![true; n]
        };
        let features: Vec<usize> = if hp.colsample < 1.0 {
            let k = ((hp.colsample * d as f64).round() as usize).clamp(1, d);
            let mut f = index::sample(&mut rng, d, k).into_vec();
            f.sort_unstable();
            f
        } else {
            (0..d).collect()
        };
        for i in 0..n {
            let k = i * n_classes;
            softmax_into(&scores[k..k + n_classes], &mut probs[k..k + n_classes]);
        }
        for i in 0..n {
            for c in 0..n_classes {
                let p = probs[i * n_classes + c];
                let y = if labels[i] == c { 1.0 } else { 0.0 };
                gh[i * n_classes + c] = [p - y, (p * (1.0 - p)).max(MIN_HESSIAN)];
            }
        }
        let round = tree::grow_forest(data, d, &sorted, &gh, n_classes, &in_bag, &features, &params);
        for (c, nodes) in round.into_iter().enumerate() {
            for i in 0..n {
                scores[i * n_classes + c] += hp.learning_rate * nodes.eval(&data[i * d..(i + 1) * d]);
            }
            trees.push(ClassTree { class: c, nodes });
        }
        let mut loss = 0.0;
        for i in 0..n {
            let k = i * n_classes;
            softmax_into(&scores[k..k + n_classes], &mut probs[k..k + n_classes]);
            loss -= probs[k + labels[i]].max(f64::MIN_POSITIVE).ln();
        }
        loss_history.push(loss / n as f64);
    }

    Ok(TrainOutput {
        model: GbtModel {
            version: MODEL_VERSION.to_string(),
            feature_names,
            n_classes,
            hyperparams: hp.clone(),
            trees,
        },
        loss_history,
    })
}

/// Fits one regression tree to per-row `(gradient, hessian)` pairs on all
/// rows and features of row-major `data`.
pub fn fit_tree(
    data: &[f64],
    n_cols: usize,
    gh: &[[f64; 2]],
    max_depth: usize,
    min_child_weight: f64,
    reg_lambda: f64,
    gamma: f64,
) -> Result<TreeNode> {
    let n = gh.len();
    if n == 0 || data.len() != n * n_cols {
        return Err(Error::DimensionMismatch {
            expected: n * n_cols,
            got: data.len(),
        });
    }
    let sorted = tree::Presorted::new(data, n_cols);
    let features: Vec<usize> = (0..n_cols).collect();
    let params = tree::TreeParams {
        max_depth,
        min_child_weight,
        lambda: reg_lambda,
        gamma,
    };
    let in_bag = vec![true; n];
    Ok(
        tree::grow_forest(data, n_cols, &sorted, gh, 1, &in_bag, &features, &params)
            .pop()
            .expect("one tree"),
    )
}

impl GbtModel {
    pub fn n_rounds(&self) -> usize {
        self.trees.len() / self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Class probabilities of one row.
    pub fn predict_proba_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        let mut scores = vec![0.0; self.n_classes];
        for t in &self.trees {
            scores[t.class] += self.hyperparams.learning_rate * t.nodes.eval(row);
        }
        let mut p = vec![0.0; self.n_classes];
        softmax_into(&scores, &mut p);
        Ok(p)
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        if x.n_cols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.n_cols(),
            });
        }
        x.rows().map(|r| self.predict_proba_row(r)).collect()
    }

    /// Most probable class index per row; ties go to the lower index.
    pub fn predict_indices(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.iter().map(|p| argmax(p)).collect())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<ShapeClass>> {
        self.predict_indices(x)?
            .into_iter()
            .map(|i| ShapeClass::from_index(i).ok_or(Error::LabelOutOfRange(i as i64)))
            .collect()
    }

    /// Total split gain per feature, normalized to sum 1 (all zeros when
    /// the model never splits).
    pub fn feature_importance(&self) -> FeatureVector {
        let mut gain = vec![0.0; self.n_features()];
        for t in &self.trees {
            t.nodes.for_each_split(&mut |f, _, g| gain[f] += g);
        }
        let total: f64 = gain.iter().sum();
        if total > 0.0 {
            gain.iter_mut().for_each(|g| *g /= total);
        }
        FeatureVector::new(self.feature_names.clone(), gain)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: GbtModel = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if m.version != MODEL_VERSION {
            return Err(Error::Schema(format!(
                "model version {:?}, expected {MODEL_VERSION:?}",
                m.version
            )));
        }
        if m.n_classes < 2 || !m.trees.len().is_multiple_of(m.n_classes) {
            return Err(Error::Schema("trees do not form complete rounds".into()));
        }
        let d = m.n_features();
        for t in &m.trees {
            let mut bad = t.class >= m.n_classes;
            t.nodes
                .for_each_split(&mut |f, thr, _| bad |= f >= d || !thr.is_finite());
            if bad {
                return Err(Error::Schema("tree refers to an unknown class or feature".into()));
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

pub fn argmax(p: &[f64]) -> usize {
    p.iter().enumerate().fold(0, |b, (i, &v)| if v > p[b] { i } else { b })
}
