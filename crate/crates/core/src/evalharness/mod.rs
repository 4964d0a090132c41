//! Cross-validated evaluation of feature families: stratified 5-fold
//! 60/20/20 splits, random hyperparameter search on validation accuracy,
//! test accuracy, confusion matrices and gain importances.
//!
//! Everything fitted (Procrustes mean, PCA basis, hyperparameters, trees)
//! sees only the training and validation indices of its fold.

mod model;
mod report;
mod search;
mod splits;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour_io::ShapeClass;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gbt::{self, HyperParams};
use crate::preprocess::{RegisteredContour, DEFAULT_MAX_ITER, DEFAULT_THRESHOLD};
use crate::rng;

pub use model::{
    classify_file, write_predictions, FeatureSet, FeatureTransform, Featurized, Prediction, TrainedModel,
    BUNDLE_VERSION,
};
pub use report::{render_svg, write_outputs, write_trials_csv};
pub use search::{accuracy, random_search, SearchResult, SearchSpace, Trial};
pub use splits::{make_splits, Fold, SplitPlan, N_FOLDS};

pub type Confusion = [[u64; ShapeClass::COUNT]; ShapeClass::COUNT];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub seed: u64,
    pub n_trials: usize,
    pub space: SearchSpace,
    /// Number of features listed in the importance ranking.
    pub top_k: usize,
    /// Refit the selected configuration on train ∪ validation instead of
    /// train alone.
    pub retrain_on_train_val: bool,
    pub procrustes_threshold: f64,
    pub procrustes_max_iter: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: 42,
            n_trials: 20,
            space: SearchSpace::default(),
            top_k: 20,
            retrain_on_train_val: false,
            procrustes_threshold: DEFAULT_THRESHOLD,
            procrustes_max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceEntry {
    pub feature: String,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub family: String,
    pub n_samples: usize,
    pub n_features: Vec<usize>,
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation (n − 1) over folds.
    pub std_accuracy: f64,
    /// Rows are true classes, columns predicted classes, summed over folds.
    pub confusion: Confusion,
    pub best_params: Vec<HyperParams>,
    /// Fold-averaged gain importance, highest first.
    pub top_importance: Vec<ImportanceEntry>,
    pub split_hashes: Vec<String>,
    /// Contours dropped because their features could not be computed.
    pub excluded_ids: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub split_hash: u64,
    pub search: SearchResult,
    pub test_accuracy: f64,
    pub confusion: Confusion,
    pub model: TrainedModel,
    pub excluded: Vec<(i64, String)>,
}

#[derive(Debug, Clone)]
pub struct FamilyOutcome {
    pub report: EvalReport,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub family: String,
    pub mean_acc: f64,
    pub std_acc: f64,
    pub n_features: usize,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub plan: SplitPlan,
    pub outcomes: Vec<FamilyOutcome>,
    /// Sorted by mean accuracy, best first; ties keep input order.
    pub ranking: Vec<RankRow>,
}

pub fn labels_of(dataset: &[RegisteredContour]) -> Result<Vec<usize>> {
    dataset
        .iter()
        .map(|c| {
            c.class_label
                .map(ShapeClass::index)
                .ok_or_else(|| Error::Schema(format!("contour {} has no class label", c.id)))
        })
        .collect()
}

pub fn confusion_matrix(truth: &[usize], pred: &[usize]) -> Confusion {
    let mut m = [[0u64; ShapeClass::COUNT]; ShapeClass::COUNT];
    for (&t, &p) in truth.iter().zip(pred) {
        m[t][p] += 1;
    }
    m
}

pub fn confusion_accuracy(m: &Confusion) -> f64 {
    let total: u64 = m.iter().flatten().sum();
    let trace: u64 = (0..ShapeClass::COUNT).map(|i| m[i][i]).sum();
    if total == 0 {
        0.0
    } else {
        trace as f64 / total as f64
    }
}

fn pick(dataset: &[RegisteredContour], idx: &[usize]) -> Vec<RegisteredContour> {
    idx.iter().map(|&i| dataset[i].clone()).collect()
}

fn concat(a: &FeatureMatrix, b: &FeatureMatrix) -> FeatureMatrix {
    let mut m = a.clone();
    for i in 0..b.n_rows() {
        m.push_row(b.ids[i], b.labels[i], b.row(i)).expect("same width");
    }
    m
}

/// Runs one fold: fit the transform on train, search on validation, refit
/// and score on test.
pub fn run_fold(
    dataset: &[RegisteredContour],
    set: FeatureSet,
    plan: &SplitPlan,
    fold: usize,
    cfg: &EvalConfig,
) -> Result<FoldResult> {
    let split = &plan.folds[fold];
    let train = pick(dataset, &split.train);
    let (transform, (x_train, mut excluded)) =
        FeatureTransform::fit(&train, set, cfg.procrustes_threshold, cfg.procrustes_max_iter)?;
    let (x_val, mut ex_val) = transform.apply(&pick(dataset, &split.validation));
    let (x_test, mut ex_test) = transform.apply(&pick(dataset, &split.test));
    excluded.append(&mut ex_val);
    excluded.append(&mut ex_test);
    for (id, why) in &excluded {
        log::warn!("{set} fold {fold}: excluding contour {id}: {why}");
    }

    let family_tag = rng::name_tag(set.name());
    let stream = rng::stream_id(&[family_tag, fold as u64]);
    let search = random_search(&x_train, &x_val, &cfg.space, cfg.n_trials, plan.seed, stream)?;
    let fit_on = if cfg.retrain_on_train_val {
        concat(&x_train, &x_val)
    } else {
        x_train
    };
    let gbt_model = gbt::train(&fit_on, &search.best)?;
    let truth = x_test.class_indices()?;
    let pred = gbt_model.predict_indices(&x_test)?;
    let confusion = confusion_matrix(&truth, &pred);
    Ok(FoldResult {
        fold,
        split_hash: split.hash(),
        test_accuracy: accuracy(&pred, &truth),
        confusion,
        search,
        model: TrainedModel::new(transform, gbt_model),
        excluded,
    })
}

fn aggregate(set: FeatureSet, n_samples: usize, folds: &[FoldResult], top_k: usize) -> EvalReport {
    let acc: Vec<f64> = folds.iter().map(|f| f.test_accuracy).collect();
    let k = acc.len() as f64;
    let mean = acc.iter().sum::<f64>() / k;
    let std = if acc.len() > 1 {
        (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut confusion = [[0u64; ShapeClass::COUNT]; ShapeClass::COUNT];
    for f in folds {
        for (row, add) in confusion.iter_mut().zip(&f.confusion) {
            for (c, a) in row.iter_mut().zip(add) {
                *c += a;
            }
        }
    }
    // Fold-averaged importance; PCA folds may differ in width, missing
    // features count as zero.
    let mut names: Vec<String> = Vec::new();
    let mut sums: Vec<f64> = Vec::new();
    for f in folds {
        let imp = f.model.gbt.feature_importance();
        for (name, v) in imp.names.iter().zip(&imp.values) {
            match names.iter().position(|n| n == name) {
                Some(i) => sums[i] += v,
                None => {
                    names.push(name.clone());
                    sums.push(*v);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..names.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    let top_importance = order
        .into_iter()
        .take(top_k)
        .map(|i| ImportanceEntry {
            feature: names[i].clone(),
            gain: sums[i] / k,
        })
        .collect();
    let mut excluded_ids: Vec<i64> = folds.iter().flat_map(|f| f.excluded.iter().map(|e| e.0)).collect();
    excluded_ids.sort_unstable();
    excluded_ids.dedup();
    EvalReport {
        family: set.name().to_string(),
        n_samples,
        n_features: folds.iter().map(|f| f.model.gbt.n_features()).collect(),
        fold_accuracy: acc,
        mean_accuracy: mean,
        std_accuracy: std,
        confusion,
        best_params: folds.iter().map(|f| f.search.best.clone()).collect(),
        top_importance,
        split_hashes: folds.iter().map(|f| format!("{:016x}", f.split_hash)).collect(),
        excluded_ids,
    }
}

/// Evaluates one feature set on a shared split plan. `dataset` must be
/// registered and labeled.
pub fn evaluate_with_plan(
    dataset: &[RegisteredContour],
    set: FeatureSet,
    plan: &SplitPlan,
    cfg: &EvalConfig,
) -> Result<FamilyOutcome> {
    let folds: Vec<FoldResult> = (0..plan.folds.len())
        .into_par_iter()
        .map(|f| run_fold(dataset, set, plan, f, cfg))
        .collect::<Result<_>>()?;
    let report = aggregate(set, dataset.len(), &folds, cfg.top_k);
    log::info!(
        "{set}: mean accuracy {:.4} ± {:.4}",
        report.mean_accuracy,
        report.std_accuracy
    );
    Ok(FamilyOutcome { report, folds })
}

pub fn evaluate_family(dataset: &[RegisteredContour], set: FeatureSet, cfg: &EvalConfig) -> Result<FamilyOutcome> {
    let plan = make_splits(&labels_of(dataset)?, cfg.seed)?;
    evaluate_with_plan(dataset, set, &plan, cfg)
}

/// Evaluates every feature set on the same split plan and ranks them.
pub fn compare_families(dataset: &[RegisteredContour], sets: &[FeatureSet], cfg: &EvalConfig) -> Result<Comparison> {
    if cfg.n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
    }
    let plan = make_splits(&labels_of(dataset)?, cfg.seed)?;
    let outcomes = sets
        .iter()
        .map(|&s| evaluate_with_plan(dataset, s, &plan, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut ranking: Vec<RankRow> = outcomes
        .iter()
        .map(|o| {
            let r = &o.report;
            let nf = r.n_features.iter().sum::<usize>() as f64 / r.n_features.len() as f64;
            RankRow {
                family: r.family.clone(),
                mean_acc: r.mean_accuracy,
                std_acc: r.std_accuracy,
                n_features: nf.round() as usize,
            }
        })
        .collect();
    ranking.sort_by(|a, b| b.mean_acc.total_cmp(&a.mean_acc));
    Ok(Comparison {
        plan,
        outcomes,
        ranking,
    })
}
