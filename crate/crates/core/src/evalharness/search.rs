//! Random hyperparameter search on a train/validation pair.

use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gbt::{self, HyperParams};
use crate::rng;

/// Candidate values per hyperparameter; each trial draws every dimension
/// uniformly and independently.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub n_rounds: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub max_depth: Vec<usize>,
    pub min_child_weight: Vec<f64>,
    pub reg_lambda: Vec<f64>,
    pub gamma: Vec<f64>,
    pub subsample: Vec<f64>,
    pub colsample: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            n_rounds: vec![100, 200, 300],
            learning_rate: vec![0.05, 0.1, 0.3],
            max_depth: (3..=8).collect(),
            min_child_weight: vec![1.0, 5.0],
            reg_lambda: vec![0.5, 1.0, 2.0],
            gamma: vec![0.0, 0.1],
            subsample: vec![0.8, 1.0],
            colsample: vec![0.8, 1.0],
        }
    }
}

impl SearchSpace {
    /// The space containing only `hp` (its seed is still drawn per trial).
    pub fn single(hp: &HyperParams) -> Self {
        SearchSpace {
            n_rounds: vec![hp.n_rounds],
            learning_rate: vec![hp.learning_rate],
            max_depth: vec![hp.max_depth],
            min_child_weight: vec![hp.min_child_weight],
            reg_lambda: vec![hp.reg_lambda],
            gamma: vec![hp.gamma],
            subsample: vec![hp.subsample],
            colsample: vec![hp.colsample],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let empty = self.n_rounds.is_empty()
            || self.learning_rate.is_empty()
            || self.max_depth.is_empty()
            || self.min_child_weight.is_empty()
            || self.reg_lambda.is_empty()
            || self.gamma.is_empty()
            || self.subsample.is_empty()
            || self.colsample.is_empty();
        if empty {
            return Err(Error::InvalidConfig(
                "every search dimension needs at least one value".into(),
            ));
        }
        Ok(())
    }

    fn sample(&self, r: &mut rng::Rng) -> HyperParams {
        HyperParams {
            n_rounds: *self.n_rounds.choose(r).unwrap(),
            learning_rate: *self.learning_rate.choose(r).unwrap(),
            max_depth: *self.max_depth.choose(r).unwrap(),
            min_child_weight: *self.min_child_weight.choose(r).unwrap(),
            reg_lambda: *self.reg_lambda.choose(r).unwrap(),
            gamma: *self.gamma.choose(r).unwrap(),
            subsample: *self.subsample.choose(r).unwrap(),
            colsample: *self.colsample.choose(r).unwrap(),
            seed: r.next_u64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub params: HyperParams,
    pub val_accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: HyperParams,
    pub best_index: usize,
    pub best_val_accuracy: f64,
    pub trials: Vec<Trial>,
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Trial `t` draws its configuration (and the GBT seed) from stream
/// `(stream, t)` of `seed`, so trials can run in any order.
pub fn random_search(
    train: &FeatureMatrix,
    validation: &FeatureMatrix,
    space: &SearchSpace,
    n_trials: usize,
    seed: u64,
    stream: u64,
) -> Result<SearchResult> {
    if n_trials == 0 {
        return Err(Error::InvalidConfig("n_trials must be at least 1".into()));
    }
    space.validate()?;
    let val_labels = validation.class_indices()?;
    let trials: Vec<Trial> = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::substream(seed, rng::stream_id(&[stream, t as u64]));
            let params = space.sample(&mut r);
            let outcome = gbt::train(train, &params)
                .and_then(|m| m.predict_indices(validation))
                .map(|pred| accuracy(&pred, &val_labels));
            match outcome {
                Ok(acc) => Trial {
                    index: t,
                    params,
                    val_accuracy: Some(acc),
                    error: None,
                },
                Err(e) => {
                    log::warn!("trial {t} failed: {e}");
                    Trial {
                        index: t,
                        params,
                        val_accuracy: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();
    let mut best: Option<&Trial> = None;
    for t in &trials {
        if let Some(acc) = t.val_accuracy {
            if best.is_none_or(|b| acc > b.val_accuracy.unwrap()) {
                best = Some(t);
            }
        }
    }
    let Some(best) = best else {
        let last = trials.last().and_then(|t| t.error.clone()).unwrap_or_default();
        return Err(Error::AllTrialsFailed(last));
    };
    Ok(SearchResult {
        best: best.params.clone(),
        best_index: best.index,
        best_val_accuracy: best.val_accuracy.unwrap(),
        trials: trials.clone(),
    })
}
