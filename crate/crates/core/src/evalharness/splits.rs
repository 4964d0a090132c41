//! Stratified 5-fold plans with 60/20/20 train/validation/test splits.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::contour_io::ShapeClass;
use crate::error::{Error, Result};
use crate::rng;

pub const N_FOLDS: usize = 5;
const MIN_SAMPLES: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Fold {
    /// FNV-1a over the three index lists, for auditing that families share
    /// folds.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (tag, list) in [(1u64, &self.train), (2, &self.validation), (3, &self.test)] {
            for v in std::iter::once(tag).chain(list.iter().map(|&i| i as u64)) {
                for b in v.to_le_bytes() {
                    h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

/// Each class is shuffled and cut into 5 near-equal chunks. Fold `f` tests
/// on chunk `f`, validates on chunk `f + 1 (mod 5)` and trains on the other
/// three, so the test sets partition the data.
pub fn make_splits(labels: &[usize], seed: u64) -> Result<SplitPlan> {
    if labels.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples(format!(
            "{} samples, need at least {MIN_SAMPLES}",
            labels.len()
        )));
    }
    let mut chunks: Vec<Vec<usize>> = vec![Vec::new(); N_FOLDS];
    let mut rng = rng::substream(seed, rng::stream_id(&[rng::name_tag("splits")]));
    for class in 0..ShapeClass::COUNT {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            return Err(Error::TooFewSamples(format!("class {class} has no samples")));
        }
        members.shuffle(&mut rng);
        let m = members.len();
        for (pos, idx) in members.into_iter().enumerate() {
            chunks[pos * N_FOLDS / m].push(idx);
        }
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= ShapeClass::COUNT) {
        return Err(Error::LabelOutOfRange(bad as i64));
    }
    let folds = (0..N_FOLDS)
        .map(|f| {
            let val_chunk = (f + 1) % N_FOLDS;
            let mut train: Vec<usize> = (0..N_FOLDS)
                .filter(|&c| c != f && c != val_chunk)
                .flat_map(|c| chunks[c].iter().copied())
                .collect();
            let mut validation = chunks[val_chunk].clone();
            let mut test = chunks[f].clone();
            train.sort_unstable();
            validation.sort_unstable();
            test.sort_unstable();
            Fold {
                train,
                validation,
                test,
            }
        })
        .collect();
    Ok(SplitPlan { seed, folds })
}
