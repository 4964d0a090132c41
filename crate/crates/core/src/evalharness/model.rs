//! Feature transforms fitted on training contours and the persisted model
//! bundle used for inference.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::contour_io::{self, Contour, ShapeClass};
use crate::descriptors::{self, Family};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::gbt::{self, GbtModel};
use crate::pca::PcaModel;
use crate::preprocess::{self, MeanShape, RegisteredContour};

pub const BUNDLE_VERSION: &str = "cellshape-model/1";

/// A descriptor family or a PCA shape-mode projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FeatureSet {
    Descriptor(Family),
    Pca95,
    Pca99,
}

impl FeatureSet {
    pub fn all() -> Vec<FeatureSet> {
        let mut v: Vec<FeatureSet> = Family::ALL.iter().map(|&f| FeatureSet::Descriptor(f)).collect();
        v.push(FeatureSet::Pca95);
        v.push(FeatureSet::Pca99);
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Descriptor(f) => f.name(),
            FeatureSet::Pca95 => "pca95",
            FeatureSet::Pca99 => "pca99",
        }
    }

    pub fn pca_threshold(self) -> Option<f64> {
        match self {
            FeatureSet::Descriptor(_) => None,
            FeatureSet::Pca95 => Some(0.95),
            FeatureSet::Pca99 => Some(0.99),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca95" => Ok(FeatureSet::Pca95),
            "pca99" => Ok(FeatureSet::Pca99),
            _ => s.parse().map(FeatureSet::Descriptor),
        }
    }
}

impl TryFrom<String> for FeatureSet {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FeatureSet> for String {
    fn from(f: FeatureSet) -> String {
        f.name().to_string()
    }
}

/// Procrustes mean plus, for PCA sets, the fitted basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTransform {
    pub feature_set: FeatureSet,
    pub mean_shape: MeanShape,
    pub pca: Option<PcaModel>,
}

/// Features for a batch of contours, in input order, plus the ids (and
/// reasons) of contours that could not be featurized.
pub type Featurized = (FeatureMatrix, Vec<(i64, String)>);

fn featurize_aligned(set: FeatureSet, pca: Option<&PcaModel>, aligned: &[RegisteredContour]) -> Featurized {
    match (set, pca) {
        (FeatureSet::Descriptor(f), _) => {
            let (m, report) = descriptors::extract(aligned, f);
            (m, report.failed)
        }
        (_, Some(p)) => p.project_batch(aligned),
        (_, None) => unreachable!("PCA feature sets always carry a basis"),
    }
}

impl FeatureTransform {
    /// Aligns the training contours by generalized Procrustes, fits PCA when
    /// needed and returns the training features.
    pub fn fit(
        train: &[RegisteredContour],
        set: FeatureSet,
        threshold: f64,
        max_iter: usize,
    ) -> Result<(Self, Featurized)> {
        let alignment = preprocess::procrustes_align(train, threshold, max_iter)?;
        let pca = match set.pca_threshold() {
            Some(t) => Some(PcaModel::fit(&alignment.contours, t)?),
            None => None,
        };
        let features = featurize_aligned(set, pca.as_ref(), &alignment.contours);
        let transform = FeatureTransform {
            feature_set: set,
            mean_shape: alignment.mean,
            pca,
        };
        Ok((transform, features))
    }

    /// Rotates each registered contour once onto the stored mean shape and
    /// extracts features.
    pub fn apply(&self, batch: &[RegisteredContour]) -> Featurized {
        let mut aligned = Vec::with_capacity(batch.len());
        let mut failed = Vec::new();
        for c in batch {
            match preprocess::align_to_mean(c, &self.mean_shape) {
                Ok(a) => aligned.push(a),
                Err(e) => failed.push((c.id, e.to_string())),
            }
        }
        let (m, mut more) = featurize_aligned(self.feature_set, self.pca.as_ref(), &aligned);
        failed.append(&mut more);
        (m, failed)
    }

    pub fn feature_names(&self) -> Vec<String> {
        match (&self.feature_set, &self.pca) {
            (FeatureSet::Descriptor(f), _) => descriptors::feature_names(*f),
            (_, Some(p)) => p.feature_names(),
            (_, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: String,
    pub transform: FeatureTransform,
    pub gbt: GbtModel,
}

/// Per-contour classification; `class` and `probabilities` are `None` when
/// the contour could not be featurized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: i64,
    pub class: Option<usize>,
    pub class_name: Option<String>,
    pub probabilities: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrainedModel {
    pub fn new(transform: FeatureTransform, gbt: GbtModel) -> Self {
        TrainedModel {
            version: BUNDLE_VERSION.to_string(),
            transform,
            gbt,
        }
    }

    pub fn feature_set(&self) -> FeatureSet {
        self.transform.feature_set
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model bundle serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s).map_err(|e| Error::Schema(e.to_string()))?;
        if m.version != BUNDLE_VERSION {
            return Err(Error::Schema(format!(
                "unsupported model bundle version `{}`, expected `{BUNDLE_VERSION}`",
                m.version
            )));
        }
        // round-trips the embedded GBT model through its own validation
        GbtModel::from_json(&m.gbt.to_json())?;
        if m.transform.feature_names() != m.gbt.feature_names {
            return Err(Error::Schema("feature transform and GBT feature names disagree".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Fails with `ModelFamilyMismatch` unless the bundle was trained on
    /// `requested`.
    pub fn expect_feature_set(&self, requested: FeatureSet) -> Result<()> {
        if self.feature_set() != requested {
            return Err(Error::ModelFamilyMismatch {
                model: self.feature_set().name().to_string(),
                requested: requested.name().to_string(),
            });
        }
        Ok(())
    }

    /// Normalizes, aligns, featurizes and classifies raw contours, in order.
    pub fn classify(&self, contours: &[Contour]) -> Vec<Prediction> {
        let failed = |id: i64, e: String| {
            log::warn!("contour {id}: {e}");
            Prediction {
                id,
                class: None,
                class_name: None,
                probabilities: None,
                error: Some(e),
            }
        };
        let mut out = Vec::with_capacity(contours.len());
        for c in contours {
            let features = preprocess::normalize(c).map(|r| self.transform.apply(std::slice::from_ref(&r)));
            let row = match features {
                Err(e) => {
                    out.push(failed(c.id, e.to_string()));
                    continue;
                }
                Ok((m, errs)) => match errs.into_iter().next() {
                    Some((_, e)) => {
                        out.push(failed(c.id, e));
                        continue;
                    }
                    None => m.row(0).to_vec(),
                },
            };
            match self.gbt.predict_proba_row(&row) {
                Ok(p) => {
                    let k = gbt::argmax(&p);
                    out.push(Prediction {
                        id: c.id,
                        class: Some(k),
                        class_name: ShapeClass::from_index(k).map(|s| s.name().to_string()),
                        probabilities: Some(p),
                        error: None,
                    });
                }
                Err(e) => out.push(failed(c.id, e.to_string())),
            }
        }
        out
    }
}

/// Classifies every contour of a JSONL file and writes one JSON record per
/// contour to `out_path`. Returns the predictions.
pub fn classify_file(
    model_path: impl AsRef<Path>,
    contours_path: impl AsRef<Path>,
    out_path: impl AsRef<Path>,
) -> Result<Vec<Prediction>> {
    let model = TrainedModel::load(model_path)?;
    let contours = contour_io::read_contours(contours_path)?;
    let preds = model.classify(&contours);
    write_predictions(&preds, out_path)?;
    Ok(preds)
}

pub fn write_predictions(preds: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for p in preds {
        let line = serde_json::to_string(p).expect("prediction serializes");
        writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}
