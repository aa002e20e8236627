//! Classifiers for texture feature vectors and their evaluation.
//!
//! Tie-breaking is fixed everywhere so predictions are reproducible:
//! a value on a cut-point falls into the upper bin, posterior ties go to the
//! first class seen in training, k-NN vote ties go to the nearest tied
//! class, distance ties go to the earlier training row, and ensemble ties go
//! to the earliest-listed member among the leaders.

mod discretize;
mod ensemble;
mod eval;
mod knn;
mod naive_bayes;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use discretize::{discretize, fit_equal_frequency, DiscretizationModel};
pub use ensemble::{ensemble_predict, EnsembleModel, MIN_MEMBERS};
pub use eval::{evaluate, leave_one_out, predict_all, split_holdout, EvalReport};
pub use knn::{knn_predict, knn_train, KnnModel, Neighbour};
pub use naive_bayes::{
    nb_predict, nb_train, NaiveBayesModel, Posterior, DEFAULT_BINS, DEFAULT_THRESHOLD, SMOOTHING,
};

use crate::features::{ClassLabel, Dataset, FeatureError, FeatureVector, Schema};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("bin count must be at least 2, got {0}")]
    BinCount(usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has no attributes")]
    NoAttributes,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("class {label} has {found} rows, need at least {needed}")]
    TooFewRowsInClass {
        label: ClassLabel,
        found: usize,
        needed: usize,
    },
    #[error("k = {k} is out of range for {rows} training rows")]
    NeighbourCount { k: usize, rows: usize },
    #[error("an ensemble needs at least 3 members, got {0}")]
    TooFewMembers(usize),
    #[error("{predictions} predictions for {truth} truth labels")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("holdout fraction must lie strictly between 0 and 1, got {0}")]
    Fraction(f64),
    #[error("invalid classifier spec {spec:?}: {reason}")]
    Spec { spec: String, reason: String },
    #[error("{path}: {message}")]
    ModelFile { path: String, message: String },
}

/// Predicted label with a posterior probability or vote fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub label: ClassLabel,
    pub confidence: T,
}

pub trait Classifier<T: Real> {
    fn schema(&self) -> &Schema;
    fn predict(&self, v: &FeatureVector<T>) -> Result<Prediction<T>, ClassifyError>;
}

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case", bound = "T: Real")]
pub enum Model<T> {
    NaiveBayes(NaiveBayesModel<T>),
    Knn(KnnModel<T>),
    Ensemble(EnsembleModel<T>),
}

impl<T: Real> Model<T> {
    /// Hyper-parameters that reproduce this model from training data.
    pub fn spec(&self) -> TrainSpec {
        match self {
            Model::NaiveBayes(m) => TrainSpec::NaiveBayes {
                bins: m.bins(),
                threshold: m.threshold.to_f64_lossy(),
            },
            Model::Knn(m) => TrainSpec::Knn {
                k: m.k,
                standardized: m.is_standardized(),
            },
            Model::Ensemble(e) => TrainSpec::Ensemble {
                members: e.members().iter().map(Model::spec).collect(),
            },
        }
    }
}

impl<T: Real> Classifier<T> for Model<T> {
    fn schema(&self) -> &Schema {
        match self {
            Model::NaiveBayes(m) => m.schema(),
            Model::Knn(m) => m.schema(),
            Model::Ensemble(m) => m.schema(),
        }
    }

    fn predict(&self, v: &FeatureVector<T>) -> Result<Prediction<T>, ClassifyError> {
        match self {
            Model::NaiveBayes(m) => m.predict(v),
            Model::Knn(m) => m.predict(v),
            Model::Ensemble(m) => m.predict(v),
        }
    }
}

/// Training recipe for any of the supported classifiers.
///
/// Text form, as accepted by the CLI: `nb[:bins[:threshold]]`,
/// `knn[:k[:raw|std]]`; ensembles are lists of these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "snake_case")]
pub enum TrainSpec {
    NaiveBayes { bins: usize, threshold: f64 },
    Knn { k: usize, standardized: bool },
    Ensemble { members: Vec<TrainSpec> },
}

impl TrainSpec {
    pub fn naive_bayes() -> Self {
        TrainSpec::NaiveBayes {
            bins: DEFAULT_BINS,
            threshold: DEFAULT_THRESHOLD,
        }
    }

    pub fn knn() -> Self {
        TrainSpec::Knn {
            k: 1,
            standardized: true,
        }
    }

    /// Naive Bayes plus standardised 1-NN and 3-NN.
    pub fn default_ensemble() -> Self {
        TrainSpec::Ensemble {
            members: vec![
                Self::naive_bayes(),
                Self::knn(),
                TrainSpec::Knn {
                    k: 3,
                    standardized: true,
                },
            ],
        }
    }

    pub fn fit<T: Real>(&self, ds: &Dataset<T>) -> Result<Model<T>, ClassifyError> {
        Ok(match self {
            TrainSpec::NaiveBayes { bins, threshold } => {
                Model::NaiveBayes(nb_train(ds, *bins, T::lit(*threshold))?)
            }
            TrainSpec::Knn { k, standardized } => Model::Knn(knn_train(ds, *k, *standardized)?),
            TrainSpec::Ensemble { members } => Model::Ensemble(EnsembleModel::new(
                members.iter().map(|m| m.fit(ds)).collect::<Result<_, _>>()?,
            )?),
        })
    }
}

impl fmt::Display for TrainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainSpec::NaiveBayes { bins, threshold } => write!(f, "nb:{bins}:{threshold}"),
            TrainSpec::Knn { k, standardized } => {
                write!(f, "knn:{k}:{}", if *standardized { "std" } else { "raw" })
            }
            TrainSpec::Ensemble { members } => {
                let parts: Vec<String> = members.iter().map(|m| m.to_string()).collect();
                write!(f, "[{}]", parts.join(","))
            }
        }
    }
}

impl FromStr for TrainSpec {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, ClassifyError> {
        let err = |reason: &str| ClassifyError::Spec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["nb", rest @ ..] if rest.len() <= 2 => {
                let bins = match rest.first() {
                    Some(b) => b.parse().map_err(|_| err("bins must be an integer"))?,
                    None => DEFAULT_BINS,
                };
                let threshold = match rest.get(1) {
                    Some(t) => t.parse().map_err(|_| err("threshold must be a number"))?,
                    None => DEFAULT_THRESHOLD,
                };
                Ok(TrainSpec::NaiveBayes { bins, threshold })
            }
            ["knn", rest @ ..] if rest.len() <= 2 => {
                let k = match rest.first() {
                    Some(k) => k.parse().map_err(|_| err("k must be an integer"))?,
                    None => 1,
                };
                let standardized = match rest.get(1) {
                    None | Some(&"std") => true,
                    Some(&"raw") => false,
                    Some(_) => return Err(err("scaling must be std or raw")),
                };
                Ok(TrainSpec::Knn { k, standardized })
            }
            _ => Err(err("expected nb[:bins[:threshold]] or knn[:k[:std|raw]]")),
        }
    }
}

const MODEL_FORMAT: &str = "ilsi-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct ModelDocument<T> {
    format: String,
    version: u32,
    model: Model<T>,
}

/// Versioned JSON document holding every field needed for prediction.
pub fn model_to_json<T: Real>(model: &Model<T>) -> String {
    let doc = ModelDocument {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        model: model.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("models serialise");
    s.push('\n');
    s
}

pub fn model_from_json<T: Real>(text: &str, origin: &str) -> Result<Model<T>, ClassifyError> {
    let err = |message: String| ClassifyError::ModelFile {
        path: origin.to_string(),
        message,
    };
    let doc: ModelDocument<T> = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    if doc.format != MODEL_FORMAT {
        return Err(err(format!("unexpected format {:?}", doc.format)));
    }
    if doc.version != MODEL_VERSION {
        return Err(err(format!("unsupported version {}", doc.version)));
    }
    Ok(doc.model)
}

pub fn save_model<T: Real>(model: &Model<T>, path: impl AsRef<Path>) -> Result<(), ClassifyError> {
    let path = path.as_ref();
    std::fs::write(path, model_to_json(model)).map_err(|e| ClassifyError::ModelFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_model<T: Real>(path: impl AsRef<Path>) -> Result<Model<T>, ClassifyError> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ClassifyError::ModelFile {
        path: origin.clone(),
        message: e.to_string(),
    })?;
    model_from_json(&text, &origin)
}
