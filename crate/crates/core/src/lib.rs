//! Laser speckle texture analysis for freeze-drying monitoring.
//!
//! The pipeline runs from 8-bit speckle frames ([`image`], [`speckle`])
//! through windowed texture measures ([`texture`]) and labelled feature
//! datasets ([`features`]) to classifiers ([`classify`]) and a debounced
//! streaming detector for the onset of micro-collapse ([`monitor`]).
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`). The aliases
//! below fix the scalar to `f64`, which is what the command-line tool and
//! the on-disk formats use.

pub mod classify;
pub mod cli;
pub mod error;
pub mod features;
pub mod image;
pub mod monitor;
pub mod scalar;
pub mod speckle;
pub mod texture;

pub use error::{Error, Result};
pub use image::{AreaLabel, GrayImage, Roi};
pub use scalar::Real;
pub use texture::{KernelSize, TextureMeasure};

pub use features::{ClassLabel, Schema};

pub type Field = image::Field<f64>;
pub type FeatureVector = features::FeatureVector<f64>;
pub type Dataset = features::Dataset<f64>;
pub type StandardizationParams = features::StandardizationParams<f64>;
pub type DiscretizationModel = classify::DiscretizationModel<f64>;
pub type NaiveBayesModel = classify::NaiveBayesModel<f64>;
pub type KnnModel = classify::KnnModel<f64>;
pub type EnsembleModel = classify::EnsembleModel<f64>;
pub type Model = classify::Model<f64>;
pub type TrendModel = monitor::TrendModel<f64>;
pub type DetectionEvent = monitor::DetectionEvent<f64>;
pub type FrameSample = monitor::FrameSample<f64>;

pub type FieldF32 = image::Field<f32>;
pub type FeatureVectorF32 = features::FeatureVector<f32>;
pub type DatasetF32 = features::Dataset<f32>;
pub type ModelF32 = classify::Model<f32>;
pub type TrendModelF32 = monitor::TrendModel<f32>;
