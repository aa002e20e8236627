use thiserror::Error;

use crate::classify::ClassifyError;
use crate::features::FeatureError;
use crate::image::ImageError;
use crate::monitor::MonitorError;
use crate::speckle::SpeckleError;
use crate::texture::TextureError;

/// Crate-level error, wrapping each module's error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Speckle(#[from] SpeckleError),
    #[error(transparent)]
    Texture(#[from] TextureError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
