//! Random-phasor speckle synthesis and speckle contrast.
//!
//! Each pixel receives the normalised sum of `n_phasors` equal-amplitude
//! contributions with independent phases uniform on `[0, 2π)`; its intensity
//! is the squared magnitude of that sum. For `n_phasors` large this is fully
//! developed speckle: exponential intensity statistics and unit contrast.
//!
//! `correlation_radius` is an extension for producing grain-structured
//! fixtures: each phase channel is box-averaged over a `(2r + 1)²`
//! neighbourhood before summation. It is not part of the phasor model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{Field, GrayImage, ImageError, Roi};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum SpeckleError {
    #[error("amplitude and phase lists differ in length ({amplitudes} vs {phases})")]
    LengthMismatch { amplitudes: usize, phases: usize },
    #[error("phasor sum needs at least one contribution")]
    Empty,
    #[error("invalid speckle configuration: {0}")]
    Config(&'static str),
    #[error("speckle contrast needs at least 2 pixels, region has {0}")]
    TooFewPixels(usize),
    #[error(transparent)]
    Image(#[from] ImageError),
}

/// Complex field amplitude at one pixel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexAmplitude<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> ComplexAmplitude<T> {
    pub fn intensity(&self) -> T {
        self.re * self.re + self.im * self.im
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasorFieldConfig {
    pub width: usize,
    pub height: usize,
    pub n_phasors: usize,
    pub amplitude: f64,
    pub seed: u64,
    pub correlation_radius: usize,
}

impl Default for PhasorFieldConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            n_phasors: 100,
            amplitude: 1.0,
            seed: 0,
            correlation_radius: 0,
        }
    }
}

impl PhasorFieldConfig {
    pub fn validate(&self) -> Result<(), SpeckleError> {
        if self.width == 0 || self.height == 0 {
            return Err(SpeckleError::Config("width and height must be at least 1"));
        }
        if self.n_phasors == 0 {
            return Err(SpeckleError::Config("n_phasors must be at least 1"));
        }
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(SpeckleError::Config("amplitude must be finite and non-negative"));
        }
        Ok(())
    }
}

/// `(1/√N) · Σ |I_j| · e^{iφ_j}`.
pub fn phasor_sum<T: Real>(
    amplitudes: &[T],
    phases: &[T],
) -> Result<ComplexAmplitude<T>, SpeckleError> {
    if amplitudes.len() != phases.len() {
        return Err(SpeckleError::LengthMismatch {
            amplitudes: amplitudes.len(),
            phases: phases.len(),
        });
    }
    if amplitudes.is_empty() {
        return Err(SpeckleError::Empty);
    }
    let mut acc = ComplexAmplitude::<T>::default();
    for (&a, &phi) in amplitudes.iter().zip(phases) {
        let (s, c) = phi.sin_cos();
        acc.re += a * c;
        acc.im += a * s;
    }
    let norm = T::from_count(amplitudes.len()).sqrt().recip();
    Ok(ComplexAmplitude {
        re: acc.re * norm,
        im: acc.im * norm,
    })
}

/// Generator for one pixel; the stream is keyed on the pixel index so the
/// output does not depend on how pixels are scheduled across threads.
fn pixel_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn draw_phases<T: Real>(rng: &mut ChaCha8Rng, out: &mut [T]) {
    let tau = T::lit(std::f64::consts::TAU);
    for p in out {
        *p = T::lit(rng.gen::<f64>()) * tau;
    }
}

/// Real-valued intensity field `|I_com|²`, before any quantisation.
pub fn simulate_field<T: Real>(cfg: &PhasorFieldConfig) -> Result<Field<T>, SpeckleError> {
    cfg.validate()?;
    let n = cfg.n_phasors;
    let amps = vec![T::lit(cfg.amplitude); n];
    let pixels = cfg.width * cfg.height;

    let data: Vec<T> = if cfg.correlation_radius == 0 {
        (0..pixels)
            .into_par_iter()
            .map_init(
                || vec![T::zero(); n],
                |phases, idx| {
                    let mut rng = pixel_rng(cfg.seed, idx);
                    draw_phases(&mut rng, phases);
                    phasor_sum(&amps, phases).map(|c| c.intensity())
                },
            )
            .collect::<Result<_, _>>()?
    } else {
        // phases[idx * n + j]
        let mut phases = vec![T::zero(); pixels * n];
        phases
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(idx, chunk)| draw_phases(&mut pixel_rng(cfg.seed, idx), chunk));
        let smoothed = box_smooth_channels(&phases, cfg.width, cfg.height, n, cfg.correlation_radius);
        smoothed
            .par_chunks(n)
            .map(|ph| phasor_sum(&amps, ph).map(|c| c.intensity()))
            .collect::<Result<_, _>>()?
    };
    Ok(Field::new(cfg.width, cfg.height, data)?)
}

/// Box mean with the window clipped at the borders, applied per channel.
fn box_smooth_channels<T: Real>(
    data: &[T],
    width: usize,
    height: usize,
    channels: usize,
    radius: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); data.len()];
    out.par_chunks_mut(channels)
        .enumerate()
        .for_each(|(idx, dst)| {
            let (x, y) = (idx % width, idx / width);
            let (x0, x1) = (x.saturating_sub(radius), (x + radius).min(width - 1));
            let (y0, y1) = (y.saturating_sub(radius), (y + radius).min(height - 1));
            let count = T::from_count((x1 - x0 + 1) * (y1 - y0 + 1));
            for yy in y0..=y1 {
                for xx in x0..=x1 {
                    let src = &data[(yy * width + xx) * channels..][..channels];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
            for d in dst.iter_mut() {
                *d /= count;
            }
        });
    out
}

/// Linear map of a non-negative field onto 0..=255 by its maximum.
pub fn quantize<T: Real>(field: &Field<T>) -> GrayImage {
    let max = field.data.iter().copied().fold(T::zero(), T::max);
    let pixels = field
        .data
        .iter()
        .map(|&v| {
            if max > T::zero() {
                (v / max * T::lit(255.0))
                    .round()
                    .to_u8()
                    .unwrap_or(255)
            } else {
                0
            }
        })
        .collect();
    GrayImage::new(field.width, field.height, pixels).expect("field dimensions are valid")
}

pub fn simulate_speckle(cfg: &PhasorFieldConfig) -> Result<GrayImage, SpeckleError> {
    Ok(quantize(&simulate_field::<f64>(cfg)?))
}

/// Contrast `σ / ⟨I⟩` of raw intensity values, population σ; 0 for zero mean.
pub fn contrast<T: Real>(values: &[T]) -> Result<T, SpeckleError> {
    if values.len() < 2 {
        return Err(SpeckleError::TooFewPixels(values.len()));
    }
    let n = T::from_count(values.len());
    let mean = values.iter().copied().sum::<T>() / n;
    if mean == T::zero() {
        return Ok(T::zero());
    }
    let var = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<T>()
        / n;
    Ok(var.sqrt() / mean)
}

/// Speckle contrast of an image, optionally restricted to `roi`.
pub fn speckle_contrast<T: Real>(img: &GrayImage, roi: Option<&Roi>) -> Result<T, SpeckleError> {
    let field = img.to_field::<T>();
    match roi {
        Some(r) => contrast(&field.window(r)?.data),
        None => contrast(&field.data),
    }
}

pub fn field_contrast<T: Real>(field: &Field<T>, roi: Option<&Roi>) -> Result<T, SpeckleError> {
    match roi {
        Some(r) => contrast(&field.window(r)?.data),
        None => contrast(&field.data),
    }
}
