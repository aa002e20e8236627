//! Windowed texture measures.
//!
//! Every measure scans a `k×k` kernel over all centre positions whose
//! neighbourhood lies entirely inside the sampling window (a border of
//! `k / 2` pixels is skipped), evaluates a per-centre response and returns
//! the arithmetic mean of the responses. Using a mean rather than a sum keeps
//! values comparable between 50×50 and 80×80 windows.
//!
//! Neighbourhood statistics (Levine, Sigma, Skewness, StdDev) use all `k²`
//! pixels with population denominators. Russ sums over the `k² − 1`
//! non-centre pixels. Responses are reduced sequentially in row-major centre
//! order, so results are reproducible bit for bit.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{Field, GrayImage};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextureError {
    #[error("kernel size {0} is invalid (must be odd and at least 3)")]
    InvalidKernel(usize),
    #[error("{width}x{height} window is smaller than the {k}x{k} kernel")]
    WindowTooSmall { width: usize, height: usize, k: usize },
}

/// Odd square kernel edge length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct KernelSize(usize);

impl KernelSize {
    pub const K3: KernelSize = KernelSize(3);
    pub const K5: KernelSize = KernelSize(5);

    pub fn new(k: usize) -> Result<Self, TextureError> {
        if k >= 3 && k % 2 == 1 {
            Ok(Self(k))
        } else {
            Err(TextureError::InvalidKernel(k))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }

    pub fn area(self) -> usize {
        self.0 * self.0
    }
}

impl TryFrom<usize> for KernelSize {
    type Error = TextureError;
    fn try_from(k: usize) -> Result<Self, TextureError> {
        Self::new(k)
    }
}

impl From<KernelSize> for usize {
    fn from(k: KernelSize) -> usize {
        k.0
    }
}

impl fmt::Display for KernelSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{0}x{0}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TextureMeasure {
    Russ,
    Levine,
    Sigma,
    Skewness,
    StdDev,
}

impl TextureMeasure {
    pub const ALL: [TextureMeasure; 5] = [
        TextureMeasure::Russ,
        TextureMeasure::Levine,
        TextureMeasure::Sigma,
        TextureMeasure::Skewness,
        TextureMeasure::StdDev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TextureMeasure::Russ => "Russ",
            TextureMeasure::Levine => "Levine",
            TextureMeasure::Sigma => "Sigma",
            TextureMeasure::Skewness => "Skewness",
            TextureMeasure::StdDev => "StdDev",
        }
    }

    pub fn evaluate<T: Real, G: PixelGrid<T>>(
        self,
        window: &G,
        k: KernelSize,
    ) -> Result<T, TextureError> {
        match self {
            TextureMeasure::Russ => russ(window, k),
            TextureMeasure::Levine => levine(window, k),
            TextureMeasure::Sigma => sigma(window, k),
            TextureMeasure::Skewness => skewness(window, k),
            TextureMeasure::StdDev => std_dev(window, k),
        }
    }
}

impl fmt::Display for TextureMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TextureMeasure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown texture measure {s:?}"))
    }
}

/// The nine attributes of one sampling window, in table column order.
pub const WINDOW_LAYOUT: [(TextureMeasure, KernelSize); 9] = [
    (TextureMeasure::Russ, KernelSize::K3),
    (TextureMeasure::Levine, KernelSize::K3),
    (TextureMeasure::Sigma, KernelSize::K3),
    (TextureMeasure::Skewness, KernelSize::K3),
    (TextureMeasure::Russ, KernelSize::K5),
    (TextureMeasure::Levine, KernelSize::K5),
    (TextureMeasure::Sigma, KernelSize::K5),
    (TextureMeasure::Skewness, KernelSize::K5),
    (TextureMeasure::StdDev, KernelSize::K3),
];

/// Read access to a 2-D intensity grid.
pub trait PixelGrid<T> {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn at(&self, x: usize, y: usize) -> T;
}

impl<T: Real> PixelGrid<T> for GrayImage {
    fn width(&self) -> usize {
        GrayImage::width(self)
    }
    fn height(&self) -> usize {
        GrayImage::height(self)
    }
    #[inline]
    fn at(&self, x: usize, y: usize) -> T {
        T::from_count(self.get(x, y) as usize)
    }
}

impl<T: Real> PixelGrid<T> for Field<T> {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    #[inline]
    fn at(&self, x: usize, y: usize) -> T {
        self.get(x, y)
    }
}

/// Mean of `response(neighbourhood, centre_value)` over all valid centres.
/// The neighbourhood slice is row-major with the centre at index `k² / 2`.
fn scan<T, G, F>(window: &G, k: KernelSize, mut response: F) -> Result<T, TextureError>
where
    T: Real,
    G: PixelGrid<T>,
    F: FnMut(&[T], T) -> T,
{
    let (w, h, k) = (window.width(), window.height(), k.get());
    if w < k || h < k {
        return Err(TextureError::WindowTooSmall {
            width: w,
            height: h,
            k,
        });
    }
    let r = k / 2;
    let mut hood = vec![T::zero(); k * k];
    let mut total = T::zero();
    for cy in r..h - r {
        for cx in r..w - r {
            for dy in 0..k {
                for dx in 0..k {
                    hood[dy * k + dx] = window.at(cx + dx - r, cy + dy - r);
                }
            }
            total += response(&hood, hood[k * k / 2]);
        }
    }
    let centres = (w - 2 * r) * (h - 2 * r);
    Ok(total / T::from_count(centres))
}

fn mean<T: Real>(hood: &[T]) -> T {
    hood.iter().copied().sum::<T>() / T::from_count(hood.len())
}

fn central_moment<T: Real>(hood: &[T], mean: T, order: i32) -> T {
    hood.iter().map(|&p| (p - mean).powi(order)).sum::<T>() / T::from_count(hood.len())
}

/// Root of the summed squared centre-to-neighbour differences.
pub fn russ<T: Real, G: PixelGrid<T>>(window: &G, k: KernelSize) -> Result<T, TextureError> {
    scan(window, k, |hood, centre| {
        hood.iter()
            .map(|&p| (centre - p) * (centre - p))
            .sum::<T>()
            .sqrt()
    })
}

/// Neighbourhood population variance.
pub fn levine<T: Real, G: PixelGrid<T>>(window: &G, k: KernelSize) -> Result<T, TextureError> {
    scan(window, k, |hood, _| central_moment(hood, mean(hood), 2))
}

/// Square root of the Levine response, taken per centre before averaging.
pub fn sigma<T: Real, G: PixelGrid<T>>(window: &G, k: KernelSize) -> Result<T, TextureError> {
    scan(window, k, |hood, _| central_moment(hood, mean(hood), 2).sqrt())
}

/// Standardised third central moment; flat neighbourhoods respond 0.
pub fn skewness<T: Real, G: PixelGrid<T>>(window: &G, k: KernelSize) -> Result<T, TextureError> {
    scan(window, k, |hood, _| {
        let m = mean(hood);
        let var = central_moment(hood, m, 2);
        if var <= T::epsilon() * m * m {
            return T::zero();
        }
        central_moment(hood, m, 3) / (var * var.sqrt())
    })
}

/// Population standard deviation of the neighbourhood.
pub fn std_dev<T: Real, G: PixelGrid<T>>(window: &G, k: KernelSize) -> Result<T, TextureError> {
    scan(window, k, |hood, _| {
        let m = mean(hood);
        let n = T::from_count(hood.len());
        (hood.iter().map(|&x| (x - m) * (x - m)).sum::<T>() / n).sqrt()
    })
}

/// All nine window attributes in [`WINDOW_LAYOUT`] order.
pub fn measure_window<T: Real, G: PixelGrid<T>>(window: &G) -> Result<[T; 9], TextureError> {
    let mut out = [T::zero(); 9];
    for (slot, (measure, k)) in out.iter_mut().zip(WINDOW_LAYOUT) {
        *slot = measure.evaluate(window, k)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp3() -> GrayImage {
        GrayImage::new(3, 3, (1..=9).collect()).unwrap()
    }

    #[test]
    fn kernel_validation() {
        assert!(KernelSize::new(3).is_ok());
        assert!(KernelSize::new(7).is_ok());
        assert_eq!(KernelSize::new(4), Err(TextureError::InvalidKernel(4)));
        assert_eq!(KernelSize::new(1), Err(TextureError::InvalidKernel(1)));
        assert_eq!(KernelSize::K5.to_string(), "5x5");
    }

    #[test]
    fn ramp_window_hand_values() {
        let w = ramp3();
        let k = KernelSize::K3;
        let r: f64 = russ(&w, k).unwrap();
        assert!((r - 60f64.sqrt()).abs() < 1e-12);
        let l: f64 = levine(&w, k).unwrap();
        assert!((l - 60.0 / 9.0).abs() < 1e-12);
        let s: f64 = sigma(&w, k).unwrap();
        assert!((s - (60.0f64 / 9.0).sqrt()).abs() < 1e-12);
        let sd: f64 = std_dev(&w, k).unwrap();
        assert!((sd - (60.0f64 / 9.0).sqrt()).abs() < 1e-12);
        let sk: f64 = skewness(&w, k).unwrap();
        assert!(sk.abs() < 1e-12);
    }

    #[test]
    fn constant_window_is_all_zero() {
        let w = GrayImage::filled(50, 50, 173).unwrap();
        let v: [f64; 9] = measure_window(&w).unwrap();
        assert_eq!(v, [0.0; 9]);
    }

    #[test]
    fn window_smaller_than_kernel() {
        let w = GrayImage::filled(4, 9, 1).unwrap();
        assert!(matches!(
            levine::<f64, _>(&w, KernelSize::K5),
            Err(TextureError::WindowTooSmall { k: 5, .. })
        ));
        assert!(measure_window::<f64, _>(&w).is_err());
    }

    #[test]
    fn single_centre_sigma_is_root_levine() {
        let w = GrayImage::from_fn(5, 5, |x, y| ((x * 37 + y * 91) % 251) as u8).unwrap();
        let v: [f64; 9] = measure_window(&w).unwrap();
        assert!((v[6] - v[5].sqrt()).abs() < 1e-12);
        // 3x3 has nine centres: Jensen gives mean(√x) ≤ √mean(x)
        assert!(v[2] <= v[1].sqrt() + 1e-12);
    }

    #[test]
    fn f32_agrees_with_f64() {
        let w = GrayImage::from_fn(12, 12, |x, y| ((x * 13 + y * y * 7) % 256) as u8).unwrap();
        let a: [f64; 9] = measure_window(&w).unwrap();
        let b: [f32; 9] = measure_window(&w).unwrap();
        for (x, y) in a.iter().zip(b) {
            assert!((x - y as f64).abs() <= 1e-4 * x.abs().max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn measure_names_parse() {
        for m in TextureMeasure::ALL {
            assert_eq!(m.name().parse::<TextureMeasure>().unwrap(), m);
        }
        assert!("Sigm".parse::<TextureMeasure>().is_err());
    }
}
