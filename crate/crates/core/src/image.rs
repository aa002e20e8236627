//! Grayscale frames, binary PGM I/O and sampling windows.
//!
//! Pixel origin is the top-left corner; storage is row-major.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<ImageError>,
    },
    #[error("malformed PGM header at byte {offset}: {field}")]
    MalformedHeader { offset: usize, field: &'static str },
    #[error("unsupported PGM maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("truncated PGM payload: expected {expected} bytes after offset {offset}, found {found}")]
    TruncatedPayload {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("PNG decode failed: {0}")]
    Png(String),
    #[error("PNG must be 8-bit grayscale, got {0}")]
    PngFormat(String),
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("pixel buffer has {found} bytes, expected {expected}")]
    BufferSize { expected: usize, found: usize },
    #[error("roi {roi} does not fit inside {width}x{height} image")]
    RoiOutOfBounds {
        roi: Roi,
        width: usize,
        height: usize,
    },
    #[error("invalid roi specification {spec:?}: {reason}")]
    RoiSpec { spec: String, reason: &'static str },
    #[error("image {width}x{height} is too small for {roi_size}x{roi_size} windows")]
    TooSmall {
        width: usize,
        height: usize,
        roi_size: usize,
    },
    #[error("band count must be at least 1")]
    BandCount,
}

/// 8-bit grayscale intensity field.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GrayImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidDimensions { width, height });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(ImageError::BufferSize {
                expected,
                found: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Real-valued copy of the intensities.
    pub fn to_field<T: Real>(&self) -> Field<T> {
        Field {
            width: self.width,
            height: self.height,
            data: self.pixels.iter().map(|&p| T::from_count(p as usize)).collect(),
        }
    }

    /// Rotation by 90° clockwise.
    pub fn rotate90(&self) -> GrayImage {
        let (w, h) = (self.width, self.height);
        GrayImage::from_fn(h, w, |x, y| self.get(y, h - 1 - x)).expect("non-empty")
    }

    pub fn full_roi(&self) -> Roi {
        Roi::new(0, 0, self.width, self.height)
    }
}

/// Dense real-valued grid, row-major, same orientation as [`GrayImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::InvalidDimensions { width, height });
        }
        if data.len() != width * height {
            return Err(ImageError::BufferSize {
                expected: width * height,
                found: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Field<T> {
        Field {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn window(&self, roi: &Roi) -> Result<Field<T>, ImageError> {
        roi.check_fits(self.width, self.height)?;
        let mut data = Vec::with_capacity(roi.w * roi.h);
        for y in roi.y..roi.y + roi.h {
            let start = y * self.width + roi.x;
            data.extend_from_slice(&self.data[start..start + roi.w]);
        }
        Ok(Field {
            width: roi.w,
            height: roi.h,
            data,
        })
    }
}

/// Sampling-area tag of a window placed on a laser diffusion band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AreaLabel {
    A,
    B,
    C,
}

impl fmt::Display for AreaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AreaLabel::A => "A",
            AreaLabel::B => "B",
            AreaLabel::C => "C",
        })
    }
}

impl FromStr for AreaLabel {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s.trim() {
            "A" | "a" => Ok(AreaLabel::A),
            "B" | "b" => Ok(AreaLabel::B),
            "C" | "c" => Ok(AreaLabel::C),
            _ => Err(()),
        }
    }
}

/// Rectangular region of interest; `x`, `y` are the 0-based top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub label: Option<AreaLabel>,
}

impl Roi {
    pub fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self {
            x,
            y,
            w,
            h,
            label: None,
        }
    }

    pub fn labeled(mut self, label: AreaLabel) -> Self {
        self.label = Some(label);
        self
    }

    pub fn contains(&self, px: usize, py: usize) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.w >= 1 && self.h >= 1 && self.x + self.w <= width && self.y + self.h <= height
    }

    fn check_fits(&self, width: usize, height: usize) -> Result<(), ImageError> {
        if self.fits(width, height) {
            Ok(())
        } else {
            Err(ImageError::RoiOutOfBounds {
                roi: *self,
                width,
                height,
            })
        }
    }
}

impl fmt::Display for Roi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x, self.y, self.w, self.h)?;
        if let Some(label) = self.label {
            write!(f, ":{label}")?;
        }
        Ok(())
    }
}

/// Parses `x,y,w,h[:label]`.
impl FromStr for Roi {
    type Err = ImageError;

    fn from_str(spec: &str) -> Result<Self, ImageError> {
        let err = |reason| ImageError::RoiSpec {
            spec: spec.to_string(),
            reason,
        };
        let (coords, label) = match spec.split_once(':') {
            Some((c, l)) => (
                c,
                Some(
                    l.parse::<AreaLabel>()
                        .map_err(|_| err("label must be A, B or C"))?,
                ),
            ),
            None => (spec, None),
        };
        let parts: Vec<&str> = coords.split(',').collect();
        if parts.len() != 4 {
            return Err(err("expected four comma-separated integers"));
        }
        let mut v = [0usize; 4];
        for (slot, part) in v.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|_| err("coordinates must be non-negative integers"))?;
        }
        if v[2] == 0 || v[3] == 0 {
            return Err(err("width and height must be positive"));
        }
        Ok(Roi {
            x: v[0],
            y: v[1],
            w: v[2],
            h: v[3],
            label,
        })
    }
}

const PNG_MAGIC: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Loads a binary PGM (P5, maxval 255) or an 8-bit grayscale PNG.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, ImageError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ImageError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let decoded = if bytes.starts_with(PNG_MAGIC) {
        decode_png(&bytes)
    } else {
        decode_pgm(&bytes)
    };
    decoded.map_err(|e| ImageError::File {
        path: path.display().to_string(),
        source: Box::new(e),
    })
}

/// Writes `img` as binary PGM with the header `P5\n<w> <h>\n255\n`.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), ImageError> {
    let path = path.as_ref();
    let io_err = |source| ImageError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    file.write_all(&encode_pgm(img)).map_err(io_err)?;
    file.flush().map_err(io_err)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let header = format!("P5\n{} {}\n255\n", img.width, img.height);
    let mut out = Vec::with_capacity(header.len() + img.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&img.pixels);
    out
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, field: &'static str) -> Result<u32, ImageError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::MalformedHeader {
                offset: start,
                field,
            });
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(ImageError::MalformedHeader {
                offset: start,
                field,
            })
    }
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if !bytes.starts_with(b"P5") {
        return Err(ImageError::MalformedHeader {
            offset: 0,
            field: "magic number (expected P5)",
        });
    }
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::InvalidDimensions { width, height });
    }
    if maxval != 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    // exactly one whitespace byte separates maxval from the raster
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(ImageError::MalformedHeader {
                offset: cur.pos,
                field: "whitespace after maxval",
            })
        }
    }
    let expected = width * height;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(ImageError::TruncatedPayload {
            offset: cur.pos,
            expected,
            found: payload.len(),
        });
    }
    GrayImage::new(width, height, payload[..expected].to_vec())
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let decoder = png::Decoder::new(io::Cursor::new(bytes));
    let mut reader = decoder
        .read_info()
        .map_err(|e| ImageError::Png(e.to_string()))?;
    let (color, depth) = reader.output_color_type();
    if color != png::ColorType::Grayscale || depth != png::BitDepth::Eight {
        return Err(ImageError::PngFormat(format!("{color:?} {depth:?}")));
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| ImageError::Png("image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| ImageError::Png(e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let mut pixels = Vec::with_capacity(w * h);
    for row in buf.chunks(info.line_size).take(h) {
        pixels.extend_from_slice(&row[..w]);
    }
    GrayImage::new(w, h, pixels)
}

/// Copies the `roi` sub-image out of `img`.
pub fn extract_window(img: &GrayImage, roi: &Roi) -> Result<GrayImage, ImageError> {
    roi.check_fits(img.width, img.height)?;
    let mut pixels = Vec::with_capacity(roi.w * roi.h);
    for y in roi.y..roi.y + roi.h {
        let start = y * img.width + roi.x;
        pixels.extend_from_slice(&img.pixels[start..start + roi.w]);
    }
    GrayImage::new(roi.w, roi.h, pixels)
}

/// Summed-area table with a zero guard row/column.
struct IntegralImage {
    stride: usize,
    sums: Vec<u64>,
}

impl IntegralImage {
    fn new(img: &GrayImage) -> Self {
        let stride = img.width + 1;
        let mut sums = vec![0u64; stride * (img.height + 1)];
        for y in 0..img.height {
            let mut row = 0u64;
            for x in 0..img.width {
                row += img.get(x, y) as u64;
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self { stride, sums }
    }

    fn sum(&self, x: usize, y: usize, w: usize, h: usize) -> u64 {
        let s = self.stride;
        self.sums[(y + h) * s + x + w] + self.sums[y * s + x]
            - self.sums[y * s + x + w]
            - self.sums[(y + h) * s + x]
    }
}

/// Best-effort automatic placement of square sampling windows.
///
/// The intensity histogram is split into `band_count` equal-frequency bands.
/// The brightest band (specular core) is dropped; for every other band the
/// `roi_size` window whose mean is closest to the band's median intensity is
/// returned, darkest band first. Windows covering the brightest pixel are
/// never considered. Ties go to the first position in row-major order.
pub fn suggest_rois(
    img: &GrayImage,
    band_count: usize,
    roi_size: usize,
) -> Result<Vec<Roi>, ImageError> {
    if band_count == 0 {
        return Err(ImageError::BandCount);
    }
    if roi_size == 0 || roi_size > img.width || roi_size > img.height {
        return Err(ImageError::TooSmall {
            width: img.width,
            height: img.height,
            roi_size,
        });
    }
    let mut sorted = img.pixels.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    if sorted[0] == sorted[n - 1] {
        return Ok(Vec::new());
    }

    let argmax = img
        .pixels
        .iter()
        .enumerate()
        .fold(0, |best, (i, &p)| if p > img.pixels[best] { i } else { best });
    let (core_x, core_y) = (argmax % img.width, argmax / img.width);

    let integral = IntegralImage::new(img);
    let area = (roi_size * roi_size) as f64;
    let mut out: Vec<Roi> = Vec::new();
    for band in 0..band_count - 1 {
        let lo = n * band / band_count;
        let hi = n * (band + 1) / band_count;
        if hi <= lo {
            continue;
        }
        let centre = sorted[(lo + hi) / 2] as f64;
        let mut best: Option<(f64, Roi)> = None;
        for y in 0..=img.height - roi_size {
            for x in 0..=img.width - roi_size {
                let roi = Roi::new(x, y, roi_size, roi_size);
                if roi.contains(core_x, core_y) {
                    continue;
                }
                let mean = integral.sum(x, y, roi_size, roi_size) as f64 / area;
                let dist = (mean - centre).abs();
                if best.is_none_or(|(d, _)| dist < d) {
                    best = Some((dist, roi));
                }
            }
        }
        if let Some((_, roi)) = best {
            if !out.contains(&roi) {
                out.push(roi);
            }
        }
    }
    Ok(out)
}
