//! Streaming micro-collapse detection and polynomial trend models.
//!
//! Each frame is classified in index order. A state change is committed only
//! after `debounce` consecutive frames agree on a label different from the
//! current state; the event is stamped with the first frame of that run.
//! The trend model is a diagnostic cross-check on one texture attribute.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{Classifier, ClassifyError};
use crate::features::{
    build_feature_vector, roi_schema, ClassLabel, Dataset, FeatureError, FeatureVector,
};
use crate::image::{load_image, GrayImage, ImageError, Roi};
use crate::scalar::Real;

pub const DEFAULT_DEBOUNCE: usize = 3;
pub const DEFAULT_TREND_DEGREE: usize = 6;
/// 1.2 minutes between laser-illuminated frames.
pub const DEFAULT_CADENCE_SECONDS: f64 = 72.0;

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("need at least {needed} points for a degree-{degree} fit, got {found}")]
    InsufficientPoints {
        degree: usize,
        needed: usize,
        found: usize,
    },
    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(f64),
    #[error("non-finite sample in trend series")]
    NonFinite,
    #[error("normal equations are singular")]
    Singular,
    #[error("debounce must be at least 1")]
    Debounce,
    #[error("empty frame stream")]
    EmptyStream,
    #[error("frame {index} is out of order (previous index {previous})")]
    FrameOrder { index: usize, previous: usize },
    #[error("frame {index} has timestamp {timestamp} earlier than the previous frame")]
    TimestampOrder { index: usize, timestamp: f64 },
    #[error("frame {index}: image-sourced frames need sampling windows")]
    MissingRois { index: usize },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

/// Least-squares polynomial over a `(timestamp, value)` series.
///
/// Fitting happens on timestamps mapped to `[−1, 1]`; `coefficients` are the
/// equivalent ascending-degree coefficients in original time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrendModel<T> {
    pub attribute: String,
    pub degree: usize,
    pub coefficients: Vec<T>,
    pub residual_rms: T,
    pub t_min: T,
    pub t_max: T,
    centre: T,
    half_range: T,
    scaled: Vec<T>,
}

fn horner<T: Real>(coeffs: &[T], x: T) -> T {
    coeffs.iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
}

/// Gaussian elimination with partial pivoting; `a` is row-major `n × n`.
fn solve_linear<T: Real>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>, MonitorError> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(T::zero(), |m, &v| m.max(v.abs()));
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite"))
            .expect("non-empty range");
        if a[pivot][col].abs() <= T::epsilon() * scale {
            return Err(MonitorError::Singular);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (dst, &src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= f * src;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let tail: T = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Ok(x)
}

fn binomial<T: Real>(n: usize, k: usize) -> T {
    (0..k).fold(T::one(), |acc, i| {
        acc * T::from_count(n - i) / T::from_count(i + 1)
    })
}

pub fn fit_polynomial_trend<T: Real>(
    series: &[(T, T)],
    degree: usize,
    attribute: impl Into<String>,
) -> Result<TrendModel<T>, MonitorError> {
    let needed = degree + 1;
    if series.len() < needed {
        return Err(MonitorError::InsufficientPoints {
            degree,
            needed,
            found: series.len(),
        });
    }
    if series.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(MonitorError::NonFinite);
    }
    let mut times: Vec<T> = series.iter().map(|p| p.0).collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if let Some(w) = times.windows(2).find(|w| w[0] == w[1]) {
        return Err(MonitorError::DuplicateTimestamp(w[0].to_f64_lossy()));
    }
    let (t_min, t_max) = (times[0], times[times.len() - 1]);
    let two = T::lit(2.0);
    let centre = (t_min + t_max) / two;
    let half_range = if t_max > t_min {
        (t_max - t_min) / two
    } else {
        T::one()
    };

    let n = needed;
    let mut power_sums = vec![T::zero(); 2 * n - 1];
    let mut rhs = vec![T::zero(); n];
    for &(t, v) in series {
        let u = (t - centre) / half_range;
        let mut p = T::one();
        for (i, s) in power_sums.iter_mut().enumerate() {
            *s += p;
            if i < n {
                rhs[i] += p * v;
            }
            p *= u;
        }
    }
    let normal: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| power_sums[i + j]).collect())
        .collect();
    let scaled = solve_linear(normal, rhs)?;

    // Σ s_i ((t − c)/h)^i expanded in powers of t
    let mut coefficients = vec![T::zero(); n];
    for (i, &s) in scaled.iter().enumerate() {
        let base = s / half_range.powi(i as i32);
        for (j, c) in coefficients.iter_mut().enumerate().take(i + 1) {
            *c += base * binomial::<T>(i, j) * (-centre).powi((i - j) as i32);
        }
    }

    let sse: T = series
        .iter()
        .map(|&(t, v)| {
            let r = horner(&scaled, (t - centre) / half_range) - v;
            r * r
        })
        .sum();
    let residual_rms = (sse / T::from_count(series.len())).sqrt();
    Ok(TrendModel {
        attribute: attribute.into(),
        degree,
        coefficients,
        residual_rms,
        t_min,
        t_max,
        centre,
        half_range,
        scaled,
    })
}

impl<T: Real> TrendModel<T> {
    pub fn evaluate(&self, t: T) -> T {
        horner(&self.scaled, (t - self.centre) / self.half_range)
    }
}

const CROSSING_GRID: usize = 4096;
const BISECTION_STEPS: usize = 200;

/// Earliest time in the fitted range at which the trend passes from above
/// `threshold` to at or below it.
pub fn locate_transition_from_trend<T: Real>(model: &TrendModel<T>, threshold: T) -> Option<T> {
    let f = |t: T| model.evaluate(t) - threshold;
    let span = model.t_max - model.t_min;
    if span <= T::zero() {
        return None;
    }
    let step = span / T::from_count(CROSSING_GRID);
    let mut prev_t = model.t_min;
    let mut prev = f(prev_t);
    for i in 1..=CROSSING_GRID {
        let t = if i == CROSSING_GRID {
            model.t_max
        } else {
            model.t_min + step * T::from_count(i)
        };
        let cur = f(t);
        if prev > T::zero() && cur <= T::zero() {
            let (mut lo, mut hi) = (prev_t, t);
            for _ in 0..BISECTION_STEPS {
                let mid = (lo + hi) / T::lit(2.0);
                if mid <= lo || mid >= hi {
                    break;
                }
                if f(mid) > T::zero() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(hi);
        }
        prev_t = t;
        prev = cur;
    }
    None
}

/// Midpoint between the class means of `attribute`.
pub fn class_midpoint<T: Real>(
    ds: &Dataset<T>,
    attribute: &str,
    a: &ClassLabel,
    b: &ClassLabel,
) -> Result<T, FeatureError> {
    Ok((ds.class_mean(attribute, a)? + ds.class_mean(attribute, b)?) / T::lit(2.0))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameSource<T> {
    ImagePath(PathBuf),
    Image(GrayImage),
    Features(FeatureVector<T>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample<T> {
    pub index: usize,
    /// Seconds since the start of the run.
    pub timestamp: T,
    pub source: FrameSource<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameLabel<T> {
    pub index: usize,
    pub timestamp: T,
    pub label: ClassLabel,
    pub confidence: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DetectionEvent<T> {
    pub frame: usize,
    pub timestamp: T,
    pub from: ClassLabel,
    pub to: ClassLabel,
    /// Mean confidence over the confirming run of frames.
    pub confidence: T,
}

struct PendingRun<T> {
    start: usize,
    timestamp: T,
    label: ClassLabel,
    frames: usize,
    confidence_sum: T,
}

/// Debounced state tracker over a stream of labelled frames.
pub struct StateTracker<T> {
    debounce: usize,
    committed: Option<ClassLabel>,
    pending: Option<PendingRun<T>>,
}

impl<T: Real> StateTracker<T> {
    pub fn new(debounce: usize) -> Result<Self, MonitorError> {
        if debounce == 0 {
            return Err(MonitorError::Debounce);
        }
        Ok(Self {
            debounce,
            committed: None,
            pending: None,
        })
    }

    pub fn state(&self) -> Option<&ClassLabel> {
        self.committed.as_ref()
    }

    pub fn push(&mut self, frame: &FrameLabel<T>) -> Option<DetectionEvent<T>> {
        let committed = match &self.committed {
            None => {
                self.committed = Some(frame.label.clone());
                return None;
            }
            Some(c) => c,
        };
        if frame.label == *committed {
            self.pending = None;
            return None;
        }
        let run = match &mut self.pending {
            Some(run) if run.label == frame.label => {
                run.frames += 1;
                run.confidence_sum += frame.confidence;
                run
            }
            slot => slot.insert(PendingRun {
                start: frame.index,
                timestamp: frame.timestamp,
                label: frame.label.clone(),
                frames: 1,
                confidence_sum: frame.confidence,
            }),
        };
        if run.frames < self.debounce {
            return None;
        }
        let run = self.pending.take().expect("present");
        let from = self.committed.replace(run.label.clone()).expect("committed");
        Some(DetectionEvent {
            frame: run.start,
            timestamp: run.timestamp,
            from,
            to: run.label,
            confidence: run.confidence_sum / T::from_count(run.frames),
        })
    }
}

/// Per-frame classification driver enforcing frame order.
pub struct DetectionLoop<'a, T, C: ?Sized> {
    classifier: &'a C,
    rois: Vec<Roi>,
    tracker: StateTracker<T>,
    last: Option<(usize, T)>,
}

impl<'a, T: Real, C: Classifier<T> + ?Sized> DetectionLoop<'a, T, C> {
    pub fn new(classifier: &'a C, rois: &[Roi], debounce: usize) -> Result<Self, MonitorError> {
        if !rois.is_empty() {
            classifier.schema().check(&roi_schema(rois)?)?;
        }
        Ok(Self {
            classifier,
            rois: rois.to_vec(),
            tracker: StateTracker::new(debounce)?,
            last: None,
        })
    }

    fn features(&self, sample: &FrameSample<T>) -> Result<FeatureVector<T>, MonitorError> {
        let from_image = |img: &GrayImage| -> Result<FeatureVector<T>, MonitorError> {
            if self.rois.is_empty() {
                return Err(MonitorError::MissingRois {
                    index: sample.index,
                });
            }
            Ok(build_feature_vector(img, &self.rois)?)
        };
        match &sample.source {
            FrameSource::Features(v) => Ok(v.clone()),
            FrameSource::Image(img) => from_image(img),
            FrameSource::ImagePath(p) => from_image(&load_image(p)?),
        }
    }

    pub fn push(
        &mut self,
        sample: &FrameSample<T>,
    ) -> Result<(FrameLabel<T>, Option<DetectionEvent<T>>), MonitorError> {
        if let Some((index, ts)) = self.last {
            if sample.index <= index {
                return Err(MonitorError::FrameOrder {
                    index: sample.index,
                    previous: index,
                });
            }
            if sample.timestamp < ts {
                return Err(MonitorError::TimestampOrder {
                    index: sample.index,
                    timestamp: sample.timestamp.to_f64_lossy(),
                });
            }
        }
        let v = self.features(sample)?;
        let p = self.classifier.predict(&v)?;
        self.last = Some((sample.index, sample.timestamp));
        let frame = FrameLabel {
            index: sample.index,
            timestamp: sample.timestamp,
            label: p.label,
            confidence: p.confidence,
        };
        let event = self.tracker.push(&frame);
        Ok((frame, event))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutput<T> {
    pub labels: Vec<FrameLabel<T>>,
    pub events: Vec<DetectionEvent<T>>,
}

pub fn run_detection_loop<T: Real, C: Classifier<T> + ?Sized>(
    stream: &[FrameSample<T>],
    classifier: &C,
    rois: &[Roi],
    debounce: usize,
) -> Result<DetectionOutput<T>, MonitorError> {
    if stream.is_empty() {
        return Err(MonitorError::EmptyStream);
    }
    let mut lp = DetectionLoop::new(classifier, rois, debounce)?;
    let mut out = DetectionOutput {
        labels: Vec::with_capacity(stream.len()),
        events: Vec::new(),
    };
    for sample in stream {
        let (label, event) = lp.push(sample)?;
        out.labels.push(label);
        out.events.extend(event);
    }
    Ok(out)
}

/// Debounced events for an already-labelled sequence.
pub fn debounce_labels<T: Real>(
    frames: &[FrameLabel<T>],
    debounce: usize,
) -> Result<Vec<DetectionEvent<T>>, MonitorError> {
    let mut tracker = StateTracker::new(debounce)?;
    Ok(frames.iter().filter_map(|f| tracker.push(f)).collect())
}

/// Writes `frame,timestamp,from,to,confidence`.
pub fn write_events_csv<T: Real, W: io::Write>(
    events: &[DetectionEvent<T>],
    writer: W,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["frame", "timestamp", "from", "to", "confidence"])?;
    for e in events {
        w.write_record([
            e.frame.to_string(),
            e.timestamp.to_string(),
            e.from.to_string(),
            e.to.to_string(),
            e.confidence.to_string(),
        ])?;
    }
    w.flush()
}

pub fn save_events_csv<T: Real>(
    events: &[DetectionEvent<T>],
    path: impl AsRef<Path>,
) -> Result<(), MonitorError> {
    let path = path.as_ref();
    let io_err = |source| MonitorError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_events_csv(events, file).map_err(io_err)
}
