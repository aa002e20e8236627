//! Feature vectors, labelled datasets, column standardisation and CSV I/O.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::io;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{extract_window, GrayImage, ImageError, Roi};
use crate::scalar::Real;
use crate::texture::{measure_window, KernelSize, TextureError, TextureMeasure, WINDOW_LAYOUT};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Texture(#[from] TextureError),
    #[error("schema mismatch: expected {expected} attributes, got {found}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("attribute names differ from the fitted schema at column {column} ({expected:?} vs {found:?})")]
    SchemaNames {
        column: usize,
        expected: String,
        found: String,
    },
    #[error("duplicate attribute name {0:?}")]
    DuplicateAttribute(String),
    #[error("unknown attribute {0:?}")]
    UnknownAttribute(String),
    #[error("need at least {needed} rows, have {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("class labels must be non-empty")]
    EmptyLabel,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: missing header row")]
    MissingHeader { path: String },
    #[error("{path}: first header column must be \"label\", found {found:?}")]
    BadHeader { path: String, found: String },
    #[error("{path}:{line}: expected {expected} fields, found {found}")]
    RaggedRow {
        path: String,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: column {column:?} is not a number: {cell:?}")]
    NotNumeric {
        path: String,
        line: u64,
        column: String,
        cell: String,
    },
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
}

/// Class name, compared case-insensitively but displayed verbatim.
#[derive(Debug, Clone, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ClassLabel(String);

impl ClassLabel {
    pub const NORMAL: &'static str = "normal";
    pub const MICRO_COLLAPSE: &'static str = "micro-collapse";

    pub fn new(name: impl Into<String>) -> Result<Self, FeatureError> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(FeatureError::EmptyLabel);
        }
        Ok(Self(name))
    }

    pub fn normal() -> Self {
        Self(Self::NORMAL.into())
    }

    pub fn micro_collapse() -> Self {
        Self(Self::MICRO_COLLAPSE.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialEq for ClassLabel {
    fn eq(&self, other: &Self) -> bool {
        self.0.eq_ignore_ascii_case(&other.0)
    }
}

impl Hash for ClassLabel {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for b in self.0.bytes() {
            state.write_u8(b.to_ascii_lowercase());
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for ClassLabel {
    type Error = FeatureError;
    fn try_from(s: String) -> Result<Self, FeatureError> {
        Self::new(s)
    }
}

impl From<ClassLabel> for String {
    fn from(l: ClassLabel) -> String {
        l.0
    }
}

impl std::str::FromStr for ClassLabel {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, FeatureError> {
        Self::new(s)
    }
}

/// Ordered attribute names shared by the vectors of one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(Arc<Vec<String>>);

impl Schema {
    pub fn new(names: Vec<String>) -> Result<Self, FeatureError> {
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(FeatureError::DuplicateAttribute(n.clone()));
            }
        }
        Ok(Self(Arc::new(names)))
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|n| n == name)
    }

    /// Checks that `other` names the same attributes in the same order.
    pub fn check(&self, other: &Schema) -> Result<(), FeatureError> {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ok(());
        }
        if self.len() != other.len() {
            return Err(FeatureError::SchemaMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        match self.0.iter().zip(other.0.iter()).position(|(a, b)| a != b) {
            None => Ok(()),
            Some(column) => Err(FeatureError::SchemaNames {
                column,
                expected: self.0[column].clone(),
                found: other.0[column].clone(),
            }),
        }
    }
}

/// `<Measure>_<k>x<k>` optionally followed by `_<Area>`.
pub fn attribute_name(measure: TextureMeasure, k: KernelSize, area: Option<&str>) -> String {
    match area {
        Some(a) => format!("{}_{}_{}", measure.name(), k, a),
        None => format!("{}_{}", measure.name(), k),
    }
}

/// Nine attribute names of one sampling window.
pub fn window_attribute_names(area: Option<&str>) -> Vec<String> {
    WINDOW_LAYOUT
        .iter()
        .map(|&(m, k)| attribute_name(m, k, area))
        .collect()
}

/// Schema produced by [`build_feature_vector`] for `rois`. Labelled windows
/// use their area letter; unlabelled ones are tagged `R<position>`.
pub fn roi_schema(rois: &[Roi]) -> Result<Schema, FeatureError> {
    let mut names = Vec::with_capacity(rois.len() * 9);
    for (i, roi) in rois.iter().enumerate() {
        let tag = match roi.label {
            Some(l) => l.to_string(),
            None => format!("R{i}"),
        };
        names.extend(window_attribute_names(Some(&tag)));
    }
    Schema::new(names)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T> {
    values: Vec<T>,
    schema: Schema,
}

impl<T: Real> FeatureVector<T> {
    pub fn new(values: Vec<T>, schema: Schema) -> Result<Self, FeatureError> {
        if values.len() != schema.len() {
            return Err(FeatureError::SchemaMismatch {
                expected: schema.len(),
                found: values.len(),
            });
        }
        Ok(Self { values, schema })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn attribute_names(&self) -> &[String] {
        self.schema.names()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<T> {
        self.schema.index_of(name).map(|i| self.values[i])
    }
}

/// Texture attributes of every window in `rois`, concatenated in roi order.
pub fn build_feature_vector<T: Real>(
    img: &GrayImage,
    rois: &[Roi],
) -> Result<FeatureVector<T>, FeatureError> {
    let schema = roi_schema(rois)?;
    build_with_schema(img, rois, schema)
}

pub(crate) fn build_with_schema<T: Real>(
    img: &GrayImage,
    rois: &[Roi],
    schema: Schema,
) -> Result<FeatureVector<T>, FeatureError> {
    let mut values = Vec::with_capacity(rois.len() * 9);
    for roi in rois {
        let window = extract_window(img, roi)?;
        values.extend(measure_window::<T, _>(&window)?);
    }
    FeatureVector::new(values, schema)
}

/// Labelled rows sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    schema: Schema,
    rows: Vec<Vec<T>>,
    labels: Vec<ClassLabel>,
}

impl<T: Real> Dataset<T> {
    pub fn new(schema: Schema) -> Self {
        Self {
            schema,
            rows: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn from_rows(
        schema: Schema,
        rows: Vec<Vec<T>>,
        labels: Vec<ClassLabel>,
    ) -> Result<Self, FeatureError> {
        if rows.len() != labels.len() {
            return Err(FeatureError::SchemaMismatch {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        let mut ds = Self::new(schema);
        for (row, label) in rows.into_iter().zip(labels) {
            ds.push_values(row, label)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, v: FeatureVector<T>, label: ClassLabel) -> Result<(), FeatureError> {
        self.schema.check(&v.schema)?;
        self.rows.push(v.values);
        self.labels.push(label);
        Ok(())
    }

    pub fn push_values(&mut self, values: Vec<T>, label: ClassLabel) -> Result<(), FeatureError> {
        if values.len() != self.schema.len() {
            return Err(FeatureError::SchemaMismatch {
                expected: self.schema.len(),
                found: values.len(),
            });
        }
        self.rows.push(values);
        self.labels.push(label);
        Ok(())
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn attribute_names(&self) -> &[String] {
        self.schema.names()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> FeatureVector<T> {
        FeatureVector {
            values: self.rows[i].clone(),
            schema: self.schema.clone(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureVector<T>, &ClassLabel)> + '_ {
        (0..self.len()).map(|i| (self.row(i), &self.labels[i]))
    }

    /// Distinct labels in order of first appearance.
    pub fn classes(&self) -> Vec<ClassLabel> {
        let mut out: Vec<ClassLabel> = Vec::new();
        for l in &self.labels {
            if !out.contains(l) {
                out.push(l.clone());
            }
        }
        out
    }

    pub fn class_count(&self, label: &ClassLabel) -> usize {
        self.labels.iter().filter(|l| *l == label).count()
    }

    pub fn column(&self, name: &str) -> Result<Vec<T>, FeatureError> {
        let idx = self
            .schema
            .index_of(name)
            .ok_or_else(|| FeatureError::UnknownAttribute(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    pub fn without_row(&self, skip: usize) -> Self {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| i != skip).collect();
        self.subset(&idx)
    }

    /// Mean of attribute `name` over rows labelled `label`.
    pub fn class_mean(&self, name: &str, label: &ClassLabel) -> Result<T, FeatureError> {
        let col = self.column(name)?;
        let (sum, n) = col
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| *l == label)
            .fold((T::zero(), 0usize), |(s, n), (&v, _)| (s + v, n + 1));
        if n == 0 {
            return Err(FeatureError::TooFewRows { needed: 1, found: 0 });
        }
        Ok(sum / T::from_count(n))
    }

    pub fn map_rows(&self, f: impl Fn(&[T]) -> Vec<T>) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: self.rows.iter().map(|r| f(r)).collect(),
            labels: self.labels.clone(),
        }
    }
}

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct StandardizationParams<T> {
    pub schema: Schema,
    pub means: Vec<T>,
    pub stds: Vec<T>,
}

impl<T: Real> StandardizationParams<T> {
    pub fn apply_values(&self, values: &[T]) -> Vec<T> {
        values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| if s > T::zero() { (v - m) / s } else { T::zero() })
            .collect()
    }

    pub fn apply_dataset(&self, ds: &Dataset<T>) -> Result<Dataset<T>, FeatureError> {
        self.schema.check(&ds.schema)?;
        Ok(ds.map_rows(|r| self.apply_values(r)))
    }
}

pub fn fit_standardization<T: Real>(
    ds: &Dataset<T>,
) -> Result<StandardizationParams<T>, FeatureError> {
    if ds.len() < 2 {
        return Err(FeatureError::TooFewRows {
            needed: 2,
            found: ds.len(),
        });
    }
    let n = T::from_count(ds.len());
    let cols = ds.schema.len();
    let mut means = vec![T::zero(); cols];
    for row in &ds.rows {
        for (m, &v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![T::zero(); cols];
    for row in &ds.rows {
        for ((s, &v), &m) in stds.iter_mut().zip(row).zip(&means) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
    }
    Ok(StandardizationParams {
        schema: ds.schema.clone(),
        means,
        stds,
    })
}

/// `(value − mean) / std` per column; zero-variance columns map to 0.
pub fn apply_standardization<T: Real>(
    v: &FeatureVector<T>,
    p: &StandardizationParams<T>,
) -> Result<FeatureVector<T>, FeatureError> {
    p.schema.check(&v.schema)?;
    Ok(FeatureVector {
        values: p.apply_values(&v.values),
        schema: v.schema.clone(),
    })
}

pub fn read_csv<T: Real>(path: impl AsRef<Path>) -> Result<Dataset<T>, FeatureError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv_from(file, &path.display().to_string())
}

/// Parses a dataset from any reader; `origin` names the source in errors.
pub fn read_csv_from<T: Real, R: io::Read>(
    reader: R,
    origin: &str,
) -> Result<Dataset<T>, FeatureError> {
    let path = origin.to_string();
    let csv_err = |e: csv::Error| FeatureError::Csv {
        path: path.clone(),
        message: e.to_string(),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_err)?,
        None => return Err(FeatureError::MissingHeader { path }),
    };
    match header.get(0) {
        Some(first) if first.eq_ignore_ascii_case("label") => {}
        other => {
            return Err(FeatureError::BadHeader {
                path,
                found: other.unwrap_or("").to_string(),
            })
        }
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let schema = Schema::new(names)?;
    let mut ds = Dataset::new(schema);
    for record in records {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != ds.schema.len() + 1 {
            return Err(FeatureError::RaggedRow {
                path,
                line,
                expected: ds.schema.len() + 1,
                found: record.len(),
            });
        }
        let label = ClassLabel::new(&record[0]).map_err(|_| FeatureError::NotNumeric {
            path: path.clone(),
            line,
            column: "label".into(),
            cell: String::new(),
        })?;
        let mut values = Vec::with_capacity(ds.schema.len());
        for (cell, name) in record.iter().skip(1).zip(ds.schema.names()) {
            let v = cell
                .parse::<T>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FeatureError::NotNumeric {
                    path: path.clone(),
                    line,
                    column: name.clone(),
                    cell: cell.to_string(),
                })?;
            values.push(v);
        }
        ds.push_values(values, label)?;
    }
    Ok(ds)
}

pub fn write_csv<T: Real>(ds: &Dataset<T>, path: impl AsRef<Path>) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let io_err = |source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    write_csv_to(ds, file).map_err(io_err)
}

pub fn write_csv_to<T: Real, W: io::Write>(ds: &Dataset<T>, writer: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let mut header = vec!["label".to_string()];
    header.extend(ds.schema.names().iter().cloned());
    w.write_record(&header)?;
    for (row, label) in ds.rows.iter().zip(&ds.labels) {
        let mut rec = vec![label.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()
}

const FIXTURE_NORMAL: [[f64; 9]; 10] = [
    [378.0, 6002.0, 77.47, 0.5, 883.0, 7621.0, 87.3, 0.47, 69.95],
    [385.0, 5233.0, 72.34, 0.5, 612.0, 6580.0, 81.12, 0.48, 65.29],
    [247.0, 5215.0, 72.21, 0.46, 491.0, 6526.0, 80.78, 0.44, 65.31],
    [337.0, 5726.0, 75.67, 0.5, 606.0, 7273.0, 85.28, 0.49, 68.62],
    [370.0, 5634.0, 75.06, 0.55, 727.0, 7110.0, 84.32, 0.53, 67.79],
    [398.0, 5445.0, 73.79, 0.51, 607.0, 6841.0, 82.71, 0.49, 67.07],
    [340.0, 5800.0, 76.16, 0.46, 646.0, 7379.0, 85.9, 0.44, 68.61],
    [386.0, 5390.0, 73.42, 0.48, 670.0, 6865.0, 82.86, 0.47, 66.72],
    [329.0, 3788.0, 61.55, 0.59, 532.0, 4861.0, 69.72, 0.57, 55.88],
    [397.0, 6344.0, 79.65, 0.46, 655.0, 8005.0, 89.47, 0.44, 71.88],
];

const FIXTURE_MICRO_COLLAPSE: [[f64; 9]; 10] = [
    [343.0, 3266.0, 57.15, 0.56, 511.0, 4138.0, 64.33, 0.53, 51.3],
    [334.0, 3499.0, 59.15, 0.58, 498.0, 4392.0, 66.27, 0.56, 52.88],
    [362.0, 4194.0, 64.76, 0.4, 501.0, 5226.0, 72.29, 0.36, 57.98],
    [327.0, 3112.0, 55.79, 0.51, 471.0, 3888.0, 62.35, 0.48, 49.88],
    [316.0, 4201.0, 64.82, 0.5, 537.0, 5288.0, 72.72, 0.47, 58.2],
    [294.0, 2977.0, 54.56, 0.54, 511.0, 3755.0, 61.28, 0.52, 48.9],
    [325.0, 3770.0, 61.4, 0.53, 530.0, 4723.0, 68.72, 0.49, 55.04],
    [346.0, 3442.0, 58.67, 0.42, 512.0, 4273.0, 65.37, 0.38, 52.54],
    [275.0, 2884.0, 53.7, 0.38, 438.0, 3593.0, 59.94, 0.35, 47.95],
    [346.0, 3629.0, 60.24, 0.32, 495.0, 4542.0, 67.39, 0.28, 53.95],
];

/// The twenty reference texture rows: ten `normal`, then ten
/// `micro-collapse`. The source sampling area is not recorded, so attribute
/// names carry no area suffix.
pub fn reference_fixture<T: Real>() -> Dataset<T> {
    let schema = Schema::new(window_attribute_names(None)).expect("distinct names");
    let mut ds = Dataset::new(schema);
    for (rows, label) in [
        (&FIXTURE_NORMAL, ClassLabel::normal()),
        (&FIXTURE_MICRO_COLLAPSE, ClassLabel::micro_collapse()),
    ] {
        for row in rows {
            ds.push_values(row.iter().map(|&v| T::lit(v)).collect(), label.clone())
                .expect("fixture rows have nine values");
        }
    }
    ds
}
