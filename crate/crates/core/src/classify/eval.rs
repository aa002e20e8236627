//! Confusion matrices, sensitivity/specificity and data splitting.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifyError, TrainSpec};
use crate::features::{ClassLabel, Dataset};
use crate::scalar::Real;

/// Confusion matrix (rows = truth, columns = prediction) with one-vs-rest
/// metrics for `positive`. Undefined rates are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub labels: Vec<ClassLabel>,
    pub matrix: Vec<Vec<usize>>,
    pub positive: ClassLabel,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_matrix(labels: Vec<ClassLabel>, matrix: Vec<Vec<usize>>, positive: ClassLabel) -> Self {
        let total: usize = matrix.iter().flatten().sum();
        let correct: usize = (0..labels.len()).map(|i| matrix[i][i]).sum();
        let (mut tp, mut fn_, mut fp, mut tn) = (0, 0, 0, 0);
        let pos = labels.iter().position(|l| *l == positive);
        for (t, row) in matrix.iter().enumerate() {
            for (p, &n) in row.iter().enumerate() {
                match (Some(t) == pos, Some(p) == pos) {
                    (true, true) => tp += n,
                    (true, false) => fn_ += n,
                    (false, true) => fp += n,
                    (false, false) => tn += n,
                }
            }
        }
        Self {
            accuracy: ratio(correct, total),
            sensitivity: ratio(tp, tp + fn_),
            specificity: ratio(tn, tn + fp),
            labels,
            matrix,
            positive,
        }
    }

    pub fn total(&self) -> usize {
        self.matrix.iter().flatten().sum()
    }

    pub fn count(&self, truth: &ClassLabel, predicted: &ClassLabel) -> usize {
        let t = self.labels.iter().position(|l| l == truth);
        let p = self.labels.iter().position(|l| l == predicted);
        match (t, p) {
            (Some(t), Some(p)) => self.matrix[t][p],
            _ => 0,
        }
    }
}

fn percent(v: f64) -> String {
    if v.is_nan() {
        "n/a".into()
    } else {
        format!("{:.0}%", v * 100.0)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .labels
            .iter()
            .map(|l| l.as_str().len())
            .max()
            .unwrap_or(0)
            .max("truth \\ predicted".len());
        write!(f, "{:width$}", "truth \\ predicted")?;
        for l in &self.labels {
            write!(f, "  {l:>w$}", w = l.as_str().len().max(4))?;
        }
        writeln!(f)?;
        for (l, row) in self.labels.iter().zip(&self.matrix) {
            write!(f, "{:width$}", l.as_str())?;
            for (c, n) in self.labels.iter().zip(row) {
                write!(f, "  {n:>w$}", w = c.as_str().len().max(4))?;
            }
            writeln!(f)?;
        }
        writeln!(f, "positive class: {}", self.positive)?;
        writeln!(f, "accuracy:    {} ({:.6})", percent(self.accuracy), self.accuracy)?;
        writeln!(f, "sensitivity: {} ({:.6})", percent(self.sensitivity), self.sensitivity)?;
        write!(f, "specificity: {} ({:.6})", percent(self.specificity), self.specificity)
    }
}

/// Builds the confusion matrix over labels in first-appearance order (truth
/// first, then any predicted-only labels).
pub fn evaluate(
    predictions: &[ClassLabel],
    truth: &[ClassLabel],
    positive: &ClassLabel,
) -> Result<EvalReport, ClassifyError> {
    if predictions.len() != truth.len() {
        return Err(ClassifyError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let mut labels: Vec<ClassLabel> = Vec::new();
    for l in truth.iter().chain(predictions) {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    let idx = |l: &ClassLabel| labels.iter().position(|x| x == l).expect("collected above");
    let mut matrix = vec![vec![0; labels.len()]; labels.len()];
    for (p, t) in predictions.iter().zip(truth) {
        matrix[idx(t)][idx(p)] += 1;
    }
    Ok(EvalReport::from_matrix(labels, matrix, positive.clone()))
}

/// Stratified, seeded split. Each class contributes `round(n · fraction)`
/// rows to the training part, clamped so both parts keep at least one row.
/// Rows keep their original relative order inside each part.
pub fn split_holdout<T: Real>(
    ds: &Dataset<T>,
    fraction: f64,
    seed: u64,
) -> Result<(Dataset<T>, Dataset<T>), ClassifyError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(ClassifyError::Fraction(fraction));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in ds.classes() {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i] == class).collect();
        if idx.len() < 2 {
            return Err(ClassifyError::TooFewRowsInClass {
                label: class,
                found: idx.len(),
                needed: 2,
            });
        }
        idx.shuffle(&mut rng);
        let n_train = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Predictions for every row from a model trained on all other rows.
pub fn leave_one_out<T: Real>(
    ds: &Dataset<T>,
    spec: &TrainSpec,
) -> Result<Vec<ClassLabel>, ClassifyError> {
    (0..ds.len())
        .map(|i| {
            let model = spec.fit(&ds.without_row(i))?;
            Ok(model.predict(&ds.row(i))?.label)
        })
        .collect()
}

pub fn predict_all<T: Real, C: Classifier<T> + ?Sized>(
    model: &C,
    ds: &Dataset<T>,
) -> Result<Vec<ClassLabel>, ClassifyError> {
    ds.iter().map(|(v, _)| Ok(model.predict(&v)?.label)).collect()
}
