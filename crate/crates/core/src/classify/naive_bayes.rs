//! Naive Bayes over equal-frequency bins with mutual-information attribute
//! selection.
//!
//! The network has the class node as the sole parent of every attribute, so
//! the joint probability is the prior times the product of the per-attribute
//! conditionals. The threshold `t` selects attributes whose normalised
//! mutual information `MI(attribute; class) / H(class)` on the training bins
//! is at least `t`. This is a stand-in for a structure-learning tool's
//! connection threshold, not a reproduction of it.

use serde::{Deserialize, Serialize};

use super::discretize::{fit_equal_frequency, DiscretizationModel};
use super::{Classifier, ClassifyError, Prediction};
use crate::features::{ClassLabel, Dataset, FeatureVector, Schema};
use crate::scalar::Real;

pub const DEFAULT_BINS: usize = 5;
pub const DEFAULT_THRESHOLD: f64 = 0.1;
/// Laplace pseudo-count.
pub const SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NaiveBayesModel<T> {
    pub classes: Vec<ClassLabel>,
    pub priors: Vec<T>,
    /// `conditionals[class][attribute][bin]`, smoothed, summing to 1 over bins.
    pub conditionals: Vec<Vec<Vec<T>>>,
    /// Normalised mutual information of every attribute with the class.
    pub scores: Vec<T>,
    pub selected: Vec<usize>,
    pub threshold: T,
    /// Set when no attribute reached the threshold and the best one was kept.
    pub fallback_selection: bool,
    pub discretization: DiscretizationModel<T>,
}

/// Posterior distribution over the training classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior<T> {
    pub label: ClassLabel,
    pub posteriors: Vec<(ClassLabel, T)>,
}

fn entropy<T: Real>(counts: impl Iterator<Item = usize>, total: usize) -> T {
    let n = T::from_count(total);
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = T::from_count(c) / n;
            -p * p.ln()
        })
        .sum()
}

/// `MI(bin; class) / H(class)` from a `[bin][class]` contingency table.
pub(crate) fn normalized_mutual_information<T: Real>(table: &[Vec<usize>]) -> T {
    let classes = table.first().map_or(0, Vec::len);
    let total: usize = table.iter().flatten().sum();
    if total == 0 {
        return T::zero();
    }
    let class_totals: Vec<usize> = (0..classes)
        .map(|c| table.iter().map(|row| row[c]).sum())
        .collect();
    let h_class: T = entropy(class_totals.iter().copied(), total);
    if h_class <= T::zero() {
        return T::zero();
    }
    let n = T::from_count(total);
    let mut mi = T::zero();
    for row in table {
        let bin_total: usize = row.iter().sum();
        for (c, &joint) in row.iter().enumerate() {
            if joint == 0 {
                continue;
            }
            let p_joint = T::from_count(joint) / n;
            let p_bin = T::from_count(bin_total) / n;
            let p_class = T::from_count(class_totals[c]) / n;
            mi += p_joint * (p_joint / (p_bin * p_class)).ln();
        }
    }
    (mi / h_class).max(T::zero())
}

pub fn nb_train<T: Real>(
    ds: &Dataset<T>,
    bins: usize,
    threshold: T,
) -> Result<NaiveBayesModel<T>, ClassifyError> {
    if ds.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let classes = ds.classes();
    if classes.len() < 2 {
        return Err(ClassifyError::SingleClass);
    }
    for c in &classes {
        let n = ds.class_count(c);
        if n < 2 {
            return Err(ClassifyError::TooFewRowsInClass {
                label: c.clone(),
                found: n,
                needed: 2,
            });
        }
    }
    let disc = fit_equal_frequency(ds, bins)?;
    let class_of: Vec<usize> = ds
        .labels()
        .iter()
        .map(|l| classes.iter().position(|c| c == l).expect("label from dataset"))
        .collect();
    let binned: Vec<Vec<usize>> = ds.rows().iter().map(|r| disc.discretize_values(r)).collect();

    let total = T::from_count(ds.len());
    let class_totals: Vec<usize> = classes.iter().map(|c| ds.class_count(c)).collect();
    let priors = class_totals
        .iter()
        .map(|&n| T::from_count(n) / total)
        .collect();

    let attrs = ds.schema().len();
    let alpha = T::lit(SMOOTHING);
    let mut conditionals = vec![Vec::with_capacity(attrs); classes.len()];
    let mut scores = Vec::with_capacity(attrs);
    for a in 0..attrs {
        let nbins = disc.bin_count(a);
        let mut table = vec![vec![0usize; classes.len()]; nbins];
        for (row, &c) in binned.iter().zip(&class_of) {
            table[row[a]][c] += 1;
        }
        for (c, per_class) in conditionals.iter_mut().enumerate() {
            let denom = T::from_count(class_totals[c]) + alpha * T::from_count(nbins);
            per_class.push(
                (0..nbins)
                    .map(|b| (T::from_count(table[b][c]) + alpha) / denom)
                    .collect(),
            );
        }
        scores.push(normalized_mutual_information::<T>(&table));
    }

    let mut selected: Vec<usize> = (0..attrs).filter(|&a| scores[a] >= threshold).collect();
    let fallback_selection = selected.is_empty();
    if fallback_selection {
        let best = (0..attrs)
            .reduce(|best, a| if scores[a] > scores[best] { a } else { best })
            .ok_or(ClassifyError::NoAttributes)?;
        selected.push(best);
    }
    Ok(NaiveBayesModel {
        classes,
        priors,
        conditionals,
        scores,
        selected,
        threshold,
        fallback_selection,
        discretization: disc,
    })
}

impl<T: Real> NaiveBayesModel<T> {
    pub fn selected_names(&self) -> Vec<&str> {
        self.selected
            .iter()
            .map(|&a| self.discretization.schema.names()[a].as_str())
            .collect()
    }

    pub fn bins(&self) -> usize {
        self.discretization.bins
    }

    /// Normalised posteriors; the first maximal class in training order wins.
    pub fn posterior(&self, v: &FeatureVector<T>) -> Result<Posterior<T>, ClassifyError> {
        self.discretization.schema.check(v.schema())?;
        let bins = self.discretization.discretize_values(v.values());
        let log_post: Vec<T> = (0..self.classes.len())
            .map(|c| {
                self.selected.iter().fold(self.priors[c].ln(), |acc, &a| {
                    acc + self.conditionals[c][a][bins[a]].ln()
                })
            })
            .collect();
        let max = log_post.iter().copied().fold(T::neg_infinity(), T::max);
        let weights: Vec<T> = log_post.iter().map(|&l| (l - max).exp()).collect();
        let z: T = weights.iter().copied().sum();
        let mut best = 0;
        for (c, &w) in weights.iter().enumerate() {
            if w > weights[best] {
                best = c;
            }
        }
        Ok(Posterior {
            label: self.classes[best].clone(),
            posteriors: self
                .classes
                .iter()
                .cloned()
                .zip(weights.iter().map(|&w| w / z))
                .collect(),
        })
    }
}

pub fn nb_predict<T: Real>(
    m: &NaiveBayesModel<T>,
    v: &FeatureVector<T>,
) -> Result<Posterior<T>, ClassifyError> {
    m.posterior(v)
}

impl<T: Real> Classifier<T> for NaiveBayesModel<T> {
    fn schema(&self) -> &Schema {
        &self.discretization.schema
    }

    fn predict(&self, v: &FeatureVector<T>) -> Result<Prediction<T>, ClassifyError> {
        let p = self.posterior(v)?;
        let confidence = p
            .posteriors
            .iter()
            .find(|(l, _)| *l == p.label)
            .map_or(T::zero(), |&(_, q)| q);
        Ok(Prediction {
            label: p.label,
            confidence,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> ClassLabel {
        ClassLabel::new(s).unwrap()
    }

    fn toy(names: &[&str], rows: &[(&[f64], &str)]) -> Dataset<f64> {
        let schema = Schema::new(names.iter().map(|s| s.to_string()).collect()).unwrap();
        Dataset::from_rows(
            schema,
            rows.iter().map(|(r, _)| r.to_vec()).collect(),
            rows.iter().map(|(_, l)| label(l)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfectly_correlated_attribute() {
        let ds = toy(
            &["x", "noise"],
            &[
                (&[0.0, 1.0], "A"),
                (&[0.0, 2.0], "A"),
                (&[1.0, 1.0], "B"),
                (&[1.0, 2.0], "B"),
            ],
        );
        let m = nb_train(&ds, 2, 0.1).unwrap();
        assert!((m.scores[0] - 1.0).abs() < 1e-12);
        assert!(m.scores[1].abs() < 1e-12);
        assert_eq!(m.selected, vec![0]);
        assert!(!m.fallback_selection);
    }

    #[test]
    fn toy_posterior_is_three_quarters() {
        let ds = toy(
            &["x"],
            &[(&[0.0], "A"), (&[0.0], "A"), (&[1.0], "B"), (&[1.0], "B")],
        );
        let m = nb_train(&ds, 2, 0.1).unwrap();
        let p = m.posterior(&ds.row(0)).unwrap();
        assert_eq!(p.label, label("A"));
        assert!((p.posteriors[0].1 - 0.75).abs() < 1e-12);
        assert!((p.posteriors[1].1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn uninformative_model_ties_to_first_class() {
        let ds = toy(
            &["x"],
            &[(&[0.0], "A"), (&[1.0], "A"), (&[0.0], "B"), (&[1.0], "B")],
        );
        let m = nb_train(&ds, 2, 0.1).unwrap();
        assert!(m.fallback_selection);
        let p = m.posterior(&ds.row(3)).unwrap();
        assert_eq!(p.label, label("A"));
        assert!((p.posteriors[0].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn tables_are_normalised() {
        let ds = toy(
            &["x", "y"],
            &[
                (&[0.1, 5.0], "A"),
                (&[0.4, 3.0], "A"),
                (&[0.2, 1.0], "A"),
                (&[0.9, 2.0], "B"),
                (&[0.7, 4.0], "B"),
            ],
        );
        let m = nb_train(&ds, 3, 0.0).unwrap();
        assert!((m.priors.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for per_class in &m.conditionals {
            for table in per_class {
                assert!((table.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn training_errors() {
        let one = toy(&["x"], &[(&[0.0], "A"), (&[1.0], "A")]);
        assert!(matches!(nb_train(&one, 2, 0.1), Err(ClassifyError::SingleClass)));
        let thin = toy(&["x"], &[(&[0.0], "A"), (&[1.0], "A"), (&[1.0], "B")]);
        assert!(matches!(
            nb_train(&thin, 2, 0.1),
            Err(ClassifyError::TooFewRowsInClass { found: 1, .. })
        ));
        let empty = toy(&["x"], &[]);
        assert!(matches!(nb_train(&empty, 2, 0.1), Err(ClassifyError::EmptyDataset)));
    }
}
