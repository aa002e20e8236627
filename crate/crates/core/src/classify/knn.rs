use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifyError, Prediction};
use crate::features::{
    fit_standardization, ClassLabel, Dataset, FeatureVector, Schema, StandardizationParams,
};
use crate::scalar::Real;

/// k-nearest-neighbour classifier with Euclidean distance.
///
/// When trained with standardisation the stored rows are already centred and
/// scaled, and every query is mapped through the same parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KnnModel<T> {
    pub schema: Schema,
    pub k: usize,
    pub standardization: Option<StandardizationParams<T>>,
    pub rows: Vec<Vec<T>>,
    pub labels: Vec<ClassLabel>,
}

/// One neighbour of a query, in ascending-distance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbour<T> {
    pub index: usize,
    pub distance: T,
}

pub fn knn_train<T: Real>(
    ds: &Dataset<T>,
    k: usize,
    standardized: bool,
) -> Result<KnnModel<T>, ClassifyError> {
    if ds.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    if k == 0 || k > ds.len() {
        return Err(ClassifyError::NeighbourCount { k, rows: ds.len() });
    }
    let (standardization, rows) = if standardized {
        let p = fit_standardization(ds)?;
        let rows = ds.rows().iter().map(|r| p.apply_values(r)).collect();
        (Some(p), rows)
    } else {
        (None, ds.rows().to_vec())
    };
    Ok(KnnModel {
        schema: ds.schema().clone(),
        k,
        standardization,
        rows,
        labels: ds.labels().to_vec(),
    })
}

fn squared_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

impl<T: Real> KnnModel<T> {
    pub fn is_standardized(&self) -> bool {
        self.standardization.is_some()
    }

    /// The `k` nearest stored rows; equal distances keep training order.
    pub fn neighbours(&self, v: &FeatureVector<T>) -> Result<Vec<Neighbour<T>>, ClassifyError> {
        self.schema.check(v.schema())?;
        let query = match &self.standardization {
            Some(p) => p.apply_values(v.values()),
            None => v.values().to_vec(),
        };
        let mut all: Vec<(T, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (squared_distance(r, &query), i))
            .collect();
        // stable, so ties stay in row order
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
        Ok(all
            .into_iter()
            .take(self.k)
            .map(|(d2, index)| Neighbour {
                index,
                distance: d2.sqrt(),
            })
            .collect())
    }
}

/// Plurality vote over the `k` nearest rows. A vote tie goes to whichever
/// tied class appears first in distance order, i.e. the nearest neighbour's
/// class when it is among them.
pub fn knn_predict<T: Real>(
    m: &KnnModel<T>,
    v: &FeatureVector<T>,
) -> Result<Prediction<T>, ClassifyError> {
    let neighbours = m.neighbours(v)?;
    let mut votes: Vec<(&ClassLabel, usize)> = Vec::new();
    for n in &neighbours {
        let label = &m.labels[n.index];
        match votes.iter_mut().find(|(l, _)| *l == label) {
            Some((_, c)) => *c += 1,
            None => votes.push((label, 1)),
        }
    }
    // `votes` is in first-seen (= distance) order, so the first max wins ties
    let (label, count) = votes
        .iter()
        .copied()
        .reduce(|best, cur| if cur.1 > best.1 { cur } else { best })
        .expect("k >= 1");
    Ok(Prediction {
        label: label.clone(),
        confidence: T::from_count(count) / T::from_count(neighbours.len()),
    })
}

impl<T: Real> Classifier<T> for KnnModel<T> {
    fn schema(&self) -> &Schema {
        &self.schema
    }

    fn predict(&self, v: &FeatureVector<T>) -> Result<Prediction<T>, ClassifyError> {
        knn_predict(self, v)
    }
}
