use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::features::{Dataset, FeatureVector, Schema};
use crate::scalar::Real;

/// Per-attribute cut-points of an equal-frequency binning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DiscretizationModel<T> {
    pub schema: Schema,
    pub bins: usize,
    /// Strictly increasing cut-points, at most `bins − 1` per attribute.
    pub cuts: Vec<Vec<T>>,
}

impl<T: Real> DiscretizationModel<T> {
    /// Number of bins actually produced for attribute `attr`.
    pub fn bin_count(&self, attr: usize) -> usize {
        self.cuts[attr].len() + 1
    }

    /// Bin of `value` for attribute `attr`: the number of cut-points at or
    /// below it, so a value equal to a cut-point falls into the upper bin.
    pub fn bin_of(&self, attr: usize, value: T) -> usize {
        self.cuts[attr].partition_point(|&c| c <= value)
    }

    pub fn discretize_values(&self, values: &[T]) -> Vec<usize> {
        values
            .iter()
            .enumerate()
            .map(|(a, &v)| self.bin_of(a, v))
            .collect()
    }
}

/// Cut-points placing `sorted.len() · j / bins` values below boundary `j`.
///
/// A boundary whose straddling values are equal is moved to the nearest rank
/// where they differ (lower rank on a tie in distance); boundaries that land
/// on the same cut collapse into one.
fn equal_frequency_cuts<T: Real>(sorted: &[T], bins: usize) -> Vec<T> {
    let n = sorted.len();
    let distinct_at = |r: usize| r > 0 && r < n && sorted[r - 1] < sorted[r];
    let mut cuts: Vec<T> = Vec::with_capacity(bins - 1);
    for j in 1..bins {
        let rank = n * j / bins;
        let found = (0..n).find_map(|d| {
            if rank >= d && distinct_at(rank - d) {
                Some(rank - d)
            } else if distinct_at(rank + d) {
                Some(rank + d)
            } else {
                None
            }
        });
        if let Some(r) = found {
            let cut = (sorted[r - 1] + sorted[r]) / T::lit(2.0);
            if cuts.last().is_none_or(|&last| cut > last) {
                cuts.push(cut);
            } else if !cuts.contains(&cut) {
                cuts.push(cut);
                cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
            }
        }
    }
    cuts
}

pub fn fit_equal_frequency<T: Real>(
    ds: &Dataset<T>,
    bins: usize,
) -> Result<DiscretizationModel<T>, ClassifyError> {
    if bins < 2 {
        return Err(ClassifyError::BinCount(bins));
    }
    if ds.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let cuts = (0..ds.schema().len())
        .map(|a| {
            let mut col: Vec<T> = ds.rows().iter().map(|r| r[a]).collect();
            col.sort_by(|x, y| x.partial_cmp(y).expect("finite attribute values"));
            equal_frequency_cuts(&col, bins)
        })
        .collect();
    Ok(DiscretizationModel {
        schema: ds.schema().clone(),
        bins,
        cuts,
    })
}

pub fn discretize<T: Real>(
    v: &FeatureVector<T>,
    m: &DiscretizationModel<T>,
) -> Result<Vec<usize>, ClassifyError> {
    m.schema.check(v.schema())?;
    Ok(m.discretize_values(v.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ClassLabel;

    fn column(values: &[f64]) -> Dataset<f64> {
        let schema = Schema::new(vec!["x".into()]).unwrap();
        let rows = values.iter().map(|&v| vec![v]).collect();
        let labels = vec![ClassLabel::normal(); values.len()];
        Dataset::from_rows(schema, rows, labels).unwrap()
    }

    fn occupancy(m: &DiscretizationModel<f64>, values: &[f64]) -> Vec<usize> {
        let mut occ = vec![0; m.bin_count(0)];
        for &v in values {
            occ[m.bin_of(0, v)] += 1;
        }
        occ
    }

    #[test]
    fn six_values_three_bins() {
        let vals = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let m = fit_equal_frequency(&column(&vals), 3).unwrap();
        assert_eq!(m.cuts[0], vec![2.5, 4.5]);
        assert_eq!(occupancy(&m, &vals), vec![2, 2, 2]);
    }

    #[test]
    fn constant_column_is_one_bin() {
        let m = fit_equal_frequency(&column(&[7.0; 5]), 4).unwrap();
        assert!(m.cuts[0].is_empty());
        assert_eq!(m.bin_count(0), 1);
    }

    #[test]
    fn ties_shift_and_collapse() {
        let vals = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];
        let m = fit_equal_frequency(&column(&vals), 3).unwrap();
        assert_eq!(m.cuts[0], vec![1.5]);
    }

    #[test]
    fn boundary_value_goes_up() {
        let m = fit_equal_frequency(&column(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]), 3).unwrap();
        assert_eq!(m.bin_of(0, 2.5), 1);
        assert_eq!(m.bin_of(0, -1e9), 0);
        assert_eq!(m.bin_of(0, 4.6), 2);
        assert_eq!(m.bin_of(0, 4.5), 2);
    }

    #[test]
    fn fewer_values_than_bins() {
        let m = fit_equal_frequency(&column(&[3.0, 1.0]), 5).unwrap();
        assert_eq!(m.cuts[0], vec![2.0]);
    }

    #[test]
    fn argument_errors() {
        assert!(matches!(
            fit_equal_frequency(&column(&[1.0, 2.0]), 1),
            Err(ClassifyError::BinCount(1))
        ));
        assert!(matches!(
            fit_equal_frequency(&column(&[]), 3),
            Err(ClassifyError::EmptyDataset)
        ));
    }
}
