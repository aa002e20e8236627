use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifyError, Model, Prediction};
use crate::features::{FeatureVector, Schema};
use crate::scalar::Real;

/// Fewest members a voting ensemble may have.
pub const MIN_MEMBERS: usize = 3;

/// Plurality vote over independently trained classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EnsembleModel<T> {
    members: Vec<Model<T>>,
}

impl<T: Real> EnsembleModel<T> {
    pub fn new(members: Vec<Model<T>>) -> Result<Self, ClassifyError> {
        if members.len() < MIN_MEMBERS {
            return Err(ClassifyError::TooFewMembers(members.len()));
        }
        let schema = members[0].schema().clone();
        for m in &members[1..] {
            schema.check(m.schema())?;
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[Model<T>] {
        &self.members
    }
}

/// Ties go to the earliest-listed member whose vote is among the leaders.
pub fn ensemble_predict<T: Real>(
    e: &EnsembleModel<T>,
    v: &FeatureVector<T>,
) -> Result<Prediction<T>, ClassifyError> {
    let mut tally: Vec<(super::ClassLabel, usize)> = Vec::new();
    for member in &e.members {
        let label = member.predict(v)?.label;
        match tally.iter_mut().find(|(l, _)| *l == label) {
            Some((_, n)) => *n += 1,
            None => tally.push((label, 1)),
        }
    }
    // first-seen order follows member order
    let (label, votes) = tally
        .into_iter()
        .reduce(|best, cur| if cur.1 > best.1 { cur } else { best })
        .expect("at least three members");
    Ok(Prediction {
        label,
        confidence: T::from_count(votes) / T::from_count(e.members.len()),
    })
}

impl<T: Real> Classifier<T> for EnsembleModel<T> {
    fn schema(&self) -> &Schema {
        self.members[0].schema()
    }

    fn predict(&self, v: &FeatureVector<T>) -> Result<Prediction<T>, ClassifyError> {
        ensemble_predict(self, v)
    }
}
