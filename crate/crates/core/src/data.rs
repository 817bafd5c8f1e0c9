//! Score containers: unlabeled test sets, labeled training sets, and the
//! empirical upper-tail distribution.

use crate::error::{Error, Result};
use crate::real::Real;

/// Validated set of unlabeled scores, e.g. a test set to quantify.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet<F> {
    scores: Vec<F>,
}

impl<F: Real> ScoreSet<F> {
    pub fn new(scores: Vec<F>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyInput("score set"));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("scores"));
        }
        Ok(ScoreSet { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scores(&self) -> &[F] {
        &self.scores
    }

    pub fn into_scores(self) -> Vec<F> {
        self.scores
    }

    pub fn ecdf(&self) -> EmpiricalCdf<F> {
        EmpiricalCdf::from_scores(&self.scores)
    }
}

/// Sorted copy of a score sample supporting O(log n) tail queries.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf<F> {
    sorted: Vec<F>,
}

impl<F: Real> EmpiricalCdf<F> {
    pub fn from_scores(scores: &[F]) -> Self {
        let mut sorted = scores.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores compare"));
        EmpiricalCdf { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_scores(&self) -> &[F] {
        &self.sorted
    }

    /// Number of scores >= theta.
    pub fn count_ge(&self, theta: F) -> usize {
        self.sorted.len() - self.sorted.partition_point(|&s| s < theta)
    }

    /// Fraction of scores >= theta: a step function decreasing in theta,
    /// with value 1 below all scores and 0 above them. Scores equal to the
    /// threshold count as positive calls.
    pub fn fraction_ge(&self, theta: F) -> F {
        F::count(self.count_ge(theta)) / F::count(self.sorted.len())
    }
}

/// Labeled training scores with labels +1 / -1, kept alongside sorted
/// per-class copies for rate queries.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores<F> {
    scores: Vec<F>,
    labels: Vec<i8>,
    positives: EmpiricalCdf<F>,
    negatives: EmpiricalCdf<F>,
}

impl<F: Real> LabeledScores<F> {
    pub fn new(scores: Vec<F>, labels: Vec<i8>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyInput("labeled score set"));
        }
        if scores.len() != labels.len() {
            return Err(Error::InvalidInput(format!(
                "{} scores but {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("scores"));
        }
        if labels.iter().any(|&l| l != 1 && l != -1) {
            return Err(Error::InvalidInput("labels must be +1 or -1".into()));
        }
        let pos: Vec<F> = scores
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == 1)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<F> = scores
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == -1)
            .map(|(&s, _)| s)
            .collect();
        if pos.is_empty() {
            return Err(Error::ClassMissing("positive"));
        }
        if neg.is_empty() {
            return Err(Error::ClassMissing("negative"));
        }
        Ok(LabeledScores {
            positives: EmpiricalCdf::from_scores(&pos),
            negatives: EmpiricalCdf::from_scores(&neg),
            scores,
            labels,
        })
    }

    /// Builds from per-class score slices.
    pub fn from_classes(positives: &[F], negatives: &[F]) -> Result<Self> {
        let mut scores = Vec::with_capacity(positives.len() + negatives.len());
        let mut labels = Vec::with_capacity(positives.len() + negatives.len());
        scores.extend_from_slice(positives);
        labels.extend(std::iter::repeat(1).take(positives.len()));
        scores.extend_from_slice(negatives);
        labels.extend(std::iter::repeat(-1).take(negatives.len()));
        Self::new(scores, labels)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scores(&self) -> &[F] {
        &self.scores
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn n_positive(&self) -> usize {
        self.positives.len()
    }

    pub fn n_negative(&self) -> usize {
        self.negatives.len()
    }

    /// Fraction of positives in the training set.
    pub fn prevalence(&self) -> F {
        F::count(self.n_positive()) / F::count(self.len())
    }

    pub fn positives(&self) -> &EmpiricalCdf<F> {
        &self.positives
    }

    pub fn negatives(&self) -> &EmpiricalCdf<F> {
        &self.negatives
    }

    pub fn rows(&self) -> impl Iterator<Item = (F, i8)> + '_ {
        self.scores.iter().copied().zip(self.labels.iter().copied())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_set_validates() {
        assert!(ScoreSet::<f64>::new(vec![]).is_err());
        assert!(ScoreSet::new(vec![0.1, f64::NAN]).is_err());
        assert!(ScoreSet::new(vec![0.1, f64::INFINITY]).is_err());
        let s = ScoreSet::new(vec![0.4, 0.2]).unwrap();
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn tail_fractions_count_ties_as_calls() {
        let cdf = EmpiricalCdf::from_scores(&[0.2, 0.6, 0.9]);
        assert_eq!(cdf.fraction_ge(0.6), 2.0 / 3.0);
        assert_eq!(cdf.fraction_ge(0.61), 1.0 / 3.0);
        assert_eq!(cdf.fraction_ge(-10.0), 1.0);
        assert_eq!(cdf.fraction_ge(10.0), 0.0);
        assert_eq!(cdf.count_ge(0.2), 3);
    }

    #[test]
    fn repeated_scores_all_count() {
        let cdf = EmpiricalCdf::from_scores(&[0.5, 0.5, 0.5, 0.7]);
        assert_eq!(cdf.count_ge(0.5), 4);
        assert_eq!(cdf.count_ge(0.6), 1);
    }

    #[test]
    fn labeled_scores_split_by_class() {
        let train =
            LabeledScores::new(vec![0.9, 0.1, 0.7, 0.3], vec![1, -1, 1, -1]).unwrap();
        assert_eq!(train.n_positive(), 2);
        assert_eq!(train.n_negative(), 2);
        assert_eq!(train.prevalence(), 0.5);
        assert_eq!(train.positives().sorted_scores(), &[0.7, 0.9]);
        assert_eq!(train.negatives().sorted_scores(), &[0.1, 0.3]);
    }

    #[test]
    fn labeled_scores_validate() {
        assert!(LabeledScores::new(vec![0.5], vec![2]).is_err());
        assert!(LabeledScores::new(vec![0.5, 0.6], vec![1]).is_err());
        assert!(LabeledScores::new(vec![0.5, 0.6], vec![1, 1]).is_err());
        assert!(LabeledScores::new(vec![0.5, 0.6], vec![-1, -1]).is_err());
        assert!(LabeledScores::<f64>::new(vec![], vec![]).is_err());
        let ok = LabeledScores::from_classes(&[0.8], &[0.2]).unwrap();
        assert_eq!(ok.len(), 2);
    }
}
