//! Ranking and classification metrics, and the decomposition of selected
//! pairs into correct pairs and the two kinds of misalignment.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::kg::{AlignmentSet, EntityId};

fn check_ranks(ranks: &[usize]) -> Result<()> {
    if ranks.is_empty() {
        return Err(Error::Empty("the rank list"));
    }
    if ranks.contains(&0) {
        return Err(Error::InvalidConfig("ranks are 1-based".into()));
    }
    Ok(())
}

/// Percentage of ranks within the top `k`.
pub fn hit_at_k(ranks: &[usize], k: usize) -> Result<f64> {
    check_ranks(ranks)?;
    let hits = ranks.iter().filter(|&&r| r <= k).count();
    Ok(100.0 * hits as f64 / ranks.len() as f64)
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    check_ranks(ranks)?;
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// 1-based rank of `target` among `candidates` by ascending score; equal
/// scores rank the lower id first.
pub fn rank_of(scores: &[f64], ids: &[EntityId], target: EntityId) -> Option<usize> {
    let pos = ids.iter().position(|&c| c == target)?;
    let t = scores[pos];
    let better = scores
        .iter()
        .zip(ids)
        .filter(|(s, id)| **s < t || (**s == t && **id < target))
        .count();
    Some(better + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision is 0 for an empty prediction; F1 is 0 when precision and
/// recall are both 0.
pub fn precision_recall_f1(pred: &AlignmentSet, test: &AlignmentSet) -> Result<Classification> {
    if test.is_empty() {
        return Err(Error::Empty("the test alignment set"));
    }
    let hits = pred.pairs().filter(|p| test.contains(p)).count() as f64;
    let precision = if pred.is_empty() { 0.0 } else { hits / pred.len() as f64 };
    let recall = hits / test.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Classification {
        precision,
        recall,
        f1,
    })
}

/// Counts of selected pairs by error type. The three counts partition the
/// selected set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ErrorDecomposition {
    pub correct: usize,
    pub conflicted: usize,
    pub one_to_one: usize,
}

impl ErrorDecomposition {
    pub fn total(&self) -> usize {
        self.correct + self.conflicted + self.one_to_one
    }
}

/// A pair in `truth` is correct (even inside a conflict). An incorrect pair
/// that shares either entity with another selected pair is a conflicted
/// misalignment; any other incorrect pair is a one-to-one misalignment.
pub fn decompose_errors(selected: &AlignmentSet, truth: &AlignmentSet) -> ErrorDecomposition {
    let mut left_uses: HashMap<EntityId, usize> = HashMap::new();
    let mut right_uses: HashMap<EntityId, usize> = HashMap::new();
    for p in selected.pairs() {
        *left_uses.entry(p.left).or_default() += 1;
        *right_uses.entry(p.right).or_default() += 1;
    }
    let mut out = ErrorDecomposition::default();
    for p in selected.pairs() {
        if truth.contains(&p) {
            out.correct += 1;
        } else if left_uses[&p.left] > 1 || right_uses[&p.right] > 1 {
            out.conflicted += 1;
        } else {
            out.one_to_one += 1;
        }
    }
    out
}

/// Full metric block of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub hit_at_1: f64,
    pub hit_at_10: f64,
    pub mrr: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_parts(ranks: &[usize], classification: Classification) -> Result<Self> {
        Ok(Self {
            hit_at_1: hit_at_k(ranks, 1)?,
            hit_at_10: hit_at_k(ranks, 10)?,
            mrr: mrr(ranks)?,
            precision: classification.precision,
            recall: classification.recall,
            f1: classification.f1,
        })
    }

    pub const CSV_HEADER: &'static str = "hit_at_1,hit_at_10,mrr,precision,recall,f1";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            self.hit_at_1, self.hit_at_10, self.mrr, self.precision, self.recall, self.f1
        )
    }

    /// Component-wise mean.
    pub fn mean(all: &[Metrics]) -> Option<Metrics> {
        if all.is_empty() {
            return None;
        }
        let n = all.len() as f64;
        let avg = |f: fn(&Metrics) -> f64| all.iter().map(f).sum::<f64>() / n;
        Some(Metrics {
            hit_at_1: avg(|m| m.hit_at_1),
            hit_at_10: avg(|m| m.hit_at_10),
            mrr: avg(|m| m.mrr),
            precision: avg(|m| m.precision),
            recall: avg(|m| m.recall),
            f1: avg(|m| m.f1),
        })
    }
}

/// `key=value` lines.
impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "hit_at_1={:.6}", self.hit_at_1)?;
        writeln!(f, "hit_at_10={:.6}", self.hit_at_10)?;
        writeln!(f, "mrr={:.6}", self.mrr)?;
        writeln!(f, "precision={:.6}", self.precision)?;
        writeln!(f, "recall={:.6}", self.recall)?;
        writeln!(f, "f1={:.6}", self.f1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::Provenance;

    fn set(p: &[(usize, usize)]) -> AlignmentSet {
        AlignmentSet::from_pairs(p.iter().copied(), Provenance::Pseudo(1))
    }

    #[test]
    fn hit_at_k_examples() {
        assert_eq!(hit_at_k(&[1, 1, 1], 1).unwrap(), 100.0);
        assert_eq!(hit_at_k(&[1, 2], 1).unwrap(), 50.0);
        assert_eq!(hit_at_k(&[1, 2], 10).unwrap(), 100.0);
        assert_eq!(hit_at_k(&[11], 10).unwrap(), 0.0);
        assert!(hit_at_k(&[], 1).is_err());
    }

    #[test]
    fn mrr_examples() {
        assert_eq!(mrr(&[1, 1]).unwrap(), 1.0);
        assert_eq!(mrr(&[1, 2]).unwrap(), 0.75);
        assert_eq!(mrr(&[4]).unwrap(), 0.25);
        assert!(mrr(&[]).is_err());
        assert!(mrr(&[0]).is_err());
    }

    #[test]
    fn classification_examples() {
        // |pred| = 4, 3 correct, |test| = 6
        let test = set(&[(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5)]);
        let pred = set(&[(0, 0), (1, 1), (2, 2), (3, 9)]);
        let c = precision_recall_f1(&pred, &test).unwrap();
        assert_eq!((c.precision, c.recall), (0.75, 0.5));
        assert!((c.f1 - 0.6).abs() < 1e-15);
        let c = precision_recall_f1(&test, &test).unwrap();
        assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        let c = precision_recall_f1(&set(&[(0, 7)]), &test).unwrap();
        assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
        let c = precision_recall_f1(&AlignmentSet::new(), &test).unwrap();
        assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
        assert!(precision_recall_f1(&pred, &AlignmentSet::new()).is_err());
    }

    #[test]
    fn decomposition_examples() {
        // a=0, b=1; x=0, y=1
        let d = decompose_errors(&set(&[(0, 0), (1, 0)]), &set(&[(0, 0)]));
        assert_eq!(d, ErrorDecomposition { correct: 1, conflicted: 1, one_to_one: 0 });
        let d = decompose_errors(&set(&[(0, 1)]), &set(&[(0, 0)]));
        assert_eq!(d, ErrorDecomposition { correct: 0, conflicted: 0, one_to_one: 1 });
        let d = decompose_errors(&set(&[(0, 1), (1, 0), (2, 2)]), &set(&[(0, 0), (1, 1), (2, 2)]));
        assert_eq!(d.conflicted, 0);
    }

    #[test]
    fn rank_ties_prefer_lower_id() {
        assert_eq!(rank_of(&[0.5, 0.1, 0.5], &[3, 4, 1], 3), Some(3));
        assert_eq!(rank_of(&[0.5, 0.1, 0.5], &[3, 4, 1], 1), Some(2));
        assert_eq!(rank_of(&[0.5, 0.1], &[3, 4], 4), Some(1));
        assert_eq!(rank_of(&[0.5], &[3], 7), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn hit_monotone_and_mrr_bounds(ranks in proptest::collection::vec(1usize..50, 1..40)) {
                let mut prev = 0.0;
                for k in 1..=50 {
                    let h = hit_at_k(&ranks, k).unwrap();
                    prop_assert!(h >= prev);
                    prev = h;
                }
                prop_assert_eq!(hit_at_k(&ranks, usize::MAX).unwrap(), 100.0);
                let m = mrr(&ranks).unwrap();
                prop_assert!(m >= 1.0 / *ranks.iter().max().unwrap() as f64 - 1e-15);
                prop_assert_eq!(m == 1.0, ranks.iter().all(|&r| r == 1));
            }

            #[test]
            fn f1_is_harmonic_mean_and_zero_iff_disjoint(
                pred in proptest::collection::btree_set((0usize..6, 0usize..6), 0..12),
                test in proptest::collection::btree_set((0usize..6, 0usize..6), 1..12),
            ) {
                let p = AlignmentSet::from_pairs(pred, Provenance::Pseudo(1));
                let t = AlignmentSet::from_pairs(test, Provenance::Truth);
                let c = precision_recall_f1(&p, &t).unwrap();
                prop_assert_eq!(c.f1 == 0.0, p.intersection(&t).is_empty());
                if c.f1 > 0.0 {
                    prop_assert!((c.f1 - 2.0 / (1.0 / c.precision + 1.0 / c.recall)).abs() < 1e-12);
                }
            }

            #[test]
            fn decomposition_partitions_and_is_relabel_invariant(
                sel in proptest::collection::btree_set((0usize..6, 0usize..6), 0..12),
                shift in 1usize..5,
            ) {
                let truth = AlignmentSet::from_pairs((0..6).map(|i| (i, i)), Provenance::Truth);
                let s = AlignmentSet::from_pairs(sel.iter().copied(), Provenance::Pseudo(1));
                let d = decompose_errors(&s, &truth);
                prop_assert_eq!(d.total(), s.len());
                let relabel = |(l, r): (usize, usize)| ((l + shift) % 6, (r + shift) % 6);
                let s2 = AlignmentSet::from_pairs(sel.iter().copied().map(relabel), Provenance::Pseudo(1));
                let t2 = AlignmentSet::from_pairs((0..6).map(|i| relabel((i, i))), Provenance::Truth);
                prop_assert_eq!(decompose_errors(&s2, &t2), d);
                if s.is_one_to_one() {
                    prop_assert_eq!(d.conflicted, 0);
                }
            }
        }
    }
}
