//! ROUGE-N and ROUGE-L (flat LCS) precision/recall/F1.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        RougeScore {
            precision,
            recall,
            f1,
        }
    }

    pub(crate) fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |den: usize| {
            if den == 0 {
                0.0
            } else {
                overlap as f64 / den as f64
            }
        };
        RougeScore::new(ratio(candidate), ratio(reference))
    }

    /// Component-wise mean; zero for an empty slice.
    pub fn mean(scores: &[RougeScore]) -> RougeScore {
        if scores.is_empty() {
            return RougeScore::default();
        }
        let n = scores.len() as f64;
        RougeScore {
            precision: scores.iter().map(|s| s.precision).sum::<f64>() / n,
            recall: scores.iter().map(|s| s.recall).sum::<f64>() / n,
            f1: scores.iter().map(|s| s.f1).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryScore {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    #[serde(rename = "rougeL")]
    pub rouge_l: RougeScore,
}

impl SummaryScore {
    pub fn mean(scores: &[SummaryScore]) -> SummaryScore {
        let pick = |f: fn(&SummaryScore) -> RougeScore| {
            RougeScore::mean(&scores.iter().map(f).collect::<Vec<_>>())
        };
        SummaryScore {
            rouge1: pick(|s| s.rouge1),
            rouge2: pick(|s| s.rouge2),
            rouge_l: pick(|s| s.rouge_l),
        }
    }
}

/// Multiset of n-grams, keyed by token-slice.
pub fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Size of the clipped multiset intersection.
fn clipped_overlap<K: Eq + Hash>(a: &HashMap<K, usize>, b: &HashMap<K, usize>) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .iter()
        .map(|(gram, &c)| c.min(large.get(gram).copied().unwrap_or(0)))
        .sum()
}

pub fn rouge_n<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> RougeScore {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let overlap = clipped_overlap(&cand, &refs);
    let grams = |len: usize| (len + 1).saturating_sub(n);
    RougeScore::from_counts(overlap, grams(candidate.len()), grams(reference.len()))
}

/// Length of the longest common subsequence.
pub fn lcs_length<T: Eq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (outer, inner) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; inner.len() + 1];
    let mut cur = vec![0usize; inner.len() + 1];
    for x in outer {
        for (j, y) in inner.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[inner.len()]
}

/// ROUGE-L over the two flat token sequences using a single LCS.
pub fn rouge_l<T: Eq>(candidate: &[T], reference: &[T]) -> RougeScore {
    let l = lcs_length(candidate, reference);
    RougeScore::from_counts(l, candidate.len(), reference.len())
}

/// Scores the concatenation of `selected` against the concatenation of
/// `reference`. Callers pass selected sentences in document order.
pub fn score_summary<S: AsRef<[String]>, R: AsRef<[String]>>(
    selected: &[S],
    reference: &[R],
) -> SummaryScore {
    let cand: Vec<&String> = selected.iter().flat_map(|s| s.as_ref()).collect();
    let refs: Vec<&String> = reference.iter().flat_map(|s| s.as_ref()).collect();
    SummaryScore {
        rouge1: rouge_n(&cand, &refs, 1),
        rouge2: rouge_n(&cand, &refs, 2),
        rouge_l: rouge_l(&cand, &refs),
    }
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn seq() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..6, 0..14)
    }

    proptest! {
        #[test]
        fn swap_exchanges_precision_and_recall(a in seq(), b in seq(), n in 1usize..4) {
            let x = rouge_n(&a, &b, n);
            let y = rouge_n(&b, &a, n);
            prop_assert_eq!(x.precision, y.recall);
            prop_assert_eq!(x.recall, y.precision);
            prop_assert!((x.f1 - y.f1).abs() < 1e-15);
            let x = rouge_l(&a, &b);
            let y = rouge_l(&b, &a);
            prop_assert_eq!(x.precision, y.recall);
            prop_assert!((x.f1 - y.f1).abs() < 1e-15);
        }

        #[test]
        fn scores_bounded(a in seq(), b in seq(), n in 1usize..4) {
            for s in [rouge_n(&a, &b, n), rouge_l(&a, &b)] {
                for v in [s.precision, s.recall, s.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }

        #[test]
        fn appending_reference_gram_never_lowers_recall(a in seq(), b in seq(), n in 1usize..3, pick in any::<prop::sample::Index>()) {
            prop_assume!(b.len() >= n);
            let before = rouge_n(&a, &b, n).recall;
            let start = pick.index(b.len() + 1 - n);
            let mut extended = a.clone();
            extended.extend_from_slice(&b[start..start + n]);
            prop_assert!(rouge_n(&extended, &b, n).recall >= before);
        }

        #[test]
        fn lcs_bounds(a in seq(), b in seq()) {
            let l = lcs_length(&a, &b);
            prop_assert!(l <= a.len().min(b.len()));
            prop_assert_eq!(lcs_length(&a, &a), a.len());
        }

        #[test]
        fn relabeling_invariance(a in seq(), b in seq(), shift in 1u8..50) {
            let relabel = |v: &[u8]| v.iter().map(|x| x.wrapping_mul(7).wrapping_add(shift)).collect::<Vec<_>>();
            let (ra, rb) = (relabel(&a), relabel(&b));
            prop_assert_eq!(rouge_n(&a, &b, 1), rouge_n(&ra, &rb, 1));
            prop_assert_eq!(rouge_n(&a, &b, 2), rouge_n(&ra, &rb, 2));
            prop_assert_eq!(rouge_l(&a, &b), rouge_l(&ra, &rb));
        }
    }
}
