use crate::error::{Error, Result};

/// Candidates in rank order.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedList {
    /// Candidate indices, best first.
    pub order: Vec<usize>,
    /// Score of each entry of `order`.
    pub scores: Vec<f64>,
    /// 1-based position of the target, if it was among the candidates.
    pub rank_of_target: Option<usize>,
}

/// Sorts candidates by descending score. Exact ties go to the smaller
/// candidate index, so the result does not depend on input order.
pub fn rank_scored(candidates: &[usize], scores: &[f64], target: usize) -> Result<RankedList> {
    if candidates.len() != scores.len() {
        return Err(Error::shape(format!(
            "{} candidates but {} scores",
            candidates.len(),
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::numeric("ranking", format!("non-finite score {bad}")));
    }
    let mut seen = std::collections::HashSet::with_capacity(candidates.len());
    if let Some(dup) = candidates.iter().find(|c| !seen.insert(**c)) {
        return Err(Error::invalid(format!("candidate {dup} appears twice")));
    }
    if !seen.contains(&target) {
        return Err(Error::invalid(format!("target {target} is not among the candidates")));
    }

    let mut pairs: Vec<(usize, f64)> = candidates.iter().copied().zip(scores.iter().copied()).collect();
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let rank_of_target = pairs.iter().position(|p| p.0 == target).map(|p| p + 1);
    let (order, scores) = pairs.into_iter().unzip();
    Ok(RankedList {
        order,
        scores,
        rank_of_target,
    })
}

/// 1-based rank of the target without sorting: one plus the number of
/// candidates that beat it.
pub fn rank_of(candidates: &[usize], scores: &[f64], target: usize) -> Result<usize> {
    Ok(rank_scored(candidates, scores, target)?
        .rank_of_target
        .expect("target presence checked"))
}

pub fn hit_at_k(rank: usize, k: usize) -> f64 {
    debug_assert!(rank >= 1 && k >= 1);
    if rank <= k {
        1.0
    } else {
        0.0
    }
}

/// Single-relevant-item NDCG: `1 / log2(rank + 1)` inside the cut-off.
pub fn ndcg_at_k(rank: usize, k: usize) -> f64 {
    debug_assert!(rank >= 1 && k >= 1);
    if rank <= k {
        1.0 / ((rank + 1) as f64).log2()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn orders_by_score_then_index() {
        let r = rank_scored(&[0, 1, 2], &[0.9, 0.1, 0.5], 2).unwrap();
        assert_eq!(r.order, vec![0, 2, 1]);
        assert_eq!(r.rank_of_target, Some(2));
        let r = rank_scored(&[7, 3, 9], &[0.5; 3], 9).unwrap();
        assert_eq!(r.order, vec![3, 7, 9]);
        assert_eq!(rank_of(&[4], &[0.2], 4).unwrap(), 1);
    }

    #[test]
    fn contract_violations() {
        assert!(rank_scored(&[1, 2], &[0.1, 0.2], 3).is_err());
        assert!(rank_scored(&[1, 1], &[0.1, 0.2], 1).is_err());
        assert!(rank_scored(&[1, 2], &[0.1], 1).is_err());
        assert!(rank_scored(&[1, 2], &[0.1, f64::NAN], 1).is_err());
    }

    #[test]
    fn metric_values() {
        assert_eq!(hit_at_k(3, 10), 1.0);
        assert_eq!(hit_at_k(10, 10), 1.0);
        assert_eq!(hit_at_k(11, 10), 0.0);
        assert_eq!(ndcg_at_k(1, 10), 1.0);
        assert_eq!(ndcg_at_k(12, 10), 0.0);
        assert!((ndcg_at_k(10, 10) - 0.289_065).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn permutation_invariant(scores in prop::collection::vec(0u8..5, 1..30), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let n = scores.len();
            let cands: Vec<usize> = (0..n).map(|i| i * 3).collect();
            let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
            let target = cands[seed as usize % n];
            let base = rank_of(&cands, &scores, target).unwrap();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut crate::rng::seeded(seed));
            let c2: Vec<usize> = perm.iter().map(|&i| cands[i]).collect();
            let s2: Vec<f64> = perm.iter().map(|&i| scores[i]).collect();
            prop_assert_eq!(rank_of(&c2, &s2, target).unwrap(), base);
        }

        #[test]
        fn ndcg_never_exceeds_hr(rank in 1usize..200, k in 1usize..50) {
            prop_assert!(ndcg_at_k(rank, k) <= hit_at_k(rank, k));
        }
    }
}
