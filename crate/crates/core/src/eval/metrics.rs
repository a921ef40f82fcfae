use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rank::{hit_at_k, ndcg_at_k, rank_of};
use crate::data::{leave_one_out_split, Direction, EntityFeatures, FeatureVector, InteractionDataset, LooSplit};
use crate::error::{Error, Result};
use crate::model::DeepHybridModel;
use crate::rng::{self, stream};

/// Anything that scores candidates for a query.
pub trait Scorer: Sync {
    /// One score per candidate, in candidate order. For [`Direction::Item`]
    /// the query is a user and candidates are items.
    fn score(&self, direction: Direction, query: &FeatureVector, candidates: &[&FeatureVector]) -> Result<Vec<f64>>;
}

impl Scorer for DeepHybridModel {
    fn score(&self, direction: Direction, query: &FeatureVector, candidates: &[&FeatureVector]) -> Result<Vec<f64>> {
        self.predict_batch(direction, query, candidates)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingMetrics {
    pub direction: Direction,
    pub k: usize,
    pub hr: f64,
    pub ndcg: f64,
    pub num_queries: usize,
    pub per_query: Vec<QueryRecord>,
}

impl RankingMetrics {
    pub fn from_records(direction: Direction, k: usize, per_query: Vec<QueryRecord>) -> Result<Self> {
        if per_query.is_empty() {
            return Err(Error::invalid("no test queries to evaluate"));
        }
        let n = per_query.len() as f64;
        let hr = per_query.iter().map(|r| hit_at_k(r.rank, k)).sum::<f64>() / n;
        let ndcg = per_query.iter().map(|r| ndcg_at_k(r.rank, k)).sum::<f64>() / n;
        Ok(RankingMetrics {
            direction,
            k,
            hr,
            ndcg,
            num_queries: per_query.len(),
            per_query,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

pub const SUMMARY_HEADER: &str = "direction,k,hr,ndcg,num_queries";

/// CSV summary, one row per record.
pub fn summary_csv(records: &[RankingMetrics]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for m in records {
        out.push_str(&format!("{},{},{:.6},{:.6},{}\n", m.direction, m.k, m.hr, m.ndcg, m.num_queries));
    }
    out
}

/// Ranks every test case's held-out entity against its negatives.
///
/// Queries are scored in parallel; records keep test-case order so the
/// result does not depend on scheduling.
pub fn evaluate(scorer: &dyn Scorer, split: &LooSplit, features: &EntityFeatures, k: usize) -> Result<RankingMetrics> {
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if split.tests.is_empty() {
        return Err(Error::invalid(format!("{} split has no test queries", split.direction)));
    }
    let direction = split.direction;
    let queries = features.side(direction.query_side());
    let pool = features.side(direction.candidate_side());
    let records = split
        .tests
        .par_iter()
        .map(|case| {
            let query = lookup("query", queries, case.query)?;
            let mut ids = Vec::with_capacity(case.negatives.len() + 1);
            ids.push(case.held_out);
            ids.extend_from_slice(&case.negatives);
            let candidates = ids
                .iter()
                .map(|&c| lookup("candidate", pool, c))
                .collect::<Result<Vec<_>>>()?;
            let scores = scorer.score(direction, query, &candidates)?;
            Ok(QueryRecord {
                query: case.query,
                rank: rank_of(&ids, &scores, case.held_out)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RankingMetrics::from_records(direction, k, records)
}

fn lookup<'a>(side: &str, set: &'a [FeatureVector], idx: usize) -> Result<&'a FeatureVector> {
    set.get(idx)
        .ok_or_else(|| Error::Index(format!("{side} index {idx} has no feature vector")))
}

/// Leave-one-out split whose negatives come from the evaluation stream of
/// `eval_seed`.
pub fn eval_split(dataset: &InteractionDataset, direction: Direction, negatives: usize, eval_seed: u64) -> Result<LooSplit> {
    leave_one_out_split(dataset, direction, negatives, rng::derive_seed(eval_seed, stream::EVAL))
}

/// Mean over repeated runs, with every run kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatedMetrics {
    pub direction: Direction,
    pub k: usize,
    pub hr: f64,
    pub ndcg: f64,
    pub runs: Vec<RankingMetrics>,
}

impl RepeatedMetrics {
    pub fn from_runs(runs: Vec<RankingMetrics>) -> Result<Self> {
        let first = runs.first().ok_or_else(|| Error::invalid("at least one run is required"))?;
        let (direction, k) = (first.direction, first.k);
        if runs.iter().any(|r| r.direction != direction || r.k != k) {
            return Err(Error::invalid("runs disagree on direction or k"));
        }
        let n = runs.len() as f64;
        Ok(RepeatedMetrics {
            direction,
            k,
            hr: runs.iter().map(|r| r.hr).sum::<f64>() / n,
            ndcg: runs.iter().map(|r| r.ndcg).sum::<f64>() / n,
            runs,
        })
    }
}
