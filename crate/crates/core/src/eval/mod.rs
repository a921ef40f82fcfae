//! Leave-one-out ranking evaluation.
//!
//! Each test query ranks its held-out entity against sampled unobserved
//! candidates. HR@k counts hits inside the cut-off; NDCG@k discounts a hit
//! at rank `r` by `1 / log2(r + 1)`. Both are plain per-query means.

mod metrics;
mod rank;
mod sweep;

pub use metrics::{
    eval_split, evaluate, summary_csv, QueryRecord, RankingMetrics, RepeatedMetrics, Scorer, SUMMARY_HEADER,
};
pub use rank::{hit_at_k, ndcg_at_k, rank_of, rank_scored, RankedList};
pub use sweep::{
    factor_sweep, sweep_csv, train_and_evaluate, EvalSettings, Outcome, SweepRow, DEFAULT_FACTORS, SWEEP_HEADER,
};
