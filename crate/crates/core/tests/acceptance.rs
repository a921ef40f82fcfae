//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line.
//!
//! Run with
//! `cargo test -p deephybrid-core --test acceptance -- --nocapture --test-threads=1`.

mod common;

use std::collections::BTreeSet;
use std::time::Instant;

use deephybrid::data::{sample_training_instances, IdIndex, Interaction};
use deephybrid::eval::{
    eval_split, evaluate, factor_sweep, hit_at_k, ndcg_at_k, rank_of, train_and_evaluate, EvalSettings, Scorer,
};
use deephybrid::gradcheck::{run_gradcheck, GradCheckOptions};
use deephybrid::rng;
use deephybrid::train::{load_checkpoint, save_checkpoint};
use deephybrid::{
    fit, Architecture, ArchitectureConfig, DeepHybridModel, Direction, EntityFeatures, FeatureSchema, FeatureVector,
    InteractionDataset, Result, TrainConfig,
};
use rand::seq::index;
use rand::Rng;

fn report(id: u32, name: &str, pass: bool, detail: String, started: Instant) {
    println!(
        "[{}] C{id} {name}: {detail} ({:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "C{id} {name}: {detail}");
}

fn defaults(arch: Architecture) -> ArchitectureConfig {
    ArchitectureConfig::new(arch)
}

#[test]
fn c1_gradient_oracle() {
    let t = Instant::now();
    let report_ = run_gradcheck(&GradCheckOptions::default()).unwrap();
    let worst = report_
        .checks
        .iter()
        .map(|c| format!("{}={:.1e}", c.architecture.as_str(), c.max_relative_error))
        .collect::<Vec<_>>()
        .join(" ");
    let pass = report_.passed() && report_.checks.len() == 4 && t.elapsed().as_secs() < 30;
    report(1, "gradient oracle, max rel err <= 1e-4", pass, worst, t);
}

#[test]
fn c2_metric_oracles() {
    let t = Instant::now();
    let mut r = rng::seeded(2);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let n = r.random_range(1..=120);
        let ids = index::sample(&mut r, 1000, n).into_vec();
        // Coarse scores so ties are common.
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..10u8)) / 10.0).collect();
        let t_pos = r.random_range(0..n);
        let (target, ts) = (ids[t_pos], scores[t_pos]);
        let oracle = 1 + ids
            .iter()
            .zip(&scores)
            .filter(|&(&c, &s)| s > ts || (s == ts && c < target))
            .count();
        let k = r.random_range(1..=20);
        let rank = rank_of(&ids, &scores, target).unwrap();
        let hit = if oracle <= k { 1.0 } else { 0.0 };
        let ndcg = if oracle <= k { std::f64::consts::LN_2 / ((oracle + 1) as f64).ln() } else { 0.0 };
        if rank != oracle || hit_at_k(rank, k) != hit || (ndcg_at_k(rank, k) - ndcg).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    let boundary = (ndcg_at_k(10, 10) - 1.0 / 11f64.log2()).abs();
    let pass = mismatches == 0 && boundary <= 1e-9 && t.elapsed().as_secs() < 5;
    report(
        2,
        "metric oracles",
        pass,
        format!("1000 lists, {mismatches} mismatches, |ndcg(10,10) - 1/log2(11)| = {boundary:.1e}"),
        t,
    );
}

/// Scores by a hash of (query, candidate): uniform and order-independent.
struct RandomScorer(u64);

impl Scorer for RandomScorer {
    fn score(&self, _: Direction, q: &FeatureVector, c: &[&FeatureVector]) -> Result<Vec<f64>> {
        let base = rng::derive_seed(self.0, q.id as u64);
        Ok(c.iter()
            .map(|v| (rng::derive_seed(base, v.id as u64) >> 11) as f64 / (1u64 << 53) as f64)
            .collect())
    }
}

#[test]
fn c3_random_ranker_calibration() {
    let t = Instant::now();
    let f = common::load("latent");
    // 500 users x 4 seeds of evaluation negatives = 2000 queries.
    let mut hits = 0.0;
    let mut n = 0;
    for s in 0..4 {
        let split = eval_split(&f.dataset, Direction::Item, 99, s).unwrap();
        assert_eq!(split.short_pools(99), 0);
        let m = evaluate(&RandomScorer(100 + s), &split, &f.features, 10).unwrap();
        hits += m.hr * m.num_queries as f64;
        n += m.num_queries;
    }
    let hr = hits / n as f64;
    let pass = n >= 2000 && (hr - 0.10).abs() <= 0.02 && t.elapsed().as_secs() < 60;
    report(3, "random ranker HR@10 = 0.10 +- 0.02", pass, format!("hr {hr:.4} over {n} queries"), t);
}

#[test]
fn c4_learning_signal() {
    let t = Instant::now();
    let f = common::load("latent");
    let out = train_and_evaluate(
        &f.dataset,
        &f.schema,
        &f.features,
        &defaults(Architecture::DeepHybrid),
        &TrainConfig::default(),
        Direction::Item,
        EvalSettings::default(),
    )
    .unwrap();
    let m = &out.metrics;
    let losses = out.history.losses();
    let ratio = losses[19] / losses[0];
    println!(
        "[{}] loss trajectory: epoch-20 / epoch-1 mean loss = {ratio:.3} (<= 0.7)",
        if ratio <= 0.7 { "PASS" } else { "FAIL" }
    );
    let pass = m.hr >= 0.30 && m.ndcg >= 0.15 && ratio <= 0.7 && t.elapsed().as_secs() < 600;
    report(
        4,
        "learning signal, HR@10 >= 0.30 and NDCG@10 >= 0.15",
        pass,
        format!("hr {:.4} ndcg {:.4}", m.hr, m.ndcg),
        t,
    );
}

#[test]
fn c5_hybrid_advantage() {
    let t = Instant::now();
    let f = common::load("feature");
    let mut diffs = Vec::new();
    let mut detail = Vec::new();
    for r in 0..3u64 {
        let train = TrainConfig {
            seed: r,
            ..TrainConfig::default()
        };
        let settings = EvalSettings {
            eval_seed: r,
            ..EvalSettings::default()
        };
        let hr = |arch| {
            train_and_evaluate(&f.dataset, &f.schema, &f.features, &defaults(arch), &train, Direction::Item, settings)
                .unwrap()
                .metrics
                .hr
        };
        let (hybrid, neumf) = (hr(Architecture::DeepHybrid), hr(Architecture::NeuMf));
        diffs.push(hybrid - neumf);
        detail.push(format!("{hybrid:.3}/{neumf:.3}"));
    }
    let mean = diffs.iter().sum::<f64>() / 3.0;
    let pass = mean >= 0.05 && t.elapsed().as_secs() < 1200;
    report(
        5,
        "hybrid advantage, mean HR gap >= 0.05",
        pass,
        format!("DeepHybrid/NeuMF per repeat {}; mean gap {mean:.4}", detail.join(" ")),
        t,
    );
}

#[test]
fn c6_reciprocity() {
    let t = Instant::now();
    let f = common::load("latent");
    let train = TrainConfig {
        epochs: 5,
        ..TrainConfig::default()
    };
    let user_split = eval_split(&f.dataset, Direction::User, 99, 6).unwrap();
    let mut model = DeepHybridModel::build(
        defaults(Architecture::DeepHybrid),
        f.dataset.num_users(),
        f.dataset.num_items(),
        &f.schema,
        6,
    )
    .unwrap();
    fit(&mut model, &user_split.train, &f.features, &train, None).unwrap();
    let both = [Direction::Item, Direction::User].map(|d| {
        let s = if d == Direction::User { user_split.clone() } else { eval_split(&f.dataset, d, 99, 6).unwrap() };
        evaluate(&model, &s, &f.features, 10).unwrap()
    });

    let transposed = f.dataset.transpose();
    let item_split_t = eval_split(&transposed, Direction::Item, 99, 6).unwrap();
    let mirrored = evaluate(&model.transpose().unwrap(), &item_split_t, &f.features.transpose(), 10).unwrap();
    let user = &both[1];
    let same_tests = item_split_t.tests == user_split.tests;
    let same_ranks = mirrored.per_query == user.per_query;
    let dh = (mirrored.hr - user.hr).abs();
    let dn = (mirrored.ndcg - user.ndcg).abs();
    let pass = both[0].num_queries > 0 && same_tests && same_ranks && dh <= 1e-9 && dn <= 1e-9 && t.elapsed().as_secs() < 300;
    report(
        6,
        "reciprocity within 1e-9",
        pass,
        format!(
            "item hr {:.4}; user hr {:.4} ndcg {:.4}; transposed item hr {:.4} ndcg {:.4}; |dhr| {dh:.1e} |dndcg| {dn:.1e}",
            both[0].hr, user.hr, user.ndcg, mirrored.hr, mirrored.ndcg
        ),
        t,
    );
}

/// 20 x 20 index spaces with 50 distinct random positives.
fn tiny_dataset(seed: u64) -> InteractionDataset {
    let mut r = rng::seeded(seed);
    let mut pairs = BTreeSet::new();
    while pairs.len() < 50 {
        pairs.insert((r.random_range(0..20usize), r.random_range(0..20usize)));
    }
    let interactions = pairs
        .into_iter()
        .enumerate()
        .map(|(k, (user, item))| Interaction {
            user,
            item,
            timestamp: k as i64,
            order: k,
        })
        .collect();
    InteractionDataset::new(IdIndex::sequential("u", 20), IdIndex::sequential("i", 20), interactions).unwrap()
}

#[test]
fn c7_overfit_capability() {
    let t = Instant::now();
    let d = tiny_dataset(3);
    let features = EntityFeatures::ids_only(20, 20);
    let config = TrainConfig {
        epochs: 500,
        seed: 3,
        ..TrainConfig::default()
    };
    let mut model =
        DeepHybridModel::build(defaults(Architecture::DeepHybrid), 20, 20, &FeatureSchema::empty(), config.seed)
            .unwrap();
    fit(&mut model, &d, &features, &config, None).unwrap();
    let first_epoch = sample_training_instances(&d, config.negatives_per_positive, config.seed, 0);
    let correct = first_epoch
        .instances
        .iter()
        .filter(|x| {
            let p = model.predict(features.user(x.user), features.item(x.item)).unwrap();
            (p > 0.5) == (x.label == 1.0)
        })
        .count();
    let acc = correct as f64 / first_epoch.instances.len() as f64;
    let pass = acc >= 0.95 && t.elapsed().as_secs() < 120;
    report(
        7,
        "overfit 20x20, 500 epochs, accuracy >= 0.95",
        pass,
        format!("accuracy {acc:.4} on {} instances", first_epoch.instances.len()),
        t,
    );
}

#[test]
fn c8_determinism_and_persistence() {
    let t = Instant::now();
    let f = common::load("latent");
    let train = TrainConfig {
        epochs: 2,
        seed: 8,
        ..TrainConfig::default()
    };
    let settings = EvalSettings {
        eval_seed: 8,
        ..EvalSettings::default()
    };
    let run = || {
        train_and_evaluate(
            &f.dataset,
            &f.schema,
            &f.features,
            &defaults(Architecture::DeepHybrid),
            &train,
            Direction::Item,
            settings,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    let same_json = a.metrics.to_json() == b.metrics.to_json();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.dhm");
    save_checkpoint(&a.model, &path).unwrap();
    let loaded = load_checkpoint(&path).unwrap();
    let mut r = rng::seeded(88);
    let mut identical = 0;
    for _ in 0..100 {
        let (u, i) = (r.random_range(0..f.dataset.num_users()), r.random_range(0..f.dataset.num_items()));
        let (x, y) = (f.features.user(u), f.features.item(i));
        if a.model.predict(x, y).unwrap().to_bits() == loaded.predict(x, y).unwrap().to_bits() {
            identical += 1;
        }
    }
    let pass = same_json && identical == 100 && t.elapsed().as_secs() < 120;
    report(
        8,
        "determinism and checkpoint round trip",
        pass,
        format!("metrics JSON identical: {same_json}; bit-identical predictions {identical}/100"),
        t,
    );
}

#[test]
fn c9_factor_sweep_shape() {
    let t = Instant::now();
    let f = common::load("latent");
    let rows = factor_sweep(
        &f.dataset,
        &f.schema,
        &f.features,
        &[4, 8, 16, 32],
        &[Direction::Item],
        &defaults(Architecture::DeepHybrid),
        &TrainConfig::default(),
        EvalSettings::default(),
    )
    .unwrap();
    let hr: Vec<f64> = rows.iter().map(|r| r.hr).collect();
    let upper = &hr[1..];
    let best = upper.iter().cloned().fold(f64::MIN, f64::max);
    let worst = upper.iter().cloned().fold(f64::MAX, f64::min);
    let low_ok = hr[0] <= best + 0.02;
    let flat_ok = best - worst <= 0.05;
    let pass = low_ok && flat_ok && t.elapsed().as_secs() < 1800;
    report(
        9,
        "factor sweep shape",
        pass,
        format!(
            "HR@10 by factor 4/8/16/32 = {:.4}/{:.4}/{:.4}/{:.4}; factor 4 <= best+0.02: {low_ok}; 8..32 spread {:.4} <= 0.05: {flat_ok}",
            hr[0],
            hr[1],
            hr[2],
            hr[3],
            best - worst
        ),
        t,
    );
}
