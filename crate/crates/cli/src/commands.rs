use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use deephybrid::data::{
    fit_schema, generate_synthetic, EntityFeatures, FeatureSchema, FeatureTable, FeatureVector, InteractionDataset,
    SchemaDeclaration, SynthConfig,
};
use deephybrid::eval::{eval_split, evaluate, factor_sweep, sweep_csv, EvalSettings, RankingMetrics, RepeatedMetrics};
use deephybrid::gradcheck::{run_gradcheck, GradCheckOptions};
use deephybrid::train::{Checkpoint, EpochRecord};
use deephybrid::{fit, DeepHybridModel, Direction, Error, Side};

use crate::args::{base_config, EvalArgs, GenSynthArgs, GradcheckArgs, RecommendArgs, SweepArgs, TrainArgs};
use crate::config::{run_config_beside, write_run_record, RunConfig};

pub enum Status {
    Success,
    CheckFailed,
}

/// Missing or contradictory arguments discovered after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn stats_line(d: &InteractionDataset) -> String {
    format!(
        "users {}  items {}  interactions {}  sparsity {:.3}%",
        d.num_users(),
        d.num_items(),
        d.len(),
        d.sparsity()
    )
}

pub fn gen_synth(a: GenSynthArgs) -> Result<Status> {
    let cfg = SynthConfig {
        num_users: a.users,
        num_items: a.items,
        interactions_per_user: a.per_user,
        mode: a.mode,
        seed: a.seed,
    };
    let data = generate_synthetic(&cfg)?;
    create_dir(&a.out_dir)?;
    let mut csv = Vec::new();
    data.dataset.write_csv(&mut csv)?;
    write(&a.out_dir.join("interactions.csv"), csv)?;
    write(&a.out_dir.join("user_features.csv"), &data.user_features_csv)?;
    write(&a.out_dir.join("item_features.csv"), &data.item_features_csv)?;
    write(&a.out_dir.join("schema.json"), data.schema_json())?;
    write_run_record(&a.out_dir, "gen-synth", &cfg)?;
    println!("{}", stats_line(&data.dataset));
    Ok(Status::Success)
}

struct Inputs {
    dataset: InteractionDataset,
    schema: FeatureSchema,
    features: EntityFeatures,
}

fn load_inputs(c: &RunConfig) -> Result<Inputs> {
    let path = c
        .interactions
        .as_ref()
        .ok_or_else(|| usage("--interactions is required (flag or config key `interactions`)"))?;
    let dataset = InteractionDataset::load_interactions(path)?;
    let decl = match &c.schema {
        Some(p) => SchemaDeclaration::load(p)?,
        None => {
            if c.user_features.is_some() || c.item_features.is_some() {
                log::warn!("feature files given without --schema; features are ignored");
            }
            SchemaDeclaration::default()
        }
    };
    let table = |p: &Option<PathBuf>, id: &str| -> Result<Option<FeatureTable>> {
        Ok(match p {
            Some(p) if c.schema.is_some() => Some(FeatureTable::load(p, id)?),
            _ => None,
        })
    };
    let users = table(&c.user_features, "user_id")?;
    let items = table(&c.item_features, "item_id")?;
    let schema = fit_schema(&decl, users.as_ref(), items.as_ref())?;
    let features = EntityFeatures::build(&schema, &dataset, users.as_ref(), items.as_ref())?;
    log::info!("{}", stats_line(&dataset));
    Ok(Inputs {
        dataset,
        schema,
        features,
    })
}

fn log_epoch(r: &EpochRecord) {
    log::info!(
        "epoch {:>3}  loss {:.5}  instances {}  {:.2}s",
        r.epoch,
        r.mean_loss,
        r.instances,
        r.seconds
    );
}

pub fn train(a: TrainArgs) -> Result<Status> {
    let mut c = a.resolve()?;
    c.absolutize()?;
    let inputs = load_inputs(&c)?;
    let arch = c.architecture();
    let train_cfg = c.train();

    let train_set = match c.holdout.direction() {
        Some(d) => eval_split(&inputs.dataset, d, c.eval_negatives, c.eval_seed())?.train,
        None => inputs.dataset.clone(),
    };
    let mut model = DeepHybridModel::build(
        arch,
        inputs.dataset.num_users(),
        inputs.dataset.num_items(),
        &inputs.schema,
        c.seed,
    )?;
    let mut on_epoch = |r: &EpochRecord, _: &DeepHybridModel| {
        log_epoch(r);
        Ok(())
    };
    let history = fit(&mut model, &train_set, &inputs.features, &train_cfg, Some(&mut on_epoch))?;

    create_dir(&c.out_dir)?;
    let checkpoint = Checkpoint::new(model)
        .with_holdout(c.holdout.direction())
        .with_ids(inputs.dataset.users().ids(), inputs.dataset.items().ids())?;
    let model_path = c.out_dir.join("model.dhm");
    checkpoint.save(&model_path)?;
    write(&c.out_dir.join("history.json"), serde_json::to_string_pretty(&history)? + "\n")?;
    inputs.schema.save(c.out_dir.join("fitted_schema.json"))?;
    write_run_record(&c.out_dir, "train", &c)?;
    let last = history.losses().last().copied();
    println!(
        "trained {} for {} epochs (holdout {}){} -> {}",
        c.arch.as_str(),
        history.epochs.len(),
        c.holdout,
        last.map(|l| format!(", final loss {l:.5}")).unwrap_or_default(),
        model_path.display()
    );
    Ok(Status::Success)
}

/// Loads a checkpoint and checks it against the inputs it is applied to.
fn load_matching(path: &Path, inputs: &Inputs) -> Result<Checkpoint> {
    let ck = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
    ck.expect_schema(&inputs.schema)
        .with_context(|| format!("checkpoint {}", path.display()))?;
    let m = &ck.manifest;
    let ids_match = (m.user_ids.is_empty() || m.user_ids == inputs.dataset.users().ids())
        && (m.item_ids.is_empty() || m.item_ids == inputs.dataset.items().ids());
    if m.num_users != inputs.dataset.num_users() || m.num_items != inputs.dataset.num_items() || !ids_match {
        return Err(Error::Checkpoint(format!(
            "{} was built for a different dataset ({} users, {} items)",
            path.display(),
            m.num_users,
            m.num_items
        ))
        .into());
    }
    Ok(ck)
}

/// Data paths come from flags, else the config file, else the `run.json`
/// beside the (first) checkpoint.
fn resolve_data(
    common: &crate::args::CommonArgs,
    data: &crate::args::DataArgs,
    model: &Path,
) -> Result<RunConfig> {
    let mut c = base_config(common)?;
    if c.interactions.is_none() && data.interactions.is_none() {
        if let Some(run) = run_config_beside(model)? {
            c.interactions = run.interactions;
            c.user_features = run.user_features;
            c.item_features = run.item_features;
            c.schema = run.schema;
        }
    }
    data.apply(&mut c);
    common.apply(&mut c);
    c.absolutize()?;
    Ok(c)
}

fn default_out_dir(model: &Path, sub: &str) -> PathBuf {
    model.parent().unwrap_or(Path::new(".")).join(sub)
}

pub const REPEATED_HEADER: &str = "direction,k,hr,ndcg,num_queries,repeats";

pub fn repeated_csv(records: &[RepeatedMetrics]) -> String {
    let mut out = String::from(REPEATED_HEADER);
    out.push('\n');
    for r in records {
        let n = r.runs.first().map_or(0, |m| m.num_queries);
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{},{}\n",
            r.direction,
            r.k,
            r.hr,
            r.ndcg,
            n,
            r.runs.len()
        ));
    }
    out
}

pub fn eval(a: EvalArgs) -> Result<Status> {
    let mut c = resolve_data(&a.common, &a.data, &a.models[0])?;
    if a.common.out_dir.is_none() {
        c.out_dir = default_out_dir(&a.models[0], "eval");
    }
    if let Some(d) = a.direction {
        c.direction = d;
    }
    if let Some(k) = a.k {
        c.k = k;
    }
    if let Some(n) = a.negatives {
        c.eval_negatives = n;
    }
    if let Some(r) = a.repeats {
        c.repeats = r;
    }
    if a.eval_seed.is_some() {
        c.eval_seed = a.eval_seed;
    }
    if c.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    if c.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let inputs = load_inputs(&c)?;
    let checkpoints = a
        .models
        .iter()
        .map(|p| load_matching(p, &inputs))
        .collect::<Result<Vec<_>>>()?;

    let mut results = Vec::new();
    for direction in c.direction.list() {
        let ck = match checkpoints.iter().find(|ck| ck.manifest.holdout == Some(direction)) {
            Some(ck) => ck,
            None => {
                log::warn!(
                    "no checkpoint was trained with a {direction} holdout; using {} (its training data may contain the held-out positives)",
                    a.models[0].display()
                );
                &checkpoints[0]
            }
        };
        let runs = (0..c.repeats as u64)
            .map(|r| {
                let split = eval_split(&inputs.dataset, direction, c.eval_negatives, c.eval_seed().wrapping_add(r))?;
                let short = split.short_pools(c.eval_negatives);
                if short > 0 {
                    log::warn!("{short} {direction} queries had fewer than {} negatives available", c.eval_negatives);
                }
                evaluate(&ck.model, &split, &inputs.features, c.k)
            })
            .collect::<deephybrid::Result<Vec<RankingMetrics>>>()?;
        results.push(RepeatedMetrics::from_runs(runs)?);
    }

    create_dir(&c.out_dir)?;
    write(&c.out_dir.join("metrics.json"), serde_json::to_string_pretty(&results)? + "\n")?;
    let csv = repeated_csv(&results);
    write(&c.out_dir.join("metrics.csv"), &csv)?;
    write_run_record(&c.out_dir, "eval", &c)?;
    print!("{csv}");
    Ok(Status::Success)
}

pub fn sweep(a: SweepArgs) -> Result<Status> {
    let mut c = a.resolve()?;
    c.absolutize()?;
    let inputs = load_inputs(&c)?;
    let settings = EvalSettings {
        k: c.k,
        negatives: c.eval_negatives,
        eval_seed: c.eval_seed(),
    };
    let rows = factor_sweep(
        &inputs.dataset,
        &inputs.schema,
        &inputs.features,
        &c.factors,
        &c.direction.list(),
        &c.architecture(),
        &c.train(),
        settings,
    )?;
    let csv = sweep_csv(&rows);
    create_dir(&c.out_dir)?;
    write(&c.out_dir.join("sweep.csv"), &csv)?;
    write_run_record(&c.out_dir, "sweep", &c)?;
    print!("{csv}");
    Ok(Status::Success)
}

pub fn recommend(a: RecommendArgs) -> Result<Status> {
    if a.top_n == 0 {
        return Err(usage("--top-n must be at least 1"));
    }
    let c = resolve_data(&Default::default(), &a.data, &a.model)?;
    if c.interactions.is_none() {
        return Err(usage(format!(
            "--interactions is required: no run.json beside {}",
            a.model.display()
        )));
    }
    let inputs = load_inputs(&c)?;
    let ck = load_matching(&a.model, &inputs)?;
    let (ds, features) = (&inputs.dataset, &inputs.features);
    let (query_ids, candidate_ids) = match a.direction {
        Direction::Item => (ds.users(), ds.items()),
        Direction::User => (ds.items(), ds.users()),
    };
    let query_side = a.direction.query_side();
    let query = query_ids
        .index_of(&a.query_id)
        .ok_or_else(|| {
            let side = match query_side {
                Side::User => "user",
                Side::Item => "item",
            };
            Error::Lookup(format!("{side} {:?}", a.query_id))
        })?;
    let seen = match a.direction {
        Direction::Item => ds.items_of(query),
        Direction::User => ds.users_of(query),
    };
    let pool = features.side(a.direction.candidate_side());
    let candidates: Vec<&FeatureVector> = pool.iter().filter(|fv| seen.binary_search(&fv.id).is_err()).collect();
    if candidates.is_empty() {
        eprintln!("{} has interacted with every candidate; nothing to recommend", a.query_id);
        return Ok(Status::Success);
    }
    let qfv = &features.side(query_side)[query];
    let scores = ck.model.predict_batch(a.direction, qfv, &candidates)?;
    let mut ranked: Vec<(usize, f64)> = candidates.iter().map(|fv| fv.id).zip(scores).collect();
    ranked.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    for (rank, (idx, score)) in ranked.iter().take(a.top_n).enumerate() {
        println!("{}\t{}\t{:.6}", rank + 1, candidate_ids.id(*idx), score);
    }
    Ok(Status::Success)
}

pub fn gradcheck(a: GradcheckArgs) -> Result<Status> {
    if !(a.threshold > 0.0) {
        return Err(usage("--threshold must be positive"));
    }
    let report = run_gradcheck(&GradCheckOptions {
        seed: a.seed,
        threshold: a.threshold,
        corrupt_group: a.corrupt_group,
        ..GradCheckOptions::default()
    })?;
    println!("{report}");
    if report.passed() {
        Ok(Status::Success)
    } else {
        for f in report.failures() {
            eprintln!(
                "gradient mismatch in {} parameter group {} (relative error {:.3e})",
                f.architecture.as_str(),
                f.worst_group,
                f.max_relative_error
            );
        }
        Ok(Status::CheckFailed)
    }
}
