use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use deephybrid::data::{fit_schema, FeatureTable, SchemaDeclaration};
use deephybrid::train::{load_checkpoint, Checkpoint};
use deephybrid::{Architecture, ArchitectureConfig, DeepHybridModel};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_deephybrid"));
    c.arg("--log-level").arg("warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{args:?}\nstdout: {}\nstderr: {}", stdout(&o), stderr(&o));
    stdout(&o)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Data {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Data {
    fn new(users: usize, items: usize, per_user: usize) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let dir = root.join("data");
        ok(&[
            "gen-synth",
            "--users",
            &users.to_string(),
            "--items",
            &items.to_string(),
            "--per-user",
            &per_user.to_string(),
            "--mode",
            "mixed",
            "--seed",
            "1",
            "--out-dir",
            s(&dir),
        ]);
        Data { _tmp: tmp, root }
    }

    fn flags(&self) -> Vec<String> {
        let d = self.root.join("data");
        [
            ("--interactions", "interactions.csv"),
            ("--user-features", "user_features.csv"),
            ("--item-features", "item_features.csv"),
            ("--schema", "schema.json"),
        ]
        .iter()
        .flat_map(|(f, n)| [f.to_string(), d.join(n).to_string_lossy().into_owned()])
        .collect()
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn train(&self, out: &str, extra: &[&str]) -> PathBuf {
        let out = self.path(out);
        let mut args: Vec<String> = vec!["train".into()];
        args.extend(self.flags());
        args.extend(["--out-dir".into(), s(&out).into()]);
        args.extend(extra.iter().map(|x| x.to_string()));
        ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
        out.join("model.dhm")
    }
}

#[test]
fn gen_synth_prints_stats_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "gen-synth".to_string(),
            "--users=50".into(),
            "--items=40".into(),
            "--per-user=10".into(),
            "--mode=latent".into(),
            "--seed=1".into(),
            format!("--out-dir={}", d.display()),
        ]
    };
    let out = ok(&args(a.path()).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.trim(), "users 50  items 40  interactions 500  sparsity 75.000%");
    ok(&args(b.path()).iter().map(String::as_str).collect::<Vec<_>>());
    for f in ["interactions.csv", "user_features.csv", "item_features.csv", "schema.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("file");
    std::fs::write(&file, "x").unwrap();
    let o = run(&["gen-synth", "--users=5", "--items=5", "--per-user=2", "--out-dir", s(&file.join("sub"))]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1, "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_64() {
    let o = run(&["train", "--epochs", "1"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("--interactions"));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(run(&["train", "--arch", "svm"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn train_arch_toggles_and_zero_epochs() {
    let d = Data::new(30, 20, 5);
    let gmf = d.train("gmf", &["--arch", "gmf", "--epochs", "1"]);
    let ck = Checkpoint::load(&gmf).unwrap();
    assert!(ck.manifest.architecture.mf_branch);
    assert!(!ck.manifest.architecture.dnn_branch);
    assert_eq!(ck.manifest.holdout, Some(deephybrid::Direction::Item));
    let history: Value = serde_json::from_slice(&std::fs::read(d.path("gmf/history.json")).unwrap()).unwrap();
    assert_eq!(history["epochs"].as_array().unwrap().len(), 1);

    let fresh = d.train("fresh", &["--epochs", "0", "--seed", "9"]);
    let trained = load_checkpoint(&fresh).unwrap();
    let ut = FeatureTable::load(d.path("data/user_features.csv"), "user_id").unwrap();
    let it = FeatureTable::load(d.path("data/item_features.csv"), "item_id").unwrap();
    let decl = SchemaDeclaration::load(d.path("data/schema.json")).unwrap();
    let schema = fit_schema(&decl, Some(&ut), Some(&it)).unwrap();
    let built =
        DeepHybridModel::build(ArchitectureConfig::new(Architecture::DeepHybrid), 30, 20, &schema, 9).unwrap();
    assert_eq!(trained, built);
}

#[test]
fn flags_override_config_file_over_defaults() {
    let d = Data::new(20, 15, 4);
    let cfg = d.path("cfg.json");
    let mut file: serde_json::Map<String, Value> = serde_json::Map::new();
    file.insert("epochs".into(), 2.into());
    file.insert("arch".into(), "neumf".into());
    file.insert("interactions".into(), s(&d.path("data/interactions.csv")).into());
    std::fs::write(&cfg, Value::Object(file).to_string()).unwrap();

    ok(&["train", "--config", s(&cfg), "--out-dir", s(&d.path("a"))]);
    ok(&["train", "--config", s(&cfg), "--epochs", "1", "--out-dir", s(&d.path("b"))]);
    let run = |dir: &str| -> Value { serde_json::from_slice(&std::fs::read(d.path(dir).join("run.json")).unwrap()).unwrap() };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a["command"], "train");
    assert_eq!(a["config"]["epochs"], 2);
    assert_eq!(b["config"]["epochs"], 1);
    assert_eq!(b["config"]["arch"], "neumf");
    assert_eq!(b["config"]["batch_size"], 200);
}

#[test]
fn eval_both_directions_with_repeats() {
    let d = Data::new(40, 30, 6);
    let item = d.train("item", &["--epochs", "2"]);
    let user = d.train("user", &["--epochs", "2", "--holdout", "user"]);
    let out = ok(&["eval", "--model", s(&item), s(&user), "--direction", "both", "--repeats", "3", "--negatives", "9"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "direction,k,hr,ndcg,num_queries,repeats");
    assert!(lines[1].starts_with("item,10,"));
    assert!(lines[2].starts_with("user,10,"));

    let metrics: Value = serde_json::from_slice(&std::fs::read(d.path("item/eval/metrics.json")).unwrap()).unwrap();
    let records = metrics.as_array().unwrap();
    assert_eq!(records.len(), 2);
    for r in records {
        let runs = r["runs"].as_array().unwrap();
        assert_eq!(runs.len(), 3);
        let mean = runs.iter().map(|x| x["hr"].as_f64().unwrap()).sum::<f64>() / 3.0;
        assert!((r["hr"].as_f64().unwrap() - mean).abs() < 1e-12);
    }
}

#[test]
fn eval_rejects_foreign_schema() {
    let d = Data::new(20, 15, 4);
    let model = d.train("m", &["--epochs", "1"]);
    let o = run(&["eval", "--model", s(&model), "--interactions", s(&d.path("data/interactions.csv"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fingerprint"), "{}", stderr(&o));
}

#[test]
fn pipeline_metrics_are_byte_identical() {
    let d = Data::new(30, 25, 5);
    let mut outputs = Vec::new();
    for run_dir in ["r1", "r2"] {
        let model = d.train(run_dir, &["--epochs", "2", "--seed", "4"]);
        ok(&["eval", "--model", s(&model), "--direction", "item", "--eval-seed", "3"]);
        outputs.push(std::fs::read(d.path(run_dir).join("eval/metrics.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn sweep_rows_and_determinism() {
    let d = Data::new(20, 15, 4);
    let mut base: Vec<String> = vec!["sweep".into()];
    base.extend(d.flags());
    base.extend(["--epochs".into(), "1".into(), "--eval-negatives".into(), "5".into()]);
    let sweep = |extra: &[&str], out: &str| {
        let mut a = base.clone();
        a.extend(extra.iter().map(|x| x.to_string()));
        a.extend(["--out-dir".into(), s(&d.path(out)).into()]);
        ok(&a.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let all = sweep(&[], "s1");
    assert_eq!(all.lines().count(), 1 + 8);
    assert_eq!(all.lines().next(), Some("factor,direction,hr,ndcg"));
    assert_eq!(std::fs::read_to_string(d.path("s1/sweep.csv")).unwrap(), all);
    let single = sweep(&["--factors", "16"], "s2");
    assert_eq!(single.lines().count(), 1 + 2);
    assert_eq!(sweep(&["--factors", "16"], "s3"), single);
}

#[test]
fn recommend_contract() {
    // u0 interacts with every item.
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("x.csv");
    let mut rows = String::from("user_id,item_id\n");
    for i in 0..4 {
        rows.push_str(&format!("u0,i{i}\n"));
    }
    rows.push_str("u1,i0\nu1,i1\nu2,i2\nu2,i3\n");
    std::fs::write(&csv, rows).unwrap();
    let out = tmp.path().join("m");
    ok(&["train", "--interactions", s(&csv), "--epochs", "1", "--holdout", "none", "--out-dir", s(&out)]);
    let model = out.join("model.dhm");

    let top1 = ok(&["recommend", "--model", s(&model), "--query-id", "u1", "--top-n", "1"]);
    assert_eq!(top1.lines().count(), 1);
    let id = top1.split('\t').nth(1).unwrap();
    assert!(id == "i2" || id == "i3", "{top1}");

    let all = run(&["recommend", "--model", s(&model), "--query-id", "u0"]);
    assert_eq!(all.status.code(), Some(0));
    assert!(stdout(&all).is_empty());
    assert!(stderr(&all).contains("nothing to recommend"));

    let users = ok(&["recommend", "--model", s(&model), "--query-id", "i3", "--direction", "user"]);
    let ranked: Vec<&str> = users.lines().map(|l| l.split('\t').nth(1).unwrap()).collect();
    assert_eq!(ranked, vec!["u1"]);

    let unknown = run(&["recommend", "--model", s(&model), "--query-id", "u9"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(stderr(&unknown).contains("u9"));
}

#[test]
fn gradcheck_passes_and_names_corrupted_group() {
    let a = run(&["gradcheck", "--seed", "2"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert!(stdout(&a).contains("gradcheck passed"));
    assert_eq!(stdout(&a), stdout(&run(&["gradcheck", "--seed", "2"])));

    let bad = run(&["gradcheck", "--corrupt-group", "layer1.weight"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stderr(&bad).contains("layer1.weight"), "{}", stderr(&bad));
}
