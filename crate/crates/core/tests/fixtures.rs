mod common;

use deephybrid::data::{generate_synthetic, SynthConfig, SynthMode};

fn regenerates(name: &str, cfg: SynthConfig) {
    let dir = common::fixture_dir(name);
    let data = generate_synthetic(&cfg).unwrap();
    let mut csv = Vec::new();
    data.dataset.write_csv(&mut csv).unwrap();
    let read = |f: &str| std::fs::read(dir.join(f)).unwrap();
    assert_eq!(read("interactions.csv"), csv);
    assert_eq!(read("user_features.csv"), data.user_features_csv.as_bytes());
    assert_eq!(read("item_features.csv"), data.item_features_csv.as_bytes());
    assert_eq!(read("schema.json"), data.schema_json().as_bytes());
}

#[test]
fn latent_fixture_matches_generator() {
    regenerates(
        "latent",
        SynthConfig {
            num_users: 500,
            num_items: 300,
            interactions_per_user: 20,
            mode: SynthMode::Latent,
            seed: common::FIXTURE_SEED,
        },
    );
}

#[test]
fn feature_fixture_matches_generator() {
    regenerates(
        "feature",
        SynthConfig {
            num_users: 3000,
            num_items: 300,
            interactions_per_user: 3,
            mode: SynthMode::Feature,
            seed: common::FIXTURE_SEED,
        },
    );
}

#[test]
fn fixtures_load() {
    let f = common::load("latent");
    assert_eq!((f.dataset.num_users(), f.dataset.len()), (500, 10_000));
    let f = common::load("feature");
    assert_eq!((f.dataset.num_users(), f.dataset.len()), (3000, 9000));
    assert_eq!(f.features.user(0).categorical.len(), 3);
}
