use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use deephybrid::data::sample_training_instances;
use deephybrid::eval::evaluate;
use deephybrid::train::Trainer;
use deephybrid::{Architecture, TrainConfig};
use deephybrid_bench::fixture;

fn forward_backward(c: &mut Criterion) {
    let mut group = c.benchmark_group("forward_backward");
    for arch in Architecture::ALL {
        let f = fixture(100, 80, 10, arch);
        let (u, i) = (f.features.user(3), f.features.item(5));
        group.bench_function(arch.as_str(), |b| {
            b.iter(|| {
                let t = f.model.forward(u, i).unwrap();
                f.model.backward(&t, t.prediction - 1.0).unwrap()
            })
        });
    }
    group.finish();
}

fn epoch(c: &mut Criterion) {
    let f = fixture(200, 150, 10, Architecture::DeepHybrid);
    let config = TrainConfig::default();
    c.bench_function("epoch_deephybrid_200x150", |b| {
        b.iter_batched(
            || (f.model.clone(), Trainer::new(&f.model, config.clone()).unwrap()),
            |(mut model, mut trainer)| trainer.train_epoch(&mut model, &f.split.train, &f.features, 0).unwrap(),
            BatchSize::LargeInput,
        )
    });
    c.bench_function("sample_epoch_200x150", |b| {
        b.iter(|| sample_training_instances(&f.split.train, 3, 1, 0))
    });
}

fn evaluation(c: &mut Criterion) {
    let f = fixture(200, 150, 10, Architecture::DeepHybrid);
    c.bench_function("evaluate_item_200_queries", |b| {
        b.iter(|| evaluate(&f.model, &f.split, &f.features, 10).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = forward_backward, epoch, evaluation
}
criterion_main!(benches);
