//! Sequential vs parallel timings for the three data-parallel loops: forest
//! training, batch feature extraction and permutation importance.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wbc_core::dataset::{extract_all, generate_phantoms, PhantomSpec};
use wbc_core::features::FeatureConfig;
use wbc_core::forest::{permutation_importance, train_forest, Dataset, ForestConfig, Label};
use wbc_core::segmentation::SegmentationConfig;
use wbc_core::Execution;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn synthetic(n: usize, width: usize) -> (Dataset, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = if i % 2 == 0 {
            Label::Healthy
        } else {
            Label::Malignant
        };
        let shift = label.index() as f64 * 0.8;
        rows.push(
            (0..width)
                .map(|j| rng.random::<f64>() + if j < 3 { shift } else { 0.0 })
                .collect(),
        );
        labels.push(label);
    }
    let names = (0..width).map(|j| format!("f{j}")).collect();
    (Dataset::from_rows(rows, labels).unwrap(), names)
}

fn forest(c: &mut Criterion) {
    let (data, names) = synthetic(400, 24);
    let mut g = c.benchmark_group("train_forest");
    g.sample_size(10);
    for exec in MODES {
        let cfg = ForestConfig {
            n_trees: 200,
            mtry: 5,
            exec,
            ..Default::default()
        };
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{exec:?}")),
            &cfg,
            |b, cfg| b.iter(|| train_forest(&data, &names, cfg).unwrap()),
        );
    }
    g.finish();
}

fn importance(c: &mut Criterion) {
    let (data, names) = synthetic(300, 24);
    let model = train_forest(
        &data,
        &names,
        &ForestConfig {
            n_trees: 200,
            mtry: 5,
            ..Default::default()
        },
    )
    .unwrap();
    let mut g = c.benchmark_group("permutation_importance");
    g.sample_size(10);
    for exec in MODES {
        g.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| permutation_importance(&model, &data, 3, 7, exec).unwrap())
        });
    }
    g.finish();
}

fn extraction(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let manifest = generate_phantoms(
        &PhantomSpec {
            per_class: 8,
            ..Default::default()
        },
        dir.path(),
    )
    .unwrap();
    let (seg, feat) = (SegmentationConfig::default(), FeatureConfig::default());
    let mut g = c.benchmark_group("extract_all");
    g.sample_size(10);
    for exec in MODES {
        g.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| extract_all(&manifest, &seg, &feat, exec))
        });
    }
    g.finish();
}

criterion_group!(benches, forest, importance, extraction);
criterion_main!(benches);
