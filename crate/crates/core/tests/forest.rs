use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wbc_core::forest::{
    oob_accuracy, permutation_importance, train_forest, train_tree, Dataset, ForestConfig, Label,
    Node, RandomForestModel,
};
use wbc_core::Execution;

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

/// Feature 0 carries the label (with some overlap); the others are noise.
fn noisy(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let label = if i % 2 == 0 {
            Label::Healthy
        } else {
            Label::Malignant
        };
        let signal = if label == Label::Malignant { 1.0 } else { 0.0 } + rng.random::<f64>() * 1.2;
        rows.push(vec![signal, rng.random(), rng.random(), rng.random()]);
        labels.push(label);
    }
    Dataset::from_rows(rows, labels).unwrap()
}

fn gini(h: usize, m: usize) -> f64 {
    let n = (h + m) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let (p, q) = (h as f64 / n, m as f64 / n);
    1.0 - p * p - q * q
}

/// Weighted child impurity of splitting `data` at `x[feature] <= threshold`.
fn split_impurity(data: &Dataset, feature: usize, threshold: f64) -> f64 {
    let mut counts = [[0usize; 2]; 2];
    for r in 0..data.len() {
        let side = usize::from(data.value(r, feature) > threshold);
        counts[side][data.labels[r].index()] += 1;
    }
    let n = data.len() as f64;
    counts
        .iter()
        .map(|c| (c[0] + c[1]) as f64 / n * gini(c[0], c[1]))
        .sum()
}

/// Exhaustive search over every feature and every cut between distinct values.
fn brute_force_best(data: &Dataset) -> Option<f64> {
    let mut best: Option<f64> = None;
    for f in 0..data.n_features() {
        let mut vals: Vec<f64> = (0..data.len()).map(|r| data.value(r, f)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let s = split_impurity(data, f, (w[0] + w[1]) / 2.0);
            best = Some(best.map_or(s, |b: f64| b.min(s)));
        }
    }
    best
}

#[test]
fn root_split_matches_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..300 {
        let n = rng.random_range(2..=8);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(0..5) as f64).collect())
            .collect();
        let labels: Vec<Label> = (0..n)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Label::Malignant
                } else {
                    Label::Healthy
                }
            })
            .collect();
        let data = Dataset::from_rows(rows, labels).unwrap();
        let sample: Vec<usize> = (0..n).collect();
        let tree = train_tree(&data, &sample, 3, 1, &mut rng);
        let [h, m] = data.class_counts();
        match (&tree.nodes[0], brute_force_best(&data)) {
            (
                Node::Split {
                    feature, threshold, ..
                },
                Some(best),
            ) => {
                assert!(h > 0 && m > 0);
                assert!((split_impurity(&data, *feature, *threshold) - best).abs() < 1e-12);
                checked += 1;
            }
            (Node::Leaf { .. }, best) => assert!(h == 0 || m == 0 || best.is_none()),
            (Node::Split { .. }, None) => panic!("split found where none exists"),
        }
    }
    assert!(checked > 100);
}

#[test]
fn out_of_bag_fraction_is_about_one_over_e() {
    let data = noisy(200, 1);
    let cfg = ForestConfig {
        n_trees: 500,
        seed: 5,
        ..Default::default()
    };
    let model = train_forest(&data, &names(4), &cfg).unwrap();
    let mean = model.oob.iter().map(Vec::len).sum::<usize>() as f64 / (500.0 * 200.0);
    assert!((mean - (-1f64).exp()).abs() < 0.01, "{mean}");
}

#[test]
fn same_seed_same_model_in_both_execution_modes() {
    let data = noisy(60, 2);
    let par = ForestConfig {
        n_trees: 80,
        mtry: 2,
        seed: 11,
        exec: Execution::Parallel,
        ..Default::default()
    };
    let seq = ForestConfig {
        exec: Execution::Sequential,
        ..par
    };
    let a = train_forest(&data, &names(4), &par).unwrap();
    let b = train_forest(&data, &names(4), &par).unwrap();
    let c = train_forest(&data, &names(4), &seq).unwrap();
    assert_eq!(a.content_hash().unwrap(), b.content_hash().unwrap());
    assert_eq!(a.content_hash().unwrap(), c.content_hash().unwrap());
    let d = train_forest(&data, &names(4), &ForestConfig { seed: 12, ..par }).unwrap();
    assert_ne!(a.content_hash().unwrap(), d.content_hash().unwrap());
}

#[test]
fn model_file_round_trip() {
    let data = noisy(40, 3);
    let model = train_forest(
        &data,
        &names(4),
        &ForestConfig {
            n_trees: 25,
            mtry: 2,
            ..Default::default()
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let back = RandomForestModel::load(&path).unwrap();
    assert_eq!(back, model);
    for r in 0..data.len() {
        assert_eq!(
            back.predict(data.row(r)).unwrap(),
            model.predict(data.row(r)).unwrap()
        );
    }
    assert!(back.check_features(&names(4)).is_ok());
    assert!(back.check_features(&names(5)).is_err());
    assert!(model.predict(&[0.0; 3]).is_err());
}

#[test]
fn informative_feature_dominates_importance() {
    let data = noisy(120, 4);
    let model = train_forest(
        &data,
        &names(4),
        &ForestConfig {
            n_trees: 200,
            mtry: 2,
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let mda = permutation_importance(&model, &data, 3, 9, Execution::Parallel).unwrap();
    assert!(mda[1..].iter().all(|&v| mda[0] > 3.0 * v.abs()), "{mda:?}");
    let seq = permutation_importance(&model, &data, 3, 9, Execution::Sequential).unwrap();
    assert_eq!(mda, seq);
    let acc = oob_accuracy(&model, &data).unwrap();
    assert!(acc > 0.75, "{acc}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Trees only compare values within a column, so a strictly increasing
    /// transform of any column must grow the same trees (up to thresholds) and
    /// route every in-bag row the same way.
    #[test]
    fn monotone_transform_invariance(seed in 0u64..1000, col in 0usize..4) {
        let data = noisy(40, seed);
        let mut warped = data.clone();
        warped.map_column(col, |v| (3.0 * v).exp() - 7.0);
        let cfg = ForestConfig { n_trees: 30, mtry: 2, seed, ..Default::default() };
        let a = train_forest(&data, &names(4), &cfg).unwrap();
        let b = train_forest(&warped, &names(4), &cfg).unwrap();
        prop_assert_eq!(&a.oob, &b.oob);
        for (t, (ta, tb)) in a.trees.iter().zip(&b.trees).enumerate() {
            prop_assert_eq!(ta.nodes.len(), tb.nodes.len());
            for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
                match (na, nb) {
                    (Node::Leaf { counts: ca }, Node::Leaf { counts: cb }) => prop_assert_eq!(ca, cb),
                    (Node::Split { feature: fa, left: la, .. }, Node::Split { feature: fb, left: lb, .. }) => {
                        prop_assert_eq!((fa, la), (fb, lb));
                    }
                    _ => prop_assert!(false, "node kinds differ"),
                }
            }
            for r in (0..data.len()).filter(|r| !a.oob[t].contains(&(*r as u32))) {
                prop_assert_eq!(ta.leaf_counts(data.row(r)), tb.leaf_counts(warped.row(r)));
            }
        }
    }
}
