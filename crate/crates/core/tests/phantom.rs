use std::fs;

use wbc_core::dataset::{
    extract_all, generate_phantoms, load_image, load_mask, mask_path, render_phantom, Background,
    DatasetManifest, FeatureMatrix, PhantomSpec,
};
use wbc_core::features::{extract_features, FeatureConfig, FEATURE_COUNT, FEATURE_NAMES};
use wbc_core::forest::Label;
use wbc_core::segmentation::{segment_cell, SegmentationConfig};
use wbc_core::Execution;

fn small_spec() -> PhantomSpec {
    PhantomSpec {
        per_class: 2,
        ..Default::default()
    }
}

#[test]
fn same_seed_gives_identical_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = PhantomSpec {
        per_class: 3,
        ..Default::default()
    };
    let ma = generate_phantoms(&spec, a.path()).unwrap();
    generate_phantoms(&spec, b.path()).unwrap();
    assert_eq!(ma.len(), 6);
    for e in &ma.entries {
        for rel in [e.path.clone(), mask_path(std::path::Path::new(""), &e.path)] {
            assert_eq!(
                fs::read(a.path().join(&rel)).unwrap(),
                fs::read(b.path().join(&rel)).unwrap()
            );
        }
    }
    for f in ["manifest.csv", "phantom.toml"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap()
        );
    }
    let reloaded = DatasetManifest::load(&a.path().join("manifest.csv")).unwrap();
    assert_eq!(reloaded.entries, ma.entries);

    let other = tempfile::tempdir().unwrap();
    generate_phantoms(&PhantomSpec { seed: 8, ..spec }, other.path()).unwrap();
    let p = &ma.entries[0].path;
    assert_ne!(
        fs::read(a.path().join(p)).unwrap(),
        fs::read(other.path().join(p)).unwrap()
    );
}

#[test]
fn ground_truth_matches_segmentation_on_both_backgrounds() {
    let cfg = SegmentationConfig::default();
    for background in [Background::Tissue, Background::Black] {
        let spec = PhantomSpec {
            background,
            ..Default::default()
        };
        for label in [Label::Healthy, Label::Malignant] {
            for i in 0..6 {
                let (img, truth) = render_phantom(&spec, label, i).unwrap();
                let seg = segment_cell(&img, &cfg, false).unwrap();
                let dice = seg.mask.dice(&truth).unwrap();
                assert!(dice >= 0.95, "{background:?} {label} #{i}: dice {dice}");
            }
        }
    }
}

#[test]
fn written_masks_match_rendered_masks() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_phantoms(&small_spec(), dir.path()).unwrap();
    for (i, e) in m.entries.iter().enumerate() {
        let (img, truth) = render_phantom(&small_spec(), e.label, i % 2).unwrap();
        assert_eq!(load_image(&m.resolve(&e.path)).unwrap(), img);
        assert_eq!(load_mask(&mask_path(&m.root, &e.path)).unwrap(), truth);
    }
}

#[test]
fn extract_all_shape_and_composition() {
    let dir = tempfile::tempdir().unwrap();
    let m = generate_phantoms(&small_spec(), dir.path()).unwrap();
    let seg = SegmentationConfig::default();
    let feat = FeatureConfig::default();
    let (matrix, failures) = extract_all(&m, &seg, &feat, Execution::Parallel);
    assert!(failures.is_empty(), "{failures:?}");
    assert_eq!(matrix.len(), 4);
    assert_eq!(FeatureMatrix::column_names().len(), FEATURE_COUNT);
    assert_eq!(FeatureMatrix::column_names(), &FEATURE_NAMES);
    assert!(matrix
        .rows
        .iter()
        .all(|r| r.values.0.iter().all(|v| v.is_finite())));

    let img = load_image(&m.resolve(&m.entries[3].path)).unwrap();
    let mask = segment_cell(&img, &seg, false).unwrap().mask;
    assert_eq!(
        extract_features(&img, &mask, &feat).unwrap(),
        matrix.rows[3].values
    );

    let (seq, _) = extract_all(&m, &seg, &feat, Execution::Sequential);
    assert_eq!(seq, matrix);

    let path = dir.path().join("features.csv");
    matrix.save(&path).unwrap();
    let first = fs::read(&path).unwrap();
    extract_all(&m, &seg, &feat, Execution::Parallel)
        .0
        .save(&path)
        .unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);
    assert_eq!(FeatureMatrix::load(&path).unwrap(), matrix);
}

#[test]
fn unreadable_entries_are_reported_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = generate_phantoms(&small_spec(), dir.path()).unwrap();
    fs::write(m.resolve(&m.entries[1].path), b"not an image").unwrap();
    m.entries[2].path = "images/missing.png".into();
    let (matrix, failures) = extract_all(
        &m,
        &SegmentationConfig::default(),
        &FeatureConfig::default(),
        Execution::Parallel,
    );
    assert_eq!(matrix.len(), 2);
    let idx: Vec<_> = failures.iter().map(|f| f.index).collect();
    assert_eq!(idx, [1, 2]);
}

#[test]
fn class_recipes_separate_mean_magenta() {
    let spec = PhantomSpec {
        per_class: 12,
        ..Default::default()
    };
    let seg = SegmentationConfig::default();
    let feat = FeatureConfig::default();
    let m_index = FEATURE_NAMES.iter().position(|n| *n == "Mean M").unwrap();
    let mut groups = [Vec::new(), Vec::new()];
    for label in [Label::Healthy, Label::Malignant] {
        for i in 0..spec.per_class {
            let (img, _) = render_phantom(&spec, label, i).unwrap();
            let mask = segment_cell(&img, &seg, false).unwrap().mask;
            groups[label.index()].push(extract_features(&img, &mask, &feat).unwrap().0[m_index]);
        }
    }
    let stats = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        (mean, var)
    };
    let (m0, v0) = stats(&groups[0]);
    let (m1, v1) = stats(&groups[1]);
    let pooled = ((v0 + v1) / 2.0).sqrt();
    assert!(
        (m0 - m1).abs() > 3.0 * pooled,
        "gap {} vs pooled sd {pooled}",
        (m0 - m1).abs()
    );
}
