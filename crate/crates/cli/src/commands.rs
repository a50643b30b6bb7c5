use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use wbc_core::dataset::{
    build_manifest, extract_all, generate_phantoms, save_image, save_mask, save_plane,
    DatasetManifest, FeatureMatrix, LayoutRule, PhantomSpec, IMAGE_EXTENSIONS,
};
use wbc_core::eval::EvaluationReport;
use wbc_core::features::FEATURE_NAMES;
use wbc_core::forest::{derive_seed, holdout_importance, RandomForestModel, TuneResult};
use wbc_core::protocol::{self, ProtocolConfig};
use wbc_core::raster::{ColorSpace, RasterImage};
use wbc_core::segmentation::{segment_file, EntryFailure};

use crate::config::RunConfig;
use crate::{Cli, Command, GlobalArgs, PhantomArgs};

pub const MODEL_FILE: &str = "model.json";
pub const TUNE_FILE: &str = "tune.csv";
pub const SPLIT_FILE: &str = "split.csv";
pub const RUN_CONFIG_FILE: &str = "run.toml";

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli.global)?;
    let out = |default: &str| cfg.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match cli.command {
        Command::Segment { inputs, trace } => segment(&inputs, &out("masks"), trace, &cfg),
        Command::Extract { input, layout } => {
            extract(&input, &layout, &out("features.csv"), &cfg).map(|_| ())
        }
        Command::Train { matrix } => train(&matrix, &out("model"), &cfg),
        Command::Evaluate {
            model,
            matrix,
            split,
        } => evaluate(&model, &matrix, split.as_deref(), &out("report"), &cfg).map(|_| ()),
        Command::Phantom { phantom } => {
            let spec = phantom_spec(&phantom, cli.global.seed)?;
            let m = generate_phantoms(&spec, &out("phantoms"))?;
            eprintln!("wrote {} phantoms to {}", m.len(), m.root.display());
            Ok(())
        }
        Command::Pipeline { phantom } => pipeline(&phantom, cli.global.seed, &out("wbc-run"), &cfg),
    }
}

/// Defaults, then the config file, then flags.
fn resolve_config(g: &GlobalArgs) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.trees {
        cfg.n_trees = v;
    }
    if let Some(v) = g.folds {
        cfg.folds = v;
    }
    if let Some(v) = g.grid_max {
        cfg.grid_max = v;
    }
    if let Some(v) = &g.out {
        cfg.out = Some(v.clone());
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn image_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().and_then(|e| e.to_str()).is_some_and(|e| {
                        IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str())
                    })
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn save_stage(img: &RasterImage, path: &Path) -> wbc_core::Result<()> {
    match img.colorspace() {
        ColorSpace::Rgb => save_image(img, path),
        ColorSpace::Binary => {
            let scaled = img.plane(0).iter().map(|v| v * 255.0).collect();
            save_plane(
                &RasterImage::gray(img.width(), img.height(), scaled)?,
                0,
                path,
            )
        }
        _ => save_plane(img, 0, path),
    }
}

fn segment(inputs: &[PathBuf], out: &Path, trace: bool, cfg: &RunConfig) -> Result<()> {
    let files = image_inputs(inputs)?;
    if files.is_empty() {
        bail!("no input images");
    }
    create_dir(out)?;
    let seg = cfg.segmentation();
    let mut log = String::new();
    for file in &files {
        let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        let outcome = (|| -> Result<()> {
            let r = segment_file(file, &seg, trace)?;
            save_mask(&r.mask, &out.join(format!("{stem}_mask.png")))?;
            if trace {
                let dir = out.join("trace").join(stem);
                create_dir(&dir)?;
                for (i, (name, img)) in r.trace.iter().enumerate() {
                    save_stage(img, &dir.join(format!("{i:02}_{name}.png")))?;
                }
            }
            Ok(())
        })();
        if let Err(e) = outcome {
            eprintln!("{}: {e:#}", file.display());
            log.push_str(&format!("{}\t{e:#}\n", file.display()));
        }
    }
    if !log.is_empty() {
        let path = out.join("segment_errors.log");
        fs::write(&path, &log).with_context(|| format!("writing {}", path.display()))?;
        bail!(
            "{} of {} input(s) failed; see {}",
            log.lines().count(),
            files.len(),
            path.display()
        );
    }
    eprintln!("wrote {} mask(s) to {}", files.len(), out.display());
    Ok(())
}

/// One skip-report line; `index` is the manifest row, absent for files the
/// layout rule could not label.
struct Skip {
    index: Option<usize>,
    path: PathBuf,
    reason: String,
}

fn write_skips(path: &Path, skips: &[Skip]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["index", "path", "reason"])?;
    for s in skips {
        let index = s.index.map(|i| i.to_string()).unwrap_or_default();
        w.write_record([index, s.path.display().to_string(), s.reason.clone()])?;
    }
    w.flush()?;
    Ok(())
}

/// Path of the skip report written next to a feature matrix.
pub fn skipped_path(matrix: &Path) -> PathBuf {
    let stem = matrix
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("features");
    matrix.with_file_name(format!("{stem}_skipped.csv"))
}

fn extract(input: &Path, layout: &str, out: &Path, cfg: &RunConfig) -> Result<FeatureMatrix> {
    let (manifest, mut skipped) = if input.is_dir() {
        let rule: LayoutRule = layout.parse()?;
        let (m, skip) = build_manifest(input, rule)?;
        let skip = skip
            .into_iter()
            .map(|s| Skip {
                index: None,
                path: s.path,
                reason: s.reason,
            })
            .collect();
        (m, skip)
    } else {
        (DatasetManifest::load(input)?, Vec::new())
    };
    if manifest.is_empty() {
        bail!("no labelled images found in {}", input.display());
    }
    let (matrix, failures) = extract_all(
        &manifest,
        &cfg.segmentation(),
        &cfg.features(),
        cfg.execution,
    );
    for f in &failures {
        eprintln!("skipped {}: {}", f.path.display(), f.message);
    }
    skipped.extend(failures.into_iter().map(|f: EntryFailure| Skip {
        index: Some(f.index),
        path: f.path,
        reason: f.message,
    }));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    matrix.save(out)?;
    write_skips(&skipped_path(out), &skipped)?;
    eprintln!(
        "extracted {} of {} image(s) into {} ({} skipped)",
        matrix.len(),
        manifest.len(),
        out.display(),
        skipped.len()
    );
    if matrix.is_empty() {
        bail!("every image failed extraction");
    }
    Ok(matrix)
}

fn feature_names() -> Vec<String> {
    FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
}

fn write_tune(path: &Path, tune: &TuneResult) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let folds = tune.fold_accuracy.first().map_or(0, Vec::len);
    let mut header = vec!["mtry".to_string(), "cv_accuracy".to_string()];
    header.extend((1..=folds).map(|k| format!("fold_{k}")));
    header.push("chosen".into());
    w.write_record(&header)?;
    for (i, &m) in tune.grid.iter().enumerate() {
        let mut row = vec![m.to_string(), tune.cv_accuracy[i].to_string()];
        row.extend(tune.fold_accuracy[i].iter().map(f64::to_string));
        row.push((m == tune.chosen_mtry).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, serde::Serialize, serde::Deserialize)]
struct SplitRow {
    row: usize,
    source_id: String,
    label: String,
    role: String,
}

fn write_split(
    path: &Path,
    matrix: &FeatureMatrix,
    train: &[usize],
    validation: &[usize],
) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for (rows, role) in [(train, "train"), (validation, "validation")] {
        for &row in rows {
            let r = &matrix.rows[row];
            w.serialize(SplitRow {
                row,
                source_id: r.source_id.clone(),
                label: r.label.to_string(),
                role: role.into(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a split file and checks that it describes `matrix`.
fn read_split(path: &Path, matrix: &FeatureMatrix) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rd =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let (mut train, mut validation) = (Vec::new(), Vec::new());
    for rec in rd.deserialize() {
        let s: SplitRow = rec.with_context(|| format!("parsing {}", path.display()))?;
        match matrix.rows.get(s.row) {
            Some(r) if r.source_id == s.source_id => {}
            _ => bail!(
                "split row {} ({}) does not match the feature matrix",
                s.row,
                s.source_id
            ),
        }
        match s.role.as_str() {
            "train" => train.push(s.row),
            "validation" => validation.push(s.row),
            other => bail!("unknown role {other:?} in {}", path.display()),
        }
    }
    if validation.is_empty() {
        bail!("{} lists no validation rows", path.display());
    }
    Ok((train, validation))
}

fn train(matrix_path: &Path, out: &Path, cfg: &RunConfig) -> Result<()> {
    let matrix = FeatureMatrix::load(matrix_path)?;
    train_matrix(&matrix, out, &cfg.protocol()?, cfg)
}

fn train_matrix(
    matrix: &FeatureMatrix,
    out: &Path,
    p: &ProtocolConfig,
    cfg: &RunConfig,
) -> Result<()> {
    let data = matrix.to_dataset()?;
    let t = protocol::train(&data, &feature_names(), p)?;
    create_dir(out)?;
    t.model.save(&out.join(MODEL_FILE))?;
    write_tune(&out.join(TUNE_FILE), &t.tune)?;
    write_split(
        &out.join(SPLIT_FILE),
        matrix,
        &t.train_rows,
        &t.validation_rows,
    )?;
    let run = out.join(RUN_CONFIG_FILE);
    fs::write(&run, cfg.to_text()).with_context(|| format!("writing {}", run.display()))?;
    let best = t
        .tune
        .grid
        .iter()
        .position(|&m| m == t.tune.chosen_mtry)
        .map_or(f64::NAN, |i| t.tune.cv_accuracy[i]);
    eprintln!(
        "trained {} trees on {} rows (mtry {}, CV accuracy {best:.4}); {} rows held out",
        p.n_trees,
        t.train_rows.len(),
        t.tune.chosen_mtry,
        t.validation_rows.len()
    );
    Ok(())
}

fn evaluate(
    model_path: &Path,
    matrix_path: &Path,
    split: Option<&Path>,
    out: &Path,
    cfg: &RunConfig,
) -> Result<EvaluationReport> {
    let model = RandomForestModel::load(model_path)?;
    model.check_features(&feature_names())?;
    let matrix = FeatureMatrix::load(matrix_path)?;
    let data = matrix.to_dataset()?;
    let p = cfg.protocol()?;
    let report = match split {
        Some(path) => {
            let (train, validation) = read_split(path, &matrix)?;
            protocol::evaluate(&model, &data, &train, &validation, &p)?
        }
        None => {
            let cm = protocol::confusion(&model, &data, p.exec)?;
            let mda = holdout_importance(
                &model,
                &data,
                p.importance_repeats,
                derive_seed(p.seed, &[0x1D9A]),
                p.exec,
            )?;
            EvaluationReport::build(cm, mda)?
        }
    };
    report.write(out)?;
    eprint!("{}", report.to_text());
    Ok(report)
}

fn phantom_spec(args: &PhantomArgs, seed: Option<u64>) -> Result<PhantomSpec> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            PhantomSpec::from_toml(&text)?
        }
        None => PhantomSpec::default(),
    };
    if let Some(classes) = &args.classes {
        let Some((h, m)) = classes.split_once(',') else {
            bail!("--classes expects HEALTHY,MALIGNANT, got {classes:?}");
        };
        spec.healthy = h.trim().to_string();
        spec.malignant = m.trim().to_string();
    }
    if let Some(v) = seed {
        spec.seed = v;
    }
    if let Some(v) = args.per_class {
        spec.per_class = v;
    }
    if let Some(v) = args.size {
        spec.size = v;
    }
    if let Some(v) = args.background {
        spec.background = v;
    }
    spec.validate()?;
    Ok(spec)
}

fn pipeline(args: &PhantomArgs, seed: Option<u64>, out: &Path, cfg: &RunConfig) -> Result<()> {
    let start = Instant::now();
    let spec = phantom_spec(args, seed)?;
    let phantoms = out.join("phantoms");
    let manifest = generate_phantoms(&spec, &phantoms)?;
    eprintln!(
        "wrote {} phantoms to {}",
        manifest.len(),
        phantoms.display()
    );
    let matrix_path = out.join("features.csv");
    let matrix = extract(&phantoms.join("manifest.csv"), "", &matrix_path, cfg)?;
    let model_dir = out.join("model");
    train_matrix(&matrix, &model_dir, &cfg.protocol()?, cfg)?;
    evaluate(
        &model_dir.join(MODEL_FILE),
        &matrix_path,
        Some(&model_dir.join(SPLIT_FILE)),
        &out.join("report"),
        cfg,
    )?;
    eprintln!("pipeline finished in {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
