//! Classification metrics, exact binomial intervals and variable-importance
//! normalisation, plus report emission.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::features::{Category, FEATURE_COUNT, FEATURE_NAMES};
use crate::forest::Label;

/// Healthy is the negative class, Malignant the positive one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionMatrix {
    pub fn new(tn: u64, fp: u64, fn_: u64, tp: u64) -> Self {
        ConfusionMatrix { tn, fp, fn_, tp }
    }

    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::InvalidParameter(format!(
                "{} labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = ConfusionMatrix::default();
        for (&t, &p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Label::Healthy, Label::Healthy) => cm.tn += 1,
                (Label::Healthy, Label::Malignant) => cm.fp += 1,
                (Label::Malignant, Label::Healthy) => cm.fn_ += 1,
                (Label::Malignant, Label::Malignant) => cm.tp += 1,
            }
        }
        Ok(cm)
    }

    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }

    pub fn correct(&self) -> u64 {
        self.tn + self.tp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Smallest `p` in `[0, 1]` with `f(p) >= target`, for nondecreasing `f`.
fn bisect(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Two-sided Clopper–Pearson interval for `x` successes in `n` trials.
pub fn clopper_pearson(x: u64, n: u64, level: f64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InsufficientData(
            "binomial interval needs n > 0".into(),
        ));
    }
    if x > n {
        return Err(Error::InvalidParameter(format!(
            "{x} successes out of {n} trials"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    let alpha = 1.0 - level;
    let (xf, nf) = (x as f64, n as f64);
    // P(X >= x | p) = I_p(x, n - x + 1); P(X <= x | p) = 1 - I_p(x + 1, n - x).
    let lower = if x == 0 {
        0.0
    } else {
        bisect(|p| beta_reg(xf, nf - xf + 1.0, p), alpha / 2.0)
    };
    let upper = if x == n {
        1.0
    } else {
        bisect(|p| beta_reg(xf + 1.0, nf - xf, p), 1.0 - alpha / 2.0)
    };
    Ok((lower, upper))
}

pub fn accuracy_with_ci(cm: &ConfusionMatrix, level: f64) -> Result<Interval> {
    let n = cm.total();
    if n == 0 {
        return Err(Error::InsufficientData("empty confusion matrix".into()));
    }
    let (lower, upper) = clopper_pearson(cm.correct(), n, level)?;
    Ok(Interval {
        estimate: cm.correct() as f64 / n as f64,
        lower,
        upper,
    })
}

/// F1 with Malignant as the positive class.
pub fn f1_score(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.tp + cm.fp == 0 {
        return Err(Error::Undefined(
            "precision: no positive predictions".into(),
        ));
    }
    if cm.tp + cm.fn_ == 0 {
        return Err(Error::Undefined("recall: no positive cases".into()));
    }
    Ok(2.0 * cm.tp as f64 / (2 * cm.tp + cm.fp + cm.fn_) as f64)
}

/// Importances divided by the largest one, negatives clamped to zero.
pub fn relative_feature_vi(mda: &[f64]) -> Result<Vec<f64>> {
    if mda.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite importance".into()));
    }
    let max = mda.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::Undefined(
            "no feature has positive importance".into(),
        ));
    }
    Ok(mda.iter().map(|v| v.max(0.0) / max).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryVi {
    pub shape: f64,
    pub color: f64,
    pub texture: f64,
}

impl CategoryVi {
    pub fn get(&self, c: Category) -> f64 {
        match c {
            Category::Shape => self.shape,
            Category::Color => self.color,
            Category::Texture => self.texture,
        }
    }
}

/// Per-category sums of the (clamped) importances, normalised by the largest
/// sum.
pub fn category_vi(mda: &[f64]) -> Result<CategoryVi> {
    if mda.len() != FEATURE_COUNT {
        return Err(Error::InvalidParameter(format!(
            "expected {FEATURE_COUNT} importances, got {}",
            mda.len()
        )));
    }
    if mda.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite importance".into()));
    }
    let mut sums = [0.0; 3];
    for (i, v) in mda.iter().enumerate() {
        sums[Category::of(i) as usize] += v.max(0.0);
    }
    let max = sums.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::Undefined(
            "no category has positive importance".into(),
        ));
    }
    Ok(CategoryVi {
        shape: sums[0] / max,
        color: sums[1] / max,
        texture: sums[2] / max,
    })
}

/// Everything reported for one evaluated model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub ci95: (f64, f64),
    /// `None` when precision or recall is undefined.
    pub f1: Option<f64>,
    pub per_feature_vi: Vec<f64>,
    /// `None` when no feature has positive importance.
    pub relative_vi: Option<Vec<f64>>,
    pub category_vi: Option<CategoryVi>,
}

const METRICS_FILE: &str = "metrics.csv";
const FEATURES_FILE: &str = "feature_importance.csv";
const CATEGORIES_FILE: &str = "category_importance.csv";

impl EvaluationReport {
    pub fn build(confusion: ConfusionMatrix, mda: Vec<f64>) -> Result<Self> {
        if mda.len() != FEATURE_COUNT {
            return Err(Error::InvalidParameter(format!(
                "expected {FEATURE_COUNT} importances, got {}",
                mda.len()
            )));
        }
        let acc = accuracy_with_ci(&confusion, 0.95)?;
        Ok(EvaluationReport {
            confusion,
            accuracy: acc.estimate,
            ci95: (acc.lower, acc.upper),
            f1: f1_score(&confusion).ok(),
            relative_vi: relative_feature_vi(&mda).ok(),
            category_vi: category_vi(&mda).ok(),
            per_feature_vi: mda,
        })
    }

    pub fn to_text(&self) -> String {
        let cm = &self.confusion;
        let mut s = String::new();
        let _ = writeln!(s, "Confusion matrix (rows: prediction, columns: truth)");
        let _ = writeln!(s, "{:>12} {:>10} {:>10}", "", "Healthy", "Malignant");
        let _ = writeln!(s, "{:>12} {:>10} {:>10}", "Healthy", cm.tn, cm.fn_);
        let _ = writeln!(s, "{:>12} {:>10} {:>10}", "Malignant", cm.fp, cm.tp);
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "Accuracy  {:.4}  95% CI ({:.4}, {:.4})",
            self.accuracy, self.ci95.0, self.ci95.1
        );
        match self.f1 {
            Some(f) => {
                let _ = writeln!(s, "F1        {f:.4}");
            }
            None => {
                let _ = writeln!(s, "F1        undefined");
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<18} {:>9} {:>9}", "Feature", "MDA", "Relative");
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            let rel = self
                .relative_vi
                .as_ref()
                .map_or("NA".to_string(), |r| format!("{:.3}", r[i]));
            let _ = writeln!(s, "{:<18} {:>9.4} {:>9}", name, self.per_feature_vi[i], rel);
        }
        let _ = writeln!(s);
        if let Some(c) = &self.category_vi {
            for cat in Category::ALL {
                let _ = writeln!(s, "{:<18} {:>9.3}", cat.name(), c.get(cat));
            }
        }
        s
    }

    /// Writes the text report and three CSV tables into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let text = dir.join("report.txt");
        fs::write(&text, self.to_text()).map_err(|e| Error::io(&text, e))?;

        let mut w = csv::Writer::from_path(dir.join(METRICS_FILE))?;
        w.write_record(["metric", "value", "lower", "upper"])?;
        let cm = &self.confusion;
        for (name, v) in [("tn", cm.tn), ("fp", cm.fp), ("fn", cm.fn_), ("tp", cm.tp)] {
            w.write_record([name, &v.to_string(), "", ""])?;
        }
        w.write_record([
            "accuracy",
            &self.accuracy.to_string(),
            &self.ci95.0.to_string(),
            &self.ci95.1.to_string(),
        ])?;
        w.write_record([
            "f1",
            &self.f1.map_or("NA".into(), |f| f.to_string()),
            "",
            "",
        ])?;
        w.flush()
            .map_err(|e| Error::io(dir.join(METRICS_FILE), e))?;

        let mut w = csv::Writer::from_path(dir.join(FEATURES_FILE))?;
        w.write_record(["feature", "mda", "relative"])?;
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            let rel = self
                .relative_vi
                .as_ref()
                .map_or("NA".into(), |r| r[i].to_string());
            w.write_record([*name, &self.per_feature_vi[i].to_string(), &rel])?;
        }
        w.flush()
            .map_err(|e| Error::io(dir.join(FEATURES_FILE), e))?;

        let mut w = csv::Writer::from_path(dir.join(CATEGORIES_FILE))?;
        w.write_record(["category", "relative"])?;
        for cat in Category::ALL {
            let v = self
                .category_vi
                .map_or("NA".into(), |c| c.get(cat).to_string());
            w.write_record([cat.name(), &v])?;
        }
        w.flush()
            .map_err(|e| Error::io(dir.join(CATEGORIES_FILE), e))?;
        Ok(())
    }

    /// Reads back the tables written by [`EvaluationReport::write`].
    pub fn read(dir: &Path) -> Result<Self> {
        let rows = read_table(
            &dir.join(METRICS_FILE),
            &["metric", "value", "lower", "upper"],
        )?;
        let find = |key: &str| {
            rows.iter()
                .find(|r| r[0] == key)
                .ok_or_else(|| Error::Schema(format!("{METRICS_FILE}: missing metric {key}")))
        };
        let count = |key: &str| -> Result<u64> {
            find(key)?[1]
                .parse()
                .map_err(|_| Error::Schema(format!("{METRICS_FILE}: bad count for {key}")))
        };
        let confusion =
            ConfusionMatrix::new(count("tn")?, count("fp")?, count("fn")?, count("tp")?);
        let acc = find("accuracy")?;
        let accuracy = parse_f64(&acc[1])?;
        let ci95 = (parse_f64(&acc[2])?, parse_f64(&acc[3])?);
        let f1 = parse_opt(&find("f1")?[1])?;

        let rows = read_table(&dir.join(FEATURES_FILE), &["feature", "mda", "relative"])?;
        if rows.len() != FEATURE_COUNT || rows.iter().zip(FEATURE_NAMES).any(|(r, n)| r[0] != n) {
            return Err(Error::Schema(format!(
                "{FEATURES_FILE}: unexpected feature rows"
            )));
        }
        let per_feature_vi = rows
            .iter()
            .map(|r| parse_f64(&r[1]))
            .collect::<Result<Vec<_>>>()?;
        let relative = rows
            .iter()
            .map(|r| parse_opt(&r[2]))
            .collect::<Result<Vec<_>>>()?;
        let relative_vi = relative.into_iter().collect::<Option<Vec<_>>>();

        let rows = read_table(&dir.join(CATEGORIES_FILE), &["category", "relative"])?;
        if rows.len() != 3
            || rows
                .iter()
                .zip(Category::ALL)
                .any(|(r, c)| r[0] != c.name())
        {
            return Err(Error::Schema(format!(
                "{CATEGORIES_FILE}: unexpected category rows"
            )));
        }
        let cats = rows
            .iter()
            .map(|r| parse_opt(&r[1]))
            .collect::<Result<Vec<_>>>()?;
        let category_vi = match cats[..] {
            [Some(shape), Some(color), Some(texture)] => Some(CategoryVi {
                shape,
                color,
                texture,
            }),
            _ => None,
        };
        Ok(EvaluationReport {
            confusion,
            accuracy,
            ci95,
            f1,
            per_feature_vi,
            relative_vi,
            category_vi,
        })
    }
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut r = csv::Reader::from_path(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Schema(format!(
            "{}: header {found:?}, expected {header:?}",
            path.display()
        )));
    }
    r.records()
        .map(|rec| Ok(rec?.iter().map(str::to_string).collect()))
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Schema(format!("not a number: {s:?}")))
}

fn parse_opt(s: &str) -> Result<Option<f64>> {
    if s == "NA" {
        Ok(None)
    } else {
        parse_f64(s).map(Some)
    }
}
