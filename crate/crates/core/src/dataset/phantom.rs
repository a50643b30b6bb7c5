//! Seeded synthetic cell images with known masks and labels.
//!
//! Each image holds one cell near the center. Cell pixels are blue-dominant,
//! tissue backgrounds are warm off-white with occasional red cells, and the
//! black style is exactly zero outside the cell.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{save_image, save_mask, DatasetManifest, ManifestEntry, Source};
use crate::error::{Error, Result};
use crate::forest::{derive_seed, Label};
use crate::raster::{BinaryMask, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Background {
    Tissue,
    Black,
    /// Tissue for even indices, black for odd ones.
    Alternate,
}

/// Generation parameters. Read from a small `key = value` file; every key is
/// optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub per_class: usize,
    pub size: usize,
    pub seed: u64,
    pub background: Background,
    pub healthy: String,
    pub malignant: String,
    /// Upper bound on red cells scattered over tissue backgrounds.
    pub red_cells: usize,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            per_class: 40,
            size: 256,
            seed: 7,
            background: Background::Alternate,
            healthy: "round-dark".into(),
            malignant: "irregular-light".into(),
            red_cells: 2,
        }
    }
}

impl PhantomSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(format!("phantom spec: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("phantom spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 192 {
            return Err(Error::InvalidParameter(format!(
                "phantom size {} is below 192",
                self.size
            )));
        }
        if self.per_class == 0 {
            return Err(Error::InvalidParameter("per_class must be positive".into()));
        }
        Recipe::preset(&self.healthy)?;
        Recipe::preset(&self.malignant)?;
        Ok(())
    }

    pub fn recipe(&self, label: Label) -> Result<Recipe> {
        Recipe::preset(match label {
            Label::Healthy => &self.healthy,
            Label::Malignant => &self.malignant,
        })
    }
}

/// Appearance of one class. Radii are fractions of the image size so the
/// presets scale with it.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub name: &'static str,
    pub color: [f64; 3],
    pub color_jitter: f64,
    pub radius: (f64, f64),
    /// Upper bound of each boundary harmonic's relative amplitude.
    pub irregularity: f64,
    pub elongation: (f64, f64),
    pub noise_sd: f64,
    /// Fraction of cell pixels darkened into chromatin-like specks.
    pub speckle: f64,
}

const DARK: [f64; 3] = [95.0, 45.0, 150.0];
const LIGHT: [f64; 3] = [165.0, 120.0, 205.0];

impl Recipe {
    pub const PRESETS: [&'static str; 4] = [
        "round-dark",
        "irregular-light",
        "round-light",
        "irregular-dark",
    ];

    pub fn preset(name: &str) -> Result<Recipe> {
        let round = Recipe {
            name: "round-dark",
            color: DARK,
            color_jitter: 6.0,
            radius: (0.258, 0.297),
            irregularity: 0.01,
            elongation: (1.0, 1.08),
            noise_sd: 4.0,
            speckle: 0.0,
        };
        let irregular = Recipe {
            name: "irregular-light",
            color: LIGHT,
            color_jitter: 6.0,
            radius: (0.266, 0.312),
            irregularity: 0.06,
            elongation: (1.0, 1.2),
            noise_sd: 14.0,
            speckle: 0.03,
        };
        Ok(match name {
            "round-dark" => round,
            "irregular-light" => irregular,
            "round-light" => Recipe {
                name: "round-light",
                color: LIGHT,
                ..round
            },
            "irregular-dark" => Recipe {
                name: "irregular-dark",
                color: DARK,
                ..irregular
            },
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unknown recipe {name:?}; expected one of {:?}",
                    Recipe::PRESETS
                )))
            }
        })
    }
}

struct CellShape {
    center: (f64, f64),
    radius: f64,
    harmonics: Vec<(f64, f64, f64)>,
    stretch: f64,
    angle: f64,
}

impl CellShape {
    fn sample(rng: &mut ChaCha8Rng, recipe: &Recipe, size: usize) -> Self {
        let s = size as f64;
        let mid = (s - 1.0) / 2.0;
        let jitter = 0.02 * s;
        CellShape {
            center: (
                mid + rng.random_range(-jitter..=jitter),
                mid + rng.random_range(-jitter..=jitter),
            ),
            radius: s * rng.random_range(recipe.radius.0..=recipe.radius.1),
            harmonics: (3..=5)
                .map(|k| {
                    (
                        k as f64,
                        rng.random_range(0.0..=recipe.irregularity),
                        rng.random_range(0.0..2.0 * PI),
                    )
                })
                .collect(),
            stretch: rng
                .random_range(recipe.elongation.0..=recipe.elongation.1)
                .sqrt(),
            angle: rng.random_range(0.0..PI),
        }
    }

    fn contains(&self, r: f64, c: f64) -> bool {
        let (dy, dx) = (r - self.center.0, c - self.center.1);
        let (sin, cos) = self.angle.sin_cos();
        let u = (dx * cos + dy * sin) / self.stretch;
        let v = (-dx * sin + dy * cos) * self.stretch;
        let th = v.atan2(u);
        let rho = self.radius
            * (1.0
                + self
                    .harmonics
                    .iter()
                    .map(|&(k, a, p)| a * (k * th + p).cos())
                    .sum::<f64>());
        u.hypot(v) <= rho
    }

    fn extent(&self) -> f64 {
        self.radius * (1.0 + self.harmonics.iter().map(|h| h.1).sum::<f64>()) * self.stretch
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("finite standard deviation")
}

/// Renders image `index` of class `label`. The result depends only on the
/// spec and those two values.
pub fn render_phantom(
    spec: &PhantomSpec,
    label: Label,
    index: usize,
) -> Result<(RasterImage, BinaryMask)> {
    spec.validate()?;
    let recipe = spec.recipe(label)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        spec.seed,
        &[label.index() as u64, index as u64],
    ));
    let n = spec.size;
    let shape = CellShape::sample(&mut rng, &recipe, n);
    let mask = BinaryMask::from_fn(n, n, |r, c| shape.contains(r as f64, c as f64));
    let tissue = match spec.background {
        Background::Tissue => true,
        Background::Black => false,
        Background::Alternate => index.is_multiple_of(2),
    };

    let jitter = normal(recipe.color_jitter);
    let base: Vec<f64> = recipe
        .color
        .iter()
        .map(|&v| v + jitter.sample(&mut rng))
        .collect();
    let mut planes = vec![vec![0.0; n * n]; 3];

    if tissue {
        let backdrop = [236.0, 220.0, 212.0];
        let pink = [222.0, 150.0, 165.0];
        let mut red_cells = Vec::new();
        let wanted = rng.random_range(0..=spec.red_cells);
        for _ in 0..50 {
            if red_cells.len() == wanted {
                break;
            }
            let rad = n as f64 * rng.random_range(0.07..0.1);
            let (r, c) = (
                rng.random_range(0.0..n as f64),
                rng.random_range(0.0..n as f64),
            );
            let clear = (r - shape.center.0).hypot(c - shape.center.1) > shape.extent() + rad + 8.0;
            if clear {
                red_cells.push((r, c, rad));
            }
        }
        let common = normal(3.0);
        let own = normal(1.5);
        for i in 0..n * n {
            let (r, c) = ((i / n) as f64, (i % n) as f64);
            let in_red = red_cells
                .iter()
                .any(|&(rr, rc, rad)| (r - rr).hypot(c - rc) <= rad);
            let tone = if in_red { pink } else { backdrop };
            let g = common.sample(&mut rng);
            let px: Vec<f64> = tone
                .iter()
                .map(|&t| (t + g + own.sample(&mut rng)).clamp(0.0, 255.0))
                .collect();
            // Keep the background warm so it never reads as stain.
            planes[0][i] = px[0].round();
            planes[1][i] = px[1].round();
            planes[2][i] = px[2].min(px[0] - 8.0).round();
        }
    }

    let noise = normal(recipe.noise_sd);
    for (i, inside) in mask.data().iter().enumerate() {
        if !*inside {
            continue;
        }
        let dark = rng.random_bool(recipe.speckle);
        let f = if dark { 0.7 } else { 1.0 };
        let g = noise.sample(&mut rng);
        let px: Vec<f64> = base
            .iter()
            .map(|&b| (b * f + g).round().clamp(1.0, 255.0))
            .collect();
        // Blue stays the dominant channel inside the cell.
        planes[0][i] = px[0];
        planes[1][i] = px[1];
        planes[2][i] = px[2].max(px[0]).max(px[1]);
    }

    let img = RasterImage::new(n, n, crate::raster::ColorSpace::Rgb, planes)?;
    Ok((img, mask))
}

/// Writes `images/`, `masks/`, `manifest.csv` and `phantom.toml` under
/// `out_dir` and returns the manifest.
pub fn generate_phantoms(spec: &PhantomSpec, out_dir: &Path) -> Result<DatasetManifest> {
    spec.validate()?;
    for sub in ["images", "masks"] {
        let d = out_dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let mut entries = Vec::new();
    for label in [Label::Healthy, Label::Malignant] {
        for i in 0..spec.per_class {
            let (img, mask) = render_phantom(spec, label, i)?;
            let name = format!("{}_{i:03}.png", label.as_str());
            let rel = Path::new("images").join(&name);
            save_image(&img, &out_dir.join(&rel))?;
            save_mask(&mask, &out_dir.join("masks").join(&name))?;
            entries.push(ManifestEntry {
                path: rel,
                label,
                source: Source::Phantom,
            });
        }
    }
    let manifest = DatasetManifest::new(out_dir, entries)?;
    manifest.save(&out_dir.join("manifest.csv"))?;
    let spec_path = out_dir.join("phantom.toml");
    fs::write(&spec_path, spec.to_toml()).map_err(|e| Error::io(&spec_path, e))?;
    Ok(manifest)
}

/// Path of the ground-truth mask written next to a phantom image.
pub fn mask_path(root: &Path, image: &Path) -> std::path::PathBuf {
    root.join("masks")
        .join(image.file_name().unwrap_or_default())
}
