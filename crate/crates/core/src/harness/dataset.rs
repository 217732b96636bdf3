use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::child_seed;
use crate::dpss::DpssBasis;
use crate::error::{Error, Result};
use crate::imaging::{add_gaussian_noise, read_pgm, NoiseSpec, RasterImage};
use crate::moments::feature_vector;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem {
    pub features: Vec<f64>,
    pub label: u32,
}

/// Feature vectors with small integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    items: Vec<LabeledItem>,
    class_names: BTreeMap<u32, String>,
}

impl LabeledDataset {
    /// Requires a common feature length and at least two distinct labels.
    pub fn new(items: Vec<LabeledItem>, class_names: BTreeMap<u32, String>) -> Result<Self> {
        let ds = Self { items, class_names };
        if ds.items.is_empty() {
            return Err(Error::param("items", "dataset is empty"));
        }
        let dim = ds.items[0].features.len();
        if let Some(i) = ds.items.iter().position(|it| it.features.len() != dim) {
            return Err(Error::param(
                "items",
                format!("item {i} has {} features, expected {dim}", ds.items[i].features.len()),
            ));
        }
        if ds.labels().len() < 2 {
            return Err(Error::param("labels", "dataset needs at least two distinct labels"));
        }
        Ok(ds)
    }

    /// Skips validation, so tests can build single-class sets.
    #[cfg(test)]
    pub(crate) fn new_unchecked(items: Vec<LabeledItem>) -> Self {
        Self {
            items,
            class_names: BTreeMap::new(),
        }
    }

    pub fn items(&self) -> &[LabeledItem] {
        &self.items
    }

    pub fn class_names(&self) -> &BTreeMap<u32, String> {
        &self.class_names
    }

    pub fn dim(&self) -> usize {
        self.items.first().map_or(0, |it| it.features.len())
    }

    /// Distinct labels in ascending order.
    pub fn labels(&self) -> Vec<u32> {
        self.items
            .iter()
            .map(|it| it.label)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub(crate) fn subset(&self, indices: &[usize]) -> Self {
        Self {
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
            class_names: self.class_names.clone(),
        }
    }
}

/// A harmonic component `a · exp(−(r − r0)²/2s²) · cos(n(θ − α) + φ)`.
#[derive(Debug, Clone, Copy)]
struct Harmonic {
    order: u32,
    center: f64,
    width: f64,
    amplitude: f64,
    phase: f64,
}

fn render(size: usize, background: f64, parts: &[Harmonic], rotation: f64) -> RasterImage {
    let c = (size as f64 - 1.0) / 2.0;
    let rho = size as f64 / 2.0 - 0.5;
    RasterImage::from_fn(size, size, |x, y| {
        let dx = (x as f64 - c) / rho;
        let dy = (c - y as f64) / rho;
        let r = dx.hypot(dy);
        let theta = dy.atan2(dx);
        background
            + parts
                .iter()
                .map(|h| {
                    let z = (r - h.center) / h.width;
                    h.amplitude
                        * (-0.5 * z * z).exp()
                        * (h.order as f64 * (theta - rotation) + h.phase).cos()
                })
                .sum::<f64>()
    })
    .expect("rendered pixels are clamped into [0, 1]")
}

/// Deterministic smooth test image with energy in angular orders 0..=5
/// spread over several radii.
pub fn smooth_test_image(size: usize) -> RasterImage {
    let parts = [
        Harmonic { order: 0, center: 0.45, width: 0.22, amplitude: 0.18, phase: 0.0 },
        Harmonic { order: 1, center: 0.30, width: 0.16, amplitude: 0.12, phase: 0.4 },
        Harmonic { order: 1, center: 0.70, width: 0.14, amplitude: 0.08, phase: 2.1 },
        Harmonic { order: 2, center: 0.55, width: 0.18, amplitude: 0.10, phase: 1.3 },
        Harmonic { order: 3, center: 0.40, width: 0.15, amplitude: 0.09, phase: -0.7 },
        Harmonic { order: 3, center: 0.75, width: 0.12, amplitude: 0.06, phase: 0.9 },
        Harmonic { order: 4, center: 0.62, width: 0.16, amplitude: 0.08, phase: 2.6 },
        Harmonic { order: 5, center: 0.50, width: 0.20, amplitude: 0.07, phase: -1.8 },
    ];
    render(size, 0.4, &parts, 0.0)
}

/// Parameters of the synthetic shape-class generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_classes: usize,
    pub per_class: usize,
    /// Randomly rotated renderings of each item.
    pub rotations_per_item: usize,
    pub image_size: usize,
    /// Relative amplitude jitter of each component, per item.
    pub jitter: f64,
    /// Noise added to every rendering; `None` for clean images.
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_classes: 6,
            per_class: 8,
            rotations_per_item: 1,
            image_size: 64,
            jitter: 0.2,
            snr_db: Some(30.0),
            seed: 0,
        }
    }
}

/// Class prototype: a class-specific leading angular order plus two random
/// components, drawn from `child_seed(seed, class, 0)`.
fn class_prototype(seed: u64, class: usize) -> Vec<Harmonic> {
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, class as u64, 0));
    let mut parts = vec![Harmonic {
        order: (class % 9) as u32 + 1,
        center: rng.random_range(0.35..0.65),
        width: rng.random_range(0.12..0.2),
        amplitude: 0.15,
        phase: 0.0,
    }];
    for _ in 0..2 {
        parts.push(Harmonic {
            order: rng.random_range(0..=6),
            center: rng.random_range(0.25..0.75),
            width: rng.random_range(0.1..0.2),
            amplitude: rng.random_range(0.04..0.09),
            phase: rng.random_range(0.0..2.0 * PI),
        });
    }
    parts
}

/// Rendered synthetic images with labels `1..=n_classes`. Item `i` of class
/// `c` uses `child_seed(seed, c, i + 1)`.
pub fn synthetic_images(cfg: &SyntheticConfig) -> Result<Vec<(RasterImage, u32)>> {
    if cfg.n_classes < 2 {
        return Err(Error::param("classes", "at least two classes are required"));
    }
    if cfg.per_class == 0 || cfg.rotations_per_item == 0 {
        return Err(Error::param("per-class", "item and rotation counts must be positive"));
    }
    if cfg.image_size < 8 {
        return Err(Error::param("size", "synthetic images need at least 8 pixels per side"));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.n_classes)
        .flat_map(|c| (0..cfg.per_class).map(move |i| (c, i)))
        .collect();
    let rendered = jobs
        .par_iter()
        .map(|&(class, item)| {
            let proto = class_prototype(cfg.seed, class);
            let mut rng = ChaCha8Rng::seed_from_u64(child_seed(cfg.seed, class as u64, item as u64 + 1));
            let parts: Vec<Harmonic> = proto
                .iter()
                .map(|h| Harmonic {
                    amplitude: h.amplitude * (1.0 + cfg.jitter * rng.random_range(-1.0..1.0)),
                    ..*h
                })
                .collect();
            let mut out = Vec::with_capacity(cfg.rotations_per_item);
            for _ in 0..cfg.rotations_per_item {
                let rotation = rng.random_range(0.0..2.0 * PI);
                let mut img = render(cfg.image_size, 0.45, &parts, rotation);
                if let Some(snr_db) = cfg.snr_db {
                    let spec = NoiseSpec::new(snr_db, rng.random())?;
                    img = add_gaussian_noise(&img, &spec)?;
                }
                out.push((img, class as u32 + 1));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rendered.into_iter().flatten().collect())
}

fn featurize(
    images: Vec<(RasterImage, u32)>,
    class_names: BTreeMap<u32, String>,
    basis: &DpssBasis,
    grid: (usize, usize),
) -> Result<LabeledDataset> {
    let items = images
        .par_iter()
        .map(|(img, label)| {
            Ok(LabeledItem {
                features: feature_vector(img, basis, grid)?.entries().to_vec(),
                label: *label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(items, class_names)
}

/// Synthetic images turned into 100-entry invariant feature vectors.
pub fn make_synthetic_dataset(
    cfg: &SyntheticConfig,
    basis: &DpssBasis,
    grid: (usize, usize),
) -> Result<LabeledDataset> {
    let names = (1..=cfg.n_classes as u32)
        .map(|l| (l, format!("class{l}")))
        .collect();
    featurize(synthetic_images(cfg)?, names, basis, grid)
}

/// Reads `<root>/<class_name>/<image>.pgm`. Class directories are labelled
/// `1, 2, …` in lexicographic order.
pub fn load_dataset_dir(root: &Path, basis: &DpssBasis, grid: (usize, usize)) -> Result<LabeledDataset> {
    let mut class_dirs: Vec<_> = std::fs::read_dir(root)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    class_dirs.sort();
    let mut images = Vec::new();
    let mut names = BTreeMap::new();
    for (idx, dir) in class_dirs.iter().enumerate() {
        let label = idx as u32 + 1;
        names.insert(label, dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        let mut files: Vec<_> = std::fs::read_dir(dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
            .collect();
        files.sort();
        for f in files {
            let bytes = std::fs::read(&f)?;
            let img = read_pgm(&bytes).map_err(|e| Error::Domain(format!("{}: {e}", f.display())))?;
            images.push((img, label));
        }
    }
    featurize(images, names, basis, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_validation() {
        let item = |f: Vec<f64>, label| LabeledItem { features: f, label };
        assert!(LabeledDataset::new(vec![], BTreeMap::new()).is_err());
        assert!(LabeledDataset::new(vec![item(vec![1.0], 1), item(vec![2.0], 1)], BTreeMap::new()).is_err());
        assert!(LabeledDataset::new(vec![item(vec![1.0], 1), item(vec![2.0, 0.0], 2)], BTreeMap::new()).is_err());
        let ds = LabeledDataset::new(vec![item(vec![1.0], 3), item(vec![2.0], 1)], BTreeMap::new()).unwrap();
        assert_eq!(ds.labels(), vec![1, 3]);
    }

    #[test]
    fn image_counts_and_determinism() {
        let cfg = SyntheticConfig { image_size: 24, ..Default::default() };
        let a = synthetic_images(&cfg).unwrap();
        assert_eq!(a.len(), 48);
        assert_eq!(a.iter().filter(|(_, l)| *l == 6).count(), 8);
        let clean = SyntheticConfig { snr_db: None, ..cfg.clone() };
        assert_eq!(synthetic_images(&clean).unwrap(), synthetic_images(&clean).unwrap());
        let rot = SyntheticConfig { rotations_per_item: 3, n_classes: 2, ..cfg };
        assert_eq!(synthetic_images(&rot).unwrap().len(), 48);
    }

    #[test]
    fn rejects_single_class() {
        let cfg = SyntheticConfig { n_classes: 1, ..Default::default() };
        assert!(synthetic_images(&cfg).is_err());
    }

    #[test]
    fn test_image_is_smooth_and_in_range() {
        let img = smooth_test_image(64);
        let px = img.pixels();
        assert!(px.iter().all(|p| (0.0..=1.0).contains(p)));
        let max_step = (0..63)
            .flat_map(|y| (0..63).map(move |x| (x, y)))
            .map(|(x, y)| (img.get(x + 1, y) - img.get(x, y)).abs().max((img.get(x, y + 1) - img.get(x, y)).abs()))
            .fold(0.0, f64::max);
        assert!(max_step < 0.1, "{max_step}");
    }
}
