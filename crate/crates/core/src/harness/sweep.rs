use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{child_seed, format_value, mean_std, train_classifier, LabeledDataset, TrainConfig, GENERATOR};
use crate::error::{Error, Result};

/// Training fractions of the reference classification table.
pub const TABLE_FRACTIONS: [f64; 4] = [0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// `round(p · n_c)` training items from every class `c`.
    Stratified,
    /// `round(p · n)` items drawn from the pooled dataset.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FractionResult {
    pub train_fraction: f64,
    pub mean: f64,
    pub std: f64,
    pub accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub results: Vec<FractionResult>,
    pub repeats: usize,
    pub seed: u64,
    pub split: SplitMode,
    pub generator: String,
}

impl ClassificationReport {
    pub fn means(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.mean).collect()
    }

    /// `train_fraction,mean,std` per row.
    pub fn to_csv(&self, precision: Option<usize>) -> String {
        let mut out = String::from("train_fraction,mean,std\n");
        for r in &self.results {
            out.push_str(&format!(
                "{},{},{}\n",
                r.train_fraction,
                format_value(r.mean, precision),
                format_value(r.std, precision)
            ));
        }
        out
    }
}

fn split(ds: &LabeledDataset, fraction: f64, mode: SplitMode, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let (mut train, mut test) = (Vec::new(), Vec::new());
    match mode {
        SplitMode::Stratified => {
            for label in ds.labels() {
                let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.items()[i].label == label).collect();
                idx.shuffle(rng);
                let k = (fraction * idx.len() as f64).round() as usize;
                train.extend_from_slice(&idx[..k]);
                test.extend_from_slice(&idx[k..]);
            }
        }
        SplitMode::Random => {
            let mut idx: Vec<usize> = (0..ds.len()).collect();
            idx.shuffle(rng);
            let k = (fraction * idx.len() as f64).round() as usize;
            train.extend_from_slice(&idx[..k]);
            test.extend_from_slice(&idx[k..]);
        }
    }
    (train, test)
}

fn check_fraction(ds: &LabeledDataset, fraction: f64, mode: SplitMode) -> Result<()> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::param("fractions", format!("training fraction {fraction} outside (0, 1)")));
    }
    let n = ds.len();
    let total_train = match mode {
        SplitMode::Stratified => {
            let mut total = 0;
            for label in ds.labels() {
                let count = ds.items().iter().filter(|it| it.label == label).count();
                let k = (fraction * count as f64).round() as usize;
                if k == 0 {
                    let name = ds.class_names().get(&label).cloned().unwrap_or_else(|| label.to_string());
                    return Err(Error::param(
                        "fractions",
                        format!("fraction {fraction} leaves class {name} ({count} items) without training data"),
                    ));
                }
                total += k;
            }
            total
        }
        SplitMode::Random => (fraction * n as f64).round() as usize,
    };
    if total_train < 2 || total_train >= n {
        return Err(Error::param(
            "fractions",
            format!("fraction {fraction} gives {total_train} training items out of {n}"),
        ));
    }
    Ok(())
}

/// Repeated random train/test splits at each training fraction. Repeat `r` at
/// fraction index `f` uses `child_seed(seed, f, r)` for the split and the
/// classifier.
pub fn classification_sweep(
    ds: &LabeledDataset,
    fractions: &[f64],
    repeats: usize,
    seed: u64,
    mode: SplitMode,
    train_cfg: &TrainConfig,
) -> Result<ClassificationReport> {
    if fractions.is_empty() {
        return Err(Error::param("fractions", "at least one training fraction is required"));
    }
    if repeats == 0 {
        return Err(Error::param("repeats", "at least one repeat is required"));
    }
    for &p in fractions {
        check_fraction(ds, p, mode)?;
    }
    let results = fractions
        .iter()
        .enumerate()
        .map(|(f, &p)| {
            let accuracies = (0..repeats)
                .into_par_iter()
                .map(|r| {
                    let s = child_seed(seed, f as u64, r as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    let (train_idx, test_idx) = split(ds, p, mode, &mut rng);
                    let train = ds.subset(&train_idx);
                    let test = ds.subset(&test_idx);
                    if train.labels().len() < 2 {
                        // an unstratified draw can miss all but one class
                        let label = train.labels()[0];
                        let hits = test.items().iter().filter(|it| it.label == label).count();
                        return Ok(hits as f64 / test.len() as f64);
                    }
                    let model = train_classifier(&train, &TrainConfig { seed: s, ..*train_cfg })?;
                    Ok(model.accuracy(&test))
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = mean_std(&accuracies);
            Ok(FractionResult {
                train_fraction: p,
                mean,
                std,
                accuracies,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClassificationReport {
        results,
        repeats,
        seed,
        split: mode,
        generator: GENERATOR.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::LabeledItem;
    use std::collections::BTreeMap;

    fn two_clusters(per_class: usize) -> LabeledDataset {
        let items = (0..2 * per_class)
            .map(|i| {
                let label = (i % 2) as u32 + 1;
                let base = if label == 1 { 0.0 } else { 10.0 };
                LabeledItem {
                    features: vec![base + (i / 2) as f64 * 0.01, base],
                    label,
                }
            })
            .collect();
        let names = BTreeMap::from([(1, "left".to_string()), (2, "right".to_string())]);
        LabeledDataset::new(items, names).unwrap()
    }

    #[test]
    fn trivially_separable() {
        let ds = two_clusters(8);
        let cfg = TrainConfig { epochs: 200, ..Default::default() };
        let r = classification_sweep(&ds, &[0.5], 1, 3, SplitMode::Stratified, &cfg).unwrap();
        assert_eq!(r.results[0].mean, 1.0);
        assert_eq!(r.results[0].std, 0.0);
    }

    #[test]
    fn stratified_split_sizes() {
        let ds = two_clusters(24);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (train, test) = split(&ds, 0.5, SplitMode::Stratified, &mut rng);
        assert_eq!((train.len(), test.len()), (24, 24));
        let ones = train.iter().filter(|&&i| ds.items()[i].label == 1).count();
        assert_eq!(ones, 12);
    }

    #[test]
    fn too_small_fraction_names_the_class() {
        let ds = two_clusters(3);
        let err = classification_sweep(&ds, &[0.1], 1, 0, SplitMode::Stratified, &TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("left"), "{err}");
        assert!(classification_sweep(&ds, &[1.0], 1, 0, SplitMode::Stratified, &TrainConfig::default()).is_err());
    }

    #[test]
    fn reproducible_and_order_independent() {
        let ds = two_clusters(10);
        let cfg = TrainConfig { epochs: 100, ..Default::default() };
        let a = classification_sweep(&ds, &[0.3, 0.5], 4, 9, SplitMode::Random, &cfg).unwrap();
        let b = classification_sweep(&ds, &[0.3, 0.5], 4, 9, SplitMode::Random, &cfg).unwrap();
        assert_eq!(a, b);
        let csv = a.to_csv(Some(4));
        assert!(csv.starts_with("train_fraction,mean,std\n0.3,"));
    }
}
