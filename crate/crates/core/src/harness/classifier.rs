//! One-vs-rest linear max-margin classifier.
//!
//! Each class gets a weight vector trained on the regularized hinge loss
//! `λ/2 ‖w‖² + mean_i max(0, 1 − y_i ⟨w, x_i⟩)` by Pegasos-style subgradient
//! steps with step size `1/(λt)` and projection onto the ball of radius
//! `1/√λ`. Features are standardized with training statistics and a constant
//! feature carries the bias.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::LabeledDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    /// Regularization strength `λ > 0`.
    pub reg: f64,
    /// Number of passes over the training set.
    pub epochs: usize,
    /// Examples per subgradient step; `None` uses the whole training set, one
    /// step per epoch.
    pub batch: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            reg: 1e-3,
            epochs: 2000,
            batch: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    classes: Vec<u32>,
    /// One row per class; the last entry is the bias weight.
    weights: Vec<Vec<f64>>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl LinearModel {
    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .chain(std::iter::once(1.0))
            .collect()
    }

    /// Decision value of every class, in the order of [`Self::classes`].
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let z = self.standardize(x);
        self.weights.iter().map(|w| dot(w, &z)).collect()
    }

    /// Highest-scoring class; ties go to the lowest label.
    pub fn predict(&self, x: &[f64]) -> u32 {
        let scores = self.scores(x);
        let mut best = 0;
        for (c, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = c;
            }
        }
        self.classes[best]
    }

    pub fn accuracy(&self, data: &LabeledDataset) -> f64 {
        let correct = data
            .items()
            .iter()
            .filter(|it| self.predict(&it.features) == it.label)
            .count();
        correct as f64 / data.items().len() as f64
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn train_classifier(train: &LabeledDataset, cfg: &TrainConfig) -> Result<LinearModel> {
    if !(cfg.reg > 0.0 && cfg.reg.is_finite()) {
        return Err(Error::param("reg", format!("regularization must be positive, got {}", cfg.reg)));
    }
    if cfg.epochs == 0 {
        return Err(Error::param("epochs", "at least one epoch is required"));
    }
    let classes = train.labels();
    if classes.len() < 2 {
        return Err(Error::param("labels", "training set needs at least two classes"));
    }
    let items = train.items();
    let n = items.len();
    let dim = train.dim();

    let mut mean = vec![0.0; dim];
    for it in items {
        mean.iter_mut().zip(&it.features).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut scale = vec![0.0; dim];
    for it in items {
        scale
            .iter_mut()
            .zip(it.features.iter().zip(&mean))
            .for_each(|(s, (v, m))| *s += (v - m) * (v - m));
    }
    scale.iter_mut().for_each(|s| {
        let sd = (*s / n as f64).sqrt();
        *s = if sd > 1e-12 { sd } else { 1.0 };
    });

    let mut model = LinearModel {
        classes: classes.clone(),
        weights: Vec::new(),
        mean,
        scale,
    };
    let xs: Vec<Vec<f64>> = items.iter().map(|it| model.standardize(&it.features)).collect();

    let batch = cfg.batch.unwrap_or(n).clamp(1, n);
    let steps_per_epoch = n.div_ceil(batch);
    let radius = 1.0 / cfg.reg.sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut weights = vec![vec![0.0; dim + 1]; classes.len()];
    let mut grad = vec![0.0; dim + 1];
    let mut t = 0usize;
    for _ in 0..cfg.epochs {
        for _ in 0..steps_per_epoch {
            t += 1;
            let eta = 1.0 / (cfg.reg * t as f64);
            let picks: Vec<usize> = if batch == n {
                (0..n).collect()
            } else {
                sample(&mut rng, n, batch).into_vec()
            };
            for (c, w) in weights.iter_mut().enumerate() {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for &i in &picks {
                    let y = if items[i].label == classes[c] { 1.0 } else { -1.0 };
                    if y * dot(w, &xs[i]) < 1.0 {
                        grad.iter_mut().zip(&xs[i]).for_each(|(g, x)| *g += y * x);
                    }
                }
                let k = picks.len() as f64;
                let shrink = 1.0 - eta * cfg.reg;
                w.iter_mut()
                    .zip(&grad)
                    .for_each(|(wi, g)| *wi = shrink * *wi + eta * g / k);
                let norm = dot(w, w).sqrt();
                if norm > radius {
                    w.iter_mut().for_each(|wi| *wi *= radius / norm);
                }
            }
        }
    }
    model.weights = weights;
    Ok(model)
}
