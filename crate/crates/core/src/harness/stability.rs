use rayon::prelude::*;
use serde::Serialize;

use super::{child_seed, format_value, mean_std};
use crate::dpss::DpssBasis;
use crate::error::{Error, Result};
use crate::imaging::{add_gaussian_noise, rotate_image, NoiseSpec, RasterImage, NOISE_GENERATOR};
use crate::moments::image_invariants;

/// The eight orientations of the reference rotation table, in degrees.
pub const TABLE_ANGLES: [f64; 8] = [0.0, 35.0, 90.0, 140.0, 180.0, 230.0, 270.0, 325.0];

/// The ten `(m, n)` columns of the reference rotation table.
pub const TABLE_ORDERS: [(usize, usize); 10] = [
    (1, 1),
    (1, 2),
    (2, 1),
    (2, 2),
    (2, 3),
    (3, 2),
    (3, 4),
    (4, 1),
    (4, 3),
    (4, 5),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityMetadata {
    pub grid: (usize, usize),
    pub basis_id: String,
    pub snr_db: Option<f64>,
    pub seed: Option<u64>,
    pub generator: Option<String>,
}

/// One row of `Φ_mn` per rotation angle plus per-column population mean and
/// standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub angles: Vec<f64>,
    pub columns: Vec<(usize, usize)>,
    pub values: Vec<Vec<f64>>,
    pub std_row: Vec<f64>,
    pub mean_row: Vec<f64>,
    pub metadata: StabilityMetadata,
}

impl StabilityReport {
    /// `std / mean` per column.
    pub fn relative_std(&self) -> Vec<f64> {
        self.std_row
            .iter()
            .zip(&self.mean_row)
            .map(|(s, m)| s / m)
            .collect()
    }

    /// Table layout: header, one row per angle, then the `std` row.
    pub fn to_csv(&self, precision: Option<usize>) -> String {
        let mut out = String::from("angle");
        for (m, n) in &self.columns {
            out.push_str(&format!(",phi_{m}_{n}"));
        }
        out.push('\n');
        let mut row = |label: String, values: &[f64]| {
            out.push_str(&label);
            for v in values {
                out.push(',');
                out.push_str(&format_value(*v, precision));
            }
            out.push('\n');
        };
        for (angle, values) in self.angles.iter().zip(&self.values) {
            row(angle.to_string(), values);
        }
        row("std".into(), &self.std_row);
        out
    }
}

/// Rotates `image` to every angle, optionally adds noise, and tabulates the
/// selected invariants. Row `a` draws its noise from `child_seed(seed, a, 0)`.
pub fn rotation_stability(
    image: &RasterImage,
    angles: &[f64],
    orders: &[(usize, usize)],
    basis: &DpssBasis,
    grid: (usize, usize),
    noise: Option<NoiseSpec>,
) -> Result<StabilityReport> {
    if angles.is_empty() {
        return Err(Error::param("angles", "at least one angle is required"));
    }
    if orders.is_empty() {
        return Err(Error::param("orders", "at least one (m, n) column is required"));
    }
    let max_radial = orders.iter().map(|o| o.0).max().unwrap_or(0) + 1;
    let max_angular = orders.iter().map(|o| o.1).max().unwrap_or(0);

    let values = angles
        .par_iter()
        .enumerate()
        .map(|(a, &angle)| {
            let mut rotated = rotate_image(image, angle);
            if let Some(spec) = noise {
                let row_spec = NoiseSpec::new(spec.snr_db, child_seed(spec.seed, a as u64, 0))?;
                rotated = add_gaussian_noise(&rotated, &row_spec)?;
            }
            let phi = image_invariants(&rotated, basis, max_radial, max_angular, grid)?;
            Ok(orders.iter().map(|&(m, n)| phi.get(m, n)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;

    let (mean_row, std_row): (Vec<f64>, Vec<f64>) = (0..orders.len())
        .map(|c| mean_std(&values.iter().map(|row| row[c]).collect::<Vec<_>>()))
        .unzip();

    Ok(StabilityReport {
        angles: angles.to_vec(),
        columns: orders.to_vec(),
        values,
        std_row,
        mean_row,
        metadata: StabilityMetadata {
            grid,
            basis_id: basis.id(),
            snr_db: noise.map(|n| n.snr_db),
            seed: noise.map(|n| n.seed),
            generator: noise.map(|_| NOISE_GENERATOR.to_string()),
        },
    })
}
