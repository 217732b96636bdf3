//! Grayscale rasters, their polar resampling over the inscribed unit disk,
//! rotation and Gaussian noise.
//!
//! Angles follow the on-screen convention: `θ` and rotation angles are
//! counter-clockwise with the `y` axis pointing up, while raster rows run
//! top to bottom. Reads outside the raster return 0.

mod pgm;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

pub use pgm::{read_pgm, write_pgm, write_pgm16};

/// Name of the random generator behind [`add_gaussian_noise`], recorded in
/// experiment metadata.
pub const NOISE_GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9) + Normal (rand_distr 0.5)";

#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl RasterImage {
    /// Row-major pixels, each finite and in `[0, 1]`.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::param("size", "image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::param(
                "pixels",
                format!("expected {} pixels, got {}", width * height, pixels.len()),
            ));
        }
        if let Some(i) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Domain(format!(
                "pixel {i} has intensity {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Evaluates `f(x, y)` at every pixel (column `x`, row `y`), clamping the
    /// result into `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| {
                let v = f(x, y);
                if v.is_nan() {
                    0.0
                } else {
                    v.clamp(0.0, 1.0)
                }
            })
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    fn center(&self) -> (f64, f64) {
        (
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }

    /// Radius in pixels of the disk that is mapped onto the unit disk.
    pub fn disk_radius(&self) -> f64 {
        self.width.min(self.height) as f64 / 2.0 - 0.5
    }

    /// Bilinear read at fractional coordinates; neighbours outside the raster
    /// contribute 0.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        if !(x > -1.0 && y > -1.0 && x < self.width as f64 && y < self.height as f64) {
            return 0.0;
        }
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as isize, y0 as isize);
        let px = |xi: isize, yi: isize| -> f64 {
            if xi < 0 || yi < 0 || xi >= self.width as isize || yi >= self.height as isize {
                0.0
            } else {
                self.pixels[yi as usize * self.width + xi as usize]
            }
        };
        (1.0 - fy) * ((1.0 - fx) * px(x0, y0) + fx * px(x0 + 1, y0))
            + fy * ((1.0 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1))
    }

    pub fn mean_square(&self) -> f64 {
        self.pixels.iter().map(|p| p * p).sum::<f64>() / self.pixels.len() as f64
    }
}

/// Samples of `f(r, θ)` on the uniform grid `r_i = (i + 0.5)/R`,
/// `θ_j = 2πj/T`, stored row-major with one row per radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarImage {
    n_radial: usize,
    n_angular: usize,
    samples: Vec<Complex64>,
}

impl PolarImage {
    pub fn new(n_radial: usize, n_angular: usize, samples: Vec<Complex64>) -> Result<Self> {
        check_grid(n_radial, n_angular)?;
        if samples.len() != n_radial * n_angular {
            return Err(Error::param(
                "samples",
                format!(
                    "expected {} samples, got {}",
                    n_radial * n_angular,
                    samples.len()
                ),
            ));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::Domain("polar samples must be finite".into()));
        }
        Ok(Self {
            n_radial,
            n_angular,
            samples,
        })
    }

    pub fn from_real(n_radial: usize, n_angular: usize, samples: &[f64]) -> Result<Self> {
        Self::new(
            n_radial,
            n_angular,
            samples.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Evaluates `f(r, θ)` on the grid.
    pub fn from_fn(
        n_radial: usize,
        n_angular: usize,
        f: impl Fn(f64, f64) -> Complex64,
    ) -> Result<Self> {
        check_grid(n_radial, n_angular)?;
        let radii = radial_grid(n_radial);
        let angles = angular_grid(n_angular);
        let samples = radii
            .iter()
            .flat_map(|&r| angles.iter().map(move |&t| (r, t)))
            .map(|(r, t)| f(r, t))
            .collect();
        Self::new(n_radial, n_angular, samples)
    }

    pub fn n_radial(&self) -> usize {
        self.n_radial
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn ring(&self, i: usize) -> &[Complex64] {
        &self.samples[i * self.n_angular..(i + 1) * self.n_angular]
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.samples[i * self.n_angular + j]
    }

    pub fn radii(&self) -> Vec<f64> {
        radial_grid(self.n_radial)
    }

    pub fn angles(&self) -> Vec<f64> {
        angular_grid(self.n_angular)
    }

    /// Rotates every ring by `shift` samples: `out(i, j) = in(i, j + shift)`.
    pub fn cyclic_shift(&self, shift: usize) -> Self {
        let t = self.n_angular;
        let samples = (0..self.n_radial)
            .flat_map(|i| (0..t).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, (j + shift) % t))
            .collect();
        Self {
            samples,
            ..self.clone()
        }
    }
}

fn check_grid(n_radial: usize, n_angular: usize) -> Result<()> {
    if n_radial == 0 {
        return Err(Error::param("radial", "radial sample count must be positive"));
    }
    if n_angular == 0 {
        return Err(Error::param("angular", "angular sample count must be positive"));
    }
    Ok(())
}

/// Midpoint radii `(i + 0.5)/R`.
pub fn radial_grid(n_radial: usize) -> Vec<f64> {
    (0..n_radial)
        .map(|i| (i as f64 + 0.5) / n_radial as f64)
        .collect()
}

pub fn angular_grid(n_angular: usize) -> Vec<f64> {
    (0..n_angular)
        .map(|j| 2.0 * PI * j as f64 / n_angular as f64)
        .collect()
}

/// `(sin, cos)` of an angle in degrees, exact at multiples of 90°.
fn sin_cos_deg(angle_deg: f64) -> (f64, f64) {
    let quarter = angle_deg / 90.0;
    if quarter == quarter.round() {
        match (quarter.round() as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        angle_deg.to_radians().sin_cos()
    }
}

/// Rotates counter-clockwise by `angle_deg` about the pixel-grid center,
/// keeping the original size. Each output pixel is a bilinear read at the
/// inverse-rotated source position.
pub fn rotate_image(image: &RasterImage, angle_deg: f64) -> RasterImage {
    let (sin, cos) = sin_cos_deg(angle_deg);
    let (cx, cy) = image.center();
    let mut pixels = Vec::with_capacity(image.pixels.len());
    for y in 0..image.height {
        let dy = cy - y as f64;
        for x in 0..image.width {
            let dx = x as f64 - cx;
            let sx = cos * dx + sin * dy;
            let sy = -sin * dx + cos * dy;
            let v = image.sample(cx + sx, cy - sy);
            pixels.push(v.clamp(0.0, 1.0));
        }
    }
    RasterImage {
        width: image.width,
        height: image.height,
        pixels,
    }
}

/// Resamples the inscribed disk onto an `R × T` polar grid.
pub fn to_polar(image: &RasterImage, n_radial: usize, n_angular: usize) -> Result<PolarImage> {
    check_grid(n_radial, n_angular)?;
    let (cx, cy) = image.center();
    let rho = image.disk_radius();
    let trig: Vec<(f64, f64)> = angular_grid(n_angular).iter().map(|t| t.sin_cos()).collect();
    let mut samples = Vec::with_capacity(n_radial * n_angular);
    for r in radial_grid(n_radial) {
        for &(sin, cos) in &trig {
            let v = image.sample(cx + r * rho * cos, cy - r * rho * sin);
            samples.push(Complex64::new(v, 0.0));
        }
    }
    Ok(PolarImage {
        n_radial,
        n_angular,
        samples,
    })
}

/// Renders the real part of a polar image back onto a `size × size` raster,
/// bilinear in `(r, θ)` with θ periodic. Pixels outside the disk are 0 and
/// values are clamped into `[0, 1]`.
pub fn to_cartesian(polar: &PolarImage, size: usize) -> Result<RasterImage> {
    let (n_r, n_t) = (polar.n_radial, polar.n_angular);
    let c = (size as f64 - 1.0) / 2.0;
    let rho = size as f64 / 2.0 - 0.5;
    RasterImage::from_fn(size, size, |x, y| {
        let dx = x as f64 - c;
        let dy = c - y as f64;
        let r = if rho > 0.0 { dx.hypot(dy) / rho } else { 0.0 };
        if r > 1.0 {
            return 0.0;
        }
        let fi = (r * n_r as f64 - 0.5).clamp(0.0, (n_r - 1) as f64);
        let theta = dy.atan2(dx).rem_euclid(2.0 * PI);
        let fj = theta / (2.0 * PI) * n_t as f64;
        let i0 = (fi.floor() as usize).min(n_r.saturating_sub(2));
        let wi = if n_r > 1 { fi - i0 as f64 } else { 0.0 };
        let j0 = fj.floor() as usize % n_t;
        let wj = fj - fj.floor();
        let j1 = (j0 + 1) % n_t;
        let i1 = (i0 + 1).min(n_r - 1);
        let ring = |i: usize| (1.0 - wj) * polar.get(i, j0).re + wj * polar.get(i, j1).re;
        (1.0 - wi) * ring(i0) + wi * ring(i1)
    })
}

/// Signal-to-noise ratio and seed for [`add_gaussian_noise`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::param("snr-db", "SNR must be finite"));
        }
        Ok(Self { snr_db, seed })
    }

    /// Noise variance for a given mean-square signal power.
    pub fn noise_variance(&self, signal_power: f64) -> f64 {
        signal_power / 10f64.powf(self.snr_db / 10.0)
    }
}

/// The zero-mean Gaussian field that [`add_gaussian_noise`] adds, one value
/// per pixel, before clamping. Signal power is the mean squared intensity.
pub fn noise_field(image: &RasterImage, spec: &NoiseSpec) -> Result<Vec<f64>> {
    let power = image.mean_square();
    if power == 0.0 {
        return Err(Error::Domain(
            "SNR is undefined for an all-zero image".into(),
        ));
    }
    let sigma = spec.noise_variance(power).sqrt();
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| Error::param("snr-db", format!("invalid noise level: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    Ok((0..image.pixels.len()).map(|_| normal.sample(&mut rng)).collect())
}

pub fn add_gaussian_noise(image: &RasterImage, spec: &NoiseSpec) -> Result<RasterImage> {
    let noise = noise_field(image, spec)?;
    let pixels = image
        .pixels
        .iter()
        .zip(noise)
        .map(|(p, n)| (p + n).clamp(0.0, 1.0))
        .collect();
    Ok(RasterImage {
        pixels,
        ..image.clone()
    })
}
