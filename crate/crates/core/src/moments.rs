//! Slepian-based moments on the unit disk.
//!
//! For a polar image `f` on the midpoint grid `r_i = (i + 0.5)/R`,
//! `θ_j = 2πj/T`,
//!
//! ```text
//! S[m][n] = Σ_i ψ_m(r_i) r_i Δr · Σ_j e^{−i n θ_j} conj(f(r_i, θ_j)) Δθ
//! ```
//!
//! with `Δr = 1/R` and `Δθ = 2π/T`. The inner sum is a length-`T` forward
//! DFT of each conjugated ring, so every angular order of a ring comes out of
//! one FFT and the whole set costs `O(R T log T + R M L)`.
//!
//! Rotating the image by `α` multiplies `S[m][n]` by `e^{inα}`, which leaves
//! `Φ[m][n] = |S[m][n]|` unchanged.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::dpss::{radial_basis, DpssBasis};
use crate::error::{Error, Result};
use crate::imaging::{radial_grid, angular_grid, to_polar, PolarImage, RasterImage};

/// Radial orders used for classification features.
pub const FEATURE_RADIAL_ORDERS: usize = 10;
/// Highest angular order used for classification features.
pub const FEATURE_MAX_ANGULAR: usize = 9;

/// Quadrature tag written into moment dumps.
pub const QUADRATURE: &str = "midpoint-r uniform-theta";

/// Moments `S[m][n]` for `m ∈ [0, M)` and `n ∈ [−L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    max_radial: usize,
    max_angular: usize,
    values: Vec<Complex64>,
    grid: (usize, usize),
    basis_id: String,
}

impl MomentSet {
    pub fn max_radial(&self) -> usize {
        self.max_radial
    }

    pub fn max_angular(&self) -> usize {
        self.max_angular
    }

    /// `(R, T)` of the polar grid the moments were computed on.
    pub fn grid(&self) -> (usize, usize) {
        self.grid
    }

    pub fn basis_id(&self) -> &str {
        &self.basis_id
    }

    fn width(&self) -> usize {
        2 * self.max_angular + 1
    }

    /// `S[m][n]`; panics when `m ≥ M` or `|n| > L`.
    pub fn get(&self, m: usize, n: i64) -> Complex64 {
        assert!(m < self.max_radial && n.unsigned_abs() as usize <= self.max_angular);
        self.values[m * self.width() + (n + self.max_angular as i64) as usize]
    }

    /// Row-major `M × (2L + 1)` values, column `n + L`.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        let width = self.width();
        let l = self.max_angular as i64;
        self.values
            .iter()
            .enumerate()
            .map(move |(k, v)| (k / width, (k % width) as i64 - l, *v))
    }

    pub fn to_file(&self) -> MomentsFile {
        MomentsFile {
            metadata: MomentsMetadata {
                grid: GridSpec {
                    radial: self.grid.0,
                    angular: self.grid.1,
                },
                basis_id: self.basis_id.clone(),
                quadrature: QUADRATURE.to_string(),
                max_radial: self.max_radial,
                max_angular: self.max_angular,
            },
            moments: self
                .iter()
                .map(|(m, n, v)| MomentEntry {
                    m,
                    n,
                    re: v.re,
                    im: v.im,
                })
                .collect(),
        }
    }

    pub fn from_file(file: MomentsFile) -> Result<Self> {
        let meta = file.metadata;
        let (mm, l) = (meta.max_radial, meta.max_angular);
        let width = 2 * l + 1;
        if mm == 0 {
            return Err(Error::param("m", "moment set needs at least one radial order"));
        }
        if file.moments.len() != mm * width {
            return Err(Error::Domain(format!(
                "expected {} moments for M={mm}, L={l}, found {}",
                mm * width,
                file.moments.len()
            )));
        }
        let mut values = vec![Complex64::new(f64::NAN, f64::NAN); mm * width];
        for e in &file.moments {
            if e.m >= mm || e.n.unsigned_abs() as usize > l {
                return Err(Error::Domain(format!("moment ({}, {}) outside M={mm}, L={l}", e.m, e.n)));
            }
            values[e.m * width + (e.n + l as i64) as usize] = Complex64::new(e.re, e.im);
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Domain("moment file has missing or non-finite entries".into()));
        }
        Ok(Self {
            max_radial: mm,
            max_angular: l,
            values,
            grid: (meta.grid.radial, meta.grid.angular),
            basis_id: meta.basis_id,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub radial: usize,
    pub angular: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MomentsMetadata {
    pub grid: GridSpec,
    pub basis_id: String,
    pub quadrature: String,
    pub max_radial: usize,
    pub max_angular: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MomentEntry {
    pub m: usize,
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

/// JSON moment dump: metadata plus one `{"m","n","re","im"}` record per moment.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MomentsFile {
    pub metadata: MomentsMetadata,
    pub moments: Vec<MomentEntry>,
}

/// `Φ[m][n] = |S[m][n]|` for `n ≥ 0`, flattened m-major.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantVector {
    max_radial: usize,
    max_angular: usize,
    entries: Vec<f64>,
}

impl InvariantVector {
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_radial(&self) -> usize {
        self.max_radial
    }

    pub fn max_angular(&self) -> usize {
        self.max_angular
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        assert!(m < self.max_radial && n <= self.max_angular);
        self.entries[m * (self.max_angular + 1) + n]
    }

    /// Column names `phi_m_n` in flattening order.
    pub fn labels(&self) -> Vec<String> {
        (0..self.max_radial)
            .flat_map(|m| (0..=self.max_angular).map(move |n| format!("phi_{m}_{n}")))
            .collect()
    }

    /// Header line plus a single data row.
    pub fn to_csv(&self) -> String {
        let values: Vec<String> = self.entries.iter().map(|v| v.to_string()).collect();
        format!("{}\n{}\n", self.labels().join(","), values.join(","))
    }
}

/// Radial weights `ψ_m(r_i) r_i Δr` for `m < M`.
fn radial_weights(basis: &DpssBasis, max_radial: usize, n_radial: usize) -> Result<Vec<Vec<f64>>> {
    let radii = radial_grid(n_radial);
    let dr = 1.0 / n_radial as f64;
    let psi = radial_basis(basis, &radii)?;
    Ok(psi
        .into_iter()
        .take(max_radial)
        .map(|row| row.iter().zip(&radii).map(|(p, r)| p * r * dr).collect())
        .collect())
}

fn check_orders(basis: &DpssBasis, max_radial: usize, max_angular: usize, n_angular: usize) -> Result<()> {
    if max_radial == 0 || max_radial > basis.n_seq() {
        return Err(Error::param(
            "m",
            format!("radial order count must lie in 1..={}, got {max_radial}", basis.n_seq()),
        ));
    }
    if 2 * max_angular + 1 > n_angular {
        return Err(Error::Aliasing {
            max_angular,
            n_angular,
        });
    }
    Ok(())
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward FFT of length `n`; plans are cached per thread.
fn forward_fft(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub fn compute_moments(
    img: &PolarImage,
    basis: &DpssBasis,
    max_radial: usize,
    max_angular: usize,
) -> Result<MomentSet> {
    let (n_r, n_t) = (img.n_radial(), img.n_angular());
    check_orders(basis, max_radial, max_angular, n_t)?;
    let weights = radial_weights(basis, max_radial, n_r)?;
    let d_theta = 2.0 * PI / n_t as f64;
    let width = 2 * max_angular + 1;
    let l = max_angular as i64;

    let fft = forward_fft(n_t);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut ring = vec![Complex64::new(0.0, 0.0); n_t];
    let mut values = vec![Complex64::new(0.0, 0.0); max_radial * width];
    for i in 0..n_r {
        ring.iter_mut()
            .zip(img.ring(i))
            .for_each(|(dst, src)| *dst = src.conj());
        fft.process_with_scratch(&mut ring, &mut scratch);
        for (m, w) in weights.iter().enumerate() {
            let coef = w[i] * d_theta;
            let row = &mut values[m * width..(m + 1) * width];
            for (col, n) in (-l..=l).enumerate() {
                row[col] += coef * ring[n.rem_euclid(n_t as i64) as usize];
            }
        }
    }
    Ok(MomentSet {
        max_radial,
        max_angular,
        values,
        grid: (n_r, n_t),
        basis_id: basis.id(),
    })
}

pub fn invariants(ms: &MomentSet) -> InvariantVector {
    let entries = (0..ms.max_radial)
        .flat_map(|m| (0..=ms.max_angular as i64).map(move |n| (m, n)))
        .map(|(m, n)| ms.get(m, n).norm())
        .collect();
    InvariantVector {
        max_radial: ms.max_radial,
        max_angular: ms.max_angular,
        entries,
    }
}

/// Polar resampling, moments and invariants in one step.
pub fn image_invariants(
    img: &RasterImage,
    basis: &DpssBasis,
    max_radial: usize,
    max_angular: usize,
    grid: (usize, usize),
) -> Result<InvariantVector> {
    let polar = to_polar(img, grid.0, grid.1)?;
    Ok(invariants(&compute_moments(&polar, basis, max_radial, max_angular)?))
}

/// The 100-entry feature vector: `M = 10` radial orders, `n ∈ [0, 9]`.
pub fn feature_vector(img: &RasterImage, basis: &DpssBasis, grid: (usize, usize)) -> Result<InvariantVector> {
    if basis.n_seq() < FEATURE_RADIAL_ORDERS {
        return Err(Error::param(
            "k",
            format!(
                "feature vectors need at least {FEATURE_RADIAL_ORDERS} sequences, basis has {}",
                basis.n_seq()
            ),
        ));
    }
    image_invariants(img, basis, FEATURE_RADIAL_ORDERS, FEATURE_MAX_ANGULAR, grid)
}

/// Coefficients `c[m][n]` of a truncated Slepian series
/// `f(r, θ) = Σ_m Σ_{n=−L}^{L} c[m][n] ψ_m(r) e^{−inθ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlepianSeries {
    max_radial: usize,
    max_angular: usize,
    coeffs: Vec<Complex64>,
}

impl SlepianSeries {
    /// Row-major `M × (2L + 1)` coefficients, column `n + L`.
    pub fn new(max_radial: usize, max_angular: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != max_radial * (2 * max_angular + 1) {
            return Err(Error::param(
                "coeffs",
                format!(
                    "expected {} coefficients for M={max_radial}, L={max_angular}, got {}",
                    max_radial * (2 * max_angular + 1),
                    coeffs.len()
                ),
            ));
        }
        Ok(Self {
            max_radial,
            max_angular,
            coeffs,
        })
    }

    /// Reads a moment set verbatim as series coefficients.
    pub fn from_moments(ms: &MomentSet) -> Self {
        Self {
            max_radial: ms.max_radial,
            max_angular: ms.max_angular,
            coeffs: ms.values.clone(),
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Sums the series on an `R × T` grid.
    pub fn evaluate(&self, basis: &DpssBasis, n_radial: usize, n_angular: usize) -> Result<PolarImage> {
        if self.max_radial > basis.n_seq() {
            return Err(Error::param(
                "m",
                format!("series uses {} radial orders, basis has {}", self.max_radial, basis.n_seq()),
            ));
        }
        let radii = radial_grid(n_radial);
        let angles = angular_grid(n_angular);
        let psi = radial_basis(basis, &radii)?;
        let width = 2 * self.max_angular + 1;
        let l = self.max_angular as i64;
        // phase[j][col] = e^{−inθ_j}
        let phase: Vec<Vec<Complex64>> = angles
            .iter()
            .map(|t| (-l..=l).map(|n| Complex64::from_polar(1.0, -(n as f64) * t)).collect())
            .collect();
        let mut samples = Vec::with_capacity(n_radial * n_angular);
        for i in 0..n_radial {
            let profile: Vec<Complex64> = (0..width)
                .map(|col| {
                    (0..self.max_radial)
                        .map(|m| self.coeffs[m * width + col] * psi[m][i])
                        .sum()
                })
                .collect();
            for ph in &phase {
                samples.push(profile.iter().zip(ph).map(|(a, b)| a * b).sum());
            }
        }
        PolarImage::new(n_radial, n_angular, samples)
    }
}

/// Result of [`reconstruct`]: the real part of the series and the largest
/// discarded imaginary magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub image: PolarImage,
    pub max_imag_residual: f64,
}

/// Series coefficients whose moments on the moment grid equal `ms`.
///
/// The resampled radial functions are not orthogonal under `r dr`, so the
/// moments are first mapped through the inverse radial Gram matrix
/// `G[m][p] = Σ_i ψ_m(r_i) ψ_p(r_i) r_i Δr`; then `c = conj(G⁻¹ S) / 2π`.
pub fn series_from_moments(ms: &MomentSet, basis: &DpssBasis) -> Result<SlepianSeries> {
    let mm = ms.max_radial;
    if mm > basis.n_seq() {
        return Err(Error::param(
            "m",
            format!("moment set uses {mm} radial orders, basis has {}", basis.n_seq()),
        ));
    }
    let n_r = ms.grid.0;
    let radii = radial_grid(n_r);
    let psi = radial_basis(basis, &radii)?;
    let dr = 1.0 / n_r as f64;
    let gram = DMatrix::from_fn(mm, mm, |a, b| {
        (0..n_r).map(|i| psi[a][i] * psi[b][i] * radii[i] * dr).sum::<f64>()
    });
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Domain(format!(
            "radial functions are linearly dependent on {n_r} rings; use more rings or fewer orders"
        ))
    })?;
    let width = 2 * ms.max_angular + 1;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); mm * width];
    for col in 0..width {
        let re = chol.solve(&DVector::from_fn(mm, |m, _| ms.values[m * width + col].re));
        let im = chol.solve(&DVector::from_fn(mm, |m, _| ms.values[m * width + col].im));
        for m in 0..mm {
            coeffs[m * width + col] = Complex64::new(re[m], -im[m]) / (2.0 * PI);
        }
    }
    SlepianSeries::new(mm, ms.max_angular, coeffs)
}

/// Rebuilds an image from its moments on an `R × T` grid.
pub fn reconstruct(ms: &MomentSet, basis: &DpssBasis, grid: (usize, usize)) -> Result<Reconstruction> {
    let full = series_from_moments(ms, basis)?.evaluate(basis, grid.0, grid.1)?;
    let max_imag_residual = full.samples().iter().fold(0.0_f64, |m, s| m.max(s.im.abs()));
    let real: Vec<f64> = full.samples().iter().map(|s| s.re).collect();
    Ok(Reconstruction {
        image: PolarImage::from_real(grid.0, grid.1, &real)?,
        max_imag_residual,
    })
}

/// `‖a − b‖ / ‖a‖` in the disk norm (`r dr dθ` weights) on a shared grid.
pub fn relative_l2_error(reference: &PolarImage, approx: &PolarImage) -> Result<f64> {
    if (reference.n_radial(), reference.n_angular()) != (approx.n_radial(), approx.n_angular()) {
        return Err(Error::param("grid", "images are on different polar grids"));
    }
    let radii = reference.radii();
    let (mut diff, mut norm) = (0.0, 0.0);
    for (i, r) in radii.iter().enumerate() {
        for (a, b) in reference.ring(i).iter().zip(approx.ring(i)) {
            diff += r * (a - b).norm_sqr();
            norm += r * a.norm_sqr();
        }
    }
    Ok((diff / norm).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpss::{compute_dpss, DpssParams};
    use approx::assert_abs_diff_eq;

    fn basis(n: usize, w: f64, k: usize) -> DpssBasis {
        compute_dpss(DpssParams::new(n, w, k).unwrap()).unwrap()
    }

    #[test]
    fn zero_image_has_zero_moments() {
        let b = basis(16, 0.2, 4);
        let img = PolarImage::from_real(8, 16, &[0.0; 128]).unwrap();
        let ms = compute_moments(&img, &b, 4, 3).unwrap();
        assert!(ms.values().iter().all(|v| v.norm() == 0.0));
        assert!(invariants(&ms).entries().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_exponential_hits_one_angular_order() {
        let b = basis(16, 0.2, 5);
        let img = PolarImage::from_fn(12, 32, |_, t| Complex64::from_polar(1.0, -t)).unwrap();
        let ms = compute_moments(&img, &b, 5, 4).unwrap();
        let radii = img.radii();
        let psi = radial_basis(&b, &radii).unwrap();
        for (m, n, v) in ms.iter() {
            if n == 1 {
                let expect: f64 = 2.0 * PI / 12.0 * radii.iter().zip(&psi[m]).map(|(r, p)| r * p).sum::<f64>();
                assert_abs_diff_eq!(v.re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
            } else {
                assert!(v.norm() < 1e-12, "S[{m}][{n}] = {v}");
            }
        }
    }

    #[test]
    fn refuses_aliasing_and_excess_orders() {
        let b = basis(16, 0.2, 4);
        let img = PolarImage::from_real(4, 6, &[0.1; 24]).unwrap();
        assert!(matches!(
            compute_moments(&img, &b, 2, 3),
            Err(Error::Aliasing { max_angular: 3, n_angular: 6 })
        ));
        assert!(matches!(
            compute_moments(&img, &b, 5, 1),
            Err(Error::Parameter { name: "m", .. })
        ));
    }

    #[test]
    fn modulus_of_moment() {
        let ms = MomentSet {
            max_radial: 1,
            max_angular: 0,
            values: vec![Complex64::new(3.0, 4.0)],
            grid: (1, 1),
            basis_id: String::new(),
        };
        assert_eq!(invariants(&ms).entries(), &[5.0]);
    }

    #[test]
    fn invariant_layout_and_csv() {
        let b = basis(16, 0.2, 3);
        let img = PolarImage::from_fn(6, 9, |r, t| Complex64::new(r * t.cos(), 0.0)).unwrap();
        let inv = invariants(&compute_moments(&img, &b, 3, 2).unwrap());
        assert_eq!(inv.len(), 9);
        assert_eq!(inv.labels()[4], "phi_1_1");
        let csv = inv.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("phi_0_0,phi_0_1,phi_0_2,phi_1_0"));
        let parsed: Vec<f64> = lines[1].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(parsed, inv.entries());
    }

    #[test]
    fn real_images_have_conjugate_symmetric_moments() {
        let b = basis(16, 0.2, 4);
        let img = PolarImage::from_fn(10, 20, |r, t| Complex64::new(r * (3.0 * t).sin() + (t + 0.3).cos(), 0.0)).unwrap();
        let ms = compute_moments(&img, &b, 4, 5).unwrap();
        for m in 0..4 {
            for n in 1..=5 {
                assert!((ms.get(m, -n) - ms.get(m, n).conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn single_term_series_is_the_radial_function() {
        let b = basis(16, 0.2, 3);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 3 * 5];
        coeffs[2] = Complex64::new(1.0, 0.0); // m = 0, n = 0
        let img = SlepianSeries::new(3, 2, coeffs).unwrap().evaluate(&b, 8, 12).unwrap();
        let psi = radial_basis(&b, &img.radii()).unwrap();
        for i in 0..8 {
            for j in 0..12 {
                assert_abs_diff_eq!(img.get(i, j).re, psi[0][i], epsilon = 1e-14);
                assert_abs_diff_eq!(img.get(i, j).im, 0.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn reconstruct_zero_and_single_moment() {
        let b = basis(16, 0.2, 3);
        let ms = MomentSet {
            max_radial: 1,
            max_angular: 0,
            values: vec![Complex64::new(0.0, 0.0)],
            grid: (8, 8),
            basis_id: b.id(),
        };
        let rec = reconstruct(&ms, &b, (8, 8)).unwrap();
        assert!(rec.image.samples().iter().all(|s| s.norm() == 0.0));

        let ms = MomentSet {
            values: vec![Complex64::new(1.0, 0.0)],
            ..ms
        };
        let rec = reconstruct(&ms, &b, (8, 8)).unwrap();
        let psi = radial_basis(&b, &rec.image.radii()).unwrap();
        let scale = rec.image.get(3, 0).re / psi[0][3];
        for i in 0..8 {
            for j in 0..8 {
                assert_abs_diff_eq!(rec.image.get(i, j).re, scale * psi[0][i], epsilon = 1e-12);
            }
        }
        assert!(rec.max_imag_residual < 1e-12);
    }

    #[test]
    fn moments_file_round_trip() {
        let b = basis(16, 0.2, 3);
        let img = PolarImage::from_fn(6, 9, |r, t| Complex64::new(r + t.sin(), 0.2 * r)).unwrap();
        let ms = compute_moments(&img, &b, 3, 2).unwrap();
        let json = serde_json::to_string(&ms.to_file()).unwrap();
        let back = MomentSet::from_file(serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(ms, back);

        let mut broken = ms.to_file();
        broken.moments.pop();
        assert!(MomentSet::from_file(broken).is_err());
    }

    #[test]
    fn feature_vector_needs_ten_sequences() {
        let img = RasterImage::new(8, 8, vec![0.5; 64]).unwrap();
        assert!(feature_vector(&img, &basis(16, 0.2, 9), (16, 32)).is_err());
        let fv = feature_vector(&img, &basis(32, 0.15, 10), (16, 32)).unwrap();
        assert_eq!(fv.len(), 100);
        let zero = RasterImage::new(8, 8, vec![0.0; 64]).unwrap();
        assert!(feature_vector(&zero, &basis(32, 0.15, 10), (16, 32))
            .unwrap()
            .entries()
            .iter()
            .all(|v| *v == 0.0));
    }
}
