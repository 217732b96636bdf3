//! Discrete prolate spheroidal sequences.
//!
//! `v^(k)(N, W)` is the `k`-th eigenvector of the `N × N` sinc kernel
//! `A[n, m] = sin(2πW(n − m)) / (π(n − m))`, ordered by decreasing eigenvalue
//! `λ_k`, which is also the fraction of the spectral energy of `v^(k)` that
//! falls inside `[−W, W]`. The eigenvectors are computed from the commuting
//! tridiagonal matrix, whose spectrum is well separated, and the eigenvalues
//! are then recovered as Rayleigh quotients against the sinc kernel itself.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tridiag::SymTridiagonal;

/// Entries below this fraction of the largest magnitude are ignored when
/// fixing the sign of a sequence. Tails of well concentrated sequences sit far
/// below rounding noise, so their computed sign carries no information.
const SIGN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpssParams {
    n_len: usize,
    half_bandwidth: f64,
    n_seq: usize,
}

impl DpssParams {
    /// Sequence length `N`, half bandwidth `W ∈ (0, 0.5)` and number of
    /// sequences `K ∈ [1, N]`.
    pub fn new(n_len: usize, half_bandwidth: f64, n_seq: usize) -> Result<Self> {
        if n_len == 0 {
            return Err(Error::param("n", "sequence length must be positive"));
        }
        check_bandwidth(half_bandwidth)?;
        if n_seq == 0 || n_seq > n_len {
            return Err(Error::param(
                "k",
                format!("number of sequences must lie in 1..={n_len}, got {n_seq}"),
            ));
        }
        Ok(Self {
            n_len,
            half_bandwidth,
            n_seq,
        })
    }

    pub fn n_len(&self) -> usize {
        self.n_len
    }

    pub fn half_bandwidth(&self) -> f64 {
        self.half_bandwidth
    }

    pub fn n_seq(&self) -> usize {
        self.n_seq
    }
}

fn check_bandwidth(w: f64) -> Result<()> {
    if !(w > 0.0 && w < 0.5) {
        return Err(Error::param(
            "w",
            format!("half bandwidth must lie in (0, 0.5), got {w}"),
        ));
    }
    Ok(())
}

/// One point of the spectrum `f_k(N, W, u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSample {
    pub u: f64,
    pub value: Complex64,
}

/// `K` sequences of length `N` with their concentration eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct DpssBasis {
    params: DpssParams,
    sequences: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

impl DpssBasis {
    pub fn params(&self) -> &DpssParams {
        &self.params
    }

    /// Row `k` is `v^(k)`, unit Euclidean norm.
    pub fn sequences(&self) -> &[Vec<f64>] {
        &self.sequences
    }

    pub fn sequence(&self, k: usize) -> Result<&[f64]> {
        self.sequences
            .get(k)
            .map(Vec::as_slice)
            .ok_or(Error::Index {
                index: k,
                len: self.sequences.len(),
            })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n_seq(&self) -> usize {
        self.params.n_seq
    }

    /// Short stable identifier recorded alongside moment sets.
    pub fn id(&self) -> String {
        format!(
            "dpss-n{}-w{}-k{}",
            self.params.n_len, self.params.half_bandwidth, self.params.n_seq
        )
    }

    pub fn to_file(&self) -> BasisFile {
        BasisFile {
            n: self.params.n_len,
            w: self.params.half_bandwidth,
            k: self.params.n_seq,
            eigenvalues: self.eigenvalues.clone(),
            sequences: self.sequences.clone(),
        }
    }

    /// Rebuilds a basis from its serialized form, checking shapes and ranges.
    pub fn from_file(file: BasisFile) -> Result<Self> {
        let params = DpssParams::new(file.n, file.w, file.k)?;
        if file.eigenvalues.len() != file.k || file.sequences.len() != file.k {
            return Err(Error::Domain(format!(
                "basis declares k={} but holds {} eigenvalues and {} sequences",
                file.k,
                file.eigenvalues.len(),
                file.sequences.len()
            )));
        }
        if let Some(row) = file.sequences.iter().position(|s| s.len() != file.n) {
            return Err(Error::Domain(format!(
                "sequence {row} has length {}, expected {}",
                file.sequences[row].len(),
                file.n
            )));
        }
        let finite = file
            .sequences
            .iter()
            .flatten()
            .chain(&file.eigenvalues)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("basis contains non-finite values".into()));
        }
        Ok(Self {
            params,
            sequences: file.sequences,
            eigenvalues: file.eigenvalues,
        })
    }
}

/// JSON form of a basis: `{"n", "w", "k", "eigenvalues", "sequences"}` with
/// sequences stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BasisFile {
    pub n: usize,
    pub w: f64,
    pub k: usize,
    pub eigenvalues: Vec<f64>,
    pub sequences: Vec<Vec<f64>>,
}

/// First row of the Toeplitz sinc kernel, `a[d] = sin(2πWd)/(πd)`, `a[0] = 2W`.
fn kernel_row(n_len: usize, w: f64) -> Vec<f64> {
    (0..n_len)
        .map(|d| {
            if d == 0 {
                2.0 * w
            } else {
                let d = d as f64;
                (2.0 * PI * w * d).sin() / (PI * d)
            }
        })
        .collect()
}

/// The dense `N × N` sinc kernel.
pub fn sinc_kernel(n_len: usize, half_bandwidth: f64) -> Result<DMatrix<f64>> {
    check_bandwidth(half_bandwidth)?;
    let row = kernel_row(n_len, half_bandwidth);
    Ok(DMatrix::from_fn(n_len, n_len, |i, j| row[i.abs_diff(j)]))
}

/// Applies the sinc kernel to `v` without materializing it.
fn apply_kernel(row: &[f64], v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| (0..n).map(|j| row[i.abs_diff(j)] * v[j]).sum())
        .collect()
}

/// Commuting tridiagonal matrix: diagonal `((N−1−2t)/2)² cos 2πW`,
/// off-diagonal `t(N−t)/2`.
fn commuting_matrix(n_len: usize, w: f64) -> SymTridiagonal {
    let c = (2.0 * PI * w).cos();
    let diag = (0..n_len)
        .map(|t| {
            let h = (n_len as f64 - 1.0 - 2.0 * t as f64) / 2.0;
            h * h * c
        })
        .collect();
    let off = (1..n_len)
        .map(|t| (t as f64) * ((n_len - t) as f64) / 2.0)
        .collect();
    SymTridiagonal::new(diag, off)
}

fn fix_sign(v: &mut [f64]) {
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_FLOOR * peak) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub fn compute_dpss(params: DpssParams) -> Result<DpssBasis> {
    let DpssParams {
        n_len,
        half_bandwidth: w,
        n_seq,
    } = params;
    let row = kernel_row(n_len, w);
    let pairs = commuting_matrix(n_len, w).largest_eigenpairs(n_seq);

    // Largest and smallest f64 strictly inside (0, 1).
    let upper = 1.0 - f64::EPSILON / 2.0;
    let lower = f64::MIN_POSITIVE;

    let mut sequences = Vec::with_capacity(n_seq);
    let mut eigenvalues = Vec::with_capacity(n_seq);
    for (_, mut v) in pairs {
        fix_sign(&mut v);
        let av = apply_kernel(&row, &v);
        let rayleigh: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
        eigenvalues.push(rayleigh.clamp(lower, upper));
        sequences.push(v);
    }
    Ok(DpssBasis {
        params,
        sequences,
        eigenvalues,
    })
}

/// `ε_k`: 1 for even `k`, the imaginary unit for odd `k`.
fn epsilon(k: usize) -> Complex64 {
    if k % 2 == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 1.0)
    }
}

/// `f_k(u) = ε_k Σ_m v_m e^{−iπ(N−1−2m)u}`, evaluated by Horner's rule in
/// `z = e^{2πiu}`.
fn spectrum_at(v: &[f64], k: usize, u: f64) -> Complex64 {
    let n = v.len() as f64;
    let z = Complex64::from_polar(1.0, 2.0 * PI * u);
    let poly = v
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
    epsilon(k) * Complex64::from_polar(1.0, -PI * (n - 1.0) * u) * poly
}

pub fn dpss_spectrum(basis: &DpssBasis, k: usize, u_grid: &[f64]) -> Result<Vec<SpectrumSample>> {
    let v = basis.sequence(k)?;
    Ok(u_grid
        .iter()
        .map(|&u| SpectrumSample {
            u,
            value: spectrum_at(v, k, u),
        })
        .collect())
}

/// Composite Simpson rule on `[a, b]` with at least `points` nodes (rounded up
/// to an odd count).
fn simpson(a: f64, b: f64, points: usize, f: impl Fn(f64) -> f64) -> f64 {
    let intervals = {
        let n = points.max(3) - 1;
        n + n % 2
    };
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(a + h * i as f64);
    }
    sum * h / 3.0
}

/// In-band energy of `f_k` over `[−W, W]` divided by its energy over
/// `[−1/2, 1/2]`, both by Simpson quadrature with `quad_points` nodes.
pub fn concentration_ratio(basis: &DpssBasis, k: usize, quad_points: usize) -> Result<f64> {
    let v = basis.sequence(k)?;
    let w = basis.params.half_bandwidth;
    let energy = |u: f64| spectrum_at(v, k, u).norm_sqr();
    let inside = simpson(-w, w, quad_points, energy);
    let total = simpson(-0.5, 0.5, quad_points, energy);
    Ok(inside / total)
}

/// Radial position of DPSS sample `m`: `r_m = m / (N − 1)`.
pub fn native_positions(n_len: usize) -> Vec<f64> {
    if n_len == 1 {
        return vec![0.0];
    }
    (0..n_len).map(|m| m as f64 / (n_len - 1) as f64).collect()
}

/// Catmull-Rom interpolation of `samples` (unit spacing) at fractional index
/// `x ∈ [0, len − 1]`. Ghost points at either end are linear extrapolations.
fn catmull_rom(samples: &[f64], x: f64) -> f64 {
    let n = samples.len();
    if n == 1 {
        return samples[0];
    }
    let at = |i: isize| -> f64 {
        if i < 0 {
            2.0 * samples[0] - samples[1]
        } else if i as usize >= n {
            2.0 * samples[n - 1] - samples[n - 2]
        } else {
            samples[i as usize]
        }
    };
    let i = (x.floor() as isize).min(n as isize - 2);
    let t = x - i as f64;
    if t == 0.0 {
        return at(i);
    }
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t3)
}

/// `ψ_k(r)` for every `k` on `r_grid`: the DPSS index axis is mapped onto
/// `[0, 1]` (sample `m` sits at `m / (N − 1)`) and interpolated with
/// Catmull-Rom splines. Returns a `K × R` matrix.
pub fn radial_basis(basis: &DpssBasis, r_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if let Some(r) = r_grid.iter().find(|r| !(0.0..=1.0).contains(*r)) {
        return Err(Error::Domain(format!("radius {r} outside [0, 1]")));
    }
    let scale = (basis.params.n_len - 1) as f64;
    Ok(basis
        .sequences
        .iter()
        .map(|v| r_grid.iter().map(|&r| catmull_rom(v, r * scale)).collect())
        .collect())
}
