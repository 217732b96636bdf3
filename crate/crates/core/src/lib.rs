//! Slepian-based image moments.
//!
//! The radial factor of each moment is a discrete prolate spheroidal sequence
//! (DPSS) resampled onto `[0, 1]`, the angular factor is `e^{-i n θ}`. Moduli
//! `Φ_mn = |S_mn|` are invariant to rotations of the image about its center.
//!
//! * [`dpss`]: sinc-kernel DPSS basis, spectra and concentration ratios.
//! * [`imaging`]: PGM I/O, rotation, polar resampling, Gaussian noise.
//! * [`moments`]: FFT moment computation, invariants, reconstruction.
//! * [`harness`]: rotation/noise stability tables and classification sweeps.
//! * [`cli`]: the `slepmom` command line front end.

pub mod cli;
pub mod dpss;
mod error;
pub mod harness;
pub mod imaging;
pub mod moments;
mod tridiag;

pub use dpss::{DpssBasis, DpssParams, SpectrumSample};
pub use error::{Error, Result};
pub use imaging::{NoiseSpec, PolarImage, RasterImage};
pub use moments::{InvariantVector, MomentSet};
