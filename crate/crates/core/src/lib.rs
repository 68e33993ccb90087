//! Joint DOD/DOA estimation for bistatic slow-time MIMO radar.
//!
//! Slow-time MIMO radar separates its transmitters in Doppler by applying a
//! pulse-to-pulse phase code (Doppler division multiple access). The received
//! data then form a third-order tensor that is the elementwise product of an
//! ordinary CP (PARAFAC) tensor carrying the angles and a fixed, known
//! modulation tensor. This crate fits that masked CP model by alternating least
//! squares and extracts angles from the Vandermonde factors through shift
//! invariance.
//!
//! Module map:
//!
//! * [`tensor`]: dense complex matrices and 3-way tensors, unfoldings,
//!   Khatri-Rao, CP construction.
//! * [`linalg`]: SVD, pseudo-inverse, eigendecomposition, least squares.
//! * [`scene`]: radar configuration, DDMA modulation, targets, noise.
//! * [`frontend`]: fast-time synthesis, matched filter, range-Doppler map,
//!   per-transmitter demodulation/decimation and the interpolation restore.
//! * [`decomposition`]: standard and masked CP-ALS.
//! * [`estimator`]: the subarray-augmented estimator and two baselines.
//! * [`experiments`]: Monte Carlo sweeps and CSV output.
//!
//! The numeric core is generic over [`Real`] (`f32`/`f64`); the aliases below
//! name the `f64` instantiations used by the experiments.

pub mod decomposition;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod frontend;
pub mod linalg;
pub mod matching;
pub mod scalar;
pub mod scene;
pub mod tensor;

pub use num_complex::Complex;
pub use error::{Error, Result};
pub use scalar::Real;

pub type C64 = Complex<f64>;
pub type C32 = Complex<f32>;
pub type CMatrix64 = tensor::CMatrix<f64>;
pub type CMatrix32 = tensor::CMatrix<f32>;
pub type Tensor3f64 = tensor::Tensor3<f64>;
pub type Tensor3f32 = tensor::Tensor3<f32>;

pub type RadarConfig64 = scene::RadarConfig<f64>;
pub type TargetScene64 = scene::TargetScene<f64>;
pub type MaskTensor64 = scene::MaskTensor<f64>;
pub type FactorSet64 = decomposition::FactorSet<f64>;
pub type EstimationResult64 = estimator::EstimationResult<f64>;
