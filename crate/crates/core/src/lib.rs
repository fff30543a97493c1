//! Robust secure multicast beamforming for a HAP mmWave downlink sharing
//! spectrum with a satellite primary network.
//!
//! The library covers the full pipeline:
//!
//! * [`antenna`] — UPA steering vectors, ITU directivity mask, beampatterns.
//! * [`channel`] — LoS/NLoS channel synthesis and Gaussian CSI error models.
//! * [`metrics`] — SNR, achievable rate, achievable secrecy rate, interference.
//! * [`conic`] — SDP intermediate representation, complex-Hermitian-to-real
//!   embedding, the cone solve contract, and rank-one extraction.
//! * [`bernstein`] — Bernstein-type tail-bound reformulation of the outage
//!   constraints into deterministic linear / SOC / LMI blocks.
//! * [`optimizer`] — the bisection + penalty-SDP beamformer search and the
//!   baseline schemes (perfect CSI, SDR randomization, non-robust).
//! * [`evaluation`] — Monte Carlo outage validation, power sweeps, and the
//!   small-instance brute-force oracle.
//! * [`scenario`] — scenario files, defaults, validation, run manifests.
//!
//! All internal math is in radians and linear (watt) units; dB appears only
//! at configuration and output boundaries.

// Pull in the system BLAS/LAPACK that clarabel's PSD cone kernels link against.
use openblas_src as _;

pub mod antenna;
pub mod bernstein;
pub mod channel;
pub mod conic;
pub mod evaluation;
pub mod metrics;
pub mod optimizer;
pub mod rng;
pub mod scenario;

use num_complex::Complex64;

/// Complex column vector used for channels, steering vectors, and weights.
pub type CVector = nalgebra::DVector<Complex64>;
/// Complex dense matrix used for covariances and the beamforming matrix W.
pub type CMatrix = nalgebra::DMatrix<Complex64>;

/// Power quantity in dB to linear scale: `10^(db/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power to dB: `10 log10(x)`.
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
