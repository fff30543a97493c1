//! Deterministic random-number plumbing.
//!
//! Every stochastic stage derives its own stream from the master seed and a
//! string label (plus an index for per-draw streams), so results are
//! bit-identical across runs and across thread counts: a Monte Carlo draw's
//! stream depends only on the master seed and the draw index, never on which
//! worker picks it up.

use rand::RngExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Labels for the independent random streams of the pipeline.
pub mod stream {
    pub const CHANNEL_SYNTHESIS: &str = "channel-synthesis";
    pub const CSI_ERROR: &str = "csi-error";
    pub const RANDOMIZATION: &str = "randomization-candidates";
    pub const SCENARIO_POSITIONS: &str = "scenario-positions";
}

/// FNV-1a over the label bytes and index, folded into the master seed. A
/// cheap, stable, well-mixed map — not cryptographic, which is fine here.
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = FNV_OFFSET ^ master;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    for b in index.to_le_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    // One final avalanche round (splitmix64 finalizer) so low-entropy labels
    // still spread across the full 64 bits.
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^= h >> 31;
    h
}

/// Stream cipher RNG seeded from a derived seed.
pub fn stream_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, label, index))
}

/// One CN(0,1) sample (complex circularly-symmetric Gaussian, unit variance
/// split evenly across real and imaginary parts), via the polar form
/// `z = sqrt(-ln u1) · e^{j 2π u2}`.
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    Complex64::from_polar((-u1.ln()).sqrt(), TAU * u2)
}

/// A vector of iid CN(0,1) samples.
pub fn complex_gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> crate::CVector {
    crate::CVector::from_fn(n, |_, _| complex_gaussian(rng))
}
