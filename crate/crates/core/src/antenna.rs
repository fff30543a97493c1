//! Uniform planar array steering vectors, the ITU directivity mask, and
//! beampattern evaluation over a direction grid.
//!
//! The UPA lies in the X-Y plane with `n1 × n2` elements. A direction is a
//! pitching angle θ ∈ [0, π] and an azimuth φ ∈ [−π, π]. The steering vector
//! is the Kronecker product of the two axis factors,
//!
//! ```text
//! a(θ,φ) = a_x(θ,φ) ⊗ a_y(θ,φ),
//! a_x[n] = exp(j k d1 n sinθ cosφ),  n = 0..n1-1,
//! a_y[n] = exp(j k d2 n sinθ sinφ),  n = 0..n2-1,
//! ```
//!
//! and the directivity mask in dB is
//!
//! ```text
//! ĝ(θ,φ) = G_max − min{ g_a(θ,φ) + g_e(θ,φ), SLL },
//! g_a = min{ 12 (arctan(cotθ / cosφ) / φ_a3dB)², SLL },
//! g_e = min{ 12 (arctan(tanθ · sinφ) / φ_e3dB)², SLL },
//! ```
//!
//! with the arctan evaluated in degrees against the 3 dB beamwidths.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::{linear_to_db, CVector};

#[derive(Debug, Clone, PartialEq)]
pub enum AntennaError {
    InvalidGeometry(String),
    InvalidDirectivity(String),
    InvalidDirection(String),
    ZeroWeightVector,
}

impl std::fmt::Display for AntennaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AntennaError::InvalidGeometry(m) => write!(f, "invalid array geometry: {m}"),
            AntennaError::InvalidDirectivity(m) => write!(f, "invalid directivity params: {m}"),
            AntennaError::InvalidDirection(m) => write!(f, "invalid direction: {m}"),
            AntennaError::ZeroWeightVector => write!(f, "beampattern requires a nonzero weight vector"),
        }
    }
}

impl std::error::Error for AntennaError {}

/// Uniform planar array geometry: element counts, spacings, and wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    n1: usize,
    n2: usize,
    d1_m: f64,
    d2_m: f64,
    wavelength_m: f64,
}

impl ArrayGeometry {
    pub fn new(
        n1: usize,
        n2: usize,
        d1_m: f64,
        d2_m: f64,
        wavelength_m: f64,
    ) -> Result<Self, AntennaError> {
        if n1 < 1 || n2 < 1 {
            return Err(AntennaError::InvalidGeometry(format!(
                "element counts must be >= 1, got n1={n1}, n2={n2}"
            )));
        }
        if !(d1_m > 0.0) || !(d2_m > 0.0) || !(wavelength_m > 0.0) {
            return Err(AntennaError::InvalidGeometry(format!(
                "spacings and wavelength must be positive, got d1={d1_m}, d2={d2_m}, lambda={wavelength_m}"
            )));
        }
        Ok(Self { n1, n2, d1_m, d2_m, wavelength_m })
    }

    /// Half-wavelength-spaced array, the conventional default.
    pub fn half_wavelength(n1: usize, n2: usize, wavelength_m: f64) -> Result<Self, AntennaError> {
        Self::new(n1, n2, wavelength_m / 2.0, wavelength_m / 2.0, wavelength_m)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n_elements(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn d1_m(&self) -> f64 {
        self.d1_m
    }

    pub fn d2_m(&self) -> f64 {
        self.d2_m
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    /// Wavenumber k = 2π/λ.
    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength_m
    }
}

/// ITU-style antenna mask parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectivityParams {
    g_max_db: f64,
    sll_db: f64,
    phi_a_3db_deg: f64,
    phi_e_3db_deg: f64,
}

impl DirectivityParams {
    pub fn new(
        g_max_db: f64,
        sll_db: f64,
        phi_a_3db_deg: f64,
        phi_e_3db_deg: f64,
    ) -> Result<Self, AntennaError> {
        if !(sll_db > 0.0) {
            return Err(AntennaError::InvalidDirectivity(format!(
                "side-lobe level must be positive, got {sll_db} dB"
            )));
        }
        for (name, bw) in [("phi_a_3db_deg", phi_a_3db_deg), ("phi_e_3db_deg", phi_e_3db_deg)] {
            if !(bw > 0.0 && bw < 180.0) {
                return Err(AntennaError::InvalidDirectivity(format!(
                    "{name} must lie in (0, 180) degrees, got {bw}"
                )));
            }
        }
        Ok(Self { g_max_db, sll_db, phi_a_3db_deg, phi_e_3db_deg })
    }

    /// Aperture-proportional maximum gain `10 log10(N_h)` dBi, the fallback
    /// when no explicit G_max is configured.
    pub fn with_aperture_gain(
        geom: &ArrayGeometry,
        sll_db: f64,
        phi_a_3db_deg: f64,
        phi_e_3db_deg: f64,
    ) -> Result<Self, AntennaError> {
        Self::new(
            linear_to_db(geom.n_elements() as f64),
            sll_db,
            phi_a_3db_deg,
            phi_e_3db_deg,
        )
    }

    pub fn g_max_db(&self) -> f64 {
        self.g_max_db
    }

    pub fn sll_db(&self) -> f64 {
        self.sll_db
    }

    pub fn phi_a_3db_deg(&self) -> f64 {
        self.phi_a_3db_deg
    }

    pub fn phi_e_3db_deg(&self) -> f64 {
        self.phi_e_3db_deg
    }
}

/// A propagation direction: pitching angle θ and azimuth φ, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    theta_rad: f64,
    phi_rad: f64,
}

impl Direction {
    pub fn new(theta_rad: f64, phi_rad: f64) -> Result<Self, AntennaError> {
        if !(0.0..=PI).contains(&theta_rad) || !theta_rad.is_finite() {
            return Err(AntennaError::InvalidDirection(format!(
                "theta must lie in [0, pi], got {theta_rad}"
            )));
        }
        if !(-PI..=PI).contains(&phi_rad) || !phi_rad.is_finite() {
            return Err(AntennaError::InvalidDirection(format!(
                "phi must lie in [-pi, pi], got {phi_rad}"
            )));
        }
        Ok(Self { theta_rad, phi_rad })
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self, AntennaError> {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    pub fn theta(&self) -> f64 {
        self.theta_rad
    }

    pub fn phi(&self) -> f64 {
        self.phi_rad
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta_rad.to_degrees()
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi_rad.to_degrees()
    }
}

/// UPA steering vector `a_x ⊗ a_y`; every entry has unit modulus and the
/// first entry is exactly 1.
pub fn steering_vector(geom: &ArrayGeometry, dir: &Direction) -> CVector {
    let k = geom.wavenumber();
    let (sin_t, cos_p, sin_p) = (dir.theta().sin(), dir.phi().cos(), dir.phi().sin());
    let phase_x = k * geom.d1_m * sin_t * cos_p;
    let phase_y = k * geom.d2_m * sin_t * sin_p;

    let mut v = CVector::zeros(geom.n_elements());
    for ix in 0..geom.n1 {
        let px = phase_x * ix as f64;
        for iy in 0..geom.n2 {
            let p = px + phase_y * iy as f64;
            v[ix * geom.n2 + iy] = Complex64::new(p.cos(), p.sin());
        }
    }
    v
}

// Guard for the trig singularities at θ = π/2 and cosφ = 0. Values at and
// beyond exact float representations of the singular angles fall well below
// this threshold; nearby regular angles stay well above it.
const TRIG_EPS: f64 = 1e-9;

/// X-axis relative pattern g_a(θ,φ) in dB, clamped at SLL.
///
/// Limit convention at the singular points: for cosφ = 0 the ratio
/// cotθ/cosφ diverges along θ, so the arctan is taken as ±π/2 (the square
/// makes the sign irrelevant); elsewhere the f64 arithmetic of cotθ already
/// realises the continuous limit (cot 0 = +inf → arctan = π/2).
fn relative_pattern_a(params: &DirectivityParams, dir: &Direction) -> f64 {
    let cos_phi = dir.phi().cos();
    let arctan_deg = if cos_phi.abs() < TRIG_EPS {
        90.0
    } else {
        let cot_theta = dir.theta().cos() / dir.theta().sin();
        (cot_theta / cos_phi).atan().to_degrees()
    };
    (12.0 * (arctan_deg / params.phi_a_3db_deg).powi(2)).min(params.sll_db)
}

/// Y-axis relative pattern g_e(θ,φ) in dB, clamped at SLL.
///
/// Limit convention: at θ = π/2 the product tanθ·sinφ is resolved by
/// approaching along θ — it tends to ±∞ for sinφ ≠ 0 (arctan → ±π/2) and to
/// 0 for sinφ = 0.
fn relative_pattern_e(params: &DirectivityParams, dir: &Direction) -> f64 {
    let arctan_deg = if dir.theta().cos().abs() < TRIG_EPS {
        if dir.phi().sin().abs() < TRIG_EPS {
            0.0
        } else {
            90.0
        }
    } else {
        (dir.theta().tan() * dir.phi().sin()).atan().to_degrees()
    };
    (12.0 * (arctan_deg / params.phi_e_3db_deg).powi(2)).min(params.sll_db)
}

/// Directivity mask in dB: `G_max − min{g_a + g_e, SLL}`. The result lies in
/// `[G_max − SLL, G_max]` for every direction.
pub fn directivity_db(params: &DirectivityParams, dir: &Direction) -> f64 {
    let ga = relative_pattern_a(params, dir);
    let ge = relative_pattern_e(params, dir);
    params.g_max_db - (ga + ge).min(params.sll_db)
}

/// Directivity in linear power scale.
pub fn directivity_linear(params: &DirectivityParams, dir: &Direction) -> f64 {
    crate::db_to_linear(directivity_db(params, dir))
}

/// Normalized beampattern over a θ×φ grid.
#[derive(Debug, Clone)]
pub struct BeampatternGrid {
    /// Grid pitch angles in degrees (ascending, covering [0, 180]).
    pub theta_deg: Vec<f64>,
    /// Grid azimuth angles in degrees (ascending, covering [-180, 180]).
    pub phi_deg: Vec<f64>,
    /// `gain_db[t][p]` — normalized gain at (theta_deg[t], phi_deg[p]); the
    /// grid maximum is exactly 0 dB.
    pub gain_db: Vec<Vec<f64>>,
}

impl BeampatternGrid {
    /// Grid point of the maximum (theta index, phi index).
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_val = f64::NEG_INFINITY;
        for (ti, row) in self.gain_db.iter().enumerate() {
            for (pi, &v) in row.iter().enumerate() {
                if v > best_val {
                    best_val = v;
                    best = (ti, pi);
                }
            }
        }
        best
    }
}

/// Evaluate `10 log10( g(θ,φ) · |a(θ,φ)ᴴ w|² )` over a regular grid and
/// normalize so the grid maximum is 0 dB. The normalization removes any
/// nonzero complex scaling of `w`.
pub fn beampattern_grid(
    geom: &ArrayGeometry,
    params: &DirectivityParams,
    w: &CVector,
    theta_steps: usize,
    phi_steps: usize,
) -> Result<BeampatternGrid, AntennaError> {
    if w.norm() == 0.0 {
        return Err(AntennaError::ZeroWeightVector);
    }
    if w.len() != geom.n_elements() {
        return Err(AntennaError::InvalidGeometry(format!(
            "weight vector length {} does not match {} array elements",
            w.len(),
            geom.n_elements()
        )));
    }
    let theta_steps = theta_steps.max(2);
    let phi_steps = phi_steps.max(2);

    let theta_deg: Vec<f64> = (0..theta_steps)
        .map(|i| 180.0 * i as f64 / (theta_steps - 1) as f64)
        .collect();
    let phi_deg: Vec<f64> = (0..phi_steps)
        .map(|i| -180.0 + 360.0 * i as f64 / (phi_steps - 1) as f64)
        .collect();

    let mut gain_db = vec![vec![0.0; phi_steps]; theta_steps];
    let mut max_db = f64::NEG_INFINITY;
    for (ti, &td) in theta_deg.iter().enumerate() {
        for (pi, &pd) in phi_deg.iter().enumerate() {
            let dir = Direction::from_degrees(td, pd).expect("grid angles are in range");
            let a = steering_vector(geom, &dir);
            let af = a.dotc(w).norm_sqr();
            let g = directivity_linear(params, &dir);
            // Floor keeps log10 finite at exact pattern nulls.
            let db = 10.0 * (g * af).max(1e-300).log10();
            gain_db[ti][pi] = db;
            if db > max_db {
                max_db = db;
            }
        }
    }
    // Cells more than 250 dB below the peak are floating-point cancellation
    // noise, not pattern structure; pin them to a fixed floor.
    for row in &mut gain_db {
        for v in row.iter_mut() {
            *v = (*v - max_db).max(-PATTERN_DYNAMIC_RANGE_DB);
        }
    }
    Ok(BeampatternGrid { theta_deg, phi_deg, gain_db })
}

/// Dynamic range of a normalized beampattern grid: values are clamped to
/// `[-250, 0]` dB relative to the peak.
pub const PATTERN_DYNAMIC_RANGE_DB: f64 = 250.0;
