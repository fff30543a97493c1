//! Channel synthesis and the imperfect-CSI error model.
//!
//! A user's downlink channel is a gain-weighted superposition of a dominant
//! LoS path and `L` NLoS paths,
//!
//! ```text
//! h = √g(θ₀,φ₀)·ρ₀·a(θ₀,φ₀) + √(1/L) Σ_l √g(θ_l,φ_l)·ρ_l·a(θ_l,φ_l),
//! ```
//!
//! where `g` is the directivity mask and `a` the steering vector. Only the
//! eavesdropper and primary-user channels are imperfectly known: the true
//! channel is `ĥ + Δh̃` with `Δh̃ = E^{1/2} v`, `v ~ CN(0, I)`, so the error
//! covariance `E` fully describes the uncertainty.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::antenna::{steering_vector, ArrayGeometry, DirectivityParams, Direction};
use crate::rng::complex_gaussian_vector;
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    NotHermitian { asymmetry: f64 },
    NotPsd { min_eigenvalue: f64 },
    DimensionMismatch(String),
    InvalidNoise(String),
}

impl std::fmt::Display for ChannelError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelError::NotHermitian { asymmetry } => {
                write!(f, "covariance is not Hermitian (relative asymmetry {asymmetry:.3e})")
            }
            ChannelError::NotPsd { min_eigenvalue } => {
                write!(f, "covariance is not PSD (minimum eigenvalue {min_eigenvalue:.3e})")
            }
            ChannelError::DimensionMismatch(m) => write!(f, "dimension mismatch: {m}"),
            ChannelError::InvalidNoise(m) => write!(f, "invalid noise variance: {m}"),
        }
    }
}

impl std::error::Error for ChannelError {}

/// One propagation path: complex amplitude and arrival direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PathComponent {
    pub gain: Complex64,
    pub dir: Direction,
}

/// Which link a channel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UserRole {
    Su,
    Eve,
    Pu,
}

/// Path-level description of one user's channel.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannelSpec {
    pub los: PathComponent,
    pub nlos: Vec<PathComponent>,
    pub role: UserRole,
}

/// CSI error covariance: either the scalar shorthand ε·I or a full Hermitian
/// PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum CsiErrorModel {
    ScaledIdentity { epsilon: f64, n: usize },
    Full(CMatrix),
}

impl CsiErrorModel {
    pub fn exact(n: usize) -> Self {
        CsiErrorModel::ScaledIdentity { epsilon: 0.0, n }
    }

    pub fn n(&self) -> usize {
        match self {
            CsiErrorModel::ScaledIdentity { n, .. } => *n,
            CsiErrorModel::Full(e) => e.nrows(),
        }
    }

    /// True when the covariance vanishes, i.e. the estimate is exact. The
    /// optimizer collapses the outage machinery to plain linear constraints
    /// in this case.
    pub fn is_zero(&self) -> bool {
        match self {
            CsiErrorModel::ScaledIdentity { epsilon, .. } => *epsilon == 0.0,
            CsiErrorModel::Full(e) => e.iter().all(|c| c.norm() == 0.0),
        }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        match self {
            CsiErrorModel::ScaledIdentity { epsilon, .. } => {
                if *epsilon < 0.0 {
                    Err(ChannelError::NotPsd { min_eigenvalue: *epsilon })
                } else {
                    Ok(())
                }
            }
            CsiErrorModel::Full(e) => {
                matrix_sqrt_psd(e).map(|_| ())
            }
        }
    }

    /// Dense covariance matrix.
    pub fn covariance(&self) -> CMatrix {
        match self {
            CsiErrorModel::ScaledIdentity { epsilon, n } => {
                CMatrix::from_diagonal_element(*n, *n, Complex64::new(*epsilon, 0.0))
            }
            CsiErrorModel::Full(e) => e.clone(),
        }
    }

    /// The factor `E^{1/2}`, as a cheap scalar where possible.
    pub fn sqrt_factor(&self) -> Result<ErrorSqrt, ChannelError> {
        match self {
            CsiErrorModel::ScaledIdentity { epsilon, n } => {
                if *epsilon < 0.0 {
                    return Err(ChannelError::NotPsd { min_eigenvalue: *epsilon });
                }
                Ok(ErrorSqrt::Scaled { factor: epsilon.sqrt(), n: *n })
            }
            CsiErrorModel::Full(e) => Ok(ErrorSqrt::Matrix(matrix_sqrt_psd(e)?)),
        }
    }
}

/// Precomputed `E^{1/2}`, applied per Monte Carlo draw.
#[derive(Debug, Clone)]
pub enum ErrorSqrt {
    Scaled { factor: f64, n: usize },
    Matrix(CMatrix),
}

impl ErrorSqrt {
    pub fn n(&self) -> usize {
        match self {
            ErrorSqrt::Scaled { n, .. } => *n,
            ErrorSqrt::Matrix(s) => s.nrows(),
        }
    }

    /// One error draw `E^{1/2} v`, `v ~ CN(0, I)`.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> CVector {
        let v = complex_gaussian_vector(rng, self.n());
        match self {
            ErrorSqrt::Scaled { factor, .. } => v * Complex64::new(*factor, 0.0),
            ErrorSqrt::Matrix(s) => s * v,
        }
    }
}

/// Hermitian PSD square root via eigendecomposition; eigenvalues in
/// `[−tol, 0)` are clamped to zero, anything lower is an error.
pub fn matrix_sqrt_psd(e: &CMatrix) -> Result<CMatrix, ChannelError> {
    let n = e.nrows();
    if e.ncols() != n {
        return Err(ChannelError::DimensionMismatch(format!(
            "covariance must be square, got {}x{}",
            n,
            e.ncols()
        )));
    }
    let scale = e.norm().max(1.0);
    let asymmetry = (e - e.adjoint()).norm() / scale;
    if asymmetry > 1e-10 {
        return Err(ChannelError::NotHermitian { asymmetry });
    }
    // Symmetrize before factoring so roundoff asymmetry cannot leak into the
    // eigenvectors.
    let herm = (e + e.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let tol = 1e-8 * scale;
    let mut sqrt_vals = Vec::with_capacity(n);
    for &lambda in eig.eigenvalues.iter() {
        if lambda < -tol {
            return Err(ChannelError::NotPsd { min_eigenvalue: lambda });
        }
        sqrt_vals.push(Complex64::new(lambda.max(0.0).sqrt(), 0.0));
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(sqrt_vals));
    Ok(&eig.eigenvectors * d * eig.eigenvectors.adjoint())
}

/// Draw `Δh̃ = E^{1/2} v` from the given stream.
pub fn sample_csi_error(
    model: &CsiErrorModel,
    rng: &mut ChaCha8Rng,
) -> Result<CVector, ChannelError> {
    Ok(model.sqrt_factor()?.sample(rng))
}

/// Synthesize one channel vector from its path decomposition. `params = None`
/// disables the directivity mask (g ≡ 1), which is useful for isolating the
/// array factor.
pub fn synthesize_channel(
    geom: &ArrayGeometry,
    params: Option<&DirectivityParams>,
    spec: &UserChannelSpec,
) -> CVector {
    let amp = |dir: &Direction| -> f64 {
        match params {
            Some(p) => crate::antenna::directivity_linear(p, dir).sqrt(),
            None => 1.0,
        }
    };
    let mut h = steering_vector(geom, &spec.los.dir) * (spec.los.gain * amp(&spec.los.dir));
    if !spec.nlos.is_empty() {
        let w = (1.0 / spec.nlos.len() as f64).sqrt();
        for p in &spec.nlos {
            h += steering_vector(geom, &p.dir) * (p.gain * amp(&p.dir) * w);
        }
    }
    h
}

/// Everything the optimizer and evaluator need to know about the links: true
/// SU channels, estimated Eve/PU channels with their error models, and the
/// noise variances.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    su_true: Vec<CVector>,
    eve_est: Vec<CVector>,
    pu_est: Vec<CVector>,
    eve_err: Vec<CsiErrorModel>,
    pu_err: Vec<CsiErrorModel>,
    su_noise: Vec<f64>,
    eve_noise: Vec<f64>,
}

impl ChannelSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        su_true: Vec<CVector>,
        eve_est: Vec<CVector>,
        pu_est: Vec<CVector>,
        eve_err: Vec<CsiErrorModel>,
        pu_err: Vec<CsiErrorModel>,
        su_noise: Vec<f64>,
        eve_noise: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        if su_true.is_empty() {
            return Err(ChannelError::DimensionMismatch("need at least one SU".into()));
        }
        let n = su_true[0].len();
        for (what, vecs) in [("SU", &su_true), ("Eve", &eve_est), ("PU", &pu_est)] {
            for (i, v) in vecs.iter().enumerate() {
                if v.len() != n {
                    return Err(ChannelError::DimensionMismatch(format!(
                        "{what} channel {i} has length {}, expected {n}",
                        v.len()
                    )));
                }
            }
        }
        if eve_err.len() != eve_est.len() || pu_err.len() != pu_est.len() {
            return Err(ChannelError::DimensionMismatch(format!(
                "error-model counts ({}, {}) must match channel counts ({}, {})",
                eve_err.len(),
                pu_err.len(),
                eve_est.len(),
                pu_est.len()
            )));
        }
        for e in eve_err.iter().chain(pu_err.iter()) {
            if e.n() != n {
                return Err(ChannelError::DimensionMismatch(format!(
                    "error covariance size {} does not match N_h = {n}",
                    e.n()
                )));
            }
            e.validate()?;
        }
        if su_noise.len() != su_true.len() || eve_noise.len() != eve_est.len() {
            return Err(ChannelError::DimensionMismatch(format!(
                "noise counts ({}, {}) must match user counts ({}, {})",
                su_noise.len(),
                eve_noise.len(),
                su_true.len(),
                eve_est.len()
            )));
        }
        for &s in su_noise.iter().chain(eve_noise.iter()) {
            if !(s > 0.0) || !s.is_finite() {
                return Err(ChannelError::InvalidNoise(format!(
                    "variances must be positive and finite, got {s}"
                )));
            }
        }
        Ok(Self { su_true, eve_est, pu_est, eve_err, pu_err, su_noise, eve_noise })
    }

    pub fn n_antennas(&self) -> usize {
        self.su_true[0].len()
    }

    pub fn n_su(&self) -> usize {
        self.su_true.len()
    }

    pub fn n_eve(&self) -> usize {
        self.eve_est.len()
    }

    pub fn n_pu(&self) -> usize {
        self.pu_est.len()
    }

    pub fn su_true(&self) -> &[CVector] {
        &self.su_true
    }

    pub fn eve_est(&self) -> &[CVector] {
        &self.eve_est
    }

    pub fn pu_est(&self) -> &[CVector] {
        &self.pu_est
    }

    pub fn eve_err(&self) -> &[CsiErrorModel] {
        &self.eve_err
    }

    pub fn pu_err(&self) -> &[CsiErrorModel] {
        &self.pu_err
    }

    pub fn su_noise(&self) -> &[f64] {
        &self.su_noise
    }

    pub fn eve_noise(&self) -> &[f64] {
        &self.eve_noise
    }

    /// Copy with all CSI error covariances set to zero — the perfect-CSI
    /// counterfactual of the same scenario.
    pub fn with_exact_csi(&self) -> Self {
        let n = self.n_antennas();
        Self {
            eve_err: vec![CsiErrorModel::exact(n); self.n_eve()],
            pu_err: vec![CsiErrorModel::exact(n); self.n_pu()],
            ..self.clone()
        }
    }
}
