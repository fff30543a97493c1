//! Scenario files: a flat TOML format with unit-suffixed keys, defaults for
//! everything except user positions, and deterministic channel synthesis
//! from the master seed.

use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::antenna::{directivity_db, AntennaError, ArrayGeometry, Direction, DirectivityParams};
use crate::channel::{
    synthesize_channel, ChannelError, ChannelSet, CsiErrorModel, PathComponent, UserChannelSpec,
    UserRole,
};
use crate::conic::SolverConfig;
use crate::optimizer::{AlgorithmConfig, ProblemSpec};
use crate::rng::{stream, stream_rng};
use crate::{db_to_linear, linear_to_db};

#[derive(Debug)]
pub enum ScenarioError {
    Io(std::io::Error),
    Parse(toml::de::Error),
    Validation { field: String, message: String },
    Antenna(AntennaError),
    Channel(ChannelError),
}

impl std::fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScenarioError::Io(e) => write!(f, "cannot read scenario file: {e}"),
            ScenarioError::Parse(e) => write!(f, "scenario parse error: {e}"),
            ScenarioError::Validation { field, message } => {
                write!(f, "invalid scenario field `{field}`: {message}")
            }
            ScenarioError::Antenna(e) => write!(f, "{e}"),
            ScenarioError::Channel(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl From<std::io::Error> for ScenarioError {
    fn from(e: std::io::Error) -> Self {
        ScenarioError::Io(e)
    }
}

impl From<toml::de::Error> for ScenarioError {
    fn from(e: toml::de::Error) -> Self {
        ScenarioError::Parse(e)
    }
}

impl From<AntennaError> for ScenarioError {
    fn from(e: AntennaError) -> Self {
        ScenarioError::Antenna(e)
    }
}

impl From<ChannelError> for ScenarioError {
    fn from(e: ChannelError) -> Self {
        ScenarioError::Channel(e)
    }
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserPosition {
    pub theta_deg: f64,
    pub phi_deg: f64,
    /// Line-of-sight amplitude relative to the nominal link, in dB.
    #[serde(default)]
    pub los_gain_db: f64,
}

fn default_sll_db() -> f64 {
    20.0
}
fn default_phi_a() -> f64 {
    70.0
}
fn default_phi_e() -> f64 {
    15.0
}
fn default_n_nlos() -> usize {
    2
}
fn default_nlos_gap() -> [f64; 2] {
    [5.0, 10.0]
}
fn one() -> f64 {
    1.0
}
fn default_gamma_th_db() -> f64 {
    15.0
}
fn default_i_th_db() -> f64 {
    -20.0
}
fn default_p_out() -> f64 {
    0.1
}

/// Flat scenario description. Every key carries its unit in the name; angles
/// are degrees, powers and thresholds are dB, and everything is converted to
/// linear/radians when the scenario is built.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    // Array geometry.
    pub n1: usize,
    pub n2: usize,
    pub wavelength_m: f64,
    /// Element spacings; default λ/2.
    #[serde(default)]
    pub spacing1_m: Option<f64>,
    #[serde(default)]
    pub spacing2_m: Option<f64>,

    // Directivity mask; peak gain defaults to 10·log10(n1·n2).
    #[serde(default)]
    pub g_max_dbi: Option<f64>,
    #[serde(default = "default_sll_db")]
    pub sll_db: f64,
    #[serde(default = "default_phi_a")]
    pub phi_a_3db_deg: f64,
    #[serde(default = "default_phi_e")]
    pub phi_e_3db_deg: f64,

    // Users.
    pub su: Vec<UserPosition>,
    #[serde(default)]
    pub eve: Vec<UserPosition>,
    #[serde(default)]
    pub pu: Vec<UserPosition>,

    // Multipath model.
    #[serde(default = "default_n_nlos")]
    pub n_nlos: usize,
    /// NLoS amplitudes sit this many dB below the LoS amplitude (min, max).
    #[serde(default = "default_nlos_gap")]
    pub nlos_gap_db: [f64; 2],
    /// Flip the gap so NLoS paths dominate instead.
    #[serde(default)]
    pub nlos_dominant: bool,

    // Noise variances (linear, relative to which all thresholds are read).
    #[serde(default = "one")]
    pub sigma2_su: f64,
    #[serde(default = "one")]
    pub sigma2_eve: f64,

    // CSI error scales; `None` selects 0.01·avg(‖ĥ‖²/N) per category.
    #[serde(default)]
    pub epsilon_eve: Option<f64>,
    #[serde(default)]
    pub epsilon_pu: Option<f64>,

    // Thresholds.
    #[serde(default = "default_gamma_th_db")]
    pub gamma_th_db: f64,
    #[serde(default = "default_i_th_db")]
    pub i_th_db: f64,
    #[serde(default = "default_p_out")]
    pub p_out1: f64,
    #[serde(default = "default_p_out")]
    pub p_out2: f64,

    /// Uniform per-antenna power budget.
    #[serde(default)]
    pub power_db: f64,

    // Optimizer overrides; defaults come from `AlgorithmConfig::default()`.
    #[serde(default)]
    pub eps1: Option<f64>,
    #[serde(default)]
    pub eps2_rel: Option<f64>,
    #[serde(default)]
    pub eta0: Option<f64>,
    #[serde(default)]
    pub max_outer: Option<usize>,
    #[serde(default)]
    pub max_inner: Option<usize>,

    #[serde(default)]
    pub seed: u64,
}

/// Everything the pipeline needs, with defaults expanded and units resolved.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub geometry: ArrayGeometry,
    pub directivity: DirectivityParams,
    pub channels: ChannelSet,
    pub problem: ProblemSpec,
    pub algorithm: AlgorithmConfig,
    pub seed: u64,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(invalid("n1/n2", "array dimensions must be at least 1"));
        }
        if !(self.wavelength_m > 0.0) {
            return Err(invalid("wavelength_m", "wavelength must be positive"));
        }
        for (name, v) in [("spacing1_m", self.spacing1_m), ("spacing2_m", self.spacing2_m)] {
            if let Some(s) = v {
                if !(s > 0.0) {
                    return Err(invalid(name, "element spacing must be positive"));
                }
            }
        }
        if !(self.sll_db > 0.0) {
            return Err(invalid("sll_db", "sidelobe level must be positive"));
        }
        for (name, v) in [
            ("phi_a_3db_deg", self.phi_a_3db_deg),
            ("phi_e_3db_deg", self.phi_e_3db_deg),
        ] {
            if !(v > 0.0 && v < 180.0) {
                return Err(invalid(name, "3 dB beamwidth must lie in (0, 180) degrees"));
            }
        }
        if self.su.is_empty() {
            return Err(invalid("su", "at least one SU position is required"));
        }
        for (role, list) in [("su", &self.su), ("eve", &self.eve), ("pu", &self.pu)] {
            for (i, pos) in list.iter().enumerate() {
                if !(pos.theta_deg >= 0.0 && pos.theta_deg <= 180.0) {
                    return Err(invalid(
                        format!("{role}[{i}].theta_deg"),
                        "pitch angle must lie in [0, 180] degrees",
                    ));
                }
                if !(pos.phi_deg >= -180.0 && pos.phi_deg <= 180.0) {
                    return Err(invalid(
                        format!("{role}[{i}].phi_deg"),
                        "azimuth must lie in [-180, 180] degrees",
                    ));
                }
                if !pos.los_gain_db.is_finite() {
                    return Err(invalid(format!("{role}[{i}].los_gain_db"), "must be finite"));
                }
            }
        }
        if !(self.nlos_gap_db[0] >= 0.0 && self.nlos_gap_db[1] >= self.nlos_gap_db[0]) {
            return Err(invalid(
                "nlos_gap_db",
                "gap range must satisfy 0 ≤ min ≤ max (dB)",
            ));
        }
        for (name, v) in [("sigma2_su", self.sigma2_su), ("sigma2_eve", self.sigma2_eve)] {
            if !(v > 0.0) {
                return Err(invalid(name, "noise variance must be positive"));
            }
        }
        for (name, v) in [("epsilon_eve", self.epsilon_eve), ("epsilon_pu", self.epsilon_pu)] {
            if let Some(e) = v {
                if !(e >= 0.0 && e.is_finite()) {
                    return Err(invalid(name, "error scale must be finite and nonnegative"));
                }
            }
        }
        for (name, p) in [("p_out1", self.p_out1), ("p_out2", self.p_out2)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(invalid(name, "outage probability must lie in the open interval (0, 1)"));
            }
        }
        if !self.gamma_th_db.is_finite() {
            return Err(invalid("gamma_th_db", "must be finite"));
        }
        if !self.i_th_db.is_finite() {
            return Err(invalid("i_th_db", "must be finite"));
        }
        if !self.power_db.is_finite() {
            return Err(invalid("power_db", "must be finite"));
        }
        for (name, v) in [("eps1", self.eps1), ("eps2_rel", self.eps2_rel), ("eta0", self.eta0)] {
            if let Some(x) = v {
                if !(x > 0.0) {
                    return Err(invalid(name, "must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<ArrayGeometry, ScenarioError> {
        let half = self.wavelength_m / 2.0;
        Ok(ArrayGeometry::new(
            self.n1,
            self.n2,
            self.spacing1_m.unwrap_or(half),
            self.spacing2_m.unwrap_or(half),
            self.wavelength_m,
        )?)
    }

    pub fn directivity(&self) -> Result<DirectivityParams, ScenarioError> {
        let g_max = self
            .g_max_dbi
            .unwrap_or_else(|| linear_to_db((self.n1 * self.n2) as f64));
        Ok(DirectivityParams::new(
            g_max,
            self.sll_db,
            self.phi_a_3db_deg,
            self.phi_e_3db_deg,
        )?)
    }

    pub fn algorithm(&self) -> AlgorithmConfig {
        let base = AlgorithmConfig::default();
        AlgorithmConfig {
            eps1: self.eps1.unwrap_or(base.eps1),
            eps2_rel: self.eps2_rel.unwrap_or(base.eps2_rel),
            eta0: self.eta0.unwrap_or(base.eta0),
            max_outer: self.max_outer.unwrap_or(base.max_outer),
            max_inner: self.max_inner.unwrap_or(base.max_inner),
            r_low: base.r_low,
            r_high: base.r_high,
            stall_doubling: base.stall_doubling,
            solver: SolverConfig::default(),
        }
    }

    /// Multipath spec for one user. The NLoS draw order per path is fixed
    /// (gap, phase, Δθ, Δφ) so channels are reproducible across runs.
    fn user_spec(
        &self,
        pos: &UserPosition,
        role: UserRole,
        user_index: u64,
    ) -> Result<UserChannelSpec, ScenarioError> {
        let mut rng = stream_rng(self.seed, stream::CHANNEL_SYNTHESIS, user_index);
        let los_amp = db_to_linear(pos.los_gain_db / 2.0);
        let los = PathComponent {
            gain: num_complex::Complex64::new(los_amp, 0.0),
            dir: Direction::from_degrees(pos.theta_deg, pos.phi_deg)?,
        };
        let mut nlos = Vec::with_capacity(self.n_nlos);
        for _ in 0..self.n_nlos {
            let gap_db =
                self.nlos_gap_db[0] + (self.nlos_gap_db[1] - self.nlos_gap_db[0]) * rng.random::<f64>();
            let rel = if self.nlos_dominant {
                db_to_linear(gap_db / 2.0)
            } else {
                db_to_linear(-gap_db / 2.0)
            };
            let phase = std::f64::consts::TAU * rng.random::<f64>();
            let d_theta = 60.0 * rng.random::<f64>() - 30.0;
            let d_phi = 120.0 * rng.random::<f64>() - 60.0;
            let theta = (pos.theta_deg + d_theta).clamp(1.0, 179.0);
            let phi = wrap_degrees(pos.phi_deg + d_phi);
            nlos.push(PathComponent {
                gain: num_complex::Complex64::from_polar(los_amp * rel, phase),
                dir: Direction::from_degrees(theta, phi)?,
            });
        }
        Ok(UserChannelSpec { los, nlos, role })
    }

    pub fn build(&self) -> Result<BuiltScenario, ScenarioError> {
        self.validate()?;
        let geometry = self.geometry()?;
        let directivity = self.directivity()?;
        let n = geometry.n_elements();

        let mut idx = 0u64;
        let mut synth = |pos: &UserPosition, role: UserRole| -> Result<crate::CVector, ScenarioError> {
            let spec = self.user_spec(pos, role, idx)?;
            idx += 1;
            Ok(synthesize_channel(&geometry, Some(&directivity), &spec))
        };

        let su_true: Vec<_> =
            self.su.iter().map(|p| synth(p, UserRole::Su)).collect::<Result<_, _>>()?;
        let eve_est: Vec<_> =
            self.eve.iter().map(|p| synth(p, UserRole::Eve)).collect::<Result<_, _>>()?;
        let pu_est: Vec<_> =
            self.pu.iter().map(|p| synth(p, UserRole::Pu)).collect::<Result<_, _>>()?;

        let auto_eps = |vs: &[crate::CVector]| -> f64 {
            if vs.is_empty() {
                return 0.0;
            }
            0.01 * vs.iter().map(|h| h.norm_squared() / n as f64).sum::<f64>() / vs.len() as f64
        };
        let eps_eve = self.epsilon_eve.unwrap_or_else(|| auto_eps(&eve_est));
        let eps_pu = self.epsilon_pu.unwrap_or_else(|| auto_eps(&pu_est));
        let model = |eps: f64| {
            if eps == 0.0 {
                CsiErrorModel::exact(n)
            } else {
                CsiErrorModel::ScaledIdentity { epsilon: eps, n }
            }
        };

        let channels = ChannelSet::new(
            su_true,
            eve_est,
            pu_est,
            vec![model(eps_eve); self.eve.len()],
            vec![model(eps_pu); self.pu.len()],
            vec![self.sigma2_su; self.su.len()],
            vec![self.sigma2_eve; self.eve.len()],
        )?;

        let problem = ProblemSpec {
            gamma_th: db_to_linear(self.gamma_th_db),
            i_th: db_to_linear(self.i_th_db),
            p_out1: self.p_out1,
            p_out2: self.p_out2,
            power: vec![db_to_linear(self.power_db); n],
        };

        Ok(BuiltScenario {
            geometry,
            directivity,
            channels,
            problem,
            algorithm: self.algorithm(),
            seed: self.seed,
        })
    }
}

pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    ScenarioFile::parse(&text)
}

fn wrap_degrees(phi: f64) -> f64 {
    let wrapped = (phi + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid maps 180 to -180; keep the canonical endpoint.
    if wrapped == -180.0 && phi >= 0.0 {
        180.0
    } else {
        wrapped
    }
}

/// Direction coordinates the array actually resolves: the phase of element
/// (i, j) depends on u = sinθ·cosφ along the first axis and v = sinθ·sinφ
/// along the second.
fn uv(theta_deg: f64, phi_deg: f64) -> (f64, f64) {
    let (t, p) = (theta_deg.to_radians(), phi_deg.to_radians());
    (t.sin() * p.cos(), t.sin() * p.sin())
}

/// Random scenario generator for seeded experiments: users are scattered
/// over the front sector with a minimum separation in the (u, v) coordinates
/// the array resolves, so secrecy and nulling are generically possible. Eves
/// and PUs get a weaker line of sight than SUs.
pub fn random_scenario(
    seed: u64,
    n1: usize,
    n2: usize,
    n_su: usize,
    n_eve: usize,
    n_pu: usize,
) -> ScenarioFile {
    let mut rng = stream_rng(seed, stream::SCENARIO_POSITIONS, 0);
    let min_sep = 0.10;
    let total = n_su + n_eve + n_pu;

    // The element mask concentrates gain in a narrow ridge around boresight;
    // off-ridge users can sit 20 dB down. Serving users must land inside the
    // high-gain zone or the SNR floor is generically unreachable, and primary
    // receivers must sit off the serving ridge or the interference cap forbids
    // any service at all (protecting a receiver inside the beam is hopeless by
    // construction). Eavesdroppers may roam the whole sector.
    let mask = DirectivityParams::new(0.0, default_sll_db(), default_phi_a(), default_phi_e())
        .expect("default mask parameters are valid");
    let attenuation_db = |theta_deg: f64, phi_deg: f64| -> f64 {
        let dir = Direction::new(theta_deg.to_radians(), phi_deg.to_radians())
            .expect("sampled angles lie in the valid sector");
        -directivity_db(&mask, &dir)
    };
    let su_window_db = 8.0;
    let pu_min_offset_db = 12.0;
    let role_ok = |idx: usize, theta_deg: f64, phi_deg: f64| -> bool {
        let a = attenuation_db(theta_deg, phi_deg);
        if idx < n_su {
            a <= su_window_db
        } else if idx >= n_su + n_eve {
            a >= pu_min_offset_db
        } else {
            true
        }
    };

    // Sequential rejection can wedge itself (earlier draws leaving no room
    // for later ones, especially along the single resolvable axis of a
    // degenerate array), so retry whole layouts; the last attempt is kept
    // best-effort for layouts too dense to ever fit.
    let mut angles: Vec<(f64, f64)> = Vec::new();
    'layout: for _ in 0..200 {
        angles.clear();
        let mut taken: Vec<(f64, f64)> = Vec::new();
        'user: while angles.len() < total {
            for _ in 0..500 {
                let theta = 50.0 + 80.0 * rng.random::<f64>();
                let phi = -12.0 + 24.0 * rng.random::<f64>();
                if !role_ok(angles.len(), theta, phi) {
                    continue;
                }
                let (u, v) = uv(theta, phi);
                let far_enough = taken.iter().all(|&(u0, v0)| {
                    // Collapse the metric to the resolvable axes of
                    // degenerate (single-row or single-column) arrays.
                    let (du, dv) = (u - u0, v - v0);
                    let d2 = match (n1 > 1, n2 > 1) {
                        (true, false) => du * du,
                        (false, true) => dv * dv,
                        _ => du * du + dv * dv,
                    };
                    d2 >= min_sep * min_sep
                });
                if far_enough {
                    taken.push((u, v));
                    angles.push((theta, phi));
                    continue 'user;
                }
            }
            continue 'layout;
        }
        break;
    }
    while angles.len() < total {
        let theta = 50.0 + 80.0 * rng.random::<f64>();
        let phi = -12.0 + 24.0 * rng.random::<f64>();
        if !role_ok(angles.len(), theta, phi) {
            continue;
        }
        angles.push((theta, phi));
    }

    let place = |range: std::ops::Range<usize>, los_gain_db: f64| -> Vec<UserPosition> {
        angles[range]
            .iter()
            .map(|&(theta_deg, phi_deg)| UserPosition { theta_deg, phi_deg, los_gain_db })
            .collect()
    };
    let su = place(0..n_su, 0.0);
    let eve = place(n_su..n_su + n_eve, -3.0);
    let pu = place(n_su + n_eve..total, -3.0);

    ScenarioFile {
        n1,
        n2,
        wavelength_m: 0.01,
        spacing1_m: None,
        spacing2_m: None,
        g_max_dbi: None,
        sll_db: default_sll_db(),
        phi_a_3db_deg: default_phi_a(),
        phi_e_3db_deg: default_phi_e(),
        su,
        eve,
        pu,
        n_nlos: default_n_nlos(),
        nlos_gap_db: default_nlos_gap(),
        nlos_dominant: false,
        sigma2_su: 1.0,
        sigma2_eve: 1.0,
        epsilon_eve: None,
        epsilon_pu: None,
        gamma_th_db: 6.0,
        i_th_db: -10.0,
        p_out1: default_p_out(),
        p_out2: default_p_out(),
        power_db: 0.0,
        eps1: None,
        eps2_rel: None,
        eta0: None,
        max_outer: None,
        max_inner: None,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n1 = 4
n2 = 2
wavelength_m = 0.01

[[su]]
theta_deg = 75.0
phi_deg = 0.0

[[eve]]
theta_deg = 50.0
phi_deg = -10.0
"#;

    #[test]
    fn minimal_file_gets_all_defaults() {
        let file = ScenarioFile::parse(MINIMAL).unwrap();
        assert_eq!(file.sll_db, 20.0);
        assert_eq!(file.phi_a_3db_deg, 70.0);
        assert_eq!(file.phi_e_3db_deg, 15.0);
        assert_eq!(file.gamma_th_db, 15.0);
        assert_eq!(file.i_th_db, -20.0);
        assert_eq!(file.p_out1, 0.1);
        assert_eq!(file.p_out2, 0.1);
        assert_eq!(file.n_nlos, 2);
        assert_eq!(file.power_db, 0.0);
        let built = file.build().unwrap();
        assert_eq!(built.geometry.d1_m(), 0.005);
        assert!((built.directivity.g_max_db() - 10.0 * 8.0f64.log10()).abs() < 1e-12);
        assert_eq!(built.channels.n_su(), 1);
        assert_eq!(built.channels.n_eve(), 1);
        assert_eq!(built.channels.n_pu(), 0);
        assert!((built.problem.gamma_th - db_to_linear(15.0)).abs() < 1e-12);
        assert_eq!(built.problem.power, vec![1.0; 8]);
    }

    #[test]
    fn probability_bound_violation_names_the_field() {
        // Top-level keys must precede the [[su]]/[[eve]] tables in TOML.
        let text = format!("p_out1 = 1.5\n{MINIMAL}");
        match ScenarioFile::parse(&text) {
            Err(ScenarioError::Validation { field, message }) => {
                assert_eq!(field, "p_out1");
                assert!(message.contains("(0, 1)"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn angle_bound_violation_names_the_offending_user() {
        let text = MINIMAL.replace("theta_deg = 50.0", "theta_deg = 190.0");
        match ScenarioFile::parse(&text) {
            Err(ScenarioError::Validation { field, .. }) => {
                assert_eq!(field, "eve[0].theta_deg");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("{MINIMAL}\nnot_a_real_key = 1\n");
        assert!(matches!(ScenarioFile::parse(&text), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn build_is_deterministic_and_seed_sensitive() {
        let file = ScenarioFile::parse(MINIMAL).unwrap();
        let a = file.build().unwrap();
        let b = file.build().unwrap();
        assert_eq!(a.channels.su_true()[0], b.channels.su_true()[0]);
        assert_eq!(a.channels.eve_est()[0], b.channels.eve_est()[0]);

        let mut reseeded = file.clone();
        reseeded.seed = 1;
        let c = reseeded.build().unwrap();
        // NLoS components move with the seed.
        assert_ne!(a.channels.su_true()[0], c.channels.su_true()[0]);
    }

    #[test]
    fn without_nlos_the_channel_is_pure_los() {
        let mut file = ScenarioFile::parse(MINIMAL).unwrap();
        file.n_nlos = 0;
        let built = file.build().unwrap();
        let h = &built.channels.su_true()[0];
        let dir = Direction::from_degrees(75.0, 0.0).unwrap();
        let g = crate::antenna::directivity_linear(&built.directivity, &dir);
        assert!((h.norm_squared() - g * 8.0).abs() < 1e-9 * g * 8.0);
    }

    #[test]
    fn nlos_amplitudes_respect_the_gap_and_the_dominance_switch() {
        let file = ScenarioFile::parse(MINIMAL).unwrap();
        let pos = &file.su[0];
        let spec = file.user_spec(pos, UserRole::Su, 0).unwrap();
        let los_amp = spec.los.gain.norm();
        assert_eq!(spec.nlos.len(), 2);
        for p in &spec.nlos {
            let rel_db = 20.0 * (p.gain.norm() / los_amp).log10();
            assert!(
                (-10.0 - 1e-9..=-5.0 + 1e-9).contains(&rel_db),
                "NLoS gap {rel_db} dB outside [-10, -5]"
            );
        }

        let mut flipped = file.clone();
        flipped.nlos_dominant = true;
        let spec = flipped.user_spec(pos, UserRole::Su, 0).unwrap();
        for p in &spec.nlos {
            let rel_db = 20.0 * (p.gain.norm() / los_amp).log10();
            assert!(
                (5.0 - 1e-9..=10.0 + 1e-9).contains(&rel_db),
                "dominant NLoS gap {rel_db} dB outside [5, 10]"
            );
        }
    }

    #[test]
    fn auto_epsilon_follows_channel_strength() {
        let file = ScenarioFile::parse(MINIMAL).unwrap();
        let built = file.build().unwrap();
        let h = &built.channels.eve_est()[0];
        let expect = 0.01 * h.norm_squared() / 8.0;
        match &built.channels.eve_err()[0] {
            CsiErrorModel::ScaledIdentity { epsilon, n } => {
                assert_eq!(*n, 8);
                assert!((epsilon - expect).abs() < 1e-15);
            }
            other => panic!("expected scaled identity, got {other:?}"),
        }
    }

    #[test]
    fn explicit_zero_epsilon_gives_exact_csi() {
        let mut file = ScenarioFile::parse(MINIMAL).unwrap();
        file.epsilon_eve = Some(0.0);
        let built = file.build().unwrap();
        assert!(built.channels.eve_err()[0].is_zero());
    }

    #[test]
    fn los_gain_scales_the_whole_path() {
        let mut file = ScenarioFile::parse(MINIMAL).unwrap();
        file.n_nlos = 0;
        let base = file.build().unwrap().channels.su_true()[0].clone();
        file.su[0].los_gain_db = -6.0;
        let weak = file.build().unwrap().channels.su_true()[0].clone();
        let ratio_db = 10.0 * (weak.norm_squared() / base.norm_squared()).log10();
        assert!((ratio_db + 6.0).abs() < 1e-9);
    }

    #[test]
    fn random_scenarios_are_valid_separated_and_reproducible() {
        let a = random_scenario(3, 4, 2, 2, 3, 2);
        let b = random_scenario(3, 4, 2, 2, 3, 2);
        assert_eq!(a.su.len(), 2);
        assert_eq!(a.eve.len(), 3);
        assert_eq!(a.pu.len(), 2);
        a.validate().unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );

        let positions: Vec<_> = a.su.iter().chain(&a.eve).chain(&a.pu).collect();
        for (i, p) in positions.iter().enumerate() {
            for q in positions.iter().skip(i + 1) {
                let (u1, v1) = uv(p.theta_deg, p.phi_deg);
                let (u2, v2) = uv(q.theta_deg, q.phi_deg);
                let d = ((u1 - u2).powi(2) + (v1 - v2).powi(2)).sqrt();
                assert!(d >= 0.10 - 1e-12, "positions too close: {d}");
            }
        }
        let c = random_scenario(4, 4, 2, 2, 3, 2);
        assert_ne!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }

    #[test]
    fn degenerate_arrays_separate_along_the_resolvable_axis() {
        let file = random_scenario(9, 2, 1, 1, 1, 1);
        let all: Vec<_> = file.su.iter().chain(&file.eve).chain(&file.pu).collect();
        for (i, p) in all.iter().enumerate() {
            for q in all.iter().skip(i + 1) {
                let (u1, _) = uv(p.theta_deg, p.phi_deg);
                let (u2, _) = uv(q.theta_deg, q.phi_deg);
                assert!((u1 - u2).abs() >= 0.10 - 1e-12);
            }
        }
    }

    #[test]
    fn wrap_degrees_stays_in_range() {
        assert_eq!(wrap_degrees(0.0), 0.0);
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-190.0), 170.0);
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), -180.0);
        assert_eq!(wrap_degrees(360.0), 0.0);
    }

    #[test]
    fn bundled_default_scenario_matches_the_documented_setup() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../../scenarios/default.toml");
        let file = load_scenario(&path).unwrap();
        assert_eq!(file.su.len(), 2);
        assert_eq!(file.eve.len(), 3);
        assert_eq!(file.pu.len(), 2);
        assert_eq!(file.gamma_th_db, 15.0);
        assert_eq!(file.i_th_db, -20.0);
        assert_eq!(file.p_out1, 0.1);
        assert_eq!(file.p_out2, 0.1);
        assert_eq!(file.sll_db, 20.0);
        assert_eq!(file.phi_a_3db_deg, 70.0);
        assert_eq!(file.phi_e_3db_deg, 15.0);
        let built = file.build().unwrap();
        assert_eq!(built.channels.n_antennas(), 8);
    }
}

