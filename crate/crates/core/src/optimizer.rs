//! The beamformer optimizer: bisection over the secrecy-rate target with an
//! inner penalty-SDP loop that drives the covariance to rank one, plus the
//! three baseline schemes (perfect CSI, SDR randomization, non-robust).
//!
//! At a probe rate `R` the feasibility program maximizes the auxiliary
//! variable τ subject to the SU SNR floor, per-antenna power caps, the τ
//! coupling rows, and the Bernstein outage blocks. The penalty loop then
//! repeatedly maximizes `−η(Tr W − u_jᴴ W u_j)` over the same feasible set,
//! with `u_j` the current principal eigenvector; the penalty objective
//! `F(W) = −η(Tr W − λ_max(W))` is non-decreasing along the iterates, and
//! `Tr W − λ_max(W) → 0` certifies rank one. Bisection keeps the largest
//! probe rate whose inner loop converges.

use num_complex::Complex64;

use crate::bernstein::{
    add_tau_coupling, eve_outage_blocks, outage_exponent, pu_outage_blocks, BernsteinError,
    TauVars,
};
use crate::channel::{ChannelError, ChannelSet};
use crate::conic::{
    extract_rank1, solve, ConicError, ConicProgram, Sense, SolveStatus, SolverConfig,
};
use crate::rng::{complex_gaussian_vector, stream_rng};
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Robust,
    PerfectCsi,
    SdrRandomization,
    NonRobust,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Robust => "robust",
            Scheme::PerfectCsi => "perfect-csi",
            Scheme::SdrRandomization => "sdr-randomization",
            Scheme::NonRobust => "non-robust",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "robust" => Ok(Scheme::Robust),
            "perfect-csi" => Ok(Scheme::PerfectCsi),
            "sdr-randomization" | "sdr" => Ok(Scheme::SdrRandomization),
            "non-robust" => Ok(Scheme::NonRobust),
            other => Err(format!(
                "unknown scheme '{other}' (expected robust, perfect-csi, sdr-randomization, or non-robust)"
            )),
        }
    }
}

/// Constraint family reported when a scenario is infeasible outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintFamily {
    SecrecyOutage,
    InterferenceOutage,
    HardSnrOrPower,
}

impl ConstraintFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConstraintFamily::SecrecyOutage => "secrecy-outage",
            ConstraintFamily::InterferenceOutage => "interference-outage",
            ConstraintFamily::HardSnrOrPower => "hard-snr-or-power",
        }
    }
}

#[derive(Debug)]
pub enum OptimizerError {
    /// No rate is feasible, even at the bracket's lower edge.
    Infeasible { binding: ConstraintFamily },
    SolverFailure { stage: String, status: SolveStatus },
    InvalidConfig(String),
    Bernstein(BernsteinError),
    Conic(ConicError),
    Channel(ChannelError),
}

impl std::fmt::Display for OptimizerError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OptimizerError::Infeasible { binding } => {
                write!(f, "scenario infeasible; binding constraint family: {}", binding.as_str())
            }
            OptimizerError::SolverFailure { stage, status } => {
                write!(f, "solver failure during {stage}: {status:?}")
            }
            OptimizerError::InvalidConfig(m) => write!(f, "invalid configuration: {m}"),
            OptimizerError::Bernstein(e) => write!(f, "{e}"),
            OptimizerError::Conic(e) => write!(f, "{e}"),
            OptimizerError::Channel(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for OptimizerError {}

impl From<BernsteinError> for OptimizerError {
    fn from(e: BernsteinError) -> Self {
        OptimizerError::Bernstein(e)
    }
}

impl From<ConicError> for OptimizerError {
    fn from(e: ConicError) -> Self {
        OptimizerError::Conic(e)
    }
}

impl From<ChannelError> for OptimizerError {
    fn from(e: ChannelError) -> Self {
        OptimizerError::Channel(e)
    }
}

/// Problem-level parameters: thresholds in linear scale, per-antenna power.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    /// SU SNR floor γ_th (linear).
    pub gamma_th: f64,
    /// PU interference threshold I_th (linear).
    pub i_th: f64,
    /// Interference outage tolerance P_out,1.
    pub p_out1: f64,
    /// Secrecy outage tolerance P_out,2.
    pub p_out2: f64,
    /// Per-antenna power budgets P_n (linear).
    pub power: Vec<f64>,
}

impl ProblemSpec {
    pub fn uniform_power(gamma_th: f64, i_th: f64, p_out1: f64, p_out2: f64, p: f64, n: usize) -> Self {
        ProblemSpec { gamma_th, i_th, p_out1, p_out2, power: vec![p; n] }
    }

    pub fn validate(&self, channels: &ChannelSet) -> Result<(), OptimizerError> {
        if self.power.len() != channels.n_antennas() {
            return Err(OptimizerError::InvalidConfig(format!(
                "power vector length {} does not match {} antennas",
                self.power.len(),
                channels.n_antennas()
            )));
        }
        if self.power.iter().any(|&p| !(p > 0.0)) {
            return Err(OptimizerError::InvalidConfig("per-antenna power must be positive".into()));
        }
        if !(self.gamma_th > 0.0) {
            return Err(OptimizerError::InvalidConfig(format!(
                "gamma_th must be positive (linear), got {}",
                self.gamma_th
            )));
        }
        if channels.n_pu() > 0 && !(self.i_th > 0.0) {
            return Err(OptimizerError::InvalidConfig(format!(
                "i_th must be positive (linear), got {}",
                self.i_th
            )));
        }
        for (name, p) in [("p_out1", self.p_out1), ("p_out2", self.p_out2)] {
            if !(p > 0.0 && p < 1.0) {
                return Err(OptimizerError::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn scaled_power(&self, factor: f64) -> Self {
        ProblemSpec {
            power: self.power.iter().map(|p| p * factor).collect(),
            ..self.clone()
        }
    }
}

/// Algorithm tolerances and iteration limits.
#[derive(Debug, Clone)]
pub struct AlgorithmConfig {
    /// Bisection interval tolerance ε₁ (bits/s/Hz).
    pub eps1: f64,
    /// Rank-1 gap tolerance ε₂ as a fraction of Tr(W).
    pub eps2_rel: f64,
    /// Initial penalty weight η.
    pub eta0: f64,
    /// Bisection bracket lower edge R_L.
    pub r_low: f64,
    /// Bracket upper edge R_U; `None` computes the capacity bound
    /// log2(1 + max_m ‖h_m‖²·Σ_n P_n / σ_m²).
    pub r_high: Option<f64>,
    /// Bisection iteration cap.
    pub max_outer: usize,
    /// Penalty iteration cap per probe.
    pub max_inner: usize,
    /// Double η when the iterates stall with the gap still open.
    pub stall_doubling: bool,
    pub solver: SolverConfig,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        AlgorithmConfig {
            eps1: 1e-3,
            eps2_rel: 1e-6,
            eta0: 1.0,
            r_low: 0.0,
            r_high: None,
            max_outer: 64,
            max_inner: 60,
            stall_doubling: true,
            solver: SolverConfig::default(),
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<(), OptimizerError> {
        for (name, v) in [("eps1", self.eps1), ("eps2_rel", self.eps2_rel), ("eta0", self.eta0)] {
            if !(v > 0.0) {
                return Err(OptimizerError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.r_low < 0.0 {
            return Err(OptimizerError::InvalidConfig(format!(
                "r_low must be nonnegative, got {}",
                self.r_low
            )));
        }
        if let Some(rh) = self.r_high {
            if rh <= self.r_low {
                return Err(OptimizerError::InvalidConfig(format!(
                    "r_high ({rh}) must exceed r_low ({})",
                    self.r_low
                )));
            }
        }
        Ok(())
    }
}

/// One inner-loop iterate, for convergence audits.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub rate_probe: f64,
    pub inner_index: usize,
    pub eta: f64,
    /// Tr(W) − λ_max(W) at this iterate.
    pub gap: f64,
    /// F(W) = −η·gap, with η the weight that produced this iterate.
    pub penalty_objective: f64,
}

/// Final output of any scheme.
#[derive(Debug, Clone)]
pub struct BeamformerSolution {
    pub scheme: Scheme,
    pub w: CVector,
    pub w_mat: CMatrix,
    /// Certified worst-case achievable secrecy rate (bits/s/Hz).
    pub min_asr: f64,
    pub rank1_gap: f64,
    pub converged: bool,
    /// SDR only: no random candidate passed the feasibility filter and the
    /// returned vector is best-effort.
    pub degraded: bool,
    pub trace: Vec<IterationRecord>,
    /// Final bisection bracket [R_L, R_U].
    pub rate_interval: (f64, f64),
}

/// Capacity-style upper bound on any achievable rate:
/// log2(1 + max_m ‖h_m‖²·Σ_n P_n / σ_m²).
pub fn auto_rate_upper_bound(channels: &ChannelSet, power: &[f64]) -> f64 {
    let total: f64 = power.iter().sum();
    let best = channels
        .su_true()
        .iter()
        .zip(channels.su_noise())
        .map(|(h, &s2)| h.norm_squared() * total / s2)
        .fold(0.0, f64::max);
    (1.0 + best).log2()
}

/// Which parts of the constraint set to include when building a program.
#[derive(Debug, Clone, Copy)]
struct ConstraintSelection {
    eve: bool,
    pu: bool,
}

fn build_program(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    rate: f64,
    select: ConstraintSelection,
) -> Result<(ConicProgram, TauVars), OptimizerError> {
    let n = channels.n_antennas();
    let mut prog = ConicProgram::new(n);
    let taus = add_tau_coupling(&mut prog, channels);

    // SU SNR floor: γ_th·σ_m² − h_mᴴWh_m ≤ 0.
    for (h_m, &s2) in channels.su_true().iter().zip(channels.su_noise()) {
        let row = prog.quad_form(h_m).scale(-1.0).plus_const(problem.gamma_th * s2);
        prog.add_linear_le(row);
    }
    // Per-antenna power: W_nn ≤ P_n.
    for (i, &p_n) in problem.power.iter().enumerate() {
        prog.add_linear_le(prog.w_diag(i).plus_const(-p_n));
    }
    if select.eve {
        eve_outage_blocks(&mut prog, channels, rate, problem.p_out2, &taus)?;
    }
    if select.pu && channels.n_pu() > 0 {
        pu_outage_blocks(&mut prog, channels, problem.i_th, problem.p_out1)?;
    }
    Ok((prog, taus))
}

fn tau_objective(prog: &ConicProgram, taus: &TauVars) -> crate::conic::LinExpr {
    let mut obj = crate::conic::LinExpr::default();
    for id in taus.ids() {
        obj = obj.add(&prog.scalar(id));
    }
    obj
}

enum FeasibilityOutcome {
    Feasible(CMatrix),
    Infeasible,
}

/// Solve, and on a numerical stall retry once with relaxed tolerances.
/// Probes near the feasibility boundary routinely defeat the tight default
/// accuracy without being meaningfully infeasible.
fn solve_with_retry(
    prog: &ConicProgram,
    solver: &SolverConfig,
) -> Result<crate::conic::SolveReport, OptimizerError> {
    let report = solve(prog, solver)?;
    if matches!(report.status, SolveStatus::Optimal | SolveStatus::Infeasible) {
        return Ok(report);
    }
    let relaxed = SolverConfig {
        tol_feas: solver.tol_feas * 10.0,
        tol_gap: solver.tol_gap * 10.0,
        max_iter: solver.max_iter.saturating_mul(2),
    };
    Ok(solve(prog, &relaxed)?)
}

/// Solve the feasibility program at rate `R` (maximize τ).
fn solve_feasibility(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    rate: f64,
    select: ConstraintSelection,
    solver: &SolverConfig,
) -> Result<FeasibilityOutcome, OptimizerError> {
    let (mut prog, taus) = build_program(channels, problem, rate, select)?;
    let obj = tau_objective(&prog, &taus);
    prog.set_objective(Sense::Maximize, obj);
    let report = solve_with_retry(&prog, solver)?;
    match report.status {
        SolveStatus::Optimal => Ok(FeasibilityOutcome::Feasible(report.w)),
        SolveStatus::Infeasible => Ok(FeasibilityOutcome::Infeasible),
        status => Err(OptimizerError::SolverFailure {
            stage: format!("feasibility program at R = {rate:.6}"),
            status,
        }),
    }
}

/// Identify which constraint family blocks feasibility at the bracket's
/// lower edge, by re-solving with families removed.
fn diagnose_infeasibility(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    rate: f64,
    solver: &SolverConfig,
) -> Result<ConstraintFamily, OptimizerError> {
    let without_eve = ConstraintSelection { eve: false, pu: true };
    if let FeasibilityOutcome::Feasible(_) =
        solve_feasibility(channels, problem, rate, without_eve, solver)?
    {
        return Ok(ConstraintFamily::SecrecyOutage);
    }
    let hard_only = ConstraintSelection { eve: false, pu: false };
    if let FeasibilityOutcome::Feasible(_) =
        solve_feasibility(channels, problem, rate, hard_only, solver)?
    {
        return Ok(ConstraintFamily::InterferenceOutage);
    }
    Ok(ConstraintFamily::HardSnrOrPower)
}

/// Gap and principal eigenvector of a Hermitian PSD iterate.
fn principal_gap(w: &CMatrix) -> (CVector, f64, f64) {
    let herm = (w + w.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    let trace: f64 = eig.eigenvalues.iter().sum();
    let u = eig.eigenvectors.column(idx).into_owned();
    (u, (trace - lambda).max(0.0), trace)
}

/// Outcome of one feasibility-plus-penalty run at a probe rate.
#[derive(Debug)]
pub enum InnerOutcome {
    /// The feasibility program has no solution at this rate.
    InfeasibleAtRate,
    /// Inner loop finished; `converged` reflects whether the rank-1 gap
    /// closed within tolerance.
    Finished { w_mat: CMatrix, gap: f64, converged: bool, records: Vec<IterationRecord> },
}

const ETA_DOUBLING_CAP_EXP: u32 = 20;
const STALL_REL_TOL: f64 = 1e-6;

/// The penalty-SDP inner loop at probe rate `R`.
pub fn penalty_inner_loop(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    rate: f64,
    cfg: &AlgorithmConfig,
) -> Result<InnerOutcome, OptimizerError> {
    let select = ConstraintSelection { eve: true, pu: true };
    let mut w = match solve_feasibility(channels, problem, rate, select, &cfg.solver)? {
        FeasibilityOutcome::Feasible(w0) => w0,
        FeasibilityOutcome::Infeasible => return Ok(InnerOutcome::InfeasibleAtRate),
    };

    let (prog_base, _) = build_program(channels, problem, rate, select)?;
    let eta_cap = cfg.eta0 * (2.0f64).powi(ETA_DOUBLING_CAP_EXP as i32);
    let mut eta = cfg.eta0;
    let mut records = Vec::new();

    let (mut u, mut gap, mut trace) = principal_gap(&w);
    records.push(IterationRecord {
        rate_probe: rate,
        inner_index: 0,
        eta,
        gap,
        penalty_objective: -eta * gap,
    });

    let mut inner = 0usize;
    loop {
        if gap <= cfg.eps2_rel * trace.max(f64::MIN_POSITIVE) {
            return Ok(InnerOutcome::Finished { w_mat: w, gap, converged: true, records });
        }
        if inner >= cfg.max_inner || eta > eta_cap {
            return Ok(InnerOutcome::Finished { w_mat: w, gap, converged: false, records });
        }

        // maximize −η(Tr W − uᴴWu) over the unchanged feasible set.
        let mut prog = prog_base.clone();
        let penalty = prog.quad_form(&u).sub(&prog.w_trace()).scale(eta);
        prog.set_objective(Sense::Maximize, penalty);
        let report = solve_with_retry(&prog, &cfg.solver)?;
        if report.status != SolveStatus::Optimal {
            // The previous iterate is itself feasible, so anything but
            // optimal here is a numerical breakdown, not true infeasibility.
            return Err(OptimizerError::SolverFailure {
                stage: format!("penalty step {inner} at R = {rate:.6}, eta = {eta:.3e}"),
                status: report.status,
            });
        }
        let w_next = report.w;
        let step = (&w_next - &w).norm();
        let (u_next, gap_next, trace_next) = principal_gap(&w_next);

        inner += 1;
        records.push(IterationRecord {
            rate_probe: rate,
            inner_index: inner,
            eta,
            gap: gap_next,
            penalty_objective: -eta * gap_next,
        });

        let stalled = step <= STALL_REL_TOL * w.norm().max(f64::MIN_POSITIVE);
        w = w_next;
        u = u_next;
        gap = gap_next;
        trace = trace_next;

        if cfg.stall_doubling && stalled && gap > cfg.eps2_rel * trace.max(f64::MIN_POSITIVE) {
            eta *= 2.0;
        }
    }
}

struct ProbeSuccess {
    rate: f64,
    w_mat: CMatrix,
    gap: f64,
}

/// Bisection over the rate target (the robust scheme's entry point).
pub fn bisection_search(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    cfg: &AlgorithmConfig,
) -> Result<BeamformerSolution, OptimizerError> {
    cfg.validate()?;
    problem.validate(channels)?;

    let mut r_low = cfg.r_low;
    let mut r_high = cfg
        .r_high
        .unwrap_or_else(|| auto_rate_upper_bound(channels, &problem.power).max(cfg.r_low + 1.0));
    let mut trace_log = Vec::new();

    // The bracket's lower edge must itself be feasible, otherwise the
    // scenario has no solution at any rate.
    let mut best = match penalty_inner_loop(channels, problem, r_low, cfg)? {
        InnerOutcome::Finished { w_mat, gap, converged: true, records } => {
            trace_log.extend(records);
            ProbeSuccess { rate: r_low, w_mat, gap }
        }
        InnerOutcome::Finished { records, .. } => {
            trace_log.extend(records);
            let binding = diagnose_infeasibility(channels, problem, r_low, &cfg.solver)?;
            return Err(OptimizerError::Infeasible { binding });
        }
        InnerOutcome::InfeasibleAtRate => {
            let binding = diagnose_infeasibility(channels, problem, r_low, &cfg.solver)?;
            return Err(OptimizerError::Infeasible { binding });
        }
    };

    let mut outer = 0usize;
    while r_high - r_low > cfg.eps1 && outer < cfg.max_outer {
        let r_mid = 0.5 * (r_low + r_high);
        match penalty_inner_loop(channels, problem, r_mid, cfg) {
            Ok(InnerOutcome::Finished { w_mat, gap, converged: true, records }) => {
                trace_log.extend(records);
                r_low = r_mid;
                best = ProbeSuccess { rate: r_mid, w_mat, gap };
            }
            Ok(InnerOutcome::Finished { records, .. }) => {
                trace_log.extend(records);
                r_high = r_mid;
            }
            Ok(InnerOutcome::InfeasibleAtRate) => {
                r_high = r_mid;
            }
            // A probe the solver cannot certify either way earns no rate
            // credit; only the already-certified bracket edge stands.
            Err(OptimizerError::SolverFailure { .. }) => {
                r_high = r_mid;
            }
            Err(e) => return Err(e),
        }
        outer += 1;
    }

    let (w, _) = extract_rank1(&best.w_mat)?;
    Ok(BeamformerSolution {
        scheme: Scheme::Robust,
        w,
        w_mat: best.w_mat,
        min_asr: best.rate,
        rank1_gap: best.gap,
        converged: true,
        degraded: false,
        trace: trace_log,
        rate_interval: (r_low, r_high),
    })
}

/// Benchmark upper bound: all CSI errors zeroed, hard constraints on the
/// (now exact) estimates.
pub fn solve_perfect_csi(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    cfg: &AlgorithmConfig,
) -> Result<BeamformerSolution, OptimizerError> {
    let exact = channels.with_exact_csi();
    let mut solution = bisection_search(&exact, problem, cfg)?;
    solution.scheme = Scheme::PerfectCsi;
    Ok(solution)
}

/// Baseline that trusts the estimates as exact: the same optimization as
/// perfect CSI, but tagged for evaluation against the true error model.
pub fn solve_non_robust(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    cfg: &AlgorithmConfig,
) -> Result<BeamformerSolution, OptimizerError> {
    let exact = channels.with_exact_csi();
    let mut solution = bisection_search(&exact, problem, cfg)?;
    solution.scheme = Scheme::NonRobust;
    Ok(solution)
}

/// Hermitian PSD square root with negative eigenvalues clamped (solver
/// covariances can carry tolerance-level indefiniteness).
fn psd_sqrt_clamped(w: &CMatrix) -> CMatrix {
    let n = w.nrows();
    let herm = (w + w.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut s = CMatrix::zeros(n, n);
    for i in 0..n {
        let root = eig.eigenvalues[i].max(0.0).sqrt();
        if root > 0.0 {
            let u = eig.eigenvectors.column(i);
            s += (&u * u.adjoint()).scale(root);
        }
    }
    s
}

/// Largest scale factor that keeps per-antenna powers within budget;
/// `None` when the vector is numerically zero.
pub(crate) fn power_scale_factor(w: &CVector, power: &[f64]) -> Option<f64> {
    let mut c2 = f64::INFINITY;
    let mut any = false;
    for (wn, &pn) in w.iter().zip(power) {
        let mag2 = wn.norm_sqr();
        if mag2 > 1e-24 {
            c2 = c2.min(pn / mag2);
            any = true;
        }
    }
    any.then(|| c2.sqrt())
}

/// Certified Bernstein bound for a rank-1 covariance wwᴴ against one
/// imperfectly-known channel: the value B with
/// Pr{ |(ĥ+Δ)ᴴw|² ≥ B + |ĥᴴw|² } ≤ e^{−σ}, computed in closed form from
/// s = E^{1/2}w.
fn rank1_excess_bound(
    err: &crate::channel::CsiErrorModel,
    h_hat: &CVector,
    w: &CVector,
    sigma: f64,
) -> Result<f64, OptimizerError> {
    if err.is_zero() {
        return Ok(0.0);
    }
    let s_w = match err.sqrt_factor()? {
        crate::channel::ErrorSqrt::Scaled { factor, .. } => w * Complex64::new(factor, 0.0),
        crate::channel::ErrorSqrt::Matrix(s) => &s * w,
    };
    // Q = s_w s_wᴴ: Tr = ‖s_w‖², ‖Q‖_F = ‖s_w‖², u⁺ = ‖s_w‖²;
    // b = s_w·(wᴴĥ): ‖b‖² = ‖s_w‖²·|wᴴĥ|².
    let sq = s_w.norm_squared();
    let b2 = sq * w.dotc(h_hat).norm_sqr();
    Ok(sq + (2.0 * sigma).sqrt() * (sq * sq + 2.0 * b2).sqrt() + sigma * sq)
}

/// Worst-case secrecy rate certified by the Bernstein bound for a fixed
/// beamformer: min over (SU, Eve) pairs of the SU rate minus the outage-safe
/// Eve rate, clamped at zero. With exact CSI this reduces to the plain
/// secrecy rate on the estimates.
pub fn certified_min_asr(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    w: &CVector,
) -> Result<f64, OptimizerError> {
    let sigma_h = outage_exponent(problem.p_out2)?;
    let mut worst_eve_rate: f64 = 0.0;
    for ((h_hat, err), &s2e) in channels
        .eve_est()
        .iter()
        .zip(channels.eve_err())
        .zip(channels.eve_noise())
    {
        let bound = rank1_excess_bound(err, h_hat, w, sigma_h)?;
        let power = bound + h_hat.dotc(w).norm_sqr();
        worst_eve_rate = worst_eve_rate.max((1.0 + power / s2e).log2());
    }
    let mut worst: f64 = f64::INFINITY;
    for (h_m, &s2) in channels.su_true().iter().zip(channels.su_noise()) {
        let su_rate = (1.0 + h_m.dotc(w).norm_sqr() / s2).log2();
        worst = worst.min((su_rate - worst_eve_rate).max(0.0));
    }
    Ok(worst)
}

/// Hard-constraint and PU-outage filter for a fixed beamformer.
pub(crate) fn candidate_feasible(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    w: &CVector,
    tol: f64,
) -> Result<bool, OptimizerError> {
    for (w_n, &p_n) in w.iter().zip(&problem.power) {
        if w_n.norm_sqr() > p_n * (1.0 + tol) {
            return Ok(false);
        }
    }
    for (h_m, &s2) in channels.su_true().iter().zip(channels.su_noise()) {
        if h_m.dotc(w).norm_sqr() < problem.gamma_th * s2 * (1.0 - tol) {
            return Ok(false);
        }
    }
    let sigma_g = outage_exponent(problem.p_out1)?;
    for (h_hat, err) in channels.pu_est().iter().zip(channels.pu_err()) {
        let bound = rank1_excess_bound(err, h_hat, w, sigma_g)?;
        if bound + h_hat.dotc(w).norm_sqr() > problem.i_th * (1.0 + tol) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Gaussian randomization over a relaxed covariance: draw candidates
/// `w = W^{1/2}v`, rescale to the power budget, filter by the hard and PU
/// constraints, and keep the best certified secrecy rate.
fn randomize_from(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    w_mat: &CMatrix,
    n_candidates: usize,
    seed: u64,
) -> Result<(CVector, f64, bool), OptimizerError> {
    let sqrt_w = psd_sqrt_clamped(w_mat);
    let n = w_mat.nrows();
    let mut rng = stream_rng(seed, crate::rng::stream::RANDOMIZATION, 0);

    let mut best: Option<(CVector, f64)> = None;
    for _ in 0..n_candidates {
        // One stream, drawn sequentially: a larger candidate budget extends
        // the same sequence, so the best score is monotone in n_candidates.
        let v = complex_gaussian_vector(&mut rng, n);
        let cand = &sqrt_w * v;
        let Some(scale) = power_scale_factor(&cand, &problem.power) else {
            continue;
        };
        let cand = cand * Complex64::new(scale, 0.0);
        if !candidate_feasible(channels, problem, &cand, 1e-9)? {
            continue;
        }
        let score = certified_min_asr(channels, problem, &cand)?;
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((cand, score));
        }
    }

    match best {
        Some((w, score)) => Ok((w, score, false)),
        None => {
            // Degraded path: fall back to the principal component, scaled to
            // the power budget.
            let (w0, _) = extract_rank1(w_mat)?;
            let scale = power_scale_factor(&w0, &problem.power).unwrap_or(0.0);
            let w = w0 * Complex64::new(scale, 0.0);
            let score = certified_min_asr(channels, problem, &w)?;
            Ok((w, score, true))
        }
    }
}

/// SDR baseline: bisection over the relaxed feasibility problem (no rank-1
/// penalty), then Gaussian randomization at the relaxed-optimal rate.
pub fn solve_sdr_randomization(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    cfg: &AlgorithmConfig,
    n_candidates: usize,
    seed: u64,
) -> Result<BeamformerSolution, OptimizerError> {
    if n_candidates == 0 {
        return Err(OptimizerError::InvalidConfig("n_candidates must be at least 1".into()));
    }
    cfg.validate()?;
    problem.validate(channels)?;
    let select = ConstraintSelection { eve: true, pu: true };

    let mut r_low = cfg.r_low;
    let mut r_high = cfg
        .r_high
        .unwrap_or_else(|| auto_rate_upper_bound(channels, &problem.power).max(cfg.r_low + 1.0));

    let mut best = match solve_feasibility(channels, problem, r_low, select, &cfg.solver)? {
        FeasibilityOutcome::Feasible(w) => w,
        FeasibilityOutcome::Infeasible => {
            let binding = diagnose_infeasibility(channels, problem, r_low, &cfg.solver)?;
            return Err(OptimizerError::Infeasible { binding });
        }
    };
    let mut outer = 0usize;
    while r_high - r_low > cfg.eps1 && outer < cfg.max_outer {
        let r_mid = 0.5 * (r_low + r_high);
        match solve_feasibility(channels, problem, r_mid, select, &cfg.solver) {
            Ok(FeasibilityOutcome::Feasible(w)) => {
                r_low = r_mid;
                best = w;
            }
            Ok(FeasibilityOutcome::Infeasible) | Err(OptimizerError::SolverFailure { .. }) => {
                r_high = r_mid;
            }
            Err(e) => return Err(e),
        }
        outer += 1;
    }

    let (_, gap, _) = principal_gap(&best);
    let (w, min_asr, degraded) = randomize_from(channels, problem, &best, n_candidates, seed)?;
    Ok(BeamformerSolution {
        scheme: Scheme::SdrRandomization,
        w,
        min_asr,
        rank1_gap: gap,
        w_mat: best,
        converged: !degraded,
        degraded,
        trace: Vec::new(),
        rate_interval: (r_low, r_high),
    })
}
