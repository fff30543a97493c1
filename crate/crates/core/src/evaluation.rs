//! Post-hoc validation of a fixed beamformer: Monte-Carlo outage estimation
//! under the CSI error model, power sweeps across schemes, an exhaustive
//! two-antenna oracle, and the CSV emitters the CLI writes.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelError, ChannelSet, ErrorSqrt};
use crate::metrics::MetricsError;
use crate::optimizer::{
    bisection_search, candidate_feasible, certified_min_asr, power_scale_factor, solve_non_robust,
    solve_perfect_csi, solve_sdr_randomization, AlgorithmConfig, OptimizerError, ProblemSpec,
    Scheme,
};
use crate::rng::{stream, stream_rng};
use crate::{linear_to_db, CVector};
use num_complex::Complex64;

#[derive(Debug)]
pub enum EvaluationError {
    ZeroDraws,
    /// The exhaustive oracle only handles two antennas.
    OracleArity(usize),
    /// No grid point satisfies the hard constraints.
    OracleInfeasible,
    EmptyGrid,
    Metrics(MetricsError),
    Channel(ChannelError),
    Optimizer(OptimizerError),
}

impl std::fmt::Display for EvaluationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EvaluationError::ZeroDraws => write!(f, "Monte-Carlo run needs at least one draw"),
            EvaluationError::OracleArity(n) => {
                write!(f, "exhaustive oracle requires exactly 2 antennas, got {n}")
            }
            EvaluationError::OracleInfeasible => {
                write!(f, "no grid point satisfies the hard constraints")
            }
            EvaluationError::EmptyGrid => write!(f, "search grid must have at least one point"),
            EvaluationError::Metrics(e) => write!(f, "{e}"),
            EvaluationError::Channel(e) => write!(f, "{e}"),
            EvaluationError::Optimizer(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for EvaluationError {}

impl From<MetricsError> for EvaluationError {
    fn from(e: MetricsError) -> Self {
        EvaluationError::Metrics(e)
    }
}

impl From<ChannelError> for EvaluationError {
    fn from(e: ChannelError) -> Self {
        EvaluationError::Channel(e)
    }
}

impl From<OptimizerError> for EvaluationError {
    fn from(e: OptimizerError) -> Self {
        EvaluationError::Optimizer(e)
    }
}

/// Fixed-width histogram over dB values with clamped edges: everything below
/// the range lands in the first bin, everything at or above it in the last.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DbHistogram {
    pub lo_db: f64,
    pub bin_width_db: f64,
    pub counts: Vec<u64>,
}

impl DbHistogram {
    fn new(lo_db: f64, bin_width_db: f64, n_bins: usize) -> Self {
        DbHistogram { lo_db, bin_width_db, counts: vec![0; n_bins] }
    }

    fn bin_of(&self, value_db: f64) -> usize {
        let idx = ((value_db - self.lo_db) / self.bin_width_db).floor();
        (idx as isize).clamp(0, self.counts.len() as isize - 1) as usize
    }

    fn record(&mut self, value_db: f64) {
        let idx = self.bin_of(value_db);
        self.counts[idx] += 1;
    }

    fn merge(mut self, other: &DbHistogram) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let lo = self.lo_db + i as f64 * self.bin_width_db;
        (lo, lo + self.bin_width_db)
    }
}

/// Histogram span around the interference threshold, in dB.
const HIST_BELOW_DB: f64 = 40.0;
const HIST_ABOVE_DB: f64 = 20.0;
const HIST_BIN_DB: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub n_draws: usize,
    /// Rate target the secrecy outage is measured against (bits/s/Hz).
    pub rate_target: f64,
    /// Per-PU probability that the realized interference stays within I_th.
    pub pu_satisfaction: Vec<f64>,
    /// Probability that every PU is within I_th simultaneously.
    pub aggregate_pu_satisfaction: f64,
    /// Outage rate per (SU, Eve) pair: Pr{ R_m − R_e,k < rate_target }.
    pub secrecy_outage: Vec<Vec<f64>>,
    /// Outage of the worst pair: Pr{ min_m R_m − max_k R_e,k < rate_target }.
    pub aggregate_secrecy_outage: f64,
    /// Distribution of the per-draw worst-PU interference (dB); absent when
    /// the scenario has no PUs.
    pub interference_histogram: Option<DbHistogram>,
}

struct DrawTally {
    pu_ok: Vec<u64>,
    all_pu_ok: u64,
    pair_outage: Vec<u64>,
    worst_outage: u64,
    histogram: Option<DbHistogram>,
}

impl DrawTally {
    fn zero(n_pu: usize, n_pairs: usize, i_th_db: f64) -> Self {
        DrawTally {
            pu_ok: vec![0; n_pu],
            all_pu_ok: 0,
            pair_outage: vec![0; n_pairs],
            worst_outage: 0,
            histogram: (n_pu > 0).then(|| {
                let n_bins = ((HIST_BELOW_DB + HIST_ABOVE_DB) / HIST_BIN_DB).round() as usize;
                DbHistogram::new(i_th_db - HIST_BELOW_DB, HIST_BIN_DB, n_bins)
            }),
        }
    }

    fn merge(mut self, other: DrawTally) -> Self {
        for (a, b) in self.pu_ok.iter_mut().zip(&other.pu_ok) {
            *a += b;
        }
        self.all_pu_ok += other.all_pu_ok;
        for (a, b) in self.pair_outage.iter_mut().zip(&other.pair_outage) {
            *a += b;
        }
        self.worst_outage += other.worst_outage;
        self.histogram = match (self.histogram, other.histogram) {
            (Some(a), Some(b)) => Some(a.merge(&b)),
            (a, None) => a,
            (None, b) => b,
        };
        self
    }
}

/// Precomputed per-user error factors: sampling inside the draw loop is then
/// infallible and avoids repeated eigendecompositions.
struct ErrorFactors {
    eve: Vec<Option<ErrorSqrt>>,
    pu: Vec<Option<ErrorSqrt>>,
}

impl ErrorFactors {
    fn new(channels: &ChannelSet) -> Result<Self, EvaluationError> {
        let prepare = |models: &[crate::channel::CsiErrorModel]| {
            models
                .iter()
                .map(|m| (!m.is_zero()).then(|| m.sqrt_factor()).transpose())
                .collect::<Result<Vec<_>, _>>()
        };
        Ok(ErrorFactors { eve: prepare(channels.eve_err())?, pu: prepare(channels.pu_err())? })
    }
}

/// Realized quantities for one CSI error draw. The draw index seeds its own
/// substream, so results are bit-identical for any worker count.
fn one_draw(
    channels: &ChannelSet,
    factors: &ErrorFactors,
    w: &CVector,
    master_seed: u64,
    draw: u64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut rng = stream_rng(master_seed, stream::CSI_ERROR, draw);
    let su_rates: Vec<f64> = channels
        .su_true()
        .iter()
        .zip(channels.su_noise())
        .map(|(h, &s2)| (1.0 + h.dotc(w).norm_sqr() / s2).log2())
        .collect();
    let eve_rates: Vec<f64> = channels
        .eve_est()
        .iter()
        .zip(&factors.eve)
        .zip(channels.eve_noise())
        .map(|((h_hat, factor), &s2)| {
            let h = match factor {
                Some(f) => h_hat + f.sample(&mut rng),
                None => h_hat.clone(),
            };
            (1.0 + h.dotc(w).norm_sqr() / s2).log2()
        })
        .collect();
    let pu_interference: Vec<f64> = channels
        .pu_est()
        .iter()
        .zip(&factors.pu)
        .map(|(h_hat, factor)| {
            let h = match factor {
                Some(f) => h_hat + f.sample(&mut rng),
                None => h_hat.clone(),
            };
            h.dotc(w).norm_sqr()
        })
        .collect();
    (su_rates, eve_rates, pu_interference)
}

/// Estimate outage probabilities for a fixed beamformer by sampling the CSI
/// error model. Counters are integers merged commutatively, so the report is
/// identical for any rayon worker count.
pub fn monte_carlo_outage(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    w: &CVector,
    rate_target: f64,
    n_draws: usize,
    seed: u64,
) -> Result<MonteCarloReport, EvaluationError> {
    if n_draws == 0 {
        return Err(EvaluationError::ZeroDraws);
    }
    let n_su = channels.n_su();
    let n_eve = channels.n_eve();
    let n_pu = channels.n_pu();
    let i_th_db = linear_to_db(problem.i_th);
    let n_pairs = n_su * n_eve;
    let factors = ErrorFactors::new(channels)?;

    let tally = (0..n_draws as u64)
        .into_par_iter()
        .map(|draw| {
            let (su_rates, eve_rates, pu_interference) = one_draw(channels, &factors, w, seed, draw);
            let mut t = DrawTally::zero(n_pu, n_pairs, i_th_db);
            let mut all_ok = true;
            for (q, &i_q) in pu_interference.iter().enumerate() {
                if i_q <= problem.i_th {
                    t.pu_ok[q] = 1;
                } else {
                    all_ok = false;
                }
            }
            t.all_pu_ok = u64::from(all_ok);
            for (m, &r_m) in su_rates.iter().enumerate() {
                for (k, &r_k) in eve_rates.iter().enumerate() {
                    if r_m - r_k < rate_target {
                        t.pair_outage[m * n_eve + k] = 1;
                    }
                }
            }
            let worst = su_rates.iter().copied().fold(f64::INFINITY, f64::min)
                - eve_rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            t.worst_outage = u64::from(worst < rate_target);
            if let Some(h) = t.histogram.as_mut() {
                let peak = pu_interference.iter().copied().fold(0.0f64, f64::max);
                h.record(linear_to_db(peak.max(f64::MIN_POSITIVE)));
            }
            t
        })
        .reduce(|| DrawTally::zero(n_pu, n_pairs, i_th_db), DrawTally::merge);

    let nd = n_draws as f64;
    Ok(MonteCarloReport {
        n_draws,
        rate_target,
        pu_satisfaction: tally.pu_ok.iter().map(|&c| c as f64 / nd).collect(),
        aggregate_pu_satisfaction: tally.all_pu_ok as f64 / nd,
        secrecy_outage: (0..n_su)
            .map(|m| (0..n_eve).map(|k| tally.pair_outage[m * n_eve + k] as f64 / nd).collect())
            .collect(),
        aggregate_secrecy_outage: tally.worst_outage as f64 / nd,
        interference_histogram: tally.histogram,
    })
}

/// Per-draw realized worst-pair secrecy rates, [min_m R_m − max_k R_e,k]⁺.
pub fn realized_secrecy_rates(
    channels: &ChannelSet,
    w: &CVector,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<f64>, EvaluationError> {
    if n_draws == 0 {
        return Err(EvaluationError::ZeroDraws);
    }
    let factors = ErrorFactors::new(channels)?;
    Ok((0..n_draws as u64)
        .into_par_iter()
        .map(|draw| {
            let (su_rates, eve_rates, _) = one_draw(channels, &factors, w, seed, draw);
            let su = su_rates.iter().copied().fold(f64::INFINITY, f64::min);
            let eve = eve_rates.iter().copied().fold(0.0f64, f64::max);
            (su - eve).max(0.0)
        })
        .collect())
}

/// Largest rate R with empirical Pr{ value < R } ≤ p: the ⌊p·n⌋-th order
/// statistic.
pub fn empirical_quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let idx = ((p * sorted.len() as f64).floor() as usize).min(sorted.len() - 1);
    sorted[idx]
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub power_db: f64,
    pub scheme: Scheme,
    /// Certified rate for robust/perfect/SDR; the P_out,2 empirical quantile
    /// of realized rates for the non-robust baseline.
    pub min_asr: f64,
    pub converged: bool,
    pub degraded: bool,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Uniform per-antenna budget at each point, in dB.
    pub powers_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub sdr_candidates: usize,
    /// Draw count behind the non-robust quantile.
    pub nonrobust_draws: usize,
    pub seed: u64,
}

fn sweep_one(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    cfg: &AlgorithmConfig,
    sweep: &SweepConfig,
    power_db: f64,
    scheme: Scheme,
) -> Result<(f64, bool, bool), EvaluationError> {
    let p_lin = crate::db_to_linear(power_db);
    let point = ProblemSpec { power: vec![p_lin; channels.n_antennas()], ..problem.clone() };
    match scheme {
        Scheme::Robust => {
            let sol = bisection_search(channels, &point, cfg)?;
            Ok((sol.min_asr, sol.converged, false))
        }
        Scheme::PerfectCsi => {
            let sol = solve_perfect_csi(channels, &point, cfg)?;
            Ok((sol.min_asr, sol.converged, false))
        }
        Scheme::SdrRandomization => {
            let sol =
                solve_sdr_randomization(channels, &point, cfg, sweep.sdr_candidates, sweep.seed)?;
            Ok((sol.min_asr, sol.converged, sol.degraded))
        }
        Scheme::NonRobust => {
            let sol = solve_non_robust(channels, &point, cfg)?;
            let rates = realized_secrecy_rates(channels, &sol.w, sweep.nonrobust_draws, sweep.seed)?;
            Ok((empirical_quantile(&rates, point.p_out2), sol.converged, false))
        }
    }
}

/// Run every requested scheme at every power point. Failures are recorded in
/// the affected row rather than aborting the sweep.
pub fn power_sweep(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    cfg: &AlgorithmConfig,
    sweep: &SweepConfig,
) -> Vec<SweepPoint> {
    let mut rows = Vec::new();
    for &power_db in &sweep.powers_db {
        for &scheme in &sweep.schemes {
            let t0 = std::time::Instant::now();
            let row = match sweep_one(channels, problem, cfg, sweep, power_db, scheme) {
                Ok((min_asr, converged, degraded)) => SweepPoint {
                    power_db,
                    scheme,
                    min_asr,
                    converged,
                    degraded,
                    wall_time_s: t0.elapsed().as_secs_f64(),
                    error: None,
                },
                Err(e) => SweepPoint {
                    power_db,
                    scheme,
                    min_asr: f64::NAN,
                    converged: false,
                    degraded: false,
                    wall_time_s: t0.elapsed().as_secs_f64(),
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    rows
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub w: CVector,
    pub min_asr: f64,
    /// Grid parameters (t, ψ) of the winning direction.
    pub t: f64,
    pub psi: f64,
}

/// Exhaustive two-antenna oracle: sweep w(t, ψ) = [cos t, sin t·e^{jψ}] over
/// a nested grid (t uses steps+1 points on [0, π/2], ψ uses steps points on
/// [0, 2π)), scale each direction to the per-antenna budget, filter by the
/// hard constraints, and return the best certified rate. Doubling the step
/// counts refines the same lattice, so the result is monotone under
/// refinement.
pub fn brute_force_oracle(
    channels: &ChannelSet,
    problem: &ProblemSpec,
    t_steps: usize,
    psi_steps: usize,
) -> Result<OracleResult, EvaluationError> {
    if channels.n_antennas() != 2 {
        return Err(EvaluationError::OracleArity(channels.n_antennas()));
    }
    if t_steps == 0 || psi_steps == 0 {
        return Err(EvaluationError::EmptyGrid);
    }
    let mut best: Option<OracleResult> = None;
    for it in 0..=t_steps {
        let t = it as f64 * std::f64::consts::FRAC_PI_2 / t_steps as f64;
        let (ct, st) = (t.cos(), t.sin());
        for ip in 0..psi_steps {
            let psi = ip as f64 * std::f64::consts::TAU / psi_steps as f64;
            let dir = CVector::from_vec(vec![
                Complex64::new(ct, 0.0),
                Complex64::from_polar(st, psi),
            ]);
            let Some(scale) = power_scale_factor(&dir, &problem.power) else {
                continue;
            };
            let w = dir * Complex64::new(scale, 0.0);
            if !candidate_feasible(channels, problem, &w, 1e-9)? {
                continue;
            }
            let score = certified_min_asr(channels, problem, &w)?;
            if best.as_ref().is_none_or(|b| score > b.min_asr) {
                best = Some(OracleResult { w: w.clone(), min_asr: score, t, psi });
            }
        }
    }
    best.ok_or(EvaluationError::OracleInfeasible)
}

pub fn beampattern_csv(grid: &crate::antenna::BeampatternGrid) -> String {
    let mut out = String::from("theta_deg,phi_deg,gain_db\n");
    for (i, &th) in grid.theta_deg.iter().enumerate() {
        for (j, &ph) in grid.phi_deg.iter().enumerate() {
            out.push_str(&format!("{th:.6},{ph:.6},{:.6}\n", grid.gain_db[i][j]));
        }
    }
    out
}

/// Render sweep rows as CSV. Wall times are deliberately left out: artifacts
/// must be byte-identical across reruns of the same seeded configuration.
pub fn sweep_csv(rows: &[SweepPoint]) -> String {
    let mut out = String::from("power_db,scheme,min_asr_bps_hz,converged,degraded,error\n");
    for r in rows {
        out.push_str(&format!(
            "{:.6},{},{:.9},{},{},{}\n",
            r.power_db,
            r.scheme.as_str(),
            r.min_asr,
            r.converged,
            r.degraded,
            r.error.as_deref().unwrap_or("")
        ));
    }
    out
}

pub fn histogram_csv(hist: &DbHistogram) -> String {
    let mut out = String::from("bin_low_db,bin_high_db,count\n");
    for (i, &c) in hist.counts.iter().enumerate() {
        let (lo, hi) = hist.bin_edges(i);
        out.push_str(&format!("{lo:.3},{hi:.3},{c}\n"));
    }
    out
}
