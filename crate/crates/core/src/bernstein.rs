//! Outage-constraint reformulation.
//!
//! The probabilistic constraints "secrecy outage ≤ P_out,2" and
//! "interference outage ≤ P_out,1" involve quadratic forms of Gaussian CSI
//! errors: with `Δh = E^{1/2}v`, `v ~ CN(0, I)`, each outage event is
//! `vᴴQv + 2Re(vᴴb) ≥ δ` for affine `Q = E^{1/2}·W·E^{1/2}`,
//! `b = E^{1/2}·W·ĥ`. The Bernstein-type concentration bound
//!
//! ```text
//! Pr{ vᴴQv + 2Re(vᴴb) ≥ Tr(Q) + √(2σ)·√(‖Q‖_F² + 2‖b‖²) + σ·u⁺(Q) } ≤ e^{−σ}
//! ```
//!
//! turns each into deterministic convex blocks: one linear row with slack
//! scalars, one second-order cone bounding `√(‖Q‖_F² + 2‖b‖²)` by a slack
//! `α` (or `β`), and one LMI `ξI − Q ⪰ 0` with `ξ ≥ 0` upper-bounding the
//! positive spectral part `u⁺(Q)`. Setting `σ = −ln(P_out)` enforces the
//! target outage level.

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::conic::{CLinExpr, ConicProgram, HermExpr, LinExpr, ScalarId};
use crate::{CMatrix, CVector};

#[derive(Debug, Clone, PartialEq)]
pub enum BernsteinError {
    InvalidOutageProbability(f64),
    InvalidThreshold(f64),
    Channel(crate::channel::ChannelError),
    DimensionMismatch(String),
}

impl std::fmt::Display for BernsteinError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BernsteinError::InvalidOutageProbability(p) => {
                write!(f, "outage probability must lie in (0, 1), got {p}")
            }
            BernsteinError::InvalidThreshold(t) => {
                write!(f, "interference threshold must be positive (linear scale), got {t}")
            }
            BernsteinError::Channel(e) => write!(f, "{e}"),
            BernsteinError::DimensionMismatch(m) => write!(f, "dimension mismatch: {m}"),
        }
    }
}

impl std::error::Error for BernsteinError {}

impl From<crate::channel::ChannelError> for BernsteinError {
    fn from(e: crate::channel::ChannelError) -> Self {
        BernsteinError::Channel(e)
    }
}

/// σ = −ln(P_out); positive exactly when 0 < P_out < 1.
pub fn outage_exponent(p_out: f64) -> Result<f64, BernsteinError> {
    if !(p_out > 0.0 && p_out < 1.0) {
        return Err(BernsteinError::InvalidOutageProbability(p_out));
    }
    Ok(-p_out.ln())
}

/// The auxiliary variable(s) τ linking the SU-side rate to the Eve blocks.
///
/// With uniform SU noise a single τ suffices (the common case); with
/// heterogeneous noise each SU gets its own τ_m and the Eve rows are emitted
/// per (SU, Eve) pair.
#[derive(Debug, Clone)]
pub enum TauVars {
    Uniform { tau: ScalarId, sigma2: f64 },
    PerSu { taus: Vec<ScalarId>, sigma2: Vec<f64> },
}

impl TauVars {
    /// (τ expression, SU noise) pairs the Eve rows must range over.
    fn rows(&self, prog: &ConicProgram) -> Vec<(LinExpr, f64)> {
        match self {
            TauVars::Uniform { tau, sigma2 } => vec![(prog.scalar(*tau), *sigma2)],
            TauVars::PerSu { taus, sigma2 } => taus
                .iter()
                .zip(sigma2)
                .map(|(t, &s2)| (prog.scalar(*t), s2))
                .collect(),
        }
    }

    /// Value of the worst-case τ lower bound achieved by a numeric solution,
    /// for diagnostics.
    pub fn ids(&self) -> Vec<ScalarId> {
        match self {
            TauVars::Uniform { tau, .. } => vec![*tau],
            TauVars::PerSu { taus, .. } => taus.clone(),
        }
    }
}

/// Create τ (or τ_m) and emit the coupling rows
/// `τ ≤ h_mᴴWh_m + σ_m²` for every SU m.
pub fn add_tau_coupling(prog: &mut ConicProgram, channels: &ChannelSet) -> TauVars {
    let noise = channels.su_noise();
    let uniform = noise.iter().all(|&s| s == noise[0]);
    if uniform {
        let tau = prog.add_scalar("tau");
        for (h_m, &s2) in channels.su_true().iter().zip(noise) {
            let row = prog.scalar(tau).sub(&prog.quad_form(h_m)).plus_const(-s2);
            prog.add_linear_le(row);
        }
        TauVars::Uniform { tau, sigma2: noise[0] }
    } else {
        let mut taus = Vec::with_capacity(channels.n_su());
        for (m, (h_m, &s2)) in channels.su_true().iter().zip(noise).enumerate() {
            let tau_m = prog.add_scalar(format!("tau[{m}]"));
            let row = prog.scalar(tau_m).sub(&prog.quad_form(h_m)).plus_const(-s2);
            prog.add_linear_le(row);
            taus.push(tau_m);
        }
        TauVars::PerSu { taus, sigma2: noise.to_vec() }
    }
}

/// Slack variables created for one Eve's outage blocks; absent when the
/// Eve's CSI is exact and the constraint collapses to a single linear row.
#[derive(Debug, Clone)]
pub struct EveBlockGroup {
    pub eve_index: usize,
    pub alpha: Option<ScalarId>,
    pub xi: Option<ScalarId>,
}

/// Slacks for one PU's outage blocks, with the same exact-CSI collapse.
#[derive(Debug, Clone)]
pub struct PuBlockGroup {
    pub pu_index: usize,
    pub beta: Option<ScalarId>,
    pub xi: Option<ScalarId>,
}

/// Emit the secrecy-outage blocks for every Eve at probe rate `R`:
/// per Eve, the linear row
/// `Tr(Q) + √(2σ_h)·α_k + σ_h·ξ_k − δ_{h,k} ≤ 0` with
/// `δ_{h,k} = (σ²_{e,k}/σ²_m)·2^{−R}·τ − ĥ_kᴴWĥ_k − σ²_{e,k}`,
/// the SOC `‖(vec(Q), √2·b)‖ ≤ α_k`, and the LMI `ξ_k·I − Q ⪰ 0, ξ_k ≥ 0`.
pub fn eve_outage_blocks(
    prog: &mut ConicProgram,
    channels: &ChannelSet,
    rate: f64,
    p_out2: f64,
    taus: &TauVars,
) -> Result<Vec<EveBlockGroup>, BernsteinError> {
    let sigma_h = outage_exponent(p_out2)?;
    let n = channels.n_antennas();
    if prog.n() != n {
        return Err(BernsteinError::DimensionMismatch(format!(
            "program matrix size {} vs channel antennas {n}",
            prog.n()
        )));
    }
    let rate_factor = (-rate).exp2();
    let tau_rows = taus.rows(prog);

    let mut groups = Vec::with_capacity(channels.n_eve());
    for (k, (h_hat, err)) in channels
        .eve_est()
        .iter()
        .zip(channels.eve_err())
        .enumerate()
    {
        let sigma2_e = channels.eve_noise()[k];
        let quad_est = prog.quad_form(h_hat);

        if err.is_zero() {
            // Exact CSI: ĥᴴWĥ + σ²_e ≤ (σ²_e/σ²_m)·2^{−R}·τ.
            for (tau_expr, sigma2_m) in &tau_rows {
                let c_tau = sigma2_e / sigma2_m * rate_factor;
                let row = quad_est
                    .plus_const(sigma2_e)
                    .sub(&tau_expr.scale(c_tau));
                prog.add_linear_le(row);
            }
            groups.push(EveBlockGroup { eve_index: k, alpha: None, xi: None });
            continue;
        }

        let sqrt_e = match err.sqrt_factor()? {
            crate::channel::ErrorSqrt::Scaled { factor, n } => {
                CMatrix::from_diagonal_element(n, n, Complex64::new(factor, 0.0))
            }
            crate::channel::ErrorSqrt::Matrix(s) => s,
        };
        let q_expr = prog.sandwich(&sqrt_e);
        let b_expr = prog.matrix_vector(&sqrt_e, h_hat);

        let alpha = prog.add_scalar(format!("alpha[{k}]"));
        let xi = prog.add_scalar(format!("xi_h[{k}]"));

        // Linear row(s): Tr(Q) + √(2σ)α + σξ + ĥᴴWĥ + σ²_e − c_τ·τ ≤ 0.
        let base = trace_expr(&q_expr)
            .add(&prog.scalar(alpha).scale((2.0 * sigma_h).sqrt()))
            .add(&prog.scalar(xi).scale(sigma_h))
            .add(&quad_est)
            .plus_const(sigma2_e);
        for (tau_expr, sigma2_m) in &tau_rows {
            let c_tau = sigma2_e / sigma2_m * rate_factor;
            prog.add_linear_le(base.sub(&tau_expr.scale(c_tau)));
        }

        emit_soc_and_lmi(prog, &q_expr, &b_expr, alpha, xi);
        groups.push(EveBlockGroup { eve_index: k, alpha: Some(alpha), xi: Some(xi) });
    }
    Ok(groups)
}

/// Emit the interference-outage blocks for every PU: per PU the linear row
/// `Tr(Q) + √(2σ_g)·β_q + σ_g·ξ_q − δ_{g,q} ≤ 0` with
/// `δ_{g,q} = I_th − ĥ_qᴴWĥ_q`, plus the SOC and LMI blocks.
pub fn pu_outage_blocks(
    prog: &mut ConicProgram,
    channels: &ChannelSet,
    i_th: f64,
    p_out1: f64,
) -> Result<Vec<PuBlockGroup>, BernsteinError> {
    let sigma_g = outage_exponent(p_out1)?;
    if !(i_th > 0.0) {
        return Err(BernsteinError::InvalidThreshold(i_th));
    }
    let n = channels.n_antennas();
    if prog.n() != n {
        return Err(BernsteinError::DimensionMismatch(format!(
            "program matrix size {} vs channel antennas {n}",
            prog.n()
        )));
    }

    let mut groups = Vec::with_capacity(channels.n_pu());
    for (q_idx, (h_hat, err)) in channels.pu_est().iter().zip(channels.pu_err()).enumerate() {
        let quad_est = prog.quad_form(h_hat);

        if err.is_zero() {
            // Exact CSI: ĥ_qᴴWĥ_q ≤ I_th.
            prog.add_linear_le(quad_est.plus_const(-i_th));
            groups.push(PuBlockGroup { pu_index: q_idx, beta: None, xi: None });
            continue;
        }

        let sqrt_e = match err.sqrt_factor()? {
            crate::channel::ErrorSqrt::Scaled { factor, n } => {
                CMatrix::from_diagonal_element(n, n, Complex64::new(factor, 0.0))
            }
            crate::channel::ErrorSqrt::Matrix(s) => s,
        };
        let q_expr = prog.sandwich(&sqrt_e);
        let b_expr = prog.matrix_vector(&sqrt_e, h_hat);

        let beta = prog.add_scalar(format!("beta[{q_idx}]"));
        let xi = prog.add_scalar(format!("xi_g[{q_idx}]"));

        let row = trace_expr(&q_expr)
            .add(&prog.scalar(beta).scale((2.0 * sigma_g).sqrt()))
            .add(&prog.scalar(xi).scale(sigma_g))
            .add(&quad_est)
            .plus_const(-i_th);
        prog.add_linear_le(row);

        emit_soc_and_lmi(prog, &q_expr, &b_expr, beta, xi);
        groups.push(PuBlockGroup { pu_index: q_idx, beta: Some(beta), xi: Some(xi) });
    }
    Ok(groups)
}

fn trace_expr(q: &HermExpr) -> LinExpr {
    let mut e = LinExpr::default();
    for i in 0..q.n() {
        e.add_assign(&q.entry(i, i).re, 1.0);
    }
    e
}

/// The SOC `‖(vec(Q), √2·b)‖ ≤ slack` over the real embedding of the complex
/// entries (column-major vec), and the LMI `ξI − Q ⪰ 0` with `ξ ≥ 0`.
fn emit_soc_and_lmi(
    prog: &mut ConicProgram,
    q_expr: &HermExpr,
    b_expr: &[CLinExpr],
    soc_slack: ScalarId,
    xi: ScalarId,
) {
    let n = q_expr.n();
    let mut tail = Vec::with_capacity(2 * n * n + 2 * n);
    for j in 0..n {
        for i in 0..n {
            let e = q_expr.entry(i, j);
            tail.push(e.re);
            tail.push(e.im);
        }
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for e in b_expr {
        tail.push(e.re.scale(sqrt2));
        tail.push(e.im.scale(sqrt2));
    }
    prog.add_soc(prog.scalar(soc_slack), tail);

    let xi_expr = prog.scalar(xi);
    let lmi = HermExpr::from_fn(n, |i, j| {
        let q_ij = q_expr.entry(i, j);
        if i == j {
            CLinExpr { re: xi_expr.sub(&q_ij.re), im: LinExpr::default() }
        } else {
            CLinExpr { re: q_ij.re.scale(-1.0), im: q_ij.im.scale(-1.0) }
        }
    });
    prog.add_psd(lmi);
    prog.add_linear_le(xi_expr.scale(-1.0));
}

/// Closed-form deterministic bound
/// `Tr(Q) + √(2σ)·√(‖Q‖_F² + 2‖b‖²) + σ·u⁺(Q)` with `u⁺` the positive part
/// of the largest eigenvalue. The probability that `vᴴQv + 2Re(vᴴb)`
/// exceeds this value is at most `e^{−σ}`.
pub fn bernstein_bound(q: &CMatrix, b: &CVector, sigma: f64) -> f64 {
    let trace = q.diagonal().iter().map(|c| c.re).sum::<f64>();
    let fro2 = q.norm_squared();
    let b2 = b.norm_squared();
    let herm = (q + q.adjoint()).scale(0.5);
    let lambda_max = herm
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    trace + (2.0 * sigma).sqrt() * (fro2 + 2.0 * b2).sqrt() + sigma * lambda_max.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelSet, CsiErrorModel};
    use crate::conic::{solve, Sense, SolveStatus, SolverConfig};
    use crate::rng::{complex_gaussian_vector, stream_rng};

    fn cvec(entries: &[(f64, f64)]) -> CVector {
        CVector::from_iterator(entries.len(), entries.iter().map(|&(r, i)| Complex64::new(r, i)))
    }

    fn toy_channels(eve_eps: f64, pu_eps: f64) -> ChannelSet {
        let n = 2;
        ChannelSet::new(
            vec![cvec(&[(1.0, 0.0), (0.5, 0.2)])],
            vec![cvec(&[(0.3, 0.1), (-0.2, 0.4)])],
            vec![cvec(&[(0.2, -0.3), (0.1, 0.1)])],
            vec![CsiErrorModel::ScaledIdentity { epsilon: eve_eps, n }],
            vec![CsiErrorModel::ScaledIdentity { epsilon: pu_eps, n }],
            vec![1.0],
            vec![1.0],
        )
        .unwrap()
    }

    #[test]
    fn outage_exponent_domain() {
        assert!((outage_exponent(0.1).unwrap() - 2.3025850929940455).abs() < 1e-14);
        assert!(outage_exponent(0.0).is_err());
        assert!(outage_exponent(1.0).is_err());
        assert!(outage_exponent(-0.2).is_err());
        assert!(outage_exponent(1.5).is_err());
    }

    #[test]
    fn bound_identity_case() {
        // Q = I₂, b = 0, P_out = 0.1.
        let q = CMatrix::identity(2, 2);
        let b = CVector::zeros(2);
        let sigma = outage_exponent(0.1).unwrap();
        let bound = bernstein_bound(&q, &b, sigma);
        assert!((bound - 7.337439351764338).abs() < 1e-9, "bound = {bound}");
    }

    #[test]
    fn bound_probability_monte_carlo() {
        // vᴴv with v ~ CN(0, I₂) is Gamma(2,1); the exact tail at the bound
        // is (1+t)e^{−t} ≈ 0.005425 — far below the 0.1 target, reflecting
        // the bound's conservatism.
        let bound = 7.337439351764338;
        let analytic = 0.005425293852298473;
        let n_draws = 1_000_000usize;
        let mut rng = stream_rng(2024, "bernstein-mc", 0);
        let mut exceed = 0usize;
        for _ in 0..n_draws {
            let v = complex_gaussian_vector(&mut rng, 2);
            if v.norm_squared() >= bound {
                exceed += 1;
            }
        }
        let emp = exceed as f64 / n_draws as f64;
        assert!((emp - analytic).abs() < 0.0015, "empirical {emp} vs analytic {analytic}");
        assert!(emp <= 0.1);
    }

    #[test]
    fn bound_negative_definite_spectral_part_vanishes() {
        // u⁺ clamps at zero for negative-definite Q.
        let q = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(-1.0, 0.0),
            Complex64::new(-2.0, 0.0),
        ]));
        let b = CVector::zeros(2);
        let sigma = 1.0;
        let expect = -3.0 + (2.0f64).sqrt() * (5.0f64).sqrt();
        assert!((bernstein_bound(&q, &b, sigma) - expect).abs() < 1e-12);
    }

    /// Count (eq, le, soc, psd) blocks in a program (the implicit W block is
    /// not included).
    fn block_counts(prog: &ConicProgram) -> (usize, usize, usize, usize) {
        let mut counts = (0, 0, 0, 0);
        for b in &prog.blocks {
            match b {
                crate::conic::Block::LinearEq(_) => counts.0 += 1,
                crate::conic::Block::LinearLe(_) => counts.1 += 1,
                crate::conic::Block::Soc { .. } => counts.2 += 1,
                crate::conic::Block::Psd(_) => counts.3 += 1,
            }
        }
        counts
    }

    #[test]
    fn exact_csi_collapses_to_linear_rows() {
        let channels = toy_channels(0.0, 0.0);
        let mut prog = ConicProgram::new(2);
        let taus = add_tau_coupling(&mut prog, &channels);
        let eve = eve_outage_blocks(&mut prog, &channels, 1.0, 0.1, &taus).unwrap();
        let pu = pu_outage_blocks(&mut prog, &channels, 0.01, 0.1).unwrap();
        assert!(eve[0].alpha.is_none() && eve[0].xi.is_none());
        assert!(pu[0].beta.is_none() && pu[0].xi.is_none());
        let (eq, le, soc, psd) = block_counts(&prog);
        assert_eq!(eq, 0);
        assert_eq!(soc, 0);
        assert_eq!(psd, 0);
        // 1 tau coupling + 1 eve row + 1 pu row.
        assert_eq!(le, 3);
    }

    #[test]
    fn imperfect_csi_emits_full_block_structure() {
        let channels = toy_channels(0.01, 0.02);
        let mut prog = ConicProgram::new(2);
        let taus = add_tau_coupling(&mut prog, &channels);
        let eve = eve_outage_blocks(&mut prog, &channels, 1.0, 0.1, &taus).unwrap();
        let pu = pu_outage_blocks(&mut prog, &channels, 0.01, 0.1).unwrap();
        assert!(eve[0].alpha.is_some() && eve[0].xi.is_some());
        assert!(pu[0].beta.is_some() && pu[0].xi.is_some());
        let (eq, le, soc, psd) = block_counts(&prog);
        assert_eq!(eq, 0);
        // 1 tau coupling + per group: 1 bound row + 1 ξ ≥ 0 row.
        assert_eq!(le, 1 + 2 + 2);
        assert_eq!(soc, 2);
        assert_eq!(psd, 2);
    }

    #[test]
    fn rejects_bad_probabilities_and_threshold() {
        let channels = toy_channels(0.01, 0.01);
        let mut prog = ConicProgram::new(2);
        let taus = add_tau_coupling(&mut prog, &channels);
        assert!(matches!(
            eve_outage_blocks(&mut prog, &channels, 1.0, 0.0, &taus),
            Err(BernsteinError::InvalidOutageProbability(_))
        ));
        assert!(matches!(
            pu_outage_blocks(&mut prog, &channels, -0.5, 0.1),
            Err(BernsteinError::InvalidThreshold(_))
        ));
        assert!(matches!(
            pu_outage_blocks(&mut prog, &channels, 0.01, 1.2),
            Err(BernsteinError::InvalidOutageProbability(_))
        ));
    }

    /// All emitted rows must be affine: midpoint evaluation agrees with the
    /// mean of endpoint evaluations on every expression in the program.
    #[test]
    fn emitted_blocks_are_affine() {
        let channels = toy_channels(0.05, 0.02);
        let mut prog = ConicProgram::new(2);
        let taus = add_tau_coupling(&mut prog, &channels);
        eve_outage_blocks(&mut prog, &channels, 0.7, 0.1, &taus).unwrap();
        pu_outage_blocks(&mut prog, &channels, 0.01, 0.05).unwrap();

        let mut rng = stream_rng(8, "affine-check", 0);
        let nv = prog.n_vars();
        let x1: Vec<f64> = (0..nv).map(|_| crate::rng::complex_gaussian(&mut rng).re).collect();
        let x2: Vec<f64> = (0..nv).map(|_| crate::rng::complex_gaussian(&mut rng).re).collect();
        let mid: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 0.5 * (a + b)).collect();

        let mut check = |e: &LinExpr| {
            let lhs = e.eval(&mid);
            let rhs = 0.5 * (e.eval(&x1) + e.eval(&x2));
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
        };
        for b in &prog.blocks {
            match b {
                crate::conic::Block::LinearEq(rows) | crate::conic::Block::LinearLe(rows) => {
                    rows.iter().for_each(&mut check)
                }
                crate::conic::Block::Soc { head, tail } => {
                    check(head);
                    tail.iter().for_each(&mut check);
                }
                crate::conic::Block::Psd(h) => {
                    for i in 0..h.n() {
                        for j in 0..h.n() {
                            let e = h.entry(i, j);
                            check(&e.re);
                            check(&e.im);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_beamformer_satisfies_pu_blocks() {
        let channels = toy_channels(0.0, 0.03);
        let mut prog = ConicProgram::new(2);
        pu_outage_blocks(&mut prog, &channels, 0.01, 0.1).unwrap();
        // W = 0, β = ξ = 0.
        let x = prog.pack(&CMatrix::zeros(2, 2), &[0.0, 0.0]).unwrap();
        for b in &prog.blocks {
            match b {
                crate::conic::Block::LinearLe(rows) => {
                    for r in rows {
                        assert!(r.eval(&x) <= 1e-12);
                    }
                }
                crate::conic::Block::Soc { head, tail } => {
                    let t: f64 = tail.iter().map(|e| e.eval(&x).powi(2)).sum::<f64>().sqrt();
                    assert!(t <= head.eval(&x) + 1e-12);
                }
                crate::conic::Block::Psd(h) => {
                    let m = h.eval(&x);
                    let min_eig = m
                        .symmetric_eigen()
                        .eigenvalues
                        .iter()
                        .copied()
                        .fold(f64::INFINITY, f64::min);
                    assert!(min_eig >= -1e-12);
                }
                crate::conic::Block::LinearEq(_) => {}
            }
        }
    }

    /// Build the feasibility program: maximize τ under eve + pu blocks and a
    /// total-power cap.
    fn feasibility_tau(channels: &ChannelSet, rate: f64) -> (SolveStatus, f64) {
        let mut prog = ConicProgram::new(channels.n_antennas());
        let taus = add_tau_coupling(&mut prog, channels);
        eve_outage_blocks(&mut prog, channels, rate, 0.1, &taus).unwrap();
        pu_outage_blocks(&mut prog, channels, 0.05, 0.1).unwrap();
        for i in 0..channels.n_antennas() {
            prog.add_linear_le(prog.w_diag(i).plus_const(-1.0));
        }
        let tau_id = taus.ids()[0];
        prog.set_objective(Sense::Maximize, prog.scalar(tau_id));
        let report = solve(&prog, &SolverConfig::default()).unwrap();
        (report.status, report.objective)
    }

    #[test]
    fn feasible_at_zero_rate_toy_instance() {
        let channels = toy_channels(0.01, 0.01);
        let (status, _) = feasibility_tau(&channels, 0.0);
        assert_eq!(status, SolveStatus::Optimal);
    }

    #[test]
    fn lower_rate_never_tightens() {
        let channels = toy_channels(0.02, 0.01);
        let (s1, tau1) = feasibility_tau(&channels, 0.3);
        let (s2, tau2) = feasibility_tau(&channels, 0.1);
        assert_eq!(s1, SolveStatus::Optimal);
        assert_eq!(s2, SolveStatus::Optimal);
        // δ grows as R shrinks, so the optimal τ cannot decrease.
        assert!(tau2 >= tau1 - 1e-6, "tau at lower rate {tau2} < tau at higher rate {tau1}");
    }

    #[test]
    fn exact_csi_is_pointwise_limit() {
        // Shrinking E toward zero relaxes the blocks: the achievable τ under
        // ε > 0 is no larger than under ε = 0.
        let with_err = toy_channels(0.05, 0.05);
        let exact = with_err.with_exact_csi();
        let (s_err, tau_err) = feasibility_tau(&with_err, 0.1);
        let (s_exact, tau_exact) = feasibility_tau(&exact, 0.1);
        assert_eq!(s_err, SolveStatus::Optimal);
        assert_eq!(s_exact, SolveStatus::Optimal);
        assert!(tau_exact >= tau_err - 1e-6);
    }

    #[test]
    fn heterogeneous_noise_emits_per_su_taus() {
        let n = 2;
        let channels = ChannelSet::new(
            vec![cvec(&[(1.0, 0.0), (0.5, 0.2)]), cvec(&[(0.4, 0.3), (0.8, 0.0)])],
            vec![cvec(&[(0.3, 0.1), (-0.2, 0.4)])],
            vec![],
            vec![CsiErrorModel::ScaledIdentity { epsilon: 0.01, n }],
            vec![],
            vec![1.0, 2.0],
            vec![1.0],
        )
        .unwrap();
        let mut prog = ConicProgram::new(n);
        let taus = add_tau_coupling(&mut prog, &channels);
        assert_eq!(taus.ids().len(), 2);
        let groups = eve_outage_blocks(&mut prog, &channels, 0.5, 0.1, &taus).unwrap();
        assert_eq!(groups.len(), 1);
        // Two bound rows for the single Eve (one per SU), plus two coupling
        // rows and one ξ ≥ 0 row.
        let (_, le, soc, psd) = block_counts(&prog);
        assert_eq!(le, 2 + 2 + 1);
        assert_eq!(soc, 1);
        assert_eq!(psd, 1);
    }
}

