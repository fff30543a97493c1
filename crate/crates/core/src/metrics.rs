//! Link metrics: SNR, achievable rates, secrecy rates, and primary-user
//! interference. Rates are in bits/s/Hz (base-2 logs); dB appears only at
//! I/O boundaries.

use crate::channel::ChannelSet;
use crate::CVector;

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    InvalidNoise(f64),
}

impl std::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricsError::InvalidNoise(s) => {
                write!(f, "noise variance must be positive, got {s}")
            }
        }
    }
}

impl std::error::Error for MetricsError {}

/// Per-link figures for one beamformer on one channel set.
#[derive(Debug, Clone)]
pub struct LinkBudget {
    pub snr_su: Vec<f64>,
    pub snr_eve: Vec<f64>,
    pub rate_su: Vec<f64>,
    pub rate_eve: Vec<f64>,
    /// Worst-Eve secrecy rate per SU, clamped at zero.
    pub asr: Vec<f64>,
    pub interference_pu: Vec<f64>,
}

/// Received SNR `|hᴴw|²/σ²`.
pub fn snr(h: &CVector, w: &CVector, sigma2: f64) -> Result<f64, MetricsError> {
    if !(sigma2 > 0.0) {
        return Err(MetricsError::InvalidNoise(sigma2));
    }
    Ok(h.dotc(w).norm_sqr() / sigma2)
}

/// Interference power `|hᴴw|²` delivered to a primary user.
pub fn interference(h: &CVector, w: &CVector) -> f64 {
    h.dotc(w).norm_sqr()
}

/// Shannon rate `log2(1+γ)` in bits/s/Hz.
pub fn rate(gamma: f64) -> f64 {
    (1.0 + gamma).log2()
}

/// Secrecy rate of one SU against the strongest of its eavesdroppers,
/// `[log2(1+γ_m) − max_k log2(1+γ_{e,k})]⁺`. Empty eavesdropper list means
/// no wiretap: the secrecy rate equals the SU rate.
pub fn secrecy_rate(gamma_su: f64, gamma_eves: &[f64]) -> f64 {
    let eve_rate = gamma_eves.iter().copied().fold(0.0, f64::max);
    (rate(gamma_su) - rate(eve_rate)).max(0.0)
}

/// Worst-case achievable secrecy rate: min over SUs of the per-SU secrecy
/// rate against all eavesdroppers. The caller chooses whether the set holds
/// true or sampled Eve channels.
pub fn min_asr(channels: &ChannelSet, eve_true: &[CVector], w: &CVector) -> Result<f64, MetricsError> {
    let gamma_eves: Vec<f64> = eve_true
        .iter()
        .zip(channels.eve_noise())
        .map(|(h, &s2)| snr(h, w, s2))
        .collect::<Result<_, _>>()?;
    let mut worst = f64::INFINITY;
    for (h_m, &s2) in channels.su_true().iter().zip(channels.su_noise()) {
        worst = worst.min(secrecy_rate(snr(h_m, w, s2)?, &gamma_eves));
    }
    Ok(worst)
}

/// Full per-link budget for one beamformer. `eve_true` carries the Eve
/// channels to rate against (true, sampled, or estimated — caller's choice);
/// `pu_true` likewise for interference.
pub fn link_budget(
    channels: &ChannelSet,
    eve_true: &[CVector],
    pu_true: &[CVector],
    w: &CVector,
) -> Result<LinkBudget, MetricsError> {
    let snr_su: Vec<f64> = channels
        .su_true()
        .iter()
        .zip(channels.su_noise())
        .map(|(h, &s2)| snr(h, w, s2))
        .collect::<Result<_, _>>()?;
    let snr_eve: Vec<f64> = eve_true
        .iter()
        .zip(channels.eve_noise())
        .map(|(h, &s2)| snr(h, w, s2))
        .collect::<Result<_, _>>()?;
    let rate_su: Vec<f64> = snr_su.iter().map(|&g| rate(g)).collect();
    let rate_eve: Vec<f64> = snr_eve.iter().map(|&g| rate(g)).collect();
    let asr: Vec<f64> = snr_su.iter().map(|&g| secrecy_rate(g, &snr_eve)).collect();
    let interference_pu: Vec<f64> = pu_true.iter().map(|h| interference(h, w)).collect();
    Ok(LinkBudget { snr_su, snr_eve, rate_su, rate_eve, asr, interference_pu })
}
