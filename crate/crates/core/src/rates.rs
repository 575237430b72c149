//! SNRs, finite-blocklength URLLC rates, punctured eMBB rates and delay.

use std::f64::consts::{LOG2_E, SQRT_2};

use crate::error::{Error, Result};
use crate::sim_physics::{CVector, C64};

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`qfunc`] by bisection followed by a Newton polish.
pub fn qfunc_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("Q⁻¹ needs p in (0,1), got {p}")));
    }
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if qfunc(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf == 0.0 {
            break;
        }
        let step = (qfunc(x) - p) / pdf;
        let next = x + step;
        if !next.is_finite() || (qfunc(next) - p).abs() >= (qfunc(x) - p).abs() {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Smallest `k` with `P(Poisson(mean) ≤ k) ≥ gamma`.
pub fn poisson_icdf(mean: f64, gamma: f64) -> Result<u64> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::Domain(format!("Poisson mean must be positive, got {mean}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0,1), got {gamma}")));
    }
    let mut term = (-mean).exp();
    let mut cdf = term;
    let mut k = 0u64;
    while cdf < gamma {
        k += 1;
        term *= mean / k as f64;
        cdf += term;
        if term == 0.0 && cdf < gamma {
            // Remaining mass is below double precision; the tail is exhausted.
            break;
        }
    }
    Ok(k)
}

/// `active · |hᴴ θ_col|² · p / σ²`.
pub fn snr(h: &CVector, theta_col: &[C64], p: f64, noise: f64, active: bool) -> f64 {
    if !active {
        return 0.0;
    }
    channel_gain(h, theta_col) * p / noise
}

/// `|hᴴ v|²`.
pub fn channel_gain(h: &CVector, v: &[C64]) -> f64 {
    h.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr()
}

/// Dispersion penalty `√(1/T_b) Q⁻¹(ε) log2 e` in bits per channel use.
pub fn fbl_penalty(blocklength: f64, decode_err: f64) -> Result<f64> {
    if !(blocklength >= 1.0) {
        return Err(Error::Domain(format!("blocklength must be ≥ 1, got {blocklength}")));
    }
    Ok((1.0 / blocklength).sqrt() * qfunc_inv(decode_err)? * LOG2_E)
}

/// `(B / I) · max(0, log2(1 + γ) − κ)` with a precomputed penalty `κ`.
pub fn fbl_rate_with_penalty(gamma: f64, share: f64, kappa: f64) -> f64 {
    share * ((1.0 + gamma).log2() - kappa).max(0.0)
}

pub fn fbl_rate(gamma: f64, bandwidth: f64, minislots: usize, blocklength: f64, decode_err: f64) -> Result<f64> {
    let kappa = fbl_penalty(blocklength, decode_err)?;
    Ok(fbl_rate_with_penalty(gamma, bandwidth / minislots as f64, kappa))
}

pub fn punctured_embb_rate(gamma: f64, bandwidth: f64, eta: f64) -> f64 {
    eta * bandwidth * (1.0 + gamma).log2()
}

/// `L / r + t_comp`, infinite for a zero rate.
pub fn e2e_delay(rate: f64, packet_bits: f64, t_comp: f64) -> f64 {
    if rate > 0.0 {
        packet_bits / rate + t_comp
    } else {
        f64::INFINITY
    }
}

/// Minimum rate meeting the delay bound `t_max`.
pub fn delay_rate_floor(packet_bits: f64, t_max: f64, t_comp: f64) -> f64 {
    packet_bits / (t_max - t_comp)
}

/// Minimum rate from the reliability quantile of the arrival count.
pub fn reliability_rate_floor(packet_bits: f64, arrival_rate: f64, reliability: f64) -> Result<f64> {
    Ok(packet_bits * poisson_icdf(arrival_rate, reliability)? as f64)
}
