//! Exponential bounds and the return probabilities of the house-of-cards
//! chain. Everything here is a pure function of scalar constants.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// `e^{1/e}`.
pub fn e_to_inv_e() -> f64 {
    E.powf(1.0 / E)
}

/// `C = α₀ / (8e(α + α₀))`.
pub fn c_constant(alpha0: f64, alpha_sum: f64) -> f64 {
    alpha0 / (8.0 * E * (alpha_sum + alpha0))
}

/// `P(|N_n(wa) − (n−ℓ(w))p(wa)| > t) ≤ e^{1/e} exp[−t²C / ((n−ℓ(w))ℓ(wa))]`.
///
/// Raw value, not clamped to `[0, 1]`.
pub fn count_deviation_bound(c: f64, word_len: usize, t: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::PreconditionViolation(format!(
            "t = {t} must be positive"
        )));
    }
    if n <= word_len {
        return Err(Error::PreconditionViolation(format!(
            "n = {n} must exceed the word length {word_len}"
        )));
    }
    let span = (n - word_len) as f64;
    Ok(e_to_inv_e() * (-t * t * c / (span * (word_len + 1) as f64)).exp())
}

/// Smallest admissible `n` is anything strictly above this value.
pub fn phat_deviation_threshold(alphabet_size: usize, word_len: usize, t: f64, p_w: f64) -> f64 {
    (alphabet_size as f64 + 1.0) / (t * p_w) + word_len as f64
}

/// `P(|p̂_n(a|w) − p(a|w)| > t) ≤ 2|A|e^{1/e} exp[−(n−ℓ(w)) t'² p(w)² C / (4|A|²ℓ(wa))]`
/// with `t' = t − (|A|+1)/((n−ℓ(w))p(w))`.
pub fn phat_deviation_bound(
    c: f64,
    alphabet_size: usize,
    word_len: usize,
    p_w: f64,
    t: f64,
    n: usize,
) -> Result<f64> {
    if !(p_w > 0.0) {
        return Err(Error::PreconditionViolation(format!(
            "p(w) = {p_w} must be positive"
        )));
    }
    if !(t > 0.0) {
        return Err(Error::PreconditionViolation(format!(
            "t = {t} must be positive"
        )));
    }
    let threshold = phat_deviation_threshold(alphabet_size, word_len, t, p_w);
    if !(n as f64 > threshold) {
        return Err(Error::PreconditionViolation(format!(
            "n = {n} must exceed (|A|+1)/(t p(w)) + l(w) = {threshold}"
        )));
    }
    let k = alphabet_size as f64;
    let span = (n - word_len) as f64;
    let shifted = t - (k + 1.0) / (span * p_w);
    let exponent = span * shifted * shifted * p_w * p_w * c / (4.0 * k * k * (word_len + 1) as f64);
    Ok(2.0 * k * e_to_inv_e() * (-exponent).exp())
}

/// Model constants entering the recovery bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryConstants {
    pub alphabet_size: usize,
    pub c: f64,
    /// Minimal admissible depth for the truncation level in use.
    pub min_depth: usize,
    /// `D_d`; `+∞` when `C_d` is empty.
    pub d_gap: f64,
    /// `ε_d`.
    pub epsilon: f64,
}

/// Sample size the recovery bound requires `n` to exceed.
pub fn recovery_threshold(consts: &RecoveryConstants, d: usize, delta: f64) -> f64 {
    let margin = delta.min(consts.d_gap - delta);
    2.0 * (consts.alphabet_size as f64 + 1.0) / (margin * consts.epsilon) + d as f64
}

/// `P(τ̂|_K ≠ τ|_K) ≤ 4e^{1/e}|A|^{d+2} exp[−(n−d)(min(δ/2,(D_d−δ)/2) − (|A|+1)/((n−d)ε_d))² ε_d² C / (4|A|²(d+1))]`.
///
/// Checks, in order, `d ≥ d_min`, `0 < δ < D_d` and the lower bound on `n`.
pub fn recovery_bound(consts: &RecoveryConstants, d: usize, delta: f64, n: usize) -> Result<f64> {
    if d < consts.min_depth {
        return Err(Error::PreconditionViolation(format!(
            "depth d = {d} is below the minimal admissible depth {}",
            consts.min_depth
        )));
    }
    if !(delta > 0.0 && delta < consts.d_gap) {
        return Err(Error::PreconditionViolation(format!(
            "delta = {delta} must lie in (0, D_d) with D_d = {}",
            consts.d_gap
        )));
    }
    let threshold = recovery_threshold(consts, d, delta);
    if !(n as f64 > threshold) {
        return Err(Error::PreconditionViolation(format!(
            "n = {n} must exceed 2(|A|+1)/(min(delta, D_d - delta) eps_d) + d = {threshold}"
        )));
    }
    let k = consts.alphabet_size as f64;
    let span = (n - d) as f64;
    let half_margin = (delta / 2.0).min((consts.d_gap - delta) / 2.0);
    let shifted = half_margin - (k + 1.0) / (span * consts.epsilon);
    let exponent = span * shifted * shifted * consts.epsilon * consts.epsilon * consts.c
        / (4.0 * k * k * (d + 1) as f64);
    Ok(4.0 * e_to_inv_e() * k.powi(d as i32 + 2) * (-exponent).exp())
}

/// Return probabilities `ρ_0..ρ_m` of the chain on ℕ that moves `x → x+1`
/// with probability `α_x` and `x → 0` otherwise, started at 0.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoSequence {
    pub values: Vec<f64>,
    pub sum: f64,
}

/// Computes `ρ_0..ρ_{alphas.len()−1}` by forward dynamic programming over
/// the reachable states. `ρ_0 = 1`.
pub fn rho_sequence(alphas: &[f64]) -> RhoSequence {
    let m_max = alphas.len().saturating_sub(1);
    let mut dist = vec![0.0; m_max + 2];
    dist[0] = 1.0;
    let mut values = Vec::with_capacity(m_max + 1);
    values.push(1.0);
    let mut next = vec![0.0; m_max + 2];
    for m in 1..=m_max {
        next.fill(0.0);
        // states reachable at time m-1 are 0..=m-1
        for x in 0..m {
            let mass = dist[x];
            if mass == 0.0 {
                continue;
            }
            next[x + 1] += mass * alphas[x];
            next[0] += mass * (1.0 - alphas[x]);
        }
        std::mem::swap(&mut dist, &mut next);
        values.push(dist[0]);
    }
    let sum = values.iter().sum();
    RhoSequence { values, sum }
}

/// Right-hand side of the mixing inequality `Σρ_l ≤ 1 + 2α/α₀`.
pub fn rho_sum_bound(alpha0: f64, alpha_sum: f64) -> f64 {
    1.0 + 2.0 * alpha_sum / alpha0
}
