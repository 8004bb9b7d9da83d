//! Closed-form theoretical envelopes for overlay against simulations.
//!
//! `C0` and `C1` are not known in closed form; callers supply them. The
//! defaults in [`BoundParams::with_default_constants`] are placeholders for
//! plotting only.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid bound parameters: {0}")]
    InvalidParams(String),
    #[error("cap mass is zero; the Laplace bound is vacuous")]
    EmptyCap,
}

/// Constants feeding the envelopes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub c0: f64,
    pub c1: f64,
    pub p: f64,
    pub gamma: f64,
    pub sigma_max_b: f64,
    pub sigma_min_b: f64,
    /// `V_p(ρ0)`
    pub v_p0: f64,
    pub beta: f64,
}

impl BoundParams {
    pub const DEFAULT_C0: f64 = 1.0;
    pub const DEFAULT_C1: f64 = 2.0;

    pub fn with_default_constants(p: f64, gamma: f64, sigma_min_b: f64, sigma_max_b: f64, v_p0: f64, beta: f64) -> Self {
        Self { c0: Self::DEFAULT_C0, c1: Self::DEFAULT_C1, p, gamma, sigma_max_b, sigma_min_b, v_p0, beta }
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        let bad = |m: &str| Err(BoundsError::InvalidParams(m.to_string()));
        if !(self.c0 > 0.0 && self.c1 > self.c0) {
            return bad("constants must satisfy C1 > C0 > 0");
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return bad("p must lie in (0, 1]");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be positive");
        }
        if !(self.sigma_max_b > 0.0 && self.sigma_min_b > 0.0) {
            return bad("singular values of B must be positive");
        }
        if !(self.v_p0 >= 0.0) {
            return bad("V_p(rho0) must be nonnegative");
        }
        if !(self.beta > 0.0) {
            return bad("beta must be positive");
        }
        Ok(())
    }

    fn rate(&self) -> f64 {
        self.p * self.gamma / self.sigma_max_b
    }
}

/// `√(log(β+1)/β)`
pub fn temperature_scale(beta: f64) -> f64 {
    ((beta + 1.0).ln() / beta).sqrt()
}

/// `2√(log(β+1)/β)(e^{C1 t} − e^{C0 t}) + V_p(ρ0) e^{−pγt/σ_max(B)}`.
pub fn theorem_envelope(t: f64, bp: &BoundParams) -> f64 {
    let thermal = 2.0 * temperature_scale(bp.beta) * ((bp.c1 * t).exp() - (bp.c0 * t).exp());
    thermal + bp.v_p0 * (-bp.rate() * t).exp()
}

/// Which zero-temperature curve to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeForm {
    W2,
    Lyapunov,
}

/// Zero-temperature envelope values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroTempEnvelope {
    /// W2 decay with the stated prefactor `V_p(ρ0)` and with `√(2 V_p(ρ0))`.
    W2 { stated: f64, proof: f64 },
    /// `V_p(ρ0) e^{−2pγt/σ_max(B)}`.
    Lyapunov(f64),
}

pub fn zero_temp_envelope(t: f64, bp: &BoundParams, form: EnvelopeForm) -> ZeroTempEnvelope {
    match form {
        EnvelopeForm::W2 => {
            let decay = (-bp.rate() * t).exp();
            ZeroTempEnvelope::W2 { stated: bp.v_p0 * decay, proof: (2.0 * bp.v_p0).sqrt() * decay }
        }
        EnvelopeForm::Lyapunov => ZeroTempEnvelope::Lyapunov(bp.v_p0 * (-2.0 * bp.rate() * t).exp()),
    }
}

/// Time window on which the W2 distance to `Π_♯ρ0` is guaranteed below `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t1: f64,
    pub t2: f64,
}

impl Window {
    pub fn is_valid(&self) -> bool {
        self.t1 < self.t2
    }
}

/// `t1 = σ_max/(pγ) log(2V_p(ρ0)/ε)`, `t2 = (1/C1) log(1 + (ε/4)√(β/log(β+1)))`.
pub fn corollary_window(eps: f64, bp: &BoundParams) -> Window {
    let t1 = (2.0 * bp.v_p0 / eps).ln() / bp.rate();
    let t2 = (1.0 + 0.25 * eps / temperature_scale(bp.beta)).ln() / bp.c1;
    Window { t1, t2 }
}

/// `√(r² + 2q/σ_min(B)) + 2e^{−βq} / cap_mass`.
pub fn laplace_rhs(r: f64, q: f64, beta: f64, sigma_min_b: f64, cap_mass: f64) -> Result<f64, BoundsError> {
    if !(cap_mass > 0.0) {
        return Err(BoundsError::EmptyCap);
    }
    Ok((r * r + 2.0 * q / sigma_min_b).sqrt() + 2.0 * (-beta * q).exp() / cap_mass)
}

/// Minimizer of [`theorem_envelope`] over a uniform grid on `[0, t_max]`.
pub fn envelope_argmin(bp: &BoundParams, t_max: f64, samples: usize) -> f64 {
    (0..=samples)
        .map(|k| t_max * k as f64 / samples as f64)
        .map(|t| (t, theorem_envelope(t, bp)))
        .fold((0.0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0
}
