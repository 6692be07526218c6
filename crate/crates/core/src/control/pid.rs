//! Discrete PID with rectangular integration and a clamped integral.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub p: f64,
    pub i: f64,
    pub d: f64,
}

impl PidGains {
    pub const fn new(p: f64, i: f64, d: f64) -> Self {
        Self { p, i, d }
    }

    pub fn is_valid(&self) -> bool {
        [self.p, self.i, self.d].iter().all(|g| g.is_finite() && *g >= 0.0)
    }
}

/// Integral accumulator and previous error of one vector-valued PID.
#[derive(Debug, Clone, PartialEq)]
pub struct PidState {
    integral: Vec<f64>,
    prev_error: Vec<f64>,
    /// Bound on `|I · ∫e|` per component.
    integral_limit: f64,
}

impl PidState {
    pub fn new(dim: usize, integral_limit: f64) -> Self {
        Self {
            integral: vec![0.0; dim],
            prev_error: vec![0.0; dim],
            integral_limit,
        }
    }

    pub fn reset(&mut self) {
        self.integral.fill(0.0);
        self.prev_error.fill(0.0);
    }

    pub fn integral(&self) -> &[f64] {
        &self.integral
    }

    pub fn prev_error(&self) -> &[f64] {
        &self.prev_error
    }
}

/// `P e + I ∫e dt + D (e − e_prev)/dt`. The previous error starts at zero.
pub fn pid_step(state: &mut PidState, error: &[f64], gains: &PidGains, dt: f64) -> Vec<f64> {
    let rate: Vec<f64> = error
        .iter()
        .zip(&state.prev_error)
        .map(|(e, ep)| (e - ep) / dt)
        .collect();
    pid_step_with_rate(state, error, &rate, gains, dt)
}

/// Like [`pid_step`] but with the derivative term acting on a supplied rate,
/// e.g. a measured velocity error, instead of a finite difference.
pub fn pid_step_with_rate(state: &mut PidState, error: &[f64], rate: &[f64], gains: &PidGains, dt: f64) -> Vec<f64> {
    assert!(dt > 0.0, "dt must be positive");
    assert_eq!(error.len(), state.integral.len());
    assert_eq!(rate.len(), error.len());
    let cap = if gains.i > 0.0 {
        state.integral_limit / gains.i
    } else {
        f64::INFINITY
    };
    let mut out = Vec::with_capacity(error.len());
    for k in 0..error.len() {
        state.integral[k] = (state.integral[k] + error[k] * dt).clamp(-cap, cap);
        out.push(gains.p * error[k] + gains.i * state.integral[k] + gains.d * rate[k]);
        state.prev_error[k] = error[k];
    }
    out
}
