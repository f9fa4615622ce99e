//! How far the exact dynamics is from the factorization
//! `⟨e^{inχ}J_z^α⟩ = ⟨e^{inχ}⟩⟨J_z^α⟩`.
//!
//! Starting from the stationary state, the untilted moments stay at their
//! stationary values, while `⟨e^{inχ}J_z^α⟩ = Σ_m (2m)^α p_m(χ,t)` follows
//! the tilted populations. Dividing by `⟨e^{inχ}⟩ = Σ_m p_m(χ,t)` leaves the
//! trace-normalized tilted moment, which the propagator returns directly.

use crate::error::{FcsError, Result};
use crate::fcs::{propagate_states, InitialState, TransientOptions};
use crate::liouvillian::{exact_moment, jz_eigenvalue};
use crate::model::{CountingField, ModelParams};
use crate::numerics::compensated_sum_complex;

pub const FACTORIZATION_MAX_N: usize = 20;

/// Below this `|⟨J_z^α⟩| / N^α` the relative error is replaced by the absolute one.
const DEGENERATE_SCALE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationError {
    pub value: f64,
    /// Set when `⟨J_z^α⟩` vanished and `value` is the absolute deviation.
    pub absolute: bool,
}

pub fn factorization_error(params: &ModelParams, chi: CountingField, t: f64, alpha: u32) -> Result<FactorizationError> {
    if params.n > FACTORIZATION_MAX_N {
        return Err(FcsError::InvalidParameter(format!(
            "factorization_error is limited to N <= {FACTORIZATION_MAX_N}, got {}",
            params.n
        )));
    }
    if !matches!(alpha, 1 | 2) {
        return Err(FcsError::InvalidParameter(format!("alpha must be 1 or 2, got {alpha}")));
    }
    if !(t > 0.0) {
        return Err(FcsError::InvalidParameter(format!("t must be positive, got {t}")));
    }
    let state = propagate_states(params, chi, &[t], &InitialState::Stationary, &TransientOptions::default())?;
    let p = &state[0].populations;
    let n = params.n;
    let tilted = compensated_sum_complex(
        p.iter()
            .enumerate()
            .map(|(i, &pi)| pi * jz_eigenvalue(n, i).powi(alpha as i32)),
    );
    let plain = exact_moment(params, alpha)?;
    let diff = (tilted - plain).norm();
    if plain.abs() <= DEGENERATE_SCALE * (n as f64).powi(alpha as i32) {
        Ok(FactorizationError {
            value: diff,
            absolute: true,
        })
    } else {
        Ok(FactorizationError {
            value: diff / plain.abs(),
            absolute: false,
        })
    }
}
