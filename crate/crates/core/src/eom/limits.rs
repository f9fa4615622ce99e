//! Large-`N` and extreme-occupation limits of the closure CGFs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::{common_function, ClosureKind};
use crate::error::{FcsError, Result};
use crate::model::{effective_bath, CountingField, ModelParams};

/// The linear regime needs `n̄ ≪ N`; accepted when `n̄ · LINEAR_MIN_SEPARATION ≤ N`.
pub const LINEAR_MIN_SEPARATION: f64 = 100.0;
/// The super-transmittance regime needs `n̄ ≫ N`; accepted when `n̄ ≥ SUPER_MIN_SEPARATION · N`.
pub const SUPER_MIN_SEPARATION: f64 = 100.0;
/// Largest source occupation accepted as low thermo-bias.
pub const LOW_BIAS_MAX_NS: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitRegime {
    Linear,
    SuperTransmittance,
    LowBias,
}

impl fmt::Display for LimitRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitRegime::Linear => "linear",
            LimitRegime::SuperTransmittance => "super-transmittance",
            LimitRegime::LowBias => "low-bias",
        })
    }
}

impl FromStr for LimitRegime {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "linear" => Ok(LimitRegime::Linear),
            "super-transmittance" | "super" => Ok(LimitRegime::SuperTransmittance),
            "low-bias" => Ok(LimitRegime::LowBias),
            other => Err(FcsError::InvalidParameter(format!("unknown regime '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCoefficient {
    pub regime: LimitRegime,
    pub kind: ClosureKind,
    /// Linear: `lim C/(N F) = 1`. Super-transmittance: `Γ_D N(N+2)/x_α`.
    /// Low bias: `Γ_SΓ_D/(Γ_S+Γ_D) · n_S · N`.
    pub coefficient: f64,
}

fn check_regime(params: &ModelParams, regime: LimitRegime) -> Result<()> {
    let nb = effective_bath(params)?.n_bar;
    let n = params.n as f64;
    let ok = match regime {
        LimitRegime::Linear => nb * LINEAR_MIN_SEPARATION <= n,
        LimitRegime::SuperTransmittance => nb >= SUPER_MIN_SEPARATION * n,
        LimitRegime::LowBias => params.n_s <= LOW_BIAS_MAX_NS && params.n_d == 0.0,
    };
    if ok {
        Ok(())
    } else {
        Err(FcsError::RegimeMismatch(format!(
            "{regime} limit does not apply at N = {}, n_bar = {nb}, n_S = {}, n_D = {}",
            params.n, params.n_s, params.n_d
        )))
    }
}

pub fn thermodynamic_limit(params: &ModelParams, kind: ClosureKind, regime: LimitRegime) -> Result<LimitCoefficient> {
    check_regime(params, regime)?;
    let coefficient = match regime {
        LimitRegime::Linear => 1.0,
        LimitRegime::SuperTransmittance => {
            params.gamma_d * params.total_spin_sq() / kind.super_transmittance_divisor()
        }
        LimitRegime::LowBias => params.reduced_rate() * params.n_s * params.n as f64,
    };
    Ok(LimitCoefficient {
        regime,
        kind,
        coefficient,
    })
}

/// The limiting CGF itself.
///
/// Linear: `N F(χ,t)`. Super-transmittance:
/// `(Γ_D/x_α) N(N+2) [(e^{iχ}−1)(1+n_D) + (e^{−iχ}−1) n_D] t`.
/// Low bias: `Γ_SΓ_D/(Γ_S+Γ_D) (e^{iχ}−1) n_S N t`.
pub fn limit_cgf(
    params: &ModelParams,
    kind: ClosureKind,
    regime: LimitRegime,
    chi: CountingField,
    t: f64,
) -> Result<Complex64> {
    let c = thermodynamic_limit(params, kind, regime)?;
    if !(t >= 0.0) {
        return Err(FcsError::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    Ok(match regime {
        LimitRegime::Linear => common_function(params, chi, t)? * params.n as f64,
        LimitRegime::SuperTransmittance => {
            let nd = params.n_d;
            (chi.phase_minus_one() * (1.0 + nd) + chi.conj_phase_minus_one() * nd) * (c.coefficient * t)
        }
        LimitRegime::LowBias => chi.phase_minus_one() * (c.coefficient * t),
    })
}
