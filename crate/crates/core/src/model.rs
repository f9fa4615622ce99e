//! Physical configuration of the transport setup and the bath quantities
//! derived from it.
//!
//! A medium of `N` identical two-level systems (collective spin `j = N/2`)
//! exchanges bosons with a source reservoir `S` and a drain reservoir `D`.
//! Only the single-emitter rates `Γ_S`, `Γ_D` and the bath occupations at the
//! transition frequency enter the counting statistics.
//!
//! The level splitting `Ω` is carried along but never used by any counting
//! computation: in the collective basis the secular generator maps diagonal
//! elements onto diagonal elements, and the unitary part `−iΩ/2 [J_z, ρ]`
//! vanishes on them. The population sector is therefore closed and exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{FcsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of two-level systems.
    pub n: usize,
    pub gamma_s: f64,
    pub gamma_d: f64,
    /// Source occupation at the transition frequency.
    pub n_s: f64,
    /// Drain occupation at the transition frequency.
    pub n_d: f64,
    /// Level splitting. Does not enter counting observables.
    pub omega: f64,
}

impl ModelParams {
    pub fn new(n: usize, gamma_s: f64, gamma_d: f64, n_s: f64, n_d: f64) -> Result<Self> {
        let p = ModelParams {
            n,
            gamma_s,
            gamma_d,
            n_s,
            n_d,
            omega: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit rates `Γ_S = Γ_D = 1`, the default reference scale.
    pub fn unit_rates(n: usize, n_s: f64, n_d: f64) -> Result<Self> {
        Self::new(n, 1.0, 1.0, n_s, n_d)
    }

    pub fn with_omega(mut self, omega: f64) -> Result<Self> {
        self.omega = omega;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FcsError::InvalidParameter(msg));
        if self.n == 0 {
            return bad("N must be at least 1".into());
        }
        for (name, v) in [
            ("gamma_s", self.gamma_s),
            ("gamma_d", self.gamma_d),
            ("n_s", self.n_s),
            ("n_d", self.n_d),
        ] {
            if !v.is_finite() || v < 0.0 {
                return bad(format!("{name} must be finite and nonnegative, got {v}"));
            }
        }
        if self.gamma_s + self.gamma_d <= 0.0 {
            return bad("gamma_s + gamma_d must be positive (no dynamics otherwise)".into());
        }
        if !self.omega.is_finite() || self.omega <= 0.0 {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        Ok(())
    }

    /// Collective spin quantum number `j = N/2`.
    pub fn j(&self) -> f64 {
        self.n as f64 / 2.0
    }

    /// Dimension of the population sector, `N + 1`.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    /// `J² = 4j(j+1) = N(N+2)` in the convention where `J_z` has eigenvalues `2m`.
    pub fn total_spin_sq(&self) -> f64 {
        let n = self.n as f64;
        n * (n + 2.0)
    }

    /// `Γ_S Γ_D / (Γ_S + Γ_D)`.
    pub fn reduced_rate(&self) -> f64 {
        self.gamma_s * self.gamma_d / (self.gamma_s + self.gamma_d)
    }
}

/// The single fictitious reservoir the medium thermalizes to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveBath {
    pub n_bar: f64,
    pub gamma_total: f64,
    /// Detailed-balance ratio `n̄/(1+n̄)` between neighbouring populations.
    pub ratio: f64,
}

impl EffectiveBath {
    /// `ln r = −ln(1 + 1/n̄)`, evaluated without forming `r` first.
    /// `−∞` for `n̄ = 0`.
    pub fn log_ratio(&self) -> f64 {
        if self.n_bar == 0.0 {
            f64::NEG_INFINITY
        } else {
            -(1.0 / self.n_bar).ln_1p()
        }
    }

    /// `2n̄ + 1`, the combination that damps `⟨J_z⟩`.
    pub fn damping(&self) -> f64 {
        2.0 * self.n_bar + 1.0
    }
}

pub fn effective_bath(params: &ModelParams) -> Result<EffectiveBath> {
    params.validate()?;
    let gamma_total = params.gamma_s + params.gamma_d;
    let n_bar = (params.gamma_s * params.n_s + params.gamma_d * params.n_d) / gamma_total;
    Ok(EffectiveBath {
        n_bar,
        gamma_total,
        ratio: n_bar / (1.0 + n_bar),
    })
}

/// Bose-Einstein occupation `1/(e^{βΩ} − 1)`.
pub fn thermal_occupation(beta: f64, omega: f64) -> Result<f64> {
    let x = beta * omega;
    if x.is_nan() || x <= 0.0 {
        return Err(FcsError::InvalidParameter(format!(
            "beta*omega must be positive, got {x}"
        )));
    }
    Ok(1.0 / x.exp_m1())
}

/// Counting field `χ`, the Fourier conjugate of the drain count.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct CountingField(pub f64);

impl CountingField {
    pub fn value(self) -> f64 {
        self.0
    }

    /// Representative in `(−π, π]`.
    pub fn principal(self) -> CountingField {
        let mut x = self.0 % (2.0 * PI);
        if x <= -PI {
            x += 2.0 * PI;
        } else if x > PI {
            x -= 2.0 * PI;
        }
        CountingField(x)
    }

    /// `e^{iχ} − 1` without cancellation near `χ = 0`.
    pub fn phase_minus_one(self) -> Complex64 {
        let half = 0.5 * self.0;
        let s = half.sin();
        Complex64::new(-2.0 * s * s, self.0.sin())
    }

    /// `e^{−iχ} − 1`.
    pub fn conj_phase_minus_one(self) -> Complex64 {
        CountingField(-self.0).phase_minus_one()
    }

    pub fn phase(self) -> Complex64 {
        Complex64::from_polar(1.0, self.0)
    }
}

impl From<f64> for CountingField {
    fn from(x: f64) -> Self {
        CountingField(x)
    }
}

/// `f[χ] = (Γ_D/2)(e^{iχ} − 1)`.
pub fn counting_kernel(chi: CountingField, gamma_d: f64) -> Complex64 {
    chi.phase_minus_one() * (0.5 * gamma_d)
}
