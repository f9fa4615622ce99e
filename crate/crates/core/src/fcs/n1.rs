//! Closed-form statistics of a single two-level emitter (`N = 1`).
//!
//! The 2×2 tilted generator has the eigenvalues
//!
//! ```text
//! λ±(χ) = −½ [ Γ_S(1+2n_S) + Γ_D(1+2n_D) ∓ √Δ(χ) ]
//! Δ(χ)  = 4 Γ_S Γ_D [ e^{−iχ}(1+n_S) n_D + e^{+iχ} n_S (1+n_D) ]
//!         + 2 Γ_S Γ_D + Γ_S²(1+2n_S)² + Γ_D²(1+2n_D)²
//! ```
//!
//! `Re Δ(χ) ≥ Γ_S Γ_D > 0` for every real `χ`, so the principal square root
//! is continuous and `λ₊` is the branch through `λ₊(0) = 0`.

use num_complex::Complex64;

use super::{CumulantMethod, CumulantSet};
use crate::error::{FcsError, Result};
use crate::model::{CountingField, ModelParams};
use crate::numerics::factorial;

struct N1Coefficients {
    /// `Γ_S(1+2n_S) + Γ_D(1+2n_D)`
    trace: f64,
    /// χ-independent part of Δ
    constant: f64,
    /// coefficient of `e^{+iχ}`
    forward: f64,
    /// coefficient of `e^{−iχ}`
    backward: f64,
}

fn coefficients(params: &ModelParams) -> Result<N1Coefficients> {
    params.validate()?;
    if params.n != 1 {
        return Err(FcsError::InvalidParameter(format!(
            "analytic N=1 expression requires N = 1, got N = {}",
            params.n
        )));
    }
    let (gs, gd, ns, nd) = (params.gamma_s, params.gamma_d, params.n_s, params.n_d);
    let xs = gs * (1.0 + 2.0 * ns);
    let xd = gd * (1.0 + 2.0 * nd);
    Ok(N1Coefficients {
        trace: xs + xd,
        constant: 2.0 * gs * gd + xs * xs + xd * xd,
        forward: 4.0 * gs * gd * ns * (1.0 + nd),
        backward: 4.0 * gs * gd * (1.0 + ns) * nd,
    })
}

/// `C(χ, t) = λ₊(χ) t`, the long-time CGF of a single emitter.
pub fn analytic_cgf_n1(params: &ModelParams, chi: CountingField, t: f64) -> Result<Complex64> {
    let c = coefficients(params)?;
    if chi.0 == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let delta = Complex64::new(c.constant, 0.0)
        + Complex64::from_polar(c.forward, chi.0)
        + Complex64::from_polar(c.backward, -chi.0);
    // λ₊ = −½(trace − √Δ) = −½ (trace² − Δ)/(trace + √Δ); trace² − Δ vanishes at χ = 0
    let shortfall = -(chi.phase_minus_one() * c.forward + chi.conj_phase_minus_one() * c.backward);
    let lambda = -0.5 * shortfall / (c.trace + delta.sqrt());
    Ok(lambda * t)
}

/// Cumulants of the `N = 1` closed form, from the power series of `√Δ` in `s = iχ`.
pub fn analytic_cumulants_n1(params: &ModelParams, order: usize) -> Result<CumulantSet> {
    let c = coefficients(params)?;
    if order == 0 {
        return Err(FcsError::InvalidParameter("order must be >= 1".into()));
    }
    // Δ(s) = Σ δ_k s^k, δ_k = (forward + (−1)^k backward)/k!
    let delta: Vec<f64> = (0..=order)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let base = if k == 0 { c.constant } else { 0.0 };
            base + (c.forward + sign * c.backward) / factorial(k)
        })
        .collect();
    let mut g = vec![0.0; order + 1];
    g[0] = delta[0].sqrt();
    for n in 1..=order {
        let cross: f64 = (1..n).map(|k| g[k] * g[n - k]).sum();
        g[n] = (delta[n] - cross) / (2.0 * g[0]);
    }
    Ok(CumulantSet {
        order,
        values: (1..=order).map(|k| 0.5 * g[k] * factorial(k)).collect(),
        method: CumulantMethod::AnalyticN1,
    })
}
