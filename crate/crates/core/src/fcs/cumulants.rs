//! Stationary current cumulants: Rayleigh-Schrödinger recursion for the
//! dominant eigenvalue, and a finite-difference cross-check.
//!
//! With `s = iχ`, `L(s) = Σ_k L⁽ᵏ⁾ sᵏ/k!` where `L⁽⁰⁾ = L(0)` and, for
//! `k ≥ 1`, `L⁽ᵏ⁾` holds only the drain jumps: emissions with weight `1`,
//! absorptions with weight `(−1)ᵏ`. Expanding `λ(s) = Σ c_k sᵏ/k!` and the
//! right eigenvector with `⟨1|ρ_k⟩ = δ_{k0}` gives
//!
//! ```text
//! c_n      = Σ_{k=1..n} C(n,k) ⟨1|L⁽ᵏ⁾ ρ_{n−k}⟩
//! L(0) ρ_n = Σ_{k=1..n} C(n,k) (c_k − L⁽ᵏ⁾) ρ_{n−k},   ⟨1|ρ_n⟩ = 0
//! ```
//!
//! and `⟨⟨I_n⟩⟩ = c_n`.

use num_complex::Complex64;

use super::{dominant_eigenvalue, CumulantMethod, CumulantSet};
use crate::error::{FcsError, Result};
use crate::liouvillian::{absorption_weight, emission_weight, stationary_state, ConservativeGenerator, RatePrefactors};
use crate::model::{CountingField, ModelParams};
use crate::numerics::{binomial_row, CompensatedSum};

pub const MAX_RECURSION_ORDER: usize = 6;
pub const MAX_FD_ORDER: usize = 4;

/// Drain-jump parts of `L⁽ᵏ⁾`.
struct DrainBands {
    /// `Γ_D n_D x₋(i)`, jump `i → i+1`
    up: Vec<f64>,
    /// `Γ_D (1+n_D) x₊(i)`, jump `i → i−1`
    down: Vec<f64>,
}

impl DrainBands {
    fn new(params: &ModelParams) -> Self {
        let n = params.n;
        let r = RatePrefactors::new(params);
        DrainBands {
            up: (0..=n).map(|i| r.drain_up * absorption_weight(n, i)).collect(),
            down: (0..=n).map(|i| r.drain_down * emission_weight(n, i)).collect(),
        }
    }

    fn sign(k: usize) -> f64 {
        if k.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// `⟨1|L⁽ᵏ⁾ v⟩`
    fn trace_apply(&self, k: usize, v: &[f64]) -> f64 {
        let s = Self::sign(k);
        let mut acc = CompensatedSum::new();
        for (i, &x) in v.iter().enumerate() {
            acc.add(x * (self.down[i] + s * self.up[i]));
        }
        acc.value()
    }

    /// `out += factor · L⁽ᵏ⁾ v`
    fn apply_add(&self, k: usize, factor: f64, v: &[f64], out: &mut [f64]) {
        let s = Self::sign(k) * factor;
        let d = v.len();
        for i in 0..d {
            if i + 1 < d {
                out[i + 1] += s * self.up[i] * v[i];
            }
            if i > 0 {
                out[i - 1] += factor * self.down[i] * v[i];
            }
        }
    }
}

/// Cumulants by perturbative eigenvalue recursion.
pub fn stationary_cumulants(params: &ModelParams, order: usize) -> Result<CumulantSet> {
    if order == 0 || order > MAX_RECURSION_ORDER {
        return Err(FcsError::InvalidParameter(format!(
            "cumulant order must be in 1..={MAX_RECURSION_ORDER}, got {order}"
        )));
    }
    params.validate()?;
    let gen0 = ConservativeGenerator::new(params);
    let drain = DrainBands::new(params);
    let dim = params.dim();

    let mut rho: Vec<Vec<f64>> = vec![stationary_state(params)?.populations];
    let mut c = vec![0.0; order + 1];
    for n in 1..=order {
        let binom = binomial_row(n);
        let mut acc = CompensatedSum::new();
        for k in 1..=n {
            acc.add(binom[k] * drain.trace_apply(k, &rho[n - k]));
        }
        c[n] = acc.value();
        if n == order {
            break;
        }
        let mut rhs = vec![0.0; dim];
        for k in 1..=n {
            let prev = &rho[n - k];
            for i in 0..dim {
                rhs[i] += binom[k] * c[k] * prev[i];
            }
            drain.apply_add(k, -binom[k], prev, &mut rhs);
        }
        rho.push(gen0.solve_bordered(&rhs, 0.0)?);
    }
    Ok(CumulantSet {
        order,
        values: c[1..].to_vec(),
        method: CumulantMethod::EigenvalueRecursion,
    })
}

/// Finite-difference cumulants together with per-order error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDifferenceReport {
    pub cumulants: CumulantSet,
    /// Estimated truncation plus roundoff error of each cumulant.
    pub error_estimate: Vec<f64>,
    pub steps: Vec<f64>,
}

impl FiniteDifferenceReport {
    /// Warning lines for orders whose relative error estimate exceeds `rel_tol`.
    pub fn warnings(&self, rel_tol: f64) -> Vec<String> {
        self.cumulants
            .values
            .iter()
            .zip(&self.error_estimate)
            .enumerate()
            .filter(|(_, (v, e))| **e > rel_tol * v.abs())
            .map(|(i, (v, e))| {
                format!(
                    "finite-difference cumulant order {}: estimated error {e:.3e} exceeds {rel_tol:e} relative (value {v:.6e})",
                    i + 1
                )
            })
            .collect()
    }
}

/// Default stencil step: `1e-2` for orders 1–2, `5e-2` for orders 3–4.
pub fn default_fd_step(order: usize) -> f64 {
    if order <= 2 {
        1e-2
    } else {
        5e-2
    }
}

/// Five-point central stencil for the `k`-th derivative: (offsets in units
/// of `h`, weights, denominator exponent, truncation order).
fn stencil(k: usize) -> ([f64; 5], f64, i32) {
    // weights for offsets −2, −1, 0, 1, 2
    match k {
        1 => ([1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0], 1.0, 4),
        2 => ([-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0], 2.0, 4),
        3 => ([-0.5, 1.0, 0.0, -1.0, 0.5], 3.0, 2),
        4 => ([1.0, -4.0, 6.0, -4.0, 1.0], 4.0, 2),
        _ => unreachable!("order checked by caller"),
    }
}

/// `(−i)ᵏ z`, real part.
fn cumulant_from_derivative(k: usize, z: Complex64) -> f64 {
    match k % 4 {
        0 => z.re,
        1 => z.im,
        2 => -z.re,
        _ => -z.im,
    }
}

fn fd_derivative(
    params: &ModelParams,
    k: usize,
    h: f64,
    cache: &mut Vec<(f64, Complex64)>,
) -> Result<(Complex64, f64)> {
    let (w, p, _) = stencil(k);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mag = 0.0f64;
    for (j, wj) in w.iter().enumerate() {
        if *wj == 0.0 {
            continue;
        }
        let chi = (j as f64 - 2.0) * h;
        let lam = match cache.iter().find(|(c, _)| *c == chi) {
            Some(&(_, l)) => l,
            None => {
                let l = dominant_eigenvalue(params, CountingField(chi))?;
                cache.push((chi, l));
                l
            }
        };
        sum += lam * *wj;
        mag += wj.abs() * lam.norm();
    }
    let denom = h.powf(p);
    Ok((sum / denom, mag / denom))
}

/// Cumulants from central differences of `λ₀(χ)` with one Richardson level,
/// all orders using the same `step`.
pub fn cross_check_cumulants(params: &ModelParams, order: usize, step: f64) -> Result<FiniteDifferenceReport> {
    cross_check_impl(params, order, |_| step, None)
}

/// Target relative error of the step refinement in [`cross_check_cumulants_default`].
pub const FD_REFINE_TOLERANCE: f64 = 1e-9;
const MAX_HALVINGS: usize = 10;

/// Starts each order at [`default_fd_step`] and halves the step while the
/// Richardson error estimate exceeds [`FD_REFINE_TOLERANCE`] relative and
/// keeps decreasing. Needed where `λ₀` varies on field scales well below
/// the default steps, which happens for large `N` at large occupations.
pub fn cross_check_cumulants_default(params: &ModelParams, order: usize) -> Result<FiniteDifferenceReport> {
    cross_check_impl(params, order, default_fd_step, Some(FD_REFINE_TOLERANCE))
}

fn richardson(params: &ModelParams, k: usize, h: f64, cache: &mut Vec<(f64, Complex64)>) -> Result<(f64, f64)> {
    // relative accuracy of each eigenvalue evaluation
    let lambda_rel = 64.0 * f64::EPSILON;
    let (_, _, trunc) = stencil(k);
    let (coarse, _) = fd_derivative(params, k, h, cache)?;
    let (fine, fine_mag) = fd_derivative(params, k, 0.5 * h, cache)?;
    let factor = 2f64.powi(trunc);
    let extrapolated = (fine * factor - coarse) / (factor - 1.0);
    let truncation = (extrapolated - fine).norm() / (factor - 1.0);
    let roundoff = lambda_rel * fine_mag * (factor + 1.0) / (factor - 1.0);
    Ok((cumulant_from_derivative(k, extrapolated), truncation + roundoff))
}

fn cross_check_impl(
    params: &ModelParams,
    order: usize,
    step_for: impl Fn(usize) -> f64,
    refine: Option<f64>,
) -> Result<FiniteDifferenceReport> {
    if order == 0 || order > MAX_FD_ORDER {
        return Err(FcsError::InvalidParameter(format!(
            "finite-difference order must be in 1..={MAX_FD_ORDER}, got {order}"
        )));
    }
    params.validate()?;
    let mut cache = Vec::new();
    let mut values = Vec::with_capacity(order);
    let mut errors = Vec::with_capacity(order);
    let mut steps = Vec::with_capacity(order);
    for k in 1..=order {
        let mut h = step_for(k);
        if !(h > 0.0) || !h.is_finite() {
            return Err(FcsError::InvalidParameter(format!("step must be positive, got {h}")));
        }
        let (mut value, mut error) = richardson(params, k, h, &mut cache)?;
        let mut used = h;
        if let Some(tol) = refine {
            for _ in 0..MAX_HALVINGS {
                if error <= tol * value.abs() {
                    break;
                }
                h *= 0.5;
                let (v, e) = richardson(params, k, h, &mut cache)?;
                if e >= error {
                    break;
                }
                (value, error, used) = (v, e, h);
            }
        }
        values.push(value);
        errors.push(error);
        steps.push(used);
    }
    Ok(FiniteDifferenceReport {
        cumulants: CumulantSet {
            order,
            values,
            method: CumulantMethod::FiniteDifference,
        },
        error_estimate: errors,
        steps,
    })
}
