//! Dominant eigenvalue `λ₀(χ)` of the tilted generator.
//!
//! The branch is the one continuously connected to `λ₀(0) = 0`. It is
//! followed from `χ = 0` in bounded steps; at every step the eigenvalue is
//! refined by Newton iteration on a secular function obtained from the
//! bottom-up elimination of `L(χ) − λ`.
//!
//! Writing the elimination pivots as `q_i = dn_i + ε_i`, where `dn_i` is the
//! total emission rate out of index `i` at `χ = 0`, gives
//!
//! ```text
//! ε_N = λ
//! ε_i = λ + (D_i(χ) + up_i ε_{i+1}) / (dn_{i+1} + ε_{i+1})
//! D_i(χ) = x₋(i) x₊(i+1) [ −Γ_S n_S Γ_D(1+n_D) (e^{iχ}−1) − Γ_D n_D Γ_S(1+n_S) (e^{−iχ}−1) ]
//! ```
//!
//! and `λ` is an eigenvalue exactly when `ε_0(λ) = 0` (since `dn_0 = 0`).
//! `D_i` vanishes at `χ = 0`, so every quantity in the recursion is small
//! when `λ` and `χ` are; the root is obtained to high relative accuracy,
//! which the finite-difference cumulant check depends on.

use num_complex::Complex64;

use crate::error::{FcsError, Result};
use crate::liouvillian::{absorption_weight, build_tilted_generator, emission_weight, RatePrefactors};
use crate::model::{CountingField, ModelParams};

/// Dimension up to which the dense eigensolver is used by [`EigenSolver::Auto`].
pub const DENSE_DIM_THRESHOLD: usize = 256;

/// Default largest χ increment along the continuation path.
pub const DEFAULT_MAX_STEP: f64 = 0.1;

const MIN_STEP: f64 = 1e-7;
const MAX_NEWTON: usize = 60;
/// Minimum normalized overlap between eigenvectors at consecutive steps.
const MIN_OVERLAP: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenSolver {
    /// Dense for `dim <= DENSE_DIM_THRESHOLD`, iterative otherwise.
    Auto,
    /// Full spectrum of the dense matrix; the continuation result selects
    /// the nearest eigenvalue, ties broken by eigenvector overlap.
    Dense,
    /// Continuation with shifted elimination only, `O(N)` per step.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub solver: EigenSolver,
    pub max_step: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            solver: EigenSolver::Auto,
            max_step: DEFAULT_MAX_STEP,
        }
    }
}

/// Precomputed rate data for the secular recursion.
#[derive(Debug, Clone)]
pub(crate) struct SecularFunction {
    n: usize,
    /// `up_i`, total absorption rate out of `i` at χ = 0.
    up: Vec<f64>,
    /// `dn_i`, total emission rate out of `i` at χ = 0.
    dn: Vec<f64>,
    /// `x₋(i) x₊(i+1)` for `i < N`.
    weight: Vec<f64>,
    rates: RatePrefactors,
}

struct SecularEval {
    value: Complex64,
    derivative: Complex64,
}

impl SecularFunction {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.n;
        let rates = RatePrefactors::new(params);
        SecularFunction {
            n,
            up: (0..=n).map(|i| rates.up() * absorption_weight(n, i)).collect(),
            dn: (0..=n).map(|i| rates.down() * emission_weight(n, i)).collect(),
            weight: (0..n)
                .map(|i| absorption_weight(n, i) * emission_weight(n, i + 1))
                .collect(),
            rates,
        }
    }

    /// `(D_i(χ) / weight_i, P_i(χ) / weight_i)` factors, independent of `i`.
    fn field_factors(&self, chi: CountingField) -> (Complex64, Complex64) {
        let r = &self.rates;
        let w = chi.phase_minus_one();
        let wc = chi.conj_phase_minus_one();
        let d = -(w * (r.source_up * r.drain_down) + wc * (r.drain_up * r.source_down));
        let up = Complex64::new(r.source_up, 0.0) + Complex64::from_polar(r.drain_up, -chi.0);
        let down = Complex64::new(r.source_down, 0.0) + Complex64::from_polar(r.drain_down, chi.0);
        (d, up * down)
    }

    fn eval(&self, chi: CountingField, lambda: Complex64) -> SecularEval {
        let (d_fac, p_fac) = self.field_factors(chi);
        let mut eps = lambda;
        let mut deps = Complex64::new(1.0, 0.0);
        for i in (0..self.n).rev() {
            let q = self.dn[i + 1] + eps;
            let d = d_fac * self.weight[i];
            let p = p_fac * self.weight[i];
            let new_eps = lambda + (d + eps * self.up[i]) / q;
            deps = Complex64::new(1.0, 0.0) + deps * p / (q * q);
            eps = new_eps;
        }
        SecularEval {
            value: eps,
            derivative: deps,
        }
    }

    /// Newton iteration from `guess`; `None` if it does not settle.
    fn newton(&self, chi: CountingField, guess: Complex64) -> Option<Complex64> {
        let mut lambda = guess;
        let mut last_step = f64::INFINITY;
        for it in 0..MAX_NEWTON {
            let e = self.eval(chi, lambda);
            if e.value == Complex64::new(0.0, 0.0) {
                return Some(lambda);
            }
            if !e.derivative.is_finite() || e.derivative.norm() == 0.0 {
                return None;
            }
            let step = e.value / e.derivative;
            if !step.is_finite() {
                return None;
            }
            lambda -= step;
            let s = step.norm();
            let tol = 4.0 * f64::EPSILON * lambda.norm();
            if s <= tol {
                return Some(lambda);
            }
            // roundoff floor: the step stopped shrinking
            if it > 4 && s >= 0.5 * last_step && s <= 1e-9 * lambda.norm().max(1e-300) {
                return Some(lambda);
            }
            last_step = s;
        }
        None
    }

    /// Right eigenvector at an eigenvalue `lambda`, from the same elimination.
    /// Normalized to unit Euclidean norm.
    fn eigenvector(&self, chi: CountingField, lambda: Complex64) -> Vec<Complex64> {
        let (d_fac, _) = self.field_factors(chi);
        let n = self.n;
        // pivots q_i for i = 1..N
        let mut q = vec![Complex64::new(0.0, 0.0); n + 1];
        let mut eps = lambda;
        q[n] = self.dn[n] + eps;
        for i in (1..n).rev() {
            let qq = self.dn[i + 1] + eps;
            let d = d_fac * self.weight[i];
            eps = lambda + (d + eps * self.up[i]) / qq;
            q[i] = self.dn[i] + eps;
        }
        let r = &self.rates;
        let up_phase = Complex64::new(r.source_up, 0.0) + Complex64::from_polar(r.drain_up, -chi.0);
        let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
        v[0] = Complex64::new(1.0, 0.0);
        for i in 1..=n {
            v[i] = up_phase * absorption_weight(n, i - 1) * v[i - 1] / q[i];
            if !v[i].is_finite() {
                v[i] = Complex64::new(0.0, 0.0);
            }
            let m = v[i].norm();
            if m > 1e150 {
                let s = 1.0 / m;
                v[..=i].iter_mut().for_each(|z| *z *= s);
            }
        }
        normalize(&mut v);
        v
    }
}

fn normalize(v: &mut [Complex64]) {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
}

fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm()
}

/// `λ₀(χ)` with default options.
pub fn dominant_eigenvalue(params: &ModelParams, chi: CountingField) -> Result<Complex64> {
    dominant_eigenvalue_with(params, chi, &EigenOptions::default())
}

pub fn dominant_eigenvalue_with(
    params: &ModelParams,
    chi: CountingField,
    opts: &EigenOptions,
) -> Result<Complex64> {
    params.validate()?;
    let target = chi.principal().0;
    if target == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if !(opts.max_step > 0.0) {
        return Err(FcsError::InvalidParameter("max_step must be positive".into()));
    }
    let secular = SecularFunction::new(params);
    let lambda = continue_branch(&secular, target, opts.max_step)?;

    let dense = match opts.solver {
        EigenSolver::Dense => true,
        EigenSolver::Iterative => false,
        EigenSolver::Auto => params.dim() <= DENSE_DIM_THRESHOLD,
    };
    if dense {
        select_dense(params, &secular, CountingField(target), lambda)
    } else {
        Ok(lambda)
    }
}

/// Follows the branch from `λ(0) = 0` to `λ(target)`.
fn continue_branch(secular: &SecularFunction, target: f64, max_step: f64) -> Result<Complex64> {
    let dir = target.signum();
    let mut chi = 0.0f64;
    let mut lambda = Complex64::new(0.0, 0.0);
    let mut prev: Option<(f64, Complex64)> = None;
    let mut vec_prev = secular.eigenvector(CountingField(0.0), lambda);
    let mut step = max_step.min(target.abs());

    while (target - chi).abs() > 0.0 {
        let remaining = (target - chi).abs();
        let h = step.min(remaining);
        let next = if h == remaining { target } else { chi + dir * h };

        let predictor = match prev {
            Some((c0, l0)) => lambda + (lambda - l0) * ((next - chi) / (chi - c0)),
            None => lambda,
        };
        let accepted = secular.newton(CountingField(next), predictor).and_then(|l| {
            let v = secular.eigenvector(CountingField(next), l);
            (overlap(&vec_prev, &v) >= MIN_OVERLAP).then_some((l, v))
        });
        match accepted {
            Some((l, v)) => {
                prev = Some((chi, lambda));
                chi = next;
                lambda = l;
                vec_prev = v;
                step = (step * 1.5).min(max_step);
            }
            None => {
                step *= 0.5;
                if step < MIN_STEP {
                    return Err(FcsError::BranchTracking {
                        chi: next,
                        reason: "eigenvalue continuation became ambiguous; reduce the chi step".into(),
                    });
                }
            }
        }
    }
    Ok(lambda)
}

/// Snaps the continuation value to the nearest eigenvalue of the dense
/// spectrum, resolving near-degeneracies by eigenvector overlap.
fn select_dense(
    params: &ModelParams,
    secular: &SecularFunction,
    chi: CountingField,
    lambda: Complex64,
) -> Result<Complex64> {
    let gen = build_tilted_generator(params, chi)?;
    let scale = gen.scale().max(f64::MIN_POSITIVE);
    let eig = gen
        .to_dense()
        .schur()
        .eigenvalues()
        .ok_or_else(|| FcsError::BranchTracking {
            chi: chi.0,
            reason: "dense eigensolver did not converge".into(),
        })?;
    let mut cands: Vec<(f64, Complex64)> = eig.iter().map(|&mu| ((mu - lambda).norm(), mu)).collect();
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let tol = 1e-8 * scale;
    let (d0, mu0) = cands[0];
    if d0 > tol.max(1e-6 * lambda.norm()) {
        return Err(FcsError::BranchTracking {
            chi: chi.0,
            reason: format!("continuation value {lambda} not in dense spectrum (nearest at distance {d0:e})"),
        });
    }
    let close: Vec<Complex64> = cands.iter().filter(|(d, _)| *d <= tol).map(|&(_, mu)| mu).collect();
    if close.len() <= 1 {
        return Ok(secular.newton(chi, mu0).unwrap_or(lambda));
    }
    // near-degenerate: choose by overlap with the continuation eigenvector
    let reference = secular.eigenvector(chi, lambda);
    let mut scored: Vec<(f64, Complex64)> = close
        .iter()
        .map(|&mu| {
            let refined = secular.newton(chi, mu).unwrap_or(mu);
            (overlap(&reference, &secular.eigenvector(chi, refined)), refined)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    if scored.len() > 1 && (scored[0].0 - scored[1].0).abs() < 1e-6 {
        return Err(FcsError::BranchTracking {
            chi: chi.0,
            reason: "degenerate eigenvalues with indistinguishable eigenvectors".into(),
        });
    }
    Ok(scored[0].1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, gs: f64, gd: f64, ns: f64, nd: f64) -> ModelParams {
        ModelParams::new(n, gs, gd, ns, nd).unwrap()
    }

    #[test]
    fn zero_field_is_exactly_zero() {
        let q = p(5, 1.0, 1.0, 3.0, 0.5);
        assert_eq!(dominant_eigenvalue(&q, CountingField(0.0)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn n2_matches_brute_force_3x3() {
        // 50-digit eigensolve of the explicit 3x3 tilted matrix
        let expect = Complex64::new(-0.025_614_134_989_767_17, 0.182_425_887_359_031_84);
        let q = p(2, 1.0, 1.0, 1.0, 0.0);
        for solver in [EigenSolver::Dense, EigenSolver::Iterative] {
            let opts = EigenOptions { solver, max_step: DEFAULT_MAX_STEP };
            let got = dominant_eigenvalue_with(&q, CountingField(0.3), &opts).unwrap();
            assert!((got - expect).norm() < 1e-15, "{solver:?}: {got}");
        }
    }

    #[test]
    fn secular_root_is_an_eigenvalue() {
        let q = p(7, 0.4, 1.6, 2.0, 0.3);
        let chi = CountingField(1.1);
        let lam = dominant_eigenvalue(&q, chi).unwrap();
        let gen = build_tilted_generator(&q, chi).unwrap();
        let v = SecularFunction::new(&q).eigenvector(chi, lam);
        let lv = crate::liouvillian::apply_generator(&gen, &v).unwrap();
        for (a, b) in lv.iter().zip(&v) {
            assert!((a - lam * b).norm() < 1e-12 * gen.scale());
        }
    }

    #[test]
    fn solvers_agree() {
        let q = p(30, 1.0, 2.0, 5.0, 1.0);
        for chi in [-3.0, -1.0, 0.2, 2.5, std::f64::consts::PI] {
            let a = dominant_eigenvalue_with(&q, CountingField(chi), &EigenOptions { solver: EigenSolver::Dense, ..Default::default() }).unwrap();
            let b = dominant_eigenvalue_with(&q, CountingField(chi), &EigenOptions { solver: EigenSolver::Iterative, ..Default::default() }).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "chi={chi}: {a} vs {b}");
        }
    }

    #[test]
    fn periodic_in_chi() {
        let q = p(6, 1.0, 1.0, 2.0, 0.0);
        let a = dominant_eigenvalue(&q, CountingField(0.9)).unwrap();
        let b = dominant_eigenvalue(&q, CountingField(0.9 + 2.0 * std::f64::consts::PI)).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn dominant_has_largest_real_part_near_zero_field() {
        let q = p(10, 1.0, 1.0, 1.0, 0.2);
        let chi = CountingField(0.5);
        let lam = dominant_eigenvalue(&q, chi).unwrap();
        let eig = build_tilted_generator(&q, chi).unwrap().to_dense().schur().eigenvalues().unwrap();
        assert!(eig.iter().all(|mu| mu.re <= lam.re + 1e-12));
    }

    #[test]
    fn rejects_bad_step() {
        let q = p(3, 1.0, 1.0, 1.0, 0.0);
        let opts = EigenOptions { solver: EigenSolver::Iterative, max_step: 0.0 };
        assert!(dominant_eigenvalue_with(&q, CountingField(1.0), &opts).is_err());
    }
}
