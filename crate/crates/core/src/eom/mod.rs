//! Factorized equation-of-motion description of the counting statistics.
//!
//! Assuming the counted number decorrelates from the medium,
//! `⟨e^{inχ}J_z^α⟩ ≈ ⟨e^{inχ}⟩⟨J_z^α⟩`, the CGF obeys a closed equation whose
//! right side only needs the stationary `⟨J_z⟩` and `⟨J_z²⟩`. The three
//! closures differ in how those two moments are obtained.
//!
//! Every closure below satisfies the stationary `⟨J_z⟩` equation
//! `−(2n̄+1)⟨J_z⟩ + ⟨J_z²⟩/2 − J²/2 = 0`. With that relation the factored
//! rate reduces to `F(χ,t)/t · C̃` with `C̃ = −⟨J_z⟩`, for every `n_D` and `χ`.

mod factorization;
mod limits;

pub use factorization::{factorization_error, FactorizationError, FACTORIZATION_MAX_N};
pub use limits::{limit_cgf, thermodynamic_limit, LimitCoefficient, LimitRegime};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{FcsError, Result};
use crate::fcs::{CumulantMethod, CumulantSet};
use crate::liouvillian::exact_moment;
use crate::model::{counting_kernel, effective_bath, CountingField, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureKind {
    /// Exact thermal moments.
    Approx1,
    /// `⟨J_z²⟩ ≈ ⟨J_z⟩²`.
    Approx2,
    /// `⟨J_z³⟩ ≈ ⟨J_z⟩⟨J_z²⟩`.
    Approx3,
}

impl ClosureKind {
    pub const ALL: [ClosureKind; 3] = [ClosureKind::Approx1, ClosureKind::Approx2, ClosureKind::Approx3];

    /// Denominator `x_α` of the super-transmittance prefactor `Γ_D N(N+2)/x_α`.
    pub fn super_transmittance_divisor(self) -> f64 {
        match self {
            ClosureKind::Approx2 => 4.0,
            ClosureKind::Approx1 | ClosureKind::Approx3 => 6.0,
        }
    }
}

impl fmt::Display for ClosureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClosureKind::Approx1 => "approx1",
            ClosureKind::Approx2 => "approx2",
            ClosureKind::Approx3 => "approx3",
        };
        f.write_str(s)
    }
}

impl FromStr for ClosureKind {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "approx1" | "1" => Ok(ClosureKind::Approx1),
            "approx2" | "2" => Ok(ClosureKind::Approx2),
            "approx3" | "3" => Ok(ClosureKind::Approx3),
            other => Err(FcsError::InvalidParameter(format!("unknown closure '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureResult {
    pub kind: ClosureKind,
    /// Stationary `⟨J_z⟩`.
    pub jz1: f64,
    /// Stationary `⟨J_z²⟩`.
    pub jz2: f64,
    /// `C̃^α`.
    pub amplitude: f64,
}

/// Right side of the factored CGF equation,
/// `n_D(f[χ]−f[−χ])⟨J_z⟩ + (n_D/2)(f[χ]+f[−χ])(J²−⟨J_z²⟩) + (f[χ]/2)(J²−⟨J_z²⟩+2⟨J_z⟩)`.
pub fn factored_cgf_rate(params: &ModelParams, jz1: f64, jz2: f64, chi: CountingField) -> Result<Complex64> {
    params.validate()?;
    let fp = counting_kernel(chi, params.gamma_d);
    let fm = counting_kernel(CountingField(-chi.0), params.gamma_d);
    let j2 = params.total_spin_sq();
    let nd = params.n_d;
    Ok((fp - fm) * (nd * jz1) + (fp + fm) * (0.5 * nd * (j2 - jz2)) + fp * (0.5 * (j2 - jz2 + 2.0 * jz1)))
}

/// Negative root of `a² − p·a − J² = 0`, written without cancellation.
fn negative_root(p: f64, j2: f64) -> f64 {
    if j2 == 0.0 {
        return 0.0;
    }
    let half = 0.5 * p;
    -j2 / (half + half.hypot(j2.sqrt()))
}

/// Stationary moments and CGF amplitude under the chosen closure.
pub fn closure_steady_state(params: &ModelParams, kind: ClosureKind) -> Result<ClosureResult> {
    let bath = effective_bath(params)?;
    let k = bath.damping();
    let j2 = params.total_spin_sq();
    let n = params.n as f64;
    let (jz1, jz2) = match kind {
        ClosureKind::Approx1 => (exact_moment(params, 1)?, exact_moment(params, 2)?),
        ClosureKind::Approx2 => {
            // a² − 2k·a − J² = 0; the flow derivative a − k is negative only on the lower root.
            let a = negative_root(2.0 * k, j2);
            let other = 2.0 * k - a;
            check_roots(a, other, n, |x| x - k < 0.0)?;
            (a, a * a)
        }
        ClosureKind::Approx3 => {
            // b = J² + 2k·a turns the second equation into a² − (3k − 1/k)a − J² = 0.
            let p = 3.0 * k - 1.0 / k;
            let a = negative_root(p, j2);
            let other = p - a;
            check_roots(a, other, n, |x| x <= 0.0)?;
            (a, j2 + 2.0 * k * a)
        }
    };
    Ok(ClosureResult {
        kind,
        jz1,
        jz2,
        amplitude: -jz1,
    })
}

fn check_roots(chosen: f64, other: f64, n: f64, admissible: impl Fn(f64) -> bool) -> Result<()> {
    let inside = |x: f64| x >= -n * (1.0 + 1e-12) && x <= n * (1.0 + 1e-12);
    if !chosen.is_finite() || !inside(chosen) || !admissible(chosen) {
        return Err(FcsError::RootSelection(format!("selected root {chosen} is not admissible")));
    }
    if inside(other) && admissible(other) {
        return Err(FcsError::RootSelection(format!("roots {chosen} and {other} are both admissible")));
    }
    Ok(())
}

/// Relative residuals of the stationary moment equations solved by `result`.
///
/// Approx1 and approx2 report the `⟨J_z⟩` equation; approx3 reports both
/// the `⟨J_z⟩` and the `⟨J_z²⟩` equation. Each residual is divided by the
/// sum of magnitudes of its terms.
pub fn closure_residuals(params: &ModelParams, result: &ClosureResult) -> Result<Vec<f64>> {
    let k = effective_bath(params)?.damping();
    let j2 = params.total_spin_sq();
    let (a, b) = (result.jz1, result.jz2);
    let rel = |terms: &[f64]| {
        let s: f64 = terms.iter().sum();
        let m: f64 = terms.iter().map(|x| x.abs()).sum();
        if m == 0.0 {
            0.0
        } else {
            s.abs() / m
        }
    };
    let first = rel(&[-k * a, 0.5 * b, -0.5 * j2]);
    Ok(match result.kind {
        ClosureKind::Approx1 | ClosureKind::Approx2 => vec![first],
        ClosureKind::Approx3 => vec![first, rel(&[k * j2, -3.0 * k * b, -(j2 - 2.0) * a, a * b])],
    })
}

/// `F(χ,t) = Γ_D t[(e^{iχ}−1)(n_D+1)n̄ + (e^{−iχ}−1)n_D(n̄+1)]`.
pub fn common_function(params: &ModelParams, chi: CountingField, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(FcsError::InvalidParameter(format!("t must be nonnegative, got {t}")));
    }
    let nb = effective_bath(params)?.n_bar;
    let nd = params.n_d;
    let bracket = chi.phase_minus_one() * ((nd + 1.0) * nb) + chi.conj_phase_minus_one() * (nd * (nb + 1.0));
    Ok(bracket * (params.gamma_d * t))
}

/// `C^α(χ,t) = F(χ,t)·C̃^α`.
pub fn approximate_cgf(params: &ModelParams, kind: ClosureKind, chi: CountingField, t: f64) -> Result<Complex64> {
    let f = common_function(params, chi, t)?;
    Ok(f * closure_steady_state(params, kind)?.amplitude)
}

/// Current cumulants implied by `C^α`:
/// `⟨⟨I_k⟩⟩ = Γ_D C̃^α[(n_D+1)n̄ + (−1)^k n_D(n̄+1)]`.
pub fn approximate_cumulants(params: &ModelParams, kind: ClosureKind, order: usize) -> Result<CumulantSet> {
    if order == 0 {
        return Err(FcsError::InvalidParameter("order must be at least 1".into()));
    }
    let nb = effective_bath(params)?.n_bar;
    let amp = closure_steady_state(params, kind)?.amplitude;
    let nd = params.n_d;
    let emit = (nd + 1.0) * nb;
    let absorb = nd * (nb + 1.0);
    let values = (1..=order)
        .map(|k| {
            let s = if k % 2 == 0 { emit + absorb } else { emit - absorb };
            params.gamma_d * amp * s
        })
        .collect();
    Ok(CumulantSet {
        order,
        values,
        method: CumulantMethod::EomClosure(kind),
    })
}

/// Growth rates `(odd, even)` of the odd and even cumulants under factorization:
/// odd `= Γ_D[n_D⟨J_z⟩ + (J² − ⟨J_z²⟩ + 2⟨J_z⟩)/4]`,
/// even `= (Γ_D/2)[(n_D + ½)(J² − ⟨J_z²⟩) + ⟨J_z⟩]`.
pub fn odd_even_cumulant_rates(params: &ModelParams, jz1: f64, jz2: f64) -> Result<(f64, f64)> {
    params.validate()?;
    let j2 = params.total_spin_sq();
    let nd = params.n_d;
    let gd = params.gamma_d;
    let odd = gd * (nd * jz1 + 0.25 * (j2 - jz2 + 2.0 * jz1));
    let even = 0.5 * gd * ((nd + 0.5) * (j2 - jz2) + jz1);
    Ok((odd, even))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fcs::stationary_cumulants;
    use proptest::prelude::*;

    fn p(n: usize, gs: f64, gd: f64, ns: f64, nd: f64) -> ModelParams {
        ModelParams::new(n, gs, gd, ns, nd).unwrap()
    }

    fn printed_c2(n: f64, nb: f64) -> f64 {
        -(2.0 * nb + 1.0) + ((2.0 * nb + 1.0).powi(2) + n * (2.0 + n)).sqrt()
    }

    fn printed_c3(n: f64, nb: f64) -> f64 {
        let c = 3.0 + 6.0 * nb - 1.0 / (2.0 * nb + 1.0);
        -0.5 * c + (0.25 * c * c + n * (2.0 + n)).sqrt()
    }

    fn printed_c1(n: f64, nb: f64) -> f64 {
        let r = (nb / (1.0 + nb)).powf(n);
        ((nb + 1.0) * (n - 2.0 * nb) + nb * r * (n + 2.0 * nb + 2.0)) / (nb * (1.0 - r) + 1.0)
    }

    #[test]
    fn closure_kind_round_trip() {
        for k in ClosureKind::ALL {
            assert_eq!(k.to_string().parse::<ClosureKind>().unwrap(), k);
        }
        assert!("approx4".parse::<ClosureKind>().is_err());
        assert_eq!(CumulantMethod::EomClosure(ClosureKind::Approx3).to_string(), "eom-closure-approx3");
    }

    #[test]
    fn approx2_ground_state_example() {
        let r = closure_steady_state(&p(2, 1.0, 1.0, 0.0, 0.0), ClosureKind::Approx2).unwrap();
        assert!((r.amplitude - 2.0).abs() < 1e-15);
        assert_eq!(r.jz2, r.jz1 * r.jz1);
    }

    #[test]
    fn all_amplitudes_reach_n_at_zero_occupation() {
        for n in [1, 2, 7, 50] {
            for kind in ClosureKind::ALL {
                let r = closure_steady_state(&p(n, 1.0, 1.0, 0.0, 0.0), kind).unwrap();
                assert!((r.amplitude - n as f64).abs() < 1e-12 * n as f64, "{kind} {n}");
                assert!((r.jz2 - (n * n) as f64).abs() < 1e-10 * (n * n) as f64);
            }
        }
    }

    #[test]
    fn amplitudes_match_printed_forms() {
        for n in [1usize, 3, 10, 80] {
            for ns in [0.01, 0.3, 1.0, 4.0, 25.0] {
                let q = p(n, 1.0, 1.0, ns, 0.0);
                let nb = effective_bath(&q).unwrap().n_bar;
                let nf = n as f64;
                let c1 = closure_steady_state(&q, ClosureKind::Approx1).unwrap().amplitude;
                let c2 = closure_steady_state(&q, ClosureKind::Approx2).unwrap().amplitude;
                let c3 = closure_steady_state(&q, ClosureKind::Approx3).unwrap().amplitude;
                assert!((c1 - printed_c1(nf, nb)).abs() < 1e-9 * c1, "{n} {ns}");
                assert!((c2 - printed_c2(nf, nb)).abs() < 1e-12 * c2);
                assert!((c3 - printed_c3(nf, nb)).abs() < 1e-12 * c3);
            }
        }
    }

    #[test]
    fn large_occupation_limits() {
        let nb = 1e6;
        for n in [3usize, 40] {
            let q = p(n, 1.0, 1.0, 2.0 * nb, 0.0);
            let j2 = q.total_spin_sq();
            for (kind, want) in [
                (ClosureKind::Approx1, 1.0 / 3.0),
                (ClosureKind::Approx2, 0.5),
                (ClosureKind::Approx3, 1.0 / 3.0),
            ] {
                let a = closure_steady_state(&q, kind).unwrap().amplitude;
                let got = 2.0 * nb * a / j2;
                assert!((got - want).abs() < 1e-3 * want, "{kind}: {got}");
            }
        }
    }

    #[test]
    fn residuals_vanish() {
        for (n, ns, nd) in [(1, 0.5, 0.0), (10, 3.0, 1.0), (80, 1e3, 0.0), (500, 1e-3, 0.0)] {
            let q = p(n, 1.0, 2.0, ns, nd);
            for kind in ClosureKind::ALL {
                let r = closure_steady_state(&q, kind).unwrap();
                for res in closure_residuals(&q, &r).unwrap() {
                    assert!(res < 1e-12, "{kind} {n}: {res}");
                }
            }
        }
    }

    #[test]
    fn factored_rate_collapses_onto_common_function() {
        for (n, gs, gd, ns, nd) in [(4, 1.0, 1.0, 2.0, 0.0), (9, 0.5, 2.0, 3.0, 1.5), (30, 1.0, 0.2, 0.1, 4.0)] {
            let q = p(n, gs, gd, ns, nd);
            for kind in ClosureKind::ALL {
                let r = closure_steady_state(&q, kind).unwrap();
                for chi in [-2.5, -0.3, 0.0, 0.9, 3.0] {
                    let chi = CountingField(chi);
                    let lhs = factored_cgf_rate(&q, r.jz1, r.jz2, chi).unwrap();
                    let rhs = approximate_cgf(&q, kind, chi, 1.0).unwrap();
                    assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()), "{kind} {chi:?}: {lhs} {rhs}");
                }
            }
        }
    }

    #[test]
    fn factored_rate_without_drain_occupation() {
        let q = p(3, 1.0, 1.5, 2.0, 0.0);
        let chi = CountingField(0.8);
        let (a, b) = (-1.3, 4.0);
        let want = counting_kernel(chi, 1.5) * (0.5 * (15.0 - b + 2.0 * a));
        assert!((factored_cgf_rate(&q, a, b, chi).unwrap() - want).norm() < 1e-15);
        assert_eq!(factored_cgf_rate(&q, a, b, CountingField(0.0)).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn approx1_first_cumulant_is_exact() {
        for (n, gs, gd, ns, nd) in [(1, 1.0, 1.0, 1.0, 0.0), (6, 2.0, 0.5, 4.0, 1.0), (120, 1.0, 1.0, 10.0, 0.0)] {
            let q = p(n, gs, gd, ns, nd);
            let me = stationary_cumulants(&q, 1).unwrap().values[0];
            let ap = approximate_cumulants(&q, ClosureKind::Approx1, 1).unwrap().values[0];
            assert!((ap - me).abs() < 1e-12 * me.abs(), "{ap} {me}");
        }
    }

    #[test]
    fn rates_match_cumulants() {
        for nd in [0.0, 0.7] {
            let q = p(7, 1.0, 1.3, 2.0, nd);
            for kind in ClosureKind::ALL {
                let r = closure_steady_state(&q, kind).unwrap();
                let (odd, even) = odd_even_cumulant_rates(&q, r.jz1, r.jz2).unwrap();
                let c = approximate_cumulants(&q, kind, 4).unwrap().values;
                assert!((c[0] - odd).abs() < 1e-12 * odd.abs());
                assert!((c[2] - odd).abs() < 1e-12 * odd.abs());
                assert!((c[1] - even).abs() < 1e-12 * even.abs());
                assert!((c[3] - even).abs() < 1e-12 * even.abs());
            }
        }
    }

    #[test]
    fn cumulants_match_numerical_derivatives() {
        let q = p(5, 1.0, 2.0, 3.0, 0.4);
        let h = 1e-2;
        for kind in ClosureKind::ALL {
            let c = |x: f64| approximate_cgf(&q, kind, CountingField(x), 1.0).unwrap();
            let d1 = (c(-2.0 * h) - c(2.0 * h) + (c(h) - c(-h)) * 8.0) / (12.0 * h);
            let d2 = (-c(-2.0 * h) - c(2.0 * h) + (c(h) + c(-h)) * 16.0 - c(0.0) * 30.0) / (12.0 * h * h);
            let want = approximate_cumulants(&q, kind, 2).unwrap().values;
            assert!((d1.im - want[0]).abs() < 1e-7 * want[0].abs());
            assert!((-d2.re - want[1]).abs() < 1e-6 * want[1].abs());
        }
    }

    #[test]
    fn saturated_symmetric_state_has_zero_odd_rate() {
        let q = p(4, 1.0, 1.0, 1.0, 0.0);
        let (odd, _) = odd_even_cumulant_rates(&q, 0.0, q.total_spin_sq()).unwrap();
        assert_eq!(odd, 0.0);
    }

    #[test]
    fn common_function_examples() {
        let q = p(3, 1.0, 2.0, 0.5, 0.5);
        let chi = CountingField(1e-4);
        let d = common_function(&q, chi, 2.0).unwrap() / 1e-4;
        assert!(d.im.abs() < 1e-8);
        let q = p(3, 1.0, 2.0, 3.0, 0.0);
        let nb = effective_bath(&q).unwrap().n_bar;
        let f = common_function(&q, CountingField(0.4), 1.5).unwrap();
        assert!((f - CountingField(0.4).phase_minus_one() * (2.0 * 1.5 * nb)).norm() < 1e-14);
        assert!(common_function(&q, CountingField(0.4), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn closure_invariants(n in 1usize..200, ns in 1e-4f64..1e4, nd_frac in 0.0f64..1.0) {
            let q = p(n, 1.0, 1.0, ns, ns * nd_frac);
            let nf = n as f64;
            for kind in ClosureKind::ALL {
                let r = closure_steady_state(&q, kind).unwrap();
                prop_assert!(r.jz1 >= -nf * (1.0 + 1e-12) && r.jz1 <= 0.0);
                prop_assert!(r.jz2 >= 0.0 && r.jz2 <= nf * nf * (1.0 + 1e-12));
                if kind != ClosureKind::Approx2 {
                    prop_assert!(r.jz2 >= r.jz1 * r.jz1 * (1.0 - 1e-12));
                }
                prop_assert!(r.amplitude > 0.0);
            }
        }

        #[test]
        fn amplitude_per_site_decreases(ns in 1e-3f64..1e3) {
            for n in [5usize, 80] {
                for kind in ClosureKind::ALL {
                    let a = closure_steady_state(&p(n, 1.0, 1.0, ns, 0.0), kind).unwrap().amplitude;
                    let b = closure_steady_state(&p(n, 1.0, 1.0, ns * 1.5, 0.0), kind).unwrap().amplitude;
                    prop_assert!(b < a);
                }
            }
        }
    }
}
