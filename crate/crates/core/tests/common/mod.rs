//! Oracles shared by the integration tests.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// `σ_N = [(N − 2n̄)(1+n̄)^{N+1} + n̄^{N+1}(N + 2 + 2n̄)] / [(1+n̄)^{N+1} − n̄^{N+1}]`
/// in exact rational arithmetic, with `n̄` the exact weighted mean of the
/// given (binary) parameters.
pub fn sigma_exact(n: usize, gamma_s: f64, gamma_d: f64, n_s: f64, n_d: f64) -> BigRational {
    let (gs, gd) = (exact(gamma_s), exact(gamma_d));
    let nb = (gs.clone() * exact(n_s) + gd.clone() * exact(n_d)) / (gs + gd);
    let one = BigRational::one();
    let nn = BigRational::from_integer(BigInt::from(n));
    let two = BigRational::from_integer(BigInt::from(2));
    let p = (one.clone() + nb.clone()).pow((n + 1) as i32);
    let q = nb.clone().pow((n + 1) as i32);
    let num = (nn.clone() - two.clone() * nb.clone()) * p.clone() + q.clone() * (nn + two.clone() + two * nb);
    num / (p - q)
}

pub fn sigma_f64(n: usize, gamma_s: f64, gamma_d: f64, n_s: f64, n_d: f64) -> f64 {
    sigma_exact(n, gamma_s, gamma_d, n_s, n_d).to_f64().unwrap()
}

/// `(n_S − n_D) Γ_SΓ_D/(Γ_S+Γ_D) σ_N`, exact then rounded once.
pub fn first_cumulant_exact(n: usize, gamma_s: f64, gamma_d: f64, n_s: f64, n_d: f64) -> f64 {
    let (gs, gd) = (exact(gamma_s), exact(gamma_d));
    let pref = (exact(n_s) - exact(n_d)) * gs.clone() * gd.clone() / (gs + gd);
    (pref * sigma_exact(n, gamma_s, gamma_d, n_s, n_d)).to_f64().unwrap()
}

/// The criterion-1 parameter grid: N log-spaced in 1..=80, n_S in
/// 10^{-3 + 6k/9}, n_D in {0, 0.5, 5}, Γ_S/Γ_D in {0.2, 1, 5} with Γ_D = 1.
pub fn standard_grid() -> Vec<(usize, f64, f64, f64, f64)> {
    let sizes = [1usize, 2, 3, 5, 8, 13, 20, 32, 50, 80];
    let mut out = Vec::new();
    for n in sizes {
        for k in 0..10 {
            let ns = 10f64.powf(-3.0 + 6.0 * k as f64 / 9.0);
            for nd in [0.0, 0.5, 5.0] {
                for ratio in [0.2, 1.0, 5.0] {
                    out.push((n, ratio, 1.0, ns, nd));
                }
            }
        }
    }
    out
}
