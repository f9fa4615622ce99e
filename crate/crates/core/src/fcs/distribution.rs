//! Counting distribution `P_n(t)` recovered from the moment-generating
//! function by a discrete inverse Fourier transform over `χ`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

use super::transient::{propagate_states, InitialState, TransientOptions};
use crate::error::{FcsError, Result};
use crate::model::{CountingField, ModelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionOptions {
    pub initial: InitialState,
    pub transient: TransientOptions,
    /// Largest admissible probability mass on the two boundary indices `±n_max`.
    pub tail_tolerance: f64,
}

impl Default for DistributionOptions {
    fn default() -> Self {
        DistributionOptions {
            initial: InitialState::Stationary,
            transient: TransientOptions {
                rtol: 1e-11,
                atol: 1e-15,
                samples: 1,
            },
            tail_tolerance: 1e-9,
        }
    }
}

/// `P_n(t)` for `n = n_min, …, −n_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingDistribution {
    pub t: f64,
    pub n_min: i64,
    pub probabilities: Vec<f64>,
    /// Mass on the two boundary indices.
    pub tail_mass: f64,
}

impl CountingDistribution {
    pub fn n_max(&self) -> i64 {
        self.n_min + self.probabilities.len() as i64 - 1
    }

    pub fn probability(&self, n: i64) -> f64 {
        if n < self.n_min || n > self.n_max() {
            return 0.0;
        }
        self.probabilities[(n - self.n_min) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probabilities.iter().enumerate().map(move |(k, &p)| (self.n_min + k as i64, p))
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.iter().map(|(n, p)| (n as f64 - mu).powi(2) * p).sum()
    }
}

/// `P_n(t)` for `|n| ≤ n_max`, starting from the stationary state.
pub fn counting_distribution(params: &ModelParams, t: f64, n_max: usize) -> Result<CountingDistribution> {
    counting_distribution_with(params, t, n_max, &DistributionOptions::default())
}

pub fn counting_distribution_with(
    params: &ModelParams,
    t: f64,
    n_max: usize,
    opts: &DistributionOptions,
) -> Result<CountingDistribution> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FcsError::InvalidParameter(format!("t must be positive, got {t}")));
    }
    if n_max == 0 {
        return Err(FcsError::InvalidParameter("n_max must be at least 1".into()));
    }
    let m = 2 * n_max + 1;
    // M(−χ) = conj M(χ), so only the upper half of the grid is propagated.
    let half: Vec<Complex64> = (0..=n_max)
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                return Ok(Complex64::new(1.0, 0.0));
            }
            let chi = CountingField(2.0 * PI * k as f64 / m as f64);
            let s = propagate_states(params, chi, &[t], &opts.initial, &opts.transient)?;
            Ok(s[0].cgf.exp())
        })
        .collect::<Result<_>>()?;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, &v) in half.iter().enumerate() {
        buf[k] = v;
        if k > 0 {
            buf[m - k] = v.conj();
        }
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let inv = 1.0 / m as f64;
    let n_min = -(n_max as i64);
    let probabilities: Vec<f64> = (n_min..=n_max as i64)
        .map(|n| buf[n.rem_euclid(m as i64) as usize].re * inv)
        .collect();
    let tail_mass = probabilities[0].abs() + probabilities[probabilities.len() - 1].abs();
    if tail_mass > opts.tail_tolerance {
        return Err(FcsError::Aliasing {
            tail_mass,
            tolerance: opts.tail_tolerance,
        });
    }
    Ok(CountingDistribution {
        t,
        n_min,
        probabilities,
        tail_mass,
    })
}
