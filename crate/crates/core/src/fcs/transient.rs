//! Transient cumulant-generating function `C(χ,t) = ln Tr e^{L(χ)t} ρ₀`.
//!
//! The tilted populations are integrated with the Dormand-Prince 5(4) pair.
//! After every accepted step the state is divided by its trace and the
//! logarithm of that trace is accumulated into `C`, so the state stays
//! `O(1)` at all times and `Im C` is followed continuously past `±π`.

use num_complex::Complex64;

use super::CumulantSet;
use super::CumulantMethod;
use crate::error::{FcsError, Result};
use crate::liouvillian::{build_tilted_generator, stationary_state, StationaryState, TiltedGenerator};
use crate::model::{CountingField, ModelParams};
use crate::numerics::compensated_sum_complex;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Stationary,
    Populations(Vec<f64>),
}

impl From<StationaryState> for InitialState {
    fn from(s: StationaryState) -> Self {
        InitialState::Populations(s.populations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Number of uniformly spaced output times after `t = 0`.
    pub samples: usize,
}

impl Default for TransientOptions {
    fn default() -> Self {
        TransientOptions {
            rtol: 1e-9,
            atol: 1e-14,
            samples: 100,
        }
    }
}

/// Samples of `C(χ, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientCGF {
    pub chi: CountingField,
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl TransientCGF {
    /// Slope of `C` between the last two samples.
    pub fn late_slope(&self) -> Option<Complex64> {
        let n = self.times.len();
        (n >= 2).then(|| (self.values[n - 1] - self.values[n - 2]) / (self.times[n - 1] - self.times[n - 2]))
    }
}

/// `C(χ,t)` together with the trace-normalized tilted populations.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedState {
    pub t: f64,
    pub cgf: Complex64,
    pub populations: Vec<Complex64>,
}

// Dormand-Prince 5(4) tableau; the generator is autonomous so the nodes c_i are not needed
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients: b − b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Integrator<'a> {
    gen: &'a TiltedGenerator,
    rtol: f64,
    atol: f64,
    k: [Vec<Complex64>; 7],
    tmp: Vec<Complex64>,
    y_new: Vec<Complex64>,
}

impl<'a> Integrator<'a> {
    fn new(gen: &'a TiltedGenerator, opts: &TransientOptions) -> Self {
        let d = gen.dim;
        let z = || vec![Complex64::new(0.0, 0.0); d];
        Integrator {
            gen,
            rtol: opts.rtol,
            atol: opts.atol,
            k: [z(), z(), z(), z(), z(), z(), z()],
            tmp: z(),
            y_new: z(),
        }
    }

    fn stage(&mut self, y: &[Complex64], h: f64, coeffs: &[(usize, f64)], out: usize) {
        for i in 0..y.len() {
            let mut acc = y[i];
            for &(j, a) in coeffs {
                acc += self.k[j][i] * (h * a);
            }
            self.tmp[i] = acc;
        }
        let (tmp, k) = (&self.tmp, &mut self.k[out]);
        self.gen.apply_into(tmp, k);
    }

    /// One trial step; returns the scaled error norm. The candidate is left
    /// in `y_new` and its derivative in `k[6]`.
    fn try_step(&mut self, y: &[Complex64], h: f64) -> f64 {
        self.stage(y, h, &[(0, A21)], 1);
        self.stage(y, h, &[(0, A31), (1, A32)], 2);
        self.stage(y, h, &[(0, A41), (1, A42), (2, A43)], 3);
        self.stage(y, h, &[(0, A51), (1, A52), (2, A53), (3, A54)], 4);
        self.stage(y, h, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 5);
        for i in 0..y.len() {
            self.y_new[i] = y[i]
                + (self.k[0][i] * B1 + self.k[2][i] * B3 + self.k[3][i] * B4 + self.k[4][i] * B5 + self.k[5][i] * B6) * h;
        }
        let (yn, k6) = (&self.y_new, &mut self.k[6]);
        self.gen.apply_into(yn, k6);
        let mut err = 0.0f64;
        for i in 0..y.len() {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let sc = self.atol + self.rtol * y[i].norm().max(self.y_new[i].norm());
            err = err.max(e.norm() / sc);
        }
        err
    }
}

fn initial_vector(params: &ModelParams, initial: &InitialState) -> Result<Vec<Complex64>> {
    let pops = match initial {
        InitialState::Stationary => stationary_state(params)?.populations,
        InitialState::Populations(v) => {
            if v.len() != params.dim() {
                return Err(FcsError::DimensionMismatch {
                    expected: params.dim(),
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(FcsError::InvalidParameter("initial populations must be nonnegative".into()));
            }
            v.clone()
        }
    };
    let total: f64 = pops.iter().sum();
    if !(total > 0.0) {
        return Err(FcsError::InvalidParameter("initial populations must have positive trace".into()));
    }
    Ok(pops.iter().map(|&x| Complex64::new(x / total, 0.0)).collect())
}

/// Integrates the tilted populations to each of `times` (ascending, `> 0`).
pub fn propagate_states(
    params: &ModelParams,
    chi: CountingField,
    times: &[f64],
    initial: &InitialState,
    opts: &TransientOptions,
) -> Result<Vec<PropagatedState>> {
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.first().is_some_and(|&t| !(t > 0.0)) {
        return Err(FcsError::InvalidParameter("output times must be positive and increasing".into()));
    }
    if !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(FcsError::InvalidParameter("tolerances must be positive".into()));
    }
    let gen = build_tilted_generator(params, chi)?;
    let mut y = initial_vector(params, initial)?;
    let mut integ = Integrator::new(&gen, opts);
    let scale = gen.scale().max(f64::MIN_POSITIVE);
    let mut h = 0.1 / scale;
    let mut t = 0.0f64;
    let mut cgf = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(times.len());
    let mut fsal_valid = false;

    for &t_out in times {
        while t < t_out {
            let last = t + h >= t_out;
            let h_try = if last { t_out - t } else { h };
            if !fsal_valid {
                let (y0, k0) = (&y, &mut integ.k[0]);
                gen.apply_into(y0, k0);
            }
            let err = integ.try_step(&y, h_try);
            if err <= 1.0 {
                let trace = compensated_sum_complex(integ.y_new.iter().copied());
                let ok = trace.is_finite() && trace.norm() > 0.0 && (chi.0 != 0.0 || trace.re > 0.0);
                if !ok {
                    return Err(FcsError::NonPositiveTrace { t: t + h_try });
                }
                cgf += trace.ln();
                let inv = 1.0 / trace;
                for (yi, yn) in y.iter_mut().zip(&integ.y_new) {
                    *yi = yn * inv;
                }
                // FSAL: derivative at the new (rescaled) point
                let (k6, k0) = {
                    let (a, b) = integ.k.split_at_mut(6);
                    (&b[0], &mut a[0])
                };
                for (dst, src) in k0.iter_mut().zip(k6) {
                    *dst = src * inv;
                }
                fsal_valid = true;
                t = if last { t_out } else { t + h_try };
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            let h_next = h_try * factor;
            if err <= 1.0 && last {
                // keep the step length from before the clipped final step
                h = h.max(h_next);
            } else {
                h = h_next;
            }
            if h < 1e-14 * t_out.max(1.0 / scale) {
                return Err(FcsError::StepSizeUnderflow { t });
            }
        }
        out.push(PropagatedState {
            t: t_out,
            cgf,
            populations: y.clone(),
        });
    }
    Ok(out)
}

/// `C(χ,t)` on `opts.samples` uniform times in `(0, t_final]`, with `C(χ,0) = 0` prepended.
pub fn propagate_transient(
    params: &ModelParams,
    chi: CountingField,
    t_final: f64,
    initial: &InitialState,
    opts: &TransientOptions,
) -> Result<TransientCGF> {
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(FcsError::InvalidParameter(format!("t_final must be positive, got {t_final}")));
    }
    let samples = opts.samples.max(1);
    let times: Vec<f64> = (1..=samples).map(|i| t_final * i as f64 / samples as f64).collect();
    let states = propagate_states(params, chi, &times, initial, opts)?;
    let mut all_times = vec![0.0];
    let mut values = vec![Complex64::new(0.0, 0.0)];
    for s in states {
        all_times.push(s.t);
        values.push(s.cgf);
    }
    Ok(TransientCGF {
        chi,
        times: all_times,
        values,
    })
}

/// Cumulants `⟨⟨n_k(t)⟩⟩` of the transferred count at finite `t`, from a
/// five-point central difference of the propagated `C(χ,t)` with step `h`.
/// Orders 1 and 2 only.
pub fn finite_time_cumulants(
    params: &ModelParams,
    t: f64,
    initial: &InitialState,
    h: f64,
    opts: &TransientOptions,
) -> Result<CumulantSet> {
    if !(h > 0.0) {
        return Err(FcsError::InvalidParameter("step must be positive".into()));
    }
    let c = |x: f64| -> Result<Complex64> {
        Ok(propagate_states(params, CountingField(x), &[t], initial, opts)?[0].cgf)
    };
    let (m2, m1, p1, p2) = (c(-2.0 * h)?, c(-h)?, c(h)?, c(2.0 * h)?);
    let d1 = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
    let d2 = (-m2 - p2 + (p1 + m1) * 16.0 - c(0.0)? * 30.0) / (12.0 * h * h);
    Ok(CumulantSet {
        order: 2,
        values: vec![d1.im, -d2.re],
        method: CumulantMethod::FiniteDifference,
    })
}
