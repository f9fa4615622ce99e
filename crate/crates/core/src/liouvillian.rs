//! The counting-field-tilted generator restricted to the populations of the
//! symmetric `j = N/2` sector, the thermal stationary state and its exact
//! `J_z` moments.
//!
//! Indexing: population index `i = m + N/2 ∈ {0, …, N}`; the `J_z`
//! eigenvalue of index `i` is `2m = 2i − N`.
//!
//! Transition `i → i+1` (absorption) has weight `x₋(m) = j(j+1) − m(m+1) =
//! (N − i)(i + 1)`; transition `i → i−1` (emission) has weight
//! `x₊(m) = j(j+1) − m(m−1) = i(N − i + 1)`. Both are exact integers.
//! Drain emissions carry the phase `e^{+iχ}`, drain absorptions `e^{−iχ}`.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{FcsError, Result};
use crate::model::{effective_bath, CountingField, ModelParams};
use crate::numerics::{compensated_sum, CompensatedSum};

/// Absorption weight for index `i`, `(N − i)(i + 1)`.
pub fn absorption_weight(n: usize, i: usize) -> f64 {
    ((n - i) as f64) * ((i + 1) as f64)
}

/// Emission weight for index `i`, `i(N − i + 1)`.
pub fn emission_weight(n: usize, i: usize) -> f64 {
    (i as f64) * ((n - i + 1) as f64)
}

/// `J_z` eigenvalue `2m = 2i − N` of population index `i`.
pub fn jz_eigenvalue(n: usize, i: usize) -> f64 {
    2.0 * i as f64 - n as f64
}

/// Per-reservoir rate prefactors, before the collective weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RatePrefactors {
    /// `Γ_S n_S`
    pub source_up: f64,
    /// `Γ_S (1 + n_S)`
    pub source_down: f64,
    /// `Γ_D n_D`
    pub drain_up: f64,
    /// `Γ_D (1 + n_D)`
    pub drain_down: f64,
}

impl RatePrefactors {
    pub fn new(p: &ModelParams) -> Self {
        RatePrefactors {
            source_up: p.gamma_s * p.n_s,
            source_down: p.gamma_s * (1.0 + p.n_s),
            drain_up: p.gamma_d * p.n_d,
            drain_down: p.gamma_d * (1.0 + p.n_d),
        }
    }

    pub fn up(&self) -> f64 {
        self.source_up + self.drain_up
    }

    pub fn down(&self) -> f64 {
        self.source_down + self.drain_down
    }
}

/// `L(χ)` on populations as three complex bands.
///
/// `diag[i]` is the `(i, i)` entry, `upper[i]` the `(i, i+1)` entry (emission
/// out of `i+1`) and `lower[i]` the `(i+1, i)` entry (absorption out of `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedGenerator {
    pub dim: usize,
    pub diag: Vec<Complex64>,
    pub upper: Vec<Complex64>,
    pub lower: Vec<Complex64>,
    pub chi: CountingField,
}

pub fn build_tilted_generator(params: &ModelParams, chi: CountingField) -> Result<TiltedGenerator> {
    params.validate()?;
    let n = params.n;
    let r = RatePrefactors::new(params);
    let up_phase = Complex64::new(r.source_up, 0.0) + Complex64::from_polar(r.drain_up, -chi.0);
    let down_phase = Complex64::new(r.source_down, 0.0) + Complex64::from_polar(r.drain_down, chi.0);

    let diag = (0..=n)
        .map(|i| {
            Complex64::new(
                -(r.up() * absorption_weight(n, i) + r.down() * emission_weight(n, i)),
                0.0,
            )
        })
        .collect();
    let lower = (0..n).map(|i| up_phase * absorption_weight(n, i)).collect();
    let upper = (0..n).map(|i| down_phase * emission_weight(n, i + 1)).collect();

    Ok(TiltedGenerator {
        dim: n + 1,
        diag,
        upper,
        lower,
        chi,
    })
}

/// Tridiagonal matrix-vector product.
pub fn apply_generator(gen: &TiltedGenerator, p: &[Complex64]) -> Result<Vec<Complex64>> {
    if p.len() != gen.dim {
        return Err(FcsError::DimensionMismatch {
            expected: gen.dim,
            got: p.len(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); gen.dim];
    gen.apply_into(p, &mut out);
    Ok(out)
}

impl TiltedGenerator {
    /// `out = L p`; lengths must equal `dim`.
    pub(crate) fn apply_into(&self, p: &[Complex64], out: &mut [Complex64]) {
        let d = self.dim;
        for i in 0..d {
            let mut acc = self.diag[i] * p[i];
            if i > 0 {
                acc += self.lower[i - 1] * p[i - 1];
            }
            if i + 1 < d {
                acc += self.upper[i] * p[i + 1];
            }
            out[i] = acc;
        }
    }

    /// Row vector times generator, `vᵀ L`.
    pub fn apply_left(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(FcsError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let d = self.dim;
        Ok((0..d)
            .map(|j| {
                let mut acc = v[j] * self.diag[j];
                if j > 0 {
                    acc += v[j - 1] * self.upper[j - 1];
                }
                if j + 1 < d {
                    acc += v[j + 1] * self.lower[j];
                }
                acc
            })
            .collect())
    }

    pub fn column_sums(&self) -> Vec<Complex64> {
        let ones = vec![Complex64::new(1.0, 0.0); self.dim];
        self.apply_left(&ones).expect("dimension matches by construction")
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let d = self.dim;
        let mut m = DMatrix::from_element(d, d, Complex64::new(0.0, 0.0));
        for i in 0..d {
            m[(i, i)] = self.diag[i];
            if i + 1 < d {
                m[(i, i + 1)] = self.upper[i];
                m[(i + 1, i)] = self.lower[i];
            }
        }
        m
    }

    /// Largest absolute entry; the natural scale for eigenvalue tolerances.
    pub fn scale(&self) -> f64 {
        self.diag
            .iter()
            .chain(&self.upper)
            .chain(&self.lower)
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// CSV dump of the bands, one row per population index. Columns:
    /// `m,diag_re,diag_im,upper_re,upper_im,lower_re,lower_im`; `upper` and
    /// `lower` are empty where the band has no entry.
    pub fn write_bands_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "m,diag_re,diag_im,upper_re,upper_im,lower_re,lower_im")?;
        let n = self.dim - 1;
        for i in 0..self.dim {
            let m = i as f64 - n as f64 / 2.0;
            write!(w, "{m},{:.17e},{:.17e}", self.diag[i].re, self.diag[i].im)?;
            match self.upper.get(i) {
                Some(z) => write!(w, ",{:.17e},{:.17e}", z.re, z.im)?,
                None => write!(w, ",,")?,
            }
            match self.lower.get(i) {
                Some(z) => writeln!(w, ",{:.17e},{:.17e}", z.re, z.im)?,
                None => writeln!(w, ",,")?,
            }
        }
        Ok(())
    }
}

/// Real generator at `χ = 0` with zero column sums, plus the solver for
/// `L₀ x = b` on the trace-free complement.
#[derive(Debug, Clone)]
pub(crate) struct ConservativeGenerator {
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub lower: Vec<f64>,
}

impl ConservativeGenerator {
    pub fn new(params: &ModelParams) -> Self {
        let n = params.n;
        let r = RatePrefactors::new(params);
        ConservativeGenerator {
            diag: (0..=n)
                .map(|i| -(r.up() * absorption_weight(n, i) + r.down() * emission_weight(n, i)))
                .collect(),
            upper: (0..n).map(|i| r.down() * emission_weight(n, i + 1)).collect(),
            lower: (0..n).map(|i| r.up() * absorption_weight(n, i)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Solves the bordered system `L₀ x = b`, `Σ x = trace`.
    ///
    /// Row 0 of `L₀` is replaced by the trace row (it is implied by the others
    /// when `Σ b = 0`), and the system is eliminated from the top state
    /// downwards. The pivots are taken from the zero-column-sum structure,
    /// `pivot_i = −upper[i−1]`, so no subtraction of nearly equal rates
    /// happens. Fill in the trace row stays bounded by `1 + n̄`.
    pub fn solve_bordered(&self, b: &[f64], trace: f64) -> Result<Vec<f64>> {
        let d = self.dim();
        if b.len() != d {
            return Err(FcsError::DimensionMismatch {
                expected: d,
                got: b.len(),
            });
        }
        if d == 1 {
            return Ok(vec![trace]);
        }
        let mut rhs = b.to_vec();
        let mut pivot = vec![0.0; d];
        let mut w = vec![1.0; d];
        let mut rhs0 = trace;
        for i in (1..d).rev() {
            let piv = -self.upper[i - 1];
            if piv == 0.0 {
                return Err(FcsError::SingularSystem { row: i });
            }
            pivot[i] = piv;
            if i > 1 {
                let f = self.upper[i - 1] / piv;
                rhs[i - 1] -= f * rhs[i];
            }
            let g = w[i] / piv;
            w[i - 1] -= g * self.lower[i - 1];
            rhs0 -= g * rhs[i];
        }
        if w[0] == 0.0 {
            return Err(FcsError::SingularSystem { row: 0 });
        }
        let mut x = vec![0.0; d];
        x[0] = rhs0 / w[0];
        for i in 1..d {
            x[i] = (rhs[i] - self.lower[i - 1] * x[i - 1]) / pivot[i];
        }
        Ok(x)
    }
}

/// Normalized populations `ρ̄_i`, index-ordered from `m = −N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryState {
    pub populations: Vec<f64>,
}

impl StationaryState {
    pub fn dim(&self) -> usize {
        self.populations.len()
    }

    pub fn as_complex(&self) -> Vec<Complex64> {
        self.populations.iter().map(|&p| Complex64::new(p, 0.0)).collect()
    }
}

/// Geometric weights `r^i` and their sum, for `n̄ > 0`.
fn geometric_weights(n: usize, log_ratio: f64) -> (Vec<f64>, f64) {
    let w: Vec<f64> = (0..=n).map(|i| (i as f64 * log_ratio).exp()).collect();
    let z = compensated_sum(w.iter().copied());
    (w, z)
}

pub fn stationary_state(params: &ModelParams) -> Result<StationaryState> {
    let bath = effective_bath(params)?;
    let n = params.n;
    if bath.n_bar == 0.0 {
        let mut populations = vec![0.0; n + 1];
        populations[0] = 1.0;
        return Ok(StationaryState { populations });
    }
    let (w, z) = geometric_weights(n, bath.log_ratio());
    Ok(StationaryState {
        populations: w.into_iter().map(|x| x / z).collect(),
    })
}

/// `⟨J_z^k⟩` in the thermal stationary state.
///
/// Odd moments pair `m` with `−m` so that the nearly cancelling contributions
/// near equipartition are combined through `expm1` before summation.
pub fn exact_moment(params: &ModelParams, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(FcsError::InvalidParameter("moment order must be >= 1".into()));
    }
    let bath = effective_bath(params)?;
    let n = params.n;
    if bath.n_bar == 0.0 {
        return Ok((-(n as f64)).powi(k as i32));
    }
    let log_r = bath.log_ratio();
    let (w, z) = geometric_weights(n, log_r);
    let mut acc = CompensatedSum::new();
    if k.is_multiple_of(2) {
        for (i, wi) in w.iter().enumerate() {
            acc.add(jz_eigenvalue(n, i).powi(k as i32) * wi);
        }
    } else {
        for i in 0..=n {
            let j = n - i;
            if i >= j {
                break;
            }
            // (2i−N)^k (r^i − r^{N−i}) = (2i−N)^k r^i (−expm1((N−2i) ln r))
            let diff = -w[i] * (((j - i) as f64) * log_r).exp_m1();
            acc.add(jz_eigenvalue(n, i).powi(k as i32) * diff);
        }
    }
    Ok(acc.value() / z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(n: usize, gs: f64, gd: f64, ns: f64, nd: f64) -> ModelParams {
        ModelParams::new(n, gs, gd, ns, nd).unwrap()
    }

    #[test]
    fn n1_generator_decay_rate() {
        let g = build_tilted_generator(&p(1, 1.0, 1.0, 0.0, 0.0), CountingField(0.0)).unwrap();
        assert_eq!(g.dim, 2);
        assert_eq!(g.upper[0], Complex64::new(2.0, 0.0));
        assert_eq!(g.lower[0], Complex64::new(0.0, 0.0));
        assert_eq!(g.diag[1], Complex64::new(-2.0, 0.0));
    }

    #[test]
    fn n2_absorption_weight_at_m0() {
        // x₋(0) = j(j+1) = 2 at j = 1
        assert_eq!(absorption_weight(2, 1), 2.0);
        let g = build_tilted_generator(&p(2, 1.0, 1.0, 1.0, 0.0), CountingField(0.0)).unwrap();
        assert_eq!(g.lower[1], Complex64::new(2.0, 0.0));
    }

    #[test]
    fn weights_match_angular_momentum_formula() {
        for n in 1..12usize {
            let j = n as f64 / 2.0;
            for i in 0..=n {
                let m = i as f64 - j;
                assert_eq!(absorption_weight(n, i), j * (j + 1.0) - m * (m + 1.0));
                assert_eq!(emission_weight(n, i), j * (j + 1.0) - m * (m - 1.0));
            }
        }
    }

    #[test]
    fn apply_unit_vector_gives_column() {
        let g = build_tilted_generator(&p(4, 0.7, 1.3, 2.0, 0.5), CountingField(0.4)).unwrap();
        let dense = g.to_dense();
        for c in 0..g.dim {
            let mut e = vec![Complex64::new(0.0, 0.0); g.dim];
            e[c] = Complex64::new(1.0, 0.0);
            let col = apply_generator(&g, &e).unwrap();
            for r in 0..g.dim {
                assert_eq!(col[r], dense[(r, c)]);
            }
        }
        assert!(matches!(
            apply_generator(&g, &[Complex64::new(1.0, 0.0)]),
            Err(FcsError::DimensionMismatch { expected: 5, got: 1 })
        ));
    }

    #[test]
    fn stationary_examples() {
        let s = stationary_state(&p(7, 1.0, 1.0, 0.0, 0.0)).unwrap();
        assert_eq!(s.populations[0], 1.0);
        assert!(s.populations[1..].iter().all(|&x| x == 0.0));

        let s = stationary_state(&p(2, 1.0, 1.0, 1e15, 1e15)).unwrap();
        for x in &s.populations {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }

        // n̄ = 1/2, r = 1/3: (1, 1/3) normalizes to (3/4, 1/4)
        let s = stationary_state(&p(1, 1.0, 1.0, 1.0, 0.0)).unwrap();
        assert!((s.populations[0] - 0.75).abs() < 1e-15);
        assert!((s.populations[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn moment_examples() {
        let q = p(6, 1.0, 2.0, 0.0, 0.0);
        assert_eq!(exact_moment(&q, 1).unwrap(), -6.0);
        assert_eq!(exact_moment(&q, 2).unwrap(), 36.0);

        let q = p(1, 1.0, 1.0, 1.0, 0.0);
        assert!((exact_moment(&q, 1).unwrap() + 0.5).abs() < 1e-15);

        // equipartition: ⟨J_z⟩ = 0, ⟨J_z²⟩ = (4/(N+1)) Σ m²
        for n in [1usize, 2, 5, 10] {
            let q = p(n, 1.0, 1.0, 1e14, 1e14);
            let j = n as f64 / 2.0;
            let m2: f64 = (0..=n).map(|i| (i as f64 - j).powi(2)).sum();
            assert!(exact_moment(&q, 1).unwrap().abs() < 1e-9);
            let expect = 4.0 * m2 / (n as f64 + 1.0);
            assert!((exact_moment(&q, 2).unwrap() - expect).abs() < 1e-9 * expect);
        }
        assert!(exact_moment(&q, 0).is_err());
    }

    #[test]
    fn moments_against_high_precision_reference() {
        // 40-digit direct summation of the geometric distribution
        let cases: [(usize, f64, [f64; 4]); 3] = [
            (3, 0.5, [-2.1, 6.6, -17.7, 57.0]),
            (
                10,
                2.5,
                [
                    -5.557_023_344_467_857,
                    53.315_719_866_385_72,
                    -416.045_797_052_264_2,
                    4_201.637_991_280_116,
                ],
            ),
            (
                7,
                100.0,
                [
                    -0.104_467_269_304_601_08,
                    21.004_157_739_550_365,
                    -3.865_386_478_710_709,
                    777.212_640_158_388_7,
                ],
            ),
        ];
        for (n, nbar, expect) in cases {
            let q = p(n, 1.0, 1.0, nbar, nbar);
            for (k, e) in expect.iter().enumerate() {
                let got = exact_moment(&q, k as u32 + 1).unwrap();
                assert!((got - e).abs() <= 1e-13 * e.abs(), "N={n} n̄={nbar} k={}: {got} vs {e}", k + 1);
            }
        }
    }

    #[test]
    fn bordered_solve_reproduces_stationary_state() {
        for q in [p(1, 1.0, 1.0, 1.0, 0.0), p(9, 0.3, 2.0, 4.0, 1.0), p(30, 1.0, 1.0, 0.0, 0.0)] {
            let gen = ConservativeGenerator::new(&q);
            let x = gen.solve_bordered(&vec![0.0; q.dim()], 1.0).unwrap();
            let s = stationary_state(&q).unwrap();
            for (a, b) in x.iter().zip(&s.populations) {
                assert!((a - b).abs() < 1e-14, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn bordered_solve_matches_dense_lu() {
        let q = p(12, 0.8, 1.7, 3.0, 0.4);
        let gen = ConservativeGenerator::new(&q);
        let d = q.dim();
        // trace-free right-hand side
        let mut b: Vec<f64> = (0..d).map(|i| ((i * 7 % 5) as f64) - 1.3).collect();
        let mean = b.iter().sum::<f64>() / d as f64;
        b.iter_mut().for_each(|x| *x -= mean);
        let x = gen.solve_bordered(&b, 0.0).unwrap();

        let mut a = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            a[(i, i)] = gen.diag[i];
            if i + 1 < d {
                a[(i, i + 1)] = gen.upper[i];
                a[(i + 1, i)] = gen.lower[i];
            }
        }
        for c in 0..d {
            a[(0, c)] = 1.0;
        }
        let mut rhs = nalgebra::DVector::from_vec(b.clone());
        rhs[0] = 0.0;
        let y = a.lu().solve(&rhs).unwrap();
        for i in 0..d {
            assert!((x[i] - y[i]).abs() < 1e-12 * (1.0 + y[i].abs()));
        }
    }

    #[test]
    fn bands_csv_shape() {
        let g = build_tilted_generator(&p(2, 1.0, 1.0, 1.0, 0.0), CountingField(0.3)).unwrap();
        let mut buf = Vec::new();
        g.write_bands_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("m,diag_re"));
        assert!(lines[3].ends_with(",,,,"));
        assert!(lines[1].starts_with("-1,"));
    }

    proptest! {
        #[test]
        fn column_sums_vanish_at_zero_field(n in 1usize..60, gs in 0.0f64..5.0, gd in 0.01f64..5.0,
                                            ns in 0.0f64..50.0, nd in 0.0f64..50.0) {
            let g = build_tilted_generator(&p(n, gs, gd, ns, nd), CountingField(0.0)).unwrap();
            let scale = g.scale();
            for s in g.column_sums() {
                prop_assert!(s.norm() <= 1e-14 * scale.max(1.0));
            }
            for z in g.upper.iter().chain(&g.lower) {
                prop_assert!(z.im == 0.0 && z.re >= 0.0);
            }
        }

        #[test]
        fn stationary_is_null_vector_and_detailed_balanced(n in 1usize..80, gs in 0.0f64..5.0, gd in 0.01f64..5.0,
                                                           ns in 0.0f64..100.0, nd in 0.0f64..100.0) {
            let q = p(n, gs, gd, ns, nd);
            let s = stationary_state(&q).unwrap();
            let bath = effective_bath(&q).unwrap();
            let g = build_tilted_generator(&q, CountingField(0.0)).unwrap();
            let out = apply_generator(&g, &s.as_complex()).unwrap();
            let scale = g.scale();
            for z in out {
                prop_assert!(z.norm() <= 1e-13 * scale);
            }
            let total: f64 = s.populations.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-13);
            for i in 0..n {
                let fwd = g.lower[i].re * s.populations[i];
                let bwd = g.upper[i].re * s.populations[i + 1];
                prop_assert!((fwd - bwd).abs() <= 1e-12 * fwd.abs().max(bwd.abs()).max(1e-300));
                if s.populations[i] > 1e-250 {
                    let ratio = s.populations[i + 1] / s.populations[i];
                    prop_assert!((ratio - bath.ratio).abs() <= 1e-12 * bath.ratio.max(1e-300));
                }
            }
        }

        #[test]
        fn moment_identity_holds(n in 1usize..200, gs in 0.0f64..5.0, gd in 0.01f64..5.0,
                                 ns in 0.0f64..1e3, nd in 0.0f64..1e3) {
            let q = p(n, gs, gd, ns, nd);
            let k = effective_bath(&q).unwrap().damping();
            let a = exact_moment(&q, 1).unwrap();
            let b = exact_moment(&q, 2).unwrap();
            let j2 = q.total_spin_sq();
            let resid = -k * a + b / 2.0 - j2 / 2.0;
            let scale = (k * a).abs() + b / 2.0 + j2 / 2.0;
            prop_assert!(resid.abs() <= 1e-10 * scale, "resid {resid} scale {scale}");
        }
    }
}
