//! The table-producing work behind each CLI subcommand.

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::Config;
use super::sweep::{parse_methods, run_sweep, sweep_table, Method, SweepSpec};
use super::table::{Cell, Table};
use crate::eom::{approximate_cgf, limit_cgf, thermodynamic_limit, ClosureKind, LimitRegime};
use crate::error::{FcsError, Result};
use crate::fcs::{
    analytic_cgf_n1, counting_distribution, cross_check_cumulants_default, dominant_eigenvalue,
    propagate_transient, InitialState, TransientOptions, MAX_FD_ORDER,
};
use crate::model::CountingField;

/// `cumulants`: one row per (method, order). Besides the sweep methods,
/// `fd` selects the finite-difference cross-check.
pub fn cumulants(cfg: &Config) -> Result<Table> {
    let params = cfg.model_params()?;
    let order = cfg.order();
    let mut t = Table::new(["method", "k", "value"]);
    for name in cfg.method().split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (label, values) = if name == "fd" {
            if order > MAX_FD_ORDER {
                return Err(FcsError::InvalidParameter(format!(
                    "finite differences are limited to order {MAX_FD_ORDER}"
                )));
            }
            ("fd".to_string(), cross_check_cumulants_default(&params, order)?.cumulants.values)
        } else {
            let m: Method = name.parse()?;
            (m.to_string(), m.cumulants(&params, order, usize::MAX)?)
        };
        for (k, v) in values.into_iter().enumerate() {
            t.push(vec![label.clone().into(), (k + 1).into(), v.into()])?;
        }
    }
    if t.rows.is_empty() {
        return Err(FcsError::InvalidParameter("no method given".into()));
    }
    Ok(t)
}

fn chi_grid(cfg: &Config) -> Result<Vec<f64>> {
    let n = cfg.grid_points()?;
    let m = cfg.chi_max();
    if !(m > 0.0) || !m.is_finite() {
        return Err(FcsError::InvalidParameter(format!("chi_max must be positive, got {m}")));
    }
    Ok(if n == 1 {
        vec![m]
    } else {
        (0..n).map(|i| -m + 2.0 * m * i as f64 / (n - 1) as f64).collect()
    })
}

/// `cgf-scan`: the long-time CGF rate `C(χ,t)/t` on a symmetric `χ` grid.
/// The exact method reports `λ₀(χ)`.
pub fn cgf_scan(cfg: &Config) -> Result<Table> {
    let params = cfg.model_params()?;
    let chis = chi_grid(cfg)?;
    let methods = parse_methods(cfg.method())?;
    let mut t = Table::new(["chi", "method", "re", "im"]);
    for m in methods {
        let values: Vec<Complex64> = chis
            .par_iter()
            .map(|&x| {
                let chi = CountingField(x);
                match m {
                    Method::Me => dominant_eigenvalue(&params, chi),
                    Method::Approx(kind) => approximate_cgf(&params, kind, chi, 1.0),
                    Method::N1Analytic => analytic_cgf_n1(&params, chi, 1.0),
                }
            })
            .collect::<Result<_>>()?;
        for (&x, v) in chis.iter().zip(values) {
            t.push(vec![x.into(), m.to_string().into(), v.re.into(), v.im.into()])?;
        }
    }
    Ok(t)
}

/// `transient`: `C(χ,t)` from the stationary state, `grid` samples up to `t`.
pub fn transient(cfg: &Config) -> Result<Table> {
    let params = cfg.model_params()?;
    let opts = TransientOptions {
        samples: cfg.grid_points()?,
        ..TransientOptions::default()
    };
    let tr = propagate_transient(&params, CountingField(cfg.chi()), cfg.t(), &InitialState::Stationary, &opts)?;
    let mut t = Table::new(["t", "re", "im"]);
    for (&time, v) in tr.times.iter().zip(&tr.values) {
        t.push(vec![time.into(), v.re.into(), v.im.into()])?;
    }
    Ok(t)
}

/// `distribution`: `P_n(t)` for `|n| ≤ n_max`.
pub fn distribution(cfg: &Config) -> Result<Table> {
    let params = cfg.model_params()?;
    let d = counting_distribution(&params, cfg.t(), cfg.n_max())?;
    let mut t = Table::new(["n", "p"]);
    for (n, p) in d.iter() {
        t.push(vec![n.into(), p.into()])?;
    }
    Ok(t)
}

pub fn sweep_spec(cfg: &Config) -> Result<SweepSpec> {
    let grid = cfg
        .grid
        .as_deref()
        .ok_or_else(|| FcsError::Config("sweep needs a grid (list or log:/lin: range)".into()))?
        .parse()?;
    Ok(SweepSpec {
        axis: cfg.axis().parse()?,
        grid,
        base: cfg.model_params()?,
        methods: parse_methods(cfg.method())?,
        order: cfg.order(),
        me_cap: cfg.me_cap(),
    })
}

/// `sweep`: the sweep table including wall times.
pub fn sweep(cfg: &Config) -> Result<Table> {
    let spec = sweep_spec(cfg)?;
    let rows = run_sweep(&spec)?;
    Ok(sweep_table(&spec, &rows, true))
}

/// `limits`: limit coefficient and the approximate CGF against its limit
/// form at `χ` and `t`, for each closure.
pub fn limits(cfg: &Config) -> Result<Table> {
    let params = cfg.model_params()?;
    let regime: LimitRegime = cfg.regime().parse()?;
    let chi = CountingField(cfg.chi());
    let time = cfg.t();
    let mut t = Table::new(["regime", "method", "coefficient", "cgf_re", "cgf_im", "limit_re", "limit_im", "rel_diff"]);
    for kind in ClosureKind::ALL {
        let c = thermodynamic_limit(&params, kind, regime)?;
        let a = approximate_cgf(&params, kind, chi, time)?;
        let l = limit_cgf(&params, kind, regime, chi, time)?;
        let rel = if l.norm() > 0.0 { (a - l).norm() / l.norm() } else { (a - l).norm() };
        t.push(vec![
            regime.to_string().into(),
            kind.to_string().into(),
            c.coefficient.into(),
            a.re.into(),
            a.im.into(),
            l.re.into(),
            l.im.into(),
            Cell::Num(rel),
        ])?;
    }
    Ok(t)
}
