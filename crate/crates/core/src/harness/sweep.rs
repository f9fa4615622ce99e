//! Parameter sweeps over one axis for several methods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use super::table::{Cell, Table};
use crate::eom::{approximate_cumulants, ClosureKind};
use crate::error::{FcsError, Result};
use crate::fcs::{analytic_cumulants_n1, stationary_cumulants, MAX_RECURSION_ORDER};
use crate::model::ModelParams;

pub const DEFAULT_ME_CAP: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    N,
    NS,
    ND,
    GammaS,
    GammaD,
}

impl Axis {
    pub fn apply(self, base: &ModelParams, x: f64) -> Result<ModelParams> {
        let mut p = *base;
        match self {
            Axis::N => {
                if x < 1.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
                    return Err(FcsError::InvalidParameter(format!("N grid values must be positive integers, got {x}")));
                }
                p.n = x as usize;
            }
            Axis::NS => p.n_s = x,
            Axis::ND => p.n_d = x,
            Axis::GammaS => p.gamma_s = x,
            Axis::GammaD => p.gamma_d = x,
        }
        p.validate()?;
        Ok(p)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::N => "N",
            Axis::NS => "n_s",
            Axis::ND => "n_d",
            Axis::GammaS => "gamma_s",
            Axis::GammaD => "gamma_d",
        })
    }
}

impl FromStr for Axis {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "N" | "n" => Ok(Axis::N),
            "n_s" | "ns" | "n_S" => Ok(Axis::NS),
            "n_d" | "nd" | "n_D" => Ok(Axis::ND),
            "gamma_s" | "gamma-s" | "gamma_S" => Ok(Axis::GammaS),
            "gamma_d" | "gamma-d" | "gamma_D" => Ok(Axis::GammaD),
            other => Err(FcsError::InvalidParameter(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// A sweep grid: `a,b,c` lists values, `log:start:stop:count` and
/// `lin:start:stop:count` are inclusive ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Grid {
    List(Vec<f64>),
    Log { start: f64, stop: f64, count: usize },
    Linear { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Log { start, stop, count } => {
                let (a, b) = (start.log10(), stop.log10());
                spaced(count, |f| 10f64.powf(a + (b - a) * f), start, stop)
            }
            Grid::Linear { start, stop, count } => spaced(count, |f| start + (stop - start) * f, start, stop),
        }
    }

    /// Integer grid from log spacing, duplicates removed.
    pub fn log_integers(start: usize, stop: usize, count: usize) -> Grid {
        let mut v: Vec<f64> = Grid::Log {
            start: start as f64,
            stop: stop as f64,
            count,
        }
        .values()
        .into_iter()
        .map(f64::round)
        .collect();
        v.dedup();
        Grid::List(v)
    }
}

fn spaced(count: usize, f: impl Fn(f64) -> f64, start: f64, stop: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|i| match i {
                0 => start,
                i if i == count - 1 => stop,
                i => f(i as f64 / (count - 1) as f64),
            })
            .collect(),
    }
}

impl FromStr for Grid {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || FcsError::InvalidParameter(format!("cannot parse grid '{s}'"));
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("log:").or_else(|| s.strip_prefix("lin:")) {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            let (start, stop) = (num(parts[0])?, num(parts[1])?);
            let count = parts[2].trim().parse::<usize>().map_err(|_| bad())?;
            if s.starts_with("log:") {
                if !(start > 0.0 && stop > 0.0) {
                    return Err(FcsError::InvalidParameter("log grid bounds must be positive".into()));
                }
                Ok(Grid::Log { start, stop, count })
            } else {
                Ok(Grid::Linear { start, stop, count })
            }
        } else {
            Ok(Grid::List(s.split(',').map(num).collect::<Result<_>>()?))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Exact master equation.
    Me,
    Approx(ClosureKind),
    N1Analytic,
}

impl Method {
    pub fn cumulants(self, params: &ModelParams, order: usize, me_cap: usize) -> Result<Vec<f64>> {
        match self {
            Method::Me => {
                if params.n > me_cap {
                    return Err(FcsError::InvalidParameter(format!(
                        "N = {} exceeds the master-equation cap {me_cap}",
                        params.n
                    )));
                }
                Ok(stationary_cumulants(params, order)?.values)
            }
            Method::Approx(kind) => Ok(approximate_cumulants(params, kind, order)?.values),
            Method::N1Analytic => Ok(analytic_cumulants_n1(params, order)?.values),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Me => f.write_str("me"),
            Method::Approx(k) => write!(f, "{k}"),
            Method::N1Analytic => f.write_str("n1-analytic"),
        }
    }
}

impl FromStr for Method {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "me" => Ok(Method::Me),
            "n1-analytic" => Ok(Method::N1Analytic),
            other => other.parse().map(Method::Approx),
        }
    }
}

pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    s.split(',').filter(|x| !x.trim().is_empty()).map(str::parse).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub grid: Grid,
    pub base: ModelParams,
    pub methods: Vec<Method>,
    pub order: usize,
    pub me_cap: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<Vec<f64>> {
        let values = self.grid.values();
        if values.is_empty() {
            return Err(FcsError::InvalidParameter("sweep grid is empty".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(FcsError::InvalidParameter("sweep grid values must be finite".into()));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(FcsError::InvalidParameter("sweep grid must be strictly monotone".into()));
        }
        if self.methods.is_empty() {
            return Err(FcsError::InvalidParameter("sweep needs at least one method".into()));
        }
        if self.order == 0 {
            return Err(FcsError::InvalidParameter("order must be at least 1".into()));
        }
        if self.methods.contains(&Method::Me) && self.order > MAX_RECURSION_ORDER {
            return Err(FcsError::InvalidParameter(format!(
                "master-equation cumulants are limited to order {MAX_RECURSION_ORDER}"
            )));
        }
        self.base.validate()?;
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub params: Option<ModelParams>,
    pub method: Method,
    pub cumulants: Vec<f64>,
    pub wall_time: f64,
    pub error: Option<String>,
}

/// Evaluates every (grid point, method) pair in parallel. Rows come back
/// grid-major in the order of `spec.methods`, independent of scheduling.
/// Failures land in the row's `error` field.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let values = spec.validate()?;
    let jobs: Vec<(f64, Method)> = values
        .iter()
        .flat_map(|&x| spec.methods.iter().map(move |&m| (x, m)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(x, method)| {
            let start = Instant::now();
            let params = spec.axis.apply(&spec.base, x);
            let result = params
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|p| method.cumulants(p, spec.order, spec.me_cap));
            let wall_time = start.elapsed().as_secs_f64();
            let (cumulants, error) = match result {
                Ok(v) => (v, None),
                Err(e) => (Vec::new(), Some(format!("{}: {e}", e.kind()))),
            };
            SweepRow {
                x,
                params: params.ok(),
                method,
                cumulants,
                wall_time,
                error,
            }
        })
        .collect();
    Ok(rows)
}

/// Sweep rows as a table; `with_timing` adds the `wall_time_s` column.
pub fn sweep_table(spec: &SweepSpec, rows: &[SweepRow], with_timing: bool) -> Table {
    let mut cols: Vec<String> = vec![spec.axis.to_string() + "_axis"];
    cols.extend(["N", "gamma_s", "gamma_d", "n_s", "n_d", "method"].map(String::from));
    cols.extend((1..=spec.order).map(|k| format!("k{k}")));
    if with_timing {
        cols.push("wall_time_s".into());
    }
    cols.push("error".into());
    let mut t = Table::new(cols);
    for r in rows {
        let mut row: Vec<Cell> = vec![r.x.into()];
        match &r.params {
            Some(p) => row.extend([p.n.into(), p.gamma_s.into(), p.gamma_d.into(), p.n_s.into(), p.n_d.into()]),
            None => row.extend(std::iter::repeat_n(Cell::Empty, 5)),
        }
        row.push(r.method.to_string().into());
        row.extend((0..spec.order).map(|k| Cell::from(r.cumulants.get(k).copied())));
        if with_timing {
            row.push(r.wall_time.into());
        }
        row.push(r.error.clone().into());
        t.push(row).expect("row width matches header");
    }
    t
}
