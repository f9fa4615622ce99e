//! Run configuration: a TOML file of `key = value` lines, overridden by
//! command-line flags.
//!
//! Recognised keys (all optional):
//!
//! | key       | type    | default | meaning                                   |
//! |-----------|---------|---------|-------------------------------------------|
//! | `N`       | integer | 5       | number of two-level systems               |
//! | `gamma_s` | float   | 1       | source rate                               |
//! | `gamma_d` | float   | 1       | drain rate                                |
//! | `n_s`     | float   | 1       | source occupation                         |
//! | `n_d`     | float   | 0       | drain occupation                          |
//! | `omega`   | float   | 1       | level splitting                           |
//! | `order`   | integer | 4       | highest cumulant order                    |
//! | `method`  | string  | `me`    | comma-separated methods                   |
//! | `chi`     | float   | 0.5     | counting field for single-field commands  |
//! | `chi_max` | float   | π       | half-width of the counting-field scan     |
//! | `grid`    | int/str | 41      | scan points, or a sweep grid              |
//! | `axis`    | string  | `n_s`   | sweep axis                                |
//! | `t`       | float   | 10      | time                                      |
//! | `n_max`   | integer | 100     | largest count of the distribution         |
//! | `me_cap`  | integer | 512     | largest `N` for the exact method in sweeps|
//! | `regime`  | string  | `linear`| thermodynamic-limit regime                |
//! | `out`     | path    | stdout  | output file or directory                  |

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use super::sweep::DEFAULT_ME_CAP;
use crate::error::{FcsError, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum GridValue {
    Count(u64),
    Spec(String),
}

fn grid_from_toml<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<String>, D::Error> {
    Ok(Option::<GridValue>::deserialize(d)?.map(|g| match g {
        GridValue::Count(n) => n.to_string(),
        GridValue::Spec(s) => s,
    }))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub gamma_s: Option<f64>,
    pub gamma_d: Option<f64>,
    pub n_s: Option<f64>,
    pub n_d: Option<f64>,
    pub omega: Option<f64>,
    pub order: Option<usize>,
    pub method: Option<String>,
    pub chi: Option<f64>,
    pub chi_max: Option<f64>,
    #[serde(default, deserialize_with = "grid_from_toml")]
    pub grid: Option<String>,
    pub axis: Option<String>,
    pub t: Option<f64>,
    pub n_max: Option<usize>,
    pub me_cap: Option<usize>,
    pub regime: Option<String>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        Config { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| FcsError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FcsError::Config(format!("{}: {e}", path.display())))?;
        Config::parse(&text)
    }

    /// Values set in `top` win over values set in `self`.
    pub fn overlay(self, top: Config) -> Config {
        let base = self;
        overlay!(base, top; n, gamma_s, gamma_d, n_s, n_d, omega, order, method, chi, chi_max,
                 grid, axis, t, n_max, me_cap, regime, out)
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::new(
            self.n.unwrap_or(5),
            self.gamma_s.unwrap_or(1.0),
            self.gamma_d.unwrap_or(1.0),
            self.n_s.unwrap_or(1.0),
            self.n_d.unwrap_or(0.0),
        )?
        .with_omega(self.omega.unwrap_or(1.0))
    }

    pub fn order(&self) -> usize {
        self.order.unwrap_or(4)
    }

    pub fn method(&self) -> &str {
        self.method.as_deref().unwrap_or("me")
    }

    pub fn chi(&self) -> f64 {
        self.chi.unwrap_or(0.5)
    }

    pub fn chi_max(&self) -> f64 {
        self.chi_max.unwrap_or(std::f64::consts::PI)
    }

    /// Number of scan points when `grid` is an integer.
    pub fn grid_points(&self) -> Result<usize> {
        match &self.grid {
            None => Ok(41),
            Some(g) => g
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| FcsError::Config(format!("grid must be a positive point count here, got '{g}'"))),
        }
    }

    pub fn axis(&self) -> &str {
        self.axis.as_deref().unwrap_or("n_s")
    }

    pub fn t(&self) -> f64 {
        self.t.unwrap_or(10.0)
    }

    pub fn n_max(&self) -> usize {
        self.n_max.unwrap_or(100)
    }

    pub fn me_cap(&self) -> usize {
        self.me_cap.unwrap_or(DEFAULT_ME_CAP)
    }

    pub fn regime(&self) -> &str {
        self.regime.as_deref().unwrap_or("linear")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_keys() {
        let c = Config::parse(
            "N = 20\ngamma_s = 0.5\nn_s = 3.0\nmethod = \"me,approx2\"\ngrid = \"log:0.01:100:5\"\nout = \"runs/a.csv\"\n",
        )
        .unwrap();
        assert_eq!(c.n, Some(20));
        assert_eq!(c.grid.as_deref(), Some("log:0.01:100:5"));
        let p = c.model_params().unwrap();
        assert_eq!((p.n, p.gamma_s, p.gamma_d, p.n_s, p.n_d), (20, 0.5, 1.0, 3.0, 0.0));
        let c = Config::parse("grid = 17").unwrap();
        assert_eq!(c.grid_points().unwrap(), 17);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(Config::parse("temperature = 3"), Err(FcsError::Config(_))));
        assert!(Config::parse("N = \"five\"").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = Config::parse("N = 20\nn_s = 3.0\norder = 2").unwrap();
        let flags = Config {
            n: Some(7),
            order: None,
            ..Config::default()
        };
        let c = file.overlay(flags);
        assert_eq!(c.n, Some(7));
        assert_eq!(c.n_s, Some(3.0));
        assert_eq!(c.order(), 2);
    }

    #[test]
    fn defaults() {
        let c = Config::default();
        let p = c.model_params().unwrap();
        assert_eq!((p.n, p.gamma_s, p.gamma_d, p.n_s, p.n_d, p.omega), (5, 1.0, 1.0, 1.0, 0.0, 1.0));
        assert_eq!(c.me_cap(), 512);
        assert!(Config { grid: Some("log:1:2:3".into()), ..Config::default() }.grid_points().is_err());
    }
}
