//! Data and plotting scripts for the first-cumulant ratio figure (`fig2`)
//! and the second-cumulant occupation scan (`fig3`).

use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::sweep::{run_sweep, Axis, Grid, Method, SweepRow, SweepSpec, DEFAULT_ME_CAP};
use super::table::{Cell, Table};
use crate::eom::ClosureKind;
use crate::error::{FcsError, Result};
use crate::model::ModelParams;

pub const FIG2_SOURCE_OCCUPATIONS: [f64; 3] = [0.1, 1.0, 10.0];
pub const FIG2_MAX_N: usize = 500;
pub const FIG2_POINTS: usize = 40;
pub const FIG3_SIZES: [usize; 5] = [5, 10, 20, 40, 80];
pub const FIG3_NS_RANGE: (f64, f64) = (0.01, 1000.0);
pub const FIG3_POINTS: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
}

impl FromStr for Figure {
    type Err = FcsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fig2" => Ok(Figure::Fig2),
            "fig3" => Ok(Figure::Fig3),
            other => Err(FcsError::InvalidParameter(format!("unknown figure '{other}' (expected fig2 or fig3)"))),
        }
    }
}

const APPROX: [Method; 3] = [
    Method::Approx(ClosureKind::Approx1),
    Method::Approx(ClosureKind::Approx2),
    Method::Approx(ClosureKind::Approx3),
];

fn row_value(row: &SweepRow, k: usize) -> Result<f64> {
    match &row.error {
        Some(e) => Err(FcsError::InvalidParameter(format!("sweep point failed: {e}"))),
        None => Ok(row.cumulants[k]),
    }
}

/// Ratio of approximate to exact first cumulant versus `N`, one block per `n_S`.
pub fn fig2_table() -> Result<Table> {
    let mut t = Table::new(["n_s", "N", "method", "ratio", "approx_k1", "me_k1"]);
    for ns in FIG2_SOURCE_OCCUPATIONS {
        let mut methods = vec![Method::Me];
        methods.extend(APPROX);
        let spec = SweepSpec {
            axis: Axis::N,
            grid: Grid::log_integers(1, FIG2_MAX_N, FIG2_POINTS),
            base: ModelParams::unit_rates(1, ns, 0.0)?,
            methods,
            order: 1,
            me_cap: DEFAULT_ME_CAP.max(FIG2_MAX_N),
        };
        let rows = run_sweep(&spec)?;
        for chunk in rows.chunks(4) {
            let me = row_value(&chunk[0], 0)?;
            for r in &chunk[1..] {
                let ap = row_value(r, 0)?;
                t.push(vec![
                    ns.into(),
                    (r.x as usize).into(),
                    r.method.to_string().into(),
                    (ap / me).into(),
                    ap.into(),
                    me.into(),
                ])?;
            }
        }
    }
    Ok(t)
}

/// Second cumulant versus `n_S` for each size and method.
pub fn fig3_table() -> Result<Table> {
    let mut t = Table::new(["N", "n_s", "method", "k2"]);
    let mut methods = vec![Method::Me];
    methods.extend(APPROX);
    for n in FIG3_SIZES {
        let spec = SweepSpec {
            axis: Axis::NS,
            grid: Grid::Log {
                start: FIG3_NS_RANGE.0,
                stop: FIG3_NS_RANGE.1,
                count: FIG3_POINTS,
            },
            base: ModelParams::unit_rates(n, 1.0, 0.0)?,
            methods: methods.clone(),
            order: 2,
            me_cap: DEFAULT_ME_CAP,
        };
        for r in run_sweep(&spec)? {
            let k2 = row_value(&r, 1)?;
            t.push(vec![n.into(), r.x.into(), r.method.to_string().into(), Cell::Num(k2)])?;
        }
    }
    Ok(t)
}

const FIG2_SCRIPT: &str = r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("fig2.csv")))
panels = sorted({float(r["n_s"]) for r in rows})
styles = {"approx1": ("k", "o"), "approx2": ("r", "s"), "approx3": ("b", "D")}
fig, axes = plt.subplots(len(panels), 1, sharex=True, figsize=(5, 9))
for ax, ns in zip(axes, panels):
    for method, (color, marker) in styles.items():
        sel = [r for r in rows if float(r["n_s"]) == ns and r["method"] == method]
        ax.loglog([int(r["N"]) for r in sel], [float(r["ratio"]) for r in sel],
                  color=color, marker=marker, ls="", label=method)
    ax.set_ylabel("<<I1_AP>> / <<I1_ME>>")
    ax.set_title(f"n_S = {ns:g}")
axes[0].legend()
axes[-1].set_xlabel("N")
fig.tight_layout()
fig.savefig("fig2.pdf")
"#;

const FIG3_SCRIPT: &str = r#"import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("fig3.csv")))
styles = {"me": ("k", "-."), "approx1": ("k", "-"), "approx2": ("r", ":"), "approx3": ("b", "--")}
fig, ax = plt.subplots(figsize=(6, 5))
for n in sorted({int(r["N"]) for r in rows}):
    for method, (color, ls) in styles.items():
        sel = [r for r in rows if int(r["N"]) == n and r["method"] == method]
        ax.loglog([float(r["n_s"]) for r in sel], [float(r["k2"]) for r in sel],
                  color=color, ls=ls, lw=2 if method == "me" else 1,
                  label=method if n == 5 else None)
ax.set_xlabel("n_S")
ax.set_ylabel("<<I2>>")
ax.legend()
fig.tight_layout()
fig.savefig("fig3.pdf")
"#;

/// Writes `<name>.csv` and `<name>.py` into `out_dir` and returns both paths.
pub fn reproduce_figure(which: Figure, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let (name, table, script) = match which {
        Figure::Fig2 => ("fig2", fig2_table()?, FIG2_SCRIPT),
        Figure::Fig3 => ("fig3", fig3_table()?, FIG3_SCRIPT),
    };
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(format!("{name}.csv"));
    let py_path = out_dir.join(format!("{name}.py"));
    table.save(&csv_path)?;
    std::fs::write(&py_path, script)?;
    Ok(vec![csv_path, py_path])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig2_shape_and_exactness() {
        let t = fig2_table().unwrap();
        let npts = Grid::log_integers(1, FIG2_MAX_N, FIG2_POINTS).values().len();
        assert_eq!(t.rows.len(), 3 * 3 * npts);
        let mi = t.column_index("method").unwrap();
        let ri = t.column_index("ratio").unwrap();
        for row in t.rows.iter().filter(|r| r[mi].as_str() == Some("approx1")) {
            assert!((row[ri].as_f64().unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn figure_names() {
        assert_eq!("fig3".parse::<Figure>().unwrap(), Figure::Fig3);
        assert!("fig4".parse::<Figure>().is_err());
    }
}
