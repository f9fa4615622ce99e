//! Batch front end: configuration, sweeps, CSV tables and figure data.

pub mod commands;
pub mod config;
pub mod figures;
pub mod sweep;
pub mod table;

pub use config::Config;
pub use figures::{reproduce_figure, Figure};
pub use sweep::{run_sweep, sweep_table, Axis, Grid, Method, SweepRow, SweepSpec, DEFAULT_ME_CAP};
pub use table::{Cell, Table};
