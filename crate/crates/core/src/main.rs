use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use dicke_fcs::harness::{commands, reproduce_figure, Config, Figure, Table};
use dicke_fcs::{FcsError, Result};

/// Full counting statistics of boson transport through a Dicke medium.
#[derive(Parser, Debug)]
#[command(name = "dicke-fcs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stationary current cumulants.
    Cumulants,
    /// Long-time CGF rate on a symmetric counting-field grid.
    CgfScan,
    /// Time-resolved CGF from the stationary state.
    Transient,
    /// Counting distribution P_n(t).
    Distribution,
    /// One-axis parameter sweep.
    Sweep,
    /// Figure data and plotting script (fig2 or fig3).
    Reproduce { which: String },
    /// Thermodynamic-limit coefficients.
    Limits,
}

#[derive(Args, Debug, Default)]
struct Opts {
    /// TOML file with default settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    gamma_s: Option<f64>,
    #[arg(long, global = true)]
    gamma_d: Option<f64>,
    #[arg(long, global = true)]
    ns: Option<f64>,
    #[arg(long, global = true)]
    nd: Option<f64>,
    #[arg(long, global = true)]
    omega: Option<f64>,
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Comma-separated: me, approx1, approx2, approx3, n1-analytic (and fd for cumulants).
    #[arg(long, global = true)]
    method: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    chi: Option<f64>,
    #[arg(long, global = true)]
    chi_max: Option<f64>,
    /// Point count, or a sweep grid: a,b,c | log:start:stop:count | lin:start:stop:count.
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    axis: Option<String>,
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    n_max: Option<usize>,
    #[arg(long, global = true)]
    me_cap: Option<usize>,
    #[arg(long, global = true)]
    regime: Option<String>,
    /// Output file (directory for `reproduce`); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Opts {
    fn settings(self) -> Result<Config> {
        let base = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        Ok(base.overlay(Config {
            n: self.n,
            gamma_s: self.gamma_s,
            gamma_d: self.gamma_d,
            n_s: self.ns,
            n_d: self.nd,
            omega: self.omega,
            order: self.order,
            method: self.method,
            chi: self.chi,
            chi_max: self.chi_max,
            grid: self.grid,
            axis: self.axis,
            t: self.t,
            n_max: self.n_max,
            me_cap: self.me_cap,
            regime: self.regime,
            out: self.out,
        }))
    }
}

fn emit(table: &Table, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => table.save(p),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write_csv(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.opts.settings()?;
    let table = match cli.command {
        Command::Cumulants => commands::cumulants(&cfg)?,
        Command::CgfScan => commands::cgf_scan(&cfg)?,
        Command::Transient => commands::transient(&cfg)?,
        Command::Distribution => commands::distribution(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Limits => commands::limits(&cfg)?,
        Command::Reproduce { which } => {
            let fig: Figure = which.parse()?;
            let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            for p in reproduce_figure(fig, &dir)? {
                println!("{}", p.display());
            }
            return Ok(());
        }
    };
    emit(&table, cfg.out.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::FAILURE
        }
    }
}

fn report(e: &FcsError) {
    let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{line}");
}
