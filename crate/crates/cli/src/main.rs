use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pairtrade::backtest::{load_csv_with_dt, run_backtest, write_pnl_csv};
use pairtrade::closed_form::{check_theorem_conditions, OdeCoefficients};
use pairtrade::config::Config;
use pairtrade::gmm::{default_initial_guess, estimate, selection_from_one_based, GmmMode, LogSeries, NwWeights};
use pairtrade::model::Utility;
use pairtrade::pde::{build_grid, closed_form_phi, extract_controls, linf_error, solve, write_surface, Grid, PdeSolution};
use pairtrade::sim::{default_start_date, simulate_paths, write_price_csv, SimSpec};
use pairtrade::{Error, ModelParams, Result};

#[derive(Parser, Debug)]
#[command(name = "pairtrade", version, about = "Optimal pairs trading toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON configuration file
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing)
    #[arg(short, long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate log-price paths and write them as CSV
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 251)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Initial price of asset 1
        #[arg(long, default_value_t = 20.0)]
        s1: f64,
        /// Initial price of asset 2
        #[arg(long, default_value_t = 20.0)]
        s2: f64,
    },
    /// Estimate model parameters from a price CSV by GMM
    Estimate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        nw_weights: Option<WeightsArg>,
        #[arg(long)]
        nw_lag: Option<usize>,
        /// Comma-separated 1-based moment numbers
        #[arg(long, value_delimiter = ',')]
        selection: Option<Vec<usize>>,
        #[arg(long)]
        seed: Option<u64>,
        /// Optimizer runs (first unperturbed)
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Solve the value-function PDE and export phi and the controls
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Compare the PDE solution with the constant-volatility closed form
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Trade a price CSV with the PDE strategy
    Backtest {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        /// Initial wealth
        #[arg(long)]
        w0: Option<f64>,
    },
    /// Evaluate the sufficient conditions of the verification theorem
    CheckConditions {
        #[command(flatten)]
        common: Common,
        /// Evaluation time
        #[arg(long, default_value_t = 0.0)]
        t: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Just,
    TwoStep,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WeightsArg {
    Paper,
    Standard,
}

fn load_config(common: &Common) -> Result<Config> {
    match &common.config {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn out_dir(common: &Common) -> Result<&Path> {
    fs::create_dir_all(&common.out)?;
    Ok(&common.out)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn power_model(cfg: &Config) -> Result<ModelParams> {
    let p = cfg.model()?;
    if p.utility != Utility::Power {
        return Err(Error::InvalidInput("the PDE solver needs power utility".into()));
    }
    Ok(p)
}

fn solve_configured(cfg: &Config) -> Result<(ModelParams, Grid, PdeSolution, f64)> {
    let p = power_model(cfg)?;
    let grid = build_grid(&cfg.grid()?, p.horizon)?;
    let start = Instant::now();
    let sol = solve(&p, &grid)?;
    Ok((p, grid, sol, start.elapsed().as_secs_f64()))
}

fn simulate_cmd(common: &Common, steps: usize, paths: usize, seed: u64, s1: f64, s2: f64) -> Result<()> {
    let cfg = load_config(common)?;
    let p = cfg.model()?;
    if !(s1 > 0.0 && s2 > 0.0) {
        return Err(Error::InvalidInput("initial prices must be positive".into()));
    }
    let spec = SimSpec {
        n_steps: steps,
        dt: cfg.backtest.dt,
        n_paths: paths,
        seed,
        x0: s1.ln(),
        y0: s2.ln(),
    };
    let sims = simulate_paths(&p, &spec)?;
    let dir = out_dir(common)?;
    let mut files = Vec::new();
    for path in &sims {
        let name = if paths == 1 {
            "prices.csv".to_string()
        } else {
            format!("prices_{:03}.csv", path.path_index)
        };
        write_price_csv(path, &dir.join(&name), default_start_date())?;
        files.push(name);
    }
    println!("wrote {} path(s) of {} steps to {}", sims.len(), steps, dir.display());
    write_json(
        &dir.join("result.json"),
        &json!({"paths": paths, "steps": steps, "dt": spec.dt, "seed": seed, "files": files}),
    )
}

#[allow(clippy::too_many_arguments)]
fn estimate_cmd(
    common: &Common,
    data: &Path,
    mode: Option<ModeArg>,
    nw_weights: Option<WeightsArg>,
    nw_lag: Option<usize>,
    selection: Option<Vec<usize>>,
    seed: Option<u64>,
    restarts: Option<usize>,
) -> Result<()> {
    let cfg = load_config(common)?;
    let prices = load_csv_with_dt(data, cfg.backtest.dt)?;
    let series = LogSeries::from_prices(&prices.s1, &prices.s2, prices.dt)?;
    let mut settings = cfg.gmm.settings()?;
    if let Some(m) = mode {
        settings.mode = match m {
            ModeArg::Just => GmmMode::JustIdentified,
            ModeArg::TwoStep => GmmMode::TwoStepEfficient,
        };
    }
    if let Some(w) = nw_weights {
        settings.nw_weights = match w {
            WeightsArg::Paper => NwWeights::Paper,
            WeightsArg::Standard => NwWeights::Standard,
        };
    }
    if nw_lag.is_some() {
        settings.nw_lag = nw_lag;
    }
    if let Some(sel) = selection {
        settings.selection = selection_from_one_based(&sel)?;
    }
    if let Some(s) = seed {
        settings.seed = s;
    }
    if let Some(r) = restarts {
        settings.restarts = r;
    }
    let start = Instant::now();
    let result = estimate(&series, &default_initial_guess(&series), &settings)?;
    println!(
        "J = {:.4e} after {} evaluations ({:.1} s), converged: {}",
        result.j_value,
        result.evaluations,
        start.elapsed().as_secs_f64(),
        result.converged
    );
    let dir = out_dir(common)?;
    write_json(&dir.join("result.json"), &serde_json::to_value(&result)?)
}

fn solve_cmd(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let (p, grid, sol, secs) = solve_configured(&cfg)?;
    let surface = extract_controls(&sol, &p)?;
    let dir = out_dir(common)?;
    let sidecar = write_surface(&dir.join("surface.csv"), &sol, &surface, &p)?;
    let iterations: usize = sol.stats.iter().map(|s| s.iterations).sum();
    let worst = sol.stats.iter().map(|s| s.relative_residual).fold(0.0, f64::max);
    println!(
        "solved {} levels on {}x{} nodes in {:.2} s ({} Krylov iterations)",
        grid.nk, grid.ni, grid.nj, secs, iterations
    );
    write_json(
        &dir.join("result.json"),
        &json!({
            "grid": grid,
            "seconds": secs,
            "krylov_iterations": iterations,
            "max_relative_residual": worst,
            "surface": "surface.csv",
            "metadata": sidecar.file_name().map(|s| s.to_string_lossy().into_owned()),
        }),
    )
}

fn compare_cmd(common: &Common) -> Result<()> {
    let cfg = load_config(common)?;
    let p = power_model(&cfg)?;
    if p.theta1 != 0.0 || p.theta2 != 0.0 {
        return Err(Error::InvalidInput(
            "the closed form needs constant volatility (theta1 = theta2 = 0)".into(),
        ));
    }
    let (_, grid, sol, secs) = solve_configured(&cfg)?;
    let exact = closed_form_phi(&p, &grid)?;
    let e = linf_error(sol.phi.view(), exact.view())?;
    println!(
        "L-inf error {:.6} at k={} (t={:.4}), i={} (x={:.4}), j={} (y={:.4}); boundary node: {}",
        e.value,
        e.k,
        grid.t(e.k),
        e.i,
        grid.x(e.i),
        e.j,
        grid.y(e.j),
        grid.is_boundary(e.i, e.j)
    );
    let dir = out_dir(common)?;
    write_json(
        &dir.join("result.json"),
        &json!({
            "linf_error": e.value,
            "k": e.k, "i": e.i, "j": e.j,
            "t": grid.t(e.k), "x": grid.x(e.i), "y": grid.y(e.j),
            "on_boundary": grid.is_boundary(e.i, e.j),
            "seconds": secs,
        }),
    )
}

fn backtest_cmd(common: &Common, data: &Path, w0: Option<f64>) -> Result<()> {
    let cfg = load_config(common)?;
    let series = load_csv_with_dt(data, cfg.backtest.dt)?;
    let (p, grid, sol, _) = solve_configured(&cfg)?;
    let surface = extract_controls(&sol, &p)?;
    let w0 = w0.unwrap_or(cfg.backtest.w0);
    let report = run_backtest(&series, &p, &grid, &surface, w0)?;
    let dir = out_dir(common)?;
    write_pnl_csv(&report, &dir.join("pnl.csv"))?;
    if report.boundary_warnings > 0 {
        eprintln!(
            "warning: {} observation(s) outside the grid were clamped",
            report.boundary_warnings
        );
    }
    println!(
        "terminal P&L {:.4}% over {} steps{}",
        100.0 * report.terminal_pnl,
        report.returns.len(),
        if report.bankrupt { " (bankrupt)" } else { "" }
    );
    write_json(
        &dir.join("result.json"),
        &json!({
            "terminal_pnl": report.terminal_pnl,
            "steps": report.returns.len(),
            "bankrupt": report.bankrupt,
            "boundary_warnings": report.boundary_warnings,
            "w0": w0,
            "pnl": "pnl.csv",
        }),
    )
}

fn check_conditions_cmd(common: &Common, t: f64) -> Result<()> {
    let cfg = load_config(common)?;
    let p = cfg.model()?;
    if !(0.0..=p.horizon).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, {}]", p.horizon)));
    }
    let coeffs = OdeCoefficients::power(&p, &[t])?;
    let c = check_theorem_conditions(&p, &p.derive(), &coeffs, t)?;
    for (n, (lhs, ok)) in c.lhs.iter().zip(c.holds).enumerate() {
        println!("condition {}: {:.6e} < {:.6e} -> {}", n + 1, lhs, c.rhs, ok);
    }
    let dir = out_dir(common)?;
    write_json(&dir.join("result.json"), &serde_json::to_value(c)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, steps, paths, seed, s1, s2 } => {
            simulate_cmd(&common, steps, paths, seed, s1, s2)
        }
        Command::Estimate { common, data, mode, nw_weights, nw_lag, selection, seed, restarts } => {
            estimate_cmd(&common, &data, mode, nw_weights, nw_lag, selection, seed, restarts)
        }
        Command::Solve { common } => solve_cmd(&common),
        Command::Compare { common } => compare_cmd(&common),
        Command::Backtest { common, data, w0 } => backtest_cmd(&common, &data, w0),
        Command::CheckConditions { common, t } => check_conditions_cmd(&common, t),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
