use clap::{Args, Parser, Subcommand};
use pdfsi::damage::{
    classify_against_strength, compare_fsi_vs_static_recorded, curvature_history, fit_dividing_line,
    sweep_st_beta, StrengthOutcome,
};
use pdfsi::dispersion::{damping_curve, linspace, phase_velocity_curve};
use pdfsi::error::Error;
use pdfsi::grid::Grid;
use pdfsi::io::{self, RunConfig};
use pdfsi::solver::{run_to_steady, run_transient};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "pdfsi", version, about = "Soft-walled microchannel with a peridynamic wall")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Parameter file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady wall, flow rate and pressure.
    Steady,
    /// Transient from rest.
    Simulate {
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Phase velocity over a wavenumber grid.
    Dispersion {
        #[arg(long)]
        k_min: Option<f64>,
        #[arg(long)]
        k_max: Option<f64>,
        #[arg(long)]
        k_points: Option<usize>,
    },
    /// Spatial damping over a frequency grid.
    Damping {
        #[arg(long)]
        omega_min: Option<f64>,
        #[arg(long)]
        omega_max: Option<f64>,
        #[arg(long)]
        omega_points: Option<usize>,
    },
    /// Transient versus static peak curvature.
    Damage,
    /// (St, β) regime map and dividing line.
    Sweep {
        /// lo:hi:points, log-spaced.
        #[arg(long)]
        st_range: Option<String>,
        /// lo:hi:points, log-spaced.
        #[arg(long)]
        beta_range: Option<String>,
    },
}

enum Failure {
    Config(String),
    Solver(String),
    Partial(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::HorizonUnderResolved { .. } => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Solver(e.to_string()),
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::write(dir.join(name), contents).map_err(|e| Failure::Solver(format!("cannot write {name}: {e}")))
}

fn pick<T: Copy>(flag: Option<T>, cfg: Option<T>, default: T) -> T {
    flag.or(cfg).unwrap_or(default)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let text = match &cli.common.config {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut overrides = cli.common.overrides.clone();
    // Range flags are folded into the configuration so the metadata records them.
    match &cli.command {
        Command::Simulate { t_end: Some(t) } => overrides.push(format!("t_end={t}")),
        Command::Dispersion { k_min, k_max, k_points } => {
            let mut r = io::parse_config_str(&text, &cli.common.overrides)?.ranges.k;
            if k_min.is_some() || k_max.is_some() || k_points.is_some() || r.is_none() {
                let (lo, hi, n) = r.take().unwrap_or((0.1, 400.0 * std::f64::consts::PI, 200));
                overrides.push(format!("k_min={}", pick(*k_min, None, lo)));
                overrides.push(format!("k_max={}", pick(*k_max, None, hi)));
                overrides.push(format!("k_points={}", pick(*k_points, None, n)));
            }
        }
        Command::Damping { omega_min, omega_max, omega_points } => {
            let mut r = io::parse_config_str(&text, &cli.common.overrides)?.ranges.omega;
            if omega_min.is_some() || omega_max.is_some() || omega_points.is_some() || r.is_none() {
                let (lo, hi, n) = r.take().unwrap_or((0.1, 100.0, 100));
                overrides.push(format!("omega_min={}", pick(*omega_min, None, lo)));
                overrides.push(format!("omega_max={}", pick(*omega_max, None, hi)));
                overrides.push(format!("omega_points={}", pick(*omega_points, None, n)));
            }
        }
        Command::Sweep { st_range, beta_range } => {
            for (prefix, flag) in [("st", st_range), ("beta", beta_range)] {
                if let Some(f) = flag {
                    let (lo, hi, n) = io::parse_range(f)?;
                    overrides.push(format!("{prefix}_min={lo}"));
                    overrides.push(format!("{prefix}_max={hi}"));
                    overrides.push(format!("{prefix}_points={n}"));
                }
            }
        }
        _ => {}
    }
    let cfg = io::parse_config_str(&text, &overrides)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(format!("cannot set thread count: {e}")))?;
    }
    let out = &cli.common.out;
    fs::create_dir_all(out)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", out.display())))?;

    let grid_note = |cfg: &RunConfig| -> String {
        match Grid::new(cfg.numerics.num_particles, cfg.params.Delta) {
            Ok(g) if g.delta_was_snapped() => format!(
                "horizon snapped to {} spacings: Delta = {}",
                g.horizon_ratio(),
                g.delta()
            ),
            Ok(g) => format!("horizon spans {} spacings", g.horizon_ratio()),
            Err(e) => format!("grid: {e}"),
        }
    };
    let (name, result) = match &cli.command {
        Command::Steady => ("steady", steady(&cfg, out)),
        Command::Simulate { .. } => ("simulate", simulate(&cfg, out)),
        Command::Dispersion { .. } => ("dispersion", dispersion(&cfg, out)),
        Command::Damping { .. } => ("damping", damping(&cfg, out)),
        Command::Damage => ("damage", damage(&cfg, out)),
        Command::Sweep { .. } => ("sweep", sweep(&cfg, out)),
    };
    let comments = vec![
        format!("pdfsi {} {name}", env!("CARGO_PKG_VERSION")),
        grid_note(&cfg),
        format!("wall-clock: {:.3} s", started.elapsed().as_secs_f64()),
        match &result {
            Ok(()) => "status: ok".to_string(),
            Err(Failure::Config(m) | Failure::Solver(m) | Failure::Partial(m)) => format!("status: {m}"),
        },
    ];
    io::write_metadata(&out.join("run.meta"), &cfg, &comments)?;
    result
}

fn steady(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let (beam, flow, report) = run_to_steady(&cfg.params, &cfg.numerics)?;
    let grid = Grid::new(cfg.numerics.num_particles, cfg.params.Delta)?;
    write(out, "steady.csv", &io::steady_csv(&grid.positions(), &beam, &flow))?;
    write(out, "report.txt", &io::report_text(&report))?;
    if let Some(f) = report.failure {
        return Err(Failure::Solver(f.to_string()));
    }
    if !report.steady_reached {
        return Err(Failure::Solver(format!(
            "no steady state within {} steps",
            report.steps_taken
        )));
    }
    Ok(())
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let t_end = cfg.ranges.t_end.unwrap_or(1.0);
    let (history, report) = run_transient(&cfg.params, &cfg.numerics, t_end)?;
    write(out, "history.csv", &io::history_csv(&history))?;
    write(out, "history_summary.csv", &io::history_summary_csv(&history))?;
    write(out, "report.txt", &io::report_text(&report))?;
    match report.failure {
        Some(f) => Err(Failure::Solver(f.to_string())),
        None => Ok(()),
    }
}

fn dispersion(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let (lo, hi, n) = cfg.ranges.k.expect("k range is always set for dispersion");
    let points = phase_velocity_curve(&cfg.params, &linspace(lo, hi, n))?;
    write(out, "dispersion.csv", &io::dispersion_csv(&points))
}

fn damping(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let (lo, hi, n) = cfg.ranges.omega.expect("omega range is always set for damping");
    let points = damping_curve(&cfg.params, &linspace(lo, hi, n))?;
    write(out, "damping.csv", &io::damping_csv(&points))
}

fn outcome_name(o: StrengthOutcome) -> &'static str {
    match o {
        StrengthOutcome::Survives => "survives",
        StrengthOutcome::FailsBoth => "fails-both",
        StrengthOutcome::FailsDynamicOnly => "fails-dynamic-only",
        StrengthOutcome::FailsStaticOnly => "fails-static-only",
    }
}

fn damage(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let (comparison, history) = compare_fsi_vs_static_recorded(&cfg.params, &cfg.numerics)?;
    let grid = Grid::new(cfg.numerics.num_particles, cfg.params.Delta)?;
    let fields = curvature_history(&history, &grid);
    write(out, "curvature.csv", &io::curvature_csv(&fields, &grid.positions()))?;
    let outcome = match cfg.ranges.c_cr {
        Some(c) => Some((c, outcome_name(classify_against_strength(&comparison, c)?))),
        None => None,
    };
    write(out, "damage.txt", &io::damage_text(&comparison, outcome))?;
    match comparison.failure {
        Some(f) => Err(Failure::Solver(f)),
        None => Ok(()),
    }
}

fn sweep(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let (st_lo, st_hi, st_n) = cfg
        .ranges
        .st
        .ok_or_else(|| Failure::Config("sweep needs an St range (--st-range or st_min/st_max/st_points)".into()))?;
    let (b_lo, b_hi, b_n) = cfg
        .ranges
        .beta
        .ok_or_else(|| Failure::Config("sweep needs a beta range (--beta-range or beta_min/beta_max/beta_points)".into()))?;
    let grid = sweep_st_beta(
        &io::logspace(st_lo, st_hi, st_n),
        &io::logspace(b_lo, b_hi, b_n),
        cfg.params.Re,
        cfg.params.Delta,
        &cfg.numerics,
    )?;
    write(out, "sweep.csv", &io::sweep_csv(&grid))?;
    match fit_dividing_line(&grid.boundary_points) {
        Ok(fit) => write(out, "fit.txt", &io::fit_text(&fit, grid.boundary_points.len()))?,
        Err(e) => {
            eprintln!("notice: dividing line not fitted: {e}");
            write(out, "fit.txt", &format!("boundary_points = {}\n# not fitted: {e}\n", grid.boundary_points.len()))?;
        }
    }
    match grid.failed_cells() {
        0 => Ok(()),
        n => Err(Failure::Partial(format!("{n} of {} cells failed", grid.cells.len()))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Partial(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
