mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qgsw_core::evolve::PerturbKind;

use config::{load, DipoleConfig, EvolveConfig, MaximizeConfig, PerturbationConfig, StabilityConfig, VerifyConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qgsw", version, about = "Lamb dipole experiments for the quasi-geostrophic shallow-water model")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form dipole: field dumps and params.json.
    Dipole(DipoleArgs),
    /// Convergence of the closed form under the five-point stencil.
    Verify(VerifyArgs),
    /// Penalized energy maximization from a random start.
    Maximize(MaximizeArgs),
    /// Pseudo-spectral evolution of the dipole.
    Evolve(EvolveArgs),
    /// Evolutions over a sweep of perturbation amplitudes.
    Stability(StabilityArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct DipoleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    lambda: Option<f64>,
    /// Translation speed W.
    #[arg(long = "w", alias = "W")]
    w: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "w", alias = "W")]
    w: Option<f64>,
    /// Lattice spacings a/n, comma separated.
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    #[arg(long)]
    angles: Option<usize>,
    #[arg(long)]
    min_order: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct MaximizeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    lambda: Option<f64>,
    /// Impulse target.
    #[arg(long)]
    mu: Option<f64>,
    /// Mass cap.
    #[arg(long)]
    nu: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: EvolveRunArgs,
    /// Perturbation kind: smooth-noise, shift or dilate.
    #[arg(long)]
    perturb: Option<PerturbKind>,
    #[arg(long, requires = "perturb")]
    amplitude: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct EvolveRunArgs {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "w", alias = "W")]
    w: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// End time in units of a/W.
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    diag_every: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct StabilityArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    run: EvolveRunArgs,
    #[arg(long)]
    kind: Option<PerturbKind>,
    /// Relative perturbation sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    amplitudes: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Copies every flag that was given onto the matching config field.
macro_rules! override_fields {
    ($cfg:expr, $args:expr; $($field:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })*
    };
}

fn apply_grid(grid: &mut config::GridConfig, args: &GridArgs) {
    override_fields!(grid, args; nx, ny);
}

fn apply_run(cfg: &mut EvolveConfig, args: &EvolveRunArgs) {
    override_fields!(cfg, args; lambda, w, cfl, diag_every, checkpoint_every);
    apply_grid(&mut cfg.grid, &args.grid);
    if args.dt.is_some() {
        cfg.dt = args.dt;
    }
    if let Some(t) = args.t_end {
        cfg.t_end_radii = t;
    }
}

fn dipole_config(args: &DipoleArgs) -> Result<DipoleConfig, CliError> {
    let mut cfg: DipoleConfig = load(args.common.config.as_deref())?;
    override_fields!(cfg, args; lambda, w);
    override_fields!(cfg, args.common; out);
    apply_grid(&mut cfg.grid, &args.grid);
    Ok(cfg)
}

fn verify_config(args: &VerifyArgs) -> Result<VerifyConfig, CliError> {
    let mut cfg: VerifyConfig = load(args.common.config.as_deref())?;
    override_fields!(cfg, args; lambda, w, resolutions, angles, min_order);
    override_fields!(cfg, args.common; out);
    Ok(cfg)
}

fn maximize_config(args: &MaximizeArgs) -> Result<MaximizeConfig, CliError> {
    let mut cfg: MaximizeConfig = load(args.common.config.as_deref())?;
    override_fields!(cfg, args; lambda, max_iters, seed);
    override_fields!(cfg, args.common; out);
    apply_grid(&mut cfg.grid, &args.grid);
    if args.mu.is_some() {
        cfg.mu = args.mu;
    }
    if args.nu.is_some() {
        cfg.nu = args.nu;
    }
    if let Some(tol) = args.tol {
        cfg.tol_rel = tol;
    }
    Ok(cfg)
}

fn evolve_config(args: &EvolveArgs) -> Result<EvolveConfig, CliError> {
    let mut cfg: EvolveConfig = load(args.common.config.as_deref())?;
    apply_run(&mut cfg, &args.run);
    override_fields!(cfg, args.common; out);
    if let Some(kind) = args.perturb {
        let amplitude = args
            .amplitude
            .or(cfg.perturbation.as_ref().map(|p| p.amplitude))
            .ok_or_else(|| CliError::Usage("--perturb needs --amplitude".into()))?;
        cfg.perturbation = Some(PerturbationConfig { kind, amplitude, seed: 0 });
    }
    if let (Some(p), Some(seed)) = (cfg.perturbation.as_mut(), args.seed) {
        p.seed = seed;
    }
    Ok(cfg)
}

fn stability_config(args: &StabilityArgs) -> Result<StabilityConfig, CliError> {
    let mut cfg: StabilityConfig = load(args.common.config.as_deref())?;
    apply_run(&mut cfg.evolve, &args.run);
    override_fields!(cfg, args; kind, amplitudes, seed);
    override_fields!(cfg, args.common; out);
    Ok(cfg)
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a C,
    started_unix: f64,
    wall_time_s: f64,
    exit_code: i32,
    status: String,
}

/// Runs `body` with `out` created, then records the run in `manifest.json`.
fn execute<C: Serialize>(
    command: &str,
    cfg: &C,
    out: &Path,
    body: impl FnOnce(&C) -> Result<(), CliError>,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let clock = Instant::now();
    let result = body(cfg);
    let manifest = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        started_unix,
        wall_time_s: clock.elapsed().as_secs_f64(),
        exit_code: result.as_ref().map_or_else(CliError::exit_code, |_| 0),
        status: result.as_ref().map_or_else(ToString::to_string, |_| "ok".into()),
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    result
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Dipole(a) => {
            let cfg = dipole_config(a)?;
            execute("dipole", &cfg, &cfg.out, commands::dipole)
        }
        Command::Verify(a) => {
            let cfg = verify_config(a)?;
            execute("verify", &cfg, &cfg.out, commands::verify)
        }
        Command::Maximize(a) => {
            let cfg = maximize_config(a)?;
            execute("maximize", &cfg, &cfg.out, commands::maximize_cmd)
        }
        Command::Evolve(a) => {
            let cfg = evolve_config(a)?;
            execute("evolve", &cfg, &cfg.out, commands::evolve)
        }
        Command::Stability(a) => {
            let cfg = stability_config(a)?;
            execute("stability", &cfg, &cfg.out, commands::stability)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
