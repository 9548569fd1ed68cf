//! The five experiments. Each writes its outputs into the configured
//! directory; `main` adds the manifest.

use std::f64::consts::PI;
use std::path::Path;

use log::{info, warn};
use serde::Serialize;

use qgsw_core::dipole::{self, DipoleParams};
use qgsw_core::evolve::{perturb, Checkpointing, DiagnosticSeries, EvolutionState, RunConfig, RunOutput, Solver};
use qgsw_core::field::write_dump;
use qgsw_core::functionals::compute_functionals;
use qgsw_core::io::write_csv;
use qgsw_core::maximizer::{maximize, orbit_distance, MaximizerConfig, OrbitDistance};
use qgsw_core::{AdmissibleSpec, GridSpec, ScalarField, SpectralBox};

use crate::config::{DipoleConfig, EvolveConfig, GridConfig, MaximizeConfig, PerturbationConfig, StabilityConfig, VerifyConfig};
use crate::error::CliError;

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn dipole_grid(params: &DipoleParams, grid: GridConfig) -> Result<GridSpec, CliError> {
    Ok(GridSpec::for_dipole(params.radius(), grid.nx, grid.ny)?)
}

#[derive(Serialize)]
struct DipoleReport {
    lambda: f64,
    #[serde(rename = "W")]
    w: f64,
    a: f64,
    #[serde(rename = "A_L")]
    a_l: f64,
    kappa: f64,
    impulse: f64,
    mass: f64,
    /// Grid values of the energies.
    #[serde(rename = "E")]
    energy: f64,
    #[serde(rename = "E_lambda")]
    penalized_energy: f64,
    matching_residual: f64,
    root_interval: usize,
}

pub fn dipole(cfg: &DipoleConfig) -> Result<(), CliError> {
    let report = dipole::solve_radius_report(cfg.lambda)?;
    let params = dipole::make_params(cfg.lambda, cfg.w)?;
    let grid = dipole_grid(&params, cfg.grid)?;
    let omega = dipole::sample_vorticity(&params, grid);
    let f = compute_functionals(&SpectralBox::new(grid), &omega, cfg.lambda);

    write_dump(cfg.out.join("stream"), &dipole::sample_stream(&params, grid), "stream", 0.0)?;
    write_dump(cfg.out.join("vorticity"), &omega, "vorticity", 0.0)?;
    for (k, name) in ["velocity_x1", "velocity_x2"].into_iter().enumerate() {
        let u = ScalarField::from_fn(grid, |x| dipole::velocity(&params, x)[k]);
        write_dump(cfg.out.join(name), &u, name, 0.0)?;
    }
    write_json(
        &cfg.out.join("params.json"),
        &DipoleReport {
            lambda: cfg.lambda,
            w: cfg.w,
            a: params.radius(),
            a_l: params.amplitude(),
            kappa: params.kappa(),
            impulse: dipole::impulse(&params),
            mass: dipole::mass(&params),
            energy: f.energy,
            penalized_energy: f.penalized_energy,
            matching_residual: report.residual,
            root_interval: report.interval,
        },
    )?;
    info!("a = {:.12}, matching residual {:.2e}", params.radius(), report.residual);
    Ok(())
}

#[derive(Serialize)]
struct ConvergenceRow {
    n: usize,
    h: f64,
    residual: f64,
    order: Option<f64>,
}

#[derive(Serialize)]
struct VerifyReport {
    a: f64,
    orders: Vec<f64>,
    min_order: f64,
    interface_jump: f64,
    interface_tolerance: f64,
    passed: bool,
}

/// Largest mismatch of `Ψ` and `∂ᵣΨ` across `r = a` over `angles` directions.
fn interface_jump(params: &DipoleParams, angles: usize) -> f64 {
    let a = params.radius();
    let prof = params.profile();
    let value = (prof.lab_interior(a) - prof.lab_exterior(a)).abs();
    let slope = (prof.lab_interior_derivative(a) - prof.lab_exterior_derivative(a)).abs();
    (0..angles)
        .map(|k| (PI * (k as f64 + 0.5) / angles as f64).sin())
        .fold(0.0, |m: f64, s| m.max(value * s).max(slope * s))
}

pub fn verify(cfg: &VerifyConfig) -> Result<(), CliError> {
    let mut ns = cfg.resolutions.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 || ns[0] == 0 {
        return Err(CliError::Usage("verify needs at least two distinct positive resolutions".into()));
    }
    let params = dipole::make_params(cfg.lambda, cfg.w)?;
    let a = params.radius();
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in &ns {
        let h = a / n as f64;
        let residual = dipole::pde_residual(&params, h)?;
        let order = rows.last().map(|prev| (prev.residual / residual).ln() / (prev.h / h).ln());
        info!("h = a/{n}: residual {residual:.4e}, order {order:?}");
        rows.push(ConvergenceRow { n, h, residual, order });
    }
    write_csv(cfg.out.join("convergence.csv"), &rows)?;

    let orders: Vec<f64> = rows.iter().filter_map(|r| r.order).collect();
    let jump = interface_jump(&params, cfg.angles);
    let tolerance = 1e-8 * cfg.w;
    let passed = orders.iter().all(|&o| o >= cfg.min_order) && jump <= tolerance;
    write_json(
        &cfg.out.join("report.json"),
        &VerifyReport {
            a,
            orders: orders.clone(),
            min_order: cfg.min_order,
            interface_jump: jump,
            interface_tolerance: tolerance,
            passed,
        },
    )?;
    if !passed {
        return Err(CliError::Verification(format!("orders {orders:?}, interface jump {jump:.3e}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct MaximizeReport {
    converged: bool,
    iters: usize,
    mu: f64,
    nu: f64,
    #[serde(rename = "W")]
    w: f64,
    #[serde(rename = "W_analytic")]
    w_analytic: f64,
    gamma: f64,
    fixed_point_residual: f64,
    /// Relative L² distance to the sampled analytic dipole of speed `W_analytic`.
    rel_l2_to_dipole: f64,
    orbit: OrbitDistance,
    #[serde(rename = "E_lambda")]
    penalized_energy: f64,
    #[serde(rename = "E_lambda_analytic")]
    penalized_energy_analytic: f64,
}

pub fn maximize_cmd(cfg: &MaximizeConfig) -> Result<(), CliError> {
    let unit = dipole::make_params(cfg.lambda, 1.0)?;
    let mu = cfg.mu.unwrap_or(dipole::impulse(&unit));
    let nu = cfg.nu.unwrap_or(10.0 * mu * dipole::rho(cfg.lambda)?);
    let spec = AdmissibleSpec::new(mu, nu, cfg.lambda)?;
    let grid = dipole_grid(&unit, cfg.grid)?;
    let config = MaximizerConfig { spec, grid, max_iters: cfg.max_iters, tol_rel: cfg.tol_rel, seed: cfg.seed };
    let result = maximize(&config)?;

    let w_analytic = mu / dipole::impulse(&unit);
    let analytic_params = unit.with_speed(w_analytic)?;
    let analytic = dipole::sample_vorticity(&analytic_params, grid);
    let sb = SpectralBox::new(grid);
    write_dump(cfg.out.join("omega"), &result.omega, "vorticity", 0.0)?;
    write_csv(cfg.out.join("iterates.csv"), &result.history)?;
    write_json(
        &cfg.out.join("report.json"),
        &MaximizeReport {
            converged: result.converged,
            iters: result.iters,
            mu,
            nu,
            w: result.w,
            w_analytic,
            gamma: result.gamma,
            fixed_point_residual: result.fixed_point_residual,
            rel_l2_to_dipole: result.omega.add_scaled(&analytic, -1.0)?.norm_l2() / analytic.norm_l2(),
            orbit: orbit_distance(&result.omega, &analytic_params)?,
            penalized_energy: compute_functionals(&sb, &result.omega, cfg.lambda).penalized_energy,
            penalized_energy_analytic: compute_functionals(&sb, &analytic, cfg.lambda).penalized_energy,
        },
    )?;
    if !result.converged {
        return Err(CliError::NotConverged(format!(
            "{} iterations, last relative change {:.3e}",
            result.iters,
            result.history.last().map_or(f64::NAN, |r| r.residual)
        )));
    }
    info!("converged in {} iterations, W = {:.6} (analytic {w_analytic:.6})", result.iters, result.w);
    Ok(())
}

#[derive(Serialize)]
struct EvolveSummary {
    dt: f64,
    steps: usize,
    t_end: f64,
    drift_energy: f64,
    drift_impulse: f64,
    drift_l1: f64,
    drift_l2: f64,
    centroid_speed: f64,
    max_orbit_dist: f64,
}

impl EvolveSummary {
    fn new(run: &RunOutput) -> Self {
        let s = &run.series;
        Self {
            dt: run.dt,
            steps: run.steps,
            t_end: run.final_state.t,
            drift_energy: DiagnosticSeries::max_relative_drift(&s.energy),
            drift_impulse: DiagnosticSeries::max_relative_drift(&s.impulse),
            drift_l1: DiagnosticSeries::max_relative_drift(&s.l1),
            drift_l2: DiagnosticSeries::max_relative_drift(&s.l2),
            centroid_speed: s.centroid_speed(),
            max_orbit_dist: s.max_orbit_dist(),
        }
    }
}

/// Evolves the (optionally perturbed) dipole and writes diagnostics,
/// checkpoints and the final state into `out`.
fn evolve_into(cfg: &EvolveConfig, perturbation: Option<&PerturbationConfig>, out: &Path) -> Result<RunOutput, CliError> {
    let params = dipole::make_params(cfg.lambda, cfg.w)?;
    let solver = Solver::new(dipole_grid(&params, cfg.grid)?).with_hyperviscosity(cfg.hyperviscosity);
    let mut q = dipole::sample_vorticity(&params, *solver.spec());
    if let Some(p) = perturbation {
        q = perturb(&q, p.kind, p.amplitude, p.seed)?;
    }
    let dt = match cfg.dt {
        Some(dt) => dt,
        None => solver.cfl_dt(&solver.project(&q), cfg.cfl)?,
    };
    let mut run_cfg = RunConfig::new(cfg.t_end_radii * params.radius() / params.speed(), dt, cfg.diag_every);
    run_cfg.reference = Some(params);
    run_cfg.abort_dump = Some(out.join("abort_q"));
    if cfg.checkpoint_every > 0 {
        let dir = out.join("checkpoints");
        std::fs::create_dir_all(&dir)?;
        run_cfg.checkpoint = Some(Checkpointing { dir, every: cfg.checkpoint_every });
    }
    let run = solver.run(&EvolutionState::new(q), &run_cfg)?;
    write_csv(out.join("diagnostics.csv"), run.series.rows())?;
    write_dump(out.join("q_final"), &run.final_state.q, "q", run.final_state.t)?;
    write_json(&out.join("summary.json"), &EvolveSummary::new(&run))?;
    Ok(run)
}

pub fn evolve(cfg: &EvolveConfig) -> Result<(), CliError> {
    let run = evolve_into(cfg, cfg.perturbation.as_ref(), &cfg.out)?;
    let s = EvolveSummary::new(&run);
    info!(
        "{} steps: drift E {:.2e}, I {:.2e}, L1 {:.2e}, L2 {:.2e}; centroid speed {:.5}",
        s.steps, s.drift_energy, s.drift_impulse, s.drift_l1, s.drift_l2, s.centroid_speed
    );
    Ok(())
}

#[derive(Serialize)]
struct StabilityRow {
    delta: f64,
    /// Orbit distance of the band-projected initial state.
    delta_in: f64,
    max_orbit_dist: f64,
    final_orbit_dist: f64,
}

pub fn stability(cfg: &StabilityConfig) -> Result<(), CliError> {
    let mut amplitudes = cfg.amplitudes.clone();
    amplitudes.sort_by(f64::total_cmp);
    if amplitudes.is_empty() {
        return Err(CliError::Usage("stability needs at least one amplitude".into()));
    }
    let runs: Vec<Result<RunOutput, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = amplitudes
            .iter()
            .map(|&delta| {
                scope.spawn(move || {
                    let out = cfg.out.join(format!("delta_{delta}"));
                    std::fs::create_dir_all(&out)?;
                    let p = PerturbationConfig { kind: cfg.kind, amplitude: delta, seed: cfg.seed };
                    evolve_into(&cfg.evolve, Some(&p), &out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("evolution thread panicked")).collect()
    });
    let mut rows = Vec::new();
    for (&delta, run) in amplitudes.iter().zip(runs) {
        let s = run?.series;
        rows.push(StabilityRow {
            delta,
            delta_in: s.orbit_dist[0],
            max_orbit_dist: s.max_orbit_dist(),
            final_orbit_dist: *s.orbit_dist.last().unwrap(),
        });
    }
    write_csv(cfg.out.join("stability.csv"), &rows)?;
    for r in &rows {
        info!("delta {}: delta_in {:.4e}, max orbit distance {:.4e}", r.delta, r.delta_in, r.max_orbit_dist);
    }
    if rows.windows(2).any(|w| w[1].max_orbit_dist < w[0].max_orbit_dist) {
        warn!("max orbit distance is not nondecreasing in the perturbation amplitude");
        return Err(CliError::Verification("max orbit distance decreases with the perturbation amplitude".into()));
    }
    Ok(())
}
