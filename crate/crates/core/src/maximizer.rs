//! Constrained relaxation toward a maximizer of `ℰ_λ` over the admissible
//! class, via the fixed-point form `ω = λ(𝒢ω − W x₂ − γ)₊`, and the orbit
//! distance to the translates of the analytic dipole.

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dipole::{self, DipoleParams};
use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField, SpectralBox};
use crate::functionals::{
    compute_functionals, steiner_symmetrize, steiner_symmetrize_mirrored, AdmissibleSpec,
};

/// Bisection steps for the multiplier solves; enough to exhaust `f64`.
const BISECTION_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximizerConfig {
    pub spec: AdmissibleSpec,
    pub grid: GridSpec,
    pub max_iters: usize,
    /// Stop once the relative L² change of an iteration falls below this.
    pub tol_rel: f64,
    pub seed: u64,
}

impl MaximizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if !(self.tol_rel > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol_rel must be positive (got {})",
                self.tol_rel
            )));
        }
        Ok(())
    }
}

/// One row of the iteration log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub iter: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "E_lambda")]
    pub penalized_energy: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub gamma: f64,
    pub mass: f64,
    pub impulse: f64,
    /// Relative L² change `‖ω_{k+1} − ω_k‖₂ / ‖ω_{k+1}‖₂`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct MaximizerResult {
    pub omega: ScalarField,
    pub w: f64,
    pub gamma: f64,
    /// `ℰ_λ` of the initial guess followed by every iterate.
    pub energies: Vec<f64>,
    pub history: Vec<IterateRecord>,
    pub iters: usize,
    pub converged: bool,
    /// `‖ω − λ(𝒢ω − W x₂ − γ)₊‖₂ / ‖ω‖₂` of the returned field.
    pub fixed_point_residual: f64,
}

/// Output of [`relax_step`].
#[derive(Debug, Clone)]
pub struct RelaxOutcome {
    pub omega: ScalarField,
    pub w: f64,
    pub gamma: f64,
}

/// Evaluates `λ(ψ − W x₂ − γ)₊` moments without building the field.
struct Multipliers<'a> {
    psi: &'a ScalarField,
    lambda: f64,
}

impl Multipliers<'_> {
    /// `(impulse, mass)` of `λ(ψ − W x₂ − γ)₊`.
    fn moments(&self, w: f64, gamma: f64) -> (f64, f64) {
        let spec = self.psi.spec();
        let mut impulse = 0.0;
        let mut mass = 0.0;
        for j in 0..spec.ny() {
            let x2 = spec.x2(j);
            let shift = w * x2 + gamma;
            let row: f64 = self.psi.row(j).iter().map(|&p| (p - shift).max(0.0)).sum();
            impulse += x2 * row;
            mass += row;
        }
        let scale = self.lambda * spec.cell_area();
        (impulse * scale, mass * scale)
    }

    fn impulse(&self, w: f64, gamma: f64) -> f64 {
        self.moments(w, gamma).0
    }

    fn field(&self, w: f64, gamma: f64) -> ScalarField {
        let spec = *self.psi.spec();
        let mut out = ScalarField::zeros(spec);
        for j in 0..spec.ny() {
            let shift = w * spec.x2(j) + gamma;
            for i in 0..spec.nx() {
                out.set(i, j, self.lambda * (self.psi.get(i, j) - shift).max(0.0));
            }
        }
        out
    }

    /// Upper bracket on `W`: `2 max ψ / (hy/2)` kills every node, doubled
    /// defensively until the impulse drops below `target`.
    fn w_upper(&self, gamma: f64, target: f64) -> f64 {
        let spec = self.psi.spec();
        let mut hi = (2.0 * self.psi.max().max(0.0) / (0.5 * spec.hy())).max(f64::MIN_POSITIVE);
        while self.impulse(hi, gamma) >= target {
            hi *= 2.0;
        }
        hi
    }

    /// `W` with `I(λ(ψ − W x₂ − γ)₊) = target`, the map being nonincreasing.
    fn solve_w(&self, gamma: f64, target: f64) -> Result<f64> {
        let available = self.impulse(0.0, gamma);
        if available < target {
            return Err(Error::BracketFailure { target, available });
        }
        let (mut lo, mut hi) = (0.0, self.w_upper(gamma, target));
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.impulse(mid, gamma) >= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }
}

/// One relaxation step: `ψ = 𝒢ω`, then multipliers with `I = μ` and
/// `mass ≤ ν`, then `ω′ = λ(ψ − W x₂ − γ)₊`.
pub fn relax_step(spectral: &SpectralBox, omega: &ScalarField, spec: &AdmissibleSpec) -> Result<RelaxOutcome> {
    let psi = spectral.apply_green(omega);
    relax_from_stream(&psi, spec)
}

fn relax_from_stream(psi: &ScalarField, spec: &AdmissibleSpec) -> Result<RelaxOutcome> {
    let m = Multipliers { psi, lambda: spec.lambda };
    let w = m.solve_w(0.0, spec.mu)?;
    let (_, mass) = m.moments(w, 0.0);
    if mass <= spec.nu {
        return Ok(RelaxOutcome { omega: m.field(w, 0.0), w, gamma: 0.0 });
    }
    // Mass cap active: raise γ until the mass at the matching W meets ν.
    // γ beyond the largest feasible value cannot carry the impulse at all.
    let (mut g_lo, mut g_hi) = (0.0, psi.max().max(0.0));
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (g_lo + g_hi);
        if mid <= g_lo || mid >= g_hi {
            break;
        }
        if m.impulse(0.0, mid) >= spec.mu {
            g_lo = mid;
        } else {
            g_hi = mid;
        }
    }
    let gamma_max = g_lo;
    let mass_at = |gamma: f64| -> Result<(f64, f64)> {
        let w = m.solve_w(gamma, spec.mu)?;
        Ok((w, m.moments(w, gamma).1))
    };
    let (mut lo, mut hi) = (0.0, gamma_max);
    let (mut w_best, min_mass) = mass_at(hi)?;
    if min_mass > spec.nu {
        return Err(Error::InvalidParameter(format!(
            "mass cap nu = {} unreachable at impulse {} (smallest mass {min_mass})",
            spec.nu, spec.mu
        )));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (w_mid, mass_mid) = mass_at(mid)?;
        if mass_mid > spec.nu {
            lo = mid;
        } else {
            hi = mid;
            w_best = w_mid;
        }
    }
    debug!("mass cap active: gamma = {hi:.6e}, W = {w_best:.6e}");
    Ok(RelaxOutcome { omega: m.field(w_best, hi), w: w_best, gamma: hi })
}

/// Indicator-like half-disc blob with randomized radius and centre, scaled
/// to impulse `mu`.
pub fn initial_guess(grid: GridSpec, mu: f64, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = grid.ly() / 6.0;
    let radius = base * rng.random_range(0.8..1.2);
    let centre = [
        grid.ly() * rng.random_range(-0.1..0.1),
        base * rng.random_range(0.8..1.2),
    ];
    let blob = ScalarField::from_fn(grid, |x| {
        let d = (x[0] - centre[0]).hypot(x[1] - centre[1]);
        if d < radius {
            1.0
        } else {
            0.0
        }
    });
    let impulse = blob.first_moment_x2();
    blob.scaled(mu / impulse)
}

/// Relaxation from a seed-randomized blob.
pub fn maximize(config: &MaximizerConfig) -> Result<MaximizerResult> {
    config.validate()?;
    maximize_from(config, initial_guess(config.grid, config.spec.mu, config.seed))
}

/// Relaxation from a caller-supplied nonnegative field, rescaled to `I = μ`.
pub fn maximize_from(config: &MaximizerConfig, initial: ScalarField) -> Result<MaximizerResult> {
    config.validate()?;
    let spec = config.spec;
    if initial.spec() != &config.grid {
        return Err(Error::GridMismatch("initial field is not on the configured grid".into()));
    }
    let rho = dipole::rho(spec.lambda)?;
    if spec.mu * rho > spec.nu * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "mass cap nu = {} is below mu * rho(lambda) = {}",
            spec.nu,
            spec.mu * rho
        )));
    }
    let spectral = SpectralBox::new(config.grid);
    let impulse0 = initial.first_moment_x2();
    if !(impulse0 > 0.0) || initial.min() < 0.0 {
        return Err(Error::InvalidParameter(
            "initial field must be nonnegative with positive impulse".into(),
        ));
    }
    let mut omega = initial.scaled(spec.mu / impulse0);

    let mut energies = vec![compute_functionals(&spectral, &omega, spec.lambda).penalized_energy];
    let mut history = Vec::new();
    let mut best = (energies[0], omega.clone(), 0.0, 0.0);
    let mut converged = false;
    let mut iters = 0;

    for iter in 1..=config.max_iters {
        iters = iter;
        let step = relax_step(&spectral, &omega, &spec)?;
        // Averaging the rearrangement with its mirror image removes the
        // half-cell tie bias, which would otherwise leave the iteration
        // cycling between neighbouring translates.
        let sym = steiner_symmetrize(&step.omega);
        let mut next = sym.add_scaled(&steiner_symmetrize_mirrored(&step.omega), 1.0)?.scaled(0.5);
        // Steiner keeps each row's multiset, hence I; this pins it to μ
        // against rounding.
        next = next.scaled(spec.mu / next.first_moment_x2());

        let change = next.add_scaled(&omega, -1.0)?.norm_l2() / next.norm_l2();
        let f = compute_functionals(&spectral, &next, spec.lambda);
        if f.penalized_energy < *energies.last().unwrap() {
            debug!(
                "iteration {iter}: penalized energy decreased from {:.12e} to {:.12e}",
                energies.last().unwrap(),
                f.penalized_energy
            );
        }
        energies.push(f.penalized_energy);
        history.push(IterateRecord {
            iter,
            energy: f.energy,
            penalized_energy: f.penalized_energy,
            w: step.w,
            gamma: step.gamma,
            mass: f.mass,
            impulse: f.impulse,
            residual: change,
        });
        if f.penalized_energy >= best.0 {
            best = (f.penalized_energy, next.clone(), step.w, step.gamma);
        }
        omega = next;
        if change <= config.tol_rel {
            converged = true;
            break;
        }
    }
    if converged {
        info!("maximizer converged after {iters} iterations");
    } else {
        warn!("maximizer stopped at max_iters = {} without convergence", config.max_iters);
    }

    let (_, omega, _, _) = best;
    let check = relax_step(&spectral, &omega, &spec)?;
    let fixed_point_residual = check.omega.add_scaled(&omega, -1.0)?.norm_l2() / omega.norm_l2();
    Ok(MaximizerResult {
        omega,
        w: check.w,
        gamma: check.gamma,
        energies,
        history,
        iters,
        converged,
        fixed_point_residual,
    })
}

/// Stability-metric distance to the nearest translate of a reference dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitDistance {
    /// `inf_c ‖ω(·+c e₁) − ω_L‖₁ + ‖·‖₂ + ‖x₂(·)‖₁`.
    pub distance: f64,
    /// `distance` divided by the same metric of `ω_L` itself.
    pub relative: f64,
    /// Minimizing translation `c`.
    pub shift: f64,
}

/// Sampled reference dipole for repeated orbit-distance evaluations.
#[derive(Debug, Clone)]
pub struct OrbitReference {
    params: DipoleParams,
    sampled: ScalarField,
    scale: f64,
}

impl OrbitReference {
    pub fn new(params: DipoleParams, grid: GridSpec) -> Self {
        let sampled = dipole::sample_vorticity(&params, grid);
        let scale = orbit_metric(&sampled);
        Self { params, sampled, scale }
    }

    pub fn params(&self) -> &DipoleParams {
        &self.params
    }

    pub fn sampled(&self) -> &ScalarField {
        &self.sampled
    }

    /// Metric size of the sampled reference.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Integer-cell scan with `ω_L` rotated by whole columns, a parabolic
    /// step through the best three shifts, then golden-section refinement
    /// over one cell either side with `ω_L` resampled at the continuous
    /// offset. Ties in the scan go to the smallest `|c|`.
    pub fn distance(&self, omega: &ScalarField) -> Result<OrbitDistance> {
        omega.check_same_grid(&self.sampled)?;
        let grid = *omega.spec();
        let nx = grid.nx() as isize;
        let hx = grid.hx();

        let at_cells = |s: isize| {
            metric(grid, |i, j| {
                let src = (i as isize - s).rem_euclid(nx) as usize;
                omega.get(i, j) - self.sampled.get(src, j)
            })
        };
        let mut best_s = 0isize;
        let mut best_d = at_cells(0);
        for k in 1..=nx / 2 {
            for s in [k, -k] {
                if s == -nx / 2 {
                    continue;
                }
                let d = at_cells(s);
                if d < best_d {
                    best_d = d;
                    best_s = s;
                }
            }
        }

        let mut best = (best_d, best_s as f64 * hx);
        let (dm, dp) = (at_cells(best_s - 1), at_cells(best_s + 1));
        let curvature = dm - 2.0 * best_d + dp;
        if curvature > 0.0 {
            let offset = 0.5 * (dm - dp) / curvature;
            let c = (best_s as f64 + offset.clamp(-1.0, 1.0)) * hx;
            let d = self.at_offset(omega, c);
            if d < best.0 {
                best = (d, c);
            }
        }

        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = ((best_s - 1) as f64 * hx, (best_s + 1) as f64 * hx);
        let mut c1 = hi - inv_phi * (hi - lo);
        let mut c2 = lo + inv_phi * (hi - lo);
        let mut f1 = self.at_offset(omega, c1);
        let mut f2 = self.at_offset(omega, c2);
        for _ in 0..40 {
            if f1 <= f2 {
                hi = c2;
                c2 = c1;
                f2 = f1;
                c1 = hi - inv_phi * (hi - lo);
                f1 = self.at_offset(omega, c1);
            } else {
                lo = c1;
                c1 = c2;
                f1 = f2;
                c2 = lo + inv_phi * (hi - lo);
                f2 = self.at_offset(omega, c2);
            }
        }
        for (d, c) in [(f1, c1), (f2, c2)] {
            if d < best.0 {
                best = (d, c);
            }
        }
        Ok(OrbitDistance {
            distance: best.0,
            relative: best.0 / self.scale,
            shift: best.1,
        })
    }

    /// Metric of `ω − ω_L(· − c e₁)` with `ω_L` evaluated analytically,
    /// wrapped periodically in `x₁`.
    fn at_offset(&self, omega: &ScalarField, c: f64) -> f64 {
        let grid = *omega.spec();
        let lx = grid.lx();
        let a = self.params.radius();
        metric(grid, |i, j| {
            let [x1, x2] = grid.point(i, j);
            let y1 = (x1 - c + lx).rem_euclid(2.0 * lx) - lx;
            let reference = if y1.abs() < a && x2 < a {
                dipole::vorticity(&self.params, [y1, x2])
            } else {
                0.0
            };
            omega.get(i, j) - reference
        })
    }
}

/// `‖d‖₁ + ‖d‖₂ + ‖x₂ d‖₁` of the field `d(i, j)` on `grid`.
fn metric(grid: GridSpec, d: impl Fn(usize, usize) -> f64) -> f64 {
    let (mut l1, mut l2, mut weighted) = (0.0, 0.0, 0.0);
    for j in 0..grid.ny() {
        let x2 = grid.x2(j);
        let mut row_l1 = 0.0;
        for i in 0..grid.nx() {
            let v = d(i, j);
            row_l1 += v.abs();
            l2 += v * v;
        }
        l1 += row_l1;
        weighted += x2 * row_l1;
    }
    let area = grid.cell_area();
    l1 * area + (l2 * area).sqrt() + weighted * area
}

/// `‖f‖₁ + ‖f‖₂ + ‖x₂ f‖₁`, the size of a field in the stability metric.
pub fn orbit_metric(field: &ScalarField) -> f64 {
    metric(*field.spec(), |i, j| field.get(i, j))
}

/// Convenience wrapper building a fresh [`OrbitReference`].
pub fn orbit_distance(omega: &ScalarField, params: &DipoleParams) -> Result<OrbitDistance> {
    OrbitReference::new(*params, *omega.spec()).distance(omega)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_setup() -> (DipoleParams, GridSpec) {
        let p = dipole::make_params(2.0, 1.0).unwrap();
        let grid = GridSpec::for_dipole(p.radius(), 64, 32).unwrap();
        (p, grid)
    }

    #[test]
    fn multiplier_solve_hits_the_target_impulse() {
        let (p, grid) = small_setup();
        let sb = SpectralBox::new(grid);
        let omega = dipole::sample_vorticity(&p, grid);
        let mu = omega.first_moment_x2();
        let spec = AdmissibleSpec::new(mu, 1e6, 2.0).unwrap();
        let out = relax_step(&sb, &omega, &spec).unwrap();
        assert!((out.omega.first_moment_x2() - mu).abs() <= 1e-10 * mu);
        assert!(out.w > 0.0);
        assert_eq!(out.gamma, 0.0);
    }

    #[test]
    fn mass_cap_engages_gamma() {
        let (p, grid) = small_setup();
        let sb = SpectralBox::new(grid);
        let omega = dipole::sample_vorticity(&p, grid);
        let mu = omega.first_moment_x2();
        let mass = omega.integral();
        let spec = AdmissibleSpec::new(mu, 0.99 * mass, 2.0).unwrap();
        let out = relax_step(&sb, &omega, &spec).unwrap();
        assert!(out.gamma > 0.0);
        assert!((out.omega.first_moment_x2() - mu).abs() <= 1e-8 * mu);
        assert!(out.omega.integral() <= spec.nu * (1.0 + 1e-8));
        let tight = AdmissibleSpec::new(mu, 0.1 * mass, 2.0).unwrap();
        assert!(relax_step(&sb, &omega, &tight).is_err());
    }

    #[test]
    fn unreachable_impulse_is_a_bracket_failure() {
        let (p, grid) = small_setup();
        let sb = SpectralBox::new(grid);
        let omega = dipole::sample_vorticity(&p, grid);
        let spec = AdmissibleSpec::new(1e9, 1e12, 2.0).unwrap();
        assert!(matches!(relax_step(&sb, &omega, &spec), Err(Error::BracketFailure { .. })));
    }

    #[test]
    fn initial_guess_carries_the_target_impulse() {
        let (_, grid) = small_setup();
        let g = initial_guess(grid, 3.5, 11);
        assert!((g.first_moment_x2() - 3.5).abs() <= 1e-12 * 3.5);
        assert!(g.min() >= 0.0);
        assert_ne!(g, initial_guess(grid, 3.5, 12));
    }

    #[test]
    fn config_validation() {
        let (_, grid) = small_setup();
        let spec = AdmissibleSpec::new(1.0, 10.0, 2.0).unwrap();
        let mut c = MaximizerConfig { spec, grid, max_iters: 0, tol_rel: 1e-6, seed: 0 };
        assert!(c.validate().is_err());
        c.max_iters = 5;
        c.tol_rel = 0.0;
        assert!(c.validate().is_err());
    }
}
