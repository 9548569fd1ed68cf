//! The explicit Lamb dipole of the QGSW equations (deformation length 1).
//!
//! In polar coordinates `x = (r cos θ, r sin θ)` the stream function is
//!
//! ```text
//! Ψ_L = (A_L J₁(κr) + Wλ/(λ−1) r) sin θ,   r ≤ a,
//! Ψ_L = (W a / K₁(a)) K₁(r) sin θ,         r > a,
//! ```
//!
//! with `κ = (λ−1)^{1/2}`, `A_L = −W a / ((λ−1) J₁(κa))`, and `a` the
//! smallest positive root of the C¹ matching condition
//!
//! ```text
//! a (K₁′(a)/K₁(a) + κ⁻¹ J₁′(κa)/J₁(κa)) = λ/(λ−1).
//! ```
//!
//! The vorticity is `ω_L = λ(Ψ_L − W x₂)₊`, supported in the half disc
//! `r ≤ a`. A general deformation length `1/ε` is recovered by the rescaling
//! `x → εx`, `W → W/ε`.

use std::f64::consts::PI;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{GridSpec, ScalarField};
use crate::quadrature;
use crate::specfun::{
    j0_unchecked, j1_prime_unchecked, j1_unchecked, k1_log_derivative, k1_prime_unchecked,
    k1_unchecked,
};

/// First-zero search window for `J₁`.
const J1_FIRST_ZERO_BRACKET: (f64, f64) = (3.8, 3.9);

/// Full parameterization of the closed-form dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleParams {
    lambda: f64,
    w: f64,
    a: f64,
    amplitude: f64,
}

impl DipoleParams {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Translation speed `W`.
    pub fn speed(&self) -> f64 {
        self.w
    }

    /// Dipole radius `a`.
    pub fn radius(&self) -> f64 {
        self.a
    }

    /// Interior amplitude `A_L`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// `κ = (λ − 1)^{1/2}`.
    pub fn kappa(&self) -> f64 {
        (self.lambda - 1.0).sqrt()
    }

    pub fn profile(&self) -> RadialProfile {
        RadialProfile { params: *self }
    }

    /// Same dipole with speed `w`; `a` is independent of `W`.
    pub fn with_speed(&self, w: f64) -> Result<Self> {
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::InvalidParameter(format!("W must be positive (got {w})")));
        }
        Ok(Self::from_radius(self.lambda, w, self.a))
    }

    fn from_radius(lambda: f64, w: f64, a: f64) -> Self {
        let kappa = (lambda - 1.0).sqrt();
        let amplitude = -(w * a) / ((lambda - 1.0) * j1_unchecked(kappa * a));
        Self {
            lambda,
            w,
            a,
            amplitude,
        }
    }
}

/// Radial profiles: `Ψ_L = lab(r) sin θ` and `Ψ_L − W x₂ = comoving(r) sin θ`.
#[derive(Debug, Clone, Copy)]
pub struct RadialProfile {
    params: DipoleParams,
}

impl RadialProfile {
    /// `η` with `Ψ_L − W x₂ = η(r) sin θ`.
    pub fn comoving(&self, r: f64) -> f64 {
        self.lab(r) - self.params.w * r
    }

    /// Profile of the lab-frame stream function `Ψ_L`.
    pub fn lab(&self, r: f64) -> f64 {
        if r <= self.params.a {
            self.lab_interior(r)
        } else {
            self.lab_exterior(r)
        }
    }

    /// Radial derivative of [`Self::lab`].
    pub fn lab_derivative(&self, r: f64) -> f64 {
        if r <= self.params.a {
            self.lab_interior_derivative(r)
        } else {
            self.lab_exterior_derivative(r)
        }
    }

    /// Interior branch, valid as a formula for every `r ≥ 0`.
    pub fn lab_interior(&self, r: f64) -> f64 {
        let p = &self.params;
        let kappa = p.kappa();
        p.amplitude * j1_unchecked(kappa * r) + p.w * p.lambda / (p.lambda - 1.0) * r
    }

    pub fn lab_interior_derivative(&self, r: f64) -> f64 {
        let p = &self.params;
        let kappa = p.kappa();
        p.amplitude * kappa * j1_prime_unchecked(kappa * r) + p.w * p.lambda / (p.lambda - 1.0)
    }

    /// Exterior branch, valid as a formula for every `r > 0`.
    pub fn lab_exterior(&self, r: f64) -> f64 {
        let p = &self.params;
        p.w * p.a / k1_unchecked(p.a) * k1_unchecked(r)
    }

    pub fn lab_exterior_derivative(&self, r: f64) -> f64 {
        let p = &self.params;
        p.w * p.a / k1_unchecked(p.a) * k1_prime_unchecked(r)
    }

    /// `η₀ = η − (W/(λ−1)) r`, the homogeneous interior part.
    pub fn eta0(&self, r: f64) -> f64 {
        let p = &self.params;
        self.lab(r) - p.w * p.lambda / (p.lambda - 1.0) * r
    }

    /// `η₁ = η + W r`, the decaying exterior part. This equals the lab
    /// profile, which is evaluated directly to avoid cancellation.
    pub fn eta1(&self, r: f64) -> f64 {
        self.lab(r)
    }

    /// `lab(r)/r`, with its limit at the origin.
    fn lab_over_r(&self, r: f64) -> f64 {
        let p = &self.params;
        if r == 0.0 {
            p.amplitude * p.kappa() * 0.5 + p.w * p.lambda / (p.lambda - 1.0)
        } else {
            self.lab(r) / r
        }
    }
}

/// Left-hand side minus right-hand side of the matching condition at `t`.
pub fn matching_residual(lambda: f64, t: f64) -> f64 {
    let kappa = (lambda - 1.0).sqrt();
    let z = kappa * t;
    t * (k1_log_derivative(t) + j1_prime_unchecked(z) / (kappa * j1_unchecked(z)))
        - lambda / (lambda - 1.0)
}

/// Where the smallest root of the matching condition was found.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusReport {
    pub radius: f64,
    pub residual: f64,
    /// Number of zeros of `J₁(κt)` below the root: 0 is the interval
    /// `(0, x₁)`, 1 is `(x₁, x₂)`, and so on.
    pub interval: usize,
    /// Further sign changes of the matching function in the same interval.
    pub extra_roots: Vec<f64>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    Ok(())
}

/// Smallest positive solution `a` of the matching condition.
pub fn solve_radius(lambda: f64) -> Result<f64> {
    Ok(solve_radius_report(lambda)?.radius)
}

/// Scan `t` upward in steps of `1e-3/κ`, skip the poles at zeros of `J₁(κt)`
/// and bisect the first sign change of the matching function.
pub fn solve_radius_report(lambda: f64) -> Result<RadiusReport> {
    check_lambda(lambda)?;
    let kappa = (lambda - 1.0).sqrt();
    let step = 1e-3 / kappa;
    let bound = 100.0 / kappa;
    let f = |t: f64| matching_residual(lambda, t);
    let j = |t: f64| j1_unchecked(kappa * t);

    let mut t0 = 1e-6;
    let mut f0 = f(t0);
    let mut j0 = j(t0);
    let mut interval = 0;
    let mut found: Option<(f64, usize)> = None;
    let mut extra_roots = Vec::new();

    while t0 < bound {
        let t1 = t0 + step;
        let f1 = f(t1);
        let j1 = j(t1);
        let crosses_pole = j0.signum() != j1.signum() || j1 == 0.0;
        if crosses_pole {
            if found.is_some() {
                break;
            }
            interval += 1;
        } else if f0.signum() != f1.signum() {
            let root = bisect(&f, t0, t1);
            match found {
                None => found = Some((root, interval)),
                Some(_) => extra_roots.push(root),
            }
        }
        t0 = t1;
        f0 = f1;
        j0 = j1;
    }

    let (radius, interval) = found.ok_or(Error::NoRoot { lambda, bound })?;
    let residual = f(radius);
    info!("matching condition: lambda = {lambda}, a = {radius}, J1 interval {interval}");
    if !extra_roots.is_empty() {
        debug!("additional roots in the same interval: {extra_roots:?}");
    }
    Ok(RadiusReport {
        radius,
        residual,
        interval,
        extra_roots,
    })
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint with the smaller residual.
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// First positive zero `c₀` of `J₁`, by bisection.
pub fn j1_first_zero() -> f64 {
    let (lo, hi) = J1_FIRST_ZERO_BRACKET;
    bisect(&j1_unchecked, lo, hi)
}

/// Radius `c₀ λ^{−1/2}` of the classical Lamb dipole of the Euler equations.
pub fn euler_radius(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive (got {lambda})"
        )));
    }
    Ok(j1_first_zero() / lambda.sqrt())
}

/// Builds the dipole for `(λ, W)`, solving the matching condition for `a`.
pub fn make_params(lambda: f64, w: f64) -> Result<DipoleParams> {
    check_lambda(lambda)?;
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::InvalidParameter(format!("W must be positive (got {w})")));
    }
    let a = solve_radius(lambda)?;
    Ok(DipoleParams::from_radius(lambda, w, a))
}

/// `Ψ_L` at `x`. For `x₂ < 0` this is the odd extension.
pub fn stream(params: &DipoleParams, x: [f64; 2]) -> f64 {
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return 0.0;
    }
    params.profile().lab(r) * x[1] / r
}

/// `ω_L = λ(Ψ_L − W x₂)₊` on the closed half plane; odd extension below.
pub fn vorticity(params: &DipoleParams, x: [f64; 2]) -> f64 {
    if x[1] < 0.0 {
        return -vorticity(params, [x[0], -x[1]]);
    }
    let r = x[0].hypot(x[1]);
    if r >= params.a || r == 0.0 {
        return 0.0;
    }
    let value = params.lambda * params.profile().comoving(r) * x[1] / r;
    value.max(0.0)
}

/// `∂₁Ψ_L` and `∂₂Ψ_L`, analytic in polar coordinates.
pub fn stream_gradient(params: &DipoleParams, x: [f64; 2]) -> [f64; 2] {
    let profile = params.profile();
    let r = x[0].hypot(x[1]);
    if r == 0.0 {
        return [0.0, profile.lab_over_r(0.0)];
    }
    let (c, s) = (x[0] / r, x[1] / r);
    let f = profile.lab(r);
    let df = profile.lab_derivative(r);
    [
        df * c * s - f * s * c / r,
        df * s * s + f * c * c / r,
    ]
}

/// Co-moving velocity `u_L = ∇⊥Ψ_L − W e₁` with `∇⊥ = (∂₂, −∂₁)`.
pub fn velocity(params: &DipoleParams, x: [f64; 2]) -> [f64; 2] {
    let [d1, d2] = stream_gradient(params, x);
    [d2 - params.w, -d1]
}

/// Which nodes enter [`pde_residual_in`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualRegion {
    /// All nodes outside the band `|r − a| < 2h`.
    All,
    /// Only nodes with `r ≥ a + 2h`.
    Exterior,
}

/// Max over nodes of `|−Δ_h Ψ + Ψ − λ(Ψ − W x₂)₊|` with the five-point
/// Laplacian on the lattice `(ih, jh)`, `|x₁| ≤ 2a`, `h ≤ x₂ ≤ 2a`, away
/// from the band `|r − a| < 2h`.
pub fn pde_residual(params: &DipoleParams, h: f64) -> Result<f64> {
    pde_residual_in(params, h, ResidualRegion::All)
}

pub fn pde_residual_in(params: &DipoleParams, h: f64, region: ResidualRegion) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid spacing must be positive (got {h})")));
    }
    let a = params.a;
    let extent = 2.0 * a;
    let n1 = (extent / h).floor() as i64;
    let n2 = (extent / h).floor() as i64;
    let psi = |i: i64, j: i64| stream(params, [i as f64 * h, j as f64 * h]);
    let mut worst: f64 = 0.0;
    for j in 1..=n2 {
        for i in -n1..=n1 {
            let x = [i as f64 * h, j as f64 * h];
            let r = x[0].hypot(x[1]);
            let keep = match region {
                ResidualRegion::All => (r - a).abs() >= 2.0 * h,
                ResidualRegion::Exterior => r >= a + 2.0 * h,
            };
            if !keep {
                continue;
            }
            let centre = psi(i, j);
            let laplacian =
                (psi(i + 1, j) + psi(i - 1, j) + psi(i, j + 1) + psi(i, j - 1) - 4.0 * centre)
                    / (h * h);
            let forcing = params.lambda * (centre - params.w * x[1]).max(0.0);
            worst = worst.max((-laplacian + centre - forcing).abs());
        }
    }
    Ok(worst)
}

/// `ω_L` at the nodes of `spec`.
pub fn sample_vorticity(params: &DipoleParams, spec: GridSpec) -> ScalarField {
    ScalarField::from_fn(spec, |x| vorticity(params, x))
}

/// `Ψ_L` at the nodes of `spec`.
pub fn sample_stream(params: &DipoleParams, spec: GridSpec) -> ScalarField {
    ScalarField::from_fn(spec, |x| stream(params, x))
}

/// `I(ω_L) = (λπ/2) ∫₀^a r² η(r) dr`; the angular integral is exact.
pub fn impulse(params: &DipoleParams) -> f64 {
    let profile = params.profile();
    let radial = quadrature::integrate(|r| r * r * profile.comoving(r), 0.0, params.a, 1e-13);
    params.lambda * 0.5 * PI * radial
}

/// `∫ω_L = 2λ ∫₀^a r η(r) dr`.
pub fn mass(params: &DipoleParams) -> f64 {
    let profile = params.profile();
    let radial = quadrature::integrate(|r| r * profile.comoving(r), 0.0, params.a, 1e-13);
    2.0 * params.lambda * radial
}

/// Impulse of the `W = 1` dipole.
pub fn impulse_unit(lambda: f64) -> Result<f64> {
    Ok(impulse(&make_params(lambda, 1.0)?))
}

/// Mass of the `W = 1` dipole.
pub fn mass_unit(lambda: f64) -> Result<f64> {
    Ok(mass(&make_params(lambda, 1.0)?))
}

/// Mass-to-impulse ratio `ϱ(λ)` of the unit-speed dipole.
pub fn rho(lambda: f64) -> Result<f64> {
    let params = make_params(lambda, 1.0)?;
    Ok(mass(&params) / impulse(&params))
}

/// `J₀(c₀)`; negative at the first zero of `J₁`.
pub fn j0_at_first_zero() -> f64 {
    j0_unchecked(j1_first_zero())
}
