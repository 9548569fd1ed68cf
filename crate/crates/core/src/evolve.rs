//! Pseudo-spectral integration of `∂ₜq + v·∇q = 0`, `v = ∇⊥ψ`,
//! `ψ = (−Δ + 1)⁻¹q` on the oddly extended periodic box, with conservation
//! and orbit diagnostics.

use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dipole::DipoleParams;
use crate::error::{Error, Result};
use crate::field::{write_dump, GridSpec, ScalarField, SpectralBox};
use crate::functionals::energy;
use crate::maximizer::{orbit_metric, OrbitReference};

/// Largest admissible `dt·max|v|/min(hx, hy)`.
pub const CFL_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionState {
    pub q: ScalarField,
    pub t: f64,
}

impl EvolutionState {
    pub fn new(q: ScalarField) -> Self {
        Self { q, t: 0.0 }
    }

    pub fn spec(&self) -> &GridSpec {
        self.q.spec()
    }
}

/// Spectral filter `exp(−coefficient·|k|^{2·order}·dt)` applied after each
/// step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperviscosity {
    pub coefficient: f64,
    pub order: u32,
}

/// Right-hand side evaluation plus the speed seen by the CFL check.
struct Tendency {
    spectrum: Vec<Complex64>,
    max_speed: f64,
}

/// Fixed-step RK4 integrator on one grid.
pub struct Solver {
    spectral: SpectralBox,
    mask: Vec<bool>,
    hyperviscosity: Option<Hyperviscosity>,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("spec", self.spectral.spec())
            .field("hyperviscosity", &self.hyperviscosity)
            .finish()
    }
}

impl Solver {
    pub fn new(spec: GridSpec) -> Self {
        let spectral = SpectralBox::new(spec);
        let mask = spectral.dealias_mask();
        Self { spectral, mask, hyperviscosity: None }
    }

    pub fn with_hyperviscosity(mut self, hv: Option<Hyperviscosity>) -> Self {
        self.hyperviscosity = hv;
        self
    }

    pub fn spectral(&self) -> &SpectralBox {
        &self.spectral
    }

    pub fn spec(&self) -> &GridSpec {
        self.spectral.spec()
    }

    fn min_spacing(&self) -> f64 {
        self.spec().hx().min(self.spec().hy())
    }

    /// Drops the top third of modes in each direction.
    fn truncate(&self, spectrum: &mut [Complex64]) {
        for (v, &keep) in spectrum.iter_mut().zip(&self.mask) {
            if !keep {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// The field with its spectrum restricted to the dealiased band. The
    /// integrator evolves this projection; modes above the band would
    /// otherwise never change.
    pub fn project(&self, q: &ScalarField) -> ScalarField {
        self.spectral.inverse_field(self.band_spectrum(q))
    }

    /// `−(∇⊥ψ)·∇q` from the spectrum of `q`, truncated to the band.
    fn tendency(&self, q_hat: &[Complex64]) -> Tendency {
        let i = Complex64::new(0.0, 1.0);
        let n = q_hat.len();
        let mut vel = Vec::with_capacity(n);
        let mut grad = Vec::with_capacity(n);
        for (&q, (kx, ky)) in q_hat.iter().zip(self.spectral.wavenumbers()) {
            let psi = q / (kx * kx + ky * ky + 1.0);
            // u = ∂₂ψ, v = −∂₁ψ packed as u + i v; likewise ∂₁q + i ∂₂q.
            let u = i * ky * psi;
            let v = -i * kx * psi;
            vel.push(u + i * v);
            grad.push(i * kx * q + i * (i * ky * q));
        }
        let vel = self.spectral.inverse(vel);
        let grad = self.spectral.inverse(grad);
        let mut max_speed: f64 = 0.0;
        let product = vel
            .iter()
            .zip(&grad)
            .map(|(w, g)| {
                max_speed = max_speed.max(w.norm());
                Complex64::new(-(w.re * g.re + w.im * g.im), 0.0)
            })
            .collect();
        let mut spectrum = self.spectral.forward(product);
        self.truncate(&mut spectrum);
        Tendency { spectrum, max_speed }
    }

    /// Spectrum of `q` restricted to the dealiased band, which also drops
    /// the Nyquist modes whose odd derivatives are ill-defined.
    fn band_spectrum(&self, q: &ScalarField) -> Vec<Complex64> {
        let mut q_hat = self.spectral.forward_field(q);
        self.truncate(&mut q_hat);
        q_hat
    }

    /// `∂ₜq = −(∇⊥𝒢q)·∇q` for the band projection of `q`, the quantity the
    /// integrator advances.
    pub fn rhs(&self, q: &ScalarField) -> ScalarField {
        self.spectral.inverse_field(self.tendency(&self.band_spectrum(q)).spectrum)
    }

    /// Largest `|v|` over the extended box for the band projection of `q`.
    pub fn max_speed(&self, q: &ScalarField) -> f64 {
        self.tendency(&self.band_spectrum(q)).max_speed
    }

    /// `dt` giving CFL number `cfl` for the velocity of `q`.
    pub fn cfl_dt(&self, q: &ScalarField, cfl: f64) -> Result<f64> {
        let speed = self.max_speed(q);
        if speed == 0.0 {
            return Err(Error::InvalidParameter("zero velocity field: CFL time step undefined".into()));
        }
        Ok(cfl * self.min_spacing() / speed)
    }

    /// One classical RK4 step of length `dt` applied to the band-projected
    /// state.
    pub fn step_rk4(&self, state: &EvolutionState, dt: f64) -> Result<EvolutionState> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive (got {dt})")));
        }
        let q0 = self.band_spectrum(&state.q);

        let k1 = self.tendency(&q0);
        let ratio = dt * k1.max_speed / self.min_spacing();
        if ratio > CFL_LIMIT {
            return Err(Error::Cfl { ratio });
        }
        let stage = |k: &[Complex64], c: f64| -> Vec<Complex64> {
            q0.iter().zip(k).map(|(q, k)| q + k * c).collect()
        };
        let k2 = self.tendency(&stage(&k1.spectrum, 0.5 * dt));
        let k3 = self.tendency(&stage(&k2.spectrum, 0.5 * dt));
        let k4 = self.tendency(&stage(&k3.spectrum, dt));
        let mut next: Vec<Complex64> = q0
            .iter()
            .enumerate()
            .map(|(s, q)| {
                q + (k1.spectrum[s] + 2.0 * k2.spectrum[s] + 2.0 * k3.spectrum[s] + k4.spectrum[s])
                    * (dt / 6.0)
            })
            .collect();
        if let Some(hv) = self.hyperviscosity {
            for (v, (kx, ky)) in next.iter_mut().zip(self.spectral.wavenumbers()) {
                let k2 = kx * kx + ky * ky;
                *v *= (-hv.coefficient * k2.powi(hv.order as i32) * dt).exp();
            }
        }
        let q = self.spectral.inverse_field(next);
        Ok(EvolutionState { q, t: state.t + dt })
    }

    /// Functionals and orbit data of one state.
    pub fn diagnose(&self, state: &EvolutionState, reference: Option<&OrbitReference>) -> Result<DiagnosticRow> {
        let q = &state.q;
        let orbit_dist = match reference {
            Some(r) => r.distance(q)?.relative,
            None => f64::NAN,
        };
        Ok(DiagnosticRow {
            t: state.t,
            energy: energy(&self.spectral, q),
            impulse: q.first_moment_x2(),
            l1: q.norm_l1(),
            l2: q.norm_l2(),
            linf: q.norm_linf(),
            orbit_dist,
            centroid_x1: centroid_x1(q),
        })
    }

    /// Integrates from `state0` (projected onto the band first) to
    /// `config.t_end` with `ceil(t_end/dt)` equal steps no longer than `dt`.
    pub fn run(&self, state0: &EvolutionState, config: &RunConfig) -> Result<RunOutput> {
        config.validate()?;
        let reference = config
            .reference
            .map(|params| OrbitReference::new(params, *self.spec()));
        let steps = if config.t_end == 0.0 {
            0
        } else {
            ((config.t_end / config.dt) * (1.0 - 1e-12)).ceil() as usize
        };
        let dt = if steps == 0 { 0.0 } else { config.t_end / steps as f64 };
        info!("evolving {steps} steps of dt = {dt:.6e} to t = {}", config.t_end);

        let mut state = EvolutionState { q: self.project(&state0.q), t: state0.t };
        let mut series = DiagnosticSeries::default();
        let mut unwrap = Unwrapper::new(2.0 * self.spec().lx());
        let mut record = |state: &EvolutionState, series: &mut DiagnosticSeries| -> Result<()> {
            let mut row = self.diagnose(state, reference.as_ref())?;
            row.centroid_x1 = unwrap.push(row.centroid_x1);
            series.push(row);
            Ok(())
        };
        record(&state, &mut series)?;
        self.checkpoint(config, &state, 0)?;

        for step in 1..=steps {
            let next = self.step_rk4(&state, dt)?;
            if next.q.data().iter().any(|v| !v.is_finite()) {
                let time = next.t;
                if let Some(stem) = &config.abort_dump {
                    write_dump(stem, &state.q, "q", state.t)?;
                    warn!("non-finite state at t = {time}; last good state written to {}", stem.display());
                }
                return Err(Error::NonFinite { time });
            }
            state = next;
            if step % config.diag_every == 0 || step == steps {
                record(&state, &mut series)?;
                debug!("t = {:.4}: {:?}", state.t, series.last());
            }
            self.checkpoint(config, &state, step)?;
        }
        Ok(RunOutput { series, final_state: state, dt, steps })
    }

    fn checkpoint(&self, config: &RunConfig, state: &EvolutionState, step: usize) -> Result<()> {
        if let Some(cp) = &config.checkpoint {
            if cp.every > 0 && step.is_multiple_of(cp.every) {
                write_dump(cp.dir.join(format!("q_{step:07}")), &state.q, "q", state.t)?;
            }
        }
        Ok(())
    }
}

/// Where and how often to write checkpoint dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpointing {
    pub dir: PathBuf,
    pub every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_end: f64,
    pub dt: f64,
    pub diag_every: usize,
    /// Dipole whose orbit distance is tracked.
    pub reference: Option<DipoleParams>,
    pub checkpoint: Option<Checkpointing>,
    /// Stem receiving the last finite state if the run blows up.
    pub abort_dump: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(t_end: f64, dt: f64, diag_every: usize) -> Self {
        Self { t_end, dt, diag_every, reference: None, checkpoint: None, abort_dump: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_end must be nonnegative (got {})", self.t_end)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive (got {})", self.dt)));
        }
        if self.diag_every == 0 {
            return Err(Error::InvalidParameter("diag_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: DiagnosticSeries,
    pub final_state: EvolutionState,
    /// Step actually used.
    pub dt: f64,
    pub steps: usize,
}

/// One diagnostics row; `orbit_dist` is relative to the reference's own
/// metric size and NaN without a reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub t: f64,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "I")]
    pub impulse: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    #[serde(rename = "Linf")]
    pub linf: f64,
    pub orbit_dist: f64,
    pub centroid_x1: f64,
}

/// Diagnostic time series, one entry per recorded time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticSeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub impulse: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub linf: Vec<f64>,
    pub orbit_dist: Vec<f64>,
    pub centroid_x1: Vec<f64>,
}

impl DiagnosticSeries {
    pub fn push(&mut self, row: DiagnosticRow) {
        self.times.push(row.t);
        self.energy.push(row.energy);
        self.impulse.push(row.impulse);
        self.l1.push(row.l1);
        self.l2.push(row.l2);
        self.linf.push(row.linf);
        self.orbit_dist.push(row.orbit_dist);
        self.centroid_x1.push(row.centroid_x1);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn row(&self, k: usize) -> DiagnosticRow {
        DiagnosticRow {
            t: self.times[k],
            energy: self.energy[k],
            impulse: self.impulse[k],
            l1: self.l1[k],
            l2: self.l2[k],
            linf: self.linf[k],
            orbit_dist: self.orbit_dist[k],
            centroid_x1: self.centroid_x1[k],
        }
    }

    pub fn last(&self) -> Option<DiagnosticRow> {
        self.len().checked_sub(1).map(|k| self.row(k))
    }

    pub fn rows(&self) -> impl Iterator<Item = DiagnosticRow> + '_ {
        (0..self.len()).map(|k| self.row(k))
    }

    /// `max_t |x(t) − x(0)| / |x(0)|`, zero when `x(0) = 0`.
    pub fn max_relative_drift(values: &[f64]) -> f64 {
        let Some(&first) = values.first() else { return 0.0 };
        if first == 0.0 {
            return 0.0;
        }
        values.iter().map(|v| ((v - first) / first).abs()).fold(0.0, f64::max)
    }

    /// Least-squares slope of the centroid against time.
    pub fn centroid_speed(&self) -> f64 {
        let n = self.len() as f64;
        if self.len() < 2 {
            return 0.0;
        }
        let tm = self.times.iter().sum::<f64>() / n;
        let xm = self.centroid_x1.iter().sum::<f64>() / n;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for (t, x) in self.times.iter().zip(&self.centroid_x1) {
            sxy += (t - tm) * (x - xm);
            sxx += (t - tm) * (t - tm);
        }
        sxy / sxx
    }

    pub fn max_orbit_dist(&self) -> f64 {
        self.orbit_dist.iter().copied().fold(f64::NAN, f64::max)
    }
}

/// Keeps a periodic coordinate continuous between samples.
struct Unwrapper {
    period: f64,
    last: Option<f64>,
}

impl Unwrapper {
    fn new(period: f64) -> Self {
        Self { period, last: None }
    }

    fn push(&mut self, x: f64) -> f64 {
        let out = match self.last {
            None => x,
            Some(prev) => prev + (x - prev + 0.5 * self.period).rem_euclid(self.period) - 0.5 * self.period,
        };
        self.last = Some(out);
        out
    }
}

/// `x₁` centroid of `q₊` as a circular mean over the periodic box, in
/// `[−Lx, Lx)`; zero for a field without positive part.
pub fn centroid_x1(q: &ScalarField) -> f64 {
    let spec = q.spec();
    let lx = spec.lx();
    let (mut s, mut c) = (0.0, 0.0);
    for i in 0..spec.nx() {
        let column: f64 = (0..spec.ny()).map(|j| q.get(i, j).max(0.0)).sum();
        let angle = PI * spec.x1(i) / lx;
        s += column * angle.sin();
        c += column * angle.cos();
    }
    if s == 0.0 && c == 0.0 {
        return 0.0;
    }
    s.atan2(c) * lx / PI
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbKind {
    /// Band-limited noise near the support, clipped to keep `q ≥ 0`, scaled
    /// so that the perturbation has relative metric size `amplitude`.
    SmoothNoise,
    /// Translation in `x₁` by `amplitude` cells via a spectral phase.
    Shift,
    /// Radial stretch by `1 + amplitude` about the axis point below the
    /// centroid.
    Dilate,
}

impl FromStr for PerturbKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smooth-noise" => Ok(Self::SmoothNoise),
            "shift" => Ok(Self::Shift),
            "dilate" => Ok(Self::Dilate),
            other => Err(Error::UnknownPerturbation(other.to_string())),
        }
    }
}

impl fmt::Display for PerturbKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SmoothNoise => "smooth-noise",
            Self::Shift => "shift",
            Self::Dilate => "dilate",
        })
    }
}

/// Noise correlation length in cells.
const NOISE_CORRELATION_CELLS: f64 = 16.0;
/// Cells by which the noise support extends past `supp q`.
const NOISE_SUPPORT_DILATION: usize = 4;

/// Perturbed copy of `q`, nonnegative and defined on the half plane (hence
/// odd in the extension).
pub fn perturb(q: &ScalarField, kind: PerturbKind, amplitude: f64, seed: u64) -> Result<ScalarField> {
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::InvalidParameter(format!("amplitude must be nonnegative (got {amplitude})")));
    }
    if amplitude == 0.0 {
        return Ok(q.clone());
    }
    match kind {
        PerturbKind::SmoothNoise => smooth_noise(q, amplitude, seed),
        PerturbKind::Shift => Ok(spectral_shift(q, amplitude * q.spec().hx())),
        PerturbKind::Dilate => Ok(dilate(q, 1.0 + amplitude)),
    }
}

fn smooth_noise(q: &ScalarField, amplitude: f64, seed: u64) -> Result<ScalarField> {
    let spec = *q.spec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let white: Vec<f64> = (0..spec.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let spectral = SpectralBox::new(spec);
    let mut spectrum = spectral.forward_field(&ScalarField::from_vec(spec, white)?);
    let kc = 2.0 * PI / (NOISE_CORRELATION_CELLS * spec.hx().max(spec.hy()));
    for (v, (kx, ky)) in spectrum.iter_mut().zip(spectral.wavenumbers()) {
        *v *= (-(kx * kx + ky * ky) / (kc * kc)).exp();
    }
    let mut noise = spectral.inverse_field(spectrum);

    let support = dilated_support(q, NOISE_SUPPORT_DILATION);
    for (v, &inside) in noise.data_mut().iter_mut().zip(&support) {
        if !inside {
            *v = 0.0;
        }
    }
    let scale = orbit_metric(q);
    if scale == 0.0 || orbit_metric(&noise) == 0.0 {
        return Err(Error::InvalidParameter("cannot perturb a field with empty support".into()));
    }
    let apply = |s: f64| -> ScalarField {
        let data = q.data().iter().zip(noise.data()).map(|(a, b)| (a + s * b).max(0.0)).collect();
        ScalarField::from_vec(spec, data).expect("finite perturbation")
    };
    let relative = |s: f64| orbit_metric(&apply(s).add_scaled(q, -1.0).expect("same grid")) / scale;

    // The clipped perturbation grows monotonically with s.
    let mut hi = amplitude * scale / orbit_metric(&noise);
    while relative(hi) < amplitude {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if relative(mid) < amplitude {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(apply(hi))
}

/// Nodes within `cells` (Chebyshev distance, periodic in `x₁`) of a node
/// where `q > 0`.
fn dilated_support(q: &ScalarField, cells: usize) -> Vec<bool> {
    let spec = q.spec();
    let (nx, ny) = (spec.nx(), spec.ny());
    let mut out = vec![false; spec.len()];
    for j in 0..ny {
        for i in 0..nx {
            if q.get(i, j) <= 0.0 {
                continue;
            }
            for dj in j.saturating_sub(cells)..=(j + cells).min(ny - 1) {
                for di in 0..=2 * cells {
                    let ii = (i + nx + di - cells) % nx;
                    out[spec.index(ii, dj)] = true;
                }
            }
        }
    }
    out
}

/// `q(x₁ − c, x₂)` by a Fourier phase, clipped at zero.
fn spectral_shift(q: &ScalarField, c: f64) -> ScalarField {
    let spectral = SpectralBox::new(*q.spec());
    let mut spectrum = spectral.forward_field(q);
    for (v, (kx, _)) in spectrum.iter_mut().zip(spectral.wavenumbers()) {
        *v *= Complex64::from_polar(1.0, -kx * c);
    }
    spectral.inverse_field(spectrum).map(|v| v.max(0.0))
}

/// `q(p + (x − p)/factor)` with `p = (centroid, 0)`, bilinear, periodic in
/// `x₁` and odd across the axis.
fn dilate(q: &ScalarField, factor: f64) -> ScalarField {
    let spec = *q.spec();
    let centre = centroid_x1(q);
    let (nx, ny) = (spec.nx() as isize, spec.ny() as isize);
    let sample = |i: isize, j: isize| -> f64 {
        let i = i.rem_euclid(nx) as usize;
        if j < 0 {
            -q.get(i, (-1 - j) as usize)
        } else if j >= ny {
            0.0
        } else {
            q.get(i, j as usize)
        }
    };
    ScalarField::from_fn(spec, |[x1, x2]| {
        let s1 = centre + (x1 - centre) / factor;
        let s2 = x2 / factor;
        let fi = (s1 + spec.lx()) / spec.hx() - 0.5;
        let fj = s2 / spec.hy() - 0.5;
        let (i0, j0) = (fi.floor() as isize, fj.floor() as isize);
        let (ti, tj) = (fi - i0 as f64, fj - j0 as f64);
        let v = (1.0 - ti) * (1.0 - tj) * sample(i0, j0)
            + ti * (1.0 - tj) * sample(i0 + 1, j0)
            + (1.0 - ti) * tj * sample(i0, j0 + 1)
            + ti * tj * sample(i0 + 1, j0 + 1);
        v.max(0.0)
    })
}
