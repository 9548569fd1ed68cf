use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{GridSpec, ScalarField};

/// Fourier machinery on the oddly extended periodic box
/// `[−Lx, Lx] × [−Ly, Ly]`.
///
/// Physical arrays have `2·ny` rows (extended `x₂`) of `nx` columns, the
/// lower half holding the mirrored, negated field. Spectra are stored
/// column-major (`kx` outer, `ky` inner) to avoid a transpose per round trip.
pub struct SpectralBox {
    spec: GridSpec,
    rows: usize,
    cols: usize,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    mode_x: Vec<i64>,
    mode_y: Vec<i64>,
}

impl std::fmt::Debug for SpectralBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralBox").field("spec", &self.spec).finish()
    }
}

fn mode_numbers(n: usize) -> Vec<i64> {
    (0..n as i64)
        .map(|m| if m < n as i64 / 2 { m } else { m - n as i64 })
        .collect()
}

impl SpectralBox {
    pub fn new(spec: GridSpec) -> Self {
        let cols = spec.nx();
        let rows = 2 * spec.ny();
        let mut planner = FftPlanner::new();
        let mode_x = mode_numbers(cols);
        let mode_y = mode_numbers(rows);
        let dkx = 2.0 * PI / (2.0 * spec.lx());
        let dky = 2.0 * PI / (2.0 * spec.ly());
        Self {
            spec,
            rows,
            cols,
            fft_x: planner.plan_fft_forward(cols),
            ifft_x: planner.plan_fft_inverse(cols),
            fft_y: planner.plan_fft_forward(rows),
            ifft_y: planner.plan_fft_inverse(rows),
            kx: mode_x.iter().map(|&m| m as f64 * dkx).collect(),
            ky: mode_y.iter().map(|&m| m as f64 * dky).collect(),
            mode_x,
            mode_y,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Number of complex values in a spectrum or extended physical array.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Wavenumbers `(kx, ky)` of spectral index `s`.
    pub fn wavenumber(&self, s: usize) -> (f64, f64) {
        (self.kx[s / self.rows], self.ky[s % self.rows])
    }

    /// Iterator over `(kx, ky)` in spectral storage order.
    pub fn wavenumbers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.kx
            .iter()
            .flat_map(move |&kx| self.ky.iter().map(move |&ky| (kx, ky)))
    }

    /// Whether spectral index `s` survives the two-thirds truncation.
    pub fn in_dealiased_band(&self, s: usize) -> bool {
        let mx = self.mode_x[s / self.rows].unsigned_abs() as usize;
        let my = self.mode_y[s % self.rows].unsigned_abs() as usize;
        3 * mx < self.cols && 3 * my < self.rows
    }

    /// Dealiasing mask in spectral storage order.
    pub fn dealias_mask(&self) -> Vec<bool> {
        (0..self.len()).map(|s| self.in_dealiased_band(s)).collect()
    }

    /// Odd extension in `x₂` as a complex physical array.
    pub fn extend_odd(&self, field: &ScalarField) -> Vec<Complex64> {
        assert_eq!(field.spec(), &self.spec, "field grid does not match spectral box");
        let ny = self.spec.ny();
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for j in 0..ny {
            let row = field.row(j);
            let upper = (ny + j) * self.cols;
            let lower = (ny - 1 - j) * self.cols;
            for (i, &v) in row.iter().enumerate() {
                out[upper + i] = Complex64::new(v, 0.0);
                out[lower + i] = Complex64::new(-v, 0.0);
            }
        }
        out
    }

    /// Upper half (`x₂ > 0`) of the real part of an extended physical array.
    pub fn restrict(&self, physical: &[Complex64]) -> ScalarField {
        let ny = self.spec.ny();
        let data = physical[ny * self.cols..]
            .iter()
            .map(|c| c.re)
            .collect::<Vec<_>>();
        ScalarField::from_raw(self.spec, data)
    }

    /// Forward transform: physical (row-major) in, spectrum (column-major) out.
    pub fn forward(&self, mut physical: Vec<Complex64>) -> Vec<Complex64> {
        self.fft_x.process(&mut physical);
        let mut spectrum = transpose(&physical, self.rows, self.cols);
        self.fft_y.process(&mut spectrum);
        spectrum
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.ifft_y.process(&mut spectrum);
        let mut physical = transpose(&spectrum, self.cols, self.rows);
        self.ifft_x.process(&mut physical);
        let scale = 1.0 / self.len() as f64;
        for v in &mut physical {
            *v *= scale;
        }
        physical
    }

    pub fn forward_field(&self, field: &ScalarField) -> Vec<Complex64> {
        self.forward(self.extend_odd(field))
    }

    pub fn inverse_field(&self, spectrum: Vec<Complex64>) -> ScalarField {
        self.restrict(&self.inverse(spectrum))
    }

    /// `(−Δ + 1)⁻¹` on the periodic extended box.
    pub fn apply_green(&self, field: &ScalarField) -> ScalarField {
        let mut spectrum = self.forward_field(field);
        for (v, (kx, ky)) in spectrum.iter_mut().zip(self.wavenumbers()) {
            *v /= kx * kx + ky * ky + 1.0;
        }
        self.inverse_field(spectrum)
    }
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut dst = vec![Complex64::new(0.0, 0.0); src.len()];
    const BLOCK: usize = 32;
    for rb in (0..rows).step_by(BLOCK) {
        for cb in (0..cols).step_by(BLOCK) {
            for r in rb..(rb + BLOCK).min(rows) {
                for c in cb..(cb + BLOCK).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    dst
}
