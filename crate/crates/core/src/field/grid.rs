use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centred grid on `[−Lx, Lx] × [0, Ly]`.
///
/// Node `(i, j)` sits at `x₁ = −Lx + (i + ½)hx`, `x₂ = (j + ½)hy`, so no node
/// lies on the axis. Storage is row-major with rows of constant `x₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lx: f64,
    ly: f64,
    nx: usize,
    ny: usize,
}

impl GridSpec {
    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid extents must be positive (Lx = {lx}, Ly = {ly})"
            )));
        }
        if !nx.is_power_of_two() || !ny.is_power_of_two() || nx < 2 || ny < 2 {
            return Err(Error::InvalidParameter(format!(
                "node counts must be powers of two >= 2 (nx = {nx}, ny = {ny})"
            )));
        }
        Ok(Self { lx, ly, nx, ny })
    }

    /// Square-cell grid sized to a dipole of radius `a`: half-width and
    /// height `3a`, i.e. a `6a × 6a` periodic box once oddly extended.
    pub fn for_dipole(a: f64, nx: usize, ny: usize) -> Result<Self> {
        Self::new(3.0 * a, 3.0 * a, nx, ny)
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.hx() * self.hy()
    }

    pub fn x1(&self, i: usize) -> f64 {
        -self.lx + (i as f64 + 0.5) * self.hx()
    }

    pub fn x2(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy()
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x1(i), self.x2(j)]
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
}

/// Samples of a scalar on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            data: vec![0.0; spec.len()],
        }
    }

    pub fn from_vec(spec: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "field value at index {bad} is not finite"
            )));
        }
        Ok(Self { spec, data })
    }

    /// No finiteness check; used for transform outputs that callers inspect.
    pub(crate) fn from_raw(spec: GridSpec, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), spec.len());
        Self { spec, data }
    }

    /// Samples `f` at every node.
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut([f64; 2]) -> f64) -> Self {
        let mut data = Vec::with_capacity(spec.len());
        for j in 0..spec.ny() {
            for i in 0..spec.nx() {
                data.push(f(spec.point(i, j)));
            }
        }
        Self { spec, data }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.spec.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.spec.index(i, j);
        self.data[k] = value;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let nx = self.spec.nx();
        &self.data[j * nx..(j + 1) * nx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// Pointwise `self + factor·other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            spec: self.spec,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + factor * b)
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.spec, other.spec
            )));
        }
        Ok(())
    }

    /// Midpoint-rule inner product `Σ f g hx hy`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>() * self.spec.cell_area()
    }

    pub fn integral(&self) -> f64 {
        self.data.iter().sum::<f64>() * self.spec.cell_area()
    }

    pub fn norm_l1(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).sum::<f64>() * self.spec.cell_area()
    }

    pub fn norm_l2(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() * self.spec.cell_area()).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.data.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// `∫ x₂ f` by the midpoint rule.
    pub fn first_moment_x2(&self) -> f64 {
        let spec = &self.spec;
        (0..spec.ny())
            .map(|j| spec.x2(j) * self.row(j).iter().sum::<f64>())
            .sum::<f64>()
            * spec.cell_area()
    }

    /// `‖x₂ f‖₁` by the midpoint rule.
    pub fn weighted_l1_x2(&self) -> f64 {
        let spec = &self.spec;
        (0..spec.ny())
            .map(|j| spec.x2(j) * self.row(j).iter().map(|v| v.abs()).sum::<f64>())
            .sum::<f64>()
            * spec.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Rotates columns so that the result at column `i` holds the value of
    /// column `i + shift` (periodic in `x₁`), i.e. samples `f(· + shift·hx e₁)`.
    pub fn shifted_columns(&self, shift: isize) -> Self {
        let nx = self.spec.nx() as isize;
        let mut out = Self::zeros(self.spec);
        for j in 0..self.spec.ny() {
            let src = self.row(j);
            let dst = &mut out.data[j * nx as usize..(j + 1) * nx as usize];
            for (i, d) in dst.iter_mut().enumerate() {
                *d = src[(i as isize + shift).rem_euclid(nx) as usize];
            }
        }
        out
    }
}
