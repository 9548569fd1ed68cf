//! Half-plane grids, the image kernel `G_Π` and the inverse Helmholtz
//! operator `𝒢 = (−Δ + 1)⁻¹` with odd symmetry in `x₂`.

mod direct;
mod dump;
mod grid;
mod spectral;

pub use direct::{apply_green_direct, DIRECT_NODE_CAP};
pub use dump::{read_dump, write_dump, DumpMeta};
pub use grid::{GridSpec, ScalarField};
pub use spectral::SpectralBox;

use log::warn;

use crate::error::{Error, Result};
use crate::specfun::green_free_unchecked;

/// `G_Π(x, y) = G(|x − y|) − G(|x̄ − y|)`, `x̄ = (x₁, −x₂)`.
pub fn gp_kernel(x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    let direct = (x[0] - y[0]).hypot(x[1] - y[1]);
    if direct == 0.0 {
        return Err(Error::Singular { x1: x[0], x2: x[1] });
    }
    let image = (x[0] - y[0]).hypot(x[1] + y[1]);
    Ok(green_free_unchecked(direct) - green_free_unchecked(image))
}

/// Spectral `𝒢ω`. Warns when `ω` has not decayed near the box edge, since
/// the periodic images then contaminate the result.
pub fn apply_green_spectral(spectral: &SpectralBox, omega: &ScalarField) -> ScalarField {
    let edge = outer_ring_max(omega);
    let peak = omega.norm_linf();
    if peak > 0.0 && edge > 1e-10 * peak {
        warn!("field has not decayed at the box edge: ring max {edge:.3e}, peak {peak:.3e}");
    }
    spectral.apply_green(omega)
}

/// Largest `|f|` on the outermost ring: the top row and both side columns.
pub fn outer_ring_max(field: &ScalarField) -> f64 {
    let spec = field.spec();
    let (nx, ny) = (spec.nx(), spec.ny());
    let top = field.row(ny - 1).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    (0..ny).fold(top, |m, j| {
        m.max(field.get(0, j).abs()).max(field.get(nx - 1, j).abs())
    })
}

/// Truncation-quality diagnostic: `max |𝒢ω|` over the outermost ring.
pub fn decay_check(spectral: &SpectralBox, omega: &ScalarField) -> f64 {
    outer_ring_max(&spectral.apply_green(omega))
}
