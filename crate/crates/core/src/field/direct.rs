use std::f64::consts::PI;

use super::grid::ScalarField;
use crate::error::{Error, Result};
use crate::specfun::green_free_unchecked;

/// Largest grid (in nodes) accepted by [`apply_green_direct`].
pub const DIRECT_NODE_CAP: usize = 1 << 14;

/// Cell average of `G` over the singular self cell: exact log part over the
/// disc of equal area, bounded remainder sampled at half the disc radius.
fn self_cell_average(hx: f64, hy: f64) -> f64 {
    let rho = (hx * hy / PI).sqrt();
    let log_part = (1.0 / (2.0 * PI)) * ((2.0 / rho).ln() + 0.5);
    let r = 0.5 * rho;
    let remainder = green_free_unchecked(r) - (1.0 / (2.0 * PI)) * (2.0 / r).ln();
    log_part + remainder
}

/// `𝒢ω(x) = ∫_Π G_Π(x, y) ω(y) dy` by the midpoint rule on the true half
/// plane (no periodic images). Cost is quadratic in the node count.
pub fn apply_green_direct(omega: &ScalarField) -> Result<ScalarField> {
    let spec = *omega.spec();
    if spec.len() > DIRECT_NODE_CAP {
        return Err(Error::GridTooLarge {
            nodes: spec.len(),
            cap: DIRECT_NODE_CAP,
        });
    }
    let (nx, ny) = (spec.nx(), spec.ny());
    let (hx, hy) = (spec.hx(), spec.hy());

    // Kernel tables indexed by column offset and row offset / row sum.
    let mut direct = vec![0.0; nx * ny];
    let mut image = vec![0.0; nx * 2 * ny];
    for di in 0..nx {
        let dx = di as f64 * hx;
        for dj in 0..ny {
            direct[di * ny + dj] = if di == 0 && dj == 0 {
                self_cell_average(hx, hy)
            } else {
                green_free_unchecked(dx.hypot(dj as f64 * hy))
            };
        }
        for s in 1..2 * ny {
            image[di * 2 * ny + s] = green_free_unchecked(dx.hypot(s as f64 * hy));
        }
    }

    let area = spec.cell_area();
    let src = omega.data();
    let mut out = ScalarField::zeros(spec);
    for j in 0..ny {
        for i in 0..nx {
            let mut acc = 0.0;
            for jp in 0..ny {
                let dj = j.abs_diff(jp);
                let s = j + jp + 1;
                let row = &src[jp * nx..(jp + 1) * nx];
                for (ip, &w) in row.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    let di = i.abs_diff(ip);
                    acc += (direct[di * ny + dj] - image[di * 2 * ny + s]) * w;
                }
            }
            out.set(i, j, acc * area);
        }
    }
    Ok(out)
}
