//! First-order perturbation energies from the closed-form diagonal elements.

use crate::error::{Error, Result};
use crate::matrix_elements::{me_inv_r2, me_nonpoly};
use crate::model::{gk_energy, ChannelSpec, PotentialParams, Sector};

/// `2β(2n+ζ) + λ ⟨n|r²/(1+gr²)|n⟩ − A β/(ζ−1)`.
pub fn first_order_energy(n: usize, channel: &ChannelSpec, potential: &PotentialParams) -> Result<f64> {
    let mut e = gk_energy(n, channel) + potential.lambda() * me_nonpoly(n, n, channel, potential.g())?;
    if channel.a() != 0.0 {
        e -= channel.a() * me_inv_r2(n, n, channel)?;
    }
    Ok(e)
}

/// Coefficient of `λ` in the first-order energy of the unshifted (`A = 0`)
/// basis: `⟨n|r²/(1+gr²)|n⟩`.
pub fn first_order_coefficient(n: usize, sector: &Sector, g: f64) -> Result<f64> {
    if !(g > 0.0) {
        return Err(Error::domain("first_order_coefficient", format!("g = {g} must be positive")));
    }
    me_nonpoly(n, n, &sector.with_a(0.0)?, g)
}
