//! Frequency-domain tools and closed-form causal reference models.
//!
//! Frequency transforms use `χ(ω) = ∫dt e^{iωt} χ(t)`, so retarded functions
//! are analytic in the upper half plane and their poles lie below the axis.

mod kk;
mod models;

pub use kk::{check_edges, hilbert, kramers_kronig, relative_l2, FrequencyGrid, EDGE_RATIO, GRID_TOL};
pub use models::{
    fluid_current_response, fluid_poles, fluid_ward_residual, oscillator_frequency, oscillator_poles,
    oscillator_response, oscillator_time, rc_frequency, rc_pole, rc_response, rc_time, Domain, FluidParams,
};

use crate::correlators::SpectralComb;
use crate::error::{Error, Result};
use crate::C64;

/// `G(z) = −Σ w/(2π(z − ω))` for `z` off the real axis.
pub fn spectral_reconstruct(comb: &SpectralComb, z: C64) -> Result<C64> {
    if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::OnRealAxis);
    }
    Ok(comb.resolvent(z))
}

/// `G(ω + iε) − G(ω − iε)` on a grid; tends to `i·X(ω)` as `ε → 0`.
pub fn discontinuity(comb: &SpectralComb, omegas: &[f64], eps: f64) -> Result<Vec<C64>> {
    omegas
        .iter()
        .map(|&w| Ok(spectral_reconstruct(comb, C64::new(w, eps))? - spectral_reconstruct(comb, C64::new(w, -eps))?))
        .collect()
}

/// `G(ω + iη)` sampled on a grid, as a [`FrequencyGrid`].
pub fn broadened_response(comb: &SpectralComb, omegas: Vec<f64>, eta: f64) -> Result<FrequencyGrid<f64>> {
    if !(eta > 0.0) {
        return Err(Error::InvalidParameter(format!("broadening must be positive, got {eta}")));
    }
    let values = omegas.iter().map(|&w| comb.resolvent(C64::new(w, eta))).collect();
    FrequencyGrid::new(omegas, values)
}
