//! Weighted norms, decay fits, boundary fluxes and extraction of the decay coefficient `b`.

mod flux;
mod norms;

pub use crate::spinor::lichnerowicz_residual;
pub use flux::{
    boundary_flux, divergence_flux, estimate_b, flux_nonnegativity, scalar_weitzenbock_check,
    weitzenbock_integrand, BEstimate, BMethod, Band, FluxSeries, HARMONIC_THRESHOLD,
};
pub use norms::{
    decay_rate_fit, power_law_fit, weighted_norm, weighted_norm_components, weighted_norm_spinor,
    WeightParams,
};
