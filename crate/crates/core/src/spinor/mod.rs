//! Two-component spinors, the spin connection and the frame Dirac operator.

mod algebra;
mod dirac;
mod field;

pub use algebra::{
    clifford_mul, gamma, gammas, norm_sqr, pauli, re_inner, real_spinor, spinor, zero_spinor,
    SpinMatrix, Spinor, SpinorDual, SpinorJet,
};
pub use dirac::{
    conformal_residual, dirac_apply, dirac_decomposition_residual, fiber_pair,
    fiber_rescale_residual, fiber_rescale_sweep, lichnerowicz_residual, spin_covariant_derivative,
    theta0_construct, FiberSweep, SpinConnection,
};
pub use field::AnalyticSpinorField;
