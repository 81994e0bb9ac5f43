//! Box-scheme discretization of the Dirac operator, least-squares solves and
//! injectivity probes.

mod lsq;
mod operator;
mod svd;

pub use lsq::{
    cgls, harmonic_residual, l2_distance, solve_harmonic_correction, solve_least_squares,
    solve_manufactured, HarmonicCorrection, SolveReport, SolverOptions,
};
pub use operator::{assemble, spmv, BoundaryCondition, Cell, DiscreteOperator};
pub use svd::smallest_singular_value;
