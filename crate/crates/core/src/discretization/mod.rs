//! Meridional grids, finite-difference stencils and quadrature.

mod field;
mod grid;
mod quadrature;

pub use field::{fd_derivative, fd_frame_derivative, fd_scalar, GridSpinorField, NodeKind};
pub use grid::{build_grid, fd_weights, Direction, Grid, Spacing};
pub use quadrature::{integrate_surface, integrate_volume, QuadratureRule};
