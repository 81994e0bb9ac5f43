use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FrameTag, MetricSpec};
use crate::spinor::{norm_sqr, zero_spinor, AnalyticSpinorField, Spinor};

use super::grid::{Direction, Grid};

/// Role of a node in a discrete solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Interior,
    Dirichlet,
}

/// One spinor per grid node, row-major in `(i_r, j_θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpinorField {
    pub tag: FrameTag,
    pub n_r: usize,
    pub n_theta: usize,
    pub values: Vec<Spinor>,
    pub mask: Vec<NodeKind>,
}

impl GridSpinorField {
    pub fn zeros(grid: &Grid, tag: FrameTag) -> Self {
        GridSpinorField {
            tag,
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            values: vec![zero_spinor(); grid.len()],
            mask: vec![NodeKind::Interior; grid.len()],
        }
    }

    /// Node samples of an analytic field.
    pub fn sample(grid: &Grid, field: &AnalyticSpinorField) -> Self {
        let values = grid.nodes().map(|(_, _, r, t)| field.value(r, t)).collect();
        GridSpinorField {
            tag: field.tag().clone(),
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            values,
            mask: vec![NodeKind::Interior; grid.len()],
        }
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.n_r != grid.n_r || self.n_theta != grid.n_theta {
            return Err(Error::InvalidParameter(format!(
                "field is {}×{} but grid is {}×{}",
                self.n_r, self.n_theta, grid.n_r, grid.n_theta
            )));
        }
        Ok(())
    }

    pub fn check_frame(&self, spec: &MetricSpec) -> Result<()> {
        if &self.tag != spec.tag() {
            return Err(Error::FrameMismatch {
                field: self.tag.to_string(),
                metric: spec.tag().to_string(),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Spinor {
        &self.values[i * self.n_theta + j]
    }

    /// Marks the radial end rings, and optionally the first and last polar rows, as Dirichlet.
    pub fn mark_edges(&mut self, polar_edges: bool) {
        for i in 0..self.n_r {
            for j in 0..self.n_theta {
                let edge = i == 0
                    || i + 1 == self.n_r
                    || (polar_edges && (j == 0 || j + 1 == self.n_theta));
                self.mask[i * self.n_theta + j] = if edge {
                    NodeKind::Dirichlet
                } else {
                    NodeKind::Interior
                };
            }
        }
    }

    pub fn norm_sqr_samples(&self) -> Vec<f64> {
        self.values.iter().map(norm_sqr).collect()
    }

    pub fn map(&self, f: impl Fn(&Spinor) -> Spinor) -> Self {
        GridSpinorField {
            values: self.values.iter().map(f).collect(),
            ..self.clone()
        }
    }

    /// `self − other`, keeping `self`'s tag and mask.
    pub fn sub(&self, other: &GridSpinorField) -> Self {
        assert_eq!(self.values.len(), other.values.len());
        GridSpinorField {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
            ..self.clone()
        }
    }

    /// Largest pointwise norm.
    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Writes `r,theta,re_xi1,im_xi1,re_xi2,im_xi2`, one row per node.
    pub fn write_csv<W: Write>(&self, grid: &Grid, out: W) -> Result<()> {
        self.check_grid(grid)?;
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["r", "theta", "re_xi1", "im_xi1", "re_xi2", "im_xi2"])
            .map_err(io)?;
        for ((_, _, r, t), v) in grid.nodes().zip(&self.values) {
            w.write_record(
                [r, t, v[0].re, v[0].im, v[1].re, v[1].im].map(|x| x.to_string()),
            )
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Coordinate derivative `∂_dir ξ` at node `(i, j)` from the 3-point stencil.
pub fn fd_derivative(field: &GridSpinorField, grid: &Grid, dir: Direction, i: usize, j: usize) -> Spinor {
    grid.stencil(dir, i, j)
        .iter()
        .fold(zero_spinor(), |acc, &(k, w)| acc + field.values[k].scale(w))
}

/// Frame-directional derivative `(1/h) ∂_dir ξ` at node `(i, j)`.
pub fn fd_frame_derivative(
    field: &GridSpinorField,
    grid: &Grid,
    spec: &MetricSpec,
    dir: Direction,
    i: usize,
    j: usize,
) -> Result<Spinor> {
    let g = spec.component_values(grid.r()[i], grid.theta()[j])?;
    Ok(fd_derivative(field, grid, dir, i, j).unscale(g[dir.slot()].sqrt()))
}

/// Scalar version of [`fd_derivative`].
pub fn fd_scalar(samples: &[f64], grid: &Grid, dir: Direction, i: usize, j: usize) -> f64 {
    grid.stencil(dir, i, j).iter().map(|&(k, w)| w * samples[k]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Spacing};
    use crate::jet::Jet;
    use crate::spinor::real_spinor;

    #[test]
    fn quadratic_in_r_is_differentiated_exactly() {
        let grid = build_grid(1.0, 3.0, 9, 8, Spacing::Geometric).unwrap();
        let spec = MetricSpec::flat();
        let f = AnalyticSpinorField::new(&spec, "r²", |r, _| {
            [r * r, Jet::constant(0.0), Jet::constant(0.0), r * 3.0]
        });
        let s = GridSpinorField::sample(&grid, &f);
        for i in 0..grid.n_r {
            let d = fd_derivative(&s, &grid, Direction::R, i, 3);
            let r = grid.r()[i];
            assert!((d[0].re - 2.0 * r).abs() < 1e-11);
            assert!((d[1].im - 3.0).abs() < 1e-11);
        }
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let grid = build_grid(1.0, 2.0, 5, 6, Spacing::Uniform).unwrap();
        let spec = MetricSpec::flat();
        let s = GridSpinorField::sample(&grid, &AnalyticSpinorField::constant(&spec, real_spinor(0.4, -1.0)));
        for (i, j, _, _) in grid.nodes() {
            for dir in [Direction::R, Direction::Theta] {
                assert!(fd_derivative(&s, &grid, dir, i, j).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn theta_derivative_converges_at_second_order() {
        let spec = MetricSpec::flat();
        let f = AnalyticSpinorField::new(&spec, "sinθ", |_, t| {
            [t.sin(), Jet::constant(0.0), Jet::constant(0.0), Jet::constant(0.0)]
        });
        let mut errs = Vec::new();
        for n in [16, 32, 64] {
            let grid = build_grid(1.0, 2.0, 3, n, Spacing::Uniform).unwrap();
            let s = GridSpinorField::sample(&grid, &f);
            let err = (0..n)
                .map(|j| (fd_derivative(&s, &grid, Direction::Theta, 1, j)[0].re - grid.theta()[j].cos()).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
        }
    }

    #[test]
    fn csv_has_header_and_one_row_per_node() {
        let grid = build_grid(1.0, 2.0, 3, 2, Spacing::Uniform).unwrap();
        let s = GridSpinorField::sample(&grid, &AnalyticSpinorField::constant(&MetricSpec::flat(), real_spinor(1.0, 0.0)));
        let mut buf = Vec::new();
        s.write_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "r,theta,re_xi1,im_xi1,re_xi2,im_xi2");
        assert_eq!(lines.len(), 1 + grid.len());
        assert!(lines[1].starts_with("1,"));
    }
}
