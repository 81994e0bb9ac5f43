use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricSpec;

/// Radial node placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Uniform,
    Geometric,
}

/// Coordinate direction of a stencil.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    R,
    Theta,
}

impl Direction {
    pub fn slot(self) -> usize {
        match self {
            Direction::R => 0,
            Direction::Theta => 1,
        }
    }
}

/// Tensor grid on the meridional annulus `[r_min, r_max] × (0, π)`.
///
/// Radial nodes include both ends; polar nodes are cell centred, `θ_j = (j + ½)π/n_θ`,
/// so nothing lands on the axis. Nodes are stored row-major in `(i_r, j_θ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
    pub spacing: Spacing,
    r: Vec<f64>,
    theta: Vec<f64>,
}

pub fn build_grid(r_min: f64, r_max: f64, n_r: usize, n_theta: usize, spacing: Spacing) -> Result<Grid> {
    if !(r_min.is_finite() && r_max.is_finite()) || !(r_min > 0.0) || !(r_max > r_min) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    if n_r < 3 {
        return Err(Error::InvalidParameter(format!("n_r = {n_r}, need at least 3 radial nodes")));
    }
    if n_theta < 2 {
        return Err(Error::InvalidParameter(format!("n_θ = {n_theta}, need at least 2 polar nodes")));
    }
    let last = (n_r - 1) as f64;
    let mut r: Vec<f64> = match spacing {
        Spacing::Uniform => (0..n_r)
            .map(|i| r_min + (r_max - r_min) * i as f64 / last)
            .collect(),
        Spacing::Geometric => {
            let ratio = (r_max / r_min).ln();
            (0..n_r).map(|i| r_min * (ratio * i as f64 / last).exp()).collect()
        }
    };
    r[n_r - 1] = r_max;
    let dt = PI / n_theta as f64;
    let theta = (0..n_theta).map(|j| (j as f64 + 0.5) * dt).collect();
    Ok(Grid {
        r_min,
        r_max,
        n_r,
        n_theta,
        spacing,
        r,
        theta,
    })
}

impl Grid {
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn dtheta(&self) -> f64 {
        PI / self.n_theta as f64
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// `(r_i, θ_j)` for every node in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..self.n_r).flat_map(move |i| {
            (0..self.n_theta).map(move |j| (i, j, self.r[i], self.theta[j]))
        })
    }

    /// Largest node spacing in either coordinate.
    pub fn h_max(&self) -> f64 {
        let dr = self.r.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        dr.max(self.dtheta())
    }

    /// Index of a radius that coincides with a node.
    pub fn radius_index(&self, r: f64) -> Result<usize> {
        let tol = 1e-10 * self.r_max;
        self.r
            .iter()
            .position(|&x| (x - r).abs() <= tol)
            .ok_or_else(|| Error::RangeError(format!("r = {r} is not a grid radius")))
    }

    pub fn check_metric(&self, spec: &MetricSpec) -> Result<()> {
        let floor = spec.r_floor();
        if self.r_min <= floor {
            return Err(Error::DomainError(format!(
                "grid starts at r = {} but the metric needs r > {floor}",
                self.r_min
            )));
        }
        Ok(())
    }

    /// Three nodes and weights approximating `∂` at node `(i, j)` along `dir`,
    /// centred in the interior and one-sided at the ends. Returned as storage indices.
    /// A two-node polar grid falls back to a first-order difference.
    pub fn stencil(&self, dir: Direction, i: usize, j: usize) -> [(usize, f64); 3] {
        match dir {
            Direction::R => {
                let k = stencil_start(i, self.n_r);
                let x = [self.r[k], self.r[k + 1], self.r[k + 2]];
                let w = fd_weights(x, self.r[i]);
                [0, 1, 2].map(|m| (self.index(k + m, j), w[m]))
            }
            Direction::Theta if self.n_theta == 2 => {
                let w = 1.0 / (self.theta[1] - self.theta[0]);
                [(self.index(i, 0), -w), (self.index(i, 1), w), (self.index(i, j), 0.0)]
            }
            Direction::Theta => {
                let k = stencil_start(j, self.n_theta);
                let x = [self.theta[k], self.theta[k + 1], self.theta[k + 2]];
                let w = fd_weights(x, self.theta[j]);
                [0, 1, 2].map(|m| (self.index(i, k + m), w[m]))
            }
        }
    }
}

fn stencil_start(i: usize, n: usize) -> usize {
    i.saturating_sub(1).min(n - 3)
}

/// Weights of the derivative of the quadratic interpolant through `x` at `at`.
pub fn fd_weights(x: [f64; 3], at: f64) -> [f64; 3] {
    let mut w = [0.0; 3];
    for k in 0..3 {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        let denom = (x[k] - x[a]) * (x[k] - x[b]);
        w[k] = ((at - x[a]) + (at - x[b])) / denom;
    }
    w
}
