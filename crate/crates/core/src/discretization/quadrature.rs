use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::MetricSpec;

use super::grid::Grid;

/// Node weights for integrals over the annulus and over coordinate spheres,
/// with `φ` integrated out.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub grid: Grid,
    /// `√det g · Δθ · 2π`; multiply by a radial width to get a volume weight.
    pub density: Vec<f64>,
    /// `√(g_θθ g_φφ) · Δθ · 2π`.
    pub surface: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(grid: &Grid, spec: &MetricSpec) -> Result<Self> {
        grid.check_metric(spec)?;
        let dt = grid.dtheta() * TAU;
        let mut density = Vec::with_capacity(grid.len());
        let mut surface = Vec::with_capacity(grid.len());
        for (_, _, r, t) in grid.nodes() {
            let g = spec.component_values(r, t)?;
            density.push((g[0] * g[1] * g[2]).sqrt() * dt);
            surface.push((g[1] * g[2]).sqrt() * dt);
        }
        Ok(QuadratureRule {
            grid: grid.clone(),
            density,
            surface,
        })
    }

    /// Composite trapezoid widths in `r`.
    pub fn radial_widths(&self) -> Vec<f64> {
        let r = self.grid.r();
        let n = r.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { r[i] - r[i - 1] } else { 0.0 };
                let right = if i + 1 < n { r[i + 1] - r[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }

    /// Full-annulus volume weights.
    pub fn volume_weights(&self) -> Vec<f64> {
        let widths = self.radial_widths();
        let nt = self.grid.n_theta;
        self.density
            .iter()
            .enumerate()
            .map(|(k, d)| d * widths[k / nt])
            .collect()
    }

    /// `Σ_θ density · samples` at every radius.
    pub fn radial_profile(&self, samples: &[f64]) -> Vec<f64> {
        let nt = self.grid.n_theta;
        (0..self.grid.n_r)
            .map(|i| (0..nt).map(|j| self.density[i * nt + j] * samples[i * nt + j]).sum())
            .collect()
    }

    fn check_len(&self, samples: &[f64]) -> Result<()> {
        if samples.len() != self.grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} samples for {} nodes",
                samples.len(),
                self.grid.len()
            )));
        }
        Ok(())
    }
}

/// `∫ samples dV` over `r_lo ≤ r ≤ r_hi`: midpoint in `θ`, trapezoid in `r`, with the
/// radial profile interpolated linearly when a band edge falls between nodes.
pub fn integrate_volume(rule: &QuadratureRule, samples: &[f64], r_lo: f64, r_hi: f64) -> Result<f64> {
    rule.check_len(samples)?;
    let g = &rule.grid;
    let tol = 1e-12 * g.r_max;
    if !(r_lo >= g.r_min - tol && r_hi <= g.r_max + tol && r_lo <= r_hi) {
        return Err(Error::RangeError(format!(
            "band [{r_lo}, {r_hi}] is outside [{}, {}]",
            g.r_min, g.r_max
        )));
    }
    let p = rule.radial_profile(samples);
    let r = g.r();
    let lerp = |i: usize, x: f64| {
        let s = (x - r[i]) / (r[i + 1] - r[i]);
        p[i] + s * (p[i + 1] - p[i])
    };
    let mut total = 0.0;
    for i in 0..r.len() - 1 {
        let a = r_lo.max(r[i]);
        let b = r_hi.min(r[i + 1]);
        if b > a {
            total += 0.5 * (b - a) * (lerp(i, a) + lerp(i, b));
        }
    }
    Ok(total)
}

/// `∫ samples dA` over the coordinate sphere at grid radius `r`.
pub fn integrate_surface(rule: &QuadratureRule, samples: &[f64], r: f64) -> Result<f64> {
    rule.check_len(samples)?;
    let i = rule.grid.radius_index(r)?;
    let nt = rule.grid.n_theta;
    Ok((0..nt).map(|j| rule.surface[i * nt + j] * samples[i * nt + j]).sum())
}
