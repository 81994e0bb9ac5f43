use serde::{Deserialize, Serialize};

use crate::discretization::{fd_scalar, Direction, Grid, GridSpinorField, QuadratureRule};
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;

/// Parameters of `‖u‖_{k,p,δ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    pub p: f64,
    pub delta: f64,
    pub k: usize,
}

impl WeightParams {
    pub fn new(p: f64, delta: f64, k: usize) -> Result<Self> {
        let w = WeightParams { p, delta, k };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!("p = {}, need p > 1", self.p)));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidParameter("δ must be finite".into()));
        }
        if self.k > 2 {
            return Err(Error::InvalidParameter(format!("k = {}, need k ≤ 2", self.k)));
        }
        Ok(())
    }

    /// Harmonic-spinor weights `δ = −ε` need `ε ∈ (2/p, 2 − 2/p)`.
    pub fn admissible_decay(&self) -> bool {
        let eps = -self.delta;
        eps > 2.0 / self.p && eps < 2.0 - 2.0 / self.p
    }
}

/// Coordinate partials of every real component, ordered by multi-index within each order.
fn partials(components: &[Vec<f64>], grid: &Grid, order: usize) -> Vec<Vec<Vec<f64>>> {
    let diff = |s: &[f64], dir| -> Vec<f64> {
        grid.nodes().map(|(i, j, _, _)| fd_scalar(s, grid, dir, i, j)).collect()
    };
    match order {
        0 => vec![components.to_vec()],
        1 => [Direction::R, Direction::Theta]
            .iter()
            .map(|&d| components.iter().map(|c| diff(c, d)).collect())
            .collect(),
        _ => {
            let dr: Vec<Vec<f64>> = components.iter().map(|c| diff(c, Direction::R)).collect();
            let dt: Vec<Vec<f64>> = components.iter().map(|c| diff(c, Direction::Theta)).collect();
            vec![
                dr.iter().map(|c| diff(c, Direction::R)).collect(),
                dr.iter().map(|c| diff(c, Direction::Theta)).collect(),
                dt.iter().map(|c| diff(c, Direction::Theta)).collect(),
            ]
        }
    }
}

/// `[Σ_{|l|≤k} ∫ |∂^l u|^p (1+r²)^{(−δp+|l|p−3)/2} dV]^{1/p}` for a vector-valued `u`
/// given by its real components.
pub fn weighted_norm_components(
    components: &[Vec<f64>],
    grid: &Grid,
    spec: &MetricSpec,
    params: &WeightParams,
) -> Result<f64> {
    params.validate()?;
    if components.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::InvalidParameter("sample count does not match the grid".into()));
    }
    let w = QuadratureRule::new(grid, spec)?.volume_weights();
    let p = params.p;
    let mut total = 0.0;
    for order in 0..=params.k {
        let expo = (-params.delta * p + order as f64 * p - 3.0) / 2.0;
        for d in partials(components, grid, order) {
            for (node, (_, _, r, _)) in grid.nodes().enumerate() {
                let m: f64 = d.iter().map(|c| c[node] * c[node]).sum::<f64>().sqrt();
                if m > 0.0 {
                    total += w[node] * m.powf(p) * (1.0 + r * r).powf(expo);
                }
            }
        }
    }
    Ok(total.powf(1.0 / p))
}

pub fn weighted_norm(samples: &[f64], grid: &Grid, spec: &MetricSpec, params: &WeightParams) -> Result<f64> {
    weighted_norm_components(&[samples.to_vec()], grid, spec, params)
}

/// Spinor version; `|u|` is the Hermitian norm.
pub fn weighted_norm_spinor(
    field: &GridSpinorField,
    grid: &Grid,
    spec: &MetricSpec,
    params: &WeightParams,
) -> Result<f64> {
    field.check_grid(grid)?;
    let comps: Vec<Vec<f64>> = (0..4)
        .map(|c| {
            field
                .values
                .iter()
                .map(|v| if c % 2 == 0 { v[c / 2].re } else { v[c / 2].im })
                .collect()
        })
        .collect();
    weighted_norm_components(&comps, grid, spec, params)
}

/// Least-squares slope of `log ⟨|u|⟩_θ` against `log r` over the outer half of the grid,
/// averaging over nodes with `θ ∈ [θ_lo, θ_hi]`.
pub fn decay_rate_fit(samples: &[f64], grid: &Grid, band: (f64, f64)) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::InvalidParameter("sample count does not match the grid".into()));
    }
    let js: Vec<usize> = (0..grid.n_theta)
        .filter(|&j| grid.theta()[j] >= band.0 && grid.theta()[j] <= band.1)
        .collect();
    if js.is_empty() {
        return Err(Error::DegenerateData(format!("no polar nodes in [{}, {}]", band.0, band.1)));
    }
    let start = grid.n_r / 2;
    if grid.n_r - start < 4 {
        return Err(Error::DegenerateData("fewer than 4 radii in the fit window".into()));
    }
    let mut pts = Vec::new();
    for i in start..grid.n_r {
        let avg = js.iter().map(|&j| samples[grid.index(i, j)].abs()).sum::<f64>() / js.len() as f64;
        if !(avg > 0.0) {
            return Err(Error::DegenerateData(format!("band average vanishes at r = {}", grid.r()[i])));
        }
        pts.push((grid.r()[i].ln(), avg.ln()));
    }
    Ok(power_law_fit(&pts).1)
}

/// `(intercept, slope)` of the least-squares line through `pts`.
pub fn power_law_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}
