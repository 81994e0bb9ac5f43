use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{
    fd_derivative, fd_scalar, integrate_volume, Direction, Grid, GridSpinorField, QuadratureRule,
};
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::solver::{assemble, harmonic_residual, BoundaryCondition};
use crate::spinor::{norm_sqr, SpinConnection};

use super::norms::power_law_fit;

/// Relative discrete Dirac residual above which the volume method refuses a field.
pub const HARMONIC_THRESHOLD: f64 = 1e-6;

/// Radial band, optionally cut to polar nodes with `θ ∈ [θ_lo, θ_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub r_lo: f64,
    pub r_hi: f64,
    pub theta: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BMethod {
    Boundary,
    Volume,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BEstimate {
    pub method: BMethod,
    pub radii: Vec<f64>,
    pub raw: Vec<f64>,
    /// Constant term of `c₀ + c₁/r + c₂/r²` fitted over the outer half of the radii.
    pub extrapolated: f64,
    pub fit: [f64; 3],
    pub fit_radii: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxSeries {
    pub radii: Vec<f64>,
    pub flux: Vec<f64>,
    /// `c` and `s` of `flux ≈ c r^s`, fitted over the outer half where the flux is positive.
    pub coefficient: Option<f64>,
    pub exponent: Option<f64>,
    pub tolerance: f64,
    /// Radii whose flux is below `−tolerance`.
    pub negative: Vec<f64>,
}

fn check(spec: &MetricSpec, grid: &Grid, field: &GridSpinorField) -> Result<()> {
    field.check_grid(grid)?;
    field.check_frame(spec)?;
    grid.check_metric(spec)
}

fn radial_metric(spec: &MetricSpec, grid: &Grid) -> Result<Vec<[f64; 3]>> {
    grid.nodes().map(|(_, _, r, t)| spec.component_values(r, t)).collect()
}

/// `2π ∫ (1/√ĝ_rr) ∂_r‖Θ‖² √det ĝ dθ` on the sphere of grid radius `r`: the unit-normal
/// derivative integrated against the coordinate density `√det ĝ dθ dφ`. For `‖Θ‖² = F` on a
/// Melvin-type end this is exactly `(16/3)π b r³`.
pub fn boundary_flux(spec: &MetricSpec, grid: &Grid, field: &GridSpinorField, r: f64) -> Result<f64> {
    check(spec, grid, field)?;
    let i = grid.radius_index(r)?;
    let n = field.norm_sqr_samples();
    let g = radial_metric(spec, grid)?;
    Ok(ring_flux(grid, &n, &g, i, 0..grid.n_theta, false))
}

/// Divergence-theorem flux `2π ∫ ĝ^{rr} ∂_r‖Θ‖² √det ĝ dθ`, the boundary term of `∫ Δ‖Θ‖² dV`.
pub fn divergence_flux(spec: &MetricSpec, grid: &Grid, field: &GridSpinorField, r: f64) -> Result<f64> {
    check(spec, grid, field)?;
    let i = grid.radius_index(r)?;
    let n = field.norm_sqr_samples();
    let g = radial_metric(spec, grid)?;
    Ok(ring_flux(grid, &n, &g, i, 0..grid.n_theta, true))
}

fn ring_flux(grid: &Grid, n: &[f64], g: &[[f64; 3]], i: usize, js: std::ops::Range<usize>, divergence: bool) -> f64 {
    let dt = grid.dtheta() * 2.0 * PI;
    js.map(|j| {
        let k = grid.index(i, j);
        let [grr, gtt, gpp] = g[k];
        let density = (grr * gtt * gpp).sqrt();
        let normal = if divergence { 1.0 / grr } else { 1.0 / grr.sqrt() };
        normal * fd_scalar(n, grid, Direction::R, i, j) * density * dt
    })
    .sum()
}

/// `R‖Θ‖² + 4‖∇Θ‖²` at every node, derivatives from the node stencils.
pub fn weitzenbock_integrand(spec: &MetricSpec, grid: &Grid, field: &GridSpinorField) -> Result<Vec<f64>> {
    check(spec, grid, field)?;
    let nodes: Vec<_> = grid.nodes().collect();
    nodes
        .par_iter()
        .map(|&(i, j, r, t)| {
            let sc = SpinConnection::at(spec, r, t)?;
            let v = field.at(i, j);
            let dr = fd_derivative(field, grid, Direction::R, i, j);
            let dt = fd_derivative(field, grid, Direction::Theta, i, j);
            Ok(sc.geometry.scalar_curvature() * norm_sqr(v) + 4.0 * sc.nabla_norm_sqr(v, &dr, &dt))
        })
        .collect()
}

/// Relative defect `|∫(R‖Θ‖² + 4‖∇Θ‖²) − 2∮∂_n‖Θ‖²| / |∫ …|` of the integrated identity on a
/// band. Band radii must be grid radii. With a polar cut the band's θ faces sit halfway
/// between nodes and their fluxes are included.
pub fn scalar_weitzenbock_check(spec: &MetricSpec, grid: &Grid, field: &GridSpinorField, band: &Band) -> Result<f64> {
    check(spec, grid, field)?;
    let (ilo, ihi) = (grid.radius_index(band.r_lo)?, grid.radius_index(band.r_hi)?);
    if ihi <= ilo {
        return Err(Error::RangeError(format!("empty band [{}, {}]", band.r_lo, band.r_hi)));
    }
    let nt = grid.n_theta;
    let (jlo, jhi) = match band.theta {
        None => (0, nt - 1),
        Some((a, b)) => {
            let js: Vec<usize> = (0..nt).filter(|&j| grid.theta()[j] >= a && grid.theta()[j] <= b).collect();
            match (js.first(), js.last()) {
                (Some(&lo), Some(&hi)) => (lo, hi),
                _ => return Err(Error::RangeError(format!("no polar nodes in [{a}, {b}]"))),
            }
        }
    };
    let integrand = weitzenbock_integrand(spec, grid, field)?;
    let masked: Vec<f64> = grid
        .nodes()
        .zip(&integrand)
        .map(|((_, j, _, _), v)| if j >= jlo && j <= jhi { *v } else { 0.0 })
        .collect();
    let rule = QuadratureRule::new(grid, spec)?;
    let volume = integrate_volume(&rule, &masked, grid.r()[ilo], grid.r()[ihi])?;

    let n = field.norm_sqr_samples();
    let g = radial_metric(spec, grid)?;
    let mut boundary = ring_flux(grid, &n, &g, ihi, jlo..jhi + 1, true) - ring_flux(grid, &n, &g, ilo, jlo..jhi + 1, true);

    // θ faces: ĝ^{θθ} ∂_θ‖Θ‖² √det ĝ, trapezoid in r over the band.
    let r = grid.r();
    let dt = grid.dtheta();
    let face = |j: usize, i: usize| -> Result<f64> {
        let tf = 0.5 * (grid.theta()[j] + grid.theta()[j + 1]);
        let [grr, gtt, gpp] = spec.component_values(r[i], tf)?;
        let dn = (n[grid.index(i, j + 1)] - n[grid.index(i, j)]) / dt;
        Ok(dn * (grr * gtt * gpp).sqrt() / gtt * 2.0 * PI)
    };
    for i in ilo..=ihi {
        let left = if i > ilo { r[i] - r[i - 1] } else { 0.0 };
        let right = if i < ihi { r[i + 1] - r[i] } else { 0.0 };
        let w = 0.5 * (left + right);
        if jhi + 1 < nt {
            boundary += w * face(jhi, i)?;
        }
        if jlo > 0 {
            boundary -= w * face(jlo - 1, i)?;
        }
    }
    if volume == 0.0 {
        return Err(Error::DegenerateData("band integral vanishes".into()));
    }
    Ok((volume - 2.0 * boundary).abs() / volume.abs())
}

/// Least-squares fit of `c₀ + c₁/r + c₂/r²`.
fn richardson(radii: &[f64], values: &[f64]) -> [f64; 3] {
    use nalgebra::{DMatrix, DVector};
    let m = DMatrix::from_fn(radii.len(), 3, |i, k| radii[i].powi(-(k as i32)));
    let y = DVector::from_column_slice(values);
    let sol = m.svd(true, true).solve(&y, 1e-14).expect("svd with both factors");
    [sol[0], sol[1], sol[2]]
}

/// Per-radius estimates of `b` and their extrapolation in `1/r`.
///
/// Boundary: `3 flux(r) / (16π r³)` with [`boundary_flux`]. Volume:
/// `(3/32π) r⁻³ ∫_{r_min}^{r} (R‖Θ‖² + 4‖∇Θ‖²) dV`, refused with `NotHarmonic` unless the
/// field's relative discrete Dirac residual is at most [`HARMONIC_THRESHOLD`].
pub fn estimate_b(spec: &MetricSpec, grid: &Grid, field: &GridSpinorField, method: BMethod) -> Result<BEstimate> {
    check(spec, grid, field)?;
    let radii: Vec<f64> = grid.r()[1..].to_vec();
    let raw: Vec<f64> = match method {
        BMethod::Boundary => {
            let n = field.norm_sqr_samples();
            let g = radial_metric(spec, grid)?;
            (1..grid.n_r)
                .map(|i| 3.0 * ring_flux(grid, &n, &g, i, 0..grid.n_theta, false) / (16.0 * PI * grid.r()[i].powi(3)))
                .collect()
        }
        BMethod::Volume => {
            let op = assemble(spec, grid, BoundaryCondition::Dirichlet)?;
            let residual = harmonic_residual(&op, field)?;
            if residual > HARMONIC_THRESHOLD {
                return Err(Error::NotHarmonic {
                    residual,
                    threshold: HARMONIC_THRESHOLD,
                });
            }
            let rule = QuadratureRule::new(grid, spec)?;
            let integrand = weitzenbock_integrand(spec, grid, field)?;
            radii
                .iter()
                .map(|&r| Ok(3.0 / (32.0 * PI) * integrate_volume(&rule, &integrand, grid.r_min, r)? / r.powi(3)))
                .collect::<Result<_>>()?
        }
    };
    let start = radii.len() / 2;
    if radii.len() - start < 3 {
        return Err(Error::RangeError("need at least 3 radii in the outer half".into()));
    }
    let fit = richardson(&radii[start..], &raw[start..]);
    Ok(BEstimate {
        method,
        radii,
        raw,
        extrapolated: fit[0],
        fit,
        fit_radii: grid.n_r - 1 - start,
    })
}

/// Flux at every grid radius, flagging values below `−tolerance`.
pub fn flux_nonnegativity(spec: &MetricSpec, grid: &Grid, field: &GridSpinorField, tolerance: f64) -> Result<FluxSeries> {
    check(spec, grid, field)?;
    let n = field.norm_sqr_samples();
    let g = radial_metric(spec, grid)?;
    let radii = grid.r().to_vec();
    let flux: Vec<f64> = (0..grid.n_r)
        .into_par_iter()
        .map(|i| ring_flux(grid, &n, &g, i, 0..grid.n_theta, false))
        .collect();
    let negative = radii
        .iter()
        .zip(&flux)
        .filter(|(_, f)| **f < -tolerance)
        .map(|(r, _)| *r)
        .collect();
    let pts: Vec<(f64, f64)> = radii[grid.n_r / 2..]
        .iter()
        .zip(&flux[grid.n_r / 2..])
        .filter(|(_, f)| **f > 0.0)
        .map(|(r, f)| (r.ln(), f.ln()))
        .collect();
    let (coefficient, exponent) = if pts.len() >= 3 {
        let (c, s) = power_law_fit(&pts);
        (Some(c.exp()), Some(s))
    } else {
        (None, None)
    };
    Ok(FluxSeries {
        radii,
        flux,
        coefficient,
        exponent,
        tolerance,
        negative,
    })
}

fn write_pairs<W: Write>(out: W, header: [&str; 2], xs: &[f64], ys: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for (x, y) in xs.iter().zip(ys) {
        w.write_record([x.to_string(), y.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

impl FluxSeries {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_pairs(out, ["r", "flux"], &self.radii, &self.flux)
    }
}

impl BEstimate {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_pairs(out, ["r", "b"], &self.radii, &self.raw)
    }
}
