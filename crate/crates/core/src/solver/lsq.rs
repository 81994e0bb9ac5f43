use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::discretization::{Grid, GridSpinorField, QuadratureRule};
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::spinor::{norm_sqr, theta0_construct, AnalyticSpinorField, Spinor};

use super::operator::{assemble, spmv, BoundaryCondition, DiscreteOperator};

/// Stopping rule and iteration cap for the least-squares solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub boundary: BoundaryCondition,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iter: 20_000,
            boundary: BoundaryCondition::Dirichlet,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidParameter(format!("tol = {}, need 0 < tol < 1", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖Ax − b‖ / ‖b‖`.
    pub relative_residual: f64,
    /// `‖Aᵀ(Ax − b)‖ / ‖Aᵀb‖`.
    pub normal_residual: f64,
    pub l2_error: Option<f64>,
    pub wall_time: f64,
    pub rows: usize,
    pub unknowns: usize,
    pub boundary: BoundaryCondition,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Column norms of `A`, read off the rows of `Aᵀ`.
fn column_scales(op: &DiscreteOperator) -> Vec<f64> {
    op.transpose
        .outer_iterator()
        .map(|row| {
            let s: f64 = row.data().iter().map(|v| v * v).sum();
            if s > 0.0 { 1.0 / s.sqrt() } else { 1.0 }
        })
        .collect()
}

/// CGLS on `min ‖A x − b‖` with diagonal column scaling. Stops when the unscaled normal
/// residual drops below `tol · ‖Aᵀb‖`.
pub fn cgls(op: &DiscreteOperator, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let (m, n) = (op.rows(), op.cols());
    assert_eq!(b.len(), m);
    let scale = column_scales(op);
    let mut atb = vec![0.0; n];
    spmv(&op.transpose, b, &mut atb);
    let target = tol * norm(&atb);
    if target == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }

    // z solves the scaled problem; x = S z.
    let mut z = vec![0.0; n];
    let mut r = b.to_vec();
    let mut s: Vec<f64> = atb.iter().zip(&scale).map(|(a, c)| a * c).collect();
    let mut p = s.clone();
    let mut gamma = dot(&s, &s);
    let mut q = vec![0.0; m];
    let mut sp = vec![0.0; n];
    let mut unscaled = norm(&atb);
    for it in 1..=max_iter {
        for k in 0..n {
            sp[k] = scale[k] * p[k];
        }
        spmv(&op.matrix, &sp, &mut q);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for k in 0..n {
            z[k] += alpha * p[k];
        }
        for k in 0..m {
            r[k] -= alpha * q[k];
        }
        spmv(&op.transpose, &r, &mut s);
        unscaled = norm(&s);
        if unscaled <= target {
            let x = z.iter().zip(&scale).map(|(a, c)| a * c).collect();
            return Ok((x, it, unscaled / norm(&atb)));
        }
        for k in 0..n {
            s[k] *= scale[k];
        }
        let gamma_new = dot(&s, &s);
        let beta = gamma_new / gamma;
        gamma = gamma_new;
        for k in 0..n {
            p[k] = s[k] + beta * p[k];
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: unscaled / norm(&atb),
    })
}

/// Least-squares solve of `D ξ = ρ` with the boundary coefficients of `data` held fixed.
/// `rho` has one spinor per cell.
pub fn solve_least_squares(
    op: &DiscreteOperator,
    rho: &[Spinor],
    data: &GridSpinorField,
    options: &SolverOptions,
) -> Result<(GridSpinorField, SolveReport)> {
    options.validate()?;
    let start = Instant::now();
    let b = op.rhs(rho, data)?;
    let (x, iterations, normal_residual) = cgls(op, &b, options.tol, options.max_iter)?;
    let mut ax = vec![0.0; op.rows()];
    spmv(&op.matrix, &x, &mut ax);
    let rn = norm(&b);
    let res: f64 = ax.iter().zip(&b).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
    let field = op.field_from(&x, data)?;
    Ok((
        field,
        SolveReport {
            iterations,
            relative_residual: if rn > 0.0 { res / rn } else { res },
            normal_residual,
            l2_error: None,
            wall_time: start.elapsed().as_secs_f64(),
            rows: op.rows(),
            unknowns: op.cols(),
            boundary: op.boundary,
        },
    ))
}

/// `(∫ ‖a − b‖² dV)^{1/2}` over the grid.
pub fn l2_distance(grid: &Grid, spec: &MetricSpec, a: &GridSpinorField, b: &GridSpinorField) -> Result<f64> {
    a.check_grid(grid)?;
    b.check_grid(grid)?;
    let w = QuadratureRule::new(grid, spec)?.volume_weights();
    Ok(a.values
        .iter()
        .zip(&b.values)
        .zip(&w)
        .map(|((x, y), w)| w * norm_sqr(&(x - y)))
        .sum::<f64>()
        .sqrt())
}

/// Solves with `exact` as both boundary data and, through its analytic Dirac image,
/// the right-hand side; the report carries the L² error against `exact`.
pub fn solve_manufactured(
    spec: &MetricSpec,
    grid: &Grid,
    exact: &AnalyticSpinorField,
    options: &SolverOptions,
) -> Result<(GridSpinorField, SolveReport)> {
    let op = assemble(spec, grid, options.boundary)?;
    let rho = op.sample_rhs(spec, exact)?;
    let data = GridSpinorField::sample(grid, exact);
    let (field, mut report) = solve_least_squares(&op, &rho, &data, options)?;
    report.l2_error = Some(l2_distance(grid, spec, &field, &data)?);
    Ok((field, report))
}

/// Harmonic spinor `Θ = Θ̃ − Θ₀` and its ingredients on the grid.
#[derive(Clone, Debug)]
pub struct HarmonicCorrection {
    pub theta: GridSpinorField,
    pub theta_tilde: GridSpinorField,
    pub theta0: GridSpinorField,
    pub report: SolveReport,
    /// Discrete Dirac residual of `Θ`, see [`harmonic_residual`].
    pub harmonic_residual: f64,
}

/// Builds `Θ₀ = F^{1/2} ξ₀`, solves `D Θ̃ = D Θ₀` with `Θ̃ = 0` on the prescribed boundary
/// coefficients, and returns `Θ = Θ̃ − Θ₀`. `D Θ₀` is the discrete image of the node samples,
/// so the Dirac residual of `Θ` is exactly the least-squares residual.
pub fn solve_harmonic_correction(
    spec: &MetricSpec,
    grid: &Grid,
    xi0: Spinor,
    options: &SolverOptions,
) -> Result<HarmonicCorrection> {
    use crate::geometry::MetricFamily::*;
    match spec.family() {
        Some(Flat | Melvin | AsymptoticallyMelvin | SchwarzschildMelvin) => {}
        other => {
            return Err(Error::InvalidParameter(format!(
                "harmonic correction needs a Melvin-type end, got {other:?}"
            )))
        }
    }
    let theta0 = GridSpinorField::sample(grid, &theta0_construct(spec, xi0)?);
    let op = assemble(spec, grid, options.boundary)?;
    let rho = op.apply_field(&theta0)?;
    let zero = GridSpinorField::zeros(grid, spec.tag().clone());
    let (theta_tilde, report) = solve_least_squares(&op, &rho, &zero, options)?;
    let theta = theta_tilde.sub(&theta0);
    let harmonic_residual = harmonic_residual(&op, &theta)?;
    Ok(HarmonicCorrection {
        theta,
        theta_tilde,
        theta0,
        report,
        harmonic_residual,
    })
}

/// `‖D_h Θ‖ / (‖derivative part‖ + ‖connection part‖)` over all cells: how far the discrete
/// Dirac image is below the size of its own terms.
pub fn harmonic_residual(op: &DiscreteOperator, field: &GridSpinorField) -> Result<f64> {
    let (grad, conn) = op.apply_parts(field)?;
    let sq = |v: &[Spinor]| v.iter().map(norm_sqr).sum::<f64>().sqrt();
    let full: Vec<Spinor> = grad.iter().zip(&conn).map(|(a, b)| a + b).collect();
    let scale = sq(&grad) + sq(&conn);
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(sq(&full) / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Spacing};
    use crate::jet::Jet;
    use crate::spinor::real_spinor;

    fn decaying(spec: &MetricSpec) -> AnalyticSpinorField {
        AnalyticSpinorField::new(spec, "exp(-r)", |r, _| {
            [(-r).exp(), Jet::constant(0.0), Jet::constant(0.0), Jet::constant(0.0)]
        })
    }

    #[test]
    fn homogeneous_problem_has_zero_solution() {
        let spec = MetricSpec::flat();
        let grid = build_grid(1.0, 4.0, 9, 8, Spacing::Uniform).unwrap();
        let op = assemble(&spec, &grid, BoundaryCondition::Dirichlet).unwrap();
        let zero = GridSpinorField::zeros(&grid, spec.tag().clone());
        let rho = vec![crate::spinor::zero_spinor(); op.cells.len()];
        let (f, rep) = solve_least_squares(&op, &rho, &zero, &SolverOptions::default()).unwrap();
        assert_eq!(f.max_norm(), 0.0);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn normal_equation_residual_meets_tolerance() {
        let spec = MetricSpec::melvin(2.0).unwrap();
        let grid = build_grid(1.0, 4.0, 17, 16, Spacing::Uniform).unwrap();
        let opts = SolverOptions { tol: 1e-9, ..Default::default() };
        let op = assemble(&spec, &grid, opts.boundary).unwrap();
        let exact = decaying(&spec);
        let rho = op.sample_rhs(&spec, &exact).unwrap();
        let data = GridSpinorField::sample(&grid, &exact);
        let b = op.rhs(&rho, &data).unwrap();
        let (f, rep) = solve_least_squares(&op, &rho, &data, &opts).unwrap();
        let x = op.unknowns_of(&f).unwrap();
        let mut ax = vec![0.0; op.rows()];
        spmv(&op.matrix, &x, &mut ax);
        let r: Vec<f64> = ax.iter().zip(&b).map(|(a, c)| a - c).collect();
        let mut atr = vec![0.0; op.cols()];
        let mut atb = vec![0.0; op.cols()];
        spmv(&op.transpose, &r, &mut atr);
        spmv(&op.transpose, &b, &mut atb);
        assert!(norm(&atr) <= 1e-9 * norm(&atb));
        assert!(rep.normal_residual <= 1e-9);
    }

    #[test]
    fn manufactured_convergence() {
        for spec in [MetricSpec::flat(), MetricSpec::melvin(2.0).unwrap()] {
            let exact = decaying(&spec);
            let mut errs = Vec::new();
            for n in [16, 32, 64] {
                let grid = build_grid(1.0, 4.0, n + 1, n, Spacing::Uniform).unwrap();
                let (_, rep) = solve_manufactured(&spec, &grid, &exact, &SolverOptions::default()).unwrap();
                errs.push(rep.l2_error.unwrap());
            }
            for w in errs.windows(2) {
                assert!((w[0] / w[1]).log2() >= 1.8, "{errs:?}");
            }
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let spec = MetricSpec::flat();
        let grid = build_grid(1.0, 4.0, 17, 16, Spacing::Uniform).unwrap();
        let opts = SolverOptions { tol: 1e-12, max_iter: 3, ..Default::default() };
        let err = solve_manufactured(&spec, &grid, &decaying(&spec), &opts).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
    }

    #[test]
    fn reports_are_reproducible() {
        let spec = MetricSpec::melvin(2.0).unwrap();
        let grid = build_grid(1.0, 4.0, 17, 16, Spacing::Uniform).unwrap();
        let run = || {
            let h = solve_harmonic_correction(&spec, &grid, real_spinor(1.0, 0.0), &SolverOptions::default()).unwrap();
            (h.report.iterations, h.report.relative_residual.to_bits(), h.theta.values.clone())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn flat_correction_is_harmonic() {
        let spec = MetricSpec::flat();
        let grid = build_grid(1.0, 4.0, 17, 16, Spacing::Uniform).unwrap();
        for boundary in [BoundaryCondition::Dirichlet, BoundaryCondition::Chiral] {
            let opts = SolverOptions { tol: 1e-10, boundary, ..Default::default() };
            let h = solve_harmonic_correction(&spec, &grid, real_spinor(0.0, 1.0), &opts).unwrap();
            let op = assemble(&spec, &grid, boundary).unwrap();
            let d = op.apply_field(&h.theta).unwrap();
            let rho = op.apply_field(&h.theta0).unwrap();
            let dn: f64 = d.iter().map(norm_sqr).sum::<f64>().sqrt();
            let rn: f64 = rho.iter().map(norm_sqr).sum::<f64>().sqrt();
            // Least squares leaves whatever part of ρ lies outside the range.
            assert!((dn / rn - h.report.relative_residual).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_non_melvin_ends_and_bad_spinors() {
        let grid = build_grid(3.0, 6.0, 9, 8, Spacing::Uniform).unwrap();
        let eta = crate::geometry::eta_metrics(1.0, 1.0).unwrap().minus;
        assert!(solve_harmonic_correction(&eta, &grid, real_spinor(1.0, 0.0), &SolverOptions::default()).is_err());
        let spec = MetricSpec::flat();
        assert!(matches!(
            solve_harmonic_correction(&spec, &grid, real_spinor(2.0, 0.0), &SolverOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
    }
}
