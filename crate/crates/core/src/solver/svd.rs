use crate::error::{Error, Result};

use super::operator::{spmv, DiscreteOperator};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x ← AᵀA x`.
fn normal_apply(op: &DiscreteOperator, x: &[f64], tmp: &mut [f64], out: &mut [f64]) {
    spmv(&op.matrix, x, tmp);
    spmv(&op.transpose, tmp, out);
}

/// Solves `AᵀA y = x` by conjugate gradients.
fn normal_solve(op: &DiscreteOperator, x: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = x.len();
    let mut y = vec![0.0; n];
    let mut r = x.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let stop = tol * tol * rr;
    let mut tmp = vec![0.0; op.rows()];
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        if rr <= stop {
            return Ok(y);
        }
        normal_apply(op, &p, &mut tmp, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            y[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    if rr <= stop {
        return Ok(y);
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: (rr / dot(x, x)).sqrt(),
    })
}

/// Smallest singular value by inverse iteration on `AᵀA`, each step an inner CG solve.
/// Returns once successive estimates agree to `1e-10` relative.
pub fn smallest_singular_value(op: &DiscreteOperator, iterations: usize) -> Result<f64> {
    let n = op.cols();
    if n == 0 {
        return Err(Error::InvalidParameter("operator has no columns".into()));
    }
    // Fixed, non-symmetric start so results are reproducible.
    let mut x: Vec<f64> = (0..n).map(|k| 1.0 + 0.5 * ((k as f64) * 0.7).sin()).collect();
    let nx = dot(&x, &x).sqrt();
    x.iter_mut().for_each(|v| *v /= nx);
    let inner = 50 * n + 1000;
    let mut tmp = vec![0.0; op.rows()];
    let mut prev = f64::INFINITY;
    for _ in 0..iterations {
        let mut y = normal_solve(op, &x, 1e-12, inner)?;
        let ny = dot(&y, &y).sqrt();
        if ny == 0.0 || !ny.is_finite() {
            return Err(Error::DegenerateData("inverse iteration collapsed".into()));
        }
        y.iter_mut().for_each(|v| *v /= ny);
        x = y;
        spmv(&op.matrix, &x, &mut tmp);
        let sigma = dot(&tmp, &tmp).sqrt();
        if (sigma - prev).abs() <= 1e-10 * sigma {
            return Ok(sigma);
        }
        prev = sigma;
    }
    Err(Error::NonConvergence {
        iterations,
        residual: prev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Spacing};
    use crate::geometry::MetricSpec;
    use crate::solver::{assemble, BoundaryCondition};
    use nalgebra::DMatrix;

    pub(crate) fn dense_sigma_min(op: &DiscreteOperator) -> f64 {
        let mut m = DMatrix::zeros(op.rows(), op.cols());
        for (v, (i, j)) in op.matrix.iter() {
            m[(i, j)] = *v;
        }
        m.singular_values().min()
    }

    fn flat_op(n: usize) -> DiscreteOperator {
        let grid = build_grid(1.0, 4.0, n + 1, n, Spacing::Uniform).unwrap();
        assemble(&MetricSpec::flat(), &grid, BoundaryCondition::Dirichlet).unwrap()
    }

    #[test]
    fn matches_dense_svd() {
        let op = flat_op(8);
        let s = smallest_singular_value(&op, 500).unwrap();
        let d = dense_sigma_min(&op);
        assert!(s > 0.0);
        assert!((s - d).abs() / d < 0.05, "{s} vs {d}");
    }

    #[test]
    fn positive_at_sixteen_and_homogeneous() {
        let op = flat_op(16);
        let s = smallest_singular_value(&op, 500).unwrap();
        assert!(s > 0.0);
        let twice = op.scaled(2.0);
        let s2 = smallest_singular_value(&twice, 500).unwrap();
        assert!((s2 / s - 2.0).abs() < 1e-6);
    }
}
