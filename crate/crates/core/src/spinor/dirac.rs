use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{MetricSpec, PointGeometry, ScalarField, AZIMUTHAL};
use crate::jet::Dual;

use super::algebra::{gammas, norm_sqr, zero_matrix, zero_spinor, SpinMatrix, Spinor, SpinorDual, SpinorJet};
use super::field::AnalyticSpinorField;

/// The spin connection at a point, `A_i = −¼ Σ C_mij γ_m γ_j`, with gradients.
#[derive(Clone, Debug)]
pub struct SpinConnection {
    pub geometry: PointGeometry,
    inv_h: [Dual; 3],
    a: [SpinMatrix; 3],
    da: [[SpinMatrix; 2]; 3],
}

impl SpinConnection {
    pub fn new(geometry: PointGeometry) -> Self {
        let g = gammas();
        let mut a = [zero_matrix(); 3];
        let mut da = [[zero_matrix(); 2]; 3];
        for i in 0..3 {
            for m in 0..3 {
                for j in 0..3 {
                    let c = geometry.conn[m][i][j];
                    if c.v == 0.0 && c.d == [0.0, 0.0] {
                        continue;
                    }
                    let gg = g[m] * g[j];
                    a[i] += gg * num_complex::Complex64::from(-0.25 * c.v);
                    for s in 0..2 {
                        da[i][s] += gg * num_complex::Complex64::from(-0.25 * c.d[s]);
                    }
                }
            }
        }
        let inv_h = geometry.h.map(|h| h.to_dual().recip());
        SpinConnection {
            geometry,
            inv_h,
            a,
            da,
        }
    }

    pub fn at(spec: &MetricSpec, r: f64, theta: f64) -> Result<Self> {
        Ok(SpinConnection::new(PointGeometry::at(spec, r, theta)?))
    }

    /// `1/h_i`.
    pub fn inv_h(&self, i: usize) -> f64 {
        self.inv_h[i].v
    }

    /// Connection matrix `A_i` of `∇_{e_i} = (1/h_i)∂_i + A_i`.
    pub fn connection_matrix(&self, i: usize) -> &SpinMatrix {
        &self.a[i]
    }

    /// Zeroth-order part of the Dirac operator, `Σ_k γ_k A_k`.
    pub fn dirac_zeroth_order(&self) -> SpinMatrix {
        let g = gammas();
        g[0] * self.a[0] + g[1] * self.a[1] + g[2] * self.a[2]
    }

    /// `∇_{e_i} ξ` from the value and coordinate partials of `ξ`.
    pub fn nabla_from_partials(&self, i: usize, v: &Spinor, dr: &Spinor, dtheta: &Spinor) -> Spinor {
        let mut out = self.a[i] * v;
        match i {
            0 => out += dr.scale(self.inv_h[0].v),
            1 => out += dtheta.scale(self.inv_h[1].v),
            _ => {}
        }
        out
    }

    /// `∇_{e_i} ξ` with its gradient.
    pub fn nabla_jet(&self, i: usize, xi: &SpinorJet) -> SpinorDual {
        let mut out = xi.to_dual().left_mul(&self.a[i]);
        for s in 0..2 {
            out.d[s] += self.da[i][s] * xi.v;
        }
        if i != AZIMUTHAL {
            out = out + xi.partial(i).scale(self.inv_h[i]);
        }
        out
    }

    /// `∇_{e_i} ψ` at the point.
    pub fn nabla_dual(&self, i: usize, psi: &SpinorDual) -> Spinor {
        self.nabla_from_partials(i, &psi.v, &psi.d[0], &psi.d[1])
    }

    pub fn dirac_jet(&self, xi: &SpinorJet) -> SpinorDual {
        let g = gammas();
        let mut out = SpinorDual::zero();
        for k in 0..3 {
            out = out + self.nabla_jet(k, xi).left_mul(&g[k]);
        }
        out
    }

    pub fn dirac_dual(&self, psi: &SpinorDual) -> Spinor {
        let g = gammas();
        (0..3).fold(zero_spinor(), |acc, k| acc + g[k] * self.nabla_dual(k, psi))
    }

    /// `Σ_k γ_k ∇_k ξ` from value and partials.
    pub fn dirac_from_partials(&self, v: &Spinor, dr: &Spinor, dtheta: &Spinor) -> Spinor {
        let g = gammas();
        (0..3).fold(zero_spinor(), |acc, k| {
            acc + g[k] * self.nabla_from_partials(k, v, dr, dtheta)
        })
    }

    /// `Σ_i ‖∇_{e_i} ξ‖²` from value and partials.
    pub fn nabla_norm_sqr(&self, v: &Spinor, dr: &Spinor, dtheta: &Spinor) -> f64 {
        (0..3)
            .map(|i| norm_sqr(&self.nabla_from_partials(i, v, dr, dtheta)))
            .sum()
    }
}

fn check_frame(spec: &MetricSpec, field: &AnalyticSpinorField) -> Result<()> {
    if spec.tag() != field.tag() {
        return Err(Error::FrameMismatch {
            field: field.tag().to_string(),
            metric: spec.tag().to_string(),
        });
    }
    Ok(())
}

/// `∇_{e_i} ξ` for `i ∈ {1, 2, 3}`.
pub fn spin_covariant_derivative(
    spec: &MetricSpec,
    field: &AnalyticSpinorField,
    i: usize,
    r: f64,
    theta: f64,
) -> Result<Spinor> {
    if !(1..=3).contains(&i) {
        return Err(Error::InvalidParameter(format!("frame index {i} must be 1, 2 or 3")));
    }
    check_frame(spec, field)?;
    let sc = SpinConnection::at(spec, r, theta)?;
    Ok(sc.nabla_jet(i - 1, &field.jet(r, theta)).v)
}

/// `D ξ = Σ_k γ_k ∇_{e_k} ξ`.
pub fn dirac_apply(spec: &MetricSpec, field: &AnalyticSpinorField, r: f64, theta: f64) -> Result<Spinor> {
    check_frame(spec, field)?;
    let sc = SpinConnection::at(spec, r, theta)?;
    Ok(sc.dirac_jet(&field.jet(r, theta)).v)
}

/// `D_ĝ(ζ⁻¹ξ) − ζ⁻² D_g ξ` for `ĝ = ζ² g`.
pub fn conformal_residual(
    spec_g: &MetricSpec,
    zeta: &ScalarField,
    field: &AnalyticSpinorField,
    r: f64,
    theta: f64,
) -> Result<Spinor> {
    check_frame(spec_g, field)?;
    let z = zeta.eval(r, theta);
    if !(z > 0.0) {
        return Err(Error::NonpositiveConformalFactor(z));
    }
    let g_hat = MetricSpec::conformal(spec_g, zeta.clone());
    let lifted = field.scaled(&zeta.powf(-1.0)).in_frame_of(&g_hat);
    let lhs = dirac_apply(&g_hat, &lifted, r, theta)?;
    let rhs = dirac_apply(spec_g, field, r, theta)?;
    Ok(lhs - rhs.unscale(z * z))
}

/// `D_ĝ(q^α ξ) − q^α D_g ξ` with `ĝ = ḡ + f dφ²` and `g = ḡ + q f dφ²`.
///
/// `base` supplies `ḡ` through its `rr` and `θθ` components; `field` must be tagged
/// with `g`, see [`fiber_pair`].
pub fn fiber_rescale_residual(
    base: &MetricSpec,
    f: &ScalarField,
    q: &ScalarField,
    alpha: f64,
    field: &AnalyticSpinorField,
    r: f64,
    theta: f64,
) -> Result<Spinor> {
    let (g_hat, g) = fiber_pair(base, f, q);
    check_frame(&g, field)?;
    for (name, s) in [("f", f), ("q", q)] {
        let v = s.eval(r, theta);
        if !(v > 0.0) {
            return Err(Error::NonpositiveWarp(format!("{name} = {v} at ({r}, {theta})")));
        }
    }
    let qa = q.eval(r, theta).powf(alpha);
    let lifted = field.scaled(&q.powf(alpha)).in_frame_of(&g_hat);
    let lhs = dirac_apply(&g_hat, &lifted, r, theta)?;
    let rhs = dirac_apply(&g, field, r, theta)?;
    Ok(lhs - rhs.scale(qa))
}

/// `(ĝ, g) = (ḡ + f dφ², ḡ + q f dφ²)`.
pub fn fiber_pair(base: &MetricSpec, f: &ScalarField, q: &ScalarField) -> (MetricSpec, MetricSpec) {
    (
        MetricSpec::warped(base, f.clone()),
        MetricSpec::warped(base, q.product(f)),
    )
}

/// Outcome of sweeping the fiber-rescale exponent.
#[derive(Clone, Debug, Serialize)]
pub struct FiberSweep {
    pub alphas: Vec<f64>,
    pub mean_residual: Vec<f64>,
    pub max_residual: Vec<f64>,
    pub argmin: f64,
    /// The exponent whose residual is below `tol` at every sample, if any.
    pub alpha_star: Option<f64>,
    pub tol: f64,
    pub reference_alpha: f64,
    pub mean_residual_at_reference: f64,
}

/// Evaluates [`fiber_rescale_residual`] for every `α` over every point.
pub fn fiber_rescale_sweep(
    base: &MetricSpec,
    f: &ScalarField,
    q: &ScalarField,
    field: &AnalyticSpinorField,
    alphas: &[f64],
    points: &[(f64, f64)],
    tol: f64,
) -> Result<FiberSweep> {
    if alphas.is_empty() || points.is_empty() {
        return Err(Error::InvalidParameter("sweep needs exponents and points".into()));
    }
    let stats = |alpha: f64| -> Result<(f64, f64)> {
        let mut sum = 0.0;
        let mut max = 0.0f64;
        for &(r, t) in points {
            let n = fiber_rescale_residual(base, f, q, alpha, field, r, t)?.norm();
            sum += n;
            max = max.max(n);
        }
        Ok((sum / points.len() as f64, max))
    };
    let mut mean_residual = Vec::with_capacity(alphas.len());
    let mut max_residual = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let (m, x) = stats(a)?;
        mean_residual.push(m);
        max_residual.push(x);
    }
    let best = (0..alphas.len())
        .min_by(|&i, &j| mean_residual[i].total_cmp(&mean_residual[j]))
        .unwrap();
    let reference_alpha = -0.375;
    Ok(FiberSweep {
        argmin: alphas[best],
        alpha_star: (max_residual[best] <= tol).then_some(alphas[best]),
        mean_residual_at_reference: stats(reference_alpha)?.0,
        alphas: alphas.to_vec(),
        mean_residual,
        max_residual,
        tol,
        reference_alpha,
    })
}

/// `Θ₀ = F^{1/2} ξ₀` in `spec`'s frame.
pub fn theta0_construct(spec: &MetricSpec, xi0: Spinor) -> Result<AnalyticSpinorField> {
    let n = norm_sqr(&xi0).sqrt();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!("‖ξ₀‖ = {n}, expected 1")));
    }
    let sqrt_f = ScalarField::melvin_factor(spec.b()).powf(0.5);
    Ok(AnalyticSpinorField::constant(spec, xi0).scaled(&sqrt_f))
}

/// `D_ĝ ξ − F⁻¹ Σ_k γ_k ∇^g_{e_k} ξ`, the same components read in both frames.
///
/// On `∂_φ`-invariant fields the `e₃` slot of `∇^g` carries only its connection part.
pub fn dirac_decomposition_residual(
    spec_hat: &MetricSpec,
    spec_g: &MetricSpec,
    field: &AnalyticSpinorField,
    r: f64,
    theta: f64,
) -> Result<Spinor> {
    check_frame(spec_hat, field)?;
    let d_hat = dirac_apply(spec_hat, field, r, theta)?;
    let flat = field.in_frame_of(spec_g);
    let sc = SpinConnection::at(spec_g, r, theta)?;
    let xi = flat.jet(r, theta);
    let g = gammas();
    let f = 1.0 + spec_hat.b() * (r * theta.sin()).powi(2);
    let mut approx = zero_spinor();
    for k in 0..3 {
        approx += g[k] * sc.nabla_jet(k, &xi).v;
    }
    Ok(d_hat - approx.unscale(f))
}

/// `D²ξ − ∇*∇ξ − (R/4)ξ` with all derivatives analytic.
pub fn lichnerowicz_residual(
    spec: &MetricSpec,
    field: &AnalyticSpinorField,
    r: f64,
    theta: f64,
) -> Result<Spinor> {
    check_frame(spec, field)?;
    let sc = SpinConnection::at(spec, r, theta)?;
    let xi = field.jet(r, theta);
    let d2 = sc.dirac_dual(&sc.dirac_jet(&xi));

    let first: [SpinorDual; 3] = [0, 1, 2].map(|i| sc.nabla_jet(i, &xi));
    let mut rough = zero_spinor();
    for i in 0..3 {
        rough -= sc.nabla_dual(i, &first[i]);
        for (m, fm) in first.iter().enumerate() {
            rough += fm.v.scale(sc.geometry.c(m, i, i));
        }
    }
    let scalar = sc.geometry.scalar_curvature();
    Ok(d2 - rough - xi.v.scale(0.25 * scalar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{melvin_factor, Perturbation};
    use crate::jet::Jet;
    use crate::spinor::algebra::{real_spinor, spinor};
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn poly_field(spec: &MetricSpec) -> AnalyticSpinorField {
        AnalyticSpinorField::new(spec, "poly", |r, t| {
            [
                1.0 + r * t.cos() * 0.5,
                r * r * 0.1 - t * 0.3,
                (r * t).sin() * 0.7,
                r * t * t * 0.2 + 0.4,
            ]
        })
    }

    fn points(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|k| {
                let u = (k as f64 * 0.618_033_988_75 + 0.1).fract();
                let v = (k as f64 * 0.754_877_666_2 + 0.2).fract();
                (0.5 + 7.5 * u, 0.1 + (PI - 0.2) * v)
            })
            .collect()
    }

    #[test]
    fn flat_constant_spinor_dirac() {
        let g = MetricSpec::flat();
        let e = AnalyticSpinorField::constant(&g, real_spinor(1.0, 0.0));
        let d = dirac_apply(&g, &e, 2.0, FRAC_PI_2).unwrap();
        assert!((d - spinor(c(0.0, 0.0), c(0.0, 0.5))).norm() < 1e-15);
    }

    #[test]
    fn flat_constant_spinor_azimuthal_derivative() {
        let g = MetricSpec::flat();
        let xi = real_spinor(1.0, 0.0);
        let e = AnalyticSpinorField::constant(&g, xi);
        let r = 3.0;
        let n3 = spin_covariant_derivative(&g, &e, 3, r, FRAC_PI_2).unwrap();
        let gm = gammas();
        let want = (gm[0] * gm[2] * xi).unscale(2.0 * r);
        assert!((n3 - want).norm() < 1e-15);
    }

    #[test]
    fn frame_mismatch_is_reported() {
        let g = MetricSpec::flat();
        let h = MetricSpec::melvin(2.0).unwrap();
        let e = AnalyticSpinorField::constant(&g, real_spinor(1.0, 0.0));
        assert!(matches!(dirac_apply(&h, &e, 1.0, 1.0), Err(Error::FrameMismatch { .. })));
    }

    #[test]
    fn dirac_is_linear() {
        let g = MetricSpec::melvin(2.0).unwrap();
        let a = poly_field(&g);
        let b = AnalyticSpinorField::new(&g, "b", |r, t| [t.cos(), r, r * t, Jet::constant(-1.0)]);
        let (ca, cb) = (c(0.3, -1.1), c(-2.0, 0.4));
        let sum = a.combine(ca, &b, cb);
        for (r, t) in points(10) {
            let lhs = dirac_apply(&g, &sum, r, t).unwrap();
            let rhs = dirac_apply(&g, &a, r, t).unwrap() * ca + dirac_apply(&g, &b, r, t).unwrap() * cb;
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
        }
    }

    #[test]
    fn norm_compatibility() {
        let g = MetricSpec::asymptotically_melvin(0.6, Perturbation::new(0.2, 0.3, 0.0)).unwrap();
        let xi = poly_field(&g);
        for (r, t) in points(20) {
            let sc = SpinConnection::at(&g, r, t).unwrap();
            let j = xi.jet(r, t);
            for i in 0..2 {
                let dn = 2.0 * crate::spinor::re_inner(&j.v, &j.d[i]) * sc.inv_h(i);
                let nab = sc.nabla_jet(i, &j).v;
                let want = 2.0 * crate::spinor::re_inner(&j.v, &nab);
                assert!((dn - want).abs() < 1e-10 * (1.0 + dn.abs()));
            }
        }
    }

    #[test]
    fn leibniz_rule() {
        let g = MetricSpec::melvin(1.0).unwrap();
        let xi = poly_field(&g);
        let u = ScalarField::new("u", |r, t| (r * t.cos()).exp());
        let uxi = xi.scaled(&u);
        for (r, t) in points(10) {
            let uj = u.jet(r, t);
            let sc = SpinConnection::at(&g, r, t).unwrap();
            for i in 1..=3 {
                let lhs = spin_covariant_derivative(&g, &uxi, i, r, t).unwrap();
                let du = if i == 3 { 0.0 } else { uj.d[i - 1] * sc.inv_h(i - 1) };
                let rhs = xi.value(r, t).scale(du) + spin_covariant_derivative(&g, &xi, i, r, t).unwrap().scale(uj.v);
                assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
            }
        }
    }

    #[test]
    fn conformal_lemma_holds() {
        let g = MetricSpec::flat();
        let xi = poly_field(&g);
        for zeta in [ScalarField::constant(1.0), ScalarField::constant(2.5), ScalarField::melvin_factor(1.0)] {
            for (r, t) in points(20) {
                let res = conformal_residual(&g, &zeta, &xi, r, t).unwrap();
                assert!(res.norm() < 1e-10, "{}", res.norm());
            }
        }
        let r = conformal_residual(&g, &ScalarField::melvin_factor(1.0), &xi, 2.0, FRAC_PI_3).unwrap();
        assert!(r.norm() <= 1e-10);
        assert!(matches!(
            conformal_residual(&g, &ScalarField::constant(-1.0), &xi, 2.0, 1.0),
            Err(Error::NonpositiveConformalFactor(_))
        ));
    }

    #[test]
    fn fiber_rescale_null_exponent_is_one_quarter() {
        let base = MetricSpec::flat();
        let f = ScalarField::new("r²sin²θ", |r, t| (r * t.sin()).powi(2));
        let q = ScalarField::melvin_factor(1.0).powf(-4.0);
        let (_, g) = fiber_pair(&base, &f, &q);
        let xi = AnalyticSpinorField::constant(&g, real_spinor(1.0, 0.0));
        let alphas: Vec<f64> = (-16..=16).map(|k| k as f64 / 16.0).collect();
        let sweep = fiber_rescale_sweep(&base, &f, &q, &xi, &alphas, &points(50), 1e-8).unwrap();
        assert_eq!(sweep.alpha_star, Some(0.25));
        assert!(sweep.mean_residual_at_reference > 1e-3);
    }

    #[test]
    fn fiber_rescale_constant_q() {
        let base = MetricSpec::flat();
        let f = ScalarField::new("r²sin²θ", |r, t| (r * t.sin()).powi(2));
        let q = ScalarField::constant(1.0);
        let (_, g) = fiber_pair(&base, &f, &q);
        let xi = poly_field(&g);
        for alpha in [-1.0, 0.0, 0.3] {
            let res = fiber_rescale_residual(&base, &f, &q, alpha, &xi, 2.0, 1.0).unwrap();
            assert!(res.norm() < 1e-14);
        }
    }

    #[test]
    fn theta0_norm_is_melvin_factor() {
        let g = MetricSpec::asymptotically_melvin(1.0, Perturbation::ZERO).unwrap();
        let th = theta0_construct(&g, real_spinor(1.0, 0.0)).unwrap();
        let v = th.value(1.0, FRAC_PI_2);
        assert!((v[0].re - 2f64.sqrt()).abs() < 1e-15 && v[1].norm() == 0.0);
        let xi0 = spinor(c(0.6, 0.0), c(0.0, 0.8));
        let th = theta0_construct(&g, xi0).unwrap();
        for (r, t) in points(100) {
            let f = melvin_factor(1.0, Jet::constant(r), Jet::constant(t)).v;
            assert!((norm_sqr(&th.value(r, t)) - f).abs() < 1e-12 * f);
        }
        assert!(theta0_construct(&g, real_spinor(1.0, 1.0)).is_err());
    }

    #[test]
    fn decomposition_vanishes_without_field() {
        let g_hat = MetricSpec::asymptotically_melvin(0.0, Perturbation::ZERO).unwrap();
        let g = g_hat.companion().unwrap();
        let xi = poly_field(&g_hat);
        for (r, t) in points(10) {
            let res = dirac_decomposition_residual(&g_hat, &g, &xi, r, t).unwrap();
            assert!(res.norm() < 1e-13);
        }
    }

    #[test]
    fn decomposition_remainder_is_exact_rescaling() {
        // D_ĝ = F⁻¹ D_g on ∂_φ-invariant fields, so the remainder is rounding only.
        for p in [Perturbation::ZERO, Perturbation::new(0.3, -0.2, 0.0)] {
            let g_hat = MetricSpec::asymptotically_melvin(1.0, p).unwrap();
            let g = g_hat.companion().unwrap();
            let xi = poly_field(&g_hat);
            for (r, t) in points(40) {
                let d = dirac_apply(&g_hat, &xi, r, t).unwrap().norm();
                let res = dirac_decomposition_residual(&g_hat, &g, &xi, r, t).unwrap().norm();
                assert!(res <= 1e-13 * (1.0 + d), "{res} vs {d}");
            }
        }
    }

    #[test]
    fn lichnerowicz_identity_flat_and_melvin() {
        for g in [MetricSpec::flat(), MetricSpec::melvin(2.0).unwrap()] {
            let xi = poly_field(&g);
            for (r, t) in points(50) {
                let res = lichnerowicz_residual(&g, &xi, r, t).unwrap();
                let n = xi.value(r, t).norm();
                assert!(res.norm() / n <= 1e-8, "{} at ({r},{t})", res.norm() / n);
            }
        }
    }
}
