use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::{MetricFamily, MetricSpec, PointGeometry, ScalarField, AZIMUTHAL};
use crate::jet::Jet;
use crate::spinor::{
    conformal_residual, dirac_decomposition_residual, fiber_pair, fiber_rescale_sweep, gamma,
    lichnerowicz_residual, real_spinor, AnalyticSpinorField, FiberSweep,
};

/// One named comparison against a tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub metric: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber_sweep: Option<FiberSweep>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

/// `n` low-discrepancy points in `[r_lo, r_hi] × [0.1, π − 0.1]`.
pub fn sample_points(n: usize, r_lo: f64, r_hi: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|k| {
            let u = (k as f64 * 0.618_033_988_749_895 + 0.1).fract();
            let v = (k as f64 * 0.754_877_666_246_693 + 0.2).fract();
            (r_lo + (r_hi - r_lo) * u, 0.1 + (PI - 0.2) * v)
        })
        .collect()
}

/// Smooth spinor with polynomial and trigonometric components.
pub fn test_spinor(spec: &MetricSpec) -> AnalyticSpinorField {
    AnalyticSpinorField::new(spec, "test spinor", |r, t| {
        [
            1.0 + r * t.cos() * 0.5,
            r * r * 0.1 - t * 0.3,
            (r * t).sin() * 0.7,
            r * t * t * 0.2 + 0.4,
        ]
    })
}

/// Largest entry of `γ_iγ_j + γ_jγ_i + 2δ_ij`.
pub fn clifford_defect() -> f64 {
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let mut m = gamma(i) * gamma(j) + gamma(j) * gamma(i);
            if i == j {
                m += nalgebra::Matrix2::identity() * Complex64::from(2.0);
            }
            worst = worst.max(m.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

fn max_over<F: Fn(f64, f64) -> Result<f64>>(points: &[(f64, f64)], f: F) -> Result<f64> {
    points.iter().try_fold(0.0f64, |acc, &(r, t)| Ok(acc.max(f(r, t)?)))
}

/// `|Γ^φ_{φA} − ½ ∂_A ln g_φφ|` with the fiber written as `X F²` for the companion and
/// `X` for the Melvin-type metric, `X` and `F` evaluated independently of the metric.
fn fiber_christoffel_defect(spec: &MetricSpec, companion: bool, r: f64, t: f64) -> Result<f64> {
    let pg = PointGeometry::at(spec, r, t)?;
    let (rj, tj) = Jet::coordinates(r, t);
    let x = spec.components(r, t)?[AZIMUTHAL];
    let fiber = if companion {
        let f = crate::geometry::melvin_factor(spec.b(), rj, tj);
        x * f * f
    } else {
        x
    };
    let target = if companion {
        spec.companion()?
    } else {
        spec.clone()
    };
    let pg_target = if companion { PointGeometry::at(&target, r, t)? } else { pg };
    let mut worst = 0.0f64;
    for a in 0..2 {
        let want = 0.5 * fiber.d[a] / fiber.v;
        worst = worst.max((pg_target.gamma[AZIMUTHAL][AZIMUTHAL][a].v - want).abs());
    }
    Ok(worst)
}

fn is_melvin_type(spec: &MetricSpec) -> bool {
    matches!(
        spec.family(),
        Some(MetricFamily::Melvin | MetricFamily::AsymptoticallyMelvin | MetricFamily::SchwarzschildMelvin)
    )
}

/// Clifford relations, connection antisymmetry, flat closed forms, the fiber Christoffel
/// symbols, the measure relation and the sign of the scalar curvature, as applicable.
pub fn verify_geometry(spec: &MetricSpec, r_lo: f64, r_hi: f64) -> Result<Report> {
    let r_lo = r_lo.max(spec.r_floor() * 1.05 + 1e-3);
    let pts = sample_points(100, r_lo, r_hi);
    let mut checks = vec![Check::at_most("clifford relations", clifford_defect(), 1e-15)];
    checks.push(Check::at_most(
        "connection antisymmetry",
        max_over(&pts, |r, t| {
            let pg = PointGeometry::at(spec, r, t)?;
            let mut w = 0.0f64;
            for m in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        w = w.max((pg.c(m, i, j) + pg.c(j, i, m)).abs());
                    }
                }
            }
            Ok(w)
        })?,
        1e-12,
    ));
    if spec.family() == Some(MetricFamily::Flat) {
        checks.push(Check::at_most(
            "flat connection closed forms",
            max_over(&pts, |r, t| {
                let pg = PointGeometry::at(spec, r, t)?;
                Ok([
                    pg.c(1, 1, 0) - 1.0 / r,
                    pg.c(2, 2, 0) - 1.0 / r,
                    pg.c(2, 2, 1) - 1.0 / (t.tan() * r),
                    pg.c(1, 0, 0),
                ]
                .iter()
                .fold(0.0f64, |a, b| a.max(b.abs())))
            })?,
            1e-12,
        ));
        checks.push(Check::at_most(
            "flat scalar curvature",
            max_over(&pts, |r, t| Ok(PointGeometry::at(spec, r, t)?.scalar_curvature().abs()))?,
            1e-10,
        ));
    }
    if is_melvin_type(spec) {
        checks.push(Check::at_most(
            "fiber christoffel, melvin-type",
            max_over(&pts, |r, t| fiber_christoffel_defect(spec, false, r, t))?,
            1e-10,
        ));
        checks.push(Check::at_most(
            "fiber christoffel, companion",
            max_over(&pts, |r, t| fiber_christoffel_defect(spec, true, r, t))?,
            1e-10,
        ));
        let companion = spec.companion()?;
        checks.push(Check::at_most(
            "measure relation",
            max_over(&pts, |r, t| {
                let f = 1.0 + spec.b() * (r * t.sin()).powi(2);
                let hat = spec.volume_density(r, t)?;
                Ok((hat - f * companion.volume_density(r, t)?).abs() / hat)
            })?,
            1e-12,
        ));
        let grid_pts: Vec<(f64, f64)> = (0..20)
            .flat_map(|i| {
                (0..20).map(move |j| {
                    (
                        r_lo + (r_hi - r_lo) * i as f64 / 19.0,
                        (j as f64 + 0.5) * PI / 20.0,
                    )
                })
            })
            .collect();
        checks.push(Check::at_most(
            "scalar curvature lower bound",
            max_over(&grid_pts, |r, t| Ok(-PointGeometry::at(spec, r, t)?.scalar_curvature()))?,
            1e-10,
        ));
    }
    Ok(Report {
        suite: "geometry".into(),
        metric: spec.tag().to_string(),
        checks,
        fiber_sweep: None,
    })
}

/// The fiber-rescale sweep on `ḡ = dr² + r²dθ²`, `f = r²sin²θ`, `q = F⁻⁴` with `b = 1`.
pub fn fiber_sweep(points: usize) -> Result<FiberSweep> {
    let base = MetricSpec::flat();
    let f = ScalarField::new("r²sin²θ", |r, t| (r * t.sin()).powi(2));
    let q = ScalarField::melvin_factor(1.0).powf(-4.0);
    let (_, g) = fiber_pair(&base, &f, &q);
    let xi = AnalyticSpinorField::constant(&g, real_spinor(1.0, 0.0));
    let alphas: Vec<f64> = (-16..=16).map(|k| k as f64 / 16.0).collect();
    fiber_rescale_sweep(&base, &f, &q, &xi, &alphas, &sample_points(points, 0.5, 8.0), 1e-8)
}

/// Conformal rescaling on `(flat, ζ = F)`, the fiber-rescale sweep and, for Melvin-type
/// metrics, the Dirac decomposition against the companion.
pub fn verify_lemmas(spec: &MetricSpec) -> Result<Report> {
    let flat = MetricSpec::flat();
    let b = if spec.b() > 0.0 { spec.b() } else { 1.0 };
    let xi = test_spinor(&flat);
    let zeta = ScalarField::melvin_factor(b);
    let pts = sample_points(50, 0.5, 8.0);
    let mut checks = vec![Check::at_most(
        "conformal rescaling",
        max_over(&pts, |r, t| Ok(conformal_residual(&flat, &zeta, &xi, r, t)?.norm()))?,
        1e-10,
    )];
    let sweep = fiber_sweep(50)?;
    checks.push(Check {
        name: "fiber rescale null exponent exists".into(),
        value: sweep.alpha_star.unwrap_or(f64::NAN),
        tolerance: sweep.tol,
        pass: sweep.alpha_star.is_some(),
    });
    if is_melvin_type(spec) {
        let g = spec.companion()?;
        let field = test_spinor(spec);
        let lo = spec.r_floor() * 1.05 + 1.0;
        checks.push(Check::at_most(
            "dirac decomposition",
            max_over(&sample_points(50, lo, lo + 8.0), |r, t| {
                let d = crate::spinor::dirac_apply(spec, &field, r, t)?.norm();
                Ok(dirac_decomposition_residual(spec, &g, &field, r, t)?.norm() / (1.0 + d))
            })?,
            1e-10,
        ));
    }
    Ok(Report {
        suite: "lemmas".into(),
        metric: spec.tag().to_string(),
        checks,
        fiber_sweep: Some(sweep),
    })
}

/// `max ‖D²ξ − ∇*∇ξ − (R/4)ξ‖ / ‖ξ‖` over 50 points for the test spinor.
pub fn lichnerowicz_defect(spec: &MetricSpec, r_lo: f64, r_hi: f64) -> Result<f64> {
    let xi = test_spinor(spec);
    let r_lo = r_lo.max(spec.r_floor() * 1.05 + 1e-3);
    max_over(&sample_points(50, r_lo, r_hi), |r, t| {
        Ok(lichnerowicz_residual(spec, &xi, r, t)?.norm() / xi.value(r, t).norm())
    })
}

pub fn verify_lichnerowicz(spec: &MetricSpec, r_lo: f64, r_hi: f64) -> Result<Report> {
    Ok(Report {
        suite: "lichnerowicz".into(),
        metric: spec.tag().to_string(),
        checks: vec![Check::at_most(
            "operator identity",
            lichnerowicz_defect(spec, r_lo, r_hi)?,
            1e-6,
        )],
        fiber_sweep: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Perturbation;

    #[test]
    fn suites_pass_on_standard_metrics() {
        for spec in [
            MetricSpec::flat(),
            MetricSpec::melvin(2.0).unwrap(),
            MetricSpec::asymptotically_melvin(0.5, Perturbation::new(0.1, -0.2, 0.0)).unwrap(),
            MetricSpec::schwarzschild_melvin(0.3, 1.0, Perturbation::ZERO).unwrap(),
        ] {
            let g = verify_geometry(&spec, 1.0, 8.0).unwrap();
            assert!(g.pass(), "{}: {:?}", spec.tag(), g.failures());
            let l = verify_lichnerowicz(&spec, 1.0, 8.0).unwrap();
            assert!(l.pass(), "{}: {:?}", spec.tag(), l.checks);
        }
        let lem = verify_lemmas(&MetricSpec::melvin(2.0).unwrap()).unwrap();
        assert!(lem.pass(), "{:?}", lem.failures());
        assert_eq!(lem.fiber_sweep.unwrap().alpha_star, Some(0.25));
    }

    #[test]
    fn flat_report_lists_closed_forms() {
        let g = verify_geometry(&MetricSpec::flat(), 1.0, 4.0).unwrap();
        assert!(g.checks.iter().any(|c| c.name == "flat connection closed forms"));
        assert!(g.checks.iter().all(|c| c.pass));
    }

    #[test]
    fn points_avoid_axis() {
        assert!(sample_points(200, 1.0, 2.0).iter().all(|&(r, t)| (0.1..=PI - 0.1).contains(&t) && (1.0..=2.0).contains(&r)));
    }
}
