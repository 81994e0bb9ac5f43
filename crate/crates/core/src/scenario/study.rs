use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::discretization::{build_grid, integrate_volume, QuadratureRule};
use crate::error::{Error, Result};
use crate::geometry::{MetricSpec, ScalarField};
use crate::jet::Jet;
use crate::solver::{solve_manufactured, BoundaryCondition};
use crate::spinor::{conformal_residual, AnalyticSpinorField};

use super::config::ScenarioConfig;
use super::run::{create, finish, write_json, Outputs, RunArtifacts, RunRecord};
use super::verify::{sample_points, test_spinor};

/// One refinement level of a convergence study.
#[derive(Clone, Debug, Serialize)]
pub struct StudyLevel {
    pub n_r: usize,
    pub n_theta: usize,
    pub h: f64,
    pub l2_error: f64,
    pub volume_error: f64,
    pub lemma_residual: f64,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StudySummary {
    pub metric: String,
    pub levels: Vec<StudyLevel>,
    /// Observed orders between consecutive levels.
    pub order_l2: Vec<f64>,
    pub order_volume: Vec<f64>,
    pub min_order_l2: f64,
    pub min_order_volume: f64,
}

/// `(e^{−r}, 0)`, the manufactured solution of the study.
pub fn manufactured_field(spec: &MetricSpec) -> AnalyticSpinorField {
    AnalyticSpinorField::new(spec, "exp(-r)", |r, _| {
        [(-r).exp(), Jet::constant(0.0), Jet::constant(0.0), Jet::constant(0.0)]
    })
}

fn orders(errors: &[f64], hs: &[f64]) -> Vec<f64> {
    errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}

/// Manufactured solve, flat-annulus volume and conformal-lemma residual at `n, 2n, 4n, …`,
/// starting from the configured grid. Manufactured solves always use exact Dirichlet data.
pub fn run_study(cfg: &ScenarioConfig, levels: usize) -> Result<StudySummary> {
    if levels < 3 {
        return Err(Error::InvalidParameter(format!("levels = {levels}, need at least 3")));
    }
    let spec = cfg.metric()?;
    let base = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::ConfigError("convergence study needs the `grid` block".into()))?;
    let exact = manufactured_field(&spec);
    let options = crate::solver::SolverOptions {
        boundary: BoundaryCondition::Dirichlet,
        ..cfg.solver.options()
    };
    let flat = MetricSpec::flat();
    let lemma_field = test_spinor(&flat);
    let zeta = ScalarField::melvin_factor(1.0);
    let want_volume = 4.0 * PI / 3.0 * (base.r_max.powi(3) - base.r_min.powi(3));

    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let n_r = (base.n_r - 1) * (1 << k) + 1;
        let n_theta = base.n_theta * (1 << k);
        let grid = build_grid(base.r_min, base.r_max, n_r, n_theta, base.spacing)?;
        let (_, report) = solve_manufactured(&spec, &grid, &exact, &options)?;
        let rule = QuadratureRule::new(&grid, &flat)?;
        let volume = integrate_volume(&rule, &vec![1.0; grid.len()], base.r_min, base.r_max)?;
        let mut lemma = 0.0f64;
        for (r, t) in sample_points(20, 0.5, 8.0) {
            lemma = lemma.max(conformal_residual(&flat, &zeta, &lemma_field, r, t)?.norm());
        }
        rows.push(StudyLevel {
            n_r,
            n_theta,
            h: grid.h_max(),
            l2_error: report.l2_error.unwrap_or(f64::NAN),
            volume_error: (volume - want_volume).abs() / want_volume,
            lemma_residual: lemma,
            iterations: report.iterations,
            relative_residual: report.relative_residual,
        });
    }
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let order_l2 = orders(&rows.iter().map(|r| r.l2_error).collect::<Vec<_>>(), &hs);
    let order_volume = orders(&rows.iter().map(|r| r.volume_error).collect::<Vec<_>>(), &hs);
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(StudySummary {
        metric: spec.tag().to_string(),
        min_order_l2: min(&order_l2),
        min_order_volume: min(&order_volume),
        levels: rows,
        order_l2,
        order_volume,
    })
}

pub(crate) fn write_study(cfg: &ScenarioConfig, levels: usize, out: &mut Outputs) -> Result<()> {
    let summary = run_study(cfg, levels)?;
    let mut w = csv::Writer::from_writer(create(&out.path("convergence.csv"))?);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record([
        "level",
        "n_r",
        "n_theta",
        "h",
        "l2_error",
        "order_l2",
        "volume_error",
        "order_volume",
        "lemma_residual",
        "iterations",
        "relative_residual",
    ])
    .map_err(io)?;
    for (k, row) in summary.levels.iter().enumerate() {
        let order = |v: &[f64]| if k == 0 { String::new() } else { v[k - 1].to_string() };
        w.write_record([
            k.to_string(),
            row.n_r.to_string(),
            row.n_theta.to_string(),
            row.h.to_string(),
            row.l2_error.to_string(),
            order(&summary.order_l2),
            row.volume_error.to_string(),
            order(&summary.order_volume),
            row.lemma_residual.to_string(),
            row.iterations.to_string(),
            row.relative_residual.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    write_json(&out.path("convergence.json"), &summary)?;
    if summary.min_order_l2 < 1.8 {
        return Err(Error::InvalidParameter(format!(
            "observed L² order {:.3} is below 1.8",
            summary.min_order_l2
        )));
    }
    Ok(())
}

/// Runs only the convergence study and writes its manifest.
pub fn convergence_study(cfg: &ScenarioConfig, raw: &[u8], out_dir: &Path, levels: usize, deterministic: bool) -> Result<RunArtifacts> {
    if levels < 3 {
        return Err(Error::ConfigError(format!("--levels {levels}: need at least 3")));
    }
    if cfg.grid.is_none() {
        return Err(Error::ConfigError("convergence study needs the `grid` block".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let start = Instant::now();
    let mut out = Outputs::new(out_dir);
    let res = write_study(cfg, levels, &mut out);
    let record = RunRecord {
        run: "convergence-study".into(),
        status: if res.is_ok() { "ok" } else { "failed" }.into(),
        error: res.err().map(|e| e.to_string()),
        files: out.files,
        wall_time: (!deterministic).then(|| start.elapsed().as_secs_f64()),
    };
    finish(raw, out_dir, deterministic, vec![record])
}
