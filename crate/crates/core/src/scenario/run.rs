use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::asymptotics::{
    boundary_flux, decay_rate_fit, estimate_b, flux_nonnegativity, weighted_norm,
    weighted_norm_spinor, BEstimate, BMethod, FluxSeries,
};
use crate::discretization::{Grid, GridSpinorField};
use crate::error::{Error, Result};
use crate::geometry::MetricSpec;
use crate::solver::{solve_harmonic_correction, HarmonicCorrection, SolveReport};
use crate::spinor::{norm_sqr, real_spinor, theta0_construct};

use super::config::{RunKind, ScenarioConfig};
use super::study::write_study;
use super::verify::{verify_geometry, verify_lemmas, verify_lichnerowicz, Report};

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub run: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub deterministic: bool,
    pub runs: Vec<RunRecord>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub manifest: Manifest,
}

impl RunArtifacts {
    pub fn all_ok(&self) -> bool {
        self.manifest.runs.iter().all(|r| r.status == "ok")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes pretty JSON followed by a newline.
pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Per-run output collector.
pub(crate) struct Outputs<'a> {
    dir: &'a Path,
    pub files: Vec<String>,
}

impl<'a> Outputs<'a> {
    pub(crate) fn new(dir: &'a Path) -> Self {
        Outputs { dir, files: Vec::new() }
    }

    pub(crate) fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    report: &'a SolveReport,
    harmonic_residual: f64,
    /// `Θ̃` vanishes on the prescribed boundary coefficients, an `O(r_max^{−ε})` modeling error.
    note: &'static str,
    theta_tilde_outer_mean: f64,
    theta_tilde_max: f64,
}

#[derive(Serialize)]
struct BSummary {
    b: f64,
    boundary: Option<BEstimate>,
    volume: Option<BEstimate>,
    boundary_error: Option<String>,
    volume_error: Option<String>,
    flux: FluxSeries,
}

#[derive(Serialize)]
struct NormSummary {
    p: f64,
    delta: f64,
    k: usize,
    admissible_decay: bool,
    theta_tilde: f64,
    norm_defect: f64,
    decay_theta_tilde: Option<f64>,
    decay_norm_defect: Option<f64>,
    decay_error: Option<String>,
}

/// Flux tolerance `C·h`, with `C` the discretization error of the flux of the exact field
/// `‖Θ‖² = F` on the same grid per unit `h`.
pub fn flux_tolerance(spec: &MetricSpec, grid: &Grid) -> Result<f64> {
    let exact = GridSpinorField::sample(grid, &theta0_construct(spec, real_spinor(1.0, 0.0))?);
    let h = grid.h_max();
    let mut c = 0.0f64;
    for &r in grid.r() {
        let want = 16.0 / 3.0 * std::f64::consts::PI * spec.b() * r.powi(3);
        c = c.max((boundary_flux(spec, grid, &exact, r)? - want).abs() / h);
    }
    Ok(c * h)
}

struct Context {
    spec: MetricSpec,
    solved: Option<(Grid, HarmonicCorrection)>,
}

fn run_one(cfg: &ScenarioConfig, kind: RunKind, ctx: &mut Context, out: &mut Outputs, deterministic: bool) -> Result<()> {
    let spec = ctx.spec.clone();
    let (r_lo, r_hi) = cfg
        .grid
        .as_ref()
        .map(|g| (g.r_min, g.r_max))
        .unwrap_or((1.0, 10.0));
    let verify = |report: Report, name: &str, out: &mut Outputs| -> Result<()> {
        write_json(&out.path(name), &report)?;
        if report.pass() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("failed checks: {}", report.failures().join(", "))))
        }
    };
    match kind {
        RunKind::VerifyGeometry => verify(verify_geometry(&spec, r_lo, r_hi)?, "geometry-report.json", out),
        RunKind::VerifyLemmas => verify(verify_lemmas(&spec)?, "lemma-report.json", out),
        RunKind::VerifyLichnerowicz => verify(
            verify_lichnerowicz(&spec, r_lo, r_hi)?,
            "lichnerowicz-report.json",
            out,
        ),
        RunKind::Solve => {
            ctx.solved = None;
            let grid = cfg.grid()?;
            let mut h = solve_harmonic_correction(&spec, &grid, cfg.xi0(), &cfg.solver.options())?;
            if deterministic {
                h.report.wall_time = 0.0;
            }
            let tilde = h.theta_tilde.norm_sqr_samples();
            let outer = grid.index(grid.n_r - 2, 0)..grid.index(grid.n_r - 1, 0);
            let summary = SolveSummary {
                report: &h.report,
                harmonic_residual: h.harmonic_residual,
                note: "theta_tilde is held at zero on the prescribed boundary coefficients",
                theta_tilde_outer_mean: tilde[outer.clone()].iter().map(|v| v.sqrt()).sum::<f64>() / outer.len() as f64,
                theta_tilde_max: h.theta_tilde.max_norm(),
            };
            write_json(&out.path("solve-report.json"), &summary)?;
            h.theta.write_csv(&grid, create(&out.path("theta.csv"))?)?;
            h.theta_tilde.write_csv(&grid, create(&out.path("theta-tilde.csv"))?)?;
            ctx.solved = Some((grid, h));
            Ok(())
        }
        RunKind::ExtractB => {
            let (grid, h) = ctx
                .solved
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("extract-b needs a successful solve".into()))?;
            let bnd = estimate_b(&spec, grid, &h.theta, BMethod::Boundary);
            let vol = estimate_b(&spec, grid, &h.theta, BMethod::Volume);
            let flux = flux_nonnegativity(&spec, grid, &h.theta, flux_tolerance(&spec, grid)?)?;
            if let Ok(b) = &bnd {
                b.write_csv(create(&out.path("b-boundary.csv"))?)?;
            }
            if let Ok(v) = &vol {
                v.write_csv(create(&out.path("b-volume.csv"))?)?;
            }
            flux.write_csv(create(&out.path("flux.csv"))?)?;
            let failure = match (&bnd, &vol) {
                (Err(e), _) | (_, Err(e)) => Some(e.clone()),
                _ => None,
            };
            let summary = BSummary {
                b: spec.b(),
                boundary_error: bnd.as_ref().err().map(|e| e.to_string()),
                volume_error: vol.as_ref().err().map(|e| e.to_string()),
                boundary: bnd.ok(),
                volume: vol.ok(),
                flux,
            };
            write_json(&out.path("b-estimate.json"), &summary)?;
            failure.map_or(Ok(()), Err)
        }
        RunKind::Norms => {
            let (grid, h) = ctx
                .solved
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter("norms needs a successful solve".into()))?;
            let w = cfg.norms;
            let defect: Vec<f64> = h
                .theta
                .values
                .iter()
                .zip(&h.theta0.values)
                .map(|(t, t0)| norm_sqr(t) - norm_sqr(t0))
                .collect();
            let tilde: Vec<f64> = h.theta_tilde.values.iter().map(|v| v.norm()).collect();
            let band = (std::f64::consts::FRAC_PI_3, 2.0 * std::f64::consts::FRAC_PI_3);
            let fits = decay_rate_fit(&tilde, grid, band).and_then(|a| Ok((a, decay_rate_fit(&defect, grid, band)?)));
            let summary = NormSummary {
                p: w.p,
                delta: w.delta,
                k: w.k,
                admissible_decay: w.admissible_decay(),
                theta_tilde: weighted_norm_spinor(&h.theta_tilde, grid, &spec, &w)?,
                norm_defect: weighted_norm(&defect, grid, &spec, &w)?,
                decay_theta_tilde: fits.as_ref().ok().map(|f| f.0),
                decay_norm_defect: fits.as_ref().ok().map(|f| f.1),
                decay_error: fits.as_ref().err().map(|e| e.to_string()),
            };
            write_json(&out.path("norms.json"), &summary)
        }
        RunKind::ConvergenceStudy => write_study(cfg, cfg.study_levels, out),
    }
}

/// Executes every requested run in order. A failing run is recorded in the manifest and
/// does not stop the others; only an invalid configuration or an unwritable output
/// directory is an error.
pub fn run_scenario(cfg: &ScenarioConfig, raw: &[u8], out_dir: &Path, deterministic: bool) -> Result<RunArtifacts> {
    cfg.validate()?;
    let deterministic = deterministic || cfg.solver.deterministic;
    fs::create_dir_all(out_dir)?;
    let mut ctx = Context {
        spec: cfg.metric()?,
        solved: None,
    };
    let mut records = Vec::new();
    for &kind in &cfg.runs {
        let start = Instant::now();
        let mut out = Outputs::new(out_dir);
        let res = run_one(cfg, kind, &mut ctx, &mut out, deterministic);
        records.push(RunRecord {
            run: kind.name().into(),
            status: if res.is_ok() { "ok" } else { "failed" }.into(),
            error: res.err().map(|e| e.to_string()),
            files: out.files,
            wall_time: (!deterministic).then(|| start.elapsed().as_secs_f64()),
        });
    }
    finish(raw, out_dir, deterministic, records)
}

pub(crate) fn finish(
    raw: &[u8],
    out_dir: &Path,
    deterministic: bool,
    records: Vec<RunRecord>,
) -> Result<RunArtifacts> {
    let mut files: Vec<String> = records.iter().flat_map(|r| r.files.clone()).collect();
    files.sort();
    files.dedup();
    files.push("manifest.json".into());
    let manifest = Manifest {
        schema_version: super::config::SCHEMA_VERSION,
        tool: "spinorlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: sha256_hex(raw),
        deterministic,
        runs: records,
        files: files.clone(),
    };
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(RunArtifacts {
        out_dir: out_dir.to_path_buf(),
        files: files.iter().map(|f| out_dir.join(f)).collect(),
        manifest,
    })
}
