use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::asymptotics::WeightParams;
use crate::discretization::{build_grid, Grid, Spacing};
use crate::error::{Error, Result};
use crate::geometry::{MetricFamily, MetricParams, MetricSpec};
use crate::solver::{BoundaryCondition, SolverOptions};
use crate::spinor::{spinor, Spinor};
use num_complex::Complex64;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    VerifyGeometry,
    VerifyLemmas,
    VerifyLichnerowicz,
    Solve,
    ExtractB,
    Norms,
    ConvergenceStudy,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::VerifyGeometry => "verify-geometry",
            RunKind::VerifyLemmas => "verify-lemmas",
            RunKind::VerifyLichnerowicz => "verify-lichnerowicz",
            RunKind::Solve => "solve",
            RunKind::ExtractB => "extract-b",
            RunKind::Norms => "norms",
            RunKind::ConvergenceStudy => "convergence-study",
        }
    }

    fn needs_grid(self) -> bool {
        matches!(
            self,
            RunKind::Solve | RunKind::ExtractB | RunKind::Norms | RunKind::ConvergenceStudy
        )
    }

    fn needs_solve(self) -> bool {
        matches!(self, RunKind::ExtractB | RunKind::Norms)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid> {
        build_grid(self.r_min, self.r_max, self.n_r, self.n_theta, self.spacing)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub boundary: BoundaryCondition,
    /// Omits wall-clock times from every artifact.
    pub deterministic: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        SolverConfig {
            tol: o.tol,
            max_iter: o.max_iter,
            boundary: o.boundary,
            deterministic: false,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            boundary: self.boundary,
        }
    }
}

fn default_levels() -> usize {
    3
}

fn default_xi0() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

fn default_norms() -> WeightParams {
    WeightParams {
        p: 4.0,
        delta: -1.2,
        k: 1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub metric: Option<MetricParams>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub runs: Vec<RunKind>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// `[Re ξ₁, Im ξ₁, Re ξ₂, Im ξ₂]` of the asymptotic spinor; must have unit norm.
    #[serde(default = "default_xi0")]
    pub xi0: [f64; 4],
    #[serde(default = "default_norms")]
    pub norms: WeightParams,
    #[serde(default = "default_levels")]
    pub study_levels: usize,
}

impl ScenarioConfig {
    /// Parses and validates. Syntax and schema errors carry serde's line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| Error::ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn xi0(&self) -> Spinor {
        let x = self.xi0;
        spinor(Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3]))
    }

    pub fn metric(&self) -> Result<MetricSpec> {
        self.metric
            .as_ref()
            .ok_or_else(|| Error::ConfigError("missing `metric` block".into()))?
            .build()
            .map_err(|e| Error::ConfigError(format!("metric: {e}")))
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::ConfigError("missing `grid` block".into()))?
            .build()
            .map_err(|e| Error::ConfigError(format!("grid: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigError(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.runs.is_empty() {
            return bad("`runs` is empty".into());
        }
        if self.metric.is_none() {
            return bad(format!("run `{}` needs the `metric` block", self.runs[0].name()));
        }
        let spec = self.metric()?;
        for (k, run) in self.runs.iter().enumerate() {
            if run.needs_grid() && self.grid.is_none() {
                return bad(format!("run `{}` needs the `grid` block", run.name()));
            }
            if run.needs_solve() && !self.runs[..k].contains(&RunKind::Solve) {
                return bad(format!("run `{}` needs an earlier `solve` run", run.name()));
            }
        }
        if self.grid.is_some() {
            let grid = self.grid()?;
            grid.check_metric(&spec).map_err(|e| Error::ConfigError(format!("grid: {e}")))?;
        }
        if self.runs.contains(&RunKind::Solve) {
            if spec.family() == Some(MetricFamily::EtaMinus) {
                return bad("metric: eta-minus degenerates at infinity and cannot be solved on".into());
            }
            let n: f64 = self.xi0.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-12 {
                return bad(format!("xi0 has norm {n}, expected 1"));
            }
        }
        self.solver
            .options()
            .validate()
            .map_err(|e| Error::ConfigError(format!("solver: {e}")))?;
        self.norms
            .validate()
            .map_err(|e| Error::ConfigError(format!("norms: {e}")))?;
        if self.study_levels < 3 {
            return bad(format!("study_levels = {}, need at least 3", self.study_levels));
        }
        Ok(())
    }
}
