//! Scenario configuration, verification suites and batch runs.

mod config;
mod run;
mod study;
mod verify;

pub use config::{GridConfig, RunKind, ScenarioConfig, SolverConfig, SCHEMA_VERSION};
pub use run::{flux_tolerance, run_scenario, sha256_hex, Manifest, RunArtifacts, RunRecord};
pub use study::{convergence_study, manufactured_field, run_study, StudyLevel, StudySummary};
pub use verify::{
    clifford_defect, fiber_sweep, lichnerowicz_defect, sample_points, test_spinor,
    verify_geometry, verify_lemmas, verify_lichnerowicz, Check, Report,
};
