//! Configured runs: certification reports, refinement studies and
//! solve-to-file.

mod config;
mod run;
mod study;

use std::fmt;

use serde::Serialize;

pub use config::{
    CaseKind, CertifySection, DataSpec, FluxStrategy, JumpMethod, OutputSection, ProblemSection, RunConfig,
    SolveSection, StudySection,
};
pub use run::{
    approximation, build_problem, certify, certify_approximation, flux_weights, measured_error, select_flux,
    solve_to_file, Certification, FluxInfo, MeshInfo, Problem, Report,
};
pub use study::{study, study_rows, write_study, StudyRow};

/// Pipeline step an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Problem,
    Solve,
    Load,
    Flux,
    Bound,
    TrueError,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Problem => "problem",
            Stage::Solve => "solve",
            Stage::Load => "load",
            Stage::Flux => "flux",
            Stage::Bound => "bound",
            Stage::TrueError => "true-error",
            Stage::Output => "output",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{stage} stage: {message}")]
pub struct HarnessError {
    pub stage: Stage,
    pub message: String,
    /// Underlying numerical error, when there is one.
    pub core: Option<crate::Error>,
}

impl HarnessError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        Self {
            stage,
            message: message.into(),
            core: None,
        }
    }

    pub fn core(stage: Stage, err: crate::Error) -> Self {
        Self {
            stage,
            message: err.to_string(),
            core: Some(err),
        }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

/// Tags core errors with a stage.
pub(crate) trait AtStage<T> {
    fn at(self, stage: Stage) -> HarnessResult<T>;
}

impl<T> AtStage<T> for crate::Result<T> {
    fn at(self, stage: Stage) -> HarnessResult<T> {
        self.map_err(|e| HarnessError::core(stage, e))
    }
}
