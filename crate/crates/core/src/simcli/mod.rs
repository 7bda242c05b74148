//! Scenarios, boundary experiments, invariant suites and report emission
//! behind the `bifs` command line.

mod commands;
mod experiment;
mod report;
mod scenario;
mod suites;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::hardy::HardyError;
use crate::ifs::{IfsError, LimitStatus};
use crate::measure::MeasureError;

pub use commands::{norms, perturb, simulate, verify, Outcome, SimulateOptions};
pub use experiment::{
    run_boundary_experiment, sample_angle, summability_diagnostic, BoundaryExperiment, ExperimentReport,
    InvariantResult, Provenance, SampleRecord, SampleStatus, Summary, SummabilityReport, SummabilityRow,
    CONVERGENCE_WINDOW,
};
pub use report::{emit_records, emit_report, Format};
pub use scenario::{
    parse_scenario, BlocksSpec, ExperimentSpec, GeneratorKind, MarkedSpec, QuadratureSpec, Scenario,
    ScenarioError, ScheduleSpec, Suite,
};
pub use suites::{run_suite, scenario_trace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error(transparent)]
    Ifs(#[from] IfsError),
    #[error(transparent)]
    Hardy(#[from] HardyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("interior limit not established: {0:?}")]
    UnresolvedLimit(LimitStatus),
    #[error("refused: {0}")]
    Refused(String),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVARIANT_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const INCONCLUSIVE: i32 = 3;
}

impl SimError {
    /// Malformed input maps to a configuration error; everything else is a
    /// numerical outcome the run could not decide.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) | SimError::Refused(_) => exit::CONFIG_ERROR,
            SimError::Ifs(
                IfsError::Index { .. }
                | IfsError::ZeroIndex
                | IfsError::NotIncreasing(_)
                | IfsError::TooFewIndices(_)
                | IfsError::EmptySchedule
                | IfsError::Invalid(_)
                | IfsError::Map(_),
            ) => exit::CONFIG_ERROR,
            _ => exit::INCONCLUSIVE,
        }
    }
}
