//! Declarative benchmark scenarios: the `.scn` text format, bundled
//! benchmark files, constructors for the standard systems, and a runner that
//! executes everything a scenario names.

mod builders;
mod expr;
mod runner;
mod scn;

pub mod bundled;

pub use builders::{
    build_benchmark_regressor, build_bouncing_ball, build_mixed_data_scenario,
    build_old_data_plant, constant_input, BALL_IMPACT_SCALE,
};
pub use expr::Expr;
pub use runner::{
    build_regression_data, run_scenario, ExpectationResult, ScenarioRun, CONVERGENCE_THRESHOLD,
};
pub use scn::{
    parse_scenario, save_scenario, CertifySpec, CmpOp, DomainSpec, Expectation, GradientSpec,
    MixedDataSpec, ObserverSpec, PlantSpec, ScenarioKind, ScenarioSpec, SignalSpec, SimSpec,
};

use std::path::Path;

use thiserror::Error;

use crate::hybrid_time::DomainError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid scenario field {field}: {msg}")]
    Validation { field: String, msg: String },
    #[error("old-data samples ({samples}) and treatment times ({times}) differ in length")]
    MisalignedOldData { samples: usize, times: usize },
    #[error("integration failed over [{tau0}, {tau1}] (non-finite values)")]
    IntegrationFailure { tau0: f64, tau1: f64 },
    #[error("estimator failed: {0}")]
    Estimator(String),
    #[error("excitation check failed: {0}")]
    Excitation(String),
    #[error("unknown plant model {0:?}")]
    UnknownPlantModel(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Load a scenario from a `.scn` file on disk, falling back to the bundled
/// scenario of the same name.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec, ScenarioError> {
    let path = path.as_ref();
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(err) => {
            let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default();
            match bundled::get(name) {
                Some(text) => text.to_string(),
                None => return Err(ScenarioError::Io(err)),
            }
        }
    };
    parse_scenario(&text)
}
