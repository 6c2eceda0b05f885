//! Fixed-step simulation of hybrid systems and hybrid transition matrices.
//!
//! Two system classes are covered: the autonomous form (flow map / jump map
//! constrained to flow and jump sets, with jump instants found by bisection)
//! and the linear time-varying form driven by an exogenous hybrid domain,
//! which jumps exactly when its data jumps.
//!
//! Integration is classical fixed-step 4th order: deterministic,
//! reproducible traces matter more here than adaptivity.

mod autonomous;
mod checks;
mod linear;
mod transition;

pub use autonomous::{simulate_autonomous, AutonomousHybridSystem, HybridSolution, Termination};
pub use checks::{
    check_comparison_lemma, check_ues_bound, fit_ues_envelope, CheckError, ComparisonVerdict,
    UesVerdict,
};
pub use linear::{simulate_linear, simulate_linear_on, LinearHybridSystem};
pub use transition::{transition_matrix, transition_matrix_on, TransitionMatrix};

use thiserror::Error;

use crate::hybrid_time::DomainError;

/// Simulation parameters shared by every run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Fixed integration step (seconds).
    pub step: f64,
    /// Horizon in ordinary time.
    pub t_max: f64,
    /// Horizon in jump count.
    pub j_max: u32,
    /// Maximum consecutive jumps at one time instant before the run is
    /// declared Zeno and halted.
    pub zeno_guard: u32,
}

impl SimConfig {
    pub fn new(step: f64, t_max: f64, j_max: u32) -> Self {
        assert!(step > 0.0, "step must be positive");
        SimConfig { step, t_max, j_max, zeno_guard: 8 }
    }

    pub fn with_zeno_guard(mut self, guard: u32) -> Self {
        assert!(guard >= 1);
        self.zeno_guard = guard;
        self
    }

    /// Horizon that never binds; useful when the exogenous domain already
    /// bounds the run.
    pub fn unbounded(step: f64) -> Self {
        SimConfig::new(step, f64::INFINITY, u32::MAX)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("initial state lies outside both the flow and jump sets")]
    InitialStateOutsideSets,
    #[error("start point (t={t}, j={j}) is not in the system domain")]
    StartNotInDomain { t: f64, j: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}
