//! Numerical toolkit for signals that evolve in hybrid time, i.e. that both
//! flow in continuous time and jump at discrete instants.
//!
//! The crate provides:
//!
//! - [`hybrid_time`]: hybrid time domains, sampled hybrid arcs, windows of
//!   prescribed hybrid length, hybrid integrals and `L_p` norms;
//! - [`hybrid_sim`]: fixed-step simulation of autonomous hybrid systems
//!   (flow map / jump map with event detection) and of linear time-varying
//!   hybrid systems, plus hybrid transition matrices and decay-envelope
//!   checks;
//! - [`excitation`]: persistency-of-excitation certification over continuous
//!   (CPE), discrete (DPE) and hybrid (HPE) windows, uniform-observability
//!   Gramian checks (HUO), and numerical verification of the Lyapunov and
//!   boundedness assumptions behind them;
//! - [`estimators`]: the hybrid gradient-descent identifier, its
//!   continuous-only and discrete-only baselines, and the hybrid adaptive
//!   observer/identifier with its filtered-regressor adaptation;
//! - [`scenarios`]: declarative `.scn` benchmark scenarios, bundled examples,
//!   and constructors for the standard benchmark systems.
//!
//! All domain types are immutable after construction and safe to share across
//! threads; batch runs over initial conditions or window base points may be
//! parallelised freely by the caller.

pub mod estimators;
pub mod excitation;
pub mod hybrid_sim;
pub mod hybrid_time;
pub mod linalg;
pub mod scenarios;

pub use estimators::{EstimatorTrace, GradientConfig, ObserverConfig, PlantModel, RegressionData};
pub use excitation::{ExcitationKind, ExcitationReport, LyapunovCertificate};
pub use hybrid_sim::{AutonomousHybridSystem, LinearHybridSystem, SimConfig, TransitionMatrix};
pub use hybrid_time::{HybridArc, HybridTimeDomain, Window};
pub use scenarios::ScenarioSpec;
