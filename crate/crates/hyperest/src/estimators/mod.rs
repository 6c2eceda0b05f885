//! Parameter identifiers and adaptive observers driven by hybrid data.
//!
//! The gradient identifier descends the squared output error of a linear
//! regression `y = psi^T theta`: it integrates a flow update on interval
//! interiors and applies a normalised jump update at every domain jump. Its
//! continuous-only and discrete-only baselines hold the estimate constant on
//! the regime they ignore.
//!
//! The adaptive observer/identifier co-simulates a plant that is affine in
//! the unmeasured state and linear in the unknown parameters, combining
//! output injection (`K_c`, `K_d`) with filtered-regressor adaptation
//! (`Gamma_c`, `Gamma_d`). The observer shares the plant's jump instants.

mod error_system;
mod gradient;
mod observer;

pub use error_system::{build_error_system, gradient_error_pair, max_jump_eigenvalue};
pub use gradient::{run_continuous_gradient, run_discrete_gradient, run_hybrid_gradient};
pub use observer::{
    run_continuous_observer, run_discrete_observer, run_hybrid_observer, InputSignal, PlantCtx,
    PlantModel,
};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::hybrid_sim::SimError;
use crate::hybrid_time::{DomainError, HybridArc};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("trace records no regressor to build the error system from")]
    MissingRegressor,
    #[error("plant simulation failed: {0}")]
    PlantSimulationFailed(String),
    #[error("regression data inconsistent at (t={t}, j={j}): |psi^T theta - y| = {residual}")]
    InconsistentRegression { t: f64, j: u32, residual: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A linear regression dataset over a hybrid time domain.
#[derive(Debug, Clone)]
pub struct RegressionData {
    pub psi: HybridArc,
    pub y: HybridArc,
    pub theta_true: Option<DVector<f64>>,
}

impl RegressionData {
    pub fn new(
        psi: HybridArc,
        y: HybridArc,
        theta_true: Option<DVector<f64>>,
    ) -> Result<Self, EstimatorError> {
        if psi.domain() != y.domain() {
            return Err(EstimatorError::DimensionMismatch(
                "psi and y must share one hybrid time domain".into(),
            ));
        }
        if psi.shape().1 != 1 || y.shape() != (1, 1) {
            return Err(EstimatorError::DimensionMismatch(format!(
                "psi must be a column vector and y scalar, got {:?} and {:?}",
                psi.shape(),
                y.shape()
            )));
        }
        if let Some(theta) = &theta_true {
            if theta.len() != psi.shape().0 {
                return Err(EstimatorError::DimensionMismatch(format!(
                    "theta_true has dimension {}, psi rows {}",
                    theta.len(),
                    psi.shape().0
                )));
            }
            let y_samples: Vec<f64> = y.iter_samples().map(|(_, _, v)| v[(0, 0)]).collect();
            for (idx, (t, j, p)) in psi.iter_samples().enumerate() {
                let predicted = (p.transpose()
                    * DMatrix::from_column_slice(theta.len(), 1, theta.as_slice()))[(0, 0)];
                let residual = (predicted - y_samples[idx]).abs();
                if residual > 1e-9 {
                    return Err(EstimatorError::InconsistentRegression { t, j, residual });
                }
            }
        }
        Ok(RegressionData { psi, y, theta_true })
    }

    pub fn theta_dim(&self) -> usize {
        self.psi.shape().0
    }
}

/// Gains and initial estimate of a gradient identifier. The flow and jump
/// gains default equal; the hybrid algorithm is the special case of using
/// both regimes with one rate.
#[derive(Debug, Clone)]
pub struct GradientConfig {
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub theta_hat0: DVector<f64>,
}

impl GradientConfig {
    pub fn new(gamma: f64, theta_hat0: DVector<f64>) -> Self {
        GradientConfig::with_gains(gamma, gamma, theta_hat0)
    }

    pub fn with_gains(gamma_c: f64, gamma_d: f64, theta_hat0: DVector<f64>) -> Self {
        assert!(gamma_c > 0.0 && gamma_d > 0.0, "adaptation gains must be positive");
        GradientConfig { gamma_c, gamma_d, theta_hat0 }
    }
}

/// Gains and initial conditions of the adaptive observer/identifier.
#[derive(Debug, Clone)]
pub struct ObserverConfig {
    pub k_c: DMatrix<f64>,
    pub k_d: DMatrix<f64>,
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub x_hat0: DVector<f64>,
    pub theta_hat0: DVector<f64>,
    pub filter_c0: DMatrix<f64>,
    pub filter_d0: DMatrix<f64>,
}

/// Which estimator produced a trace; steers the error-system bridge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Gradient,
    Observer,
}

/// Time-stamped history of an estimator run. Arcs share the run's realized
/// hybrid time domain; optional entries depend on the estimator kind.
#[derive(Debug, Clone)]
pub struct EstimatorTrace {
    pub kind: TraceKind,
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub theta_hat: HybridArc,
    /// `theta_hat - theta`, recorded when the true parameters are known.
    pub theta_err: Option<HybridArc>,
    /// The regressor driving a gradient run.
    pub psi: Option<HybridArc>,
    pub x_hat: Option<HybridArc>,
    /// `e = x - x_hat`.
    pub state_err: Option<HybridArc>,
    /// Filtered regressor driven along flows (`Gamma_c`).
    pub filter_c: Option<HybridArc>,
    /// Filtered regressor driven across jumps (`Gamma_d`).
    pub filter_d: Option<HybridArc>,
    /// The switched regressor of the observer: `Gamma_c^T H^T` on flow
    /// samples, the pre-jump `Gamma_d^T H^T` at jump instants.
    pub psi_bar: Option<HybridArc>,
    /// Normalised jump quadratic form built from `psi_bar`.
    pub sigma: Option<HybridArc>,
    /// Internal-model diagnostic `eta = e + Gamma_c theta_err` on flow
    /// samples.
    pub eta: Option<HybridArc>,
}

impl EstimatorTrace {
    /// Named arcs present in this trace, for export.
    pub fn arcs(&self) -> Vec<(&'static str, &HybridArc)> {
        let mut out: Vec<(&'static str, &HybridArc)> = vec![("theta_hat", &self.theta_hat)];
        let optional: [(&'static str, &Option<HybridArc>); 8] = [
            ("theta_err", &self.theta_err),
            ("psi", &self.psi),
            ("x_hat", &self.x_hat),
            ("state_err", &self.state_err),
            ("filter_c", &self.filter_c),
            ("filter_d", &self.filter_d),
            ("psi_bar", &self.psi_bar),
            ("sigma", &self.sigma),
        ];
        for (name, arc) in optional {
            if let Some(arc) = arc {
                out.push((name, arc));
            }
        }
        if let Some(arc) = &self.eta {
            out.push(("eta", arc));
        }
        out
    }

    /// Euclidean norm of the final parameter-error sample, when recorded.
    pub fn final_theta_err_norm(&self) -> Option<f64> {
        self.theta_err.as_ref().map(|arc| arc.terminal_value().norm())
    }

    /// Euclidean norm of the final state-error sample, when recorded.
    pub fn final_state_err_norm(&self) -> Option<f64> {
        self.state_err.as_ref().map(|arc| arc.terminal_value().norm())
    }
}
