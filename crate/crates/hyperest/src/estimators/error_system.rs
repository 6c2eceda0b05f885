use nalgebra::DMatrix;

use super::{EstimatorError, EstimatorTrace, TraceKind};
use crate::hybrid_sim::LinearHybridSystem;
use crate::hybrid_time::HybridArc;

/// The `(A, B)` pair of the gradient error dynamics for a regressor:
/// `A = gamma_c psi psi^T` and `B = gamma_d psi psi^T / (1 + gamma_d
/// |psi|^2)`, evaluated pointwise over the regressor's sample grid.
pub fn gradient_error_pair(psi: &HybridArc, gamma_c: f64, gamma_d: f64) -> (HybridArc, HybridArc) {
    let a = psi.map(|p| p * p.transpose() * gamma_c);
    let b = psi.map(|p| {
        let denom = 1.0 + gamma_d * p.norm_squared();
        p * p.transpose() * (gamma_d / denom)
    });
    (a, b)
}

/// Bridge an estimator trace back to the linear error system whose
/// excitation properties decide convergence.
///
/// For a gradient trace this is the parameter-error system itself, so
/// simulating it from `theta_err(0)` reproduces the recorded error. For an
/// observer trace it is the pair `(psi_bar psi_bar^T, Sigma)` whose hybrid
/// excitation the convergence condition requires; the flow part carries no
/// adaptation gain there.
pub fn build_error_system(trace: &EstimatorTrace) -> Result<LinearHybridSystem, EstimatorError> {
    match trace.kind {
        TraceKind::Gradient => {
            let psi = trace.psi.as_ref().ok_or(EstimatorError::MissingRegressor)?;
            let (a, b) = gradient_error_pair(psi, trace.gamma_c, trace.gamma_d);
            Ok(LinearHybridSystem::homogeneous(a, b)?)
        }
        TraceKind::Observer => {
            let psi_bar = trace.psi_bar.as_ref().ok_or(EstimatorError::MissingRegressor)?;
            let a = psi_bar.map(|p| p * p.transpose());
            let gamma_d = trace.gamma_d;
            let b = match &trace.sigma {
                Some(sigma) => sigma.clone(),
                None => psi_bar.map(|p| {
                    let denom = 1.0 + gamma_d * p.norm_squared();
                    p * p.transpose() * (gamma_d / denom)
                }),
            };
            Ok(LinearHybridSystem::homogeneous(a, b)?)
        }
    }
}

/// Check that every pre-jump value of the system's jump matrix has spectral
/// radius at most one plus `tol`; returns the worst eigenvalue seen. For the
/// gradient pair this bound is automatic.
pub fn max_jump_eigenvalue(sys: &LinearHybridSystem) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (_, j) in sys.domain().jump_instants() {
        let b: &DMatrix<f64> = sys.b().pre_jump_value(j).expect("jump value");
        let sym = (b + b.transpose()) * 0.5;
        worst = worst.max(crate::linalg::lambda_max(&sym));
    }
    worst
}
