//! Certification of excitation properties for hybrid signal pairs.
//!
//! Three windowed positivity checks are provided: the classical
//! continuous-time one (CPE, sliding ordinary-time integrals of `psi psi^T`),
//! the classical discrete-time one (DPE, sliding sums over jump samples),
//! and the hybrid one (HPE, hybrid integrals of a pair `(A, B)` that places
//! `A` on flow interiors and `B` at jump instants). A fourth check (HUO)
//! weighs a certificate pair `(Q_c, Q_d)` with hybrid transition matrices,
//! i.e. an observability-Gramian condition.
//!
//! The definitions quantify over every base point of the domain; the checks
//! scan a finite grid of bases (a configurable stride along flows plus every
//! jump instant) and report the scanned minimum together with the worst
//! window and a witness direction.

mod assumptions;
mod pe;
mod report;
mod search;

pub use assumptions::{
    verify_assumptions, AssumptionReport, BoundReport, CertMatrix, ItemVerdict, LyapunovCertificate,
};
pub use pe::{build_phi_ab, check_cpe, check_dpe, check_hpe, check_huo};
pub use report::{write_report, write_windows_csv};
pub use search::{search_best_window, BestWindow};

use nalgebra::DVector;
use thiserror::Error;

use crate::hybrid_sim::SimError;
use crate::hybrid_time::DomainError;

/// Verdict threshold: strict positivity of the scanned minimum eigenvalue is
/// replaced by this tolerance, since floating-point Gramians are never
/// exactly singular.
pub const DEFAULT_MU_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcitationKind {
    Cpe,
    Dpe,
    Hpe,
    Huo,
}

impl std::fmt::Display for ExcitationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExcitationKind::Cpe => write!(f, "CPE"),
            ExcitationKind::Dpe => write!(f, "DPE"),
            ExcitationKind::Hpe => write!(f, "HPE"),
            ExcitationKind::Huo => write!(f, "HUO"),
        }
    }
}

/// One scanned window: its base point and the smallest eigenvalue of the
/// window quadratic form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowScan {
    pub base_t: f64,
    pub base_j: u32,
    pub lambda_min: f64,
}

/// Outcome of an excitation scan.
#[derive(Debug, Clone)]
pub struct ExcitationReport {
    pub kind: ExcitationKind,
    pub holds: bool,
    /// Window length used (`K` for HPE/HUO, `T` for CPE, `N` for DPE).
    pub k: f64,
    /// Best uniform lower bound found: the minimum over scanned windows of
    /// the smallest eigenvalue.
    pub mu: f64,
    pub worst_window_base: (f64, u32),
    /// Unit vector minimising the quadratic form on the worst window.
    pub witness: DVector<f64>,
    /// Per-window scan results, for plotting and reporting.
    pub windows: Vec<WindowScan>,
    /// For HUO: whether the supplied certificate passed the assumption checks
    /// (the Gramian is still computed when it did not).
    pub certificate_valid: Option<bool>,
}

impl ExcitationReport {
    /// Verdict at a caller-chosen positivity threshold instead of
    /// [`DEFAULT_MU_TOL`].
    pub fn holds_at(&self, mu_tol: f64) -> bool {
        self.mu > mu_tol
    }
}

#[derive(Debug, Error)]
pub enum ExcitationError {
    #[error("signal domains must match")]
    DomainMismatch,
    #[error("domain too short for window length {k}: total hybrid length {available}")]
    DomainTooShortForK { k: f64, available: f64 },
    #[error("domain span {available} is shorter than the window T={t}")]
    DomainTooShortForT { t: f64, available: f64 },
    #[error("need at least {needed} jump samples, found {available}")]
    TooFewJumps { needed: usize, available: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Sim(#[from] SimError),
}
