use super::pe::check_hpe;
use super::{ExcitationError, ExcitationReport};
use crate::hybrid_time::HybridArc;

/// Result of a window-length sweep: the grid point with the largest uniform
/// bound, plus the full curve.
#[derive(Debug, Clone)]
pub struct BestWindow {
    pub best_k: f64,
    pub best_mu: f64,
    /// `(K, mu)` for every grid point, in grid order.
    pub curve: Vec<(f64, f64)>,
    pub best_report: ExcitationReport,
}

/// Sweep the hybrid excitation check over a grid of window lengths and keep
/// the one with the largest scanned minimum.
pub fn search_best_window(
    a: &HybridArc,
    b: &HybridArc,
    k_grid: &[f64],
    scan_stride: f64,
) -> Result<BestWindow, ExcitationError> {
    assert!(!k_grid.is_empty(), "window-length grid must be nonempty");
    let mut curve = Vec::with_capacity(k_grid.len());
    let mut best: Option<(f64, ExcitationReport)> = None;
    for &k in k_grid {
        let report = check_hpe(a, b, k, scan_stride)?;
        curve.push((k, report.mu));
        let better = best.as_ref().is_none_or(|(_, r)| report.mu > r.mu);
        if better {
            best = Some((k, report));
        }
    }
    let (best_k, best_report) = best.expect("nonempty grid");
    Ok(BestWindow { best_k, best_mu: best_report.mu, curve, best_report })
}
