use thiserror::Error;

use crate::hybrid_time::HybridArc;
use crate::linalg::AffineSet;

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("comparison arc must be scalar and nonnegative; found {value} at (t={t}, j={j})")]
    NegativeArcValue { t: f64, j: u32, value: f64 },
    #[error("arc must be scalar for this check, shape is {0}x{1}")]
    NotScalar(usize, usize),
    #[error("arc has no samples")]
    EmptyArc,
}

/// Result of the hybrid comparison check `v(t,j) <= exp(-a(t+j)) v0 + c b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonVerdict {
    pub holds: bool,
    /// First sample violating the bound, if any.
    pub first_violation: Option<(f64, u32)>,
}

/// Verify pointwise that a nonnegative scalar arc obeys the decay-plus-offset
/// bound of the hybrid comparison principle, with hybrid time elapsed from
/// the arc's start.
pub fn check_comparison_lemma(
    v: &HybridArc,
    a: f64,
    b: f64,
    c: f64,
) -> Result<ComparisonVerdict, CheckError> {
    assert!(a > 0.0 && c > 0.0 && b >= 0.0, "need a, c > 0 and b >= 0");
    let (r, cshape) = v.shape();
    if (r, cshape) != (1, 1) {
        return Err(CheckError::NotScalar(r, cshape));
    }
    let v0 = v.iter_samples().next().map(|(_, _, m)| m[(0, 0)]).ok_or(CheckError::EmptyArc)?;
    let slack = 1e-12 * v0.abs().max(1.0);
    for (t, j, value) in v.iter_samples() {
        let x = value[(0, 0)];
        if x < -slack {
            return Err(CheckError::NegativeArcValue { t, j, value: x });
        }
        let s = v.domain().elapsed(t, j);
        let bound = (-a * s).exp() * v0 + c * b;
        if x > bound + slack {
            return Ok(ComparisonVerdict { holds: false, first_violation: Some((t, j)) });
        }
    }
    Ok(ComparisonVerdict { holds: true, first_violation: None })
}

/// Result of the exponential-envelope check.
#[derive(Debug, Clone, PartialEq)]
pub struct UesVerdict {
    pub holds: bool,
    /// Minimum over samples of `envelope - |phi|_A`; nonnegative when the
    /// bound holds.
    pub margin: f64,
}

/// Pointwise verification of `|phi(t,j)|_A <= kappa |x0|_A exp(-lambda s)`
/// with `s` the hybrid time elapsed from the arc's start.
pub fn check_ues_bound(
    arc: &HybridArc,
    kappa: f64,
    lambda: f64,
    set: Option<&AffineSet>,
) -> Result<UesVerdict, CheckError> {
    assert!(kappa > 0.0 && lambda > 0.0, "need kappa, lambda > 0");
    let dim = arc.shape().0 * arc.shape().1;
    let origin = AffineSet::origin(dim);
    let set = set.unwrap_or(&origin);
    let mut samples = arc.iter_samples();
    let first = samples.next().ok_or(CheckError::EmptyArc)?;
    let x0 = set.distance(&nalgebra::DVector::from_column_slice(first.2.as_slice()));

    let mut margin = f64::INFINITY;
    for (t, j, value) in arc.iter_samples() {
        let d = set.distance(&nalgebra::DVector::from_column_slice(value.as_slice()));
        let s = arc.domain().elapsed(t, j);
        let envelope = kappa * x0 * (-lambda * s).exp();
        margin = margin.min(envelope - d);
    }
    Ok(UesVerdict { holds: margin >= -1e-9 * x0.max(1.0), margin })
}

/// Fit exponential-envelope constants to the leading part of an arc: the
/// decay rate comes from a log-linear regression over the first
/// `fit_fraction` of the elapsed hybrid time, and the overshoot is the
/// smallest one making the envelope majorise that window. The fitted pair is
/// meant to be verified on the remainder with [`check_ues_bound`].
pub fn fit_ues_envelope(arc: &HybridArc, fit_fraction: f64) -> Option<(f64, f64)> {
    assert!(fit_fraction > 0.0 && fit_fraction <= 1.0);
    let (t_end, j_end) = arc.domain().end();
    let span = arc.domain().elapsed(t_end, j_end);
    let cutoff = span * fit_fraction;
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut norm0 = None;
    for (t, j, v) in arc.iter_samples() {
        let s = arc.domain().elapsed(t, j);
        let n = v.norm();
        if norm0.is_none() {
            norm0 = Some(n);
        }
        if s <= cutoff && n > 1e-14 {
            pts.push((s, n.ln()));
        }
    }
    let norm0 = norm0?;
    if pts.len() < 2 || norm0 <= 1e-14 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let lambda = (-slope).max(1e-9);
    let mut kappa: f64 = 0.0;
    for (s, ln_n) in &pts {
        kappa = kappa.max((ln_n.exp() * (lambda * s).exp()) / norm0);
    }
    Some((kappa.max(1.0), lambda))
}
