use nalgebra::{DMatrix, DVector};

use super::assumptions::{verify_assumptions, LyapunovCertificate};
use super::{ExcitationError, ExcitationKind, ExcitationReport, WindowScan, DEFAULT_MU_TOL};
use crate::hybrid_sim::{transition_matrix_on, LinearHybridSystem, SimConfig};
use crate::hybrid_time::{hybrid_integral_between, window, HybridArc, HybridTimeDomain, TIME_TOL};
use crate::linalg::symmetric_eigen;

/// Base points for a window scan: a stride grid along every interval plus
/// every pre-jump instant, i.e. both sides of each jump.
fn scan_bases(dom: &HybridTimeDomain, stride: f64) -> Vec<(f64, u32)> {
    assert!(stride > 0.0, "scan stride must be positive");
    let mut bases = Vec::new();
    for iv in dom.intervals() {
        let mut t = iv.t_start;
        while t < iv.t_end - TIME_TOL {
            bases.push((t, iv.j));
            t += stride;
        }
        bases.push((iv.t_end, iv.j));
    }
    bases
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn report_from_scans(
    kind: ExcitationKind,
    k: f64,
    scans: Vec<WindowScan>,
    witnesses: Vec<DVector<f64>>,
) -> ExcitationReport {
    let mut mu = f64::INFINITY;
    let mut worst = 0usize;
    for (i, s) in scans.iter().enumerate() {
        if s.lambda_min < mu {
            mu = s.lambda_min;
            worst = i;
        }
    }
    ExcitationReport {
        kind,
        holds: mu > DEFAULT_MU_TOL,
        k,
        mu,
        worst_window_base: (scans[worst].base_t, scans[worst].base_j),
        witness: witnesses[worst].clone(),
        windows: scans,
        certificate_valid: None,
    }
}

/// The hybrid excitation signal of a pair `(A, B)`: flow samples copy `A`,
/// pre-jump values copy `B(t_{j+1}, j)`.
pub fn build_phi_ab(a: &HybridArc, b: &HybridArc) -> Result<HybridArc, ExcitationError> {
    if a.domain() != b.domain() {
        return Err(ExcitationError::DomainMismatch);
    }
    let n_blocks = a.blocks().len();
    let mut samples: Vec<Vec<(f64, DMatrix<f64>)>> = Vec::with_capacity(n_blocks);
    for (idx, block) in a.blocks().iter().enumerate() {
        let j = a.domain().intervals()[idx].j;
        let mut out = block.clone();
        if idx + 1 < n_blocks {
            let last = out.last_mut().expect("nonempty block");
            last.1 = b.pre_jump_value(j).expect("jump follows interval").clone();
        }
        samples.push(out);
    }
    HybridArc::new(a.domain().clone(), samples).map_err(|_| ExcitationError::DomainMismatch)
}

/// Hybrid persistency of excitation: scan base points and require the hybrid
/// integral of `Phi_AB` over every window of hybrid length `k` to stay
/// uniformly positive definite.
pub fn check_hpe(
    a: &HybridArc,
    b: &HybridArc,
    k: f64,
    scan_stride: f64,
) -> Result<ExcitationReport, ExcitationError> {
    if a.domain() != b.domain() {
        return Err(ExcitationError::DomainMismatch);
    }
    let total = a.domain().total_length();
    if total <= k {
        return Err(ExcitationError::DomainTooShortForK { k, available: total });
    }
    let phi = build_phi_ab(a, b)?;
    let dom = phi.domain().clone();

    let mut scans = Vec::new();
    let mut witnesses = Vec::new();
    for (t, j) in scan_bases(&dom, scan_stride) {
        let remaining = dom.length_from(t, j)?;
        if remaining < k - TIME_TOL {
            continue;
        }
        let w = window(&dom, t, j, k)?;
        let g = hybrid_integral_between(&phi, w.base, w.terminal)?;
        let eig = symmetric_eigen(&symmetrized(&g));
        scans.push(WindowScan { base_t: t, base_j: j, lambda_min: eig.lambda_min() });
        witnesses.push(eig.min_vector());
    }
    if scans.is_empty() {
        return Err(ExcitationError::DomainTooShortForK { k, available: total });
    }
    Ok(report_from_scans(ExcitationKind::Hpe, k, scans, witnesses))
}

/// Integral of `psi psi^T` over an ordinary-time range, flow contributions
/// only (jump values carry Lebesgue measure zero).
fn continuous_gram(outer: &HybridArc, tau0: f64, tau1: f64) -> DMatrix<f64> {
    let dom = outer.domain();
    let (r, _) = outer.shape();
    let mut acc = DMatrix::zeros(r, r);
    for iv in dom.intervals() {
        let a = iv.t_start.max(tau0);
        let b = iv.t_end.min(tau1);
        if b - a <= TIME_TOL {
            continue;
        }
        acc += hybrid_integral_between(outer, (a, iv.j), (b, iv.j)).expect("range inside interval");
    }
    acc
}

/// Classical continuous-time PE of a signal over sliding ordinary-time
/// windows of length `t_window`; jump samples are excluded.
pub fn check_cpe(
    psi: &HybridArc,
    t_window: f64,
    scan_stride: f64,
) -> Result<ExcitationReport, ExcitationError> {
    let dom = psi.domain();
    let (t_begin, _) = dom.start();
    let (t_end, _) = dom.end();
    let span = t_end - t_begin;
    if span < t_window {
        return Err(ExcitationError::DomainTooShortForT { t: t_window, available: span });
    }
    // psi psi^T with the pre-jump samples zeroed out of the flow record is
    // not needed: the trapezoid weight of a single endpoint sample vanishes
    // with the grid, and the jump values are exactly the data CPE ignores.
    let outer = psi.map(|v| v * v.transpose());

    let mut scans = Vec::new();
    let mut witnesses = Vec::new();
    let mut tau = t_begin;
    loop {
        let tau_capped = tau.min(t_end - t_window);
        let g = continuous_gram(&outer, tau_capped, tau_capped + t_window);
        let eig = symmetric_eigen(&symmetrized(&g));
        // Report the window by its ordinary-time base; j is the interval
        // holding the base instant.
        let j = dom
            .intervals()
            .iter()
            .find(|iv| iv.contains_t(tau_capped))
            .map(|iv| iv.j)
            .unwrap_or(dom.first_j());
        scans.push(WindowScan { base_t: tau_capped, base_j: j, lambda_min: eig.lambda_min() });
        witnesses.push(eig.min_vector());
        if tau >= t_end - t_window {
            break;
        }
        tau += scan_stride;
    }
    Ok(report_from_scans(ExcitationKind::Cpe, t_window, scans, witnesses))
}

/// Classical discrete-time PE over sliding windows of `n` consecutive jump
/// samples; only the pre-jump values enter the sums.
pub fn check_dpe(psi: &HybridArc, n: usize) -> Result<ExcitationReport, ExcitationError> {
    assert!(n >= 1, "window must contain at least one jump sample");
    let dom = psi.domain();
    let jumps: Vec<(f64, u32)> = dom.jump_instants().collect();
    if jumps.len() < n {
        return Err(ExcitationError::TooFewJumps { needed: n, available: jumps.len() });
    }
    let values: Vec<DMatrix<f64>> = jumps
        .iter()
        .map(|&(_, j)| {
            let v = psi.pre_jump_value(j).expect("jump instant has a pre-jump value");
            v * v.transpose()
        })
        .collect();

    let mut scans = Vec::new();
    let mut witnesses = Vec::new();
    for start in 0..=(jumps.len() - n) {
        let mut g = DMatrix::zeros(values[0].nrows(), values[0].ncols());
        for v in &values[start..start + n] {
            g += v;
        }
        let eig = symmetric_eigen(&symmetrized(&g));
        let (bt, bj) = jumps[start];
        scans.push(WindowScan { base_t: bt, base_j: bj, lambda_min: eig.lambda_min() });
        witnesses.push(eig.min_vector());
    }
    Ok(report_from_scans(ExcitationKind::Dpe, n as f64, scans, witnesses))
}

/// Hybrid uniform observability: for every scanned base, the hybrid integral
/// of `M^T Phi M` over the `k`-window must be uniformly positive definite,
/// where `M` is the transition matrix from the base and `Phi` places `Q_c`
/// on flows and `Q_d` at jumps.
pub fn check_huo(
    sys: &LinearHybridSystem,
    cert: &LyapunovCertificate,
    k: f64,
    scan_stride: f64,
    cfg: &SimConfig,
) -> Result<ExcitationReport, ExcitationError> {
    if cert.q_c.domain() != sys.domain() || cert.q_d.domain() != sys.domain() {
        return Err(ExcitationError::DomainMismatch);
    }
    let dom = sys.domain().clone();
    let total = dom.total_length();
    if total <= k {
        return Err(ExcitationError::DomainTooShortForK { k, available: total });
    }
    let assumptions = verify_assumptions(sys, cert)?;
    let certificate_valid = assumptions.all_hold();

    let m_dim = sys.dim();
    let mut scans = Vec::new();
    let mut witnesses = Vec::new();
    for (t, j) in scan_bases(&dom, scan_stride) {
        let remaining = dom.length_from(t, j)?;
        if remaining < k - TIME_TOL {
            continue;
        }
        let w = window(&dom, t, j, k)?;
        let wdom = HybridTimeDomain::from_intervals_unchecked(w.pieces.clone());
        let tm = transition_matrix_on(sys, &wdom, cfg)?;

        // Assemble M^T Phi M on the transition matrix's own grid, then take
        // its hybrid integral over the window.
        let n_blocks = tm.values.blocks().len();
        let mut samples: Vec<Vec<(f64, DMatrix<f64>)>> = Vec::with_capacity(n_blocks);
        for (idx, block) in tm.values.blocks().iter().enumerate() {
            let jj = tm.values.domain().intervals()[idx].j;
            let followed_by_jump = idx + 1 < n_blocks;
            let mut out = Vec::with_capacity(block.len());
            for (si, (ts, mval)) in block.iter().enumerate() {
                let q = if followed_by_jump && si + 1 == block.len() {
                    cert.q_d.pre_jump_value(jj).expect("jump value").clone()
                } else {
                    cert.q_c.value_at(*ts, jj).expect("flow point inside domain")
                };
                out.push((*ts, symmetrized(&(mval.transpose() * q * mval))));
            }
            samples.push(out);
        }
        let integrand = HybridArc::new(tm.values.domain().clone(), samples)
            .expect("integrand grid mirrors the transition grid");
        let (a0, b0) = integrand.domain().start();
        let (a1, b1) = integrand.domain().end();
        let g = hybrid_integral_between(&integrand, (a0, b0), (a1, b1))?;
        let eig = symmetric_eigen(&symmetrized(&g));
        scans.push(WindowScan { base_t: t, base_j: j, lambda_min: eig.lambda_min() });
        witnesses.push(eig.min_vector());
    }
    if scans.is_empty() {
        return Err(ExcitationError::DomainTooShortForK { k, available: total });
    }
    let mut report = report_from_scans(ExcitationKind::Huo, k, scans, witnesses);
    report.certificate_valid = Some(certificate_valid);
    debug_assert_eq!(m_dim, report.witness.len());
    Ok(report)
}
