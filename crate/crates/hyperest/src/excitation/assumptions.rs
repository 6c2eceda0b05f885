use nalgebra::DMatrix;

use super::ExcitationError;
use crate::hybrid_sim::LinearHybridSystem;
use crate::hybrid_time::HybridArc;
use crate::linalg::{lambda_max, lambda_min, spectral_norm, symmetric_eigen};

/// Slack allowed when testing the matrix inequalities; absorbs roundoff and
/// the finite-difference error of arc-valued `P`.
pub const ASSUMPTION_TOL: f64 = 1e-6;

/// The Lyapunov weight of a certificate: a constant matrix or an arc.
#[derive(Debug, Clone)]
pub enum CertMatrix {
    Constant(DMatrix<f64>),
    Arc(HybridArc),
}

/// Data certifying the non-strict Lyapunov inequalities for a pair `(A, B)`:
/// a symmetric weight `P` with uniform eigenvalue bounds `p1 <= P <= p2` and
/// positive semidefinite rates `Q_c` (flows) and `Q_d` (jumps).
#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub p: CertMatrix,
    pub p1: f64,
    pub p2: f64,
    pub q_c: HybridArc,
    pub q_d: HybridArc,
}

impl LyapunovCertificate {
    pub fn new(
        p: CertMatrix,
        p1: f64,
        p2: f64,
        q_c: HybridArc,
        q_d: HybridArc,
    ) -> Result<Self, ExcitationError> {
        if q_c.domain() != q_d.domain() {
            return Err(ExcitationError::DomainMismatch);
        }
        assert!(p1 > 0.0 && p2 >= p1, "need 0 < p1 <= p2");
        let check_p = |m: &DMatrix<f64>| {
            let eig = symmetric_eigen(m);
            assert!(
                eig.lambda_min() >= p1 - 1e-9 && eig.lambda_max() <= p2 + 1e-9,
                "P eigenvalues must lie within [p1, p2]"
            );
        };
        match &p {
            CertMatrix::Constant(m) => check_p(m),
            CertMatrix::Arc(arc) => {
                if arc.domain() != q_c.domain() {
                    return Err(ExcitationError::DomainMismatch);
                }
                for (_, _, m) in arc.iter_samples() {
                    check_p(m);
                }
            }
        }
        for arc in [&q_c, &q_d] {
            for (t, j, m) in arc.iter_samples() {
                assert!(
                    lambda_min(m) >= -1e-9,
                    "Q must be positive semidefinite at every sample (violated at t={t}, j={j})"
                );
            }
        }
        Ok(LyapunovCertificate { p, p1, p2, q_c, q_d })
    }

    /// The substitution available under the structural assumptions
    /// (symmetric PSD pair with the jump part bounded by one): `P = I`,
    /// `Q_c = A`, `Q_d = B`.
    pub fn structural(a: &HybridArc, b: &HybridArc) -> Result<Self, ExcitationError> {
        let m = a.shape().0;
        LyapunovCertificate::new(
            CertMatrix::Constant(DMatrix::identity(m, m)),
            1.0,
            1.0,
            a.clone(),
            b.clone(),
        )
    }

    fn p_at(&self, t: f64, j: u32) -> DMatrix<f64> {
        match &self.p {
            CertMatrix::Constant(m) => m.clone(),
            CertMatrix::Arc(arc) => arc.value_at(t, j).expect("P defined on the shared domain"),
        }
    }

    fn p_pre_jump(&self, j: u32) -> DMatrix<f64> {
        match &self.p {
            CertMatrix::Constant(m) => m.clone(),
            CertMatrix::Arc(arc) => {
                arc.pre_jump_value(j).cloned().expect("P defined at the jump instant")
            }
        }
    }
}

/// Verdict for one verified inequality: the worst margin is the largest
/// left-hand-side eigenvalue seen (non-positive when the inequality holds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemVerdict {
    pub holds: bool,
    pub worst_margin: f64,
    pub worst_at: (f64, u32),
}

impl ItemVerdict {
    fn collect(mut margins: impl Iterator<Item = (f64, (f64, u32))>, tol: f64) -> ItemVerdict {
        let first = margins.next().unwrap_or((f64::NEG_INFINITY, (0.0, 0)));
        let mut worst = first;
        for m in margins {
            if m.0 > worst.0 {
                worst = m;
            }
        }
        ItemVerdict { holds: worst.0 <= tol, worst_margin: worst.0, worst_at: worst.1 }
    }
}

/// Reported uniform bounds on the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub a_bar: f64,
    pub b_bar: f64,
    pub holds: bool,
}

/// Outcome of the numerical assumption verification.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Flow inequality `Pdot - A^T P - P A + Q_c <= 0` at interior samples.
    pub a1_flow: ItemVerdict,
    /// Jump inequality `[I-B]^T P+ [I-B] - P + Q_d <= 0` at jump instants.
    pub a1_jump: ItemVerdict,
    /// Uniform bounds on `|A|` and `|B|`.
    pub a2: BoundReport,
    /// Structural properties: symmetry, positive semidefiniteness, and
    /// `|B| <= 1` pointwise.
    pub a3: ItemVerdict,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.a1_flow.holds && self.a1_jump.holds && self.a2.holds && self.a3.holds
    }
}

/// Time derivative of `P` along the flow grid of block `j`: central
/// differences at interior samples, one-sided at block endpoints, zero for
/// constant `P`.
fn p_dot(
    cert: &LyapunovCertificate,
    block: &[(f64, DMatrix<f64>)],
    idx: usize,
    j: u32,
) -> DMatrix<f64> {
    match &cert.p {
        CertMatrix::Constant(m) => DMatrix::zeros(m.nrows(), m.ncols()),
        CertMatrix::Arc(_) => {
            let at = |k: usize| -> (f64, DMatrix<f64>) {
                let t = block[k].0;
                (t, cert.p_at(t, j))
            };
            if block.len() < 2 {
                let m = cert.p_at(block[0].0, j);
                return DMatrix::zeros(m.nrows(), m.ncols());
            }
            let (lo, hi) = if idx == 0 {
                (0, 1)
            } else if idx + 1 == block.len() {
                (block.len() - 2, block.len() - 1)
            } else {
                (idx - 1, idx + 1)
            };
            let (t0, p0) = at(lo);
            let (t1, p1) = at(hi);
            (p1 - p0) / (t1 - t0)
        }
    }
}

/// Numerically verify the Lyapunov inequalities, the uniform bounds, and the
/// structural properties for a linear hybrid system against a certificate.
pub fn verify_assumptions(
    sys: &LinearHybridSystem,
    cert: &LyapunovCertificate,
) -> Result<AssumptionReport, ExcitationError> {
    if cert.q_c.domain() != sys.domain() || cert.q_d.domain() != sys.domain() {
        return Err(ExcitationError::DomainMismatch);
    }
    let a = sys.a();
    let b = sys.b();
    let m = sys.dim();
    let eye = DMatrix::<f64>::identity(m, m);

    // A1, flow: at samples interior to each block (the inequality quantifies
    // over interval interiors; jump-instant samples carry the jump data).
    let mut flow_margins: Vec<(f64, (f64, u32))> = Vec::new();
    for (idx, iv) in a.domain().intervals().iter().enumerate() {
        let block = &a.blocks()[idx];
        if block.len() <= 2 {
            continue;
        }
        for si in 1..block.len() - 1 {
            let (t, aval) = (&block[si].0, &block[si].1);
            let p = cert.p_at(*t, iv.j);
            let pd = p_dot(cert, block, si, iv.j);
            let qc = cert.q_c.value_at(*t, iv.j).expect("shared domain");
            let lhs = pd - aval.transpose() * &p - &p * aval + qc;
            let sym = (&lhs + lhs.transpose()) * 0.5;
            flow_margins.push((lambda_max(&sym), (*t, iv.j)));
        }
    }
    let a1_flow = if flow_margins.is_empty() {
        ItemVerdict { holds: true, worst_margin: 0.0, worst_at: a.domain().start() }
    } else {
        ItemVerdict::collect(flow_margins.into_iter(), ASSUMPTION_TOL)
    };

    // A1, jump: at every jump instant, with the post-jump P value.
    let mut jump_margins: Vec<(f64, (f64, u32))> = Vec::new();
    for (t_jump, j) in a.domain().jump_instants() {
        let bval = b.pre_jump_value(j).expect("jump instant");
        let p_pre = cert.p_pre_jump(j);
        let p_post = cert.p_at(t_jump, j + 1);
        let qd = cert.q_d.pre_jump_value(j).expect("jump instant");
        let ib = &eye - bval;
        let lhs = ib.transpose() * p_post * &ib - p_pre + qd;
        let sym = (&lhs + lhs.transpose()) * 0.5;
        jump_margins.push((lambda_max(&sym), (t_jump, j)));
    }
    let a1_jump = if jump_margins.is_empty() {
        ItemVerdict { holds: true, worst_margin: 0.0, worst_at: a.domain().start() }
    } else {
        ItemVerdict::collect(jump_margins.into_iter(), ASSUMPTION_TOL)
    };

    // A2: uniform bounds (always finite on a finite sampled domain).
    let a_bar = a.iter_samples().map(|(_, _, v)| spectral_norm(v)).fold(0.0, f64::max);
    let b_bar = b.iter_samples().map(|(_, _, v)| spectral_norm(v)).fold(0.0, f64::max);
    let a2 = BoundReport { a_bar, b_bar, holds: a_bar.is_finite() && b_bar.is_finite() };

    // A3: symmetry and positive semidefiniteness of both signals, plus
    // |B| <= 1. Margin is the worst constraint violation.
    let mut a3_margins: Vec<(f64, (f64, u32))> = Vec::new();
    for (arc, bounded_by_one) in [(a, false), (b, true)] {
        for (t, j, v) in arc.iter_samples() {
            let asym = (v - v.transpose()).amax();
            let sym = (v + v.transpose()) * 0.5;
            let psd_violation = (-lambda_min(&sym)).max(0.0);
            let mut margin = asym.max(psd_violation);
            if bounded_by_one {
                margin = margin.max(lambda_max(&sym) - 1.0);
            }
            a3_margins.push((margin, (t, j)));
        }
    }
    let a3 = ItemVerdict::collect(a3_margins.into_iter(), 1e-9);

    Ok(AssumptionReport { a1_flow, a1_jump, a2, a3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid_time::HybridTimeDomain;
    use nalgebra::DVector;
    use std::f64::consts::PI;

    fn gradient_pair(gamma: f64) -> (HybridArc, HybridArc) {
        let dom = HybridTimeDomain::new(&[(0.0, 2.0 * PI, 0), (2.0 * PI, 4.0 * PI, 1)]).unwrap();
        let psi_jump = DVector::from_vec(vec![0.5, 1.0]);
        let jump = {
            let pj = psi_jump.clone();
            move |_: f64, _: u32| &pj * pj.transpose() * gamma
        };
        let a = HybridArc::sample(
            &dom,
            0.01,
            move |t, _| {
                let p = DVector::from_vec(vec![t.sin(), 0.0]);
                &p * p.transpose() * gamma
            },
            Some(&jump),
        );
        let denom = 1.0 + gamma * psi_jump.norm_squared();
        let b = HybridArc::constant(&dom, 0.01, &psi_jump * psi_jump.transpose() * (gamma / denom));
        (a, b)
    }

    #[test]
    fn structural_substitution_satisfies_all_assumptions() {
        let (a, b) = gradient_pair(1.0);
        let sys = LinearHybridSystem::homogeneous(a.clone(), b.clone()).unwrap();
        let cert = LyapunovCertificate::structural(&a, &b).unwrap();
        let report = verify_assumptions(&sys, &cert).unwrap();
        assert!(report.all_hold(), "{report:?}");
        assert!(report.a2.a_bar <= 1.3);
        assert!(report.a2.b_bar <= 1.0 + 1e-12);
    }

    #[test]
    fn zero_system_holds_with_zero_margin() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 2.0, 1)]).unwrap();
        let z = HybridArc::constant(&dom, 0.1, DMatrix::zeros(2, 2));
        let sys = LinearHybridSystem::homogeneous(z.clone(), z.clone()).unwrap();
        let cert = LyapunovCertificate::new(
            CertMatrix::Constant(DMatrix::identity(2, 2)),
            1.0,
            1.0,
            z.clone(),
            z.clone(),
        )
        .unwrap();
        let report = verify_assumptions(&sys, &cert).unwrap();
        assert!(report.all_hold());
        assert!(report.a1_flow.worst_margin.abs() < 1e-12);
        assert!(report.a1_jump.worst_margin.abs() < 1e-12);
    }

    #[test]
    fn oversized_jump_matrix_fails_structural_check() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 2.0, 1)]).unwrap();
        let a = HybridArc::constant(&dom, 0.1, DMatrix::zeros(2, 2));
        let b = HybridArc::constant(&dom, 0.1, DMatrix::identity(2, 2) * 2.0);
        let sys = LinearHybridSystem::homogeneous(a.clone(), b.clone()).unwrap();
        let cert = LyapunovCertificate::new(
            CertMatrix::Constant(DMatrix::identity(2, 2)),
            1.0,
            1.0,
            a.clone(),
            a.clone(),
        )
        .unwrap();
        let report = verify_assumptions(&sys, &cert).unwrap();
        assert!(!report.a3.holds);
        assert!((report.a3.worst_margin - 1.0).abs() < 1e-9, "margin {}", report.a3.worst_margin);
    }
}
