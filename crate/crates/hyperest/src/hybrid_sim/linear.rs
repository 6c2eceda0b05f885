use nalgebra::{DMatrix, DVector};

use super::{SimConfig, SimError};
use crate::hybrid_time::{HybridArc, HybridTimeDomain};

/// The linear time-varying hybrid system driven by an exogenous domain:
/// flows as `zeta' = -A(t,j) zeta + nu(t,j)` on interval interiors and jumps
/// as `zeta+ = [I - B(t,j)] zeta + nu(t,j)` exactly when the domain jumps.
#[derive(Debug, Clone)]
pub struct LinearHybridSystem {
    domain: HybridTimeDomain,
    a: HybridArc,
    b: HybridArc,
    nu: Option<HybridArc>,
}

impl LinearHybridSystem {
    pub fn new(a: HybridArc, b: HybridArc, nu: Option<HybridArc>) -> Result<Self, SimError> {
        if a.domain() != b.domain() {
            return Err(SimError::DimensionMismatch(
                "A and B must share one hybrid time domain".into(),
            ));
        }
        let (r, c) = a.shape();
        if r != c {
            return Err(SimError::DimensionMismatch(format!("A must be square, got {r}x{c}")));
        }
        if b.shape() != (r, c) {
            return Err(SimError::DimensionMismatch(format!(
                "B shape {:?} does not match A shape {:?}",
                b.shape(),
                a.shape()
            )));
        }
        if let Some(nu) = &nu {
            if nu.domain() != a.domain() {
                return Err(SimError::DimensionMismatch("nu must share the domain of A".into()));
            }
            if nu.shape() != (r, 1) {
                return Err(SimError::DimensionMismatch(format!(
                    "nu shape {:?} does not match state dimension {r}",
                    nu.shape()
                )));
            }
        }
        let domain = a.domain().clone();
        Ok(LinearHybridSystem { domain, a, b, nu })
    }

    pub fn homogeneous(a: HybridArc, b: HybridArc) -> Result<Self, SimError> {
        LinearHybridSystem::new(a, b, None)
    }

    pub fn dim(&self) -> usize {
        self.a.shape().0
    }

    pub fn domain(&self) -> &HybridTimeDomain {
        &self.domain
    }

    pub fn a(&self) -> &HybridArc {
        &self.a
    }

    pub fn b(&self) -> &HybridArc {
        &self.b
    }

    pub fn nu(&self) -> Option<&HybridArc> {
        self.nu.as_ref()
    }

    /// Strip the perturbation, keeping only the homogeneous part.
    pub fn without_nu(&self) -> LinearHybridSystem {
        LinearHybridSystem {
            domain: self.domain.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            nu: None,
        }
    }

    fn flow_rhs(&self, t: f64, j: u32, zeta: &DVector<f64>, ignore_nu: bool) -> DVector<f64> {
        let a = self.a.flow_value_at(t, j).expect("flow point inside domain");
        let mut dz = -(&a * zeta);
        if !ignore_nu {
            if let Some(nu) = &self.nu {
                let v = nu.flow_value_at(t, j).expect("flow point inside domain");
                dz += DVector::from_column_slice(v.as_slice());
            }
        }
        dz
    }
}

/// Simulate from `zeta0` at `start` over the remaining part of the system's
/// domain (clipped by the horizon in `cfg`).
pub fn simulate_linear(
    sys: &LinearHybridSystem,
    zeta0: &DVector<f64>,
    start: (f64, u32),
    cfg: &SimConfig,
) -> Result<HybridArc, SimError> {
    if !sys.domain.contains(start.0, start.1) {
        return Err(SimError::StartNotInDomain { t: start.0, j: start.1 });
    }
    let sub = sys.domain.restrict_from(start.0, start.1)?;
    simulate_linear_on(sys, &sub, zeta0, cfg)
}

/// Simulate over an explicit sub-domain of the system's domain (used for
/// window-limited transition matrices). The sub-domain's points must lie in
/// the system domain.
pub fn simulate_linear_on(
    sys: &LinearHybridSystem,
    sub: &HybridTimeDomain,
    zeta0: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<HybridArc, SimError> {
    let m = sys.dim();
    if zeta0.len() != m {
        return Err(SimError::DimensionMismatch(format!(
            "zeta0 has dimension {}, system has {m}",
            zeta0.len()
        )));
    }
    let (t0, j0) = sub.start();
    if !sys.domain.contains(t0, j0) {
        return Err(SimError::StartNotInDomain { t: t0, j: j0 });
    }

    let mut zeta = zeta0.clone();
    let mut blocks: Vec<Vec<(f64, DMatrix<f64>)>> = Vec::new();
    let mut breakpoints: Vec<(f64, f64, u32)> = Vec::new();
    let n_intervals = sub.intervals().len();

    'intervals: for (idx, iv) in sub.intervals().iter().enumerate() {
        let mut block: Vec<(f64, DMatrix<f64>)> = Vec::new();
        let mut t = iv.t_start;
        block.push((t, DMatrix::from_column_slice(m, 1, zeta.as_slice())));
        let mut clipped = false;
        if !iv.is_degenerate() {
            let end = iv.t_end.min(cfg.t_max);
            let len = end - iv.t_start;
            if len > 0.0 {
                let n = ((len / cfg.step - 1e-9).ceil() as usize).max(1);
                let h = len / n as f64;
                for k in 1..=n {
                    let k1 = sys.flow_rhs(t, iv.j, &zeta, false);
                    let k2 = sys.flow_rhs(t + h / 2.0, iv.j, &(&zeta + &k1 * (h / 2.0)), false);
                    let k3 = sys.flow_rhs(t + h / 2.0, iv.j, &(&zeta + &k2 * (h / 2.0)), false);
                    let k4 = sys.flow_rhs(t + h, iv.j, &(&zeta + &k3 * h), false);
                    zeta += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                    t = if k == n { end } else { iv.t_start + h * k as f64 };
                    block.push((t, DMatrix::from_column_slice(m, 1, zeta.as_slice())));
                }
            }
            clipped = end < iv.t_end - 1e-12;
        }
        breakpoints.push((iv.t_start, t, iv.j));
        blocks.push(block);
        if clipped || iv.j - j0 >= cfg.j_max {
            break 'intervals;
        }
        if idx + 1 < n_intervals {
            // Domain jump: apply the jump law with the pre-jump data values.
            let b = sys
                .b
                .pre_jump_value(iv.j)
                .cloned()
                .unwrap_or_else(|| sys.b.value_at(iv.t_end, iv.j).expect("jump value"));
            let eye = DMatrix::<f64>::identity(m, m);
            zeta = (&eye - &b) * &zeta;
            if let Some(nu) = &sys.nu {
                let v = nu
                    .pre_jump_value(iv.j)
                    .cloned()
                    .unwrap_or_else(|| nu.value_at(iv.t_end, iv.j).expect("jump value"));
                zeta += DVector::from_column_slice(v.as_slice());
            }
        }
    }

    // The realized grid is a truncation of an already-validated domain; it
    // may start mid-flow at any (t, j), so skip the fresh-domain checks.
    let intervals = breakpoints
        .iter()
        .map(|&(t_start, t_end, j)| crate::hybrid_time::Interval { t_start, t_end, j })
        .collect();
    let domain = HybridTimeDomain::from_intervals_unchecked(intervals);
    HybridArc::new(domain, blocks).map_err(|e| SimError::DimensionMismatch(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid_time::HybridTimeDomain;

    fn eye_arc(dom: &HybridTimeDomain, dt: f64, scale: f64, m: usize) -> HybridArc {
        HybridArc::constant(dom, dt, DMatrix::<f64>::identity(m, m) * scale)
    }

    #[test]
    fn scalar_exponential_decay() {
        let dom = HybridTimeDomain::continuous(5.0);
        let a = eye_arc(&dom, 0.005, 1.0, 1);
        let b = eye_arc(&dom, 0.005, 0.0, 1);
        let sys = LinearHybridSystem::homogeneous(a, b).unwrap();
        let arc = simulate_linear(
            &sys,
            &DVector::from_vec(vec![2.0]),
            (0.0, 0),
            &SimConfig::unbounded(0.01),
        )
        .unwrap();
        for (t, _, v) in arc.iter_samples() {
            let expected = 2.0 * (-t).exp();
            assert!(
                (v[(0, 0)] - expected).abs() <= 1e-6 * expected.abs().max(1e-3),
                "t={t}: {} vs {expected}",
                v[(0, 0)]
            );
        }
    }

    #[test]
    fn full_jump_matrix_annihilates_state() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 2.0, 1)]).unwrap();
        let a = eye_arc(&dom, 0.05, 0.0, 2);
        let b = eye_arc(&dom, 0.05, 1.0, 2);
        let sys = LinearHybridSystem::homogeneous(a, b).unwrap();
        let arc = simulate_linear(
            &sys,
            &DVector::from_vec(vec![1.0, -3.0]),
            (0.0, 0),
            &SimConfig::unbounded(0.05),
        )
        .unwrap();
        let post = arc.block(1).unwrap().first().unwrap().1.clone();
        assert!(post.amax() < 1e-14);
    }

    #[test]
    fn solution_domain_matches_restriction() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 3.0, 1), (3.0, 4.0, 2)]).unwrap();
        let a = eye_arc(&dom, 0.05, 0.5, 1);
        let b = eye_arc(&dom, 0.05, 0.2, 1);
        let sys = LinearHybridSystem::homogeneous(a, b).unwrap();
        let arc = simulate_linear(
            &sys,
            &DVector::from_vec(vec![1.0]),
            (2.0, 1),
            &SimConfig::unbounded(0.05),
        )
        .unwrap();
        assert_eq!(arc.domain().start(), (2.0, 1));
        assert_eq!(arc.domain().end(), (4.0, 2));
        assert_eq!(arc.domain().num_jumps(), 1);
    }

    #[test]
    fn start_outside_domain_is_rejected() {
        let dom = HybridTimeDomain::continuous(1.0);
        let a = eye_arc(&dom, 0.1, 1.0, 1);
        let b = eye_arc(&dom, 0.1, 0.0, 1);
        let sys = LinearHybridSystem::homogeneous(a, b).unwrap();
        let res = simulate_linear(
            &sys,
            &DVector::from_vec(vec![1.0]),
            (2.0, 0),
            &SimConfig::unbounded(0.1),
        );
        assert!(matches!(res, Err(SimError::StartNotInDomain { .. })));
    }

    #[test]
    fn linearity_in_the_initial_condition() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.5, 0), (1.5, 3.0, 1)]).unwrap();
        let a = HybridArc::sample(
            &dom,
            0.01,
            |t, _| DMatrix::from_row_slice(2, 2, &[t.sin().powi(2), 0.1, 0.1, 0.3]),
            None,
        );
        let b =
            HybridArc::constant(&dom, 0.01, DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.4]));
        let sys = LinearHybridSystem::homogeneous(a, b).unwrap();
        let cfg = SimConfig::unbounded(0.02);
        let z1 = DVector::from_vec(vec![1.0, -1.0]);
        let z2 = DVector::from_vec(vec![0.5, 2.0]);
        let combo = &z1 * 0.3 + &z2 * (-1.7);
        let s1 = simulate_linear(&sys, &z1, (0.0, 0), &cfg).unwrap();
        let s2 = simulate_linear(&sys, &z2, (0.0, 0), &cfg).unwrap();
        let sc = simulate_linear(&sys, &combo, (0.0, 0), &cfg).unwrap();
        for ((t, j, vc), (_, _, v1)) in sc.iter_samples().zip(s1.iter_samples()) {
            let v2 = s2.value_at(t, j).unwrap();
            let lin = v1 * 0.3 + v2 * (-1.7);
            assert!((vc - lin).amax() < 1e-8, "at ({t},{j})");
        }
    }
}
