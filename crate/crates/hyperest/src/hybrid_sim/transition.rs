use nalgebra::{DMatrix, DVector};

use super::linear::{simulate_linear_on, LinearHybridSystem};
use super::{SimConfig, SimError};
use crate::hybrid_time::{HybridArc, HybridTimeDomain};

/// The hybrid transition matrix `M((t,j),(t0,j0))` of the homogeneous part of
/// a linear hybrid system, stored as a matrix-valued arc over the sub-domain
/// from the base point. Its value at the base is the identity.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub base: (f64, u32),
    pub values: HybridArc,
}

impl TransitionMatrix {
    /// Evaluate `M((t,j), base)`.
    pub fn eval(&self, t: f64, j: u32) -> Option<DMatrix<f64>> {
        self.values.value_at(t, j)
    }
}

/// Compute the transition matrix from `base` over the remaining domain.
/// Column `k` is the homogeneous solution from the `k`-th basis vector.
pub fn transition_matrix(
    sys: &LinearHybridSystem,
    base: (f64, u32),
    cfg: &SimConfig,
) -> Result<TransitionMatrix, SimError> {
    if !sys.domain().contains(base.0, base.1) {
        return Err(SimError::StartNotInDomain { t: base.0, j: base.1 });
    }
    let sub = sys.domain().restrict_from(base.0, base.1)?;
    transition_matrix_on(sys, &sub, cfg)
}

/// Transition matrix over an explicit sub-domain whose start is the base
/// point (used for window-limited observability Gramians).
pub fn transition_matrix_on(
    sys: &LinearHybridSystem,
    sub: &HybridTimeDomain,
    cfg: &SimConfig,
) -> Result<TransitionMatrix, SimError> {
    let m = sys.dim();
    let homogeneous = sys.without_nu();
    let mut columns: Vec<HybridArc> = Vec::with_capacity(m);
    for k in 0..m {
        let mut e = DVector::zeros(m);
        e[k] = 1.0;
        columns.push(simulate_linear_on(&homogeneous, sub, &e, cfg)?);
    }

    // Zip the column arcs (identical grids by construction) into one
    // matrix-valued arc.
    let dom = columns[0].domain().clone();
    let mut samples: Vec<Vec<(f64, DMatrix<f64>)>> = Vec::with_capacity(dom.intervals().len());
    for (bi, iv) in dom.intervals().iter().enumerate() {
        let first = columns[0].block(iv.j).unwrap();
        let mut block: Vec<(f64, DMatrix<f64>)> = Vec::with_capacity(first.len());
        for (si, (t, _)) in first.iter().enumerate() {
            let mut mat = DMatrix::zeros(m, m);
            for (k, col) in columns.iter().enumerate() {
                let v = &col.blocks()[bi][si].1;
                for r in 0..m {
                    mat[(r, k)] = v[(r, 0)];
                }
            }
            block.push((*t, mat));
        }
        samples.push(block);
    }
    let values =
        HybridArc::new(dom, samples).map_err(|e| SimError::DimensionMismatch(e.to_string()))?;
    Ok(TransitionMatrix { base: sub.start(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid_time::HybridTimeDomain;

    #[test]
    fn identity_at_base_and_everywhere_for_zero_dynamics() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 2.0, 1)]).unwrap();
        let zero = HybridArc::constant(&dom, 0.1, DMatrix::zeros(2, 2));
        let sys = LinearHybridSystem::homogeneous(zero.clone(), zero).unwrap();
        let tm = transition_matrix(&sys, (0.0, 0), &SimConfig::unbounded(0.1)).unwrap();
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((tm.eval(0.0, 0).unwrap() - &eye).amax() < 1e-14);
        assert!((tm.eval(2.0, 1).unwrap() - &eye).amax() < 1e-14);
    }

    #[test]
    fn semigroup_property_holds() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 2.5, 1)]).unwrap();
        let a = HybridArc::sample(
            &dom,
            0.005,
            |t, _| DMatrix::from_row_slice(2, 2, &[t.sin().powi(2), 0.0, 0.0, 0.2]),
            None,
        );
        let b = HybridArc::constant(
            &dom,
            0.005,
            DMatrix::from_row_slice(2, 2, &[0.1111, 0.2222, 0.2222, 0.4444]),
        );
        let sys = LinearHybridSystem::homogeneous(a, b).unwrap();
        let cfg = SimConfig::unbounded(0.01);
        let m_from_start = transition_matrix(&sys, (0.0, 0), &cfg).unwrap();
        let mid = (1.5, 1u32);
        let m_from_mid = transition_matrix(&sys, mid, &cfg).unwrap();
        let end = (2.5, 1u32);
        let direct = m_from_start.eval(end.0, end.1).unwrap();
        let composed =
            m_from_mid.eval(end.0, end.1).unwrap() * m_from_start.eval(mid.0, mid.1).unwrap();
        assert!((direct - composed).amax() < 1e-6);
    }
}
