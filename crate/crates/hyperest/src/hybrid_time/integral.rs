use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::arc::HybridArc;
use super::domain::{DomainError, TIME_TOL};
use super::window::Window;
use crate::linalg::AffineSet;

#[derive(Debug, Error)]
pub enum NormError {
    #[error("p must satisfy 1 <= p <= infinity, got {0}")]
    InvalidP(f64),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Trapezoidal integral of one arc block over `[a, b]`, a sub-range of the
/// block's interval. Partial end cells use linearly interpolated values.
///
/// When the interval is followed by a jump, its final stored sample is the
/// pre-jump value: jump data, not a flow value, and of Lebesgue measure zero
/// in the flow integral. `exclude_final` makes the last cell use the
/// preceding sample instead (exact for piecewise-constant arcs).
fn trapezoid_over(
    block: &[(f64, DMatrix<f64>)],
    a: f64,
    b: f64,
    shape: (usize, usize),
    exclude_final: bool,
) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(shape.0, shape.1);
    if b - a <= TIME_TOL || block.len() < 2 {
        return acc;
    }
    let sample_value = |pos: usize| -> &DMatrix<f64> {
        if exclude_final && pos + 1 == block.len() && pos > 0 {
            &block[pos - 1].1
        } else {
            &block[pos].1
        }
    };
    let value_at = |t: f64| -> DMatrix<f64> {
        let pos = block.partition_point(|(s, _)| *s <= t);
        if pos == 0 {
            return block[0].1.clone();
        }
        if pos >= block.len() {
            return sample_value(block.len() - 1).clone();
        }
        let (t0, _) = &block[pos - 1];
        let (t1, _) = &block[pos];
        let v0 = sample_value(pos - 1);
        let v1 = sample_value(pos);
        if (t1 - t0).abs() <= f64::EPSILON {
            return v1.clone();
        }
        let w = (t - t0) / (t1 - t0);
        v0 * (1.0 - w) + v1 * w
    };

    let mut prev_t = a;
    let mut prev_v = value_at(a);
    for (pos, (t, _)) in block.iter().enumerate() {
        if *t <= a + f64::EPSILON {
            continue;
        }
        if *t >= b {
            break;
        }
        let v = sample_value(pos);
        acc += (&prev_v + v) * (0.5 * (t - prev_t));
        prev_t = *t;
        prev_v = v.clone();
    }
    let end_v = value_at(b);
    acc += (&prev_v + &end_v) * (0.5 * (b - prev_t));
    acc
}

/// Hybrid integral of `arc` between two points of its domain: the sum of the
/// per-interval flow integrals plus the arc's pre-jump values at every jump
/// instant `(t_{i+1}, i)` with `from.1 <= i < to.1`. Pre-jump samples enter
/// only the jump sum; the flow trapezoid extrapolates over them.
///
/// Additive: splitting at any stored sample point and summing the two halves
/// reproduces the whole, with each jump counted exactly once.
pub fn hybrid_integral_between(
    arc: &HybridArc,
    from: (f64, u32),
    to: (f64, u32),
) -> Result<DMatrix<f64>, DomainError> {
    let dom = arc.domain();
    if !dom.contains(from.0, from.1) {
        return Err(DomainError::PointNotInDomain { t: from.0, j: from.1 });
    }
    if !dom.contains(to.0, to.1) || to.1 < from.1 || (to.1 == from.1 && to.0 < from.0 - TIME_TOL) {
        return Err(DomainError::PointNotInDomain { t: to.0, j: to.1 });
    }
    let shape = arc.shape();
    let last_j = dom.last_j();
    let mut acc = DMatrix::zeros(shape.0, shape.1);
    for j in from.1..=to.1 {
        let iv = dom.interval_for(j).expect("index in range");
        let a = if j == from.1 { from.0 } else { iv.t_start };
        let b = if j == to.1 { to.0 } else { iv.t_end };
        // The final sample of a jump-followed interval is the pre-jump value;
        // it belongs to the jump sum, not to the flow integral.
        let exclude_final = j < last_j;
        acc += trapezoid_over(arc.block(j).unwrap(), a, b, shape, exclude_final);
        if j < to.1 {
            acc += arc.pre_jump_value(j).expect("jump follows interval");
        }
    }
    Ok(acc)
}

/// Hybrid integral of `arc` over a window (flow trapezoids plus the pre-jump
/// values at the window's interior jump instants).
pub fn hybrid_integral(arc: &HybridArc, w: &Window) -> Result<DMatrix<f64>, DomainError> {
    // The window must lie inside the arc's domain.
    if !arc.domain().contains(w.base.0, w.base.1)
        || !arc.domain().contains(w.terminal.0, w.terminal.1)
    {
        return Err(DomainError::PointNotInDomain { t: w.base.0, j: w.base.1 });
    }
    hybrid_integral_between(arc, w.base, w.terminal)
}

fn sample_distance(value: &DMatrix<f64>, set: &AffineSet) -> f64 {
    let flat = DVector::from_column_slice(value.as_slice());
    set.distance(&flat)
}

/// Hybrid `L_p` norm of the arc over its full domain, measured as Euclidean
/// distance to `set` (default: the origin). `p = f64::INFINITY` gives the sup
/// over stored samples. Arcs are finite, so the full domain stands in for
/// unbounded tails; the truncation error is horizon-dependent.
pub fn lp_norm(arc: &HybridArc, p: f64, set: Option<&AffineSet>) -> Result<f64, NormError> {
    if p.is_nan() || p < 1.0 {
        return Err(NormError::InvalidP(p));
    }
    let dim = arc.shape().0 * arc.shape().1;
    let origin = AffineSet::origin(dim);
    let set = set.unwrap_or(&origin);
    if p.is_infinite() {
        return Ok(linf_norm(arc, Some(set)));
    }

    let dist_arc = arc.map(|v| DMatrix::from_element(1, 1, sample_distance(v, set).powf(p)));
    let (t0, j0) = dist_arc.domain().start();
    let (t1, j1) = dist_arc.domain().end();
    let total = hybrid_integral_between(&dist_arc, (t0, j0), (t1, j1))?;
    Ok(total[(0, 0)].max(0.0).powf(1.0 / p))
}

/// Hybrid `L_inf` norm: the supremum of `|phi(t,j)|_A` over stored samples.
pub fn linf_norm(arc: &HybridArc, set: Option<&AffineSet>) -> f64 {
    let dim = arc.shape().0 * arc.shape().1;
    let origin = AffineSet::origin(dim);
    let set = set.unwrap_or(&origin);
    arc.iter_samples().map(|(_, _, v)| sample_distance(v, set)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid_time::{window, HybridTimeDomain};
    use approx::assert_relative_eq;

    fn scal(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn constant_arc_counts_flow_and_jump() {
        // phi == 1 on [(0,1,0),(1,1,1)]: flow integral 1 plus one jump term 1.
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 1.0, 1)]).unwrap();
        let arc = HybridArc::constant(&dom, 0.25, scal(1.0));
        let w = window(&dom, 0.0, 0, 2.0).unwrap();
        let total = hybrid_integral(&arc, &w).unwrap();
        assert_relative_eq!(total[(0, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_arc_integrates_to_zero() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 2.0, 1)]).unwrap();
        let arc = HybridArc::constant(&dom, 0.25, scal(0.0));
        let w = window(&dom, 0.0, 0, 1.5).unwrap();
        assert_eq!(hybrid_integral(&arc, &w).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn window_outside_arc_errors() {
        let dom = HybridTimeDomain::continuous(10.0);
        let w = window(&dom, 0.0, 0, 9.0).unwrap();
        let short = HybridTimeDomain::continuous(5.0);
        let arc = HybridArc::constant(&short, 0.5, scal(1.0));
        assert!(hybrid_integral(&arc, &w).is_err());
    }

    #[test]
    fn integral_is_additive_at_interior_points() {
        let dom = HybridTimeDomain::new(&[(0.0, 2.0, 0), (2.0, 3.0, 1), (3.0, 5.0, 2)]).unwrap();
        let arc = HybridArc::sample(&dom, 0.05, |t, j| scal(t.sin() + f64::from(j)), None);
        let whole = hybrid_integral_between(&arc, (0.0, 0), (5.0, 2)).unwrap();
        for split in [(1.3, 0), (2.0, 0), (2.0, 1), (2.5, 1), (3.0, 2)] {
            let left = hybrid_integral_between(&arc, (0.0, 0), split).unwrap();
            let right = hybrid_integral_between(&arc, split, (5.0, 2)).unwrap();
            assert_relative_eq!(
                (left + right)[(0, 0)],
                whole[(0, 0)],
                epsilon = 1e-12,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn lp_norm_of_zero_arc_is_zero() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 2.0, 1)]).unwrap();
        let arc = HybridArc::constant(&dom, 0.25, scal(0.0));
        assert_eq!(lp_norm(&arc, 2.0, None).unwrap(), 0.0);
    }

    #[test]
    fn linf_norm_of_constant_is_its_magnitude() {
        let dom = HybridTimeDomain::continuous(3.0);
        let arc = HybridArc::constant(&dom, 0.1, scal(-2.5));
        assert_relative_eq!(lp_norm(&arc, f64::INFINITY, None).unwrap(), 2.5);
    }

    #[test]
    fn l2_norm_matches_analytic_exponential() {
        // |e^{-t}|_2 over [0,10] is sqrt((1 - e^{-20})/2).
        let dom = HybridTimeDomain::continuous(10.0);
        let arc = HybridArc::sample(&dom, 0.005, |t, _| scal((-t).exp()), None);
        let expected = ((1.0 - (-20.0f64).exp()) / 2.0).sqrt();
        assert!((lp_norm(&arc, 2.0, None).unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn invalid_p_is_rejected() {
        let dom = HybridTimeDomain::continuous(1.0);
        let arc = HybridArc::constant(&dom, 0.5, scal(1.0));
        assert!(matches!(lp_norm(&arc, 0.5, None), Err(NormError::InvalidP(_))));
    }

    #[test]
    fn quadrature_error_shrinks_at_second_order() {
        // Closed form for int_0^2 e^{-t} dt; halving the spacing must cut the
        // trapezoid error by about 4.
        let dom = HybridTimeDomain::continuous(2.0);
        let exact = 1.0 - (-2.0f64).exp();
        let err = |dt: f64| {
            let arc = HybridArc::sample(&dom, dt, |t, _| scal((-t).exp()), None);
            (hybrid_integral_between(&arc, (0.0, 0), (2.0, 0)).unwrap()[(0, 0)] - exact).abs()
        };
        let (e1, e2, e3) = (err(0.1), err(0.05), err(0.025));
        assert!(e1 / e2 > 3.0 && e1 / e2 < 5.0, "ratio {}", e1 / e2);
        assert!(e2 / e3 > 3.0 && e2 / e3 < 5.0, "ratio {}", e2 / e3);
    }
}
