use nalgebra::DMatrix;
use thiserror::Error;

use super::domain::{DomainError, HybridTimeDomain, TIME_TOL};

/// Samples of one flow interval: `(t, value)` sorted by `t`.
pub type SampleBlock = Vec<(f64, DMatrix<f64>)>;

#[derive(Debug, Error)]
pub enum ArcError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("interval j={j} needs {expected} sample block(s), found {found}")]
    SampleCount { j: u32, expected: String, found: usize },
    #[error("sample at t={t} lies outside interval j={j}")]
    SampleOutsideInterval { t: f64, j: u32 },
    #[error("samples of interval j={j} must be sorted by t and cover both endpoints")]
    SampleCoverage { j: u32 },
    #[error("all values must share shape {expected:?}, found {found:?}")]
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
}

/// A sampled matrix-valued function over a hybrid time domain.
///
/// Per interval the samples are sorted by `t` and cover both endpoints; a
/// degenerate interval holds exactly one sample. The last sample of an
/// interval that is followed by a jump is the pre-jump value `phi(t_{j+1}, j)`
/// used by jump sums; the first sample of the next interval is the post-jump
/// value `phi(t_{j+1}, j+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridArc {
    domain: HybridTimeDomain,
    shape: (usize, usize),
    samples: Vec<Vec<(f64, DMatrix<f64>)>>,
}

impl HybridArc {
    pub fn new(
        domain: HybridTimeDomain,
        samples: Vec<Vec<(f64, DMatrix<f64>)>>,
    ) -> Result<Self, ArcError> {
        if samples.len() != domain.intervals().len() {
            return Err(ArcError::SampleCount {
                j: domain.first_j(),
                expected: format!("{}", domain.intervals().len()),
                found: samples.len(),
            });
        }
        let mut shape: Option<(usize, usize)> = None;
        for (iv, block) in domain.intervals().iter().zip(&samples) {
            if iv.is_degenerate() {
                if block.len() != 1 {
                    return Err(ArcError::SampleCount {
                        j: iv.j,
                        expected: "exactly 1 sample (degenerate interval)".into(),
                        found: block.len(),
                    });
                }
            } else if block.len() < 2 {
                return Err(ArcError::SampleCount {
                    j: iv.j,
                    expected: ">= 2 samples including both endpoints".into(),
                    found: block.len(),
                });
            }
            let first_t = block.first().unwrap().0;
            let last_t = block.last().unwrap().0;
            if !iv.is_degenerate()
                && ((first_t - iv.t_start).abs() > TIME_TOL || (last_t - iv.t_end).abs() > TIME_TOL)
            {
                return Err(ArcError::SampleCoverage { j: iv.j });
            }
            let mut prev = f64::NEG_INFINITY;
            for (t, value) in block {
                if !iv.contains_t(*t) {
                    return Err(ArcError::SampleOutsideInterval { t: *t, j: iv.j });
                }
                if *t < prev {
                    return Err(ArcError::SampleCoverage { j: iv.j });
                }
                prev = *t;
                let s = (value.nrows(), value.ncols());
                match shape {
                    None => shape = Some(s),
                    Some(expected) if expected != s => {
                        return Err(ArcError::ShapeMismatch { expected, found: s })
                    }
                    _ => {}
                }
            }
        }
        Ok(HybridArc { domain, shape: shape.expect("nonempty arc"), samples })
    }

    /// Build an arc by sampling `flow` on per-interval uniform grids of
    /// spacing at most `dt`. When `jump` is given, the pre-jump endpoint
    /// sample of every interval followed by a jump is taken from it instead
    /// (hybrid data often carries a dedicated value there).
    pub fn sample(
        domain: &HybridTimeDomain,
        dt: f64,
        flow: impl Fn(f64, u32) -> DMatrix<f64>,
        jump: Option<&dyn Fn(f64, u32) -> DMatrix<f64>>,
    ) -> Self {
        assert!(dt > 0.0, "sample spacing must be positive");
        let n_intervals = domain.intervals().len();
        let mut samples = Vec::with_capacity(n_intervals);
        for (idx, iv) in domain.intervals().iter().enumerate() {
            let followed_by_jump = idx + 1 < n_intervals;
            let mut block = Vec::new();
            if iv.is_degenerate() {
                let value = match (&jump, followed_by_jump) {
                    (Some(jf), true) => jf(iv.t_end, iv.j),
                    _ => flow(iv.t_start, iv.j),
                };
                block.push((iv.t_start, value));
            } else {
                let n = ((iv.length() / dt).ceil() as usize).max(1);
                let h = iv.length() / n as f64;
                for k in 0..=n {
                    let t = if k == n { iv.t_end } else { iv.t_start + h * k as f64 };
                    let value = if k == n && followed_by_jump {
                        match &jump {
                            Some(jf) => jf(t, iv.j),
                            None => flow(t, iv.j),
                        }
                    } else {
                        flow(t, iv.j)
                    };
                    block.push((t, value));
                }
            }
            samples.push(block);
        }
        HybridArc::new(domain.clone(), samples).expect("sampled arc is valid by construction")
    }

    /// Constant arc of the given value.
    pub fn constant(domain: &HybridTimeDomain, dt: f64, value: DMatrix<f64>) -> Self {
        HybridArc::sample(domain, dt, |_, _| value.clone(), None)
    }

    pub fn domain(&self) -> &HybridTimeDomain {
        &self.domain
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn is_scalar(&self) -> bool {
        self.shape == (1, 1)
    }

    /// Sample blocks, one per interval, sorted by `t`.
    pub fn blocks(&self) -> &[Vec<(f64, DMatrix<f64>)>] {
        &self.samples
    }

    pub fn block(&self, j: u32) -> Option<&[(f64, DMatrix<f64>)]> {
        self.domain.index_of_j(j).map(|i| self.samples[i].as_slice())
    }

    /// Iterator over every stored sample as `(t, j, value)`.
    pub fn iter_samples(&self) -> impl Iterator<Item = (f64, u32, &DMatrix<f64>)> + '_ {
        self.domain
            .intervals()
            .iter()
            .zip(&self.samples)
            .flat_map(|(iv, block)| block.iter().map(move |(t, v)| (*t, iv.j, v)))
    }

    /// Pre-jump value `phi(t_{j+1}, j)` of the jump that follows interval `j`,
    /// when there is one.
    pub fn pre_jump_value(&self, j: u32) -> Option<&DMatrix<f64>> {
        let idx = self.domain.index_of_j(j)?;
        if idx + 1 >= self.samples.len() {
            return None;
        }
        self.samples[idx].last().map(|(_, v)| v)
    }

    /// Value at `(t, j)` by linear interpolation between stored samples of
    /// block `j`. Returns `None` when the point is not in the domain.
    pub fn value_at(&self, t: f64, j: u32) -> Option<DMatrix<f64>> {
        self.value_at_impl(t, j, false)
    }

    /// Flow-side value at `(t, j)`: like [`Self::value_at`], except that in
    /// an interval followed by a jump the final stored sample (the pre-jump
    /// value, i.e. jump data) is replaced by constant extrapolation of the
    /// preceding flow sample. Integrators driving flows from sampled data
    /// read this, matching the quadrature convention.
    pub fn flow_value_at(&self, t: f64, j: u32) -> Option<DMatrix<f64>> {
        self.value_at_impl(t, j, true)
    }

    fn value_at_impl(&self, t: f64, j: u32, flow_side: bool) -> Option<DMatrix<f64>> {
        let idx = self.domain.index_of_j(j)?;
        let iv = &self.domain.intervals()[idx];
        if !iv.contains_t(t) {
            return None;
        }
        let block = &self.samples[idx];
        if block.len() == 1 {
            return Some(block[0].1.clone());
        }
        let exclude_final = flow_side && idx + 1 < self.samples.len();
        let sample_value = |pos: usize| -> &DMatrix<f64> {
            if exclude_final && pos + 1 == block.len() && pos > 0 {
                &block[pos - 1].1
            } else {
                &block[pos].1
            }
        };
        let pos = block.partition_point(|(s, _)| *s <= t);
        if pos == 0 {
            return Some(block[0].1.clone());
        }
        if pos >= block.len() {
            return Some(sample_value(block.len() - 1).clone());
        }
        let (t0, _) = &block[pos - 1];
        let (t1, _) = &block[pos];
        if (t1 - t0).abs() <= f64::EPSILON {
            return Some(sample_value(pos).clone());
        }
        let w = (t - t0) / (t1 - t0);
        Some(sample_value(pos - 1) * (1.0 - w) + sample_value(pos) * w)
    }

    /// Value at the final point of the domain.
    pub fn terminal_value(&self) -> &DMatrix<f64> {
        &self.samples.last().unwrap().last().unwrap().1
    }

    /// Pointwise transform preserving the domain and sample grid.
    pub fn map(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> HybridArc {
        let samples = self
            .samples
            .iter()
            .map(|block| block.iter().map(|(t, v)| (*t, f(v))).collect())
            .collect();
        HybridArc::new(self.domain.clone(), samples).expect("mapped arc keeps a valid grid")
    }

    /// Scalar arc helper: value at `(t, j)` as `f64`.
    pub fn scalar_at(&self, t: f64, j: u32) -> Option<f64> {
        self.value_at(t, j).map(|m| m[(0, 0)])
    }
}
