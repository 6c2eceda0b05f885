use thiserror::Error;

/// Absolute tolerance for interval-membership tests on the time axis.
/// Fixed-step grids make exact endpoint hits common but not guaranteed after
/// arithmetic.
pub const TIME_TOL: f64 = 1e-9;

/// One flow interval `[t_start, t_end] x {j}` of a hybrid time domain.
/// `t_start == t_end` is a degenerate interval (two consecutive jumps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub t_start: f64,
    pub t_end: f64,
    pub j: u32,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.t_end - self.t_start
    }

    pub fn is_degenerate(&self) -> bool {
        self.t_end - self.t_start <= TIME_TOL
    }

    pub fn contains_t(&self, t: f64) -> bool {
        t >= self.t_start - TIME_TOL && t <= self.t_end + TIME_TOL
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DomainError {
    #[error("domain requires at least one interval")]
    Empty,
    #[error("interval for j={j} ends at {t_end} but the next interval starts at {next_start}; a jump must occur at a shared instant")]
    NonContiguous { j: u32, t_end: f64, next_start: f64 },
    #[error("interval for j={j} has negative length ({t_start} > {t_end})")]
    NegativeInterval { j: u32, t_start: f64, t_end: f64 },
    #[error("jump indices must be consecutive: expected j={expected}, found j={found}")]
    JumpIndexGap { expected: u32, found: u32 },
    #[error("a domain starting at jump index 0 must start at t = 0 (found t = {t0})")]
    InvalidStart { t0: f64 },
    #[error("point (t={t}, j={j}) is not in the domain")]
    PointNotInDomain { t: f64, j: u32 },
    #[error("domain too short: needed hybrid length {needed}, only {available} available")]
    DomainTooShort { needed: f64, available: f64 },
}

/// An ordered, contiguous sequence of flow intervals; the parameter space of
/// every hybrid signal in this crate.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridTimeDomain {
    intervals: Vec<Interval>,
}

impl HybridTimeDomain {
    /// Validating constructor from `(t_start, t_end, j)` breakpoints.
    pub fn new(breakpoints: &[(f64, f64, u32)]) -> Result<Self, DomainError> {
        if breakpoints.is_empty() {
            return Err(DomainError::Empty);
        }
        let mut intervals = Vec::with_capacity(breakpoints.len());
        for (idx, &(t_start, t_end, j)) in breakpoints.iter().enumerate() {
            if t_end < t_start - TIME_TOL {
                return Err(DomainError::NegativeInterval { j, t_start, t_end });
            }
            if idx > 0 {
                let prev: &Interval = &intervals[idx - 1];
                if j != prev.j + 1 {
                    return Err(DomainError::JumpIndexGap { expected: prev.j + 1, found: j });
                }
                if (t_start - prev.t_end).abs() > TIME_TOL {
                    return Err(DomainError::NonContiguous {
                        j: prev.j,
                        t_end: prev.t_end,
                        next_start: t_start,
                    });
                }
            }
            intervals.push(Interval { t_start, t_end: t_end.max(t_start), j });
        }
        if intervals[0].j == 0 && intervals[0].t_start.abs() > TIME_TOL {
            return Err(DomainError::InvalidStart { t0: intervals[0].t_start });
        }
        Ok(HybridTimeDomain { intervals })
    }

    /// Purely continuous domain `[0, t_end] x {0}`.
    pub fn continuous(t_end: f64) -> Self {
        HybridTimeDomain::new(&[(0.0, t_end, 0)]).expect("valid continuous domain")
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn first_j(&self) -> u32 {
        self.intervals[0].j
    }

    pub fn last_j(&self) -> u32 {
        self.intervals.last().unwrap().j
    }

    /// Initial point `(t0, j0)`.
    pub fn start(&self) -> (f64, u32) {
        (self.intervals[0].t_start, self.intervals[0].j)
    }

    /// Final point `(T, J)`.
    pub fn end(&self) -> (f64, u32) {
        let last = self.intervals.last().unwrap();
        (last.t_end, last.j)
    }

    pub fn num_jumps(&self) -> usize {
        self.intervals.len() - 1
    }

    /// Jump instants `(t_{j+1}, j)`: the pre-jump endpoint of every interval
    /// that is followed by another.
    pub fn jump_instants(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.intervals[..self.intervals.len() - 1].iter().map(|iv| (iv.t_end, iv.j))
    }

    /// Total hybrid length: elapsed ordinary time plus the number of jumps.
    pub fn total_length(&self) -> f64 {
        let flow: f64 = self.intervals.iter().map(Interval::length).sum();
        flow + self.num_jumps() as f64
    }

    pub fn index_of_j(&self, j: u32) -> Option<usize> {
        let first = self.first_j();
        if j < first || j > self.last_j() {
            return None;
        }
        Some((j - first) as usize)
    }

    pub fn interval_for(&self, j: u32) -> Option<&Interval> {
        self.index_of_j(j).map(|i| &self.intervals[i])
    }

    pub fn contains(&self, t: f64, j: u32) -> bool {
        self.interval_for(j).is_some_and(|iv| iv.contains_t(t))
    }

    /// Remaining hybrid length from `(t, j)` to the end of the domain.
    pub fn length_from(&self, t: f64, j: u32) -> Result<f64, DomainError> {
        let idx = self
            .index_of_j(j)
            .filter(|&i| self.intervals[i].contains_t(t))
            .ok_or(DomainError::PointNotInDomain { t, j })?;
        let mut len = self.intervals[idx].t_end
            - t.clamp(self.intervals[idx].t_start, self.intervals[idx].t_end);
        len += (self.intervals.len() - 1 - idx) as f64; // jumps ahead
        for iv in &self.intervals[idx + 1..] {
            len += iv.length();
        }
        Ok(len)
    }

    /// Hybrid length elapsed from the domain start to `(t, j)`.
    pub fn elapsed(&self, t: f64, j: u32) -> f64 {
        let (t0, j0) = self.start();
        (t - t0) + f64::from(j - j0)
    }

    /// Sub-domain from `(t, j)` to the end of this domain.
    pub fn restrict_from(&self, t: f64, j: u32) -> Result<HybridTimeDomain, DomainError> {
        let idx = self
            .index_of_j(j)
            .filter(|&i| self.intervals[i].contains_t(t))
            .ok_or(DomainError::PointNotInDomain { t, j })?;
        let mut intervals = self.intervals[idx..].to_vec();
        intervals[0].t_start = t.clamp(intervals[0].t_start, intervals[0].t_end);
        Ok(HybridTimeDomain { intervals })
    }

    pub(crate) fn from_intervals_unchecked(intervals: Vec<Interval>) -> Self {
        HybridTimeDomain { intervals }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_jump_domain_is_valid() {
        let dom = HybridTimeDomain::new(&[(0.0, 2.0 * PI, 0), (2.0 * PI, 4.0 * PI, 1)]).unwrap();
        assert_eq!(dom.num_jumps(), 1);
        assert_eq!(dom.jump_instants().collect::<Vec<_>>(), vec![(2.0 * PI, 0)]);
        assert!((dom.total_length() - (4.0 * PI + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn purely_continuous_domain_is_valid() {
        let dom = HybridTimeDomain::new(&[(0.0, 1.0, 0)]).unwrap();
        assert_eq!(dom.num_jumps(), 0);
        assert_eq!(dom.end(), (1.0, 0));
    }

    #[test]
    fn non_contiguous_is_rejected() {
        let err = HybridTimeDomain::new(&[(0.0, 1.0, 0), (2.0, 3.0, 1)]).unwrap_err();
        assert!(matches!(err, DomainError::NonContiguous { j: 0, .. }));
    }

    #[test]
    fn negative_interval_is_rejected() {
        let err = HybridTimeDomain::new(&[(1.0, 0.5, 0)]).unwrap_err();
        assert!(matches!(err, DomainError::NegativeInterval { .. }));
    }

    #[test]
    fn jump_index_gap_is_rejected() {
        let err = HybridTimeDomain::new(&[(0.0, 1.0, 0), (1.0, 2.0, 2)]).unwrap_err();
        assert_eq!(err, DomainError::JumpIndexGap { expected: 1, found: 2 });
    }

    #[test]
    fn zero_start_required_at_j0() {
        let err = HybridTimeDomain::new(&[(0.5, 1.0, 0)]).unwrap_err();
        assert!(matches!(err, DomainError::InvalidStart { .. }));
        // Starting at a later jump index is fine (sub-domains do this).
        assert!(HybridTimeDomain::new(&[(0.5, 1.0, 3)]).is_ok());
    }

    #[test]
    fn degenerate_intervals_accumulate_jumps() {
        let dom = HybridTimeDomain::new(&[(0.0, 0.0, 0), (0.0, 0.0, 1), (0.0, 1.0, 2)]).unwrap();
        assert_eq!(dom.num_jumps(), 2);
        assert!((dom.total_length() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn length_from_counts_remaining_jumps() {
        let dom = HybridTimeDomain::new(&[(0.0, 2.0, 0), (2.0, 5.0, 1)]).unwrap();
        assert!((dom.length_from(1.0, 0).unwrap() - (1.0 + 1.0 + 3.0)).abs() < 1e-12);
        assert!((dom.length_from(2.0, 1).unwrap() - 3.0).abs() < 1e-12);
        assert!(dom.length_from(3.0, 0).is_err());
    }
}
