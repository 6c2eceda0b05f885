use super::domain::{DomainError, HybridTimeDomain, Interval, TIME_TOL};

/// The shortest contiguous sub-domain starting at `(t, j)` whose hybrid
/// length (elapsed time plus jump count) is at least `length`.
///
/// The terminal point `(s_K, m_K)` satisfies
/// `length <= (s_K - t) + (m_K - j) < length + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub base: (f64, u32),
    /// The requested length `K`.
    pub length: f64,
    /// Contiguous pieces truncated from the parent domain, starting at `base`
    /// and ending at `terminal`.
    pub pieces: Vec<Interval>,
    pub terminal: (f64, u32),
}

impl Window {
    /// Achieved hybrid length `(s_K - t) + (m_K - j)`.
    pub fn achieved_length(&self) -> f64 {
        (self.terminal.0 - self.base.0) + f64::from(self.terminal.1 - self.base.1)
    }

    /// Jump instants `(t_{i+1}, i)` interior to the window, i.e. for
    /// `i = j, ..., m_K - 1`.
    pub fn jump_instants(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.pieces[..self.pieces.len() - 1].iter().map(|p| (p.t_end, p.j))
    }
}

/// Compute the shortest window of hybrid length at least `k` starting at
/// `(t, j)`.
pub fn window(dom: &HybridTimeDomain, t: f64, j: u32, k: f64) -> Result<Window, DomainError> {
    assert!(k > 0.0, "window length must be positive");
    let start_idx = dom
        .index_of_j(j)
        .filter(|&i| dom.intervals()[i].contains_t(t))
        .ok_or(DomainError::PointNotInDomain { t, j })?;
    let t = t.clamp(dom.intervals()[start_idx].t_start, dom.intervals()[start_idx].t_end);

    let mut pieces: Vec<Interval> = Vec::new();
    // Hybrid length accumulated up to the *start* of the interval currently
    // being examined.
    let mut acc = 0.0f64;
    for (idx, iv) in dom.intervals()[start_idx..].iter().enumerate() {
        let piece_start = if idx == 0 { t } else { iv.t_start };
        if idx > 0 {
            // We arrived here through a jump.
            acc += 1.0;
            if acc >= k {
                // The jump itself crossed the threshold; the terminal is the
                // post-jump point and the final piece is degenerate.
                pieces.push(Interval { t_start: iv.t_start, t_end: iv.t_start, j: iv.j });
                let w = Window { base: (t, j), length: k, pieces, terminal: (iv.t_start, iv.j) };
                debug_assert!(w.achieved_length() >= k - 1e-9 && w.achieved_length() < k + 1.0);
                return Ok(w);
            }
        }
        let end_acc = acc + (iv.t_end - piece_start);
        if end_acc >= k - TIME_TOL {
            // The threshold is reached while flowing in this interval.
            let s_k = (piece_start + (k - acc)).min(iv.t_end);
            pieces.push(Interval { t_start: piece_start, t_end: s_k, j: iv.j });
            let w = Window { base: (t, j), length: k, pieces, terminal: (s_k, iv.j) };
            debug_assert!(w.achieved_length() >= k - 1e-9 && w.achieved_length() < k + 1.0);
            return Ok(w);
        }
        pieces.push(Interval { t_start: piece_start, t_end: iv.t_end, j: iv.j });
        acc = end_acc;
    }
    Err(DomainError::DomainTooShort { needed: k, available: acc })
}
