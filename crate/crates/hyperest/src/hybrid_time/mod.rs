//! Hybrid time domains, sampled hybrid arcs, windows, hybrid integrals and
//! hybrid `L_p` norms.
//!
//! A hybrid time domain is an ordered union of flow intervals
//! `[t_j, t_{j+1}] x {j}`; consecutive intervals share the jump instant
//! `t_{j+1}`. A hybrid arc attaches a matrix value to sampled points of such
//! a domain: within each interval it is a continuous-time signal (sampled on
//! a grid), and at a jump instant it carries two values, the pre-jump value
//! `phi(t_{j+1}, j)` (the last sample of block `j`, the one entering jump
//! sums) and the post-jump value `phi(t_{j+1}, j+1)` (the first sample of
//! block `j+1`).

mod arc;
mod csv;
mod domain;
mod integral;
mod window;

pub use arc::{ArcError, HybridArc, SampleBlock};
pub use csv::{read_arc_csv, read_arc_csv_with_shape, write_arc_csv, CsvError};
pub use domain::{DomainError, HybridTimeDomain, Interval, TIME_TOL};
pub use integral::{hybrid_integral, hybrid_integral_between, linf_norm, lp_norm, NormError};
pub use window::{window, Window};
