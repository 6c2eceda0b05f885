use nalgebra::{DMatrix, DVector};

use super::{SimConfig, SimError};
use crate::hybrid_time::{HybridArc, HybridTimeDomain};

type StateFn = dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync;
/// Recorded interval blocks: `(t_start, t_end, j, samples)`.
type StateBlocks = Vec<(f64, f64, u32, Vec<(f64, DMatrix<f64>)>)>;
type SetFn = dyn Fn(&DVector<f64>) -> bool + Send + Sync;

/// A hybrid system `(C, F, D, G)`: flow under `F` while in `C`, jump through
/// `G` from `D`. Shared immutably across concurrent runs.
pub struct AutonomousHybridSystem {
    state_dim: usize,
    flow_map: Box<StateFn>,
    jump_map: Box<StateFn>,
    flow_set: Box<SetFn>,
    jump_set: Box<SetFn>,
}

impl AutonomousHybridSystem {
    pub fn new(
        state_dim: usize,
        flow_map: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        jump_map: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        flow_set: impl Fn(&DVector<f64>) -> bool + Send + Sync + 'static,
        jump_set: impl Fn(&DVector<f64>) -> bool + Send + Sync + 'static,
    ) -> Self {
        AutonomousHybridSystem {
            state_dim,
            flow_map: Box::new(flow_map),
            jump_map: Box::new(jump_map),
            flow_set: Box::new(flow_set),
            jump_set: Box::new(jump_set),
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn in_flow_set(&self, x: &DVector<f64>) -> bool {
        (self.flow_set)(x)
    }

    pub fn in_jump_set(&self, x: &DVector<f64>) -> bool {
        (self.jump_set)(x)
    }

    pub fn jump(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.jump_map)(x)
    }

    fn rk4_step(&self, x: &DVector<f64>, h: f64) -> DVector<f64> {
        let k1 = (self.flow_map)(x);
        let k2 = (self.flow_map)(&(x + &k1 * (h / 2.0)));
        let k3 = (self.flow_map)(&(x + &k2 * (h / 2.0)));
        let k4 = (self.flow_map)(&(x + &k3 * h));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }
}

/// Why a simulation ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    /// Reached the ordinary-time horizon.
    Horizon,
    /// Reached the jump-count horizon.
    JumpBudget,
    /// The state left the union of the flow and jump sets at `(t, j)`.
    LeftBothSets { t: f64, j: u32 },
    /// The Zeno guard tripped: more than the configured number of jumps at
    /// one instant.
    ZenoDetected { t: f64, j: u32 },
}

/// A simulated arc together with the reason the run stopped.
#[derive(Debug, Clone)]
pub struct HybridSolution {
    pub arc: HybridArc,
    pub termination: Termination,
}

fn to_matrix(x: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(x.len(), 1, x.as_slice())
}

/// Locate the earliest instant in `(0, h]` at which the predicate becomes
/// true along the flow from `x`, by bisection on single steps from `x`.
/// `x` must not satisfy the predicate; `x` flowed by `h` must.
fn bisect_entry(
    sys: &AutonomousHybridSystem,
    x: &DVector<f64>,
    h: f64,
    pred: impl Fn(&DVector<f64>) -> bool,
) -> (f64, DVector<f64>) {
    let mut lo = 0.0f64;
    let mut hi = h;
    // Relative tolerance 1e-9 of the step keeps jump terms accurate.
    let tol = (1e-9 * h).max(f64::MIN_POSITIVE);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let xm = sys.rk4_step(x, mid);
        if pred(&xm) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (hi, sys.rk4_step(x, hi))
}

/// Simulate the autonomous hybrid system from `x0`.
///
/// Flow intervals are integrated with fixed-step RK4; jump-set membership is
/// checked every step and the crossing instant is bisected before applying
/// the jump map. A state in both sets jumps first. The run ends at the
/// horizon, when the state leaves both sets, or when the Zeno guard trips;
/// the partial arc is returned in every case.
pub fn simulate_autonomous(
    sys: &AutonomousHybridSystem,
    x0: &DVector<f64>,
    cfg: &SimConfig,
) -> Result<HybridSolution, SimError> {
    if x0.len() != sys.state_dim {
        return Err(SimError::DimensionMismatch(format!(
            "x0 has dimension {}, system expects {}",
            x0.len(),
            sys.state_dim
        )));
    }
    if !sys.in_flow_set(x0) && !sys.in_jump_set(x0) {
        return Err(SimError::InitialStateOutsideSets);
    }

    let mut t = 0.0f64;
    let mut j = 0u32;
    let mut x = x0.clone();
    // Completed interval blocks and the block being filled.
    let mut blocks: StateBlocks = Vec::new();
    let mut block_start = t;
    let mut block: Vec<(f64, DMatrix<f64>)> = vec![(t, to_matrix(&x))];
    let mut jumps_at_instant = 0u32;

    let close_block = |blocks: &mut StateBlocks,
                       mut block: Vec<(f64, DMatrix<f64>)>,
                       start: f64,
                       end: f64,
                       j: u32| {
        // Deep jump accumulations produce flow stretches below the time
        // tolerance; such intervals are degenerate and keep one sample,
        // the pre-jump value.
        if end - start <= crate::hybrid_time::TIME_TOL && block.len() > 1 {
            block.drain(..block.len() - 1);
        }
        blocks.push((start, end, j, block));
    };

    let termination;
    'outer: loop {
        // Jump as long as the state sits in D (jump priority in C ∩ D).
        while sys.in_jump_set(&x) {
            if j >= cfg.j_max {
                termination = Termination::JumpBudget;
                break 'outer;
            }
            if jumps_at_instant >= cfg.zeno_guard {
                termination = Termination::ZenoDetected { t, j };
                break 'outer;
            }
            jumps_at_instant += 1;
            x = sys.jump(&x);
            close_block(&mut blocks, std::mem::take(&mut block), block_start, t, j);
            j += 1;
            block_start = t;
            block.push((t, to_matrix(&x)));
        }

        if t >= cfg.t_max - 1e-12 {
            termination = Termination::Horizon;
            break;
        }
        if !sys.in_flow_set(&x) {
            termination = Termination::LeftBothSets { t, j };
            break;
        }

        let h = cfg.step.min(cfg.t_max - t);
        let x_next = sys.rk4_step(&x, h);
        if sys.in_jump_set(&x_next) {
            // Entered D during the step: bisect the crossing instant.
            let (dt, x_cross) = bisect_entry(sys, &x, h, |s| sys.in_jump_set(s));
            t += dt;
            x = x_cross;
            block.push((t, to_matrix(&x)));
            jumps_at_instant = 0;
            continue;
        }
        if !sys.in_flow_set(&x_next) {
            // Left C without entering D: bisect the exit and stop there.
            let (dt, x_exit) = bisect_entry(sys, &x, h, |s| !sys.in_flow_set(s));
            t += dt;
            x = x_exit;
            block.push((t, to_matrix(&x)));
            termination = Termination::LeftBothSets { t, j };
            break;
        }
        t += h;
        x = x_next;
        block.push((t, to_matrix(&x)));
        jumps_at_instant = 0;
    }

    close_block(&mut blocks, block, block_start, t, j);

    let breakpoints: Vec<(f64, f64, u32)> =
        blocks.iter().map(|(a, b, j, _)| (*a, *b, *j)).collect();
    let domain = HybridTimeDomain::new(&breakpoints)?;
    let samples: Vec<Vec<(f64, DMatrix<f64>)>> = blocks.into_iter().map(|(_, _, _, s)| s).collect();
    let arc =
        HybridArc::new(domain, samples).map_err(|e| SimError::DimensionMismatch(e.to_string()))?;
    Ok(HybridSolution { arc, termination })
}
