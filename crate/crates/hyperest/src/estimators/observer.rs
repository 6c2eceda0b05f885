use nalgebra::{DMatrix, DVector};

use super::{EstimatorError, EstimatorTrace, ObserverConfig, TraceKind};
use crate::hybrid_sim::SimConfig;
use crate::hybrid_time::{HybridArc, HybridTimeDomain};

/// Evaluation context handed to the plant maps. `x` is the plant state along
/// the simulated solution: the jump regressor of an impact system may depend
/// on the pre-jump state (e.g. the impact velocity), which the observer
/// treats as derivable from the output history.
pub struct PlantCtx<'a> {
    pub t: f64,
    pub j: u32,
    pub y: &'a DVector<f64>,
    pub u: &'a DVector<f64>,
    pub x: &'a DVector<f64>,
}

type MapFn = Box<dyn Fn(&PlantCtx) -> DMatrix<f64> + Send + Sync>;
/// `(x, x_hat, theta_hat, Gamma_c, Gamma_d)` views of the packed co-simulation state.
type Unpacked = (DVector<f64>, DVector<f64>, DVector<f64>, DMatrix<f64>, DMatrix<f64>);
/// Recorded interval blocks: `(t_start, t_end, j, nodes)`.
type NodeBlocks = Vec<(f64, f64, u32, Vec<(f64, DVector<f64>)>)>;
type ForcingFn = Box<dyn Fn(&PlantCtx) -> DVector<f64> + Send + Sync>;
type SetFn = Box<dyn Fn(&DVector<f64>) -> bool + Send + Sync>;

/// A plant that is affine in the unmeasured state and linear in the unknown
/// parameters: `x' = A_c x + b_c + Psi_c theta` while in the flow set and
/// `x+ = A_d x + b_d + Psi_d theta` from the jump set, with measured output
/// `y = H x`. The forcing terms `b_c`, `b_d` carry the known input
/// contribution.
pub struct PlantModel {
    pub state_dim: usize,
    pub theta_dim: usize,
    pub output: DMatrix<f64>,
    pub a_c: MapFn,
    pub a_d: MapFn,
    pub psi_c: MapFn,
    pub psi_d: MapFn,
    pub input_c: ForcingFn,
    pub input_d: ForcingFn,
    pub flow_set: SetFn,
    pub jump_set: SetFn,
}

/// Known input signal evaluated along hybrid time.
pub enum InputSignal {
    Constant(DVector<f64>),
    TimeFn(Box<dyn Fn(f64, u32) -> DVector<f64> + Send + Sync>),
}

impl InputSignal {
    pub fn constant_scalar(u: f64) -> Self {
        InputSignal::Constant(DVector::from_vec(vec![u]))
    }

    pub fn eval(&self, t: f64, j: u32) -> DVector<f64> {
        match self {
            InputSignal::Constant(v) => v.clone(),
            InputSignal::TimeFn(f) => f(t, j),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ObserverMode {
    Hybrid,
    ContinuousOnly,
    DiscreteOnly,
}

/// The hybrid adaptive observer/identifier: output injection plus
/// filtered-regressor adaptation on both time scales, sharing the plant's
/// jump instants.
pub fn run_hybrid_observer(
    plant: &PlantModel,
    theta_true: &DVector<f64>,
    u: &InputSignal,
    x0: &DVector<f64>,
    cfg: &ObserverConfig,
    sim: &SimConfig,
) -> Result<EstimatorTrace, EstimatorError> {
    run_observer(plant, theta_true, u, x0, cfg, sim, ObserverMode::Hybrid)
}

/// Continuous-only baseline: flow updates only. The plant state still jumps,
/// but the observer is unaware of the jumps and integrates straight through
/// them, holding its state, estimate and filter across each instant.
pub fn run_continuous_observer(
    plant: &PlantModel,
    theta_true: &DVector<f64>,
    u: &InputSignal,
    x0: &DVector<f64>,
    cfg: &ObserverConfig,
    sim: &SimConfig,
) -> Result<EstimatorTrace, EstimatorError> {
    run_observer(plant, theta_true, u, x0, cfg, sim, ObserverMode::ContinuousOnly)
}

/// Discrete-only baseline: jump updates only; the observer state, estimate
/// and filter hold constant while the plant flows.
pub fn run_discrete_observer(
    plant: &PlantModel,
    theta_true: &DVector<f64>,
    u: &InputSignal,
    x0: &DVector<f64>,
    cfg: &ObserverConfig,
    sim: &SimConfig,
) -> Result<EstimatorTrace, EstimatorError> {
    run_observer(plant, theta_true, u, x0, cfg, sim, ObserverMode::DiscreteOnly)
}

struct CoSim<'a> {
    plant: &'a PlantModel,
    theta: &'a DVector<f64>,
    u: &'a InputSignal,
    cfg: &'a ObserverConfig,
    mode: ObserverMode,
    m_x: usize,
    m_th: usize,
}

impl<'a> CoSim<'a> {
    fn unpack(&self, z: &DVector<f64>) -> Unpacked {
        let (mx, mt) = (self.m_x, self.m_th);
        let x = DVector::from_column_slice(&z.as_slice()[0..mx]);
        let x_hat = DVector::from_column_slice(&z.as_slice()[mx..2 * mx]);
        let theta_hat = DVector::from_column_slice(&z.as_slice()[2 * mx..2 * mx + mt]);
        let off = 2 * mx + mt;
        let fc = DMatrix::from_column_slice(mx, mt, &z.as_slice()[off..off + mx * mt]);
        let fd =
            DMatrix::from_column_slice(mx, mt, &z.as_slice()[off + mx * mt..off + 2 * mx * mt]);
        (x, x_hat, theta_hat, fc, fd)
    }

    fn pack(
        &self,
        x: &DVector<f64>,
        x_hat: &DVector<f64>,
        theta_hat: &DVector<f64>,
        fc: &DMatrix<f64>,
        fd: &DMatrix<f64>,
    ) -> DVector<f64> {
        let mut out = Vec::with_capacity(2 * self.m_x + self.m_th + 2 * self.m_x * self.m_th);
        out.extend_from_slice(x.as_slice());
        out.extend_from_slice(x_hat.as_slice());
        out.extend_from_slice(theta_hat.as_slice());
        out.extend_from_slice(fc.as_slice());
        out.extend_from_slice(fd.as_slice());
        DVector::from_vec(out)
    }

    fn flow(&self, t: f64, j: u32, z: &DVector<f64>) -> DVector<f64> {
        let (x, x_hat, theta_hat, fc, fd) = self.unpack(z);
        let h = &self.plant.output;
        let y = h * &x;
        let u_v = self.u.eval(t, j);
        let ctx = PlantCtx { t, j, y: &y, u: &u_v, x: &x };
        let a_c = (self.plant.a_c)(&ctx);
        let psi_c = (self.plant.psi_c)(&ctx);
        let b_c = (self.plant.input_c)(&ctx);
        let dx = &a_c * &x + &b_c + &psi_c * self.theta;

        if self.mode == ObserverMode::DiscreteOnly {
            // Only the plant part moves; the estimator holds on flows.
            let zeros_m = DMatrix::zeros(self.m_x, self.m_th);
            return self.pack(
                &dx,
                &DVector::zeros(self.m_x),
                &DVector::zeros(self.m_th),
                &zeros_m,
                &zeros_m,
            );
        }

        let inj = &y - h * &x_hat;
        let psi = fc.transpose() * h.transpose(); // m_th x m_y
        let a_eta = &a_c - &self.cfg.k_c * h;
        let dth = &psi * &inj * self.cfg.gamma_c;
        let dx_hat = &a_c * &x_hat
            + &b_c
            + &self.cfg.k_c * &inj
            + &psi_c * &theta_hat
            + &fc * (&psi * &inj) * self.cfg.gamma_c;
        let dfc = a_eta * &fc + &psi_c;
        let dfd = DMatrix::zeros(self.m_x, self.m_th);
        let _ = fd;
        self.pack(&dx, &dx_hat, &dth, &dfc, &dfd)
    }

    fn rk4(&self, t: f64, j: u32, z: &DVector<f64>, h: f64) -> DVector<f64> {
        let k1 = self.flow(t, j, z);
        let k2 = self.flow(t + h / 2.0, j, &(z + &k1 * (h / 2.0)));
        let k3 = self.flow(t + h / 2.0, j, &(z + &k2 * (h / 2.0)));
        let k4 = self.flow(t + h, j, &(z + &k3 * h));
        z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    fn jump(&self, t: f64, j: u32, z: &DVector<f64>) -> DVector<f64> {
        let (x, x_hat, theta_hat, fc, fd) = self.unpack(z);
        let h = &self.plant.output;
        let y = h * &x;
        let u_v = self.u.eval(t, j);
        let ctx = PlantCtx { t, j, y: &y, u: &u_v, x: &x };
        let a_d = (self.plant.a_d)(&ctx);
        let psi_d = (self.plant.psi_d)(&ctx);
        let b_d = (self.plant.input_d)(&ctx);
        let x_plus = &a_d * &x + &b_d + &psi_d * self.theta;

        match self.mode {
            ObserverMode::ContinuousOnly => {
                // The physics jumps; the purely continuous estimator is
                // unaware of it and integrates straight through, so its
                // state picks up the full jump mismatch.
                self.pack(&x_plus, &x_hat, &theta_hat, &fc, &fd)
            }
            ObserverMode::Hybrid | ObserverMode::DiscreteOnly => {
                // Both modes adapt across jumps through the jump filter.
                let gamma = &fd;
                let b_eta = &a_d - &self.cfg.k_d * h;
                let psi_jump = gamma.transpose() * h.transpose(); // pre-jump value
                let denom = 1.0 + self.cfg.gamma_d * psi_jump.norm_squared();
                let inj = &y - h * &x_hat;
                // The filter update comes first: the state injection uses the
                // post-jump filter.
                let fd_plus = &b_eta * gamma + &psi_d;
                let correction = &psi_jump * &inj * (self.cfg.gamma_d / denom);
                let x_hat_plus = &a_d * &x_hat
                    + &b_d
                    + &self.cfg.k_d * &inj
                    + &fd_plus * &correction
                    + &psi_d * &theta_hat;
                let theta_hat_plus = &theta_hat + &correction;
                self.pack(&x_plus, &x_hat_plus, &theta_hat_plus, &fc, &fd_plus)
            }
        }
    }
}

fn run_observer(
    plant: &PlantModel,
    theta_true: &DVector<f64>,
    u: &InputSignal,
    x0: &DVector<f64>,
    cfg: &ObserverConfig,
    sim: &SimConfig,
    mode: ObserverMode,
) -> Result<EstimatorTrace, EstimatorError> {
    let (m_x, m_th) = (plant.state_dim, plant.theta_dim);
    let m_y = plant.output.nrows();
    if x0.len() != m_x || theta_true.len() != m_th {
        return Err(EstimatorError::DimensionMismatch(format!(
            "x0 ({}) or theta ({}) do not match plant dims ({m_x}, {m_th})",
            x0.len(),
            theta_true.len()
        )));
    }
    if cfg.k_c.shape() != (m_x, m_y)
        || cfg.k_d.shape() != (m_x, m_y)
        || cfg.filter_c0.shape() != (m_x, m_th)
        || cfg.filter_d0.shape() != (m_x, m_th)
        || cfg.x_hat0.len() != m_x
        || cfg.theta_hat0.len() != m_th
    {
        return Err(EstimatorError::DimensionMismatch(
            "observer gains or initial conditions do not match plant dimensions".into(),
        ));
    }
    if !(plant.flow_set)(x0) && !(plant.jump_set)(x0) {
        return Err(EstimatorError::PlantSimulationFailed(
            "initial state lies outside both the flow and jump sets".into(),
        ));
    }

    let co = CoSim { plant, theta: theta_true, u, cfg, mode, m_x, m_th };
    let mut z = co.pack(x0, &cfg.x_hat0, &cfg.theta_hat0, &cfg.filter_c0, &cfg.filter_d0);
    let mut t = 0.0f64;
    let mut j = 0u32;
    let plant_x = |z: &DVector<f64>| DVector::from_column_slice(&z.as_slice()[0..m_x]);

    // Recorded node blocks, one per realized interval.
    let mut blocks: NodeBlocks = Vec::new();
    let mut block_start = t;
    let mut block: Vec<(f64, DVector<f64>)> = vec![(t, z.clone())];
    let mut jumps_at_instant = 0u32;

    loop {
        while (plant.jump_set)(&plant_x(&z)) {
            if j >= sim.j_max {
                break;
            }
            if jumps_at_instant >= sim.zeno_guard {
                return Err(EstimatorError::PlantSimulationFailed(format!(
                    "Zeno guard tripped at (t={t}, j={j})"
                )));
            }
            jumps_at_instant += 1;
            z = co.jump(t, j, &z);
            blocks.push((block_start, t, j, std::mem::take(&mut block)));
            j += 1;
            block_start = t;
            block.push((t, z.clone()));
        }
        if j >= sim.j_max && (plant.jump_set)(&plant_x(&z)) {
            break; // jump budget exhausted
        }
        if t >= sim.t_max - 1e-12 {
            break;
        }
        if !(plant.flow_set)(&plant_x(&z)) {
            return Err(EstimatorError::PlantSimulationFailed(format!(
                "plant state left both sets at (t={t}, j={j})"
            )));
        }

        let h = sim.step.min(sim.t_max - t);
        let z_next = co.rk4(t, j, &z, h);
        if (plant.jump_set)(&plant_x(&z_next)) {
            // Bisect the plant's jump-set entry instant.
            let mut lo = 0.0f64;
            let mut hi = h;
            let tol = (1e-9 * h).max(f64::MIN_POSITIVE);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                let zm = co.rk4(t, j, &z, mid);
                if (plant.jump_set)(&plant_x(&zm)) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            z = co.rk4(t, j, &z, hi);
            t += hi;
            block.push((t, z.clone()));
            jumps_at_instant = 0;
            continue;
        }
        t += h;
        z = z_next;
        block.push((t, z.clone()));
        jumps_at_instant = 0;
    }
    blocks.push((block_start, t, j, block));

    assemble_trace(co, theta_true, blocks, mode, cfg)
}

fn assemble_trace(
    co: CoSim<'_>,
    theta_true: &DVector<f64>,
    mut blocks: NodeBlocks,
    mode: ObserverMode,
    cfg: &ObserverConfig,
) -> Result<EstimatorTrace, EstimatorError> {
    // Squash sub-tolerance flow stretches (deep jump accumulations) into
    // degenerate single-sample intervals, keeping the pre-jump node.
    for (start, end, _, nodes) in blocks.iter_mut() {
        if *end - *start <= crate::hybrid_time::TIME_TOL && nodes.len() > 1 {
            nodes.drain(..nodes.len() - 1);
        }
    }
    let breakpoints: Vec<(f64, f64, u32)> =
        blocks.iter().map(|(a, b, j, _)| (*a, *b, *j)).collect();
    let dom = HybridTimeDomain::new(&breakpoints)?;
    let h = co.plant.output.clone();
    let n_blocks = blocks.len();

    let project =
        |f: &dyn Fn(&DVector<f64>, bool) -> DMatrix<f64>| -> Result<HybridArc, EstimatorError> {
            let samples: Vec<Vec<(f64, DMatrix<f64>)>> = blocks
                .iter()
                .enumerate()
                .map(|(bi, (_, _, _, nodes))| {
                    let followed_by_jump = bi + 1 < n_blocks;
                    nodes
                        .iter()
                        .enumerate()
                        .map(|(si, (t, z))| {
                            let pre_jump = followed_by_jump && si + 1 == nodes.len();
                            (*t, f(z, pre_jump))
                        })
                        .collect()
                })
                .collect();
            HybridArc::new(dom.clone(), samples)
                .map_err(|e| EstimatorError::DimensionMismatch(e.to_string()))
        };

    let (m_x, m_th) = (co.m_x, co.m_th);
    let theta_hat = project(&|z, _| {
        DMatrix::from_column_slice(m_th, 1, &z.as_slice()[2 * m_x..2 * m_x + m_th])
    })?;
    let theta_err = project(&|z, _| {
        let th = DVector::from_column_slice(&z.as_slice()[2 * m_x..2 * m_x + m_th]);
        let e = th - theta_true;
        DMatrix::from_column_slice(m_th, 1, e.as_slice())
    })?;
    let x_hat = project(&|z, _| DMatrix::from_column_slice(m_x, 1, &z.as_slice()[m_x..2 * m_x]))?;
    let state_err = project(&|z, _| {
        let x = DVector::from_column_slice(&z.as_slice()[0..m_x]);
        let xh = DVector::from_column_slice(&z.as_slice()[m_x..2 * m_x]);
        DMatrix::from_column_slice(m_x, 1, (x - xh).as_slice())
    })?;
    let off = 2 * m_x + m_th;
    let filter_c = project(&|z, _| {
        DMatrix::from_column_slice(m_x, m_th, &z.as_slice()[off..off + m_x * m_th])
    })?;
    let filter_d = project(&|z, _| {
        DMatrix::from_column_slice(m_x, m_th, &z.as_slice()[off + m_x * m_th..off + 2 * m_x * m_th])
    })?;

    // The switched regressor: the flow branch reads Gamma_c, the jump branch
    // the pre-jump Gamma_d (the filter's own update happens after its value
    // is read).
    let h_t = h.transpose();
    let psi_bar = project(&|z, pre_jump| {
        let use_d = match mode {
            ObserverMode::Hybrid => pre_jump,
            ObserverMode::ContinuousOnly => false,
            ObserverMode::DiscreteOnly => true,
        };
        let base = if use_d { off + m_x * m_th } else { off };
        let g = DMatrix::from_column_slice(m_x, m_th, &z.as_slice()[base..base + m_x * m_th]);
        g.transpose() * &h_t
    })?;
    let gamma_d = cfg.gamma_d;
    let sigma = psi_bar.map(|p| {
        let denom = 1.0 + gamma_d * p.norm_squared();
        p * p.transpose() * (gamma_d / denom)
    });
    let eta = project(&|z, _| {
        let x = DVector::from_column_slice(&z.as_slice()[0..m_x]);
        let xh = DVector::from_column_slice(&z.as_slice()[m_x..2 * m_x]);
        let th = DVector::from_column_slice(&z.as_slice()[2 * m_x..2 * m_x + m_th]);
        let fc = DMatrix::from_column_slice(m_x, m_th, &z.as_slice()[off..off + m_x * m_th]);
        let e = x - xh;
        let eta = &e + fc * (th - theta_true);
        DMatrix::from_column_slice(m_x, 1, eta.as_slice())
    })?;

    Ok(EstimatorTrace {
        kind: TraceKind::Observer,
        gamma_c: co.cfg.gamma_c,
        gamma_d: co.cfg.gamma_d,
        theta_hat,
        theta_err: Some(theta_err),
        psi: None,
        x_hat: Some(x_hat),
        state_err: Some(state_err),
        filter_c: Some(filter_c),
        filter_d: Some(filter_d),
        psi_bar: Some(psi_bar),
        sigma: Some(sigma),
        eta: Some(eta),
    })
}
