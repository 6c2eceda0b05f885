use nalgebra::{DMatrix, DVector};

use super::ScenarioError;
use crate::estimators::{
    gradient_error_pair, InputSignal, ObserverConfig, PlantModel, RegressionData,
};
use crate::hybrid_sim::LinearHybridSystem;
use crate::hybrid_time::{HybridArc, HybridTimeDomain, TIME_TOL};

/// Impact scale of the bundled bouncing-ball plant: the jump multiplies the
/// velocity by `-theta / BALL_IMPACT_SCALE`, so the physical restitution is
/// 0.8 at `theta = 9.81`.
pub const BALL_IMPACT_SCALE: f64 = 12.2625;

/// The two-parameter benchmark regressor: flows excite only the first
/// direction (`[sin t, 0]`) while every jump sample is the fixed mixed
/// direction `[0.5, 1]`. Neither time scale alone is exciting, their
/// combination is. The domain is `count` flow periods of length `2*pi` with
/// one jump between consecutive periods.
pub fn build_benchmark_regressor(
    gamma: f64,
    num_periods: u32,
    dt: f64,
    theta: &DVector<f64>,
) -> Result<(RegressionData, LinearHybridSystem), ScenarioError> {
    if num_periods == 0 {
        return Err(ScenarioError::Validation {
            field: "num_periods".into(),
            msg: "need at least one period".into(),
        });
    }
    if theta.len() != 2 {
        return Err(ScenarioError::Validation {
            field: "theta".into(),
            msg: "the benchmark regressor is two-dimensional".into(),
        });
    }
    let period = 2.0 * std::f64::consts::PI;
    let breakpoints: Vec<(f64, f64, u32)> =
        (0..num_periods).map(|j| (period * f64::from(j), period * f64::from(j + 1), j)).collect();
    let dom = HybridTimeDomain::new(&breakpoints)?;
    let jump = |_: f64, _: u32| DMatrix::from_vec(2, 1, vec![0.5, 1.0]);
    let psi = HybridArc::sample(
        &dom,
        dt,
        |t, _| DMatrix::from_vec(2, 1, vec![t.sin(), 0.0]),
        Some(&jump),
    );
    let th = DMatrix::from_column_slice(2, 1, theta.as_slice());
    let y = psi.map(|p| p.transpose() * &th);
    let data = RegressionData::new(psi, y, Some(theta.clone()))
        .map_err(|e| ScenarioError::Estimator(e.to_string()))?;
    let (a, b) = gradient_error_pair(&data.psi, gamma, gamma);
    let sys = LinearHybridSystem::homogeneous(a, b)
        .map_err(|e| ScenarioError::Estimator(e.to_string()))?;
    Ok((data, sys))
}

/// Merge a real-time continuous data stream with stored samples treated at
/// given times: the regressor flows as `psi1(t)` on interval interiors and
/// carries `old_samples[k]` as the pre-jump value at the k-th treatment
/// time.
pub fn build_mixed_data_scenario(
    psi1: &dyn Fn(f64) -> DVector<f64>,
    y1: &dyn Fn(f64) -> f64,
    old_samples: &[(DVector<f64>, f64)],
    treatment_times: &[f64],
    horizon: f64,
    dt: f64,
    theta_true: Option<DVector<f64>>,
) -> Result<RegressionData, ScenarioError> {
    if old_samples.len() != treatment_times.len() {
        return Err(ScenarioError::MisalignedOldData {
            samples: old_samples.len(),
            times: treatment_times.len(),
        });
    }
    let mut prev = 0.0;
    for &tt in treatment_times {
        if tt <= prev + TIME_TOL || tt >= horizon - TIME_TOL {
            return Err(ScenarioError::Validation {
                field: "treatment_times".into(),
                msg: "must be strictly increasing and strictly inside the horizon".into(),
            });
        }
        prev = tt;
    }
    let mut breakpoints = Vec::with_capacity(treatment_times.len() + 1);
    let mut start = 0.0;
    for (j, &tt) in treatment_times.iter().enumerate() {
        breakpoints.push((start, tt, j as u32));
        start = tt;
    }
    breakpoints.push((start, horizon, treatment_times.len() as u32));
    let dom = HybridTimeDomain::new(&breakpoints)?;

    let m = psi1(0.0).len();
    let psi_jump = |t: f64, j: u32| {
        let _ = t;
        let v = &old_samples[j as usize].0;
        DMatrix::from_column_slice(v.len(), 1, v.as_slice())
    };
    let psi = HybridArc::sample(
        &dom,
        dt,
        |t, _| {
            let v = psi1(t);
            DMatrix::from_column_slice(m, 1, v.as_slice())
        },
        Some(&psi_jump),
    );
    let y_jump = |_: f64, j: u32| DMatrix::from_element(1, 1, old_samples[j as usize].1);
    let y = HybridArc::sample(&dom, dt, |t, _| DMatrix::from_element(1, 1, y1(t)), Some(&y_jump));
    RegressionData::new(psi, y, theta_true).map_err(|e| ScenarioError::Estimator(e.to_string()))
}

/// Propagator/forced-term pair of one condensed discrete step.
pub type DiscreteStep = (DMatrix<f64>, DMatrix<f64>);

/// Condense a continuous-time history `x' = A2(t) x + B2(t) theta` into the
/// discrete pairs relating its states at consecutive past times:
/// `x(tau_{j+1}) = A2_j x(tau_j) + B2_j theta`. The state propagator and the
/// forced integral are obtained together from one matrix variation-of-
/// constants integration per gap.
pub fn build_old_data_plant(
    a2: &dyn Fn(f64) -> DMatrix<f64>,
    b2: &dyn Fn(f64) -> DMatrix<f64>,
    past_times: &[f64],
    dt: f64,
) -> Result<Vec<DiscreteStep>, ScenarioError> {
    if past_times.len() < 2 {
        return Ok(Vec::new());
    }
    for w in past_times.windows(2) {
        if w[1] <= w[0] {
            return Err(ScenarioError::Validation {
                field: "past_times".into(),
                msg: "must be strictly increasing".into(),
            });
        }
    }
    let m = a2(past_times[0]).nrows();
    let p = b2(past_times[0]).ncols();
    let mut out = Vec::with_capacity(past_times.len() - 1);
    for w in past_times.windows(2) {
        let (tau0, tau1) = (w[0], w[1]);
        let mut mmat = DMatrix::<f64>::identity(m, m);
        let mut v = DMatrix::<f64>::zeros(m, p);
        let n = (((tau1 - tau0) / dt).ceil() as usize).max(1);
        let h = (tau1 - tau0) / n as f64;
        let rhs = |t: f64, mm: &DMatrix<f64>, vv: &DMatrix<f64>| {
            let a = a2(t);
            (&a * mm, &a * vv + b2(t))
        };
        let mut t = tau0;
        for _ in 0..n {
            let (k1m, k1v) = rhs(t, &mmat, &v);
            let (k2m, k2v) =
                rhs(t + h / 2.0, &(&mmat + &k1m * (h / 2.0)), &(&v + &k1v * (h / 2.0)));
            let (k3m, k3v) =
                rhs(t + h / 2.0, &(&mmat + &k2m * (h / 2.0)), &(&v + &k2v * (h / 2.0)));
            let (k4m, k4v) = rhs(t + h, &(&mmat + &k3m * h), &(&v + &k3v * h));
            mmat += (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
            v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
            t += h;
        }
        if !mmat.iter().all(|x| x.is_finite()) || !v.iter().all(|x| x.is_finite()) {
            return Err(ScenarioError::IntegrationFailure { tau0, tau1 });
        }
        out.push((mmat, v));
    }
    Ok(out)
}

/// The vertical bouncing ball with actuated jumps: position/velocity state,
/// measured height, damped fall, and an impact law that scales the velocity
/// by the unknown parameter and adds the input. Returns the plant and the
/// benchmark observer gains and initial conditions.
pub fn build_bouncing_ball() -> (PlantModel, ObserverConfig) {
    let a_c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, -0.1]);
    let a_d = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0]);
    let psi_c = DMatrix::from_column_slice(2, 1, &[0.0, -1.0]);
    let h = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let plant = PlantModel {
        state_dim: 2,
        theta_dim: 1,
        output: h,
        a_c: Box::new(move |_| a_c.clone()),
        a_d: Box::new(move |_| a_d.clone()),
        psi_c: Box::new(move |_| psi_c.clone()),
        // The jump regressor rides on the pre-jump impact velocity.
        psi_d: Box::new(|ctx| {
            DMatrix::from_column_slice(2, 1, &[0.0, -ctx.x[1] / BALL_IMPACT_SCALE])
        }),
        input_c: Box::new(|_| DVector::zeros(2)),
        input_d: Box::new(|ctx| DVector::from_vec(vec![0.0, ctx.u[0]])),
        flow_set: Box::new(|x| x[0] >= -1e-7),
        jump_set: Box::new(|x| x[0] <= 1e-9 && x[1] <= 0.0),
    };
    let cfg = ObserverConfig {
        k_c: DMatrix::from_column_slice(2, 1, &[0.7215, 1.1184]),
        k_d: DMatrix::from_column_slice(2, 1, &[-0.5, 0.5]),
        gamma_c: 0.4,
        gamma_d: 0.8,
        x_hat0: DVector::from_vec(vec![4.0, 0.1]),
        theta_hat0: DVector::from_vec(vec![8.0]),
        filter_c0: DMatrix::from_column_slice(2, 1, &[2.0, 4.0]),
        filter_d0: DMatrix::from_column_slice(2, 1, &[4.0, 3.0]),
    };
    (plant, cfg)
}

/// Constant input helper for plant scenarios.
pub fn constant_input(u: f64) -> InputSignal {
    InputSignal::constant_scalar(u)
}
