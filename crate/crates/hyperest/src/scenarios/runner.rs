use nalgebra::{DMatrix, DVector};

use super::builders::{build_bouncing_ball, build_mixed_data_scenario};
use super::scn::{CertifySpec, DomainSpec, Expectation, ScenarioKind, ScenarioSpec, SignalSpec};
use super::ScenarioError;
use crate::estimators::{
    build_error_system, gradient_error_pair, run_continuous_gradient, run_continuous_observer,
    run_discrete_gradient, run_discrete_observer, run_hybrid_gradient, run_hybrid_observer,
    EstimatorTrace, GradientConfig, InputSignal, ObserverConfig, RegressionData,
};
use crate::excitation::{
    check_cpe, check_dpe, check_hpe, check_huo, ExcitationReport, LyapunovCertificate,
};
use crate::hybrid_sim::{LinearHybridSystem, SimConfig};
use crate::hybrid_time::{HybridArc, HybridTimeDomain};

/// Error-norm threshold used for the `convergence_tj` metric.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct ExpectationResult {
    pub expectation: Expectation,
    pub observed: Option<f64>,
    pub pass: bool,
}

/// Everything a scenario run produces: estimator traces, excitation reports,
/// a flat metric table, and the evaluated expectations.
pub struct ScenarioRun {
    pub traces: Vec<(String, EstimatorTrace)>,
    pub reports: Vec<(String, ExcitationReport)>,
    pub metrics: Vec<(String, f64)>,
    pub expectations: Vec<ExpectationResult>,
}

impl ScenarioRun {
    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn all_expectations_pass(&self) -> bool {
        self.expectations.iter().all(|e| e.pass)
    }
}

fn regression_domain(spec: &ScenarioSpec) -> Result<HybridTimeDomain, ScenarioError> {
    match spec.domain.as_ref() {
        Some(DomainSpec::Periodic { period, count }) => {
            let breakpoints: Vec<(f64, f64, u32)> = (0..*count)
                .map(|j| (period * f64::from(j), period * f64::from(j + 1), j))
                .collect();
            Ok(HybridTimeDomain::new(&breakpoints)?)
        }
        Some(DomainSpec::Breakpoints(bps)) => Ok(HybridTimeDomain::new(bps)?),
        None => Err(ScenarioError::Validation {
            field: "domain".into(),
            msg: "regression scenario without a domain".into(),
        }),
    }
}

fn eval_vector(exprs: &[super::expr::Expr], t: f64, j: u32) -> DMatrix<f64> {
    DMatrix::from_iterator(exprs.len(), 1, exprs.iter().map(|e| e.eval(t, j)))
}

/// Materialise the regression data of a scenario on a grid of half the
/// integration step (so integrator stage points land on stored samples).
pub fn build_regression_data(spec: &ScenarioSpec) -> Result<RegressionData, ScenarioError> {
    let theta = DVector::from_vec(spec.theta.clone());
    let dt = spec.sim.step / 2.0;
    if let Some(SignalSpec { psi_flow, psi_jump }) = &spec.signals {
        let dom = regression_domain(spec)?;
        let jump = |t: f64, j: u32| eval_vector(psi_jump, t, j);
        let psi = HybridArc::sample(&dom, dt, |t, j| eval_vector(psi_flow, t, j), Some(&jump));
        let th = DMatrix::from_column_slice(theta.len(), 1, theta.as_slice());
        let y = psi.map(|p| p.transpose() * &th);
        return RegressionData::new(psi, y, Some(theta))
            .map_err(|e| ScenarioError::Estimator(e.to_string()));
    }
    if let Some(mixed) = &spec.mixed {
        let flow = mixed.psi_flow.clone();
        let psi1 =
            move |t: f64| DVector::from_iterator(flow.len(), flow.iter().map(|e| e.eval(t, 0)));
        let th = theta.clone();
        let y1 = move |t: f64| psi1(t).dot(&th);
        let flow2 = mixed.psi_flow.clone();
        let psi1b =
            move |t: f64| DVector::from_iterator(flow2.len(), flow2.iter().map(|e| e.eval(t, 0)));
        let old: Vec<(DVector<f64>, f64)> = mixed
            .old_psi
            .iter()
            .map(|v| {
                let p = DVector::from_vec(v.clone());
                let y = p.dot(&theta);
                (p, y)
            })
            .collect();
        return build_mixed_data_scenario(
            &psi1b,
            &y1,
            &old,
            &mixed.treatment_times,
            mixed.horizon,
            dt,
            Some(theta),
        );
    }
    Err(ScenarioError::Validation {
        field: "signals".into(),
        msg: "regression scenario without signal definitions".into(),
    })
}

fn observer_config(spec: &ScenarioSpec, m_x: usize, m_th: usize) -> ObserverConfig {
    let (_, mut cfg) = build_bouncing_ball();
    if let Some(o) = &spec.observer {
        cfg.k_c = DMatrix::from_column_slice(m_x, 1, &o.k_c);
        cfg.k_d = DMatrix::from_column_slice(m_x, 1, &o.k_d);
        cfg.gamma_c = o.gamma_c;
        cfg.gamma_d = o.gamma_d;
        cfg.x_hat0 = DVector::from_vec(o.x_hat0.clone());
        cfg.theta_hat0 = DVector::from_vec(o.theta_hat0.clone());
        cfg.filter_c0 = DMatrix::from_column_slice(m_x, m_th, &o.filter_c0);
        cfg.filter_d0 = DMatrix::from_column_slice(m_x, m_th, &o.filter_d0);
    }
    cfg
}

fn certify_on_pair(
    c: &CertifySpec,
    psi: Option<&HybridArc>,
    pair: Option<&LinearHybridSystem>,
    sim: &SimConfig,
) -> Result<ExcitationReport, ScenarioError> {
    let as_err = |e: crate::excitation::ExcitationError| ScenarioError::Excitation(e.to_string());
    match c.kind.as_str() {
        "cpe" => {
            let psi = psi.ok_or_else(|| ScenarioError::Validation {
                field: format!("certify.{}", c.name),
                msg: "cpe needs a regressor signal".into(),
            })?;
            check_cpe(psi, c.k, c.stride).map_err(as_err)
        }
        "dpe" => {
            let psi = psi.ok_or_else(|| ScenarioError::Validation {
                field: format!("certify.{}", c.name),
                msg: "dpe needs a regressor signal".into(),
            })?;
            check_dpe(psi, c.k.round().max(1.0) as usize).map_err(as_err)
        }
        "hpe" => {
            let sys = pair.ok_or_else(|| ScenarioError::Validation {
                field: format!("certify.{}", c.name),
                msg: "hpe needs an (A, B) pair".into(),
            })?;
            check_hpe(sys.a(), sys.b(), c.k, c.stride).map_err(as_err)
        }
        "huo" => {
            let sys = pair.ok_or_else(|| ScenarioError::Validation {
                field: format!("certify.{}", c.name),
                msg: "huo needs an (A, B) pair".into(),
            })?;
            let cert = LyapunovCertificate::structural(sys.a(), sys.b()).map_err(as_err)?;
            check_huo(sys, &cert, c.k, c.stride, sim).map_err(as_err)
        }
        other => Err(ScenarioError::Validation {
            field: format!("certify.{}", c.name),
            msg: format!("unknown check kind {other:?}"),
        }),
    }
}

fn trace_metrics(name: &str, trace: &EstimatorTrace, metrics: &mut Vec<(String, f64)>) {
    if let Some(err) = &trace.theta_err {
        metrics.push((format!("{name}.final_theta_err"), err.terminal_value().norm()));
        let mut conv = f64::INFINITY;
        for (t, j, v) in err.iter_samples() {
            if v.norm() < CONVERGENCE_THRESHOLD {
                conv = err.domain().elapsed(t, j);
                break;
            }
        }
        metrics.push((format!("{name}.convergence_tj"), conv));
    }
    if let Some(err) = &trace.state_err {
        metrics.push((format!("{name}.final_state_err"), err.terminal_value().norm()));
    }
}

/// Run every estimator and excitation check a scenario names, collect the
/// metric table, and evaluate the expected-results block.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioRun, ScenarioError> {
    let sim = spec.sim.to_config();
    let mut traces: Vec<(String, EstimatorTrace)> = Vec::new();
    let mut reports: Vec<(String, ExcitationReport)> = Vec::new();
    let mut metrics: Vec<(String, f64)> = Vec::new();

    match spec.kind {
        ScenarioKind::Regression => {
            let data = build_regression_data(spec)?;
            if let Some(g) = &spec.gradient {
                let cfg = GradientConfig::with_gains(
                    g.gamma_c,
                    g.gamma_d,
                    DVector::from_vec(g.theta_hat0.clone()),
                );
                for name in &spec.estimators {
                    let run = match name.as_str() {
                        "hybrid" => run_hybrid_gradient(&data, &cfg, &sim),
                        "continuous" => run_continuous_gradient(&data, &cfg, &sim),
                        "discrete" => run_discrete_gradient(&data, &cfg, &sim),
                        other => {
                            return Err(ScenarioError::Validation {
                                field: "estimators".into(),
                                msg: format!("unknown estimator {other:?}"),
                            })
                        }
                    }
                    .map_err(|e| ScenarioError::Estimator(e.to_string()))?;
                    trace_metrics(name, &run, &mut metrics);
                    traces.push((name.clone(), run));
                }
            }
            for c in &spec.certify {
                let (a, b) = gradient_error_pair(&data.psi, c.gamma, c.gamma);
                let pair = LinearHybridSystem::homogeneous(a, b)
                    .map_err(|e| ScenarioError::Estimator(e.to_string()))?;
                let report = certify_on_pair(c, Some(&data.psi), Some(&pair), &sim)?;
                metrics.push((format!("certify.{}.mu", c.name), report.mu));
                metrics.push((
                    format!("certify.{}.holds", c.name),
                    if report.holds { 1.0 } else { 0.0 },
                ));
                reports.push((c.name.clone(), report));
            }
        }
        ScenarioKind::Plant => {
            let plant_spec = spec.plant.as_ref().expect("validated");
            if plant_spec.model != "bouncing_ball" {
                return Err(ScenarioError::UnknownPlantModel(plant_spec.model.clone()));
            }
            let (plant, _) = build_bouncing_ball();
            let cfg = observer_config(spec, plant.state_dim, plant.theta_dim);
            let theta = DVector::from_vec(spec.theta.clone());
            let u = InputSignal::constant_scalar(plant_spec.u);
            let x0 = DVector::from_vec(plant_spec.x0.clone());

            let mut hybrid_trace: Option<EstimatorTrace> = None;
            for name in &spec.estimators {
                let run = match name.as_str() {
                    "hybrid" => run_hybrid_observer(&plant, &theta, &u, &x0, &cfg, &sim),
                    "continuous" => run_continuous_observer(&plant, &theta, &u, &x0, &cfg, &sim),
                    "discrete" => run_discrete_observer(&plant, &theta, &u, &x0, &cfg, &sim),
                    other => {
                        return Err(ScenarioError::Validation {
                            field: "estimators".into(),
                            msg: format!("unknown estimator {other:?}"),
                        })
                    }
                }
                .map_err(|e| ScenarioError::Estimator(e.to_string()))?;
                trace_metrics(name, &run, &mut metrics);
                if name == "hybrid" {
                    hybrid_trace = Some(run.clone());
                }
                traces.push((name.clone(), run));
            }
            if !spec.certify.is_empty() {
                let trace = match &hybrid_trace {
                    Some(t) => t.clone(),
                    None => run_hybrid_observer(&plant, &theta, &u, &x0, &cfg, &sim)
                        .map_err(|e| ScenarioError::Estimator(e.to_string()))?,
                };
                let pair = build_error_system(&trace)
                    .map_err(|e| ScenarioError::Estimator(e.to_string()))?;
                let psi_bar = trace.psi_bar.clone();
                for c in &spec.certify {
                    let report = certify_on_pair(c, psi_bar.as_ref(), Some(&pair), &sim)?;
                    metrics.push((format!("certify.{}.mu", c.name), report.mu));
                    metrics.push((
                        format!("certify.{}.holds", c.name),
                        if report.holds { 1.0 } else { 0.0 },
                    ));
                    reports.push((c.name.clone(), report));
                }
            }
        }
    }

    let expectations = spec
        .expect
        .iter()
        .map(|e| {
            let observed = metrics.iter().find(|(n, _)| *n == e.metric).map(|(_, v)| *v);
            let pass =
                observed.map(|obs| e.op.apply(obs, e.value, e.tol.unwrap_or(0.0))).unwrap_or(false);
            ExpectationResult { expectation: e.clone(), observed, pass }
        })
        .collect();

    Ok(ScenarioRun { traces, reports, metrics, expectations })
}
