//! `hyperest`: run hybrid-excitation benchmark scenarios, certify excitation
//! properties, and compare estimators.
//!
//! Exit codes: 0 success, 1 expected-result (or verdict) failure, 2 input
//! error, 3 domain/length error.

mod manifest;
mod svg;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use hyperest::estimators::{build_error_system, gradient_error_pair, EstimatorTrace};
use hyperest::excitation::{
    check_cpe, check_dpe, check_hpe, check_huo, write_report, write_windows_csv, ExcitationError,
    ExcitationReport, LyapunovCertificate,
};
use hyperest::hybrid_sim::{fit_ues_envelope, LinearHybridSystem};
use hyperest::hybrid_time::{read_arc_csv, write_arc_csv, HybridArc};
use hyperest::scenarios::{
    build_regression_data, bundled, parse_scenario, run_scenario, ScenarioKind, ScenarioRun,
    ScenarioSpec,
};

use manifest::{hash_text, ConfigEcho, ExpectationRecord, RunManifest};

#[derive(Parser)]
#[command(name = "hyperest", version, about = "Hybrid excitation benchmarks and certification")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every estimator and check a scenario names; write traces, plots
    /// and a manifest.
    Run {
        /// Scenario file (`.scn`); bundled names like `eq261.scn` also work.
        scenario: PathBuf,
        /// Output directory (default: $HYPEREST_OUT or ./hyperest-out).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify an excitation property of a scenario's data or of a signal
    /// CSV.
    Certify {
        /// Scenario file or an arc CSV holding the regressor signal.
        input: PathBuf,
        /// Which property to check.
        #[arg(long, value_parser = ["cpe", "dpe", "hpe", "huo"])]
        kind: String,
        /// Window length (hybrid length for hpe/huo, seconds for cpe, jump
        /// count for dpe). Defaults to the scenario's matching certify entry.
        #[arg(long = "K")]
        k: Option<f64>,
        /// Scan stride along flows.
        #[arg(long)]
        stride: Option<f64>,
        /// Adaptation gain used to build the pair from a raw signal.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a scenario's estimators and print a side-by-side metric table.
    Compare {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_out(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("HYPEREST_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hyperest-out"))
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run { scenario, out } => cmd_run(&scenario, &default_out(out)),
        Cmd::Certify { input, kind, k, stride, gamma, out } => {
            cmd_certify(&input, &kind, k, stride, gamma, &default_out(out))
        }
        Cmd::Compare { scenario, out } => cmd_compare(&scenario, &default_out(out)),
    };
    match code {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            let text = format!("{err:#}");
            let code =
                if text.contains("too short") || text.contains("shorter than") { 3 } else { 2 };
            std::process::exit(code);
        }
    }
}

fn load_scenario_text(path: &Path) -> Result<(String, String)> {
    let name = path
        .file_name()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .unwrap_or_else(|| path.display().to_string());
    match fs::read_to_string(path) {
        Ok(text) => Ok((name, text)),
        Err(err) => match bundled::get(&name) {
            Some(text) => Ok((name, text.to_string())),
            None => Err(anyhow!("cannot read scenario {}: {err}", path.display())),
        },
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

fn cmd_run(scenario_path: &Path, out_root: &Path) -> Result<i32> {
    let (name, text) = load_scenario_text(scenario_path)?;
    let spec = parse_scenario(&text).map_err(|e| anyhow!("{e}"))?;
    let run = run_scenario(&spec).map_err(|e| anyhow!("{e}"))?;

    let out_dir = out_root.join(&spec.name);
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let mut outputs: Vec<String> = Vec::new();

    let mut trace_arcs = Vec::new();
    for (ename, trace) in &run.traces {
        for (arc_name, arc) in trace.arcs() {
            let file = format!("{ename}_{arc_name}.csv");
            let mut buf = Vec::new();
            write_arc_csv(arc, &mut buf)?;
            fs::write(out_dir.join(&file), buf)?;
            let (r, c) = arc.shape();
            trace_arcs.push(manifest::TraceArcRecord {
                estimator: ename.clone(),
                arc: arc_name.to_string(),
                shape: [r, c],
                file: file.clone(),
            });
            outputs.push(file);
        }
    }
    for (cname, report) in &run.reports {
        let file = format!("certify_{cname}.txt");
        let mut buf = Vec::new();
        write_report(report, &mut buf)?;
        fs::write(out_dir.join(&file), buf)?;
        outputs.push(file);
        let file = format!("certify_{cname}_windows.csv");
        let mut buf = Vec::new();
        write_windows_csv(report, &mut buf)?;
        fs::write(out_dir.join(&file), buf)?;
        outputs.push(file);
    }

    // Error-norm plots: one chart per recorded error kind, all estimators
    // overlaid; flows solid, jumps dashed.
    for (arc_field, title, file) in [
        (ErrKind::Theta, "parameter error (log10 norm)", "theta_err.svg"),
        (ErrKind::State, "state error (log10 norm)", "state_err.svg"),
    ] {
        let mut series = Vec::new();
        for (si, (ename, trace)) in run.traces.iter().enumerate() {
            let arc = match arc_field {
                ErrKind::Theta => trace.theta_err.as_ref(),
                ErrKind::State => trace.state_err.as_ref(),
            };
            if let Some(arc) = arc {
                series.push(norm_series(ename, svg::SERIES_COLORS[si % 4], arc));
            }
        }
        if !series.is_empty() {
            let chart =
                svg::line_chart(&format!("{}: {title}", spec.name), "t", "log10 norm", &series);
            fs::write(out_dir.join(file), chart)?;
            outputs.push(file.to_string());
        }
    }

    let manifest = RunManifest {
        scenario: name,
        scenario_hash: hash_text(&text),
        config: ConfigEcho {
            step: spec.sim.step,
            t_max: spec.sim.t_max,
            j_max: spec.sim.j_max,
            zeno_guard: spec.sim.zeno_guard,
            estimators: spec.estimators.clone(),
        },
        outputs: outputs.clone(),
        trace_arcs,
        // JSON has no representation for non-finite numbers; metrics like a
        // never-reached convergence time stay on stdout only.
        metrics: run
            .metrics
            .iter()
            .filter(|(_, v)| v.is_finite())
            .cloned()
            .collect::<BTreeMap<_, _>>(),
        expectations: run
            .expectations
            .iter()
            .map(|er| ExpectationRecord {
                expression: format!(
                    "{} {} {}",
                    er.expectation.metric,
                    er.expectation.op.symbol(),
                    er.expectation.value
                ),
                observed: er.observed,
                pass: er.pass,
            })
            .collect(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)?;
    fs::write(out_dir.join("manifest.json"), manifest_json)?;

    println!("scenario {} -> {}", spec.name, out_dir.display());
    for (metric, value) in &run.metrics {
        println!("  {metric} = {value}");
    }
    let mut failed = 0usize;
    for er in &run.expectations {
        let mark = if er.pass { "ok " } else { "FAIL" };
        println!(
            "  [{mark}] {} {} {} (observed {:?})",
            er.expectation.metric,
            er.expectation.op.symbol(),
            er.expectation.value,
            er.observed
        );
        if !er.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} expectation(s) failed");
        return Ok(1);
    }
    Ok(0)
}

enum ErrKind {
    Theta,
    State,
}

fn norm_series(label: &str, color: &'static str, arc: &HybridArc) -> svg::Series {
    let mut flows = Vec::new();
    for block in arc.blocks() {
        flows.push(block.iter().map(|(t, v)| (*t, v.norm().max(1e-16).log10())).collect());
    }
    let mut jumps = Vec::new();
    for (t_end, j) in arc.domain().jump_instants() {
        let pre = arc.pre_jump_value(j).unwrap().norm().max(1e-16).log10();
        let post = arc.block(j + 1).unwrap().first().unwrap().1.norm().max(1e-16).log10();
        jumps.push((t_end, pre, post));
    }
    svg::Series { label: label.to_string(), color, flows, jumps }
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

struct CertifyInputs {
    /// Raw regressor signal when available (cpe/dpe need it).
    psi: Option<HybridArc>,
    /// The pair `(A, B)` for hpe/huo.
    pair: Option<LinearHybridSystem>,
    default_stride: f64,
    sim: hyperest::hybrid_sim::SimConfig,
}

fn certify_inputs(input: &Path, kind: &str, gamma: f64) -> Result<CertifyInputs> {
    let is_scenario = input.extension().is_some_and(|e| e == "scn")
        || bundled::get(input.file_name().and_then(|s| s.to_str()).unwrap_or_default()).is_some();
    if is_scenario {
        let (_, text) = load_scenario_text(input)?;
        let spec = parse_scenario(&text).map_err(|e| anyhow!("{e}"))?;
        let sim = spec.sim.to_config();
        match spec.kind {
            ScenarioKind::Regression => {
                let data = build_regression_data(&spec).map_err(|e| anyhow!("{e}"))?;
                let (a, b) = gradient_error_pair(&data.psi, gamma, gamma);
                let pair = LinearHybridSystem::homogeneous(a, b).map_err(|e| anyhow!("{e}"))?;
                Ok(CertifyInputs {
                    psi: Some(data.psi),
                    pair: Some(pair),
                    default_stride: spec.sim.step * 10.0,
                    sim,
                })
            }
            ScenarioKind::Plant => {
                // Certification runs on the hybrid observer's switched
                // regressor pair.
                let mut probe: ScenarioSpec = spec.clone();
                probe.estimators = vec!["hybrid".into()];
                probe.certify.clear();
                probe.expect.clear();
                let run = run_scenario(&probe).map_err(|e| anyhow!("{e}"))?;
                let trace: &EstimatorTrace =
                    &run.traces.first().ok_or_else(|| anyhow!("observer run produced no trace"))?.1;
                let pair = build_error_system(trace).map_err(|e| anyhow!("{e}"))?;
                Ok(CertifyInputs {
                    psi: trace.psi_bar.clone(),
                    pair: Some(pair),
                    default_stride: spec.sim.step * 10.0,
                    sim,
                })
            }
        }
    } else {
        let file = fs::File::open(input)
            .with_context(|| format!("cannot read signal CSV {}", input.display()))?;
        let psi = read_arc_csv(std::io::BufReader::new(file)).map_err(|e| anyhow!("{e}"))?;
        let (t0, _) = psi.domain().start();
        let (t1, _) = psi.domain().end();
        let span = (t1 - t0).max(1e-6);
        let pair = if kind == "hpe" || kind == "huo" {
            let (a, b) = gradient_error_pair(&psi, gamma, gamma);
            Some(LinearHybridSystem::homogeneous(a, b).map_err(|e| anyhow!("{e}"))?)
        } else {
            None
        };
        Ok(CertifyInputs {
            psi: Some(psi),
            pair,
            default_stride: span / 200.0,
            sim: hyperest::hybrid_sim::SimConfig::unbounded(span / 2000.0),
        })
    }
}

fn cmd_certify(
    input: &Path,
    kind: &str,
    k: Option<f64>,
    stride: Option<f64>,
    gamma: f64,
    out_root: &Path,
) -> Result<i32> {
    let inputs = certify_inputs(input, kind, gamma)?;
    let k = k.ok_or_else(|| anyhow!("--K is required"))?;
    let stride = stride.unwrap_or(inputs.default_stride);

    let as_exit3 = |e: ExcitationError| match e {
        ExcitationError::DomainTooShortForK { .. }
        | ExcitationError::DomainTooShortForT { .. }
        | ExcitationError::TooFewJumps { .. } => (3, anyhow!("{e}")),
        other => (2, anyhow!("{other}")),
    };

    let psi = inputs.psi.as_ref();
    let pair = inputs.pair.as_ref();
    let report: std::result::Result<ExcitationReport, (i32, anyhow::Error)> = match kind {
        "cpe" => {
            let psi = psi.ok_or_else(|| anyhow!("cpe needs a signal"))?;
            let (t0, _) = psi.domain().start();
            let (t1, _) = psi.domain().end();
            let span = t1 - t0;
            let t_window = if k > span {
                println!("note: T = {k} exceeds the data span {span:.4}; clamping to the span");
                span
            } else {
                k
            };
            check_cpe(psi, t_window, stride).map_err(as_exit3)
        }
        "dpe" => {
            let psi = psi.ok_or_else(|| anyhow!("dpe needs a signal"))?;
            let available = psi.domain().num_jumps();
            let mut n = k.round().max(1.0) as usize;
            if n > available && available > 0 {
                println!("note: N = {n} exceeds the {available} available jumps; clamping");
                n = available;
            }
            check_dpe(psi, n).map_err(as_exit3)
        }
        "hpe" => {
            let pair = pair.ok_or_else(|| anyhow!("hpe needs a pair"))?;
            check_hpe(pair.a(), pair.b(), k, stride).map_err(as_exit3)
        }
        "huo" => {
            let pair = pair.ok_or_else(|| anyhow!("huo needs a pair"))?;
            match LyapunovCertificate::structural(pair.a(), pair.b()) {
                Ok(cert) => check_huo(pair, &cert, k, stride, &inputs.sim).map_err(as_exit3),
                Err(e) => return Err(anyhow!("{e}")),
            }
        }
        other => return Err(anyhow!("unknown kind {other}")),
    };
    let report = match report {
        Ok(r) => r,
        Err((code, err)) => {
            eprintln!("error: {err}");
            return Ok(code);
        }
    };

    fs::create_dir_all(out_root)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("signal");
    let report_path = out_root.join(format!("{stem}_{kind}_report.txt"));
    let mut buf = Vec::new();
    write_report(&report, &mut buf)?;
    fs::write(&report_path, buf)?;
    let windows_path = out_root.join(format!("{stem}_{kind}_windows.csv"));
    let mut buf = Vec::new();
    write_windows_csv(&report, &mut buf)?;
    fs::write(&windows_path, buf)?;

    println!(
        "{}: holds = {} (mu = {:.6}, K = {}, worst window base = ({:.4}, {}))",
        report.kind,
        report.holds,
        report.mu,
        report.k,
        report.worst_window_base.0,
        report.worst_window_base.1
    );
    println!("report: {}", report_path.display());
    println!("windows: {}", windows_path.display());
    Ok(if report.holds { 0 } else { 1 })
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn cmd_compare(scenario_path: &Path, out_root: &Path) -> Result<i32> {
    let (_, text) = load_scenario_text(scenario_path)?;
    let spec = parse_scenario(&text).map_err(|e| anyhow!("{e}"))?;
    let run: ScenarioRun = run_scenario(&spec).map_err(|e| anyhow!("{e}"))?;

    let mut table = String::new();
    table.push_str(&format!(
        "{:<12} {:>14} {:>14} {:>16} {:>10} {:>10}\n",
        "estimator", "final |th_err|", "final |e|", "t+j to 1e-2", "kappa", "lambda"
    ));
    for (name, trace) in &run.traces {
        let theta_err = trace.final_theta_err_norm().map_or("-".to_string(), |v| format!("{v:.6}"));
        let state_err = trace.final_state_err_norm().map_or("-".to_string(), |v| format!("{v:.6}"));
        let conv = run.metric(&format!("{name}.convergence_tj")).map_or("-".to_string(), |v| {
            if v.is_finite() {
                format!("{v:.2}")
            } else {
                "never".to_string()
            }
        });
        let fitted = trace.theta_err.as_ref().and_then(|arc| fit_ues_envelope(arc, 0.2));
        let (kappa, lambda) = match fitted {
            Some((k, l)) => (format!("{k:.3}"), format!("{l:.4}")),
            None => ("-".to_string(), "-".to_string()),
        };
        table.push_str(&format!(
            "{name:<12} {theta_err:>14} {state_err:>14} {conv:>16} {kappa:>10} {lambda:>10}\n"
        ));
    }
    print!("{table}");

    fs::create_dir_all(out_root)?;
    let path = out_root.join(format!("{}_compare.txt", spec.name));
    fs::write(&path, table)?;
    println!("table: {}", path.display());
    Ok(0)
}
