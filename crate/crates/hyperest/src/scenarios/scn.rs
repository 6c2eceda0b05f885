use std::fmt::Write as _;

use super::expr::Expr;
use super::ScenarioError;

/// A declarative benchmark scenario, loadable from the `.scn` text format
/// documented in `docs/scenario-format.md`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub kind: ScenarioKind,
    /// True parameter vector (regression target, or plant parameter).
    pub theta: Vec<f64>,
    pub domain: Option<DomainSpec>,
    pub signals: Option<SignalSpec>,
    pub mixed: Option<MixedDataSpec>,
    pub plant: Option<PlantSpec>,
    pub gradient: Option<GradientSpec>,
    pub observer: Option<ObserverSpec>,
    /// Estimators to run: any of `hybrid`, `continuous`, `discrete`.
    pub estimators: Vec<String>,
    pub sim: SimSpec,
    pub certify: Vec<CertifySpec>,
    pub expect: Vec<Expectation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Regression,
    Plant,
}

/// Hybrid time domain of a regression scenario: either an explicit interval
/// list or a periodic rule (one jump at the end of each period; jumps are
/// instantaneous, so the flow fills the whole period).
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Periodic { period: f64, count: u32 },
    Breakpoints(Vec<(f64, f64, u32)>),
}

/// Regressor definition over the domain: per-component expressions for flow
/// samples and jump samples. The output is derived from `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub psi_flow: Vec<Expr>,
    pub psi_jump: Vec<Expr>,
}

/// Regressor built by merging a real-time continuous signal with stored
/// samples treated at given times.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedDataSpec {
    pub psi_flow: Vec<Expr>,
    pub treatment_times: Vec<f64>,
    pub old_psi: Vec<Vec<f64>>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    /// Plant constructor name; `bouncing_ball` is bundled.
    pub model: String,
    /// Constant known input.
    pub u: f64,
    pub x0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSpec {
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub theta_hat0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverSpec {
    pub k_c: Vec<f64>,
    pub k_d: Vec<f64>,
    pub gamma_c: f64,
    pub gamma_d: f64,
    pub x_hat0: Vec<f64>,
    pub theta_hat0: Vec<f64>,
    pub filter_c0: Vec<f64>,
    pub filter_d0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub step: f64,
    pub t_max: f64,
    pub j_max: u32,
    pub zeno_guard: u32,
}

/// One excitation check the run command performs.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifySpec {
    pub name: String,
    pub kind: String, // cpe | dpe | hpe | huo
    pub k: f64,
    pub stride: f64,
    /// Adaptation gain used to form the pair for hpe/huo on regression
    /// scenarios.
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Approx,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Approx => "~=",
        }
    }

    pub fn apply(&self, observed: f64, value: f64, tol: f64) -> bool {
        match self {
            CmpOp::Lt => observed < value,
            CmpOp::Le => observed <= value,
            CmpOp::Gt => observed > value,
            CmpOp::Ge => observed >= value,
            CmpOp::Eq => observed == value,
            CmpOp::Approx => (observed - value).abs() <= tol,
        }
    }
}

/// An expected result: `metric op value [tolerance]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expectation {
    pub metric: String,
    pub op: CmpOp,
    pub value: f64,
    pub tol: Option<f64>,
}

impl SimSpec {
    pub fn to_config(&self) -> crate::hybrid_sim::SimConfig {
        crate::hybrid_sim::SimConfig::new(self.step, self.t_max, self.j_max)
            .with_zeno_guard(self.zeno_guard)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Line {
    no: usize,
    text: String,
}

fn parse_f64(s: &str, line: usize) -> Result<f64, ScenarioError> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| ScenarioError::Parse { line, msg: format!("bad number {s:?}: {e}") })
}

fn parse_u32(s: &str, line: usize) -> Result<u32, ScenarioError> {
    s.trim()
        .parse::<u32>()
        .map_err(|e| ScenarioError::Parse { line, msg: format!("bad integer {s:?}: {e}") })
}

/// Split a bracketed list `[a, b, c]` on top-level commas.
fn split_list(s: &str, line: usize) -> Result<Vec<String>, ScenarioError> {
    let s = s.trim();
    if !s.starts_with('[') || !s.ends_with(']') {
        return Err(ScenarioError::Parse {
            line,
            msg: format!("expected [ ... ] list, got {s:?}"),
        });
    }
    let inner = &s[1..s.len() - 1];
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in inner.chars() {
        match c {
            '(' | '[' => {
                depth += 1;
                cur.push(c);
            }
            ')' | ']' => {
                depth -= 1;
                cur.push(c);
            }
            ',' if depth == 0 => {
                parts.push(cur.trim().to_string());
                cur.clear();
            }
            _ => cur.push(c),
        }
    }
    if !cur.trim().is_empty() {
        parts.push(cur.trim().to_string());
    }
    Ok(parts)
}

fn parse_f64_list(s: &str, line: usize) -> Result<Vec<f64>, ScenarioError> {
    split_list(s, line)?.iter().map(|p| parse_f64(p, line)).collect()
}

fn parse_expr_list(s: &str, line: usize) -> Result<Vec<Expr>, ScenarioError> {
    split_list(s, line)?
        .iter()
        .map(|p| {
            Expr::parse(p).map_err(|e| match e {
                ScenarioError::Parse { msg, .. } => ScenarioError::Parse { line, msg },
                other => other,
            })
        })
        .collect()
}

fn parse_breakpoints(s: &str, line: usize) -> Result<Vec<(f64, f64, u32)>, ScenarioError> {
    let mut out = Vec::new();
    for part in split_list(s, line)? {
        let p = part.trim();
        if !p.starts_with('(') || !p.ends_with(')') {
            return Err(ScenarioError::Parse {
                line,
                msg: format!("expected (t0, t1, j), got {p:?}"),
            });
        }
        let fields: Vec<&str> = p[1..p.len() - 1].split(',').collect();
        if fields.len() != 3 {
            return Err(ScenarioError::Parse { line, msg: format!("expected 3 fields in {p:?}") });
        }
        out.push((
            parse_f64(fields[0], line)?,
            parse_f64(fields[1], line)?,
            parse_u32(fields[2], line)?,
        ));
    }
    Ok(out)
}

fn parse_expectation(text: &str, line: usize) -> Result<Expectation, ScenarioError> {
    // metric op value [tol]
    for op in [CmpOp::Approx, CmpOp::Le, CmpOp::Ge, CmpOp::Eq, CmpOp::Lt, CmpOp::Gt] {
        if let Some(idx) = text.find(op.symbol()) {
            // Longest symbols first so `<=` is not read as `<`.
            let metric = text[..idx].trim().to_string();
            let rest = text[idx + op.symbol().len()..].trim();
            let mut parts = rest.split_whitespace();
            let value = parse_f64(
                parts.next().ok_or(ScenarioError::Parse { line, msg: "missing value".into() })?,
                line,
            )?;
            let tol = parts.next().map(|s| parse_f64(s, line)).transpose()?;
            if metric.is_empty() {
                return Err(ScenarioError::Parse { line, msg: "missing metric name".into() });
            }
            return Ok(Expectation { metric, op, value, tol });
        }
    }
    Err(ScenarioError::Parse { line, msg: format!("no comparator in expectation {text:?}") })
}

/// Parse the `.scn` text format.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            let without_comment = match l.find('#') {
                Some(idx) => &l[..idx],
                None => l,
            };
            Line { no: i + 1, text: without_comment.trim().to_string() }
        })
        .filter(|l| !l.text.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(ScenarioError::Parse { line: 1, msg: "empty scenario file".into() });
    }

    let mut name = None;
    let mut kind = None;
    let mut theta: Option<Vec<f64>> = None;
    let mut domain = None;
    let mut signals: Option<SignalSpec> = None;
    let mut mixed: Option<MixedDataSpec> = None;
    let mut plant: Option<PlantSpec> = None;
    let mut gradient: Option<GradientSpec> = None;
    let mut observer: Option<ObserverSpec> = None;
    let mut estimators: Vec<String> = Vec::new();
    let mut sim: Option<SimSpec> = None;
    let mut certify: Vec<CertifySpec> = Vec::new();
    let mut expect: Vec<Expectation> = Vec::new();

    #[derive(PartialEq)]
    enum Section {
        Top,
        Domain,
        Signals,
        Mixed,
        Plant,
        Gradient,
        Observer,
        Estimators,
        Sim,
        Certify(String),
        Expect,
    }
    let mut section = Section::Top;

    // Per-section scratch maps.
    let mut scratch: Vec<(String, String, usize)> = Vec::new();

    let missing = |field: &str| ScenarioError::Validation {
        field: field.to_string(),
        msg: "missing required field".to_string(),
    };

    let flush = |section: &Section,
                 scratch: &mut Vec<(String, String, usize)>,
                 domain: &mut Option<DomainSpec>,
                 signals: &mut Option<SignalSpec>,
                 mixed: &mut Option<MixedDataSpec>,
                 plant: &mut Option<PlantSpec>,
                 gradient: &mut Option<GradientSpec>,
                 observer: &mut Option<ObserverSpec>,
                 estimators: &mut Vec<String>,
                 sim: &mut Option<SimSpec>,
                 certify: &mut Vec<CertifySpec>|
     -> Result<(), ScenarioError> {
        let get =
            |key: &str| scratch.iter().find(|(k, _, _)| k == key).map(|(_, v, n)| (v.clone(), *n));
        let need = |key: &str, sec: &str| {
            get(key).ok_or_else(|| ScenarioError::Validation {
                field: format!("{sec}.{key}"),
                msg: "missing required field".into(),
            })
        };
        match section {
            Section::Domain => {
                if let Some((v, n)) = get("breakpoints") {
                    *domain = Some(DomainSpec::Breakpoints(parse_breakpoints(&v, n)?));
                } else {
                    let (p, n) = need("period", "domain")?;
                    let (c, nc) = need("count", "domain")?;
                    if let Some((ff, nf)) = get("flow_fraction") {
                        let f = parse_f64(&ff, nf)?;
                        if (f - 1.0).abs() > 1e-12 {
                            return Err(ScenarioError::Validation {
                                field: "domain.flow_fraction".into(),
                                msg: "jumps are instantaneous, so the flow fills the whole period; only 1.0 is representable".into(),
                            });
                        }
                    }
                    *domain = Some(DomainSpec::Periodic {
                        period: parse_f64(&p, n)?,
                        count: parse_u32(&c, nc)?,
                    });
                }
            }
            Section::Signals => {
                let (f, nf) = need("psi_flow", "signals")?;
                let (j, nj) = need("psi_jump", "signals")?;
                *signals = Some(SignalSpec {
                    psi_flow: parse_expr_list(&f, nf)?,
                    psi_jump: parse_expr_list(&j, nj)?,
                });
            }
            Section::Mixed => {
                let (f, nf) = need("psi_flow", "mixed")?;
                let (tt, nt) = need("treatment_times", "mixed")?;
                let (op, no) = need("old_psi", "mixed")?;
                let (h, nh) = need("horizon", "mixed")?;
                let old_psi = split_list(&op, no)?
                    .iter()
                    .map(|v| parse_f64_list(v, no))
                    .collect::<Result<Vec<_>, _>>()?;
                *mixed = Some(MixedDataSpec {
                    psi_flow: parse_expr_list(&f, nf)?,
                    treatment_times: parse_f64_list(&tt, nt)?,
                    old_psi,
                    horizon: parse_f64(&h, nh)?,
                });
            }
            Section::Plant => {
                let (m, _) = need("model", "plant")?;
                let (u, nu) = need("u", "plant")?;
                let (x0, nx) = need("x0", "plant")?;
                *plant = Some(PlantSpec {
                    model: m.trim().to_string(),
                    u: parse_f64(&u, nu)?,
                    x0: parse_f64_list(&x0, nx)?,
                });
            }
            Section::Gradient => {
                let (gc, n1) = need("gamma_c", "gradient")?;
                let (gd, n2) = need("gamma_d", "gradient")?;
                let (th, n3) = need("theta_hat0", "gradient")?;
                *gradient = Some(GradientSpec {
                    gamma_c: parse_f64(&gc, n1)?,
                    gamma_d: parse_f64(&gd, n2)?,
                    theta_hat0: parse_f64_list(&th, n3)?,
                });
            }
            Section::Observer => {
                let fetch =
                    |key: &str| -> Result<(String, usize), ScenarioError> { need(key, "observer") };
                let (kc, n1) = fetch("K_c")?;
                let (kd, n2) = fetch("K_d")?;
                let (gc, n3) = fetch("gamma_c")?;
                let (gd, n4) = fetch("gamma_d")?;
                let (x0, n5) = fetch("x_hat0")?;
                let (th, n6) = fetch("theta_hat0")?;
                let (f0, n7) = fetch("Gamma_c0")?;
                let (g0, n8) = fetch("Gamma_d0")?;
                *observer = Some(ObserverSpec {
                    k_c: parse_f64_list(&kc, n1)?,
                    k_d: parse_f64_list(&kd, n2)?,
                    gamma_c: parse_f64(&gc, n3)?,
                    gamma_d: parse_f64(&gd, n4)?,
                    x_hat0: parse_f64_list(&x0, n5)?,
                    theta_hat0: parse_f64_list(&th, n6)?,
                    filter_c0: parse_f64_list(&f0, n7)?,
                    filter_d0: parse_f64_list(&g0, n8)?,
                });
            }
            Section::Estimators => {
                if let Some((v, _)) = get("run") {
                    *estimators = v.split(',').map(|s| s.trim().to_string()).collect();
                }
            }
            Section::Sim => {
                let (s, n1) = need("step", "sim")?;
                let (t, n2) = need("t_max", "sim")?;
                let (j, n3) = need("j_max", "sim")?;
                let zeno = match get("zeno_guard") {
                    Some((z, nz)) => parse_u32(&z, nz)?,
                    None => 8,
                };
                *sim = Some(SimSpec {
                    step: parse_f64(&s, n1)?,
                    t_max: parse_f64(&t, n2)?,
                    j_max: parse_u32(&j, n3)?,
                    zeno_guard: zeno,
                });
            }
            Section::Certify(cname) => {
                let (k, n1) = need("kind", &format!("certify.{cname}"))?;
                let (kk, n2) = need("K", &format!("certify.{cname}"))?;
                let stride = match get("stride") {
                    Some((s, ns)) => parse_f64(&s, ns)?,
                    None => 0.1,
                };
                let gamma = match get("gamma") {
                    Some((g, ng)) => parse_f64(&g, ng)?,
                    None => 1.0,
                };
                let _ = n1;
                certify.push(CertifySpec {
                    name: cname.clone(),
                    kind: k.trim().to_string(),
                    k: parse_f64(&kk, n2)?,
                    stride,
                    gamma,
                });
            }
            Section::Top | Section::Expect => {}
        }
        scratch.clear();
        Ok(())
    };

    macro_rules! flush_current {
        () => {
            flush(
                &section,
                &mut scratch,
                &mut domain,
                &mut signals,
                &mut mixed,
                &mut plant,
                &mut gradient,
                &mut observer,
                &mut estimators,
                &mut sim,
                &mut certify,
            )?
        };
    }

    for line in &lines {
        let text = &line.text;
        if text.starts_with('[') && text.ends_with(']') {
            flush_current!();
            let sec = &text[1..text.len() - 1];
            section = match sec {
                "domain" => Section::Domain,
                "signals" => Section::Signals,
                "mixed" => Section::Mixed,
                "plant" => Section::Plant,
                "gradient" => Section::Gradient,
                "observer" => Section::Observer,
                "estimators" => Section::Estimators,
                "sim" => Section::Sim,
                "expect" => Section::Expect,
                other if other.starts_with("certify.") => {
                    Section::Certify(other["certify.".len()..].to_string())
                }
                other => {
                    return Err(ScenarioError::Parse {
                        line: line.no,
                        msg: format!("unknown section [{other}]"),
                    })
                }
            };
            continue;
        }
        if section == Section::Expect {
            expect.push(parse_expectation(text, line.no)?);
            continue;
        }
        let (key, value) = text.split_once('=').ok_or(ScenarioError::Parse {
            line: line.no,
            msg: format!("expected key = value, got {text:?}"),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if section == Section::Top {
            match key.as_str() {
                "name" => name = Some(value),
                "kind" => {
                    kind = Some(match value.as_str() {
                        "regression" => ScenarioKind::Regression,
                        "plant" => ScenarioKind::Plant,
                        other => {
                            return Err(ScenarioError::Parse {
                                line: line.no,
                                msg: format!("unknown kind {other:?}"),
                            })
                        }
                    })
                }
                "theta" => theta = Some(parse_f64_list(&value, line.no)?),
                other => {
                    return Err(ScenarioError::Parse {
                        line: line.no,
                        msg: format!("unknown top-level key {other:?}"),
                    })
                }
            }
        } else {
            scratch.push((key, value, line.no));
        }
    }
    flush_current!();

    let spec = ScenarioSpec {
        name: name.ok_or_else(|| missing("name"))?,
        kind: kind.ok_or_else(|| missing("kind"))?,
        theta: theta.ok_or_else(|| missing("theta"))?,
        domain,
        signals,
        mixed,
        plant,
        gradient,
        observer,
        estimators,
        sim: sim.ok_or_else(|| missing("sim"))?,
        certify,
        expect,
    };
    validate(&spec)?;
    Ok(spec)
}

fn validate(spec: &ScenarioSpec) -> Result<(), ScenarioError> {
    let err = |field: &str, msg: &str| {
        Err(ScenarioError::Validation { field: field.into(), msg: msg.into() })
    };
    match spec.kind {
        ScenarioKind::Regression => {
            if spec.signals.is_none() && spec.mixed.is_none() {
                return err("signals", "regression scenarios need [signals] or [mixed]");
            }
            if spec.signals.is_some() && spec.domain.is_none() {
                return err("domain", "signal scenarios need a [domain] section");
            }
            if let Some(sig) = &spec.signals {
                if sig.psi_flow.len() != spec.theta.len() || sig.psi_jump.len() != spec.theta.len()
                {
                    return err("signals", "psi dimension must match theta");
                }
            }
            if let Some(m) = &spec.mixed {
                if m.treatment_times.len() != m.old_psi.len() {
                    return err("mixed", "treatment_times and old_psi must have equal length");
                }
                if m.psi_flow.len() != spec.theta.len() {
                    return err("mixed", "psi dimension must match theta");
                }
            }
            if spec.gradient.is_none() && !spec.estimators.is_empty() {
                return err("gradient", "regression scenarios with estimators need [gradient]");
            }
            if let Some(g) = &spec.gradient {
                if g.theta_hat0.len() != spec.theta.len() {
                    return err("gradient.theta_hat0", "dimension must match theta");
                }
            }
        }
        ScenarioKind::Plant => {
            if spec.plant.is_none() {
                return err("plant", "plant scenarios need a [plant] section");
            }
            if spec.observer.is_none() && !spec.estimators.is_empty() {
                return err("observer", "plant scenarios with estimators need [observer]");
            }
        }
    }
    if let Some(DomainSpec::Periodic { period, count }) = &spec.domain {
        if *period <= 0.0 || *count == 0 {
            return err("domain", "period must be positive and count at least 1");
        }
    }
    for c in &spec.certify {
        match c.kind.as_str() {
            "cpe" | "dpe" | "hpe" | "huo" => {}
            other => {
                return Err(ScenarioError::Validation {
                    field: format!("certify.{}.kind", c.name),
                    msg: format!("unknown check kind {other:?}"),
                })
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Saving
// ---------------------------------------------------------------------------

fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_exprs(values: &[Expr]) -> String {
    let parts: Vec<String> = values.iter().map(|e| e.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

/// Canonical text form; `parse_scenario(save_scenario(spec)) == spec`.
pub fn save_scenario(spec: &ScenarioSpec) -> String {
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "name = {}", spec.name).unwrap();
    writeln!(
        w,
        "kind = {}",
        match spec.kind {
            ScenarioKind::Regression => "regression",
            ScenarioKind::Plant => "plant",
        }
    )
    .unwrap();
    writeln!(w, "theta = {}", fmt_list(&spec.theta)).unwrap();
    if let Some(d) = &spec.domain {
        writeln!(w, "\n[domain]").unwrap();
        match d {
            DomainSpec::Periodic { period, count } => {
                writeln!(w, "period = {period:?}").unwrap();
                writeln!(w, "count = {count}").unwrap();
            }
            DomainSpec::Breakpoints(bps) => {
                let parts: Vec<String> =
                    bps.iter().map(|(a, b, j)| format!("({a:?}, {b:?}, {j})")).collect();
                writeln!(w, "breakpoints = [{}]", parts.join(", ")).unwrap();
            }
        }
    }
    if let Some(s) = &spec.signals {
        writeln!(w, "\n[signals]").unwrap();
        writeln!(w, "psi_flow = {}", fmt_exprs(&s.psi_flow)).unwrap();
        writeln!(w, "psi_jump = {}", fmt_exprs(&s.psi_jump)).unwrap();
    }
    if let Some(m) = &spec.mixed {
        writeln!(w, "\n[mixed]").unwrap();
        writeln!(w, "psi_flow = {}", fmt_exprs(&m.psi_flow)).unwrap();
        writeln!(w, "treatment_times = {}", fmt_list(&m.treatment_times)).unwrap();
        let rows: Vec<String> = m.old_psi.iter().map(|r| fmt_list(r)).collect();
        writeln!(w, "old_psi = [{}]", rows.join(", ")).unwrap();
        writeln!(w, "horizon = {:?}", m.horizon).unwrap();
    }
    if let Some(p) = &spec.plant {
        writeln!(w, "\n[plant]").unwrap();
        writeln!(w, "model = {}", p.model).unwrap();
        writeln!(w, "u = {:?}", p.u).unwrap();
        writeln!(w, "x0 = {}", fmt_list(&p.x0)).unwrap();
    }
    if let Some(g) = &spec.gradient {
        writeln!(w, "\n[gradient]").unwrap();
        writeln!(w, "gamma_c = {:?}", g.gamma_c).unwrap();
        writeln!(w, "gamma_d = {:?}", g.gamma_d).unwrap();
        writeln!(w, "theta_hat0 = {}", fmt_list(&g.theta_hat0)).unwrap();
    }
    if let Some(o) = &spec.observer {
        writeln!(w, "\n[observer]").unwrap();
        writeln!(w, "K_c = {}", fmt_list(&o.k_c)).unwrap();
        writeln!(w, "K_d = {}", fmt_list(&o.k_d)).unwrap();
        writeln!(w, "gamma_c = {:?}", o.gamma_c).unwrap();
        writeln!(w, "gamma_d = {:?}", o.gamma_d).unwrap();
        writeln!(w, "x_hat0 = {}", fmt_list(&o.x_hat0)).unwrap();
        writeln!(w, "theta_hat0 = {}", fmt_list(&o.theta_hat0)).unwrap();
        writeln!(w, "Gamma_c0 = {}", fmt_list(&o.filter_c0)).unwrap();
        writeln!(w, "Gamma_d0 = {}", fmt_list(&o.filter_d0)).unwrap();
    }
    if !spec.estimators.is_empty() {
        writeln!(w, "\n[estimators]").unwrap();
        writeln!(w, "run = {}", spec.estimators.join(", ")).unwrap();
    }
    writeln!(w, "\n[sim]").unwrap();
    writeln!(w, "step = {:?}", spec.sim.step).unwrap();
    writeln!(w, "t_max = {:?}", spec.sim.t_max).unwrap();
    writeln!(w, "j_max = {}", spec.sim.j_max).unwrap();
    writeln!(w, "zeno_guard = {}", spec.sim.zeno_guard).unwrap();
    for c in &spec.certify {
        writeln!(w, "\n[certify.{}]", c.name).unwrap();
        writeln!(w, "kind = {}", c.kind).unwrap();
        writeln!(w, "K = {:?}", c.k).unwrap();
        writeln!(w, "stride = {:?}", c.stride).unwrap();
        writeln!(w, "gamma = {:?}", c.gamma).unwrap();
    }
    if !spec.expect.is_empty() {
        writeln!(w, "\n[expect]").unwrap();
        for e in &spec.expect {
            match e.tol {
                Some(tol) => {
                    writeln!(w, "{} {} {:?} {:?}", e.metric, e.op.symbol(), e.value, tol).unwrap()
                }
                None => writeln!(w, "{} {} {:?}", e.metric, e.op.symbol(), e.value).unwrap(),
            }
        }
    }
    out
}
