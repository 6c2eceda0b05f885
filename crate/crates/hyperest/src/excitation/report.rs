use std::io::Write;

use super::ExcitationReport;

/// Serialize a report as `key: value` lines.
pub fn write_report<W: Write>(report: &ExcitationReport, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "kind: {}", report.kind)?;
    writeln!(out, "holds: {}", report.holds)?;
    writeln!(out, "K: {:?}", report.k)?;
    writeln!(out, "mu: {:?}", report.mu)?;
    writeln!(
        out,
        "worst_window_base: ({:?}, {})",
        report.worst_window_base.0, report.worst_window_base.1
    )?;
    let witness: Vec<String> = report.witness.iter().map(|x| format!("{x:?}")).collect();
    writeln!(out, "witness: [{}]", witness.join(", "))?;
    writeln!(out, "windows_scanned: {}", report.windows.len())?;
    if let Some(valid) = report.certificate_valid {
        writeln!(out, "certificate_valid: {valid}")?;
    }
    Ok(())
}

/// Per-window eigenvalue curve as CSV, for plotting.
pub fn write_windows_csv<W: Write>(report: &ExcitationReport, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "base_t,base_j,lambda_min")?;
    for w in &report.windows {
        writeln!(out, "{:?},{},{:?}", w.base_t, w.base_j, w.lambda_min)?;
    }
    Ok(())
}
