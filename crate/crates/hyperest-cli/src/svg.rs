//! Minimal static SVG line charts for trace plots: flows as solid polylines
//! in the series colour, jumps as dashed red connectors.

use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub color: &'static str,
    /// One polyline per flow interval: `(t, value)` nodes.
    pub flows: Vec<Vec<(f64, f64)>>,
    /// Jump connectors `(t, pre, post)`.
    pub jumps: Vec<(f64, f64, f64)>,
}

pub const SERIES_COLORS: [&str; 4] = ["#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd"];

const W: f64 = 860.0;
const H: f64 = 480.0;
const ML: f64 = 70.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 50.0;

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// Render a chart to SVG text.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for poly in &s.flows {
            for (x, y) in poly {
                xs.push(*x);
                ys.push(*y);
            }
        }
        for (x, y0, y1) in &s.jumps {
            xs.push(*x);
            ys.push(*y0);
            ys.push(*y1);
        }
    }
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&ys);
    let sx = |x: f64| ML + (x - x0) / (x1 - x0).max(1e-12) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y0) / (y1 - y0).max(1e-12) * (H - MT - MB);

    let mut out = String::new();
    writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .unwrap();
    writeln!(out, r##"<rect width="{W}" height="{H}" fill="white"/>"##).unwrap();
    writeln!(
        out,
        r##"<text x="{}" y="22" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"##,
        W / 2.0,
        escape(title)
    )
    .unwrap();

    // Axes box and ticks.
    writeln!(
        out,
        r##"<rect x="{ML}" y="{MT}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        W - ML - MR,
        H - MT - MB
    )
    .unwrap();
    for tx in ticks(x0, x1, 8) {
        let px = sx(tx);
        writeln!(
            out,
            r##"<line x1="{px:.1}" y1="{}" x2="{px:.1}" y2="{}" stroke="#ccc"/>"##,
            MT,
            H - MB
        )
        .unwrap();
        writeln!(
            out,
            r##"<text x="{px:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{tx:.1}</text>"##,
            H - MB + 16.0
        )
        .unwrap();
    }
    for ty in ticks(y0, y1, 6) {
        let py = sy(ty);
        writeln!(
            out,
            r##"<line x1="{ML}" y1="{py:.1}" x2="{}" y2="{py:.1}" stroke="#eee"/>"##,
            W - MR
        )
        .unwrap();
        writeln!(
            out,
            r##"<text x="{}" y="{py:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{ty:.2}</text>"##,
            ML - 6.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r##"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"##,
        W / 2.0,
        H - 12.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        r##"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"##,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    )
    .unwrap();

    for (si, s) in series.iter().enumerate() {
        for poly in &s.flows {
            if poly.len() < 2 {
                continue;
            }
            let pts: Vec<String> =
                poly.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            writeln!(
                out,
                r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"/>"##,
                pts.join(" "),
                s.color
            )
            .unwrap();
        }
        for (x, pre, post) in &s.jumps {
            writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="1.2" stroke-dasharray="5,3"/>"##,
                sx(*x),
                sy(*pre),
                sx(*x),
                sy(*post)
            )
            .unwrap();
        }
        // Legend entry.
        let ly = MT + 16.0 + 18.0 * si as f64;
        writeln!(
            out,
            r##"<line x1="{}" y1="{ly:.1}" x2="{}" y2="{ly:.1}" stroke="{}" stroke-width="2"/>"##,
            ML + 10.0,
            ML + 34.0,
            s.color
        )
        .unwrap();
        writeln!(
            out,
            r##"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"##,
            ML + 40.0,
            ly + 4.0,
            escape(&s.label)
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    out
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
