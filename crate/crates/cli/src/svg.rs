//! Minimal SVG line plots of `θ_i − θ_1` against time.

use std::fmt::Write;

use barrier_cpg::Trajectory;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
/// Room on the right for the legend.
const LEGEND: f64 = 100.0;
const MAX_POINTS: usize = 1500;
const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/// Plots the lifted phase differences of every agent relative to agent 1.
pub fn phase_differences(tr: &Trajectory, title: &str) -> String {
    let n = tr.states.first().map_or(0, Vec::len);
    let step = tr.len().div_ceil(MAX_POINTS).max(1);
    let mut picks: Vec<usize> = (0..tr.len()).step_by(step).collect();
    if tr.len() > 0 && picks.last() != Some(&(tr.len() - 1)) {
        picks.push(tr.len() - 1);
    }
    let series: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|i| picks.iter().map(|&k| (tr.times[k], tr.states[k][i] - tr.states[k][0])).collect())
        .collect();
    let (t0, t1) = (tr.times.first().copied().unwrap_or(0.0), tr.times.last().copied().unwrap_or(1.0));
    let (mut lo, mut hi) = series
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if !(lo.is_finite() && hi.is_finite()) || hi - lo < 1e-9 {
        lo -= 1.0;
        hi += 1.0;
    }
    let span_t = if t1 > t0 { t1 - t0 } else { 1.0 };
    let x = |t: f64| MARGIN + (t - t0) / span_t * (WIDTH - MARGIN - LEGEND);
    let y = |v: f64| HEIGHT - MARGIN - (v - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - LEGEND, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(out, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
    for (v, label) in [(lo, lo), (hi, hi)] {
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" font-size="11" text-anchor="end">{label:.2}</text>"#, x0 - 4.0, y(v) + 4.0);
    }
    for t in [t0, t1] {
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" font-size="11" text-anchor="middle">{t:.1}</text>"#, x(t), y0 + 16.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">t</text>"#, WIDTH / 2.0, HEIGHT - 10.0);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> = s.iter().map(|&(t, v)| format!("{:.2},{:.2}", x(t), y(v))).collect();
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">θ{} − θ1</text>"#,
            x1 + 4.0,
            MARGIN + 14.0 * i as f64,
            i + 1
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
