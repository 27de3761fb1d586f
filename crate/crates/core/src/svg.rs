//! Standalone SVG convergence charts: estimates against `log₁₀ n`, one dot
//! per replication, the per-`n` median joined by a line and the true value
//! dashed.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries<'a> {
    pub title: &'a str,
    pub y_label: &'a str,
    pub truth: f64,
    /// `(n, estimate)` pairs, any order.
    pub points: Vec<(u64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

pub fn convergence_chart(series: &ConvergenceSeries<'_>) -> String {
    let pts: Vec<(f64, f64)> = series
        .points
        .iter()
        .filter(|(n, y)| *n > 0 && y.is_finite())
        .map(|&(n, y)| ((n as f64).log10(), y))
        .collect();

    let (mut x_lo, mut x_hi) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    if !x_lo.is_finite() {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    x_lo = x_lo.floor();
    x_hi = x_hi.ceil().max(x_lo + 1.0);

    let (mut y_lo, mut y_hi) = pts
        .iter()
        .fold((series.truth, series.truth), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let pad = ((y_hi - y_lo) * 0.08).max(1e-3 * series.truth.abs().max(1.0));
    y_lo -= pad;
    y_hi += pad;

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(series.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    // x ticks at each decade
    let mut k = x_lo;
    while k <= x_hi + 1e-9 {
        let x = sx(k);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{}</text>"#,
            TOP + plot_h + 19.0,
            k as i64
        );
        k += 1.0;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sample size n (log scale)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );

    for i in 0..=5 {
        let y = y_lo + (y_hi - y_lo) * i as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.3}</text>"#,
            LEFT - 8.0,
            py + 4.0,
            y
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(series.y_label)
    );

    let ty = sy(series.truth);
    let _ = writeln!(
        out,
        r##"<line x1="{LEFT}" y1="{ty:.2}" x2="{:.2}" y2="{ty:.2}" stroke="#c0392b" stroke-dasharray="6 4"/>"##,
        LEFT + plot_w
    );

    for &(x, y) in &pts {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#2e86c1" fill-opacity="0.6"/>"##,
            sx(x),
            sy(y)
        );
    }

    let mut by_n: std::collections::BTreeMap<u64, Vec<f64>> = std::collections::BTreeMap::new();
    for &(n, y) in &series.points {
        if n > 0 && y.is_finite() {
            by_n.entry(n).or_default().push(y);
        }
    }
    let medians: Vec<String> = by_n
        .iter_mut()
        .map(|(&n, ys)| format!("{:.2},{:.2}", sx((n as f64).log10()), sy(median(ys))))
        .collect();
    if !medians.is_empty() {
        let _ = writeln!(
            out,
            r##"<polyline points="{}" fill="none" stroke="#1b2631" stroke-width="1.5"/>"##,
            medians.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}
