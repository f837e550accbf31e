//! Minimal self-contained SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::metrics::moving_average;

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// Series over x = 0, 1, 2, ...
    pub fn indexed(label: impl Into<String>, ys: &[f64]) -> Self {
        Self { label: label.into(), points: ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Trailing moving-average window applied to every series' y values; 1 plots raw data.
    pub smoothing_window: usize,
    pub markers: bool,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: "episode".into(),
            y_label: "return".into(),
            smoothing_window: 1,
            markers: false,
        }
    }
}

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Series after smoothing, as actually drawn.
pub fn smoothed(series: &[Series], window: usize) -> Vec<Series> {
    series
        .iter()
        .map(|s| {
            let ys: Vec<f64> = s.points.iter().map(|p| p.1).collect();
            let ys = moving_average(&ys, window);
            Series { label: s.label.clone(), points: s.points.iter().zip(ys).map(|(p, y)| (p.0, y)).collect() }
        })
        .collect()
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 { lo.abs() * 0.1 } else { 1.0 };
        (lo - pad, hi + pad)
    } else {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    }
}

/// Roughly five round-numbered ticks covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render the chart to an SVG string. Empty input or a series without finite points is an error.
pub fn render_svg(series: &[Series], spec: &PlotSpec) -> std::result::Result<String, String> {
    if series.is_empty() {
        return Err("nothing to plot".into());
    }
    if let Some(s) = series.iter().find(|s| !s.points.iter().any(|p| p.0.is_finite() && p.1.is_finite())) {
        return Err(format!("series `{}` has no finite points", s.label));
    }
    let drawn = smoothed(series, spec.smoothing_window);
    let finite = || drawn.iter().flat_map(|s| s.points.iter()).filter(|p| p.0.is_finite() && p.1.is_finite());
    let (x0, x1) = finite().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = finite().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (x0, x1) = padded_range(x0, x1);
    let (y0, y1) = padded_range(y0, y1);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, escape(&spec.title));
    let _ = writeln!(svg, r##"<g class="grid" stroke="#e0e0e0">"##);
    for t in ticks(y0, y1) {
        let _ = writeln!(svg, r#"<line x1="{LEFT}" x2="{:.2}" y1="{1:.2}" y2="{1:.2}"/>"#, LEFT + pw, sy(t));
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r##"<g class="axes" stroke="#333">"##);
    let _ = writeln!(svg, r#"<line x1="{LEFT}" x2="{LEFT}" y1="{TOP}" y2="{:.2}"/>"#, TOP + ph);
    let _ = writeln!(svg, r#"<line x1="{LEFT}" x2="{:.2}" y1="{1:.2}" y2="{1:.2}"/>"#, LEFT + pw, TOP + ph);
    let _ = writeln!(svg, "</g>");
    for t in ticks(x0, x1) {
        let _ = writeln!(svg, r#"<text class="xtick" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, sx(t), TOP + ph + 18.0, label(t));
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(svg, r#"<text class="ytick" x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, sy(t) + 4.0, label(t));
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 14.0, escape(&spec.x_label));
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0:.2}" text-anchor="middle" transform="rotate(-90 18 {0:.2})">{1}</text>"#,
        TOP + ph / 2.0,
        escape(&spec.y_label)
    );

    for (i, s) in drawn.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="1.6" points="{}"/>"#,
            escape(&s.label),
            pts.join(" ")
        );
        if spec.markers {
            for p in &pts {
                let (x, y) = p.split_once(',').expect("formatted pair");
                let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
            }
        }
        let ly = TOP + 10.0 + i as f64 * 18.0;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx}" x2="{:.2}" y1="{ly}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_plot(series: &[Series], spec: &PlotSpec, path: &Path) -> Result<()> {
    let svg = render_svg(series, spec).map_err(|m| HarnessError::format(path, m))?;
    std::fs::write(path, svg).map_err(HarnessError::io(path))
}
