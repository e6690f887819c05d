//! SVG line plots of aggregate results: one line per method with a shaded
//! 95% band. Output is a pure function of the input.

use std::collections::BTreeMap;
use std::fmt::Write;

use daivl_core::evaluation::{GroupKey, SweepResult};

use crate::config::Axis;
use crate::csvio;
use crate::error::CliResult;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Point {
    x: f64,
    mean: f64,
    lo: f64,
    hi: f64,
}

fn axis_value(key: &GroupKey, axis: Axis) -> Option<f64> {
    match axis {
        Axis::Kappa => Some(key.kappa),
        Axis::Gamma => Some(key.gamma),
        Axis::Alpha => key.alpha,
    }
}

fn is_log(axis: Axis) -> bool {
    matches!(axis, Axis::Alpha | Axis::Gamma)
}

/// Renders an aggregate CSV.
pub fn render_csv(bytes: &[u8], axis: Axis) -> CliResult<String> {
    render(&csvio::read_aggregate(bytes)?, axis)
}

/// Renders aggregate groups against `axis`. On log axes, points with a
/// non-positive coordinate are left out.
pub fn render(result: &SweepResult, axis: Axis) -> CliResult<String> {
    let log = is_log(axis);
    let mut series: BTreeMap<&str, Vec<Point>> = BTreeMap::new();
    for g in &result.groups {
        let Some(x) = axis_value(&g.key, axis) else { continue };
        if log && x <= 0.0 {
            continue;
        }
        series.entry(&g.key.method).or_default().push(Point {
            x: if log { x.log10() } else { x },
            mean: g.mean_ncer,
            lo: g.ci_low,
            hi: g.ci_high,
        });
    }
    for pts in series.values_mut() {
        pts.sort_by(|a, b| a.x.total_cmp(&b.x));
    }

    let all = || series.values().flatten();
    let (mut x0, mut x1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let (mut y0, mut y1) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
        (a.min(p.lo.min(p.mean)), b.max(p.hi.max(p.mean)))
    });
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 < 1e-12 {
        (y0, y1) = (y0 - 0.05, y1 + 0.05);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>"##
    );

    for (t, label) in x_ticks(x0, x1, log) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 19.0
        );
    }
    for t in linear_ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t)
        );
    }
    let axis_name = match axis {
        Axis::Kappa => "kappa",
        Axis::Alpha => "alpha (log scale)",
        Axis::Gamma => "gamma (log scale)",
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{axis_name}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">mean nCER</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, (method, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(s, r#"<g class="series" data-method="{}">"#, escape(method));
        if pts.len() == 1 {
            let p = &pts[0];
            let (x, lo, hi) = (sx(p.x), sy(p.lo), sy(p.hi));
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="{color}"/><line x1="{:.2}" y1="{lo:.2}" x2="{:.2}" y2="{lo:.2}" stroke="{color}"/><line x1="{:.2}" y1="{hi:.2}" x2="{:.2}" y2="{hi:.2}" stroke="{color}"/>"#,
                x - 4.0,
                x + 4.0,
                x - 4.0,
                x + 4.0
            );
        } else {
            let band: Vec<String> = pts
                .iter()
                .map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.hi)))
                .chain(pts.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.lo))))
                .collect();
            let _ = writeln!(
                s,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                band.join(" ")
            );
            let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.mean))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
                line.join(" ")
            );
        }
        for p in pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(p.x),
                sy(p.mean)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(method)
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn x_ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if !log {
        return linear_ticks(lo, hi).into_iter().map(|t| (t, tick_label(t))).collect();
    }
    let first = lo.ceil() as i64;
    let last = hi.floor() as i64;
    let stride = ((last - first) / 8 + 1).max(1);
    let mut ticks: Vec<(f64, String)> = (first..=last)
        .filter(|e| (e - first) % stride == 0)
        .map(|e| (e as f64, format!("1e{e}")))
        .collect();
    if ticks.is_empty() {
        ticks = linear_ticks(lo, hi)
            .into_iter()
            .map(|t| (t, format!("{:.3}", 10f64.powf(t))))
            .collect();
    }
    ticks
}
