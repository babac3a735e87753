//! Minimal SVG line plot of a trajectory: one polyline per agent, reference
//! in solid black, adversaries dashed red. The y-range is fitted to normal
//! agents and the reference; adversary curves are clipped to the plot area.

use std::fmt::Write;

use rcl_core::protocol::RoleKind;
use rcl_core::simulation::Trajectory;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f", "#ff7f0e", "#393b79",
];

pub fn render(traj: &Trajectory, title: &str) -> String {
    let rounds = traj.rounds();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, row) in traj.states.iter().enumerate() {
        for (idx, &v) in row.iter().enumerate() {
            if !traj.roles[idx].is_adversary() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if let Some(r) = traj.reference_at(t as u64) {
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-6);
    let (lo, hi) = (lo - pad, hi + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_of = |t: usize| MARGIN_LEFT + plot_w * t as f64 / (rounds.max(2) - 1) as f64;
    let y_of = |v: f64| MARGIN_TOP + plot_h * (hi - v) / (hi - lo);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<defs><clipPath id="plot"><rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}"/></clipPath></defs>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // axes and ticks
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for tick in 0..=5 {
        let v = lo + (hi - lo) * tick as f64 / 5.0;
        let y = y_of(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#dddddd"/><text x="{}" y="{:.2}" text-anchor="end">{v:.1}</text>"##,
            WIDTH - MARGIN_RIGHT,
            MARGIN_LEFT - 6.0,
            y + 4.0
        );
        let t = (rounds - 1) * tick / 5;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{t}</text>"#,
            x_of(t),
            HEIGHT - MARGIN_BOTTOM + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">round</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    let _ = writeln!(svg, r#"<g clip-path="url(#plot)" fill="none">"#);
    let order = (0..traj.n()).filter(|&i| !traj.roles[i].is_adversary()).chain((0..traj.n()).filter(|&i| traj.roles[i].is_adversary()));
    for idx in order {
        let points = polyline(traj.states.iter().map(|row| row[idx]), &x_of, &y_of);
        let style = match traj.roles[idx] {
            RoleKind::Malicious | RoleKind::Byzantine => r#"stroke="red" stroke-dasharray="6 4" stroke-width="1.2""#.to_string(),
            RoleKind::Leader => r#"stroke="black" stroke-width="1""#.to_string(),
            RoleKind::Normal => format!(r#"stroke="{}" stroke-width="1""#, PALETTE[idx % PALETTE.len()]),
        };
        let _ = writeln!(svg, r#"<polyline data-agent="{}" {style} points="{points}"/>"#, idx + 1);
    }
    if let Some(reference) = &traj.reference {
        let points = polyline(reference.iter().copied(), &x_of, &y_of);
        let _ = writeln!(svg, r#"<polyline data-agent="reference" stroke="black" stroke-width="2.5" points="{points}"/>"#);
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, "</svg>");
    svg
}

fn polyline(values: impl Iterator<Item = f64>, x_of: &impl Fn(usize) -> f64, y_of: &impl Fn(f64) -> f64) -> String {
    let mut out = String::new();
    for (t, v) in values.enumerate() {
        // keep far-out adversary values finite in the SVG; the clip path hides them
        let y = y_of(v).clamp(-1e6, 1e6);
        let _ = write!(out, "{:.2},{:.2} ", x_of(t), y);
    }
    out.pop();
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
