//! Static SVG plots of gradient norm (log scale) against the stochastic
//! gradient count.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Result, VroptError};
use crate::trace::TraceRecord;

pub const WIDTH: f64 = 960.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

const PALETTE: [&str; 8] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub title: Option<String>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders one polyline per trace, with circles at full-batch records.
/// Records with a non-positive or non-finite gradient norm are skipped.
pub fn render_svg(traces: &[(String, Vec<TraceRecord>)], options: &PlotOptions) -> Result<String> {
    if traces.is_empty() || traces.iter().any(|(_, t)| t.is_empty()) {
        return Err(VroptError::InvalidConfig("nothing to plot".into()));
    }
    let usable = |r: &&TraceRecord| r.grad_norm > 0.0 && r.grad_norm.is_finite();
    let points = traces.iter().flat_map(|(_, t)| t.iter().filter(usable));
    let (mut x_max, mut y_lo, mut y_hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for r in points {
        x_max = x_max.max(r.paper_count as f64);
        y_lo = y_lo.min(r.grad_norm.log10());
        y_hi = y_hi.max(r.grad_norm.log10());
    }
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (-1.0, 1.0);
    }
    let (y_lo, y_hi) = (y_lo.floor(), y_hi.ceil().max(y_lo.floor() + 1.0));
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * plot_w;
    let sy = |y: f64| TOP + (y_hi - y.log10()) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(title) = &options.title {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#,
            WIDTH / 2.0,
            escape(title)
        );
    }
    // axes and grid
    let _ =
        writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#);
    for e in (y_lo as i32)..=(y_hi as i32) {
        let y = sy(10f64.powi(e));
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"##,
            LEFT + plot_w,
            LEFT - 8.0,
            y + 4.0
        );
    }
    for i in 0..=5 {
        let v = x_max * i as f64 / 5.0;
        let x = sx(v);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 20.0,
            format_count(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">number of stochastic gradient computations</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">gradient norm</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (idx, (label, trace)) in traces.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let pts: Vec<String> = trace
            .iter()
            .filter(usable)
            .map(|r| format!("{:.2},{:.2}", sx(r.paper_count as f64), sy(r.grad_norm)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="trace" fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
            pts.join(" ")
        );
        for r in trace.iter().filter(usable).filter(|r| r.full_batch_event) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="{color}"/>"#,
                sx(r.paper_count as f64),
                sy(r.grad_norm)
            );
        }
        let ly = TOP + 18.0 + 20.0 * idx as f64;
        let lx = LEFT + plot_w - 220.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 30.0,
            lx + 38.0,
            ly + 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_count(v: f64) -> String {
    if v >= 1e6 {
        format!("{:.1}M", v / 1e6)
    } else if v >= 1e3 {
        format!("{:.1}k", v / 1e3)
    } else {
        format!("{v:.0}")
    }
}

pub fn write_svg(traces: &[(String, Vec<TraceRecord>)], options: &PlotOptions, path: &Path) -> Result<()> {
    let svg = render_svg(traces, options)?;
    std::fs::write(path, svg).map_err(|e| VroptError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(full: &[bool]) -> Vec<TraceRecord> {
        full.iter()
            .enumerate()
            .map(|(i, &f)| TraceRecord {
                iter: i as u64,
                paper_count: 10 * i as u64,
                actual_count: 20 * i as u64,
                grad_norm: 10f64.powi(-(i as i32)),
                objective: 1.0,
                full_batch_event: f,
                sampled_clients: None,
            })
            .collect()
    }

    #[test]
    fn fixed_viewbox() {
        let svg = render_svg(&[("a".into(), trace(&[false, false]))], &PlotOptions::default()).unwrap();
        assert!(svg.contains(r#"viewBox="0 0 960 600""#));
    }

    #[test]
    fn no_full_batches_no_circles() {
        let svg = render_svg(&[("a".into(), trace(&[false; 4]))], &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 0);
    }

    #[test]
    fn circles_mark_full_batches() {
        let svg = render_svg(&[("s".into(), trace(&[true, false, true, false]))], &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn one_polyline_and_legend_per_trace() {
        let traces =
            vec![("zerosarah".to_string(), trace(&[false; 3])), ("sarah".to_string(), trace(&[true, false, false]))];
        let svg = render_svg(&traces, &PlotOptions { title: Some("mg <eta=0.1>".into()) }).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches(r#"class="legend""#).count(), 2);
        assert!(svg.contains(">zerosarah<") && svg.contains(">sarah<"));
        assert!(svg.contains("mg &lt;eta=0.1&gt;"));
    }

    #[test]
    fn zero_norm_points_are_skipped() {
        let mut t = trace(&[false; 3]);
        t[2].grad_norm = 0.0;
        let svg = render_svg(&[("a".into(), t)], &PlotOptions::default()).unwrap();
        let poly = svg.lines().find(|l| l.contains("<polyline")).unwrap();
        assert_eq!(poly.matches(',').count(), 2);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(render_svg(&[], &PlotOptions::default()).is_err());
    }
}
