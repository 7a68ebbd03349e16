//! Time-space diagrams: time runs left to right, line position bottom to
//! top from the down-direction terminal.

use std::fmt::Write;

use railsched_core::agents::Hms;
use railsched_core::harness::RunRecord;

/// Layout and colors. Rendering is a pure function of record and style.
#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub margin: [f64; 4],
    pub train_stroke: f64,
    pub disruption_stroke: f64,
    pub palette: Vec<&'static str>,
    pub title: Option<String>,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 1200.0,
            height: 600.0,
            // top, right, bottom, left
            margin: [36.0, 24.0, 40.0, 96.0],
            train_stroke: 1.2,
            disruption_stroke: 3.0,
            palette: vec![
                "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22",
                "#7f7f7f",
            ],
            title: None,
        }
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

/// Plot coordinates in tenths of a pixel.
type Tenths = (i64, i64);

/// Largest deviation, in tenths of a pixel, a dropped point may have from
/// the simplified line.
const TOLERANCE: f64 = 2.0;

fn seg_dist(q: Tenths, a: Tenths, b: Tenths) -> f64 {
    let (dx, dy) = ((b.0 - a.0) as f64, (b.1 - a.1) as f64);
    let (qx, qy) = ((q.0 - a.0) as f64, (q.1 - a.1) as f64);
    let l2 = dx * dx + dy * dy;
    let u = if l2 > 0.0 { ((qx * dx + qy * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
    ((qx - u * dx).powi(2) + (qy - u * dy).powi(2)).sqrt()
}

/// Drop repeated points and interior points that stay within the
/// tolerance of the line that replaces them.
fn simplify(pts: &[Tenths]) -> Vec<Tenths> {
    let mut out: Vec<Tenths> = Vec::new();
    let mut dropped: Vec<Tenths> = Vec::new();
    for &p in pts {
        if out.last() == Some(&p) {
            continue;
        }
        if out.len() >= 2 {
            let a = out[out.len() - 2];
            let b = out[out.len() - 1];
            if dropped.iter().chain([&b]).all(|&q| seg_dist(q, a, p) <= TOLERANCE) {
                dropped.push(b);
                out.pop();
            } else {
                dropped.clear();
            }
        }
        out.push(p);
    }
    out
}

fn fmt_tenths(v: i64) -> String {
    let sign = if v < 0 { "-" } else { "" };
    let a = v.abs();
    if a % 10 == 0 {
        format!("{sign}{}", a / 10)
    } else {
        format!("{sign}{}.{}", a / 10, a % 10)
    }
}

pub fn render_time_space_svg(record: &RunRecord, style: &SvgStyle) -> String {
    let [mt, mr, mb, ml] = style.margin;
    let pw = (style.width - ml - mr).max(1.0);
    let ph = (style.height - mt - mb).max(1.0);
    let t0 = record.start_s as f64;
    let span_t = (record.end_s.max(record.start_s + 1) - record.start_s) as f64;
    let len = if record.line_length_m > 0.0 { record.line_length_m } else { 1.0 };
    let px = |t: f64| ml + (t - t0) / span_t * pw;
    let py = |x: f64| mt + ph - x / len * ph;
    let tenths = |v: f64| (v * 10.0).round() as i64;

    let mut s = String::new();
    let w = style.width;
    let h = style.height;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let title = style
        .title
        .clone()
        .unwrap_or_else(|| format!("{} / {} / seed {}", record.scenario, record.controller, record.seed));
    let _ = writeln!(s, r#"<text x="{ml}" y="{}" font-size="13">{}</text>"#, mt - 14.0, escape(&title));

    // Station gridlines.
    let _ = writeln!(s, r##"<g class="stations" stroke="#c8c8c8" stroke-width="0.6">"##);
    for (name, pos) in &record.stations {
        let y = fmt_tenths(tenths(py(*pos)));
        let _ = writeln!(
            s,
            r##"<line x1="{ml}" y1="{y}" x2="{}" y2="{y}"/><text x="{}" y="{y}" dy="4" text-anchor="end" stroke="none" fill="#333">{}</text>"##,
            ml + pw,
            ml - 6.0,
            escape(name)
        );
    }
    let _ = writeln!(s, "</g>");

    // Time axis with a tick per hour, or per 10 minutes for short runs.
    let step = if span_t > 4.0 * 3600.0 { 3600 } else { 600 };
    let _ = writeln!(s, r##"<g class="time-axis" stroke="#888" stroke-width="0.6">"##);
    let _ = writeln!(s, r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}"/>"#, mt + ph, ml + pw, mt + ph);
    let mut t = record.start_s.div_ceil(step) * step;
    while t <= record.end_s {
        let x = fmt_tenths(tenths(px(t as f64)));
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}"/><text x="{x}" y="{}" text-anchor="middle" stroke="none" fill="#333">{}</text>"##,
            mt + ph,
            mt + ph + 4.0,
            mt + ph + 16.0,
            &Hms(t).to_string()[..5]
        );
        t += step;
    }
    let _ = writeln!(s, "</g>");

    // Disruptions: impassable section and period as bold black boxes.
    for d in &record.disruptions {
        let x0 = tenths(px(d.start_s.max(record.start_s) as f64));
        let x1 = tenths(px(d.end_s.min(record.end_s).max(d.start_s) as f64));
        let y0 = tenths(py(d.hi_m));
        let y1 = tenths(py(d.lo_m));
        let _ = writeln!(
            s,
            r#"<rect class="disruption" x="{}" y="{}" width="{}" height="{}" fill="black" fill-opacity="0.12" stroke="black" stroke-width="{}"/>"#,
            fmt_tenths(x0),
            fmt_tenths(y0),
            fmt_tenths((x1 - x0).max(1)),
            fmt_tenths((y1 - y0).max(1)),
            style.disruption_stroke
        );
    }

    // One thin polyline per train.
    for (i, tr) in record.traces.iter().enumerate() {
        if tr.x.is_empty() {
            continue;
        }
        let color = style.palette.get(i % style.palette.len().max(1)).copied().unwrap_or("black");
        let raw: Vec<Tenths> =
            tr.x.iter()
                .enumerate()
                .map(|(k, &x)| (tenths(px((tr.first_s as usize + k) as f64)), tenths(py(x))))
                .collect();
        let pts = simplify(&raw);
        let mut path = String::with_capacity(pts.len() * 12);
        for (k, (x, y)) in pts.iter().enumerate() {
            if k > 0 {
                path.push(' ');
            }
            let _ = write!(path, "{},{}", fmt_tenths(*x), fmt_tenths(*y));
        }
        if pts.len() == 1 {
            let _ = write!(path, " {},{}", fmt_tenths(pts[0].0), fmt_tenths(pts[0].1));
        }
        let _ = writeln!(
            s,
            r#"<polyline class="train" data-train="{}" fill="none" stroke="{color}" stroke-width="{}" points="{path}"/>"#,
            escape(&tr.name),
            style.train_stroke
        );
    }
    let _ = writeln!(s, "</svg>");
    s
}
