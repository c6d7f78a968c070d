//! Static SVG time-series plots. Output depends only on the inputs, so
//! plots can be diffed byte for byte.

use std::fmt::Write;

use crate::analysis::{ArtifactWindow, ClassificationResult, DielMetrics, PathwayLabel};
use crate::podsim::LightSchedule;
use crate::series::SensorSeries;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 70.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const CO2_COLOR: &str = "#1b7837";
const RH_COLOR: &str = "#2166ac";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    t0: i64,
    t1: i64,
}

impl Frame {
    fn x(&self, t: i64) -> f64 {
        let span = (self.t1 - self.t0).max(1) as f64;
        LEFT + (t - self.t0) as f64 / span * (WIDTH - LEFT - RIGHT)
    }
}

fn y_of(v: f64, lo: f64, hi: f64) -> f64 {
    let h = HEIGHT - TOP - BOTTOM;
    TOP + h - (v - lo) / (hi - lo) * h
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1.0);
    (lo - pad, hi + pad)
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
}

/// Grey bands over the dark periods of the schedule.
fn dark_bands(svg: &mut String, frame: &Frame, schedule: &LightSchedule) {
    let mut t = frame.t0;
    while t < frame.t1 {
        let next = schedule.next_transition(t + 1).min(frame.t1);
        if !schedule.is_light(t as f64) {
            let _ = writeln!(
                svg,
                r##"<rect x="{:.1}" y="{TOP}" width="{:.1}" height="{}" fill="#d9d9d9"/>"##,
                frame.x(t),
                frame.x(next) - frame.x(t),
                HEIGHT - TOP - BOTTOM
            );
        }
        t = next;
    }
}

fn time_axis(svg: &mut String, frame: &Frame) {
    let yb = HEIGHT - BOTTOM;
    let _ = writeln!(svg, r#"<line x1="{LEFT}" y1="{yb}" x2="{}" y2="{yb}" stroke="black"/>"#, WIDTH - RIGHT);
    let span_h = (frame.t1 - frame.t0) as f64 / 3600.0;
    let step_h = if span_h > 72.0 { 24 } else if span_h > 24.0 { 6 } else { 2 };
    let mut h = 0;
    while (h as f64) <= span_h {
        let x = frame.x(frame.t0 + h * 3600);
        let _ = writeln!(svg, r#"<line x1="{x:.1}" y1="{yb}" x2="{x:.1}" y2="{}" stroke="black"/>"#, yb + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{h}</text>"#, yb + 18.0);
        h += step_h;
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">hours since start</text>"#, WIDTH / 2.0, HEIGHT - 8.0);
}

fn value_axis(svg: &mut String, lo: f64, hi: f64, left: bool, label: &str, color: &str) {
    let x = if left { LEFT } else { WIDTH - RIGHT };
    let (tick, anchor, dx) = if left { (-5.0, "end", -8.0) } else { (5.0, "start", 8.0) };
    let _ = writeln!(svg, r#"<line x1="{x}" y1="{TOP}" x2="{x}" y2="{}" stroke="{color}"/>"#, HEIGHT - BOTTOM);
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = y_of(v, lo, hi);
        let _ = writeln!(svg, r#"<line x1="{x}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{color}"/>"#, x + tick);
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="{anchor}" fill="{color}">{v:.0}</text>"#,
            x + dx,
            y + 4.0
        );
    }
    let lx = if left { 16.0 } else { WIDTH - 16.0 };
    let ly = (TOP + HEIGHT - BOTTOM) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="{lx}" y="{ly}" text-anchor="middle" fill="{color}" transform="rotate(-90 {lx} {ly})">{}</text>"#,
        escape(label)
    );
}

/// One polyline per gap-free segment.
fn trace(svg: &mut String, frame: &Frame, series: &SensorSeries, value: impl Fn(usize) -> f64, lo: f64, hi: f64, color: &str) {
    for seg in series.segments() {
        let mut pts = String::new();
        for i in seg {
            let _ = write!(pts, "{:.1},{:.1} ", frame.x(series.samples[i].timestamp), y_of(value(i), lo, hi));
        }
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#, pts.trim_end());
    }
}

fn frame_of(series: &SensorSeries) -> Frame {
    Frame { t0: series.start().unwrap_or(0), t1: series.end().unwrap_or(0) }
}

/// CO₂ and RH against time with the dark periods shaded.
pub fn overlay_svg(series: &SensorSeries, schedule: &LightSchedule, title: &str) -> String {
    let frame = frame_of(series);
    let (clo, chi) = padded_range(series.samples.iter().map(|s| s.co2));
    let (rlo, rhi) = padded_range(series.samples.iter().map(|s| s.rh));
    let mut svg = String::new();
    header(&mut svg, title);
    dark_bands(&mut svg, &frame, schedule);
    trace(&mut svg, &frame, series, |i| series.samples[i].rh, rlo, rhi, RH_COLOR);
    trace(&mut svg, &frame, series, |i| series.samples[i].co2, clo, chi, CO2_COLOR);
    value_axis(&mut svg, clo, chi, true, "CO2 (ppm)", CO2_COLOR);
    value_axis(&mut svg, rlo, rhi, false, "RH (%)", RH_COLOR);
    time_axis(&mut svg, &frame);
    svg.push_str("</svg>\n");
    svg
}

fn label_color(label: PathwayLabel) -> &'static str {
    match label {
        PathwayLabel::C3 => "#b2182b",
        PathwayLabel::Cam => "#2166ac",
        PathwayLabel::Mixed => "#762a83",
        PathwayLabel::Indeterminate => "#636363",
    }
}

/// Baseline-corrected CO₂ with cycle boundaries, per-cycle labels and
/// artifact windows.
pub fn classification_svg(
    corrected: &SensorSeries,
    schedule: &LightSchedule,
    metrics: &[DielMetrics],
    result: &ClassificationResult,
    windows: &[ArtifactWindow],
    title: &str,
) -> String {
    let frame = frame_of(corrected);
    let (lo, hi) = padded_range(corrected.samples.iter().map(|s| s.co2));
    let mut svg = String::new();
    header(&mut svg, title);
    dark_bands(&mut svg, &frame, schedule);
    for w in windows {
        let (a, b) = (w.start.max(frame.t0), w.end.min(frame.t1));
        if b > a {
            let _ = writeln!(
                svg,
                r##"<rect x="{:.1}" y="{TOP}" width="{:.1}" height="{}" fill="#f4a582" fill-opacity="0.6"/>"##,
                frame.x(a),
                frame.x(b) - frame.x(a),
                HEIGHT - TOP - BOTTOM
            );
        }
    }
    trace(&mut svg, &frame, corrected, |i| corrected.samples[i].co2, lo, hi, CO2_COLOR);
    for (m, c) in metrics.iter().zip(&result.per_cycle) {
        let (xa, xb) = (frame.x(m.start), frame.x(m.end));
        let _ = writeln!(
            svg,
            r#"<line x1="{xa:.1}" y1="{TOP}" x2="{xa:.1}" y2="{}" stroke="black" stroke-dasharray="4 3"/>"#,
            HEIGHT - BOTTOM
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" fill="{}">{}</text>"#,
            (xa + xb) / 2.0,
            TOP + 14.0,
            label_color(c.label),
            c.label
        );
    }
    value_axis(&mut svg, lo, hi, true, "plant - control CO2 (ppm)", CO2_COLOR);
    time_axis(&mut svg, &frame);
    svg.push_str("</svg>\n");
    svg
}
