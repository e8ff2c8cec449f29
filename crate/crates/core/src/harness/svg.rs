//! Minimal SVG plots: waveform on the left, order spectrum on the right, one
//! row per channel.

use std::fmt::Write as _;

use crate::spectral::Spectrum;

const WIDTH: f64 = 1000.0;
const ROW_HEIGHT: f64 = 260.0;
const MARGIN: f64 = 50.0;
const GAP: f64 = 60.0;
const MAX_POLYLINE_POINTS: usize = 2000;

pub struct Panel<'a> {
    pub label: &'a str,
    pub t: &'a [f64],
    pub samples: &'a [f64],
    pub spectrum: &'a Spectrum,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * (1.0 + hi.abs()) {
        let pad = 0.5 * (1.0 + hi.abs()) * 1e-3;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

struct Rect {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

fn frame(out: &mut String, r: Rect, title: &str, x_label: &str, (lo, hi): (f64, f64)) {
    let Rect { x, y, w, h } = r;
    let _ =
        writeln!(out, r##"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444"/>"##);
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="13">{}</text>"#, x, y - 8.0, escape(title));
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"#,
        x + w,
        y + h + 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{hi:.4}</text>"#,
        x - 4.0,
        y + 10.0
    );
    let _ =
        writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{lo:.4}</text>"#, x - 4.0, y + h);
}

/// Render stacked waveform/spectrum rows. Spectrum stems are drawn up to
/// `max_order`.
pub fn render(title: &str, panels: &[Panel<'_>], max_order: f64) -> String {
    let height = MARGIN * 1.5 + ROW_HEIGHT * panels.len() as f64;
    let panel_w = (WIDTH - 2.0 * MARGIN - GAP) / 2.0;
    let panel_h = ROW_HEIGHT - GAP;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="24" font-size="16">{}</text>"#, escape(title));

    for (row, p) in panels.iter().enumerate() {
        let top = MARGIN * 1.5 + row as f64 * ROW_HEIGHT;

        // waveform
        let left = MARGIN;
        let (lo, hi) = range(p.samples.iter().copied());
        let t0 = p.t.first().copied().unwrap_or(0.0);
        let t1 = p.t.last().copied().unwrap_or(1.0).max(t0 + 1e-12);
        frame(
            &mut out,
            Rect { x: left, y: top, w: panel_w, h: panel_h },
            &format!("{} [A]", p.label),
            "time [s]",
            (lo, hi),
        );
        let stride = p.samples.len().div_ceil(MAX_POLYLINE_POINTS).max(1);
        let mut points = String::new();
        for (t, v) in p.t.iter().zip(p.samples).step_by(stride) {
            let x = left + (t - t0) / (t1 - t0) * panel_w;
            let y = top + panel_h - (v - lo) / (hi - lo) * panel_h;
            let _ = write!(points, "{x:.2},{y:.2} ");
        }
        let _ = writeln!(
            out,
            r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="1" points="{}"/>"##,
            points.trim_end()
        );

        // order spectrum, DC omitted so the harmonics stay visible
        let left = MARGIN + panel_w + GAP;
        let lines: Vec<_> = p.spectrum.lines.iter().filter(|l| l.order > 0.0 && l.order <= max_order).collect();
        let peak = lines.iter().map(|l| l.magnitude).fold(0.0, f64::max).max(1e-12);
        let rect = Rect { x: left, y: top, w: panel_w, h: panel_h };
        frame(&mut out, rect, &format!("{} harmonics [A]", p.label), "mechanical order", (0.0, peak));
        for l in lines {
            let x = left + l.order / max_order * panel_w;
            let y = top + panel_h - l.magnitude / peak * panel_h;
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{y:.2}" stroke="#b0401f" stroke-width="1"/>"##,
                top + panel_h
            );
        }
        let mut tick = 0.0;
        let step = (max_order / 10.0).ceil().max(1.0);
        while tick <= max_order {
            let x = left + tick / max_order * panel_w;
            let _ = writeln!(
                out,
                r#"<text x="{x:.1}" y="{:.1}" font-size="9" text-anchor="middle">{tick}</text>"#,
                top + panel_h + 11.0
            );
            tick += step;
        }
    }
    out.push_str("</svg>\n");
    out
}
