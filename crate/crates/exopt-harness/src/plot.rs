//! Minimal static SVG scatter plots.

use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub highlight: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo > 0.0 {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Scatter of `points` with highlighted points drawn in a second colour and
/// `markers` drawn as labelled diamonds. Output is deterministic.
pub fn scatter_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[ScatterPoint],
    markers: &[Marker],
    highlight_label: &str,
) -> String {
    let (x0, x1) = extent(points.iter().map(|p| p.x).chain(markers.iter().map(|m| m.x)));
    let (y0, y1) = extent(points.iter().map(|p| p.y).chain(markers.iter().map(|m| m.y)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{:.4}</text>"#,
            sx(xv),
            HEIGHT - MARGIN + 14.0,
            xv
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{:.4}</text>"#,
            MARGIN - 4.0,
            sy(yv) + 3.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    // plain points first so highlighted ones stay visible on top
    for p in points.iter().filter(|p| !p.highlight).chain(points.iter().filter(|p| p.highlight)) {
        if !(p.x.is_finite() && p.y.is_finite()) {
            continue;
        }
        let fill = if p.highlight { "#d62728" } else { "#9e9e9e" };
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{fill}"/>"#, sx(p.x), sy(p.y));
    }
    for m in markers {
        let (cx, cy) = (sx(m.x), sy(m.y));
        let _ = writeln!(
            s,
            r##"<path d="M {:.2} {:.2} l 6 6 l -6 6 l -6 -6 z" fill="none" stroke="#1f77b4" stroke-width="2"/>"##,
            cx,
            cy - 6.0
        );
        let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" font-size="10" fill="#1f77b4">{}</text>"##, cx + 8.0, cy - 6.0, escape(&m.label));
    }
    let lx = WIDTH - MARGIN - 150.0;
    let _ = writeln!(s, "<circle cx=\"{lx}\" cy=\"{}\" r=\"3\" fill=\"#d62728\"/>", MARGIN + 12.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">{}</text>"#, lx + 8.0, MARGIN + 15.0, escape(highlight_label));
    let _ = writeln!(s, "<circle cx=\"{lx}\" cy=\"{}\" r=\"3\" fill=\"#9e9e9e\"/>", MARGIN + 26.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10">other</text>"#, lx + 8.0, MARGIN + 29.0);
    s.push_str("</svg>\n");
    s
}
