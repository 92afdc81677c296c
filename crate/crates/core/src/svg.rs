//! Minimal self-contained SVG plots: line charts and scalar fields with
//! iso-contours. Output depends only on the data, so identical inputs give
//! identical files.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Scalar field sampled on a rectilinear grid; `values[i][j]` sits at `(x[i], y[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contour {
    pub level: f64,
    /// Drawn heavier than ordinary contours.
    pub emphasized: bool,
}

pub type Segment = ((f64, f64), (f64, f64));

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
                (lo - pad, hi + pad)
            }
        };
        Frame {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for i in 0..=5 {
        let f = i as f64 / 5.0;
        let xv = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let (px, py) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y0 + 5.0,
            y0 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, entries: &[(String, &str)]) {
    let x = WIDTH - RIGHT + 15.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 20.0,
            x + 25.0,
            y + 4.0,
            escape(label)
        );
    }
}

pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let frame = Frame::new(bounds(all().map(|p| p.0)), bounds(all().map(|p| p.1)));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &frame, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(
                path,
                "{}{:.2},{:.2} ",
                if pen_down { "L" } else { "M" },
                frame.px(x),
                frame.py(y)
            );
            pen_down = true;
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.trim_end()
        );
    }
    let entries: Vec<(String, &str)> = series
        .iter()
        .enumerate()
        .map(|(i, s)| (s.label.clone(), PALETTE[i % PALETTE.len()]))
        .collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// Blue-to-yellow ramp for `t` in [0, 1].
fn ramp(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 4] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

fn cell_edges(axis: &[f64], i: usize) -> (f64, f64) {
    if axis.len() == 1 {
        return (axis[0] - 0.5, axis[0] + 0.5);
    }
    let lo = if i == 0 {
        axis[0]
    } else {
        0.5 * (axis[i - 1] + axis[i])
    };
    let hi = if i + 1 == axis.len() {
        axis[i]
    } else {
        0.5 * (axis[i] + axis[i + 1])
    };
    (lo, hi)
}

/// Iso-line segments of `field` at `level` by marching squares; cells with a
/// missing corner are skipped.
pub fn contour_segments(field: &Field, level: f64) -> Vec<Segment> {
    let mut segments = Vec::new();
    for i in 0..field.x.len().saturating_sub(1) {
        for j in 0..field.y.len().saturating_sub(1) {
            let corners = [
                (field.x[i], field.y[j], field.values[i][j]),
                (field.x[i + 1], field.y[j], field.values[i + 1][j]),
                (field.x[i + 1], field.y[j + 1], field.values[i + 1][j + 1]),
                (field.x[i], field.y[j + 1], field.values[i][j + 1]),
            ];
            let Some(v) = corners
                .iter()
                .map(|c| c.2.filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
            else {
                continue;
            };
            let mut crossings = Vec::with_capacity(4);
            for k in 0..4 {
                let (a, b) = (k, (k + 1) % 4);
                let (va, vb) = (v[a] - level, v[b] - level);
                if (va < 0.0) != (vb < 0.0) {
                    let t = va / (va - vb);
                    crossings.push((
                        corners[a].0 + t * (corners[b].0 - corners[a].0),
                        corners[a].1 + t * (corners[b].1 - corners[a].1),
                    ));
                }
            }
            for pair in crossings.chunks_exact(2) {
                segments.push((pair[0], pair[1]));
            }
        }
    }
    segments
}

pub fn heat_map(
    title: &str,
    x_label: &str,
    y_label: &str,
    field: &Field,
    contours: &[Contour],
    markers: &[Marker],
) -> String {
    let frame = Frame::new(
        (field.x[0], *field.x.last().unwrap_or(&field.x[0])),
        (field.y[0], *field.y.last().unwrap_or(&field.y[0])),
    );
    let (lo, hi) = bounds(field.values.iter().flatten().flatten().copied());
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = String::new();
    header(&mut out, title);
    for i in 0..field.x.len() {
        let (x0, x1) = cell_edges(&field.x, i);
        for j in 0..field.y.len() {
            let (y0, y1) = cell_edges(&field.y, j);
            let fill = match field.values[i][j] {
                Some(v) if v.is_finite() => ramp((v - lo) / span),
                _ => "#cccccc".to_string(),
            };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="{fill}" stroke-width="0.3"/>"#,
                frame.px(x0),
                frame.py(y1),
                frame.px(x1) - frame.px(x0),
                frame.py(y0) - frame.py(y1)
            );
        }
    }
    for c in contours {
        let (stroke, width) = if c.emphasized {
            ("white", 2.5)
        } else {
            ("black", 0.8)
        };
        let mut path = String::new();
        for ((ax, ay), (bx, by)) in contour_segments(field, c.level) {
            let _ = write!(
                path,
                "M{:.2},{:.2} L{:.2},{:.2} ",
                frame.px(ax),
                frame.py(ay),
                frame.px(bx),
                frame.py(by)
            );
        }
        if !path.is_empty() {
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{stroke}" stroke-width="{width}"/>"#,
                path.trim_end()
            );
        }
    }
    for m in markers {
        let (px, py) = (frame.px(m.x), frame.py(m.y));
        let _ = writeln!(
            out,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="5" fill="red" stroke="black"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            px + 8.0,
            py - 8.0,
            escape(&m.label)
        );
    }
    axes(&mut out, &frame, x_label, y_label);
    // colour bar
    let bx = WIDTH - RIGHT + 30.0;
    let bar_h = HEIGHT - TOP - BOTTOM;
    for k in 0..50 {
        let t = k as f64 / 49.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx:.2}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            TOP + bar_h * (1.0 - t) - bar_h / 50.0,
            bar_h / 50.0 + 0.5,
            ramp(t)
        );
    }
    for (t, v) in [(0.0, lo), (1.0, hi)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            bx + 24.0,
            TOP + bar_h * (1.0 - t) + 4.0,
            tick(v)
        );
    }
    out.push_str("</svg>\n");
    out
}
