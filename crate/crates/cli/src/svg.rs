//! Minimal static SVG line/marker plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 64.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

pub fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn unescape(s: &str) -> String {
    s.replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log }
    }

    fn admits(&self, v: f64) -> bool {
        v.is_finite() && (!self.log || v > 0.0)
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn label(&self, u: f64) -> String {
        let v = self.lo + u * (self.hi - self.lo);
        let v = if self.log { 10f64.powf(v) } else { v };
        format!("{v:.3e}")
    }
}

impl Plot {
    pub fn render(&self, hash: &str, config_json: &str) -> String {
        let xa = Axis::fit(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0))
                .filter(|&v| v.is_finite() && (!self.log_x || v > 0.0)),
            self.log_x,
        );
        let ya = Axis::fit(
            self.series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1))
                .filter(|&v| v.is_finite() && (!self.log_y || v > 0.0)),
            self.log_y,
        );
        let px = |v: f64| MARGIN + xa.unit(v) * (WIDTH - 2.0 * MARGIN);
        let py = |v: f64| HEIGHT - MARGIN - ya.unit(v) * (HEIGHT - 2.0 * MARGIN);

        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(out, "<!-- config_hash={hash} -->");
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            out,
            r#"<metadata id="weylkit-config">{}</metadata>"#,
            escape(config_json)
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        for i in 0..=4 {
            let u = i as f64 / 4.0;
            let gx = x0 + u * (x1 - x0);
            let gy = y1 - u * (y1 - y0);
            let _ = writeln!(
                out,
                r##"<line x1="{gx:.2}" y1="{y1}" x2="{gx:.2}" y2="{}" stroke="#000" stroke-width="1"/>"##,
                y1 + 4.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{gx:.2}" y="{}" text-anchor="middle">{}</text>"#,
                y1 + 18.0,
                xa.label(u)
            );
            let _ = writeln!(
                out,
                r##"<line x1="{}" y1="{gy:.2}" x2="{x0}" y2="{gy:.2}" stroke="#000" stroke-width="1"/>"##,
                x0 - 4.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                gy + 4.0,
                ya.label(u)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .copied()
                .filter(|&(x, y)| xa.admits(x) && ya.admits(y))
                .map(|(x, y)| (px(x), py(y)))
                .collect();
            match s.style {
                Style::Line => {
                    let path: Vec<String> =
                        pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        path.join(" ")
                    );
                }
                Style::Markers => {
                    for (x, y) in pts {
                        let _ = writeln!(
                            out,
                            r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#
                        );
                    }
                }
            }
            let ly = y0 + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#,
                x1 - 150.0,
                ly - 9.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{ly}">{}</text>"#,
                x1 - 135.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Keep at most `max` points, taking the largest `y` in each bucket so spikes survive.
pub fn downsample_max(points: &[(f64, f64)], max: usize) -> Vec<(f64, f64)> {
    if points.len() <= max {
        return points.to_vec();
    }
    let per = points.len().div_ceil(max);
    points
        .chunks(per)
        .map(|c| {
            *c.iter()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("chunks are nonempty")
        })
        .collect()
}
