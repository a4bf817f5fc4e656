//! Minimal deterministic SVG line charts.
//!
//! Elements are emitted in a fixed order (frame, axes, ticks, bands,
//! lines, legend) and coordinates are printed with fixed precision, so the
//! same input always yields the same bytes.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

/// Shaded region between two curves sharing x coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub label: String,
    pub lower: Vec<(f64, f64)>,
    pub upper: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub lines: Vec<Line>,
    pub bands: Vec<Band>,
}

struct Scale {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_x: bool,
}

impl Scale {
    fn fx(&self, x: f64) -> f64 {
        let (x, a, b) = if self.log_x { (x.log10(), self.x0.log10(), self.x1.log10()) } else { (x, self.x0, self.x1) };
        let frac = if b > a { (x - a) / (b - a) } else { 0.5 };
        LEFT + frac * (WIDTH - LEFT - RIGHT)
    }

    fn fy(&self, y: f64) -> f64 {
        let frac = if self.y1 > self.y0 { (y - self.y0) / (self.y1 - self.y0) } else { 0.5 };
        HEIGHT - BOTTOM - frac * (HEIGHT - TOP - BOTTOM)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Chart {
    fn scale(&self) -> Scale {
        let pts = self
            .lines
            .iter()
            .flat_map(|l| l.points.iter())
            .chain(self.bands.iter().flat_map(|b| b.lower.iter().chain(b.upper.iter())))
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!self.log_x || *x > 0.0));
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (1.0, 10.0, 0.0, 1.0);
        }
        y0 = y0.min(0.0);
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
        y1 += 0.05 * (y1 - y0);
        Scale { x0, x1, y0, y1, log_x: self.log_x }
    }

    fn path(&self, sc: &Scale, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!self.log_x || *x > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", sc.fx(x), sc.fy(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn render(&self) -> String {
        let sc = self.scale();
        let mut o = String::new();
        let _ = writeln!(
            o,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(o, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(o, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, esc(&self.title));
        let (px0, px1, py0, py1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
        let _ = writeln!(o, r#"<rect x="{px0:.2}" y="{py1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#, px1 - px0, py0 - py1);

        // x ticks: decades on a log axis, five even steps otherwise.
        let xticks: Vec<f64> = if self.log_x {
            let (a, b) = (sc.x0.log10().floor() as i32, sc.x1.log10().ceil() as i32);
            (a..=b).map(|e| 10f64.powi(e)).filter(|v| *v >= sc.x0 * 0.999 && *v <= sc.x1 * 1.001).collect()
        } else {
            (0..=4).map(|i| sc.x0 + (sc.x1 - sc.x0) * i as f64 / 4.0).collect()
        };
        for v in xticks {
            let x = sc.fx(v);
            let _ = writeln!(o, r#"<line x1="{x:.2}" y1="{py0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, py0 + 5.0);
            let _ = writeln!(o, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, py0 + 18.0, tick_label(v));
        }
        for i in 0..=4 {
            let v = sc.y0 + (sc.y1 - sc.y0) * i as f64 / 4.0;
            let y = sc.fy(v);
            let _ = writeln!(o, r#"<line x1="{:.2}" y1="{y:.2}" x2="{px0:.2}" y2="{y:.2}" stroke="black"/>"#, px0 - 5.0);
            let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, px0 - 8.0, y + 4.0, tick_label(v));
        }
        let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (px0 + px1) / 2.0, HEIGHT - 15.0, esc(&self.x_label));
        let _ = writeln!(
            o,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (py0 + py1) / 2.0,
            (py0 + py1) / 2.0,
            esc(&self.y_label)
        );

        let mut legend: Vec<(String, &str, bool, bool)> = Vec::new();
        for (i, b) in self.bands.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut rev = b.upper.clone();
            rev.reverse();
            let pts = format!("{} {}", self.path(&sc, &b.lower), self.path(&sc, &rev));
            let _ = writeln!(o, r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#, pts.trim());
            legend.push((b.label.clone(), color, false, true));
        }
        for (i, l) in self.lines.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if l.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(o, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#, self.path(&sc, &l.points));
            legend.push((l.label.clone(), color, l.dashed, false));
        }
        for (i, (label, color, dashed, band)) in legend.iter().enumerate() {
            let y = TOP + 12.0 + 18.0 * i as f64;
            let x = WIDTH - RIGHT + 12.0;
            if *band {
                let _ = writeln!(o, r#"<rect x="{x:.2}" y="{:.2}" width="22" height="10" fill="{color}" fill-opacity="0.18"/>"#, y - 5.0);
            } else {
                let dash = if *dashed { r#" stroke-dasharray="6 4""# } else { "" };
                let _ = writeln!(o, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="1.6"{dash}/>"#, x + 22.0);
            }
            let _ = writeln!(o, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 28.0, y + 4.0, esc(label));
        }
        o.push_str("</svg>\n");
        o
    }
}
