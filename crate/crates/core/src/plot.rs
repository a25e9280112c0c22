//! Minimal static SVG charts: a grid of panels with shaded bands and lines.

use std::fmt::Write;

const PANEL_W: f64 = 260.0;
const PANEL_H: f64 = 190.0;
const MARGIN_L: f64 = 46.0;
const MARGIN_R: f64 = 12.0;
const MARGIN_T: f64 = 26.0;
const MARGIN_B: f64 = 30.0;

#[derive(Clone, Debug)]
pub struct Band {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub fill: &'static str,
}

#[derive(Clone, Debug)]
pub struct Line {
    pub y: Vec<f64>,
    pub color: &'static str,
    pub dashed: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Panel {
    pub title: String,
    pub x: Vec<f64>,
    pub bands: Vec<Band>,
    pub lines: Vec<Line>,
    /// Dashed vertical markers at these x positions.
    pub markers: Vec<f64>,
    pub zero_line: bool,
}

impl Panel {
    fn y_range(&self) -> (f64, f64) {
        let values = self
            .bands
            .iter()
            .flat_map(|b| b.lower.iter().chain(&b.upper))
            .chain(self.lines.iter().flat_map(|l| &l.y))
            .copied()
            .filter(|v| v.is_finite());
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
        if self.zero_line {
            lo = lo.min(0.0);
            hi = hi.max(0.0);
        }
        if !lo.is_finite() {
            return (-1.0, 1.0);
        }
        if hi - lo < 1e-12 {
            let pad = lo.abs().max(1.0) * 0.05;
            return (lo - pad, hi + pad);
        }
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Render panels left to right, top to bottom, `columns` per row.
pub fn render_grid(panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1);
    let rows = panels.len().div_ceil(columns).max(1);
    let width = columns as f64 * PANEL_W;
    let height = rows as f64 * PANEL_H;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (idx, panel) in panels.iter().enumerate() {
        let ox = (idx % columns) as f64 * PANEL_W;
        let oy = (idx / columns) as f64 * PANEL_H;
        draw_panel(&mut s, panel, ox, oy);
    }
    s.push_str("</svg>\n");
    s
}

fn draw_panel(s: &mut String, p: &Panel, ox: f64, oy: f64) {
    let (x0, x1) = match (p.x.first(), p.x.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        (Some(&a), _) => (a - 1.0, a + 1.0),
        _ => (0.0, 1.0),
    };
    let (y0, y1) = p.y_range();
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| ox + MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + MARGIN_T + (y1 - y) / (y1 - y0) * ph;

    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
        ox + MARGIN_L + pw / 2.0,
        oy + 16.0,
        escape(&p.title)
    );
    let _ = writeln!(
        s,
        r##"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#888"/>"##,
        ox + MARGIN_L,
        oy + MARGIN_T
    );
    for (v, anchor_y) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            ox + MARGIN_L - 4.0,
            anchor_y + 3.0,
            tick(v)
        );
    }
    for v in [x0, x1] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(v),
            oy + PANEL_H - MARGIN_B + 14.0,
            tick(v)
        );
    }
    if p.zero_line && y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#444" stroke-width="0.6"/>"##,
            sx(x0),
            sy(0.0),
            sx(x1),
            sy(0.0)
        );
    }
    for band in &p.bands {
        let mut pts = Vec::new();
        for (x, y) in p.x.iter().zip(&band.upper) {
            pts.push(format!("{:.2},{:.2}", sx(*x), sy(*y)));
        }
        for (x, y) in p.x.iter().zip(&band.lower).rev() {
            pts.push(format!("{:.2},{:.2}", sx(*x), sy(*y)));
        }
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{}" stroke="none"/>"#,
            pts.join(" "),
            band.fill
        );
    }
    for m in &p.markers {
        let _ = writeln!(
            s,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#666" stroke-dasharray="4 3"/>"##,
            sx(*m),
            sy(y1),
            sy(y0)
        );
    }
    for line in &p.lines {
        // Non-finite values break the path into segments.
        let mut segments: Vec<Vec<String>> = vec![Vec::new()];
        for (x, y) in p.x.iter().zip(&line.y) {
            if y.is_finite() {
                segments
                    .last_mut()
                    .expect("nonempty")
                    .push(format!("{:.2},{:.2}", sx(*x), sy(*y)));
            } else if !segments.last().expect("nonempty").is_empty() {
                segments.push(Vec::new());
            }
        }
        let dash = if line.dashed {
            r#" stroke-dasharray="5 3""#
        } else {
            ""
        };
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
                seg.join(" "),
                line.color
            );
        }
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}
