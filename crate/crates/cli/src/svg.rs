//! Self-contained SVG figures built as strings.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;

/// Colors for line series, in order.
pub const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Heatmap color at `+1` and `-1`.
pub const POSITIVE_EXTREME: &str = "#b2182b";
pub const NEGATIVE_EXTREME: &str = "#2166ac";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, escape(title));
    s
}

/// Linear map of `[lo, hi]` onto `[a, b]`; a flat range maps to the middle.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        0.5 * (a + b)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        scale(x, self.xr.0, self.xr.1, self.x0, self.x0 + self.w)
    }

    fn py(&self, y: f64) -> f64 {
        scale(y, self.yr.0, self.yr.1, self.y0 + self.h, self.y0)
    }

    fn axes(&self, s: &mut String, x_label: &str, y_label: &str) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        let _ = writeln!(s, r#"<rect x="{x0:.2}" y="{y0:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#);
        for (v, anchor_y) in [(self.yr.0, y0 + h), (self.yr.1, y0)] {
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 4.0, anchor_y + 4.0, tick(v));
        }
        for (v, anchor_x) in [(self.xr.0, x0), (self.xr.1, x0 + w)] {
            let _ = writeln!(s, r#"<text x="{anchor_x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + h + 16.0, tick(v));
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, x0 + w / 2.0, y0 + h + 34.0, escape(x_label));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            x0 - 40.0,
            y0 + h / 2.0,
            x0 - 40.0,
            y0 + h / 2.0,
            escape(y_label)
        );
    }

    fn polyline(&self, s: &mut String, pts: &[(f64, f64)], color: &str, extra: &str) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{extra}/>"#, coords.join(" "));
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// One polyline per series with a legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let mut s = open(WIDTH, HEIGHT, title);
    let xr = range(series.iter().flat_map(|se| se.points.iter().map(|p| p.0)));
    let yr = range(series.iter().flat_map(|se| se.points.iter().map(|p| p.1)));
    let f = Frame { x0: MARGIN + 10.0, y0: 40.0, w: WIDTH - 2.0 * MARGIN - 10.0, h: HEIGHT - 100.0, xr, yr: (yr.0.min(0.0), yr.1) };
    f.axes(&mut s, x_label, y_label);
    for (i, se) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        f.polyline(&mut s, &se.points, color, "");
        let ly = 50.0 + 16.0 * i as f64;
        let lx = f.x0 + f.w - 130.0;
        let _ = writeln!(s, r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="4" fill="{color}"/>"#, ly - 4.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 20.0, escape(se.name));
    }
    s.push_str("</svg>\n");
    s
}

/// Vertical bars over `[0, y_max]` with an optional dashed reference level.
pub fn bar_chart(title: &str, x_label: &str, y_label: &str, values: &[f64], y_max: f64, reference: Option<f64>) -> String {
    let mut s = open(WIDTH, HEIGHT, title);
    let n = values.len().max(1) as f64;
    let f = Frame { x0: MARGIN + 10.0, y0: 40.0, w: WIDTH - 2.0 * MARGIN - 10.0, h: HEIGHT - 100.0, xr: (0.0, n), yr: (0.0, y_max) };
    f.axes(&mut s, x_label, y_label);
    let bw = f.w / n;
    for (i, &v) in values.iter().enumerate() {
        let top = f.py(v.clamp(0.0, y_max));
        let _ = writeln!(
            s,
            r#"<rect class="bar" x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>dim {i}: {v}</title></rect>"#,
            f.x0 + bw * (i as f64 + 0.1),
            bw * 0.8,
            f.y0 + f.h - top,
            PALETTE[0]
        );
    }
    if let Some(r) = reference {
        let y = f.py(r);
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#555" stroke-dasharray="4 3"/>"##,
            f.x0,
            f.x0 + f.w
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One panel of the density overlay figure.
pub struct DensityPanel {
    pub edges: Vec<f64>,
    pub heights: Vec<f64>,
    /// `(x, mixture density, per-component weighted densities)` on a grid.
    pub curve: Vec<(f64, f64, Vec<f64>)>,
}

/// Histogram bars under the mixture density and its weighted components, one
/// panel per dimension.
pub fn density_grid(title: &str, panels: &[DensityPanel]) -> String {
    let cols = 4usize;
    let rows = panels.len().div_ceil(cols).max(1);
    let (pw, ph) = (220.0, 150.0);
    let (w, h) = (cols as f64 * pw + 20.0, rows as f64 * ph + 50.0);
    let mut s = open(w, h, title);
    for (d, p) in panels.iter().enumerate() {
        let (r, c) = (d / cols, d % cols);
        let xr = range(p.edges.iter().copied().chain(p.curve.iter().map(|c| c.0)));
        let yr = range(p.heights.iter().copied().chain(p.curve.iter().map(|c| c.1)));
        let f = Frame {
            x0: 20.0 + c as f64 * pw + 10.0,
            y0: 40.0 + r as f64 * ph + 18.0,
            w: pw - 30.0,
            h: ph - 40.0,
            xr,
            yr: (0.0, yr.1.max(1e-12)),
        };
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">z{d}</text>"#, f.x0, f.y0 - 4.0);
        let _ = writeln!(s, r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#999"/>"##, f.x0, f.y0, f.w, f.h);
        for (i, &height) in p.heights.iter().enumerate() {
            let (a, b) = (f.px(p.edges[i]), f.px(p.edges[i + 1]));
            let top = f.py(height);
            let _ = writeln!(
                s,
                r##"<rect x="{a:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="#c6dbef"/>"##,
                (b - a).max(0.0),
                f.y0 + f.h - top
            );
        }
        let n_comp = p.curve.first().map_or(0, |c| c.2.len());
        for k in 0..n_comp {
            let pts: Vec<(f64, f64)> = p.curve.iter().map(|c| (c.0, c.2[k])).collect();
            f.polyline(&mut s, &pts, PALETTE[2], r#" stroke-dasharray="3 2""#);
        }
        let pts: Vec<(f64, f64)> = p.curve.iter().map(|c| (c.0, c.1)).collect();
        f.polyline(&mut s, &pts, PALETTE[1], "");
    }
    s.push_str("</svg>\n");
    s
}

fn hex(c: &str) -> [f64; 3] {
    let v = |i: usize| u8::from_str_radix(&c[i..i + 2], 16).expect("hex color") as f64;
    [v(1), v(3), v(5)]
}

/// Diverging color: `NEGATIVE_EXTREME` at -1, white at 0, `POSITIVE_EXTREME` at +1.
pub fn diverging_color(v: f64) -> String {
    let v = if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
    if v == 1.0 {
        return POSITIVE_EXTREME.to_string();
    }
    if v == -1.0 {
        return NEGATIVE_EXTREME.to_string();
    }
    let end = hex(if v >= 0.0 { POSITIVE_EXTREME } else { NEGATIVE_EXTREME });
    let t = v.abs();
    let ch = |i: usize| (255.0 + t * (end[i] - 255.0)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

/// `dims x dims` heatmap of row-major `values` in `[-1, 1]`.
pub fn heatmap(title: &str, dims: usize, values: &[f64]) -> String {
    let cell = (360.0 / dims.max(1) as f64).clamp(8.0, 40.0);
    let side = cell * dims as f64;
    let (w, h) = (side + 160.0, side + 90.0);
    let mut s = open(w, h, title);
    let (x0, y0) = (50.0, 45.0);
    for i in 0..dims {
        for j in 0..dims {
            let v = values[i * dims + j];
            let _ = writeln!(
                s,
                r#"<rect class="cell" data-i="{i}" data-j="{j}" x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{}"><title>z{i}, z{j}: {v}</title></rect>"#,
                x0 + j as f64 * cell,
                y0 + i as f64 * cell,
                diverging_color(v)
            );
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="9">z{i}</text>"#, x0 - 4.0, y0 + (i as f64 + 0.7) * cell);
    }
    let lx = x0 + side + 30.0;
    for step in 0..=20 {
        let v = 1.0 - step as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.2}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            y0 + step as f64 * side / 21.0,
            side / 21.0 + 0.5,
            diverging_color(v)
        );
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">+1</text>"#, lx + 20.0, y0 + 10.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">-1</text>"#, lx + 20.0, y0 + side);
    s.push_str("</svg>\n");
    s
}
