//! Static SVG figures for one- and two-dimensional results.

use std::fmt::Write;

use curvebump::{BoundaryGeometry, Density, GridSpec, Kde};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const PAD: f64 = 20.0;

/// Optional confidence band drawn under the estimate.
pub struct Band<'a> {
    pub upper: &'a BoundaryGeometry,
    pub lower: &'a BoundaryGeometry,
    pub upper_mask: &'a [bool],
    pub lower_mask: &'a [bool],
}

struct Frame {
    lo: [f64; 2],
    hi: [f64; 2],
    height: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.lo[0]) / (self.hi[0] - self.lo[0]) * (WIDTH - 2.0 * PAD)
    }

    fn y(&self, v: f64) -> f64 {
        self.height - PAD - (v - self.lo[1]) / (self.hi[1] - self.lo[1]) * (self.height - 2.0 * PAD)
    }
}

/// Light yellow to dark red.
fn heat(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(255.0, 150.0), lerp(237.0, 20.0), lerp(160.0, 30.0))
}

fn point_colors(kde: &Kde) -> Vec<String> {
    let dens: Vec<f64> = kde
        .sample()
        .points()
        .map(|p| kde.value(p).unwrap_or(0.0))
        .collect();
    let max = dens.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    dens.iter().map(|d| heat(d / max)).collect()
}

pub fn render(kde: &Kde, grid: &GridSpec, estimate: &BoundaryGeometry, band: Option<Band<'_>>) -> String {
    if grid.dim() == 1 {
        render_1d(kde, grid, estimate, band)
    } else {
        render_2d(kde, grid, estimate, band)
    }
}

fn header(out: &mut String, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn render_1d(kde: &Kde, grid: &GridSpec, estimate: &BoundaryGeometry, band: Option<Band<'_>>) -> String {
    let height = 320.0;
    let xs: Vec<f64> = (0..grid.len()).map(|i| grid.coord(0, i)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| kde.value(&[x]).unwrap_or(0.0)).collect();
    let ymax = ys.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let f = Frame {
        lo: [grid.lower()[0], -0.08 * ymax],
        hi: [grid.upper()[0], 1.05 * ymax],
        height,
    };
    let mut out = String::new();
    header(&mut out, height);
    let dx = 0.5 * grid.spacing(0);
    if let Some(b) = &band {
        for (mask, fill) in [(b.upper_mask, "#cfe3f7"), (b.lower_mask, "#7fb0e0")] {
            for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{PAD}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                    f.x(xs[i] - dx),
                    f.x(xs[i] + dx) - f.x(xs[i] - dx),
                    height - 2.0 * PAD
                );
            }
        }
    }
    let path: Vec<String> = xs.iter().zip(&ys).map(|(&x, &y)| format!("{:.2},{:.2}", f.x(x), f.y(y))).collect();
    let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#, path.join(" "));
    for (p, color) in kde.sample().points().zip(point_colors(kde)) {
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" x2="{x:.2}" y1="{:.2}" y2="{:.2}" stroke="{color}"/>"#,
            f.y(-0.07 * ymax),
            f.y(-0.01 * ymax),
            x = f.x(p[0])
        );
    }
    for v in estimate.vertices() {
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" x2="{x:.2}" y1="{PAD}" y2="{:.2}" stroke="#c0392b" stroke-dasharray="4 3"/>"##,
            height - PAD,
            x = f.x(v[0])
        );
    }
    out.push_str("</svg>\n");
    out
}

fn polylines(out: &mut String, f: &Frame, geometry: &BoundaryGeometry, style: &str) {
    if let BoundaryGeometry::Polylines { polylines } = geometry {
        for line in polylines {
            let pts: Vec<String> = line
                .vertices
                .iter()
                .map(|v| format!("{:.2},{:.2}", f.x(v[0]), f.y(v[1])))
                .collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" {style}/>"#, pts.join(" "));
        }
    }
}

fn render_2d(kde: &Kde, grid: &GridSpec, estimate: &BoundaryGeometry, band: Option<Band<'_>>) -> String {
    let f = Frame {
        lo: [grid.lower()[0], grid.lower()[1]],
        hi: [grid.upper()[0], grid.upper()[1]],
        height: HEIGHT,
    };
    let mut out = String::new();
    header(&mut out, HEIGHT);
    if let Some(b) = &band {
        let (sx, sy) = (
            f.x(grid.spacing(0)) - f.x(0.0),
            f.y(0.0) - f.y(grid.spacing(1)),
        );
        for (mask, fill) in [(b.upper_mask, "#cfe3f7"), (b.lower_mask, "#7fb0e0")] {
            for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                let x = grid.node(k);
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{sx:.2}" height="{sy:.2}" fill="{fill}"/>"#,
                    f.x(x[0]) - 0.5 * sx,
                    f.y(x[1]) - 0.5 * sy
                );
            }
        }
    }
    for (p, color) in kde.sample().points().zip(point_colors(kde)) {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
            f.x(p[0]),
            f.y(p[1])
        );
    }
    if let Some(b) = &band {
        polylines(&mut out, &f, b.upper, r##"stroke="#2c6fb7" stroke-dasharray="5 3""##);
        polylines(&mut out, &f, b.lower, r##"stroke="#1b3f6b" stroke-dasharray="2 2""##);
    }
    polylines(&mut out, &f, estimate, r##"stroke="#c0392b" stroke-width="1.5""##);
    out.push_str("</svg>\n");
    out
}
