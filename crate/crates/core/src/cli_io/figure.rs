//! SVG rendering: Dirichlet curves red and solid, Neumann curves blue and
//! dashed, fields as flat-shaded triangles.

use std::fmt::Write;

use crate::analysis::NuTable;
use crate::geometry::{BoundaryTag, DomainSpec, Point};
use crate::mesh::Mesh;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 24.0;

struct Frame {
    min: Point,
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = Point>) -> Frame {
        let (mut lo, mut hi) = (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY));
        for p in points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let span = (hi.x - lo.x).max(hi.y - lo.y).max(1e-12);
        let scale = (SIZE - 2.0 * MARGIN) / span;
        Frame {
            min: lo,
            scale,
            height: (hi.y - lo.y) * scale + 2.0 * MARGIN,
        }
    }

    fn width(&self, max_x: f64) -> f64 {
        (max_x - self.min.x) * self.scale + 2.0 * MARGIN
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (
            MARGIN + (p.x - self.min.x) * self.scale,
            self.height - MARGIN - (p.y - self.min.y) * self.scale,
        )
    }
}

fn stroke(tag: BoundaryTag) -> &'static str {
    match tag {
        BoundaryTag::Dirichlet => r##"stroke="#d62728" stroke-width="3" fill="none""##,
        BoundaryTag::Neumann => r##"stroke="#1f4fd6" stroke-width="3" stroke-dasharray="8 5" fill="none""##,
    }
}

fn header(w: f64, h: f64, title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.1}\" height=\"{h:.1}\" viewBox=\"0 0 {w:.1} {h:.1}\">\n<title>{}</title>\n",
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Boundary curves of `spec`, one `<polyline>` per curve.
pub fn domain_svg(spec: &DomainSpec, title: &str) -> String {
    let polys: Vec<(BoundaryTag, Vec<Point>)> = spec
        .curves
        .iter()
        .map(|c| (c.tag, c.kind.sample(c.kind.length() / 64.0)))
        .collect();
    let frame = Frame::fit(polys.iter().flat_map(|p| p.1.iter().copied()));
    let max_x = polys.iter().flat_map(|p| p.1.iter()).map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let mut s = header(frame.width(max_x), frame.height, title);
    for (tag, pts) in &polys {
        let coords: Vec<String> = pts
            .iter()
            .map(|&p| {
                let (x, y) = frame.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(s, "<polyline class=\"{}\" {} points=\"{}\"/>", tag_class(*tag), stroke(*tag), coords.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

fn tag_class(tag: BoundaryTag) -> &'static str {
    match tag {
        BoundaryTag::Dirichlet => "dirichlet",
        BoundaryTag::Neumann => "neumann",
    }
}

/// Blue-white-red map of `t` in `[-1, 1]`.
fn diverging(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Mesh triangles, filled by the vertex mean of `field` when given, with the
/// tagged boundary edges drawn on top. Cover meshes are drawn sheet over sheet.
pub fn mesh_svg(mesh: &Mesh, field: Option<&[f64]>, title: &str) -> String {
    let frame = Frame::fit(mesh.vertices.iter().copied());
    let max_x = mesh.vertices.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let mut s = header(frame.width(max_x), frame.height, title);
    let scale = field.map_or(1.0, |f| f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE));
    for t in &mesh.triangles {
        let pts: Vec<String> = t
            .iter()
            .map(|&v| {
                let (x, y) = frame.map(mesh.vertices[v]);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let (fill, line) = match field {
            Some(f) => (diverging(t.iter().map(|&v| f[v]).sum::<f64>() / (3.0 * scale)), "none".to_string()),
            None => ("#f4f4f4".to_string(), "#9a9a9a".to_string()),
        };
        let _ = writeln!(s, "<polygon points=\"{}\" fill=\"{fill}\" stroke=\"{line}\" stroke-width=\"0.4\"/>", pts.join(" "));
    }
    for e in &mesh.boundary_edges {
        let (x0, y0) = frame.map(mesh.vertices[e.a]);
        let (x1, y1) = frame.map(mesh.vertices[e.b]);
        let _ = writeln!(s, "<line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y1:.2}\" {}/>", stroke(e.tag));
    }
    s.push_str("</svg>\n");
    s
}

/// `log10 ν(k, n)` as a grid, rows `k` and columns `n`; darker is smaller.
pub fn nu_heatmap_svg(table: &NuTable) -> String {
    let n = table.max_index;
    let cell = 36.0;
    let side = cell * n as f64 + 2.0 * MARGIN + 20.0;
    let mut s = header(side, side, "log10 nu(k, n)");
    let logs: Vec<f64> = table
        .cells
        .iter()
        .filter_map(|c| c.nu)
        .map(|v| v.max(1e-16).log10())
        .collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for c in &table.cells {
        let x = MARGIN + 20.0 + (c.n - 1) as f64 * cell;
        let y = MARGIN + 20.0 + (c.k - 1) as f64 * cell;
        let fill = match c.nu {
            Some(v) => {
                let t = if hi > lo { (v.max(1e-16).log10() - lo) / (hi - lo) } else { 0.0 };
                let g = (40.0 + 215.0 * t) as u8;
                format!("#{g:02x}{g:02x}{:02x}", 255u8)
            }
            None => "#ff00ff".to_string(),
        };
        let label = c.nu.map_or("failed".to_string(), |v| format!("{v:.3e}"));
        let _ = writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\" stroke=\"#ffffff\"><title>nu({}, {}) = {label}</title></rect>",
            c.k, c.n
        );
    }
    for i in 1..=n {
        let p = MARGIN + 20.0 + (i as f64 - 0.5) * cell;
        let _ = writeln!(s, "<text x=\"{p:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">{i}</text>", MARGIN + 14.0);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">{i}</text>", MARGIN + 16.0, p + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
