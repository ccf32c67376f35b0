use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::{assign_boundary_edges, boundary_edges_of, Mesh, PointIndex};
use crate::error::{Error, Result};
use crate::geometry::{
    point_segment_distance, BoundaryTag, Curve, CurveKind, DomainSpec, Point, COORD_TOL,
};

/// Angular sector `angle0 <= arg z <= angle1` with apex at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Wedge {
    pub angle0: f64,
    pub angle1: f64,
}

impl Wedge {
    pub fn new(angle0: f64, angle1: f64) -> Self {
        Wedge { angle0, angle1 }
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.angle1 - self.angle0;
        if !(w > 1e-9 && w < TAU) {
            return Err(Error::Geometry(format!(
                "degenerate wedge [{}, {}]",
                self.angle0, self.angle1
            )));
        }
        Ok(())
    }
}

fn on_ray(p: Point, beta: f64) -> bool {
    let u = Point::polar(1.0, beta);
    let n = p.norm();
    n > COORD_TOL && u.cross(p).abs() <= 1e-12 * n.max(1.0) && u.dot(p) > 0.0
}

fn angle_matches(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(TAU);
    d < 1e-12 || TAU - d < 1e-12
}

/// Part of a domain inside a wedge, for domains star-shaped about the origin.
///
/// Curves are clipped at the wedge rays; the cut radii are added as Neumann
/// curves labeled `wedge_start` and `wedge_end` unless the domain boundary
/// already runs along them.
pub fn restrict_to_wedge(spec: &DomainSpec, wedge: &Wedge) -> Result<DomainSpec> {
    wedge.validate()?;
    if spec.sheets != 1 {
        return Err(Error::Geometry("wedge restriction needs a planar domain".into()));
    }
    let (w0, w1) = (wedge.angle0, wedge.angle1);
    let mut pieces: Vec<Curve> = Vec::new();
    let mut ray_covered = [false, false];
    for c in &spec.curves {
        match c.kind {
            CurveKind::Arc {
                center,
                radius,
                angle0,
                angle1,
            } => {
                if center.norm() > COORD_TOL {
                    return Err(Error::Geometry(
                        "wedge restriction supports arcs centered at the origin only".into(),
                    ));
                }
                for k in -2..=2 {
                    let shift = k as f64 * TAU;
                    let lo = angle0.max(w0 + shift);
                    let hi = angle1.min(w1 + shift);
                    if hi - lo > 1e-12 {
                        pieces.push(Curve {
                            kind: CurveKind::Arc {
                                center: Point::ORIGIN,
                                radius,
                                angle0: lo,
                                angle1: hi,
                            },
                            ..c.clone()
                        });
                    }
                }
            }
            CurveKind::Segment { p0, p1 } => {
                let collinear = p0.cross(p1).abs() <= 1e-12 * (p0.norm() * p1.norm()).max(1e-300)
                    || p0.norm() <= COORD_TOL
                    || p1.norm() <= COORD_TOL;
                if collinear {
                    if p0.dot(p1) < -COORD_TOL {
                        return Err(Error::Geometry(
                            "split boundary segments through the origin before restricting".into(),
                        ));
                    }
                    let far = if p0.norm() > p1.norm() { p0 } else { p1 };
                    let theta = far.arg();
                    for (k, beta) in [w0, w1].into_iter().enumerate() {
                        if angle_matches(theta, beta) {
                            ray_covered[k] = true;
                            pieces.push(c.clone());
                        }
                    }
                    continue;
                }
                let d = p1 - p0;
                let mut ts = vec![0.0, 1.0];
                for beta in [w0, w1] {
                    let u = Point::polar(1.0, beta);
                    let den = u.cross(d);
                    if den.abs() > 1e-300 {
                        let t = -u.cross(p0) / den;
                        if t > 1e-14 && t < 1.0 - 1e-14 && u.dot(p0 + d * t) > 0.0 {
                            ts.push(t);
                        }
                    }
                }
                ts.sort_by(|a, b| a.total_cmp(b));
                for w in ts.windows(2) {
                    let mid = p0 + d * (0.5 * (w[0] + w[1]));
                    let rel = (mid.arg() - w0).rem_euclid(TAU);
                    if rel > 0.0 && rel < w1 - w0 {
                        let snap = |t: f64| -> Point {
                            let p = if t == 0.0 {
                                p0
                            } else if t == 1.0 {
                                p1
                            } else {
                                p0 + d * t
                            };
                            for beta in [w0, w1] {
                                let u = Point::polar(1.0, beta);
                                if u.cross(p).abs() <= 1e-10 * p.norm() && u.dot(p) > 0.0 {
                                    return u * u.dot(p);
                                }
                            }
                            p
                        };
                        pieces.push(Curve {
                            kind: CurveKind::segment(snap(w[0]), snap(w[1])),
                            ..c.clone()
                        });
                    }
                }
            }
        }
    }
    for (k, beta) in [w0, w1].into_iter().enumerate() {
        if ray_covered[k] {
            continue;
        }
        let r = pieces
            .iter()
            .flat_map(|c| [c.kind.start(), c.kind.end()])
            .filter(|&p| on_ray(p, beta))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .ok_or_else(|| {
                Error::Geometry(format!("wedge ray at angle {beta} does not meet the boundary"))
            })?;
        let (kind, label) = if k == 0 {
            (CurveKind::segment(Point::ORIGIN, r), "wedge_start")
        } else {
            (CurveKind::segment(r, Point::ORIGIN), "wedge_end")
        };
        pieces.push(Curve::labeled(kind, BoundaryTag::Neumann, label));
    }
    let mut out = DomainSpec {
        curves: pieces,
        weight: spec.weight.clone(),
        sheets: 1,
        slit: None,
        symmetry_hints: Vec::new(),
        metadata: spec.metadata.clone(),
    };
    out.metadata
        .insert("wedge".into(), format!("[{w0:.17e}, {w1:.17e}]"));
    out.validate()?;
    Ok(out)
}

/// Triangulation of the part of `spec` inside `wedge` with maximum edge
/// length `h`. Arc vertices lie exactly on their arcs.
pub fn mesh_fundamental(spec: &DomainSpec, wedge: &Wedge, h: f64) -> Result<Mesh> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("mesh size h = {h} must be positive")));
    }
    let region = restrict_to_wedge(spec, wedge)?;
    mesh_region(&region, h)
}

/// Boundary polyline of a region: merged sample points and the chords between them.
pub(crate) struct Polyline {
    pub points: Vec<Point>,
    /// `(a, b, curve)` chords.
    pub segs: Vec<(usize, usize, usize)>,
}

impl Polyline {
    pub(crate) fn from_samples(samples: &[Vec<Point>]) -> Polyline {
        let mut points: Vec<Point> = Vec::new();
        let mut index = PointIndex::new();
        let mut segs = Vec::new();
        for (ci, pts) in samples.iter().enumerate() {
            let mut ids = Vec::with_capacity(pts.len());
            for &p in pts {
                let id = match index.find(p, &points, 1e-10) {
                    Some(i) => i,
                    None => {
                        points.push(p);
                        index.insert(p, points.len() - 1);
                        points.len() - 1
                    }
                };
                ids.push(id);
            }
            for w in ids.windows(2) {
                segs.push((w[0], w[1], ci));
            }
        }
        Polyline { points, segs }
    }

    /// Even-odd inside test against the chords.
    pub(crate) fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for &(a, b, _) in &self.segs {
            let (pa, pb) = (self.points[a], self.points[b]);
            if (pa.y > p.y) != (pb.y > p.y) {
                let x = pa.x + (p.y - pa.y) / (pb.y - pa.y) * (pb.x - pa.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub(crate) fn distance(&self, p: Point) -> f64 {
        self.segs
            .iter()
            .map(|&(a, b, _)| point_segment_distance(p, self.points[a], self.points[b]))
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }
}

pub(crate) fn to_spade(p: Point) -> Point2<f64> {
    Point2::new(p.x, p.y)
}

pub(crate) type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

pub(crate) fn build_cdt(poly: &Polyline, interior: &[Point]) -> Result<Cdt> {
    let mut verts: Vec<Point2<f64>> = poly.points.iter().map(|&p| to_spade(p)).collect();
    verts.extend(interior.iter().map(|&p| to_spade(p)));
    let edges: Vec<[usize; 2]> = poly.segs.iter().map(|&(a, b, _)| [a, b]).collect();
    Cdt::bulk_load_cdt(verts, edges)
        .map_err(|e| Error::Mesh(format!("constrained triangulation failed: {e:?}")))
}

/// Triangles of the CDT inside the constrained boundary, as a compact
/// vertex/triangle list. Faces reachable from the convex hull without crossing
/// a constraint edge are outside.
pub(crate) fn extract_inside(cdt: &Cdt) -> (Vec<Point>, Vec<[usize; 3]>) {
    let all: Vec<Point> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            Point::new(p.x, p.y)
        })
        .collect();
    let outside = outside_faces(cdt);
    let mut used = vec![usize::MAX; all.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for f in cdt.inner_faces() {
        if outside.contains(&f.fix().index()) {
            continue;
        }
        let ids = f.vertices().map(|v| v.fix().index());
        let mut tri = [0usize; 3];
        for k in 0..3 {
            if used[ids[k]] == usize::MAX {
                used[ids[k]] = vertices.len();
                vertices.push(all[ids[k]]);
            }
            tri[k] = used[ids[k]];
        }
        triangles.push(tri);
    }
    (vertices, triangles)
}

pub(crate) fn outside_faces(cdt: &Cdt) -> std::collections::HashSet<usize> {
    let mut outside = std::collections::HashSet::new();
    let mut queue = std::collections::VecDeque::new();
    for f in cdt.inner_faces() {
        let seed = f
            .adjacent_edges()
            .iter()
            .any(|e| !e.is_constraint_edge() && e.rev().face().is_outer());
        if seed && outside.insert(f.fix().index()) {
            queue.push_back(f.fix());
        }
    }
    while let Some(fh) = queue.pop_front() {
        let f = cdt.face(fh);
        for e in f.adjacent_edges() {
            if e.is_constraint_edge() {
                continue;
            }
            if let Some(g) = e.rev().face().as_inner() {
                if outside.insert(g.fix().index()) {
                    queue.push_back(g.fix());
                }
            }
        }
    }
    outside
}

/// Remove near-degenerate triangles left by almost collinear boundary points:
/// flip the sliver with its neighbor across the longest edge, or drop it when
/// that edge is on the boundary.
pub(crate) fn fix_slivers(vertices: &[Point], triangles: &mut Vec<[usize; 3]>) -> Result<()> {
    use super::signed_area;
    for _ in 0..10_000 {
        let sliver = triangles.iter().position(|t| {
            let p = t.map(|v| vertices[v]);
            let l2 = (0..3).map(|k| {
                let d = p[(k + 1) % 3] - p[k];
                d.dot(d)
            });
            let l2 = l2.fold(0.0, f64::max);
            signed_area(p[0], p[1], p[2]).abs() <= 1e-9 * l2
        });
        let Some(ti) = sliver else { return Ok(()) };
        let t = triangles[ti];
        // longest edge (a, c) with apex b
        let (mut best, mut bl) = (0, -1.0);
        for k in 0..3 {
            let l = vertices[t[k]].dist(vertices[t[(k + 1) % 3]]);
            if l > bl {
                bl = l;
                best = k;
            }
        }
        let (a, c, b) = (t[best], t[(best + 1) % 3], t[(best + 2) % 3]);
        let neighbor = triangles.iter().enumerate().find(|&(ui, u)| {
            ui != ti && u.contains(&a) && u.contains(&c)
        });
        match neighbor {
            None => {
                triangles.swap_remove(ti);
            }
            Some((ui, u)) => {
                let d = *u.iter().find(|&&v| v != a && v != c).expect("triangle has a third vertex");
                let orient = |tri: [usize; 3]| -> [usize; 3] {
                    let p = tri.map(|v| vertices[v]);
                    if signed_area(p[0], p[1], p[2]) > 0.0 {
                        tri
                    } else {
                        [tri[0], tri[2], tri[1]]
                    }
                };
                let t1 = orient([a, b, d]);
                let t2 = orient([b, c, d]);
                for tri in [t1, t2] {
                    let p = tri.map(|v| vertices[v]);
                    if !(signed_area(p[0], p[1], p[2]) > 0.0) {
                        return Err(Error::Mesh(format!(
                            "cannot repair degenerate triangle near ({:.6}, {:.6})",
                            p[0].x, p[0].y
                        )));
                    }
                }
                let (hi, lo) = if ti > ui { (ti, ui) } else { (ui, ti) };
                triangles.swap_remove(hi);
                triangles.swap_remove(lo);
                triangles.push(t1);
                triangles.push(t2);
            }
        }
    }
    Err(Error::Mesh("degenerate triangle repair did not terminate".into()))
}

fn lattice_points(poly: &Polyline, spacing: f64) -> Vec<Point> {
    let (lo, hi) = poly.bbox();
    let dy = spacing * 3f64.sqrt() / 2.0;
    let j0 = (lo.y / dy).floor() as i64;
    let j1 = (hi.y / dy).ceil() as i64;
    let i0 = (lo.x / spacing).floor() as i64 - 1;
    let i1 = (hi.x / spacing).ceil() as i64 + 1;
    let mut out = Vec::new();
    for j in j0..=j1 {
        let off = if j.rem_euclid(2) == 1 { 0.5 * spacing } else { 0.0 };
        for i in i0..=i1 {
            let p = Point::new(i as f64 * spacing + off, j as f64 * dy);
            if poly.contains(p) && poly.distance(p) >= 0.55 * spacing {
                out.push(p);
            }
        }
    }
    out
}

/// Mesh a closed tagged region: boundary sampled at spacing at most `h`, an
/// interior triangular lattice, then midpoint insertion until every edge is at
/// most `h` long.
pub(crate) fn mesh_region(region: &DomainSpec, h: f64) -> Result<Mesh> {
    let samples: Vec<Vec<Point>> = region.curves.iter().map(|c| c.kind.sample(h)).collect();
    let poly = Polyline::from_samples(&samples);
    let mut interior = lattice_points(&poly, 0.9 * h);
    let mut cdt = build_cdt(&poly, &interior)?;
    for _ in 0..30 {
        let (verts, tris) = extract_inside(&cdt);
        let mut extra: Vec<Point> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for t in &tris {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if !seen.insert(key) {
                    continue;
                }
                let (pa, pb) = (verts[a], verts[b]);
                if pa.dist(pb) > h {
                    let m = pa.midpoint(pb);
                    if poly.distance(m) > 1e-9 * h {
                        extra.push(m);
                    }
                }
            }
        }
        if extra.is_empty() {
            break;
        }
        interior.extend(extra);
        cdt = build_cdt(&poly, &interior)?;
    }
    let (vertices, mut triangles) = extract_inside(&cdt);
    fix_slivers(&vertices, &mut triangles)?;
    finish_mesh(vertices, triangles, region)
}

pub(crate) fn finish_mesh(
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    region: &DomainSpec,
) -> Result<Mesh> {
    let edges = boundary_edges_of(&triangles);
    let boundary_edges = assign_boundary_edges(&vertices, &edges, &region.curves)?;
    let mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
        curves: region.curves.clone(),
        sheet_of_vertex: None,
        symmetry_perms: Vec::new(),
        blocks: None,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn half_disk_left_quarter() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let q = restrict_to_wedge(&spec, &Wedge::new(FRAC_PI_2, PI)).unwrap();
        assert_eq!(q.curves.len(), 4);
        assert_eq!(q.tag_at(Point::polar(1.0, 2.0), 1e-9), Some(BoundaryTag::Dirichlet));
        assert_eq!(q.tag_at(Point::polar(1.0, 3.0), 1e-9), Some(BoundaryTag::Neumann));
        assert_eq!(q.tag_at(Point::new(-0.5, 0.0), 1e-9), Some(BoundaryTag::Dirichlet));
        let cut = q.curves.iter().find(|c| c.label.as_deref() == Some("wedge_start")).unwrap();
        assert!(cut.kind.end().dist(Point::new(0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn sectorial_block_restriction() {
        let block = SectorialBlock::rectangle();
        let spec = build_sectorial_domain(&block, false).unwrap();
        let b = restrict_to_wedge(&spec, &Wedge::new(0.0, FRAC_PI_4)).unwrap();
        assert_eq!(b.curves.len(), 3);
        assert!((b.perimeter() - (1.0 + 1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        assert!(mesh_fundamental(&spec, &Wedge::new(1.0, 1.0), 0.1).is_err());
        assert!(mesh_fundamental(&spec, &Wedge::new(FRAC_PI_2, PI), 0.0).is_err());
        assert!(mesh_fundamental(&spec, &Wedge::new(FRAC_PI_2, PI), -1.0).is_err());
    }
}
