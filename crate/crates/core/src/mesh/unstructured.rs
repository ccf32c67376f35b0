use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use spade::{AngleLimit, RefinementParameters, Triangulation};

use super::fundamental::{build_cdt, finish_mesh, fix_slivers, Polyline};
use super::Mesh;
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, DomainSpec, Point};

/// Local mesh-size reduction toward Dirichlet/Neumann junctions:
/// `h(d) = h * clamp((d / radius)^exponent, floor, 1)` at distance `d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grading {
    pub radius: f64,
    pub exponent: f64,
    pub floor: f64,
}

impl Default for Grading {
    fn default() -> Self {
        Grading {
            radius: 0.5,
            exponent: 0.7,
            floor: 0.05,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnstructuredOptions {
    pub h: f64,
    pub seed: u64,
    pub min_angle_deg: f64,
    pub grading: Option<Grading>,
}

impl UnstructuredOptions {
    pub fn new(h: f64, seed: u64) -> Self {
        UnstructuredOptions {
            h,
            seed,
            min_angle_deg: 25.0,
            grading: None,
        }
    }

    pub fn graded(mut self, grading: Grading) -> Self {
        self.grading = Some(grading);
        self
    }
}

/// Delaunay-refined triangulation of `spec` with target edge length `h`.
/// The seed perturbs the boundary sampling and the interior seed points, so
/// different seeds give independent meshes; equal seeds give identical meshes.
pub fn mesh_unstructured(spec: &DomainSpec, h: f64, seed: u64) -> Result<Mesh> {
    mesh_unstructured_with(spec, &UnstructuredOptions::new(h, seed))
}

/// Points where curves with different tags meet.
pub(crate) fn junctions(spec: &DomainSpec) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    for (i, a) in spec.curves.iter().enumerate() {
        for b in spec.curves.iter().skip(i + 1) {
            if a.tag == b.tag {
                continue;
            }
            for p in [a.kind.start(), a.kind.end()] {
                if (p.dist(b.kind.start()) < 1e-12 || p.dist(b.kind.end()) < 1e-12)
                    && !out.iter().any(|q| q.dist(p) < 1e-12)
                {
                    out.push(p);
                }
            }
        }
    }
    out
}

pub fn mesh_unstructured_with(spec: &DomainSpec, opts: &UnstructuredOptions) -> Result<Mesh> {
    let h = opts.h;
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("mesh size h = {h} must be positive")));
    }
    if spec.sheets != 1 {
        return Err(Error::InvalidArgument(
            "unstructured meshing needs a planar domain; lift a base mesh for covers".into(),
        ));
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let jn = junctions(spec);
    let size = |p: Point| -> f64 {
        match opts.grading {
            None => h,
            Some(g) => {
                let d = jn.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min);
                h * (d / g.radius).powf(g.exponent).clamp(g.floor, 1.0)
            }
        }
    };

    let mut samples = Vec::with_capacity(spec.curves.len());
    for c in &spec.curves {
        let len = c.kind.length();
        let mut ts = vec![0.0];
        let mut t = 0.0;
        loop {
            let jitter = rng.random_range(0.8..1.0);
            let here = size(c.kind.point_at(t));
            let ahead = size(c.kind.point_at((t + here / len).min(1.0)));
            let step = jitter * here.min(ahead) / len;
            if t + step >= 1.0 - 0.35 * step {
                break;
            }
            t += step;
            ts.push(t);
        }
        ts.push(1.0);
        samples.push(ts.iter().map(|&s| c.kind.point_at(s)).collect::<Vec<_>>());
    }
    let poly = Polyline::from_samples(&samples);

    // seeded interior points with a local minimum spacing
    let (lo, hi) = poly.bbox();
    let area = (hi.x - lo.x) * (hi.y - lo.y);
    let attempts = (4.0 * area / (h * h)).ceil() as usize;
    let mut interior: Vec<Point> = Vec::new();
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
    let cell = |p: Point| ((p.x / h).floor() as i64, (p.y / h).floor() as i64);
    for _ in 0..attempts {
        let p = Point::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        let r = 0.8 * size(p);
        if !poly.contains(p) || poly.distance(p) < r {
            continue;
        }
        let (cx, cy) = cell(p);
        let crowded = (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                grid.get(&(cx + dx, cy + dy))
                    .is_some_and(|l| l.iter().any(|&q| interior[q].dist(p) < r))
            })
        });
        if crowded {
            continue;
        }
        grid.entry((cx, cy)).or_default().push(interior.len());
        interior.push(p);
    }

    let n_input = poly.points.len() + interior.len();
    let mut cdt = build_cdt(&poly, &interior)?;
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(opts.min_angle_deg))
        .with_max_allowed_area(0.5 * h * h * 3f64.sqrt() / 2.0)
        .exclude_outer_faces(true)
        .with_max_additional_vertices(200 * n_input + 100_000);
    let result = cdt.refine(params);
    let excluded: HashSet<usize> = result.excluded_faces.iter().map(|f| f.index()).collect();

    let mut positions: Vec<Point> = cdt
        .vertices()
        .map(|v| Point::new(v.position().x, v.position().y))
        .collect();
    // vertices inserted on boundary chords are moved onto their curves
    for v in n_input..positions.len() {
        let p = positions[v];
        for &(a, b, c) in &poly.segs {
            let (pa, pb) = (poly.points[a], poly.points[b]);
            if point_segment_distance(p, pa, pb) <= 1e-12 * pa.dist(pb).max(1.0) {
                positions[v] = spec.curves[c].kind.project(p);
                break;
            }
        }
    }

    let mut used = vec![usize::MAX; positions.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut worst: Option<(f64, Point)> = None;
    for f in cdt.inner_faces() {
        if excluded.contains(&f.fix().index()) {
            continue;
        }
        let ids = f.vertices().map(|v| v.fix().index());
        let pts = ids.map(|i| positions[i]);
        for k in 0..3 {
            let u = pts[(k + 1) % 3] - pts[k];
            let w = pts[(k + 2) % 3] - pts[k];
            let ang = u.cross(w).abs().atan2(u.dot(w)).to_degrees();
            if worst.is_none_or(|(a, _)| ang < a) {
                worst = Some((ang, pts[k]));
            }
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            if used[ids[k]] == usize::MAX {
                used[ids[k]] = vertices.len();
                vertices.push(positions[ids[k]]);
            }
            tri[k] = used[ids[k]];
        }
        triangles.push(tri);
    }
    if !result.refinement_complete {
        let (ang, p) = worst.unwrap_or((0.0, Point::ORIGIN));
        return Err(Error::Refinement {
            x: p.x,
            y: p.y,
            reason: format!("refinement ran out of Steiner points (worst angle {ang:.2} deg)"),
        });
    }
    fix_slivers(&vertices, &mut triangles)?;
    finish_mesh(vertices, triangles, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::*;
    use crate::mesh::io::write_mesh;

    #[test]
    fn deterministic_for_seed() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let a = mesh_unstructured(&spec, 0.05, 1).unwrap();
        let b = mesh_unstructured(&spec, 0.05, 1).unwrap();
        assert_eq!(write_mesh(&a), write_mesh(&b));
        let c = mesh_unstructured(&spec, 0.05, 2).unwrap();
        assert_ne!(write_mesh(&a), write_mesh(&c));
    }

    #[test]
    fn arc_endpoints_are_vertices_and_quality() {
        let (spec, _) = build_disk_partition(1.0, 2.0).unwrap();
        let m = mesh_unstructured(&spec, 0.08, 7).unwrap();
        for c in &spec.curves {
            for p in [c.kind.start(), c.kind.end()] {
                assert!(m.vertices.iter().any(|v| v.dist(p) < 1e-14));
            }
        }
        assert!(m.min_angle_deg() >= 20.0, "min angle {}", m.min_angle_deg());
        assert!(m.symmetry_perms.is_empty());
        for v in m.boundary_vertices() {
            assert!((m.vertices[v].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn graded_mesh_is_finer_at_junctions() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let plain = mesh_unstructured(&spec, 0.1, 3).unwrap();
        let graded =
            mesh_unstructured_with(&spec, &UnstructuredOptions::new(0.1, 3).graded(Grading::default()))
                .unwrap();
        assert!(graded.num_triangles() > plain.num_triangles());
        assert!(graded.min_angle_deg() >= 20.0);
    }
}
