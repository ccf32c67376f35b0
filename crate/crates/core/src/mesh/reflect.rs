use std::collections::{HashMap, HashSet};

use super::{boundary_edges_of, edge_key, mirror_permutation, BlockMap, BoundaryEdge, Mesh, PointIndex, MERGE_TOL};
use crate::error::{Error, Result};
use crate::geometry::{Axis, Curve, DomainSpec, Point};

use super::{mesh_fundamental, Wedge};

fn sorted(t: [usize; 3]) -> [usize; 3] {
    let mut s = t;
    s.sort_unstable();
    s
}

fn point_in_triangle(p: Point, t: [Point; 3]) -> bool {
    let tol = 1e-12;
    let d0 = (t[1] - t[0]).cross(p - t[0]);
    let d1 = (t[2] - t[1]).cross(p - t[1]);
    let d2 = (t[0] - t[2]).cross(p - t[2]);
    d0 > tol && d1 > tol && d2 > tol
}

/// Mesh of a four-block domain: the sector `[0, alpha]` is meshed, reflected
/// across the axes at `alpha` and `2 alpha`, and tagged from `spec`. This is
/// the layout the transplantation map expects.
pub fn mesh_four_blocks(spec: &DomainSpec, alpha: f64, h: f64) -> Result<Mesh> {
    let f = mesh_fundamental(spec, &Wedge::new(0.0, alpha), h)?;
    let axes = [Axis::through_origin(alpha), Axis::through_origin(2.0 * alpha)];
    mesh_by_reflection(&f, &axes)?.retag_from(spec)
}

/// Glue reflected copies of `fundamental`: for each axis in order, the current
/// mesh is reflected across it and merged with itself. Vertices closer than
/// 1e-12 are identified and coincident triangles are kept once; copies that
/// overlap partially are rejected.
///
/// Boundary tags are mirrored along with the geometry; retag against the target
/// domain with [`Mesh::retag_from`] when the copies carry different tags.
pub fn mesh_by_reflection(fundamental: &Mesh, axes: &[Axis]) -> Result<Mesh> {
    fundamental.validate()?;
    let mut vertices = fundamental.vertices.clone();
    let mut triangles = fundamental.triangles.clone();
    let mut curves: Vec<Curve> = fundamental.curves.clone();
    let mut edge_curve: HashMap<(usize, usize), usize> = fundamental
        .boundary_edges
        .iter()
        .map(|e| (edge_key(e.a, e.b), e.curve))
        .collect();
    let nb = fundamental.vertices.len();
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    let mut copies: Vec<Vec<usize>> = vec![(0..nb).collect()];

    for (j, axis) in axes.iter().enumerate() {
        let mut index = PointIndex::new();
        for (i, &p) in vertices.iter().enumerate() {
            index.insert(p, i);
        }
        let n = vertices.len();
        let mut map = Vec::with_capacity(n);
        for v in 0..n {
            let q = axis.reflect(vertices[v]);
            let id = match index.find(q, &vertices, MERGE_TOL) {
                Some(i) => i,
                None => {
                    vertices.push(q);
                    index.insert(q, vertices.len() - 1);
                    vertices.len() - 1
                }
            };
            map.push(id);
        }
        let existing: HashSet<[usize; 3]> = triangles.iter().map(|&t| sorted(t)).collect();
        // bucket grid over existing triangles for the overlap test
        let cell = {
            let mut m: f64 = 0.0;
            for t in &triangles {
                for k in 0..3 {
                    m = m.max(vertices[t[k]].dist(vertices[t[(k + 1) % 3]]));
                }
            }
            m.max(1e-9)
        };
        let key = |p: Point| ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
        let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (ti, t) in triangles.iter().enumerate() {
            let c = (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) * (1.0 / 3.0);
            grid.entry(key(c)).or_default().push(ti);
        }
        let old_count = triangles.len();
        for ti in 0..old_count {
            let [a, b, c] = triangles[ti];
            let img = [map[a], map[c], map[b]];
            if existing.contains(&sorted(img)) {
                continue;
            }
            let centroid = (vertices[img[0]] + vertices[img[1]] + vertices[img[2]]) * (1.0 / 3.0);
            let (kx, ky) = key(centroid);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                        for &other in list {
                            let t = triangles[other];
                            if point_in_triangle(centroid, [vertices[t[0]], vertices[t[1]], vertices[t[2]]]) {
                                return Err(Error::Mesh(format!(
                                    "reflected copy across axis {j} overlaps the mesh near ({:.6}, {:.6})",
                                    centroid.x, centroid.y
                                )));
                            }
                        }
                    }
                }
            }
            triangles.push(img);
        }
        let offset = curves.len();
        let reflected: Vec<Curve> = curves
            .iter()
            .map(|c| Curve {
                kind: c.kind.reflect(axis),
                ..c.clone()
            })
            .collect();
        curves.extend(reflected);
        let old_edges: Vec<((usize, usize), usize)> = edge_curve.iter().map(|(&k, &c)| (k, c)).collect();
        for ((a, b), c) in old_edges {
            edge_curve.entry(edge_key(map[a], map[b])).or_insert(offset + c);
        }
        let new_copies: Vec<(Vec<usize>, Vec<usize>)> = words
            .iter()
            .zip(&copies)
            .map(|(w, c)| {
                let mut w2 = w.clone();
                w2.push(j);
                (w2, c.iter().map(|&v| map[v]).collect())
            })
            .collect();
        for (w, c) in new_copies {
            if !copies.contains(&c) {
                words.push(w);
                copies.push(c);
            }
        }
    }

    let edges = boundary_edges_of(&triangles);
    let mut boundary_edges = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        let curve = *edge_curve.get(&edge_key(a, b)).ok_or_else(|| {
            let p = vertices[a];
            Error::Mesh(format!("boundary edge near ({:.6}, {:.6}) has no source curve", p.x, p.y))
        })?;
        boundary_edges.push(BoundaryEdge {
            a,
            b,
            tag: curves[curve].tag,
            curve,
        });
    }
    let mut mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
        curves,
        sheet_of_vertex: None,
        symmetry_perms: Vec::new(),
        blocks: Some(BlockMap {
            axes: axes.to_vec(),
            fundamental: fundamental.triangles.clone(),
            words,
            copies,
        }),
    };
    for axis in axes {
        if let Some(p) = mirror_permutation(&mesh, axis) {
            if !mesh.symmetry_perms.contains(&p) {
                mesh.symmetry_perms.push(p);
            }
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::*;
    use crate::mesh::{mesh_fundamental, Wedge};
    use std::f64::consts::PI;

    #[test]
    fn d24_disk_has_all_boundary_angles() {
        let spec = build_uniform_disk(BoundaryTag::Dirichlet);
        let step = PI / 24.0;
        let f = mesh_fundamental(&spec, &Wedge::new(0.0, step), 0.15).unwrap();
        let axes: Vec<Axis> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&k| Axis::through_origin(k * step))
            .collect();
        let m = mesh_by_reflection(&f, &axes).unwrap();
        assert_eq!(m.num_triangles(), 48 * f.num_triangles());
        assert_eq!(m.blocks.as_ref().unwrap().copies.len(), 48);
        for k in 0..48 {
            let p = Point::polar(1.0, k as f64 * step);
            assert!(m.vertices.iter().any(|v| v.dist(p) < 1e-12), "missing boundary vertex {k}");
        }
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn overlapping_copy_rejected() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let f = mesh_fundamental(&spec, &Wedge::new(PI / 2.0, PI), 0.2).unwrap();
        // axis at 2pi/3 folds the quarter onto a partly overlapping region
        assert!(mesh_by_reflection(&f, &[Axis::through_origin(2.0 * PI / 3.0)]).is_err());
    }
}
