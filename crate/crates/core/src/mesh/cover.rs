use super::{boundary_edges_of, mirror_permutation, BoundaryEdge, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{Axis, DomainSpec, Point};
use std::collections::HashMap;
use std::f64::consts::TAU;

/// Lift a planar disk mesh to the two-sheeted cover described by `cover`.
///
/// The base mesh must have edges along the slit ray. Vertices on the ray get
/// two copies, for lifted angles `0` and `2 pi`; the branch point is shared.
/// Upper triangles of sheet `s` use ray copy `s`, lower triangles copy `1 - s`.
///
/// Slit and branch vertices carry sheet label 0. `symmetry_perms` holds the
/// sheet swap `T` and, when the base mesh is mirror symmetric about the slit
/// line, the lifts `U` and `V`, in that order.
pub fn mesh_double_cover(base: &Mesh, cover: &DomainSpec) -> Result<Mesh> {
    base.validate()?;
    if cover.sheets != 2 {
        return Err(Error::Mesh("cover spec must be two-sheeted".into()));
    }
    let slit = cover.slit.ok_or_else(|| Error::Mesh("cover spec has no slit".into()))?;
    let theta = (slit.p1 - slit.p0).arg();
    let u = Point::polar(1.0, theta);
    let local = |p: Point| (u.dot(p), u.cross(p));

    #[derive(Clone, Copy, PartialEq)]
    enum Kind {
        Branch,
        Ray,
        Plain,
    }
    let kinds: Vec<Kind> = base
        .vertices
        .iter()
        .map(|&p| {
            let (x, y) = local(p);
            if p.norm() <= 1e-12 {
                Kind::Branch
            } else if y.abs() <= 1e-12 && x > 0.0 {
                Kind::Ray
            } else {
                Kind::Plain
            }
        })
        .collect();
    if !kinds.contains(&Kind::Branch) {
        return Err(Error::Mesh("base mesh has no vertex at the branch point".into()));
    }
    // copies[v] = [sheet-0 / angle-0 copy, sheet-1 / angle-2pi copy]
    let mut vertices = Vec::new();
    let mut sheet = Vec::new();
    let mut base_of = Vec::new();
    let mut copies = vec![[0usize; 2]; base.vertices.len()];
    for (v, &p) in base.vertices.iter().enumerate() {
        match kinds[v] {
            Kind::Branch => {
                copies[v] = [vertices.len(); 2];
                vertices.push(p);
                sheet.push(0u8);
                base_of.push(v);
            }
            Kind::Ray | Kind::Plain => {
                for s in 0..2 {
                    copies[v][s] = vertices.len();
                    vertices.push(p);
                    sheet.push(if kinds[v] == Kind::Ray { 0 } else { s as u8 });
                    base_of.push(v);
                }
            }
        }
    }
    let mut triangles = Vec::with_capacity(2 * base.triangles.len());
    for s in 0..2 {
        for t in &base.triangles {
            let pts = [base.vertices[t[0]], base.vertices[t[1]], base.vertices[t[2]]];
            let (cx, cy) = local((pts[0] + pts[1] + pts[2]) * (1.0 / 3.0));
            let ys: Vec<f64> = pts.iter().map(|&p| local(p).1).collect();
            if ys.iter().any(|&y| y > 1e-12) && ys.iter().any(|&y| y < -1e-12) && cx > 0.0 {
                return Err(Error::Mesh(format!(
                    "base triangle near ({:.6}, {:.6}) crosses the slit",
                    pts[0].x, pts[0].y
                )));
            }
            let upper = cy > 0.0;
            let tri = t.map(|v| match kinds[v] {
                Kind::Branch => copies[v][0],
                Kind::Ray => copies[v][if upper { s } else { 1 - s }],
                Kind::Plain => copies[v][s],
            });
            triangles.push(tri);
        }
    }
    let base_edge: HashMap<(usize, usize), &BoundaryEdge> = base
        .boundary_edges
        .iter()
        .map(|e| ((e.a.min(e.b), e.a.max(e.b)), e))
        .collect();
    let mut boundary_edges = Vec::new();
    for (a, b) in boundary_edges_of(&triangles) {
        let (ba, bb) = (base_of[a], base_of[b]);
        let e = base_edge.get(&(ba.min(bb), ba.max(bb))).ok_or_else(|| {
            Error::Mesh("cover boundary edge does not project to a base boundary edge".into())
        })?;
        // lifted angle of the edge midpoint must carry the same tag in the cover spec
        let mid = vertices[a].midpoint(vertices[b]);
        let (x, y) = local(mid);
        let rel = y.atan2(x).rem_euclid(TAU);
        let s = if kinds[ba] == Kind::Plain { sheet[a] } else { sheet[b] } as f64;
        let phi = rel + TAU * s;
        if let Some(tag) = cover.cover_tag_at(phi) {
            if tag != e.tag {
                return Err(Error::Mesh(format!(
                    "base tag {:?} disagrees with cover tag {:?} at lifted angle {phi:.6}",
                    e.tag, tag
                )));
            }
        }
        boundary_edges.push(BoundaryEdge { a, b, tag: e.tag, curve: e.curve });
    }

    let n = vertices.len();
    let mut t_perm = vec![0usize; n];
    for (v, c) in copies.iter().enumerate() {
        if kinds[v] == Kind::Branch {
            t_perm[c[0]] = c[0];
        } else {
            t_perm[c[0]] = c[1];
            t_perm[c[1]] = c[0];
        }
    }
    let mut perms = vec![t_perm];
    if let Some(m) = mirror_permutation(base, &Axis::through_origin(theta)) {
        let mut up = vec![0usize; n];
        let mut vp = vec![0usize; n];
        for (v, c) in copies.iter().enumerate() {
            let w = m[v];
            match kinds[v] {
                Kind::Branch => {
                    up[c[0]] = c[0];
                    vp[c[0]] = c[0];
                }
                Kind::Ray => {
                    up[c[0]] = copies[w][0];
                    up[c[1]] = copies[w][1];
                    vp[c[0]] = copies[w][1];
                    vp[c[1]] = copies[w][0];
                }
                Kind::Plain => {
                    up[c[0]] = copies[w][1];
                    up[c[1]] = copies[w][0];
                    vp[c[0]] = copies[w][0];
                    vp[c[1]] = copies[w][1];
                }
            }
        }
        perms.push(up);
        perms.push(vp);
    }
    let mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
        curves: base.curves.clone(),
        sheet_of_vertex: Some(sheet),
        symmetry_perms: perms,
        blocks: None,
    };
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::*;
    use crate::mesh::{mesh_by_reflection, mesh_fundamental, Wedge};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn base_disk(h: f64) -> Mesh {
        let base = build_quarter_arc_disk(0.0);
        let f = mesh_fundamental(&base, &Wedge::new(FRAC_PI_2, PI), h).unwrap();
        let m = mesh_by_reflection(&f, &[Axis::through_origin(FRAC_PI_2), Axis::through_origin(0.0)])
            .unwrap();
        m.retag_from(&base).unwrap()
    }

    #[test]
    fn cover_topology_and_symmetries() {
        let base = base_disk(0.2);
        let spec = build_double_cover(&build_quarter_arc_disk(0.0)).unwrap();
        let c = mesh_double_cover(&base, &spec).unwrap();
        assert_eq!(c.num_triangles(), 2 * base.num_triangles());
        assert_eq!(c.euler_characteristic(), 1);
        assert_eq!(c.symmetry_perms.len(), 3);
        let t = &c.symmetry_perms[0];
        let fixed: Vec<usize> = (0..t.len()).filter(|&i| t[i] == i).collect();
        assert_eq!(fixed.len(), 1);
        assert!(c.vertices[fixed[0]].norm() < 1e-12);
        for p in &c.symmetry_perms {
            assert!((0..p.len()).all(|i| p[p[i]] == i));
        }
    }
}
