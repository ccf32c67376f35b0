//! Conforming triangulations of the tagged domains.
//!
//! Symmetric meshes come from [`mesh_fundamental`] followed by
//! [`mesh_by_reflection`]; independent meshes from [`mesh_unstructured`].

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Axis, BoundaryTag, Curve, DomainSpec, Point};

mod cover;
mod fundamental;
pub mod io;
mod reflect;
mod unstructured;

pub use cover::mesh_double_cover;
pub use fundamental::{mesh_fundamental, restrict_to_wedge, Wedge};
pub use reflect::{mesh_by_reflection, mesh_four_blocks};
pub use unstructured::{mesh_unstructured, mesh_unstructured_with, UnstructuredOptions};

/// Absolute tolerance for merging coincident vertices.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
    /// Index into [`Mesh::curves`] of the curve this edge discretizes.
    pub curve: usize,
}

/// How the reflected copies of a fundamental block sit inside a symmetric mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockMap {
    pub axes: Vec<Axis>,
    /// Triangles of the fundamental block in block vertex numbering.
    pub fundamental: Vec<[usize; 3]>,
    /// Reflection word of each copy: axis indices in the order applied.
    pub words: Vec<Vec<usize>>,
    /// `copies[k][i]` is the mesh vertex of block vertex `i` in copy `k`.
    pub copies: Vec<Vec<usize>>,
}

impl BlockMap {
    pub fn block_vertex_count(&self) -> usize {
        self.copies.first().map_or(0, Vec::len)
    }

    pub fn copy_for_word(&self, word: &[usize]) -> Option<&[usize]> {
        self.words
            .iter()
            .position(|w| w == word)
            .map(|k| self.copies[k].as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub curves: Vec<Curve>,
    pub sheet_of_vertex: Option<Vec<u8>>,
    pub symmetry_perms: Vec<Vec<usize>>,
    pub blocks: Option<BlockMap>,
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * (b - a).cross(c - a)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                signed_area(a, b, c)
            })
            .sum()
    }

    /// Map from undirected edge to the triangles containing it.
    pub fn edge_triangles(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut map: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    pub fn num_edges(&self) -> usize {
        self.edge_triangles().len()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edge_triangles()
            .keys()
            .map(|&(a, b)| self.vertices[a].dist(self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Smallest interior angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let ang = u.cross(v).abs().atan2(u.dot(v));
                min = min.min(ang.to_degrees());
            }
        }
        min
    }

    /// Vertices on a boundary edge with the given tag.
    pub fn vertices_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| e.tag == tag)
            .flat_map(|e| [e.a, e.b])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Dirichlet vertices: every vertex touching a Dirichlet edge, junctions included.
    pub fn dirichlet_vertices(&self) -> Vec<usize> {
        self.vertices_with_tag(BoundaryTag::Dirichlet)
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.boundary_edges.iter().flat_map(|e| [e.a, e.b]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Vertices on edges of curves carrying `label`.
    pub fn vertices_with_label(&self, label: &str) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|e| self.curves[e.curve].label.as_deref() == Some(label))
            .flat_map(|e| [e.a, e.b])
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Same triangulation with every boundary tag exchanged.
    pub fn with_swapped_tags(&self) -> Mesh {
        let mut m = self.clone();
        for e in &mut m.boundary_edges {
            e.tag = e.tag.swapped();
        }
        for c in &mut m.curves {
            c.tag = c.tag.swapped();
        }
        m
    }

    /// Retag boundary edges from the curves of `spec`, matching each edge to the
    /// closest curve containing both its endpoints.
    pub fn retag_from(&self, spec: &DomainSpec) -> Result<Mesh> {
        let mut m = self.clone();
        m.curves = spec.curves.clone();
        let edges: Vec<(usize, usize)> = self.boundary_edges.iter().map(|e| (e.a, e.b)).collect();
        m.boundary_edges = assign_boundary_edges(&m.vertices, &edges, &m.curves)?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::Mesh(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = self.triangle_points(t);
            let area = signed_area(a, b, c);
            if !(area > 0.0) {
                return Err(Error::Mesh(format!(
                    "triangle {t} has non-positive signed area {area:e} near ({:.6}, {:.6})",
                    a.x, a.y
                )));
            }
        }
        let et = self.edge_triangles();
        let mut boundary_set: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (&e, ts) in &et {
            match ts.len() {
                1 => {
                    boundary_set.insert(e, 0);
                }
                2 => {}
                k => {
                    let p = self.vertices[e.0];
                    return Err(Error::Mesh(format!(
                        "edge ({}, {}) near ({:.6}, {:.6}) belongs to {k} triangles",
                        e.0, e.1, p.x, p.y
                    )));
                }
            }
        }
        for be in &self.boundary_edges {
            if be.curve >= self.curves.len() {
                return Err(Error::Mesh("boundary edge refers to a missing curve".into()));
            }
            match boundary_set.get_mut(&edge_key(be.a, be.b)) {
                Some(count) => *count += 1,
                None => {
                    return Err(Error::Mesh(format!(
                        "tagged edge ({}, {}) is not on the boundary",
                        be.a, be.b
                    )))
                }
            }
        }
        if let Some((e, _)) = boundary_set.iter().find(|(_, &c)| c != 1) {
            return Err(Error::Mesh(format!(
                "boundary edge ({}, {}) is untagged or tagged twice",
                e.0, e.1
            )));
        }
        if let Some(s) = &self.sheet_of_vertex {
            if s.len() != n {
                return Err(Error::Mesh("sheet table length mismatch".into()));
            }
        }
        for (k, perm) in self.symmetry_perms.iter().enumerate() {
            self.check_permutation(perm)
                .map_err(|e| Error::Mesh(format!("symmetry permutation {k}: {e}")))?;
        }
        if let Some(b) = &self.blocks {
            let nb = b.block_vertex_count();
            if b.copies.iter().any(|c| c.len() != nb || c.iter().any(|&v| v >= n)) {
                return Err(Error::Mesh("block map is inconsistent".into()));
            }
        }
        Ok(())
    }

    fn check_permutation(&self, perm: &[usize]) -> std::result::Result<(), String> {
        let n = self.vertices.len();
        if perm.len() != n {
            return Err("wrong length".into());
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err("not a bijection".into());
            }
            seen[p] = true;
        }
        let tris: std::collections::HashSet<[usize; 3]> = self
            .triangles
            .iter()
            .map(|t| {
                let mut s = *t;
                s.sort_unstable();
                s
            })
            .collect();
        for t in &self.triangles {
            let mut img = [perm[t[0]], perm[t[1]], perm[t[2]]];
            img.sort_unstable();
            if !tris.contains(&img) {
                return Err("does not map triangles to triangles".into());
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let l0 = self.vertices[a].dist(self.vertices[b]);
                let l1 = self.vertices[perm[a]].dist(self.vertices[perm[b]]);
                if (l0 - l1).abs() > 1e-12 {
                    return Err(format!("changes an edge length by {:e}", (l0 - l1).abs()));
                }
            }
        }
        Ok(())
    }

    /// Euler characteristic `V - E + F` counting triangles only.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.num_edges() as i64 + self.triangles.len() as i64
    }
}

/// Spatial hash for merging coincident points.
pub(crate) struct PointIndex {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
}

impl PointIndex {
    pub(crate) fn new() -> Self {
        PointIndex {
            cell: 1e-8,
            map: HashMap::new(),
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub(crate) fn insert(&mut self, p: Point, idx: usize) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(idx);
    }

    pub(crate) fn find(&self, p: Point, points: &[Point], tol: f64) -> Option<usize> {
        let (kx, ky) = self.key(p);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.map.get(&(kx + dx, ky + dy)) {
                    for &i in list {
                        let d = points[i].dist(p);
                        if d <= tol && best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((i, d));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Vertex permutation realizing the reflection across `axis`, if the mesh is
/// invariant under it.
pub fn mirror_permutation(mesh: &Mesh, axis: &Axis) -> Option<Vec<usize>> {
    let mut index = PointIndex::new();
    for (i, &p) in mesh.vertices.iter().enumerate() {
        index.insert(p, i);
    }
    let perm: Option<Vec<usize>> = mesh
        .vertices
        .iter()
        .map(|&p| index.find(axis.reflect(p), &mesh.vertices, 1e-10))
        .collect();
    let perm = perm?;
    mesh.check_permutation(&perm).ok()?;
    Some(perm)
}

/// Tag boundary edges by matching them to curves: both endpoints must lie on the
/// curve, and among candidates the curve closest to the edge midpoint wins.
pub(crate) fn assign_boundary_edges(
    vertices: &[Point],
    edges: &[(usize, usize)],
    curves: &[Curve],
) -> Result<Vec<BoundaryEdge>> {
    let mut out = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        let (pa, pb) = (vertices[a], vertices[b]);
        let mid = pa.midpoint(pb);
        let scale = pa.dist(pb);
        let best = curves
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind.distance(pa) <= 1e-9 && c.kind.distance(pb) <= 1e-9)
            .map(|(i, c)| (i, c.kind.distance(mid)))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        match best {
            Some((i, d)) if d <= 0.25 * scale + 1e-12 => out.push(BoundaryEdge {
                a,
                b,
                tag: curves[i].tag,
                curve: i,
            }),
            _ => {
                return Err(Error::Mesh(format!(
                    "boundary edge near ({:.6}, {:.6}) matches no boundary curve",
                    mid.x, mid.y
                )))
            }
        }
    }
    Ok(out)
}

/// Boundary edges of a triangle list, oriented as in their triangle.
pub(crate) fn boundary_edges_of(triangles: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut count: BTreeMap<(usize, usize), (usize, (usize, usize))> = BTreeMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let e = count.entry(edge_key(a, b)).or_insert((0, (a, b)));
            e.0 += 1;
        }
    }
    count
        .into_values()
        .filter(|(c, _)| *c == 1)
        .map(|(_, e)| e)
        .collect()
}

/// Split every triangle into four through its edge midpoints. Boundary midpoints
/// are projected onto their curve; symmetry permutations and block maps are
/// extended to the midpoints.
pub fn refine_uniform(m: &Mesh) -> Mesh {
    let mut vertices = m.vertices.clone();
    let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let boundary_curve: HashMap<(usize, usize), usize> = m
        .boundary_edges
        .iter()
        .map(|e| (edge_key(e.a, e.b), e.curve))
        .collect();
    let mut sheet = m.sheet_of_vertex.clone();
    for tri in &m.triangles {
        for k in 0..3 {
            let key = edge_key(tri[k], tri[(k + 1) % 3]);
            if mid.contains_key(&key) {
                continue;
            }
            let mut p = m.vertices[key.0].midpoint(m.vertices[key.1]);
            if let Some(&c) = boundary_curve.get(&key) {
                p = m.curves[c].kind.project(p);
            }
            mid.insert(key, vertices.len());
            vertices.push(p);
            if let Some(s) = sheet.as_mut() {
                // slit and branch vertices carry sheet 0, so the max picks the
                // sheet of the endpoint inside a sheet
                let (sa, sb) = (s[key.0], s[key.1]);
                s.push(sa.max(sb));
            }
        }
    }
    let mid_of = |a: usize, b: usize| mid[&edge_key(a, b)];
    let mut triangles = Vec::with_capacity(4 * m.triangles.len());
    for &[a, b, c] in &m.triangles {
        let (ab, bc, ca) = (mid_of(a, b), mid_of(b, c), mid_of(c, a));
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * m.boundary_edges.len());
    for e in &m.boundary_edges {
        let mm = mid_of(e.a, e.b);
        boundary_edges.push(BoundaryEdge { a: e.a, b: mm, ..*e });
        boundary_edges.push(BoundaryEdge { a: mm, b: e.b, ..*e });
    }
    let symmetry_perms = m
        .symmetry_perms
        .iter()
        .map(|perm| {
            let mut p = perm.clone();
            p.resize(vertices.len(), usize::MAX);
            for (&(a, b), &v) in &mid {
                p[v] = mid_of(perm[a], perm[b]);
            }
            p
        })
        .collect();
    let blocks = m.blocks.as_ref().map(|b| {
        let nb = b.block_vertex_count();
        let mut bmid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &b.fundamental {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                let next = nb + bmid.len();
                bmid.entry(key).or_insert(next);
            }
        }
        let bmid_of = |a: usize, c: usize| bmid[&edge_key(a, c)];
        let mut fundamental = Vec::with_capacity(4 * b.fundamental.len());
        for &[a, bb, c] in &b.fundamental {
            let (ab, bc, ca) = (bmid_of(a, bb), bmid_of(bb, c), bmid_of(c, a));
            fundamental.extend_from_slice(&[[a, ab, ca], [ab, bb, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        let copies = b
            .copies
            .iter()
            .map(|copy| {
                let mut out = copy.clone();
                out.resize(nb + bmid.len(), 0);
                for (&(i, j), &v) in &bmid {
                    out[v] = mid_of(copy[i], copy[j]);
                }
                out
            })
            .collect();
        BlockMap {
            axes: b.axes.clone(),
            fundamental,
            words: b.words.clone(),
            copies,
        }
    });
    Mesh {
        vertices,
        triangles,
        boundary_edges,
        curves: m.curves.clone(),
        sheet_of_vertex: sheet,
        symmetry_perms,
        blocks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn quarter(h: f64) -> Mesh {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        mesh_fundamental(&spec, &Wedge::new(FRAC_PI_2, PI), h).unwrap()
    }

    #[test]
    fn quarter_disk_vertices_on_circle() {
        let m = quarter(0.1);
        m.validate().unwrap();
        for p in &m.vertices {
            if p.norm() > 1.0 - 1e-12 {
                assert!((p.norm() - 1.0).abs() < 1e-15);
            }
        }
        assert!(m.max_edge_length() <= 0.1 + 1e-12);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn quarter_disk_refinement_scaling() {
        let a = quarter(0.1).num_triangles() as f64;
        let b = quarter(0.05).num_triangles() as f64;
        let r = b / a;
        assert!((3.5..=4.5).contains(&r), "ratio {r}");
    }

    #[test]
    fn half_disk_by_reflection_is_symmetric() {
        let m = mesh_by_reflection(&quarter(0.1), &[Axis::through_origin(FRAC_PI_2)]).unwrap();
        m.validate().unwrap();
        assert_eq!(m.symmetry_perms.len(), 1);
        let p = &m.symmetry_perms[0];
        assert!((0..p.len()).all(|i| p[p[i]] == i));
        assert!((m.area() - 0.5 * PI).abs() < 0.02);
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn sectorial_mesh_has_four_copies() {
        let block = SectorialBlock::triangle();
        let spec = build_sectorial_domain(&block, false).unwrap();
        let f = mesh_fundamental(&spec, &Wedge::new(0.0, block.alpha), 0.1).unwrap();
        let m = mesh_by_reflection(
            &f,
            &[Axis::through_origin(block.alpha), Axis::through_origin(2.0 * block.alpha)],
        )
        .unwrap()
        .retag_from(&spec)
        .unwrap();
        m.validate().unwrap();
        assert_eq!(m.num_triangles(), 4 * f.num_triangles());
        let b = m.blocks.as_ref().unwrap();
        assert_eq!(b.copies.len(), 4);
        assert!((m.area() - 1.0).abs() < 1e-12);
        // labels survive
        assert!(!m.vertices_with_label("gamma_1_2").is_empty());
        assert!(!m.vertices_with_label("gamma_4_2").is_empty());
    }

    #[test]
    fn uniform_refinement_counts_and_symmetry() {
        let m = mesh_by_reflection(&quarter(0.2), &[Axis::through_origin(FRAC_PI_2)]).unwrap();
        let r = refine_uniform(&m);
        r.validate().unwrap();
        assert_eq!(r.num_triangles(), 4 * m.num_triangles());
        assert_eq!(r.boundary_edges.len(), 2 * m.boundary_edges.len());
        let geo = mirror_permutation(&r, &Axis::through_origin(FRAC_PI_2)).unwrap();
        assert_eq!(geo, r.symmetry_perms[0]);
        for e in &r.boundary_edges {
            for v in [e.a, e.b] {
                let p = r.vertices[v];
                if p.y > 1e-9 {
                    assert!((p.norm() - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn swapped_tags_exchange_dirichlet_sets() {
        let m = mesh_by_reflection(&quarter(0.2), &[Axis::through_origin(FRAC_PI_2)]).unwrap();
        let s = m.with_swapped_tags();
        assert_eq!(m.vertices_with_tag(BoundaryTag::Dirichlet), s.vertices_with_tag(BoundaryTag::Neumann));
    }
}
