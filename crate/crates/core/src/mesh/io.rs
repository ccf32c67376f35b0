//! Plain-text mesh format and legacy ASCII VTK export.
//!
//! ```text
//! zaremba-mesh 1
//! vertices <n>
//! <x> <y>
//! triangles <t>
//! <a> <b> <c>
//! curves <m>
//! <curve as one-line JSON>
//! boundary_edges <e>
//! <a> <b> <D|N> <curve>
//! sheets <n>            (optional)
//! <sheet>
//! perms <k> <n>         (optional)
//! <v0> <v1> ...         (one line per permutation)
//! blocks <json>         (optional, one line)
//! end
//! ```

use std::fmt::Write as _;

use super::{BlockMap, BoundaryEdge, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Curve, Point};

pub fn write_mesh(m: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "zaremba-mesh 1");
    let _ = writeln!(s, "vertices {}", m.vertices.len());
    for p in &m.vertices {
        let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
    }
    let _ = writeln!(s, "triangles {}", m.triangles.len());
    for t in &m.triangles {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "curves {}", m.curves.len());
    for c in &m.curves {
        let _ = writeln!(s, "{}", serde_json::to_string(c).expect("curve serializes"));
    }
    let _ = writeln!(s, "boundary_edges {}", m.boundary_edges.len());
    for e in &m.boundary_edges {
        let _ = writeln!(s, "{} {} {} {}", e.a, e.b, e.tag.short(), e.curve);
    }
    if let Some(sheets) = &m.sheet_of_vertex {
        let _ = writeln!(s, "sheets {}", sheets.len());
        for v in sheets {
            let _ = writeln!(s, "{v}");
        }
    }
    if !m.symmetry_perms.is_empty() {
        let _ = writeln!(s, "perms {} {}", m.symmetry_perms.len(), m.vertices.len());
        for p in &m.symmetry_perms {
            let line: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
    }
    if let Some(b) = &m.blocks {
        let _ = writeln!(s, "blocks {}", serde_json::to_string(b).expect("block map serializes"));
    }
    let _ = writeln!(s, "end");
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() && !l.starts_with('#') {
                return Ok((i + 1, l));
            }
        }
        Err(Error::Parse("unexpected end of mesh file".into()))
    }

    fn header(&mut self, name: &str) -> Result<usize> {
        let (ln, l) = self.next()?;
        let mut it = l.split_whitespace();
        if it.next() != Some(name) {
            return Err(Error::Parse(format!("line {ln}: expected section '{name}'")));
        }
        parse_num(it.next(), ln)
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, ln: usize) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("line {ln}: missing field")))?
        .parse()
        .map_err(|_| Error::Parse(format!("line {ln}: bad number")))
}

pub fn read_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (ln, first) = lines.next()?;
    if first != "zaremba-mesh 1" {
        return Err(Error::Parse(format!("line {ln}: not a zaremba mesh file")));
    }
    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next()?;
        let mut it = l.split_whitespace();
        vertices.push(Point::new(parse_num(it.next(), ln)?, parse_num(it.next(), ln)?));
    }
    let nt = lines.header("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next()?;
        let mut it = l.split_whitespace();
        triangles.push([
            parse_num(it.next(), ln)?,
            parse_num(it.next(), ln)?,
            parse_num(it.next(), ln)?,
        ]);
    }
    let nc = lines.header("curves")?;
    let mut curves: Vec<Curve> = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (ln, l) = lines.next()?;
        curves.push(
            serde_json::from_str(l).map_err(|e| Error::Parse(format!("line {ln}: curve: {e}")))?,
        );
    }
    let ne = lines.header("boundary_edges")?;
    let mut boundary_edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, l) = lines.next()?;
        let mut it = l.split_whitespace();
        let a = parse_num(it.next(), ln)?;
        let b = parse_num(it.next(), ln)?;
        let tag = match it.next() {
            Some("D") => BoundaryTag::Dirichlet,
            Some("N") => BoundaryTag::Neumann,
            _ => return Err(Error::Parse(format!("line {ln}: tag must be D or N"))),
        };
        let curve = parse_num(it.next(), ln)?;
        boundary_edges.push(BoundaryEdge { a, b, tag, curve });
    }
    let mut mesh = Mesh {
        vertices,
        triangles,
        boundary_edges,
        curves,
        sheet_of_vertex: None,
        symmetry_perms: Vec::new(),
        blocks: None,
    };
    loop {
        let (ln, l) = lines.next()?;
        let mut it = l.split_whitespace();
        match it.next() {
            Some("end") => break,
            Some("sheets") => {
                let n: usize = parse_num(it.next(), ln)?;
                let mut s = Vec::with_capacity(n);
                for _ in 0..n {
                    let (ln, l) = lines.next()?;
                    s.push(parse_num(Some(l), ln)?);
                }
                mesh.sheet_of_vertex = Some(s);
            }
            Some("perms") => {
                let k: usize = parse_num(it.next(), ln)?;
                let n: usize = parse_num(it.next(), ln)?;
                for _ in 0..k {
                    let (ln, l) = lines.next()?;
                    let p = l
                        .split_whitespace()
                        .map(|t| parse_num(Some(t), ln))
                        .collect::<Result<Vec<usize>>>()?;
                    if p.len() != n {
                        return Err(Error::Parse(format!("line {ln}: permutation length")));
                    }
                    mesh.symmetry_perms.push(p);
                }
            }
            Some("blocks") => {
                let json = l["blocks".len()..].trim();
                let b: BlockMap = serde_json::from_str(json)
                    .map_err(|e| Error::Parse(format!("line {ln}: blocks: {e}")))?;
                mesh.blocks = Some(b);
            }
            _ => return Err(Error::Parse(format!("line {ln}: unknown section"))),
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

/// Legacy ASCII VTK unstructured grid with optional per-vertex scalar fields.
pub fn write_vtk(m: &Mesh, fields: &[(&str, &[f64])]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "zaremba mesh");
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {} double", m.vertices.len());
    for p in &m.vertices {
        let _ = writeln!(s, "{:?} {:?} 0", p.x, p.y);
    }
    let _ = writeln!(s, "CELLS {} {}", m.triangles.len(), 4 * m.triangles.len());
    for t in &m.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", m.triangles.len());
    for _ in &m.triangles {
        let _ = writeln!(s, "5");
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", m.vertices.len());
        for (name, values) in fields {
            let _ = writeln!(s, "SCALARS {name} double 1");
            let _ = writeln!(s, "LOOKUP_TABLE default");
            for v in values.iter() {
                let _ = writeln!(s, "{v:?}");
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::*;
    use crate::mesh::{mesh_by_reflection, mesh_fundamental, Wedge};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn round_trip() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let f = mesh_fundamental(&spec, &Wedge::new(FRAC_PI_2, PI), 0.2).unwrap();
        let m = mesh_by_reflection(&f, &[Axis::through_origin(FRAC_PI_2)])
            .unwrap()
            .retag_from(&spec)
            .unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_mesh(&back), text);
    }

    #[test]
    fn vtk_has_sections() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let m = mesh_fundamental(&spec, &Wedge::new(FRAC_PI_2, PI), 0.3).unwrap();
        let u = vec![1.0; m.num_vertices()];
        let v = write_vtk(&m, &[("u", &u)]);
        assert!(v.contains("CELL_TYPES"));
        assert!(v.contains("SCALARS u double 1"));
    }

    #[test]
    fn bad_input_rejected() {
        assert!(read_mesh("hello").is_err());
        assert!(read_mesh("zaremba-mesh 1\nvertices 1\n0 x\n").is_err());
    }
}
