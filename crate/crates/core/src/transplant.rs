//! Transplantation between the two Zaremba problems on a four-block
//! reflection mesh.
//!
//! The mesh is four reflected copies of a fundamental sector: copy 1 is the
//! block itself, copy 2 its mirror in the first axis, copy 3 the mirror of copy
//! 2 in the second axis and copy 4 the mirror of copy 1 in the second axis.
//! Writing `u_c` for the restriction of a field to copy `c`, pulled back to the
//! block, the forward map is
//!
//! ```text
//! v1 = (u2 - u3)/√2   v2 = (u1 - u4)/√2   v3 = (u1 + u4)/√2   v4 = (u2 + u3)/√2
//! ```
//!
//! and the inverse is its transpose.

use serde::Serialize;

use crate::assembly::MatrixPair;
use crate::eigensolve::EigenBasis;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::sparse::{norm2, CsrMatrix};

const WORDS: [&[usize]; 4] = [&[], &[0], &[0, 1], &[1]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

pub fn forward_block() -> [[f64; 4]; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [0.0, s, -s, 0.0],
        [s, 0.0, 0.0, -s],
        [s, 0.0, 0.0, s],
        [0.0, s, s, 0.0],
    ]
}

fn transpose4(a: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = a[j][i];
        }
    }
    t
}

fn mul4(a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn identity_defect(a: &[[f64; 4]; 4]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            worst = worst.max((v - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

type Row = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct TransplantMap {
    pub direction: Direction,
    /// `v_c = Σ_d block[c][d] u_d`
    pub block: [[f64; 4]; 4],
    n: usize,
    /// Formula used for each mesh vertex.
    rows: Vec<Row>,
    /// Other formulas for vertices shared by several copies; on admissible
    /// fields they must agree with `rows`.
    alternates: Vec<(usize, Row)>,
}

fn build_rows(copies: &[&[usize]; 4], block: &[[f64; 4]; 4], n: usize) -> (Vec<Row>, Vec<(usize, Row)>) {
    let mut rows: Vec<Option<Row>> = vec![None; n];
    let mut alternates = Vec::new();
    let nb = copies[0].len();
    for (c, bc) in block.iter().enumerate() {
        for i in 0..nb {
            let target = copies[c][i];
            let mut row: Row = Vec::with_capacity(2);
            for (d, &w) in bc.iter().enumerate() {
                if w != 0.0 {
                    let src = copies[d][i];
                    match row.iter_mut().find(|e| e.0 == src) {
                        Some(e) => e.1 += w,
                        None => row.push((src, w)),
                    }
                }
            }
            row.retain(|e| e.1 != 0.0);
            match &rows[target] {
                None => rows[target] = Some(row),
                Some(first) if *first != row => alternates.push((target, row)),
                Some(_) => {}
            }
        }
    }
    (rows.into_iter().map(Option::unwrap_or_default).collect(), alternates)
}

/// Forward map on a four-block reflection mesh (half-disk or sectorial).
pub fn build_transplant(mesh: &Mesh) -> Result<TransplantMap> {
    let blocks = mesh
        .blocks
        .as_ref()
        .ok_or_else(|| Error::Mesh("transplantation needs a reflection mesh with block copies".into()))?;
    if blocks.axes.len() != 2 || blocks.copies.len() != 4 {
        return Err(Error::Mesh(format!(
            "transplantation needs four copies from two axes, found {} copies from {} axes",
            blocks.copies.len(),
            blocks.axes.len()
        )));
    }
    let mut copies: [&[usize]; 4] = [&[]; 4];
    for (c, w) in WORDS.iter().enumerate() {
        copies[c] = blocks
            .copy_for_word(w)
            .ok_or_else(|| Error::Mesh(format!("reflection mesh lacks the copy with word {w:?}")))?;
    }
    let block = forward_block();
    let n = mesh.num_vertices();
    let mut covered = vec![false; n];
    for c in &copies {
        for &v in c.iter() {
            covered[v] = true;
        }
    }
    if let Some(v) = covered.iter().position(|&c| !c) {
        return Err(Error::Mesh(format!("vertex {v} is not covered by the block copies")));
    }
    let (rows, alternates) = build_rows(&copies, &block, n);
    Ok(TransplantMap {
        direction: Direction::Forward,
        block,
        n,
        rows,
        alternates,
    })
}

impl TransplantMap {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// The map in the other direction (transposed block matrix).
    pub fn inverse(&self, mesh: &Mesh) -> Result<TransplantMap> {
        let blocks = mesh
            .blocks
            .as_ref()
            .ok_or_else(|| Error::Mesh("mesh has no block copies".into()))?;
        let mut copies: [&[usize]; 4] = [&[]; 4];
        for (c, w) in WORDS.iter().enumerate() {
            copies[c] = blocks
                .copy_for_word(w)
                .ok_or_else(|| Error::Mesh(format!("reflection mesh lacks the copy with word {w:?}")))?;
        }
        let block = transpose4(&self.block);
        let (rows, alternates) = build_rows(&copies, &block, self.n);
        Ok(TransplantMap {
            direction: match self.direction {
                Direction::Forward => Direction::Inverse,
                Direction::Inverse => Direction::Forward,
            },
            block,
            n: self.n,
            rows,
            alternates,
        })
    }

    /// Apply to a field over all mesh vertices.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(s, w)| w * u[s]).sum())
            .collect()
    }

    /// Largest disagreement between the formulas of shared vertices. Zero on
    /// fields satisfying the source problem's Dirichlet conditions.
    pub fn branch_defect(&self, u: &[f64]) -> f64 {
        let v = self.apply(u);
        self.alternates
            .iter()
            .map(|(t, r)| (r.iter().map(|&(s, w)| w * u[s]).sum::<f64>() - v[*t]).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_csr(&self) -> CsrMatrix {
        let mut t = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, w) in r {
                t.push((i, j, w));
            }
        }
        CsrMatrix::from_triplets(self.n, self.n, &t)
    }

    /// `max |BᵀB - I|` for the 4×4 block matrix.
    pub fn orthogonality_defect(&self) -> f64 {
        identity_defect(&mul4(&transpose4(&self.block), &self.block))
    }

    /// `max |B⁸ - I|` for the 4×4 block matrix.
    pub fn eighth_power_defect(&self) -> f64 {
        let b2 = mul4(&self.block, &self.block);
        let b4 = mul4(&b2, &b2);
        identity_defect(&mul4(&b4, &b4))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeCheck {
    pub mode: usize,
    pub lambda: f64,
    pub residual: f64,
    pub norm_defect: f64,
    pub constraint_defect: f64,
    pub branch_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransplantReport {
    pub direction: Direction,
    pub tol: f64,
    pub modes: Vec<ModeCheck>,
    pub failing_mode: Option<usize>,
    pub reason: Option<String>,
}

impl TransplantReport {
    pub fn passed(&self) -> bool {
        self.failing_mode.is_none()
    }

    pub fn max_residual(&self) -> f64 {
        self.modes.iter().map(|m| m.residual).fold(0.0, f64::max)
    }

    pub fn into_result(self) -> Result<Self> {
        match (self.failing_mode, &self.reason) {
            (Some(mode), Some(reason)) => Err(Error::Transplant {
                mode,
                reason: reason.clone(),
            }),
            _ => Ok(self),
        }
    }
}

/// Push each eigenvector of the source problem through `map` and check it is an
/// eigenvector of the target problem with the same eigenvalue. `tol` bounds the
/// relative residual `‖K v - λ M v‖ / ‖M v‖`; the Dirichlet and norm checks use
/// 1e-12 relative to the vector scale.
pub fn verify_transplantation(
    source: &MatrixPair,
    target: &MatrixPair,
    basis: &EigenBasis,
    map: &TransplantMap,
    tol: f64,
) -> Result<TransplantReport> {
    if source.num_vertices != map.dim() || target.num_vertices != map.dim() {
        return Err(Error::InvalidArgument(
            "problems and map must live on the same mesh".into(),
        ));
    }
    let mut report = TransplantReport {
        direction: map.direction,
        tol,
        modes: Vec::with_capacity(basis.vectors.len()),
        failing_mode: None,
        reason: None,
    };
    for (mode, u) in basis.vectors.iter().enumerate() {
        let ku = source.stiffness.mul_vec(u);
        let mu = source.mass.mul_vec(u);
        let unorm2: f64 = u.iter().zip(&mu).map(|(a, b)| a * b).sum();
        let lambda = u.iter().zip(&ku).map(|(a, b)| a * b).sum::<f64>() / unorm2;
        let full_u = source.expand(u);
        let full_v = map.apply(&full_u);
        let scale = full_u.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
        let constraint_defect = target
            .constrained
            .iter()
            .map(|&c| full_v[c].abs())
            .fold(0.0, f64::max)
            / scale;
        let branch_defect = map.branch_defect(&full_u) / scale;
        let v = target.restrict(&full_v);
        let kv = target.stiffness.mul_vec(&v);
        let mv = target.mass.mul_vec(&v);
        let r: Vec<f64> = kv.iter().zip(&mv).map(|(a, b)| a - lambda * b).collect();
        let residual = norm2(&r) / norm2(&mv).max(f64::MIN_POSITIVE);
        let vnorm2: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let norm_defect = (vnorm2.sqrt() - unorm2.sqrt()).abs() / unorm2.sqrt();
        let check = ModeCheck {
            mode,
            lambda,
            residual,
            norm_defect,
            constraint_defect,
            branch_defect,
        };
        if report.failing_mode.is_none() {
            let why = if !(residual <= tol * lambda.abs().max(1.0)) {
                Some(format!("residual {residual:e} at lambda = {lambda}"))
            } else if constraint_defect > 1e-12 {
                Some(format!("Dirichlet values reach {constraint_defect:e}"))
            } else if branch_defect > 1e-12 {
                Some(format!("branches disagree on the symmetry line by {branch_defect:e}"))
            } else if norm_defect > 1e-10 {
                Some(format!("mass norm changes by {norm_defect:e}"))
            } else {
                None
            };
            if let Some(w) = why {
                report.failing_mode = Some(mode);
                report.reason = Some(w);
            }
        }
        report.modes.push(check);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::eigensolve::{cluster_multiplicities, solve_lowest, DEFAULT_TOL};
    use crate::geometry::*;
    use crate::mesh::mesh_four_blocks;
    use std::f64::consts::FRAC_PI_4;

    fn block_mesh(spec: &DomainSpec, alpha: f64, h: f64) -> Mesh {
        mesh_four_blocks(spec, alpha, h).unwrap()
    }

    #[test]
    fn block_matrix_identities() {
        let b = forward_block();
        let t = TransplantMap {
            direction: Direction::Forward,
            block: b,
            n: 0,
            rows: vec![],
            alternates: vec![],
        };
        assert!(t.orthogonality_defect() < 1e-15);
        assert!(t.eighth_power_defect() < 1e-14);
        // not of smaller order
        let b4 = mul4(&mul4(&b, &b), &mul4(&b, &b));
        assert!(identity_defect(&b4) > 0.5);
    }

    #[test]
    fn round_trip_and_linearity() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let m = block_mesh(&spec, FRAC_PI_4, 0.1);
        let t = build_transplant(&m).unwrap();
        let ti = t.inverse(&m).unwrap();
        assert_eq!(ti.direction, Direction::Inverse);
        let zero = vec![0.0; m.num_vertices()];
        assert!(t.apply(&zero).iter().all(|&x| x == 0.0));
        // admissible field for problem I: vanishes on its Dirichlet set
        let dir = m.dirichlet_vertices();
        let u: Vec<f64> = (0..m.num_vertices())
            .map(|v| if dir.binary_search(&v).is_ok() { 0.0 } else { (v as f64 * 0.37).sin() })
            .collect();
        assert!(t.branch_defect(&u) < 1e-15);
        let back = ti.apply(&t.apply(&u));
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        // at most two entries of size 1/sqrt(2), merged to sqrt(2) where two copies share a vertex
        let c = t.to_csr();
        for i in 0..c.n_rows {
            assert!(c.row(i).count() <= 2);
            assert!(c.row(i).all(|(_, w)| {
                (w.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15
                    || (w.abs() - std::f64::consts::SQRT_2).abs() < 1e-15
            }));
        }
    }

    #[test]
    fn missing_blocks_rejected() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let m = crate::mesh::mesh_unstructured(&spec, 0.2, 1).unwrap();
        assert!(build_transplant(&m).is_err());
    }

    fn check_pair(spec_i: &DomainSpec, alpha: f64, h: f64, weight: MetricWeight) {
        let m1 = block_mesh(spec_i, alpha, h);
        let m2 = m1.retag_from(&spec_i.swapped()).unwrap();
        let p1 = assemble(&m1, &weight).unwrap();
        let p2 = assemble(&m2, &weight).unwrap();
        let (s1, b1) = solve_lowest(&p1, 12, DEFAULT_TOL).unwrap();
        let (s2, b2) = solve_lowest(&p2, 12, DEFAULT_TOL).unwrap();
        let t = build_transplant(&m1).unwrap();
        let rep = verify_transplantation(&p1, &p2, &b1, &t, 1e-9).unwrap();
        assert!(rep.passed(), "{:?}", rep.reason);
        let back = verify_transplantation(&p2, &p1, &b2, &t.inverse(&m1).unwrap(), 1e-9).unwrap();
        assert!(back.passed(), "{:?}", back.reason);
        for (a, b) in s1.values.iter().zip(&s2.values) {
            assert!((a - b).abs() <= 1e-10 * a, "{a} vs {b}");
        }
        let c1: Vec<usize> = cluster_multiplicities(&s1).iter().map(|c| c.1).collect();
        let c2: Vec<usize> = cluster_multiplicities(&s2).iter().map(|c| c.1).collect();
        assert_eq!(c1, c2);
    }

    #[test]
    fn half_disk_flat_and_spherical() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        check_pair(&spec, FRAC_PI_4, 0.08, MetricWeight::Flat);
        check_pair(&spec, FRAC_PI_4, 0.08, MetricWeight::Spherical);
    }

    #[test]
    fn sectorial_triangle_and_rectangle() {
        for block in [SectorialBlock::triangle(), SectorialBlock::rectangle()] {
            let spec = build_sectorial_domain(&block, false).unwrap();
            check_pair(&spec, block.alpha, 0.08, MetricWeight::Flat);
        }
    }

    #[test]
    fn broken_symmetry_is_flagged() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let mut m1 = block_mesh(&spec, FRAC_PI_4, 0.1);
        let m2 = m1.retag_from(&spec.swapped()).unwrap();
        let t = build_transplant(&m1).unwrap();
        // move one interior vertex of the first block
        let interior = (0..m1.num_vertices())
            .find(|&v| {
                let p = m1.vertices[v];
                p.norm() > 0.3 && p.norm() < 0.7 && p.arg() > 0.2 && p.arg() < 0.6
            })
            .unwrap();
        m1.vertices[interior].x += 1e-3;
        let mut m2b = m2.clone();
        m2b.vertices[interior].x += 1e-3;
        let p1 = assemble(&m1, &MetricWeight::Flat).unwrap();
        let p2 = assemble(&m2b, &MetricWeight::Flat).unwrap();
        let (_, b1) = solve_lowest(&p1, 6, DEFAULT_TOL).unwrap();
        let rep = verify_transplantation(&p1, &p2, &b1, &t, 1e-9).unwrap();
        assert!(!rep.passed());
        assert!(rep.max_residual() > 1e-6);
        assert!(rep.into_result().is_err());
    }
}
