use serde::Serialize;

use std::f64::consts::{FRAC_PI_2, PI};

use crate::assembly::{assemble, MatrixPair};
use crate::eigensolve::{cluster_values, solve_lowest, solve_lowest_with, EigenBasis, SolveOptions, Spectrum};
use crate::error::{Error, Result};
use crate::geometry::{build_double_cover, build_half_disk, build_quarter_arc_disk, Axis, HalfDiskVariant, MetricWeight};
use crate::mesh::{mesh_by_reflection, mesh_double_cover, mesh_fundamental, Mesh, Wedge};
use crate::sparse::CsrMatrix;

use super::MeshDescriptor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// `u ∘ T = -u`
    Odd,
    /// `u ∘ T = u`
    Even,
}

/// Orthonormal basis of the `±1` eigenspace of a vertex involution, written as
/// `(column, coefficient)` for each free DOF. A DOF fixed by the involution has
/// no column in the odd space.
fn subspace_basis(pair: &MatrixPair, swap: &[usize], parity: Parity) -> Result<(Vec<Option<(usize, f64)>>, usize)> {
    if swap.len() != pair.num_vertices {
        return Err(Error::InvalidArgument(format!(
            "involution acts on {} vertices, the problem has {}",
            swap.len(),
            pair.num_vertices
        )));
    }
    if let Some(v) = (0..swap.len()).find(|&v| swap[v] >= swap.len() || swap[swap[v]] != v) {
        return Err(Error::InvalidArgument(format!("vertex map is not an involution at vertex {v}")));
    }
    let dof = pair.vertex_to_dof();
    let mut out = vec![None; pair.num_free()];
    let mut cols = 0;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (k, &v) in pair.dof_map.iter().enumerate() {
        let w = swap[v];
        let partner = dof[w].ok_or_else(|| {
            Error::InvalidArgument(format!(
                "projector rank defect: free vertex {v} is swapped with constrained vertex {w}"
            ))
        })?;
        if partner == k {
            if parity == Parity::Even {
                out[k] = Some((cols, 1.0));
                cols += 1;
            }
        } else if partner > k {
            let sign = if parity == Parity::Odd { -s } else { s };
            out[k] = Some((cols, s));
            out[partner] = Some((cols, sign));
            cols += 1;
        }
    }
    Ok((out, cols))
}

fn congruence(a: &CsrMatrix, basis: &[Option<(usize, f64)>], cols: usize) -> CsrMatrix {
    let mut t = Vec::with_capacity(a.nnz());
    for i in 0..a.n_rows {
        let Some((ci, wi)) = basis[i] else { continue };
        for (j, v) in a.row(i) {
            if let Some((cj, wj)) = basis[j] {
                t.push((ci, cj, wi * v * wj));
            }
        }
    }
    CsrMatrix::from_triplets(cols, cols, &t)
}

/// Lowest `count` eigenvalues of the pencil restricted to the functions that are
/// odd (or even) under the vertex involution `swap`, typically the sheet swap
/// of a double-cover mesh. Eigenvectors are returned over the free DOFs.
pub fn cover_subspace_spectrum(
    pair: &MatrixPair,
    swap: &[usize],
    parity: Parity,
    count: usize,
    opts: &SolveOptions,
) -> Result<(Spectrum, EigenBasis)> {
    let (basis, cols) = subspace_basis(pair, swap, parity)?;
    if cols < count {
        return Err(Error::InvalidArgument(format!(
            "projector rank defect: the {parity:?} subspace has dimension {cols} < {count}"
        )));
    }
    let k = congruence(&pair.stiffness, &basis, cols);
    let m = congruence(&pair.mass, &basis, cols);
    let (s, b) = solve_lowest_with(&k, &m, count, opts)?;
    let vectors = b
        .vectors
        .iter()
        .map(|y| basis.iter().map(|e| e.map_or(0.0, |(c, w)| w * y[c])).collect())
        .collect();
    Ok((s, EigenBasis { vectors }))
}

/// The odd part of the spectrum under the sheet swap.
pub fn cover_odd_spectrum(pair: &MatrixPair, swap: &[usize], count: usize) -> Result<Spectrum> {
    Ok(cover_subspace_spectrum(pair, swap, Parity::Odd, count, &SolveOptions::default())?.0)
}

/// Relative gap below which two eigenvalues belong to one cluster in
/// [`cover_check`].
pub const COVER_CLUSTER_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct CoverCheck {
    /// Lowest odd eigenvalues of the cover, twice as many as `half_disk`.
    pub odd: Vec<f64>,
    /// Problem I on the upper half of the base mesh.
    pub half_disk: Vec<f64>,
    /// `(mean, multiplicity)` clusters of `odd` and of `half_disk`.
    pub odd_clusters: Vec<(f64, usize)>,
    pub half_disk_clusters: Vec<(f64, usize)>,
    /// Largest relative gap between the `i`-th odd cluster and the `i`-th
    /// half-disk cluster.
    pub max_relative_gap: f64,
    /// Every odd cluster has twice the multiplicity of its half-disk partner.
    pub doubled: bool,
    pub meshes: Vec<MeshDescriptor>,
}

impl CoverCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.doubled && self.max_relative_gap <= tol
    }
}

/// Upper half-disk mesh of size `h`, symmetric about the imaginary axis, and
/// the branched double cover of its reflection across the real axis.
pub fn cover_meshes(h: f64) -> Result<(Mesh, Mesh)> {
    let base = build_quarter_arc_disk(0.0);
    let f = mesh_fundamental(&base, &Wedge::new(FRAC_PI_2, PI), h)?;
    let upper = mesh_by_reflection(&f, &[Axis::through_origin(FRAC_PI_2)])?;
    let disk = mesh_by_reflection(&f, &[Axis::through_origin(FRAC_PI_2), Axis::through_origin(0.0)])?.retag_from(&base)?;
    let cover = mesh_double_cover(&disk, &build_double_cover(&base)?)?;
    let half = upper.retag_from(&build_half_disk(HalfDiskVariant::I, MetricWeight::Flat))?;
    Ok((half, cover))
}

/// Compare the sheet-swap-odd spectrum of the cover with Problem I on the
/// upper half-disk over the first `clusters` half-disk eigenvalues. Both meshes
/// come from one reflection-symmetric fundamental piece, so the comparison is
/// between two discretizations of the same function space.
pub fn cover_check(h: f64, clusters: usize) -> Result<CoverCheck> {
    if clusters == 0 {
        return Err(Error::InvalidArgument("cover check needs at least one cluster".into()));
    }
    let (half, cover) = cover_meshes(h)?;
    let swap = cover
        .symmetry_perms
        .first()
        .ok_or_else(|| Error::Mesh("cover mesh carries no sheet swap".into()))?;
    // one extra mode on each side so the last cluster is not cut
    let (hs, _) = solve_lowest(&assemble(&half, &MetricWeight::Flat)?, clusters + 1, 1e-10)?;
    let odd = cover_odd_spectrum(&assemble(&cover, &MetricWeight::Flat)?, swap, 2 * clusters + 2)?;
    let hc = cluster_values(&hs.values, COVER_CLUSTER_TOL);
    let oc = cluster_values(&odd.values, COVER_CLUSTER_TOL);
    // the last cluster on either side may be cut off by the mode count
    if hc.len() <= clusters || oc.len() <= clusters {
        return Err(Error::InvalidArgument(format!(
            "only {} half-disk and {} cover clusters resolved for {clusters}; degenerate spectrum",
            hc.len() - 1,
            oc.len() - 1
        )));
    }
    let n = clusters;
    let mut gap = 0.0f64;
    let mut doubled = true;
    for i in 0..n {
        gap = gap.max((oc[i].0 - hc[i].0).abs() / hc[i].0.abs());
        doubled &= oc[i].1 == 2 * hc[i].1;
    }
    let keep = hc[..n].iter().map(|c| c.1).sum::<usize>();
    Ok(CoverCheck {
        odd: odd.values[..2 * keep].to_vec(),
        half_disk: hs.values[..keep].to_vec(),
        odd_clusters: oc[..n].to_vec(),
        half_disk_clusters: hc[..n].to_vec(),
        max_relative_gap: gap,
        doubled,
        meshes: vec![MeshDescriptor::of(&half, "upper half-disk"), MeshDescriptor::of(&cover, "double cover")],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover_pair(h: f64) -> (MatrixPair, Vec<usize>) {
        let (_, c) = cover_meshes(h).unwrap();
        let swap = c.symmetry_perms[0].clone();
        (assemble(&c, &MetricWeight::Flat).unwrap(), swap)
    }

    #[test]
    fn odd_and_even_split_the_spectrum() {
        let (pair, swap) = cover_pair(0.25);
        let opts = SolveOptions::default();
        let (odd, ob) = cover_subspace_spectrum(&pair, &swap, Parity::Odd, 6, &opts).unwrap();
        let (even, _) = cover_subspace_spectrum(&pair, &swap, Parity::Even, 6, &opts).unwrap();
        let (all, _) = solve_lowest(&pair, 12, 1e-10).unwrap();
        let mut merged: Vec<f64> = odd.values.iter().chain(&even.values).copied().collect();
        merged.sort_by(f64::total_cmp);
        // the union of the two subspace spectra starts like the full one
        for (a, b) in all.values.iter().zip(&merged).take(6) {
            assert!((a - b).abs() < 1e-8 * b, "{:?} vs {merged:?}", all.values);
        }
        // odd eigenvectors really are odd
        for u in &ob.vectors {
            let full = pair.expand(u);
            for (v, &w) in swap.iter().enumerate() {
                assert!((full[v] + full[w]).abs() < 1e-12);
            }
        }
        assert!((odd.values[0] - even.values[0]).abs() > 1e-2 * odd.values[0]);
    }

    #[test]
    fn cover_doubles_problem_one() {
        let c = cover_check(0.2, 4).unwrap();
        assert!(c.passed(1e-8), "{c:?}");
        assert_eq!(c.odd.len(), 8);
    }

    #[test]
    fn non_involution_rejected() {
        let (pair, mut swap) = cover_pair(0.3);
        let v = (0..swap.len()).find(|&v| swap[v] != v).unwrap();
        swap[v] = v;
        assert!(cover_odd_spectrum(&pair, &swap, 2).is_err());
    }
}
