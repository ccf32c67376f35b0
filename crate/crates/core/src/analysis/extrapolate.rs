use serde::Serialize;

use crate::assembly::{assemble, MatrixPair};
use crate::eigensolve::{solve_lowest, EigenBasis, Spectrum};
use crate::error::{Error, Result};
use crate::geometry::MetricWeight;
use crate::mesh::{refine_uniform, Mesh};
use crate::sparse::{dot, CsrMatrix};

use super::MeshDescriptor;

/// Minimum overlap for a coarse mode to be paired with a fine mode directly.
pub const OVERLAP_THRESHOLD: f64 = 0.8;

/// Extra modes solved on each level so that realignment has room.
const ALIGN_MARGIN: usize = 4;

#[derive(Clone, Debug, Serialize)]
pub struct Extrapolation {
    /// `(4 λ_{h/2} - λ_h) / 3` per mode.
    pub values: Vec<f64>,
    /// `|λ_{h/2} - λ_h| / 3` per mode.
    pub errors: Vec<f64>,
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// Modes whose fine value exceeds the coarse one.
    pub non_monotone: Vec<usize>,
    /// Fine mode paired with each coarse mode.
    pub pairing: Vec<usize>,
    pub meshes: Vec<MeshDescriptor>,
}

/// `sqrt(sum (a_i - b_i)^2)` over the first `count` values, with the differences.
pub fn compare_spectra(a: &[f64], b: &[f64], count: usize) -> Result<(f64, Vec<f64>)> {
    if a.len() < count || b.len() < count {
        return Err(Error::InvalidArgument(format!(
            "comparison of {count} eigenvalues needs both spectra that long (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a[..count].iter().zip(&b[..count]).map(|(x, y)| x - y).collect();
    Ok((diffs.iter().map(|d| d * d).sum::<f64>().sqrt(), diffs))
}

/// Mode-by-mode extrapolation assuming `O(h^2)` convergence, with the modes
/// taken in the given order.
pub fn richardson(coarse: &[f64], fine: &[f64]) -> Result<Extrapolation> {
    if coarse.len() != fine.len() || coarse.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "extrapolation needs equal nonzero mode counts (got {} and {})",
            coarse.len(),
            fine.len()
        )));
    }
    let values = coarse.iter().zip(fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    let errors = coarse.iter().zip(fine).map(|(c, f)| (f - c).abs() / 3.0).collect();
    let non_monotone = coarse
        .iter()
        .zip(fine)
        .enumerate()
        .filter(|(_, (c, f))| f > c)
        .map(|(i, _)| i)
        .collect();
    Ok(Extrapolation {
        values,
        errors,
        coarse: coarse.to_vec(),
        fine: fine.to_vec(),
        non_monotone,
        pairing: (0..coarse.len()).collect(),
        meshes: Vec::new(),
    })
}

/// Uniform refinement together with the P1 prolongation (fine vertices x coarse
/// vertices): coarse vertices keep their values, midpoints take the mean of
/// their edge.
pub fn refine_with_prolongation(coarse: &Mesh) -> Result<(Mesh, CsrMatrix)> {
    let fine = refine_uniform(coarse);
    let nc = coarse.num_vertices();
    let nf = fine.num_vertices();
    if fine.num_triangles() != 4 * coarse.num_triangles() {
        return Err(Error::Mesh("refinement does not split every triangle in four".into()));
    }
    let mut t = Vec::with_capacity(nc + 2 * (nf - nc));
    for v in 0..nc {
        t.push((v, v, 1.0));
    }
    let mut seen = vec![false; nf];
    for (ci, &[a, b, c]) in coarse.triangles.iter().enumerate() {
        let c0 = fine.triangles[4 * ci];
        let c1 = fine.triangles[4 * ci + 1];
        if c0[0] != a || c1[1] != b {
            return Err(Error::Mesh("refined triangle order does not match its parent".into()));
        }
        for (m, (p, q)) in [(c0[1], (a, b)), (c1[2], (b, c)), (c0[2], (c, a))] {
            if !seen[m] {
                seen[m] = true;
                t.push((m, p, 0.5));
                t.push((m, q, 0.5));
            }
        }
    }
    Ok((fine, CsrMatrix::from_triplets(nf, nc, &t)))
}

/// Pair coarse modes with fine modes by `M`-weighted overlap of the prolonged
/// coarse eigenvectors. Pairs above [`OVERLAP_THRESHOLD`] are taken greedily
/// by decreasing overlap; the remaining modes (typically split clusters) are
/// paired in eigenvalue order.
pub fn align_modes(
    coarse: (&MatrixPair, &EigenBasis),
    fine: (&MatrixPair, &EigenBasis),
    prolongation: &CsrMatrix,
) -> Result<Vec<usize>> {
    let (cp, cb) = coarse;
    let (fp, fb) = fine;
    if prolongation.n_rows != fp.num_vertices || prolongation.n_cols != cp.num_vertices {
        return Err(Error::InvalidArgument("prolongation does not match the two levels".into()));
    }
    let nc = cb.vectors.len();
    let nf = fb.vectors.len();
    let mf: Vec<Vec<f64>> = fb.vectors.iter().map(|v| fp.mass.mul_vec(v)).collect();
    let mut overlap = vec![vec![0.0; nf]; nc];
    for (i, u) in cb.vectors.iter().enumerate() {
        let w = fp.restrict(&prolongation.mul_vec(&cp.expand(u)));
        let norm = fp.mass.bilinear(&w, &w).sqrt();
        if norm == 0.0 {
            continue;
        }
        for j in 0..nf {
            overlap[i][j] = dot(&w, &mf[j]).abs() / norm;
        }
    }
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, row) in overlap.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            if o >= OVERLAP_THRESHOLD {
                cand.push((o, i, j));
            }
        }
    }
    cand.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut pairing = vec![usize::MAX; nc];
    let mut used = vec![false; nf];
    for (_, i, j) in cand {
        if pairing[i] == usize::MAX && !used[j] {
            pairing[i] = j;
            used[j] = true;
        }
    }
    let mut free_fine = (0..nf).filter(|&j| !used[j]);
    for p in pairing.iter_mut().filter(|p| **p == usize::MAX) {
        *p = free_fine
            .next()
            .ok_or_else(|| Error::InvalidArgument("more coarse than fine modes".into()))?;
    }
    Ok(pairing)
}

fn solve_level(mesh: &Mesh, weight: &MetricWeight, count: usize, tol: f64) -> Result<(MatrixPair, Spectrum, EigenBasis)> {
    let pair = assemble(mesh, weight)?;
    let (s, b) = solve_lowest(&pair, count.min(pair.num_free()), tol)?;
    Ok((pair, s, b))
}

/// Solve on `mesh` and on its uniform refinement, realign the modes and
/// extrapolate the lowest `count`.
pub fn extrapolate_lowest(mesh: &Mesh, weight: &MetricWeight, count: usize, tol: f64) -> Result<Extrapolation> {
    let want = count + ALIGN_MARGIN;
    let (fine_mesh, prolong) = refine_with_prolongation(mesh)?;
    let (cp, cs, cb) = solve_level(mesh, weight, want, tol)?;
    let (fp, fs, fb) = solve_level(&fine_mesh, weight, want, tol)?;
    if cs.values.len() < count {
        return Err(Error::InvalidArgument(format!(
            "coarse mesh has only {} free DOFs for {count} modes",
            cs.values.len()
        )));
    }
    let pairing = align_modes((&cp, &cb), (&fp, &fb), &prolong)?;
    let coarse: Vec<f64> = cs.values[..count].to_vec();
    let fine: Vec<f64> = pairing[..count].iter().map(|&j| fs.values[j]).collect();
    let mut out = richardson(&coarse, &fine)?;
    out.pairing = pairing[..count].to_vec();
    out.meshes = vec![MeshDescriptor::of(mesh, "coarse"), MeshDescriptor::of(&fine_mesh, "fine")];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_rectangle, build_uniform_disk, BoundaryTag};
    use crate::mesh::mesh_unstructured;
    use crate::special::j01_squared;
    use std::f64::consts::PI;

    #[test]
    fn nu_arithmetic() {
        let (nu, d) = compare_spectra(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0], 3).unwrap();
        assert_eq!(nu, 1.0);
        assert_eq!(d, vec![0.0, 0.0, -1.0]);
        assert_eq!(compare_spectra(&[1.0, 2.0], &[1.0, 2.0], 2).unwrap().0, 0.0);
        assert!(compare_spectra(&[1.0], &[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn exact_quadratic_sequence() {
        // λ_h = λ + C h^2 at h = 0.1 and 0.05
        let lam = [2.0, 5.0, 13.5];
        let coarse: Vec<f64> = lam.iter().map(|l| l + 3.0 * 0.01).collect();
        let fine: Vec<f64> = lam.iter().map(|l| l + 3.0 * 0.0025).collect();
        let r = richardson(&coarse, &fine).unwrap();
        for (a, b) in r.values.iter().zip(lam) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(r.non_monotone.is_empty());
        let r = richardson(&[1.0, 2.0], &[1.1, 1.9]).unwrap();
        assert_eq!(r.non_monotone, vec![0]);
    }

    #[test]
    fn prolongation_reproduces_linear_fields() {
        let spec = build_rectangle(0.0, 0.0, 2.0, 1.0, [BoundaryTag::Dirichlet; 4]).unwrap();
        let m = mesh_unstructured(&spec, 0.3, 1).unwrap();
        let (fine, p) = refine_with_prolongation(&m).unwrap();
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - 3.0 * y;
        let coarse: Vec<f64> = m.vertices.iter().map(|v| f(v.x, v.y)).collect();
        let got = p.mul_vec(&coarse);
        for (v, g) in fine.vertices.iter().zip(got) {
            assert!((g - f(v.x, v.y)).abs() < 1e-12);
        }
    }

    #[test]
    fn disk_first_eigenvalue() {
        let spec = build_uniform_disk(BoundaryTag::Dirichlet);
        let m = mesh_unstructured(&spec, 0.1, 3).unwrap();
        let r = extrapolate_lowest(&m, &MetricWeight::Flat, 3, 1e-10).unwrap();
        let exact = j01_squared();
        let rel = (r.values[0] - exact).abs() / exact;
        assert!(rel < 1e-3, "{} vs {exact}", r.values[0]);
        assert!((r.values[0] - exact).abs() < (r.fine[0] - exact).abs());
        assert!(r.non_monotone.is_empty());
    }

    #[test]
    fn square_double_eigenvalue_pairs_up() {
        let spec = build_rectangle(0.0, 0.0, PI, PI, [BoundaryTag::Dirichlet; 4]).unwrap();
        let m = mesh_unstructured(&spec, 0.25, 5).unwrap();
        let r = extrapolate_lowest(&m, &MetricWeight::Flat, 4, 1e-10).unwrap();
        for (v, want) in r.values.iter().zip([2.0, 5.0, 5.0, 8.0]) {
            assert!((v - want).abs() / want < 2e-3, "{:?}", r.values);
        }
        let mut p = r.pairing.clone();
        p.sort_unstable();
        assert_eq!(p, vec![0, 1, 2, 3]);
    }
}
