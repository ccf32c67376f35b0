use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble_full, eliminate, FullMatrices};
use crate::eigensolve::solve_lowest;
use crate::error::{Error, Result};
use crate::geometry::{build_disk_partition, build_uniform_disk, Axis, BoundaryTag, MetricWeight};
use crate::mesh::{mesh_by_reflection, mesh_fundamental, Mesh, Wedge};

use super::{compare_spectra, MeshDescriptor};

/// Partition endpoints are multiples of `π / STEPS`.
pub const STEPS: usize = 24;

#[derive(Clone, Debug, Serialize)]
pub struct NuCell {
    pub k: usize,
    pub n: usize,
    pub nu: Option<f64>,
    pub diffs: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NuTable {
    pub max_index: usize,
    pub eigencount: usize,
    pub cells: Vec<NuCell>,
    pub mesh: MeshDescriptor,
}

/// Disk mesh invariant under the reflections in every line at angle
/// `j π / 24`, so each partition endpoint is a vertex and congruent partitions
/// see congruent meshes.
pub fn sweep_mesh(h: f64) -> Result<Mesh> {
    let spec = build_uniform_disk(BoundaryTag::Dirichlet);
    let step = PI / STEPS as f64;
    let f = mesh_fundamental(&spec, &Wedge::new(0.0, step), h)?;
    let axes: Vec<Axis> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&j| Axis::through_origin(j * step))
        .collect();
    mesh_by_reflection(&f, &axes)
}

fn cell(mesh: &Mesh, full: &FullMatrices, k: usize, n: usize, eigencount: usize) -> Result<(f64, Vec<f64>)> {
    let step = PI / STEPS as f64;
    let (a, b) = build_disk_partition(k as f64 * step, n as f64 * step)?;
    let mut spectra = Vec::with_capacity(2);
    for spec in [a, b] {
        let m = mesh.retag_from(&spec)?;
        let pair = eliminate(full, &m.dirichlet_vertices())?;
        spectra.push(solve_lowest(&pair, eigencount, 1e-10)?.0.values);
    }
    compare_spectra(&spectra[0], &spectra[1], eigencount)
}

/// `ν(k, n)` for all `1 <= k <= n <= max_index`, both swapped problems solved
/// on the same mesh. Failed cells keep their error and the sweep continues.
pub fn sweep_disk(h: f64, eigencount: usize, max_index: usize) -> Result<NuTable> {
    if max_index == 0 || max_index > STEPS / 2 || eigencount == 0 {
        return Err(Error::InvalidArgument(format!(
            "sweep needs 1 <= max_index <= {} and a positive eigencount",
            STEPS / 2
        )));
    }
    let mesh = sweep_mesh(h)?;
    let full = assemble_full(&mesh, &MetricWeight::Flat)?;
    let pairs: Vec<(usize, usize)> = (1..=max_index)
        .flat_map(|n| (1..=n).map(move |k| (k, n)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(k, n)| match cell(&mesh, &full, k, n, eigencount) {
            Ok((nu, diffs)) => NuCell {
                k,
                n,
                nu: Some(nu),
                diffs,
                error: None,
            },
            Err(e) => NuCell {
                k,
                n,
                nu: None,
                diffs: Vec::new(),
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(NuTable {
        max_index,
        eigencount,
        cells,
        mesh: MeshDescriptor::of(&mesh, "disk, reflection symmetric at multiples of pi/24"),
    })
}

impl NuTable {
    pub fn get(&self, k: usize, n: usize) -> Option<f64> {
        self.cells.iter().find(|c| c.k == k && c.n == n).and_then(|c| c.nu)
    }

    /// Largest `ν(k, k)`.
    pub fn max_diagonal(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter(|c| c.k == c.n)
            .map(|c| c.nu)
            .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
    }

    /// Smallest `ν(k, n)` with `k != n`, with its cell.
    pub fn min_off_diagonal(&self) -> Option<(usize, usize, f64)> {
        self.cells
            .iter()
            .filter(|c| c.k != c.n)
            .filter_map(|c| c.nu.map(|v| (c.k, c.n, v)))
            .min_by(|a, b| a.2.total_cmp(&b.2))
    }

    /// Rows `k`, columns `n`; empty entries below the diagonal and for failed cells.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k\\n");
        for n in 1..=self.max_index {
            s.push_str(&format!(",{n}"));
        }
        s.push('\n');
        for k in 1..=self.max_index {
            s.push_str(&k.to_string());
            for n in 1..=self.max_index {
                s.push(',');
                if let Some(v) = self.get(k, n) {
                    s.push_str(&format!("{v:.16e}"));
                }
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::mirror_permutation;

    #[test]
    fn mesh_has_all_partition_symmetries() {
        let m = sweep_mesh(0.3).unwrap();
        for j in 0..STEPS {
            let axis = Axis::through_origin(j as f64 * PI / STEPS as f64);
            assert!(mirror_permutation(&m, &axis).is_some(), "axis {j}");
        }
        for j in 0..2 * STEPS {
            let p = crate::geometry::Point::polar(1.0, j as f64 * PI / STEPS as f64);
            assert!(m.vertices.iter().any(|v| v.dist(p) < 1e-12));
        }
    }

    #[test]
    fn small_sweep() {
        let t = sweep_disk(0.2, 3, 3).unwrap();
        assert_eq!(t.cells.len(), 6);
        assert!(t.cells.iter().all(|c| c.error.is_none()));
        let diag = t.max_diagonal().unwrap();
        let (_, _, off) = t.min_off_diagonal().unwrap();
        assert!(diag < 1e-9, "{diag}");
        assert!(off > 1e-3);
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(3).unwrap().starts_with("3,,,"));
    }

    #[test]
    fn bad_arguments() {
        assert!(sweep_disk(0.2, 3, 0).is_err());
        assert!(sweep_disk(0.2, 0, 2).is_err());
        assert!(sweep_disk(0.2, 3, 13).is_err());
    }
}
