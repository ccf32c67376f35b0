//! Spectrum comparison, mesh extrapolation, heat-trace fits, the double-cover
//! odd subspace, the disk-partition sweep and first-eigenvalue comparisons for
//! symmetric pairs.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::Result;
use crate::geometry::{build_symmetry_pair, Axis, BoundaryTag, Curve, CurveKind, DomainSpec, MetricWeight, Point};
use crate::mesh::{mesh_unstructured, Mesh};

mod cover;
mod extrapolate;
mod heat;
mod pair;
mod sweep;

pub use cover::{
    cover_check, cover_meshes, cover_odd_spectrum, cover_subspace_spectrum, CoverCheck, Parity, COVER_CLUSTER_TOL,
};
pub use extrapolate::{
    align_modes, compare_spectra, extrapolate_lowest, refine_with_prolongation, richardson, Extrapolation,
    OVERLAP_THRESHOLD,
};
pub use heat::{heat_fit, heat_trace, length_balance, HeatFit, LengthBalance, LENGTH_TOL};
pub use pair::{
    check_independent_pair, check_symmetric_pair, solve_unstructured, IndependentPairCheck, SolveOutcome,
    SymmetricPairCheck,
};
pub use sweep::{sweep_disk, sweep_mesh, NuCell, NuTable, STEPS};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshDescriptor {
    pub label: String,
    pub vertices: usize,
    pub triangles: usize,
    pub max_edge: f64,
    pub min_angle_deg: f64,
}

impl MeshDescriptor {
    pub fn of(mesh: &Mesh, label: &str) -> Self {
        MeshDescriptor {
            label: label.to_string(),
            vertices: mesh.num_vertices(),
            triangles: mesh.num_triangles(),
            max_edge: mesh.max_edge_length(),
            min_angle_deg: mesh.min_angle_deg(),
        }
    }
}

/// Extrapolated first eigenvalues of two problems that are expected to satisfy
/// `λ₁(lower) <= λ₁(upper)`.
#[derive(Clone, Debug, Serialize)]
pub struct FirstEigenvalueComparison {
    pub lower: Extrapolation,
    pub upper: Extrapolation,
    /// `λ₁(upper) - λ₁(lower)` from the extrapolated values.
    pub margin: f64,
    /// Sum of the two extrapolation error estimates.
    pub error: f64,
}

impl FirstEigenvalueComparison {
    pub fn strictly_ordered(&self) -> bool {
        self.margin > self.error
    }

    pub fn equal_within_error(&self) -> bool {
        self.margin.abs() <= self.error
    }
}

/// Mesh both problems independently (unstructured, seed per problem) at `h`,
/// extrapolate `λ₁` from `h` and `h/2`, and compare.
pub fn compare_first_eigenvalues(lower: &DomainSpec, upper: &DomainSpec, h: f64, seed: u64) -> Result<FirstEigenvalueComparison> {
    let solve = |spec: &DomainSpec, s: u64| -> Result<Extrapolation> {
        let mesh = mesh_unstructured(spec, h, s)?;
        extrapolate_lowest(&mesh, &spec.weight, 1, 1e-10)
    };
    let lo = solve(lower, seed)?;
    let up = solve(upper, seed.wrapping_add(1))?;
    Ok(FirstEigenvalueComparison {
        margin: up.values[0] - lo.values[0],
        error: lo.errors[0] + up.errors[0],
        lower: lo,
        upper: up,
    })
}

/// Upper half-disk with Dirichlet on the arc `|arg z - π/2| < theta`, Neumann
/// on the rest of the arc and a placeholder tag on the diameter. Its tags are
/// symmetric about the imaginary axis, so with `d` the real axis the
/// axisymmetric and centrally symmetric doubles coincide.
pub fn symmetric_half(theta: f64, weight: MetricWeight) -> Result<DomainSpec> {
    use BoundaryTag::*;
    let a = FRAC_PI_2 - theta;
    let b = FRAC_PI_2 + theta;
    let mut spec = DomainSpec::new(
        vec![
            Curve::labeled(CurveKind::segment(Point::new(-1.0, 0.0), Point::new(1.0, 0.0)), Neumann, "d"),
            Curve::new(CurveKind::unit_arc(0.0, a), Neumann),
            Curve::new(CurveKind::unit_arc(a, b), Dirichlet),
            Curve::new(CurveKind::unit_arc(b, PI), Neumann),
        ],
        weight,
    )?;
    spec.metadata = BTreeMap::from([
        ("family".to_string(), "symmetric_half".to_string()),
        ("theta".to_string(), format!("{theta:.17e}")),
    ]);
    Ok(spec)
}

/// `(axisymmetric, central)` doubles of [`symmetric_half`] across the real axis.
pub fn symmetric_half_pair(theta: f64, weight: MetricWeight) -> Result<(DomainSpec, DomainSpec)> {
    build_symmetry_pair(&symmetric_half(theta, weight)?, &Axis::through_origin(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_quarter_sphere_trio;

    #[test]
    fn symmetric_halves_give_matching_doubles() {
        for theta in [PI / 8.0, PI / 4.0] {
            let (a, c) = symmetric_half_pair(theta, MetricWeight::Flat).unwrap();
            let r = compare_first_eigenvalues(&a, &c, 0.2, 7).unwrap();
            assert!(r.equal_within_error(), "{theta}: {} vs {}", r.margin, r.error);
        }
    }

    #[test]
    fn quarter_sphere_central_is_larger() {
        let trio = build_quarter_sphere_trio().unwrap();
        let r = compare_first_eigenvalues(&trio.axisymmetric_2, &trio.central, 0.2, 3).unwrap();
        assert!(r.strictly_ordered(), "{} vs {}", r.margin, r.error);
        assert!((r.lower.values[0] - 2.0).abs() < 0.02, "{}", r.lower.values[0]);
    }
}
