use serde::Serialize;

use crate::assembly::assemble;
use crate::eigensolve::{cluster_multiplicities, solve_lowest, Spectrum};
use crate::error::{Error, Result};
use crate::geometry::DomainSpec;
use crate::mesh::{mesh_four_blocks, mesh_unstructured};
use crate::transplant::{build_transplant, verify_transplantation, TransplantReport};

use super::{extrapolate_lowest, Extrapolation, MeshDescriptor};

/// Both swapped problems solved on one four-block mesh, with the
/// transplantation map checked mode by mode in both directions.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetricPairCheck {
    pub first: Spectrum,
    pub second: Spectrum,
    pub max_relative_gap: f64,
    /// Cluster multiplicities of each spectrum.
    pub clusters: (Vec<usize>, Vec<usize>),
    pub forward: TransplantReport,
    pub inverse: TransplantReport,
    pub mesh: MeshDescriptor,
}

impl SymmetricPairCheck {
    pub fn clusters_match(&self) -> bool {
        self.clusters.0 == self.clusters.1
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_relative_gap <= tol && self.clusters_match() && self.forward.passed() && self.inverse.passed()
    }
}

fn relative_gaps(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y).abs() / x.abs().max(y.abs())).collect()
}

/// `spec` is the first problem of a four-block domain with sector angle
/// `alpha`; the second is its swap. `residual_tol` bounds the relative
/// residual of every transplanted eigenvector.
pub fn check_symmetric_pair(
    spec: &DomainSpec,
    alpha: f64,
    h: f64,
    count: usize,
    residual_tol: f64,
) -> Result<SymmetricPairCheck> {
    let m1 = mesh_four_blocks(spec, alpha, h)?;
    let m2 = m1.retag_from(&spec.swapped())?;
    let p1 = assemble(&m1, &spec.weight)?;
    let p2 = assemble(&m2, &spec.weight)?;
    let (s1, b1) = solve_lowest(&p1, count, 1e-11)?;
    let (s2, b2) = solve_lowest(&p2, count, 1e-11)?;
    let t = build_transplant(&m1)?;
    let forward = verify_transplantation(&p1, &p2, &b1, &t, residual_tol)?;
    let inverse = verify_transplantation(&p2, &p1, &b2, &t.inverse(&m1)?, residual_tol)?;
    let gaps = relative_gaps(&s1.values, &s2.values);
    let clusters = (
        cluster_multiplicities(&s1).iter().map(|c| c.1).collect(),
        cluster_multiplicities(&s2).iter().map(|c| c.1).collect(),
    );
    Ok(SymmetricPairCheck {
        max_relative_gap: gaps.iter().copied().fold(0.0, f64::max),
        first: s1,
        second: s2,
        clusters,
        forward,
        inverse,
        mesh: MeshDescriptor::of(&m1, "four-block reflection mesh"),
    })
}

/// Two problems meshed independently (no symmetry), each extrapolated from
/// `h` and `h/2`.
#[derive(Clone, Debug, Serialize)]
pub struct IndependentPairCheck {
    pub first: Extrapolation,
    pub second: Extrapolation,
    pub relative_gaps: Vec<f64>,
    pub max_relative_gap: f64,
}

impl IndependentPairCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_relative_gap <= tol
    }
}

pub fn check_independent_pair(
    first: &DomainSpec,
    second: &DomainSpec,
    h: f64,
    seeds: (u64, u64),
    count: usize,
) -> Result<IndependentPairCheck> {
    if count == 0 {
        return Err(Error::InvalidArgument("pair check needs at least one mode".into()));
    }
    let solve = |spec: &DomainSpec, seed: u64| -> Result<Extrapolation> {
        extrapolate_lowest(&mesh_unstructured(spec, h, seed)?, &spec.weight, count, 1e-10)
    };
    let (a, b) = rayon::join(|| solve(first, seeds.0), || solve(second, seeds.1));
    let (a, b) = (a?, b?);
    let relative_gaps = relative_gaps(&a.values, &b.values);
    Ok(IndependentPairCheck {
        max_relative_gap: relative_gaps.iter().copied().fold(0.0, f64::max),
        relative_gaps,
        first: a,
        second: b,
    })
}

/// Lowest `count` eigenvalues on an unstructured mesh, optionally extrapolated.
pub fn solve_unstructured(spec: &DomainSpec, h: f64, seed: u64, count: usize, extrapolate: bool) -> Result<SolveOutcome> {
    let mesh = mesh_unstructured(spec, h, seed)?;
    if extrapolate {
        return Ok(SolveOutcome::Extrapolated(extrapolate_lowest(&mesh, &spec.weight, count, 1e-10)?));
    }
    let (s, _) = solve_lowest(&assemble(&mesh, &spec.weight)?, count, 1e-10)?;
    Ok(SolveOutcome::Single {
        spectrum: s,
        mesh: MeshDescriptor::of(&mesh, "unstructured"),
    })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolveOutcome {
    Single { spectrum: Spectrum, mesh: MeshDescriptor },
    Extrapolated(Extrapolation),
}

impl SolveOutcome {
    pub fn values(&self) -> &[f64] {
        match self {
            SolveOutcome::Single { spectrum, .. } => &spectrum.values,
            SolveOutcome::Extrapolated(e) => &e.values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_half_disk, build_sectorial_domain, HalfDiskVariant, MetricWeight, SectorialBlock};
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn half_disk_pair_on_symmetric_mesh() {
        let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let c = check_symmetric_pair(&spec, FRAC_PI_4, 0.15, 8, 1e-9).unwrap();
        assert!(c.passed(1e-8), "{:?} {:?}", c.max_relative_gap, c.forward.reason);
    }

    #[test]
    fn triangle_on_independent_meshes() {
        let a = build_sectorial_domain(&SectorialBlock::triangle(), false).unwrap();
        let b = a.swapped();
        let c = check_independent_pair(&a, &b, 0.1, (1, 2), 3).unwrap();
        assert!(c.passed(1e-2), "{:?}", c.relative_gaps);
        assert!(c.max_relative_gap > 0.0);
    }
}
