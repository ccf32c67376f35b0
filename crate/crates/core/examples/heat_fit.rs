//! Boundary-length imbalance read off the heat trace, for exact disk spectra
//! and for the half-disk problem.

use std::f64::consts::PI;

use zaremba::analysis::heat_fit;
use zaremba::assembly::assemble;
use zaremba::eigensolve::solve_lowest;
use zaremba::geometry::{boundary_lengths, build_half_disk, HalfDiskVariant, MetricWeight};
use zaremba::mesh::mesh_unstructured;
use zaremba::special::{disk_dirichlet_eigenvalues, disk_neumann_eigenvalues};

fn main() -> zaremba::Result<()> {
    let d = heat_fit(&disk_dirichlet_eigenvalues(300)?, PI, None)?;
    let n = heat_fit(&disk_neumann_eigenvalues(300)?, PI, None)?;
    println!("dirichlet disk: implied {:.4} (exact {:.4})", d.implied_imbalance, -2.0 * PI);
    println!("neumann disk:   implied {:.4} (exact {:.4})", n.implied_imbalance, 2.0 * PI);

    let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
    let mesh = mesh_unstructured(&spec, 0.05, 1)?;
    let (s, _) = solve_lowest(&assemble(&mesh, &spec.weight)?, 150, 1e-10)?;
    let fit = heat_fit(&s.values, mesh.area(), None)?;
    let (ld, ln) = boundary_lengths(&spec);
    println!("half disk:      implied {:.4} (L_N - L_D = {:.4})", fit.implied_imbalance, ln - ld);
    Ok(())
}
