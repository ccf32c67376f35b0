//! Lowest eigenvalues of the half-disk mixed problem on an unstructured mesh.

use zaremba::assembly::assemble;
use zaremba::eigensolve::{cluster_multiplicities, solve_lowest};
use zaremba::geometry::{build_half_disk, HalfDiskVariant, MetricWeight};
use zaremba::mesh::mesh_unstructured;

fn main() -> zaremba::Result<()> {
    let spec = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
    let mesh = mesh_unstructured(&spec, 0.05, 1)?;
    let pair = assemble(&mesh, &spec.weight)?;
    let (s, _) = solve_lowest(&pair, 10, 1e-10)?;
    println!("{} vertices, {} free dofs", mesh.num_vertices(), pair.num_free());
    for (i, (l, r)) in s.values.iter().zip(&s.residuals).enumerate() {
        println!("{i:>2}  {l:.8}  residual {r:.1e}");
    }
    println!("clusters {:?}", cluster_multiplicities(&s));
    Ok(())
}
