//! Richardson extrapolation of the Dirichlet disk spectrum from `h` and `h/2`.

use zaremba::analysis::extrapolate_lowest;
use zaremba::geometry::{build_uniform_disk, BoundaryTag};
use zaremba::mesh::mesh_unstructured;
use zaremba::special::disk_dirichlet_eigenvalues;

fn main() -> zaremba::Result<()> {
    let spec = build_uniform_disk(BoundaryTag::Dirichlet);
    let x = extrapolate_lowest(&mesh_unstructured(&spec, 0.1, 3)?, &spec.weight, 6, 1e-10)?;
    let exact = disk_dirichlet_eigenvalues(6)?;
    println!("mode  coarse      fine        extrapolated  exact");
    for i in 0..6 {
        println!("{i:>4}  {:.6}  {:.6}  {:.6}      {:.6}", x.coarse[i], x.fine[i], x.values[i], exact[i]);
    }
    Ok(())
}
