//! First eigenvalues of the axisymmetric and centrally symmetric quarter-sphere
//! problems, each extrapolated on its own mesh.

use zaremba::analysis::compare_first_eigenvalues;
use zaremba::geometry::build_quarter_sphere_trio;

fn main() -> zaremba::Result<()> {
    let trio = build_quarter_sphere_trio()?;
    for (name, lower) in [("axisymmetric 1", &trio.axisymmetric_1), ("axisymmetric 2", &trio.axisymmetric_2)] {
        let r = compare_first_eigenvalues(lower, &trio.central, 0.07, 3)?;
        println!(
            "{name}: {:.5} +- {:.1e}, central {:.5} +- {:.1e}, ordered {}",
            r.lower.values[0],
            r.lower.errors[0],
            r.upper.values[0],
            r.upper.errors[0],
            r.strictly_ordered()
        );
    }
    Ok(())
}
