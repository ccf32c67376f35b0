//! Domain and eigenfunction figures plus a VTK file for the rectangle pair.
//! Writes into the directory given as the first argument (default `figures`).

use std::path::PathBuf;

use zaremba::assembly::assemble;
use zaremba::cli_io::figure::{domain_svg, mesh_svg};
use zaremba::eigensolve::solve_lowest;
use zaremba::geometry::{build_sectorial_domain, SectorialBlock};
use zaremba::mesh::io::write_vtk;
use zaremba::mesh::mesh_four_blocks;

fn main() -> zaremba::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "figures".into()));
    std::fs::create_dir_all(&dir)?;
    let block = SectorialBlock::rectangle();
    let spec = build_sectorial_domain(&block, false)?;
    let mesh = mesh_four_blocks(&spec, block.alpha, 0.05)?;
    let pair = assemble(&mesh, &spec.weight)?;
    let (s, basis) = solve_lowest(&pair, 3, 1e-10)?;
    let modes: Vec<Vec<f64>> = basis.vectors.iter().map(|u| pair.expand(u)).collect();

    std::fs::write(dir.join("rectangle.svg"), domain_svg(&spec, "rectangle"))?;
    std::fs::write(dir.join("rectangle_mode0.svg"), mesh_svg(&mesh, Some(&modes[0]), "mode 0"))?;
    let fields: Vec<(String, &[f64])> = modes.iter().enumerate().map(|(i, m)| (format!("mode_{i}"), m.as_slice())).collect();
    let fields: Vec<(&str, &[f64])> = fields.iter().map(|(n, m)| (n.as_str(), *m)).collect();
    std::fs::write(dir.join("rectangle.vtk"), write_vtk(&mesh, &fields))?;
    println!("eigenvalues {:?}; wrote {}", s.values, dir.display());
    Ok(())
}
