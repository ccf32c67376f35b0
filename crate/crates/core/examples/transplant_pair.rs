//! Swapped problems on the four-block triangle, solved on one reflection mesh
//! and mapped onto each other by transplantation.

use zaremba::analysis::check_symmetric_pair;
use zaremba::geometry::{build_sectorial_domain, SectorialBlock};

fn main() -> zaremba::Result<()> {
    let block = SectorialBlock::triangle();
    let spec = build_sectorial_domain(&block, false)?;
    let c = check_symmetric_pair(&spec, block.alpha, 0.05, 12, 1e-9)?;
    for (i, (a, b)) in c.first.values.iter().zip(&c.second.values).enumerate() {
        println!("{i:>2}  {a:.10}  {b:.10}  residual {:.1e}", c.forward.modes[i].residual);
    }
    println!("max relative gap {:.2e}, passed {}", c.max_relative_gap, c.passed(1e-8));
    Ok(())
}
