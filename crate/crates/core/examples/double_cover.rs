//! Sheet-odd spectrum of the branched double cover of the disk against the
//! half-disk problem.

use zaremba::analysis::cover_check;

fn main() -> zaremba::Result<()> {
    let c = cover_check(0.05, 8)?;
    println!("cluster  half-disk (mult)   cover odd (mult)");
    for (h, o) in c.half_disk_clusters.iter().zip(&c.odd_clusters) {
        println!("         {:.8} ({})   {:.8} ({})", h.0, h.1, o.0, o.1);
    }
    println!("max relative gap {:.1e}, doubled {}", c.max_relative_gap, c.doubled);
    Ok(())
}
