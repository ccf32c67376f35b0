//! Run a catalog entry or config file through the batch runner and print its
//! checks. Nothing is written to disk.

use zaremba::cli_io::{find_config, run};

fn main() -> zaremba::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "half-disk-pair".into());
    let out = run(&find_config(&name)?)?;
    for c in &out.bundle.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for (k, v) in &out.advisories {
        println!("advisory {k}: {v}");
    }
    Ok(())
}
