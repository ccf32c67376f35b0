//! Spectral distance between the swapped problems for every disk partition
//! `(k, n)` in steps of `pi / 24`. Pass `h` as the first argument.

use zaremba::analysis::sweep_disk;

fn main() -> zaremba::Result<()> {
    let h = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(0.1);
    let t = sweep_disk(h, 3, 12)?;
    for k in 1..=12 {
        let row: Vec<String> = (1..=12)
            .map(|n| {
                let c = t.cells.iter().find(|c| c.k == k && c.n == n);
                c.and_then(|c| c.nu).map_or("   -   ".into(), |v| format!("{v:.1e}"))
            })
            .collect();
        println!("{k:>2} {}", row.join(" "));
    }
    if let (Some(d), Some((k, n, v))) = (t.max_diagonal(), t.min_off_diagonal()) {
        println!("max diagonal {d:.2e}; nontrivial minimum {v:.4} at ({k}, {n})");
    }
    Ok(())
}
