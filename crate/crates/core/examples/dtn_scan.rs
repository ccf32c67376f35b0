//! Sign changes of `det(C + I)` for the quarter-disk trace operators, matched
//! against directly computed eigenvalues.

use zaremba::dtn::check_crossings;

fn main() -> zaremba::Result<()> {
    let c = check_crossings(0.1, 5, 160)?;
    for (i, (x, err)) in c.matches.iter().enumerate() {
        println!("{i}  direct {:.8}  crossing {x:.8}  rel err {err:.1e}", c.direct_i[i]);
    }
    for f in &c.scan.flagged {
        println!("flagged {:.6}: {}", f.lambda, f.reason);
    }
    println!("extra crossings {:?}, passed {}", c.extra, c.passed(1e-3));
    Ok(())
}
