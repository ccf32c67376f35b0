//! Headline checks, one line per criterion. Run with
//! `cargo test --release --test acceptance`.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::Instant;

use zaremba::analysis::{
    check_independent_pair, check_symmetric_pair, compare_first_eigenvalues, cover_check, extrapolate_lowest, heat_fit,
    length_balance, sweep_disk, symmetric_half_pair,
};
use zaremba::assembly::{assemble, assemble_full};
use zaremba::dtn::check_crossings;
use zaremba::eigensolve::{cluster_values, solve_lowest};
use zaremba::geometry::{
    boundary_lengths, build_half_disk, build_quarter_sphere_trio, build_rectangle, build_sectorial_domain,
    build_uniform_disk, BoundaryTag, DomainSpec, HalfDiskVariant, MetricWeight, SectorialBlock,
};
use zaremba::mesh::mesh_unstructured;
use zaremba::Result;

/// Square of the first zero of `J₀`, to double precision.
const J01_SQUARED: f64 = 5.783185962946784;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn pair_20(spec: &DomainSpec, alpha: f64) -> Result<(bool, String)> {
    let c = check_symmetric_pair(spec, alpha, 0.05, 20, 1e-9)?;
    let residual = c.forward.max_residual().max(c.inverse.max_residual());
    Ok((
        c.passed(1e-8),
        format!(
            "gap {:.2e}, clusters match {}, max residual {residual:.2e}",
            c.max_relative_gap,
            c.clusters_match()
        ),
    ))
}

fn criterion_1() -> Result<Outcome> {
    let (ok, d) = pair_20(&build_half_disk(HalfDiskVariant::I, MetricWeight::Flat), FRAC_PI_4)?;
    outcome(ok, d)
}

fn criterion_2() -> Result<Outcome> {
    let a = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
    let c = check_independent_pair(&a, &a.swapped(), 0.05, (11, 12), 8)?;
    outcome(c.passed(2e-3), format!("max relative gap {:.2e} (allowed 2e-3)", c.max_relative_gap))
}

fn criterion_3() -> Result<Outcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, block) in [("triangle", SectorialBlock::triangle()), ("rectangle", SectorialBlock::rectangle())] {
        let spec = build_sectorial_domain(&block, false)?;
        let (ok, d) = pair_20(&spec, block.alpha)?;
        passed &= ok;
        parts.push(format!("{name}: {d}"));
    }
    outcome(passed, parts.join("; "))
}

fn criterion_4() -> Result<Outcome> {
    let disk = build_uniform_disk(BoundaryTag::Dirichlet);
    let x = extrapolate_lowest(&mesh_unstructured(&disk, 0.1, 3)?, &disk.weight, 1, 1e-10)?;
    let disk_err = (x.values[0] - J01_SQUARED).abs() / J01_SQUARED;

    let square = build_rectangle(0.0, 0.0, PI, PI, [BoundaryTag::Dirichlet; 4])?;
    let s = extrapolate_lowest(&mesh_unstructured(&square, 0.25, 5)?, &square.weight, 4, 1e-10)?;
    let exact = [2.0, 5.0, 5.0, 8.0];
    let square_err = s.values.iter().zip(exact).map(|(v, e)| (v - e).abs() / e).fold(0.0, f64::max);
    let mult: Vec<usize> = cluster_values(&s.values, 1e-3).iter().map(|c| c.1).collect();
    outcome(
        disk_err <= 1e-3 && square_err <= 1e-3 && mult == [1, 2, 1],
        format!("disk rel err {disk_err:.2e}, square max rel err {square_err:.2e}, multiplicities {mult:?}"),
    )
}

fn criterion_5() -> Result<Outcome> {
    let trio = build_quarter_sphere_trio()?;
    let a2 = extrapolate_lowest(&mesh_unstructured(&trio.axisymmetric_2, 0.05, 3)?, &trio.axisymmetric_2.weight, 1, 1e-10)?;
    let a2_err = (a2.values[0] - 2.0).abs() / 2.0;
    let q = build_half_disk(HalfDiskVariant::I, MetricWeight::Spherical);
    let lq = extrapolate_lowest(&mesh_unstructured(&q, 0.05, 9)?, &q.weight, 1, 1e-10)?.values[0];
    let (pair_ok, d) = pair_20(&q, FRAC_PI_4)?;
    outcome(
        a2_err <= 1e-2 && (2.20..=2.36).contains(&lq) && lq > 2.05 && pair_ok,
        format!("lambda1(Q_a2) = {:.6}, lambda1(Q) = {lq:.4}, spherical pair {d}", a2.values[0]),
    )
}

fn criterion_6() -> Result<Outcome> {
    let trio = build_quarter_sphere_trio()?;
    let r1 = compare_first_eigenvalues(&trio.axisymmetric_1, &trio.central, 0.05, 3)?;
    let r2 = compare_first_eigenvalues(&trio.axisymmetric_2, &trio.central, 0.05, 5)?;
    let (a, c) = symmetric_half_pair(FRAC_PI_4, MetricWeight::Spherical)?;
    let eq = compare_first_eigenvalues(&a, &c, 0.07, 7)?;
    outcome(
        r1.strictly_ordered() && r2.strictly_ordered() && eq.equal_within_error(),
        format!(
            "c - a1 = {:.3e} (err {:.1e}), c - a2 = {:.3e} (err {:.1e}), equality |gap| {:.1e} (err {:.1e})",
            r1.margin,
            r1.error,
            r2.margin,
            r2.error,
            eq.margin.abs(),
            eq.error
        ),
    )
}

fn criterion_7() -> Result<Outcome> {
    let t = sweep_disk(0.06, 3, 12)?;
    let failed = t.cells.iter().filter(|c| c.nu.is_none()).count();
    match (t.max_diagonal(), t.min_off_diagonal()) {
        (Some(diag), Some((k, n, off))) => outcome(
            failed == 0 && 10.0 * diag <= off && (k, n) == (11, 12),
            format!("max diagonal {diag:.2e}, nontrivial minimum {off:.4} at ({k}, {n}), failed cells {failed}"),
        ),
        _ => outcome(false, format!("table incomplete, failed cells {failed}")),
    }
}

fn criterion_8() -> Result<Outcome> {
    let c = check_crossings(0.1, 5, 160)?;
    outcome(
        c.passed(1e-3),
        format!(
            "{} crossings for {} eigenvalues, max rel err {:.2e}, extra {:?}, flagged {}",
            c.scan.crossings.len(),
            c.direct_i.len(),
            c.max_relative_error,
            c.extra,
            c.scan.flagged.len()
        ),
    )
}

fn criterion_9() -> Result<Outcome> {
    let c = cover_check(0.05, 8)?;
    outcome(
        c.passed(1e-3),
        format!("max rel gap {:.2e}, doubled {}", c.max_relative_gap, c.doubled),
    )
}

/// `(implied imbalance, L_N - L_D, perimeter)` from 150 eigenvalues.
fn heat_imbalance(spec: &DomainSpec) -> Result<(f64, f64, f64)> {
    let mesh = mesh_unstructured(spec, 0.05, 1)?;
    let ones = vec![1.0; mesh.num_vertices()];
    let area: f64 = assemble_full(&mesh, &spec.weight)?.mass.mul_vec(&ones).iter().sum();
    let (s, _) = solve_lowest(&assemble(&mesh, &spec.weight)?, 150, 1e-10)?;
    let fit = heat_fit(&s.values, area, None)?;
    let (ld, ln) = boundary_lengths(spec);
    Ok((fit.implied_imbalance, ln - ld, ln + ld))
}

fn criterion_10() -> Result<Outcome> {
    let flat = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
    let families = [
        flat.clone(),
        build_half_disk(HalfDiskVariant::I, MetricWeight::Spherical),
        build_sectorial_domain(&SectorialBlock::triangle(), false)?,
        build_sectorial_domain(&SectorialBlock::rectangle(), false)?,
    ];
    let worst = families.iter().map(|s| length_balance(s, &s.swapped()).gap).fold(0.0, f64::max);

    let mut passed = worst <= 1e-9;
    let mut parts = vec![format!("worst length gap {worst:.1e}")];
    for (name, tag) in [("dirichlet disk", BoundaryTag::Dirichlet), ("neumann disk", BoundaryTag::Neumann)] {
        let (implied, expected, _) = heat_imbalance(&build_uniform_disk(tag))?;
        let ok = implied.signum() == expected.signum() && (implied - expected).abs() <= 0.25 * expected.abs();
        passed &= ok;
        parts.push(format!("{name} {implied:.3} vs {expected:.3}"));
    }
    let (implied, expected, perimeter) = heat_imbalance(&flat)?;
    passed &= (implied - expected).abs() <= 0.25 * perimeter;
    parts.push(format!("problem I {implied:.3} (allowed {:.3})", 0.25 * perimeter));
    outcome(passed, parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Result<Outcome>); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (n, f) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!passed);
        println!(
            "criterion {n:>2}: {} ({:.1}s) {detail}",
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
