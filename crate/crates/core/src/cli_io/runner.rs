use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{DomainConfig, ExperimentConfig, TaskKind};
use super::figure::{domain_svg, mesh_svg, nu_heatmap_svg};
use crate::analysis::{
    check_independent_pair, check_symmetric_pair, compare_first_eigenvalues, compare_spectra, cover_check,
    cover_meshes, extrapolate_lowest, heat_fit, heat_trace, length_balance, sweep_disk, sweep_mesh,
    symmetric_half_pair, FirstEigenvalueComparison, MeshDescriptor,
};
use crate::assembly::{assemble, assemble_full, eliminate};
use crate::dtn::{build_quarter_geometry, check_crossings};
use crate::eigensolve::{cluster_ids, solve_lowest};
use crate::error::{Error, Result};
use crate::geometry::{boundary_lengths, build_quarter_sphere_trio, DomainSpec};
use crate::mesh::io::{write_mesh, write_vtk};
use crate::mesh::{mesh_four_blocks, mesh_unstructured, Mesh};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "ZAREMBA_OUT";

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        CheckOutcome {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            detail: format!("{value:.3e} <= {threshold:.3e}"),
        }
    }

    fn flag(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.into(),
            passed,
            value: if passed { 1.0 } else { 0.0 },
            threshold: 1.0,
            detail,
        }
    }
}

/// The JSON document of one run. Wall-times are kept out of it so that
/// re-running a config reproduces it byte for byte.
#[derive(Clone, Debug, Serialize)]
pub struct ResultBundle {
    pub tool_version: String,
    pub config: ExperimentConfig,
    pub meshes: Vec<MeshDescriptor>,
    /// Mesh files written next to the bundle, sufficient to re-run without meshing.
    pub mesh_files: Vec<String>,
    pub report: Value,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub bundle: ResultBundle,
    /// `(file name, contents)`
    pub tables: Vec<(String, String)>,
    pub figures: Vec<(String, String)>,
    pub mesh_data: Vec<(String, String)>,
    pub advisories: BTreeMap<String, String>,
    pub timings: BTreeMap<String, f64>,
}

struct Builder {
    meshes: Vec<MeshDescriptor>,
    mesh_data: Vec<(String, String)>,
    tables: Vec<(String, String)>,
    figures: Vec<(String, String)>,
    checks: Vec<CheckOutcome>,
    advisories: BTreeMap<String, String>,
    timings: BTreeMap<String, f64>,
    clock: Instant,
}

impl Builder {
    fn new() -> Self {
        Builder {
            meshes: Vec::new(),
            mesh_data: Vec::new(),
            tables: Vec::new(),
            figures: Vec::new(),
            checks: Vec::new(),
            advisories: BTreeMap::new(),
            timings: BTreeMap::new(),
            clock: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        self.timings.insert(stage.into(), self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }

    fn mesh(&mut self, mesh: &Mesh, file: &str, label: &str) {
        self.meshes.push(MeshDescriptor::of(mesh, label));
        self.mesh_data.push((format!("meshes/{file}.mesh"), write_mesh(mesh)));
    }
}

fn csv_row(cols: &[String]) -> String {
    let mut s = cols.join(",");
    s.push('\n');
    s
}

fn e(v: f64) -> String {
    format!("{v:.16e}")
}

/// Four-block mesh when the family has one and `mesh.symmetric` is set, else unstructured.
pub fn primary_mesh(cfg: &ExperimentConfig, d: &DomainConfig, spec: &DomainSpec) -> Result<(Mesh, &'static str)> {
    match d.four_block_alpha() {
        Some(alpha) if cfg.mesh.symmetric => Ok((mesh_four_blocks(spec, alpha, cfg.mesh.h)?, "four-block reflection mesh")),
        _ => Ok((mesh_unstructured(spec, cfg.mesh.h, cfg.mesh.seed)?, "unstructured")),
    }
}

fn run_solve(cfg: &ExperimentConfig, b: &mut Builder) -> Result<Value> {
    let d = cfg.domain()?;
    let spec = d.build(cfg.weight)?;
    let (mesh, label) = primary_mesh(cfg, d, &spec)?;
    b.mesh(&mesh, "mesh", label);
    b.figures.push(("domain.svg".into(), domain_svg(&spec, &cfg.name)));
    b.lap("mesh");
    let count = cfg.solver.count;
    let first;
    let report = if cfg.mesh.refinements == 1 {
        let x = extrapolate_lowest(&mesh, &spec.weight, count, cfg.solver.tol)?;
        let mut t = csv_row(&["mode,coarse,fine,extrapolated,error".into()]);
        for i in 0..x.values.len() {
            t.push_str(&csv_row(&[i.to_string(), e(x.coarse[i]), e(x.fine[i]), e(x.values[i]), e(x.errors[i])]));
        }
        b.tables.push(("spectrum.csv".into(), t));
        if !x.non_monotone.is_empty() {
            b.advisories.insert(
                "non_monotone".into(),
                format!("modes {:?} increase under refinement; their extrapolation is unreliable", x.non_monotone),
            );
        }
        first = x.values[0];
        json!({ "extrapolation": x })
    } else {
        let pair = assemble(&mesh, &spec.weight)?;
        let (s, basis) = solve_lowest(&pair, count, cfg.solver.tol)?;
        let ids = cluster_ids(&s);
        let mut t = csv_row(&["mode,lambda,residual,cluster".into()]);
        for i in 0..s.values.len() {
            t.push_str(&csv_row(&[i.to_string(), e(s.values[i]), e(s.residuals[i]), ids[i].to_string()]));
        }
        b.tables.push(("spectrum.csv".into(), t));
        let modes: Vec<(String, Vec<f64>)> = basis
            .vectors
            .iter()
            .take(4)
            .enumerate()
            .map(|(i, u)| (format!("mode_{i}"), pair.expand(u)))
            .collect();
        let fields: Vec<(&str, &[f64])> = modes.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
        b.mesh_data.push(("modes.vtk".into(), write_vtk(&mesh, &fields)));
        b.figures.push((
            "mode_0.svg".into(),
            mesh_svg(&mesh, Some(&modes[0].1), &format!("{} mode 0", cfg.name)),
        ));
        first = s.values[0];
        json!({ "spectrum": s })
    };
    b.lap("solve");
    if let Some([lo, hi]) = cfg.check.first_in {
        b.checks.push(CheckOutcome {
            name: "first eigenvalue in range".into(),
            passed: first >= lo && first <= hi,
            value: first,
            threshold: hi,
            detail: format!("{first:.6} in [{lo}, {hi}]"),
        });
    }
    Ok(report)
}

fn gap_table(a: &[f64], b: &[f64]) -> String {
    let mut t = csv_row(&["mode,first,second,relative_gap".into()]);
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        t.push_str(&csv_row(&[i.to_string(), e(*x), e(*y), e((x - y).abs() / x.abs().max(y.abs()))]));
    }
    t
}

fn run_compare(cfg: &ExperimentConfig, b: &mut Builder) -> Result<Value> {
    let d = cfg.domain()?;
    let first = d.build(cfg.weight)?;
    let second = first.swapped();
    b.figures.push(("domain_first.svg".into(), domain_svg(&first, "first")));
    b.figures.push(("domain_second.svg".into(), domain_svg(&second, "second")));
    let balance = length_balance(&first, &second);
    let count = cfg.solver.count;
    let report = match (d.four_block_alpha(), d) {
        (Some(alpha), _) if cfg.mesh.symmetric => {
            let residual_tol = cfg.check.residual_tol.unwrap_or(1e-9);
            let c = check_symmetric_pair(&first, alpha, cfg.mesh.h, count, residual_tol)?;
            b.mesh(&mesh_four_blocks(&first, alpha, cfg.mesh.h)?, "mesh", "four-block reflection mesh");
            b.tables.push(("compare.csv".into(), gap_table(&c.first.values, &c.second.values)));
            let tol = cfg.check.rel_tol.unwrap_or(1e-8);
            b.checks.push(CheckOutcome::at_most("spectra agree", c.max_relative_gap, tol));
            b.checks.push(CheckOutcome::flag(
                "cluster multiplicities agree",
                c.clusters_match(),
                format!("{:?} vs {:?}", c.clusters.0, c.clusters.1),
            ));
            for (name, r) in [("forward transplantation", &c.forward), ("inverse transplantation", &c.inverse)] {
                b.checks.push(CheckOutcome {
                    name: name.into(),
                    passed: r.passed(),
                    value: r.max_residual(),
                    threshold: residual_tol,
                    detail: r.reason.clone().unwrap_or_else(|| format!("max residual {:.3e}", r.max_residual())),
                });
            }
            json!({ "symmetric": c, "nu": compare_spectra(&c.first.values, &c.second.values, count)?.0 })
        }
        (_, DomainConfig::DiskPartition { .. }) if cfg.mesh.symmetric => {
            let mesh = sweep_mesh(cfg.mesh.h)?;
            let full = assemble_full(&mesh, &first.weight)?;
            let mut spectra = Vec::new();
            for spec in [&first, &second] {
                let pair = eliminate(&full, &mesh.retag_from(spec)?.dirichlet_vertices())?;
                spectra.push(solve_lowest(&pair, count, cfg.solver.tol)?.0);
            }
            b.mesh(&mesh, "mesh", "disk, reflection symmetric at multiples of pi/24");
            let (nu, diffs) = compare_spectra(&spectra[0].values, &spectra[1].values, count)?;
            b.tables.push(("compare.csv".into(), gap_table(&spectra[0].values, &spectra[1].values)));
            let gap = spectra[0]
                .values
                .iter()
                .zip(&spectra[1].values)
                .map(|(x, y)| (x - y).abs() / x.abs())
                .fold(0.0, f64::max);
            b.checks.push(CheckOutcome::at_most("spectra agree", gap, cfg.check.rel_tol.unwrap_or(1e-8)));
            json!({ "first": spectra[0], "second": spectra[1], "nu": nu, "differences": diffs })
        }
        _ => {
            let seeds = (cfg.mesh.seed, cfg.mesh.seed.wrapping_add(1));
            let c = check_independent_pair(&first, &second, cfg.mesh.h, seeds, count)?;
            for (name, x) in [("first", &c.first), ("second", &c.second)] {
                if !x.non_monotone.is_empty() {
                    b.advisories.insert(format!("non_monotone_{name}"), format!("modes {:?}", x.non_monotone));
                }
            }
            b.mesh(&mesh_unstructured(&first, cfg.mesh.h, seeds.0)?, "first", "first problem, coarse");
            b.mesh(&mesh_unstructured(&second, cfg.mesh.h, seeds.1)?, "second", "second problem, coarse");
            b.tables.push(("compare.csv".into(), gap_table(&c.first.values, &c.second.values)));
            b.checks.push(CheckOutcome::at_most("extrapolated spectra agree", c.max_relative_gap, cfg.check.rel_tol.unwrap_or(2e-3)));
            json!({ "independent": c })
        }
    };
    b.lap("compare");
    b.checks.push(CheckOutcome::at_most("boundary lengths balance", balance.gap, crate::analysis::LENGTH_TOL));
    Ok(json!({ "comparison": report, "length_balance": balance }))
}

fn run_sweep(cfg: &ExperimentConfig, b: &mut Builder) -> Result<Value> {
    let s = cfg.sweep.clone().unwrap_or_default();
    let table = sweep_disk(cfg.mesh.h, s.eigencount, s.max_index)?;
    b.lap("sweep");
    b.mesh(&sweep_mesh(cfg.mesh.h)?, "mesh", "disk, reflection symmetric at multiples of pi/24");
    b.tables.push(("nu.csv".into(), table.to_csv()));
    b.figures.push(("nu.svg".into(), nu_heatmap_svg(&table)));
    let failed: Vec<String> = table
        .cells
        .iter()
        .filter_map(|c| c.error.as_ref().map(|e| format!("({}, {}): {e}", c.k, c.n)))
        .collect();
    if !failed.is_empty() {
        b.advisories.insert("failed_cells".into(), failed.join("; "));
    }
    if let (Some(diag), Some((k, n, off))) = (table.max_diagonal(), table.min_off_diagonal()) {
        b.checks.push(CheckOutcome::at_most("diagonal an order of magnitude below every nontrivial cell", 10.0 * diag, off));
        if s.max_index == 12 {
            b.checks.push(CheckOutcome::flag(
                "nontrivial minimum at (11, 12)",
                (k, n) == (11, 12),
                format!("minimum {off:.6e} at ({k}, {n})"),
            ));
        }
    } else {
        b.checks.push(CheckOutcome::flag("sweep complete", false, "cells failed".into()));
    }
    Ok(json!({ "table": table }))
}

fn run_dtn(cfg: &ExperimentConfig, b: &mut Builder) -> Result<Value> {
    let grid = cfg.scan.clone().unwrap_or_default().grid;
    let c = check_crossings(cfg.mesh.h, cfg.solver.count, grid)?;
    b.lap("scan");
    b.mesh(&build_quarter_geometry(cfg.mesh.h)?.mesh, "quarter_disk", "quarter disk, symmetric about 3pi/4");
    b.tables.push(("scan.csv".into(), c.scan.to_csv()));
    let mut t = csv_row(&["mode,direct_i,direct_ii,crossing,relative_error".into()]);
    for (i, m) in c.matches.iter().enumerate() {
        t.push_str(&csv_row(&[i.to_string(), e(c.direct_i[i]), e(c.direct_ii[i]), e(m.0), e(m.1)]));
    }
    b.tables.push(("crossings.csv".into(), t));
    if !c.scan.flagged.is_empty() {
        let f: Vec<String> = c.scan.flagged.iter().map(|f| format!("{:.10}: {}", f.lambda, f.reason)).collect();
        b.advisories.insert("flagged_sign_changes".into(), f.join("; "));
    }
    b.checks.push(CheckOutcome::at_most("crossings match direct eigenvalues", c.max_relative_error, cfg.check.rel_tol.unwrap_or(1e-3)));
    b.checks.push(CheckOutcome::flag(
        "no unmatched crossings",
        c.extra.is_empty() && c.scan.crossings.len() == c.direct_i.len(),
        format!("{} crossings for {} eigenvalues, extra {:?}", c.scan.crossings.len(), c.direct_i.len(), c.extra),
    ));
    Ok(json!({ "crossings": c }))
}

fn run_cover(cfg: &ExperimentConfig, b: &mut Builder) -> Result<Value> {
    let c = cover_check(cfg.mesh.h, cfg.solver.count)?;
    b.lap("cover");
    let (half, cover) = cover_meshes(cfg.mesh.h)?;
    b.mesh(&half, "upper_half_disk", "upper half-disk");
    b.mesh(&cover, "double_cover", "double cover");
    let mut t = csv_row(&["cluster,half_disk,half_disk_multiplicity,odd,odd_multiplicity".into()]);
    for (i, (h, o)) in c.half_disk_clusters.iter().zip(&c.odd_clusters).enumerate() {
        t.push_str(&csv_row(&[i.to_string(), e(h.0), h.1.to_string(), e(o.0), o.1.to_string()]));
    }
    b.tables.push(("cover.csv".into(), t));
    b.checks.push(CheckOutcome::at_most("odd spectrum matches Problem I", c.max_relative_gap, cfg.check.rel_tol.unwrap_or(1e-3)));
    b.checks.push(CheckOutcome::flag("multiplicities doubled", c.doubled, format!("{:?}", c.odd_clusters.iter().map(|x| x.1).collect::<Vec<_>>())));
    Ok(json!({ "cover": c }))
}

fn run_heat(cfg: &ExperimentConfig, b: &mut Builder) -> Result<Value> {
    let d = cfg.domain()?;
    let spec = d.build(cfg.weight)?;
    let (mesh, label) = primary_mesh(cfg, d, &spec)?;
    b.mesh(&mesh, "mesh", label);
    let area: f64 = assemble_full(&mesh, &spec.weight)?.mass.mul_vec(&vec![1.0; mesh.num_vertices()]).iter().sum();
    let (s, _) = solve_lowest(&assemble(&mesh, &spec.weight)?, cfg.solver.count, cfg.solver.tol)?;
    b.lap("solve");
    let fit = heat_fit(&s.values, area, None)?;
    let (ld, ln) = boundary_lengths(&spec);
    let expected = ln - ld;
    let perimeter = ld + ln;
    let frac = cfg.check.rel_tol.unwrap_or(0.25);
    let mut t = csv_row(&["t,trace,fitted".into()]);
    let (t0, t1) = fit.window;
    for k in 0..32 {
        let tt = t0 * (t1 / t0).powf(k as f64 / 31.0);
        let model = fit.area_term / (4.0 * std::f64::consts::PI * tt) + fit.c / tt.sqrt() + fit.d;
        t.push_str(&csv_row(&[e(tt), e(heat_trace(&s.values, tt)), e(model)]));
    }
    b.tables.push(("heat.csv".into(), t));
    b.checks.push(CheckOutcome {
        name: "implied imbalance matches L_N - L_D".into(),
        passed: (fit.implied_imbalance - expected).abs() <= frac * perimeter,
        value: fit.implied_imbalance,
        threshold: frac * perimeter,
        detail: format!("implied {:.4}, L_N - L_D = {expected:.4}, allowed {:.4}", fit.implied_imbalance, frac * perimeter),
    });
    let balance = if d.swappable() {
        let r = length_balance(&spec, &spec.swapped());
        b.checks.push(CheckOutcome::at_most("boundary lengths balance", r.gap, crate::analysis::LENGTH_TOL));
        Some(r)
    } else {
        None
    };
    Ok(json!({ "fit": fit, "area": area, "lengths": { "dirichlet": ld, "neumann": ln }, "length_balance": balance, "eigenvalues": s.values }))
}

fn comparison_rows(t: &mut String, name: &str, c: &FirstEigenvalueComparison) {
    t.push_str(&csv_row(&[format!("{name}_lower"), e(c.lower.values[0]), e(c.lower.errors[0])]));
    t.push_str(&csv_row(&[format!("{name}_upper"), e(c.upper.values[0]), e(c.upper.errors[0])]));
}

fn run_symmetry(cfg: &ExperimentConfig, b: &mut Builder) -> Result<Value> {
    let (h, seed) = (cfg.mesh.h, cfg.mesh.seed);
    let mut t = csv_row(&["problem,lambda1,error".into()]);
    let report = match cfg.domain()? {
        DomainConfig::QuarterSphereTrio => {
            let trio = build_quarter_sphere_trio()?;
            let (r1, r2) = rayon::join(
                || compare_first_eigenvalues(&trio.axisymmetric_1, &trio.central, h, seed),
                || compare_first_eigenvalues(&trio.axisymmetric_2, &trio.central, h, seed.wrapping_add(2)),
            );
            let (r1, r2) = (r1?, r2?);
            for (name, spec) in [("axisymmetric_1", &trio.axisymmetric_1), ("axisymmetric_2", &trio.axisymmetric_2), ("central", &trio.central)] {
                b.figures.push((format!("{name}.svg"), domain_svg(spec, name)));
            }
            comparison_rows(&mut t, "a1_vs_c", &r1);
            comparison_rows(&mut t, "a2_vs_c", &r2);
            for (name, r) in [("central above axisymmetric_1", &r1), ("central above axisymmetric_2", &r2)] {
                b.checks.push(CheckOutcome {
                    name: name.into(),
                    passed: r.strictly_ordered(),
                    value: r.margin,
                    threshold: r.error,
                    detail: format!("margin {:.4e} vs error {:.4e}", r.margin, r.error),
                });
            }
            let l = r2.lower.values[0];
            b.checks.push(CheckOutcome::at_most("axisymmetric_2 first eigenvalue equals 2", (l - 2.0).abs() / 2.0, cfg.check.rel_tol.unwrap_or(1e-2)));
            json!({ "axisymmetric_1_vs_central": r1, "axisymmetric_2_vs_central": r2 })
        }
        DomainConfig::SymmetricHalf { theta } => {
            let (a, c) = symmetric_half_pair(*theta, cfg.weight.metric())?;
            b.figures.push(("axisymmetric.svg".into(), domain_svg(&a, "axisymmetric")));
            b.figures.push(("central.svg".into(), domain_svg(&c, "central")));
            let r = compare_first_eigenvalues(&a, &c, h, seed)?;
            comparison_rows(&mut t, "a_vs_c", &r);
            b.checks.push(CheckOutcome {
                name: "axisymmetric and central agree".into(),
                passed: r.equal_within_error(),
                value: r.margin.abs(),
                threshold: r.error,
                detail: format!("|margin| {:.4e} vs error {:.4e}", r.margin.abs(), r.error),
            });
            json!({ "axisymmetric_vs_central": r })
        }
        d => return Err(Error::Config(format!("symmetry-pair cannot use {}", d.family()))),
    };
    b.lap("symmetry");
    b.tables.push(("symmetry.csv".into(), t));
    Ok(report)
}

/// Execute a validated config.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut b = Builder::new();
    let report = match cfg.task {
        TaskKind::Solve => run_solve(cfg, &mut b)?,
        TaskKind::Compare => run_compare(cfg, &mut b)?,
        TaskKind::Sweep => run_sweep(cfg, &mut b)?,
        TaskKind::DtnScan => run_dtn(cfg, &mut b)?,
        TaskKind::CoverCheck => run_cover(cfg, &mut b)?,
        TaskKind::HeatFit => run_heat(cfg, &mut b)?,
        TaskKind::SymmetryPair => run_symmetry(cfg, &mut b)?,
    };
    let passed = b.checks.iter().all(|c| c.passed);
    let bundle = ResultBundle {
        tool_version: format!("zaremba {}", env!("CARGO_PKG_VERSION")),
        config: cfg.clone(),
        meshes: b.meshes,
        mesh_files: b.mesh_data.iter().map(|m| m.0.clone()).filter(|n| n.ends_with(".mesh")).collect(),
        report,
        checks: b.checks,
        passed,
    };
    Ok(RunOutput {
        bundle,
        tables: b.tables,
        figures: b.figures,
        mesh_data: b.mesh_data,
        advisories: b.advisories,
        timings: b.timings,
    })
}

/// `explicit`, else the config's `output` under the root, else `root/name`.
/// The root is `$ZAREMBA_OUT` or `results`.
pub fn output_dir(cfg: &ExperimentConfig, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("results"), PathBuf::from);
    match &cfg.output {
        Some(o) if Path::new(o).is_absolute() => PathBuf::from(o),
        Some(o) => root.join(o),
        None => root.join(&cfg.name),
    }
}

/// Write `bundle.json`, tables, figures, meshes, `advisory.json` and
/// `timings.json` into `dir`. Returns the files written.
pub fn write_output(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = vec![
        ("bundle.json".to_string(), serde_json::to_string_pretty(&out.bundle)? + "\n"),
        ("advisory.json".to_string(), serde_json::to_string_pretty(&out.advisories)? + "\n"),
        ("timings.json".to_string(), serde_json::to_string_pretty(&out.timings)? + "\n"),
    ];
    files.extend(out.tables.iter().cloned());
    files.extend(out.figures.iter().cloned());
    files.extend(out.mesh_data.iter().cloned());
    let mut written = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = dir.join(&name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn compare_bundle_is_reproducible() {
        let c = cfg("name = \"t\"\ntask = \"compare\"\n[domain]\nfamily = \"half_disk\"\nvariant = \"I\"\n[mesh]\nh = 0.2\n[solver]\ncount = 6\n");
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert!(a.bundle.passed, "{:?}", a.bundle.checks);
        let ja = serde_json::to_string(&a.bundle).unwrap();
        assert_eq!(ja, serde_json::to_string(&b.bundle).unwrap());
        assert_eq!(a.tables, b.tables);
        let dir = tempfile::tempdir().unwrap();
        let files = write_output(&a, dir.path()).unwrap();
        assert!(files.iter().any(|f| f.ends_with("meshes/mesh.mesh")));
        let adv = std::fs::read_to_string(dir.path().join("advisory.json")).unwrap();
        assert_eq!(adv.trim(), "{}");
    }

    #[test]
    fn solve_reports_range_check() {
        let c = cfg("name = \"s\"\ntask = \"solve\"\n[domain]\nfamily = \"uniform_disk\"\ntag = \"dirichlet\"\n[mesh]\nh = 0.2\n[solver]\ncount = 3\n[check]\nfirst_in = [5.0, 6.0]\n");
        let out = run(&c).unwrap();
        assert!(out.bundle.passed, "{:?}", out.bundle.checks);
        assert!(out.mesh_data.iter().any(|m| m.0 == "modes.vtk"));
    }

    #[test]
    fn output_dir_rules() {
        let mut c = cfg("name = \"x\"\ntask = \"cover-check\"\n");
        assert_eq!(output_dir(&c, Some(Path::new("/tmp/o"))), PathBuf::from("/tmp/o"));
        c.output = Some("/abs/dir".into());
        assert_eq!(output_dir(&c, None), PathBuf::from("/abs/dir"));
    }
}
