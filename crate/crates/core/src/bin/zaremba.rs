use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use zaremba::assembly::assemble;
use zaremba::cli_io::config::SweepConfig;
use zaremba::cli_io::figure::{domain_svg, mesh_svg};
use zaremba::cli_io::{catalog, find_config, output_dir, primary_mesh, run, write_output, ExperimentConfig, OUTPUT_ROOT_VAR};
use zaremba::eigensolve::solve_lowest;
use zaremba::mesh::io::write_vtk;
use zaremba::Error;

#[derive(Parser)]
#[command(name = "zaremba", version, about = "Mixed Dirichlet-Neumann eigenvalue experiments")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run configs (file paths or catalog names) and write their result bundles.
    Run {
        #[arg(required = true)]
        configs: Vec<String>,
        /// Mesh size override.
        #[arg(long)]
        h: Option<f64>,
        /// Mode count override.
        #[arg(long)]
        count: Option<usize>,
        /// Output directory (single config only); default is $ZAREMBA_OUT/<name>.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Disk-partition sweep without a config file.
    Sweep {
        #[arg(long, default_value_t = 0.06)]
        h: f64,
        #[arg(long, default_value_t = 3)]
        eigencount: usize,
        #[arg(long, default_value_t = 12)]
        max_index: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the shipped configs.
    List,
    /// Write a figure or grid file for a config's domain.
    Export {
        config: String,
        #[arg(long, value_enum, default_value_t = What::Domain)]
        what: What,
        #[arg(long)]
        h: Option<f64>,
        /// Number of modes in `modes` exports.
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check configs against the schema without running them.
    Validate {
        configs: Vec<String>,
        /// Validate every catalog entry.
        #[arg(long)]
        catalog: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    /// Boundary curves as SVG.
    Domain,
    /// Mesh as SVG.
    MeshSvg,
    /// Mesh and first modes as legacy VTK.
    Modes,
    /// First mode as a filled SVG.
    ModeSvg,
}

enum Failure {
    Checks,
    Err(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Err(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn report(e: &Error) {
    let kind = match exit_code(e) {
        2 => "config",
        4 => "io",
        _ => "numerical",
    };
    eprintln!("{}", serde_json::json!({ "error": kind, "message": e.to_string() }));
}

fn overrides(mut cfg: ExperimentConfig, h: Option<f64>, count: Option<usize>) -> Result<ExperimentConfig, Error> {
    if let Some(h) = h {
        cfg.mesh.h = h;
    }
    if let Some(c) = count {
        cfg.solver.count = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig, out: Option<&std::path::Path>) -> Result<bool, Error> {
    let dir = output_dir(cfg, out);
    let result = run(cfg)?;
    write_output(&result, &dir)?;
    for c in &result.bundle.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    for (k, v) in &result.advisories {
        println!("advisory {k}: {v}");
    }
    println!("{} -> {}", cfg.name, dir.display());
    Ok(result.bundle.passed)
}

fn main_inner(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Run { configs, h, count, out } => {
            if out.is_some() && configs.len() > 1 {
                return Err(Error::Config("--out needs a single config".into()).into());
            }
            // validate everything first so a bad config leaves no partial output
            let cfgs = configs
                .iter()
                .map(|c| overrides(find_config(c)?, h, count))
                .collect::<Result<Vec<_>, _>>()?;
            let mut ok = true;
            for cfg in &cfgs {
                ok &= execute(cfg, out.as_deref())?;
            }
            if !ok {
                return Err(Failure::Checks);
            }
        }
        Command::Sweep { h, eigencount, max_index, out } => {
            let mut cfg = find_config("disk-sweep")?;
            cfg.mesh.h = h;
            cfg.sweep = Some(SweepConfig { max_index, eigencount });
            cfg.validate()?;
            if !execute(&cfg, out.as_deref())? {
                return Err(Failure::Checks);
            }
        }
        Command::List => {
            for e in catalog() {
                let c = e.config()?;
                println!("{:<24} {:<14} {}", e.name, format!("{:?}", c.task), c.description);
            }
            println!("output root: ${OUTPUT_ROOT_VAR} (default ./results)");
        }
        Command::Export { config, what, h, count, out } => {
            let cfg = overrides(find_config(&config)?, h, None)?;
            let d = cfg.domain()?;
            let spec = d.build(cfg.weight)?;
            let text = match what {
                What::Domain => domain_svg(&spec, &cfg.name),
                _ => {
                    let (mesh, _) = primary_mesh(&cfg, d, &spec)?;
                    match what {
                        What::MeshSvg => mesh_svg(&mesh, None, &cfg.name),
                        _ => {
                            let pair = assemble(&mesh, &spec.weight)?;
                            let (s, basis) = solve_lowest(&pair, count.max(1), cfg.solver.tol)?;
                            let modes: Vec<(String, Vec<f64>)> = basis
                                .vectors
                                .iter()
                                .zip(&s.values)
                                .enumerate()
                                .map(|(i, (u, l))| (format!("mode_{i}_lambda_{l:.6}"), pair.expand(u)))
                                .collect();
                            if matches!(what, What::ModeSvg) {
                                mesh_svg(&mesh, Some(&modes[0].1), &modes[0].0)
                            } else {
                                let f: Vec<(&str, &[f64])> = modes.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
                                write_vtk(&mesh, &f)
                            }
                        }
                    }
                }
            };
            match out {
                Some(p) => std::fs::write(p, text).map_err(Error::from)?,
                None => print!("{text}"),
            }
        }
        Command::Validate { configs, catalog: all } => {
            let mut names: Vec<String> = configs;
            if all {
                names.extend(catalog().iter().map(|e| e.name.to_string()));
            }
            if names.is_empty() {
                return Err(Error::Config("nothing to validate".into()).into());
            }
            let mut first_err = None;
            for n in &names {
                match find_config(n) {
                    Ok(c) => println!("ok {n} ({:?})", c.task),
                    Err(e) => {
                        println!("invalid {n}: {e}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_err {
                return Err(e.into());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Err(e)) => {
            report(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}

