//! Command-line front end for the curvature engine: inspect the metric
//! catalog, scan grids or paths emitting per-point curvature reports,
//! and run the verification suites against a metric.
//!
//! Exit codes: 0 success, 1 suite failure, 2 usage/input error,
//! 3 scan completed with evaluation flags (non-finite values or
//! divergence candidates).

mod config;
mod report;

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semireg_core::catalog;
use semireg_core::curvature::{divergence_candidate, riemann, ricci, scalar_curvature};
use semireg_core::einstein::densitized_einstein;
use semireg_core::geometry::evaluate_point;
use semireg_core::suites;
use semireg_core::MetricField;

use config::{parse_grid, parse_path, resolve_metric, Axis, Region, UsageError};
use report::{CsvLayout, FlagsOut, Output, PointReport, ResidualsOut, SignatureOut, TensorEntry};

#[derive(Parser)]
#[command(
    name = "semireg",
    about = "Curvature engine for singular semi-Riemannian metrics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct MetricSource {
    /// Metric definition file (JSON; see README for the schema)
    #[arg(long, value_name = "FILE")]
    metric: Option<PathBuf>,
    /// Built-in catalog entry name (see `semireg info`)
    #[arg(long, value_name = "NAME", conflicts_with = "metric")]
    catalog: Option<String>,
    /// Catalog parameter, repeatable: -p k=v
    #[arg(long = "param", short = 'p', value_name = "K=V")]
    params: Vec<String>,
}

#[derive(clap::Args)]
struct RegionArgs {
    /// Grid: comma-separated coord=min:max:steps (unlisted coords fixed at 0)
    #[arg(long, value_name = "SPEC")]
    grid: Option<String>,
    /// Path: comma-separated coord=expr in the parameter s
    #[arg(long, value_name = "SPEC", conflicts_with = "grid", requires = "range")]
    path: Option<String>,
    /// Parameter range for --path: min:max:steps
    #[arg(long, value_name = "RANGE", allow_hyphen_values = true)]
    range: Option<String>,
}

#[derive(clap::Args)]
struct Tolerances {
    /// Relative eigenvalue cutoff for the rank decision
    #[arg(long, default_value_t = 1e-9)]
    tol_rank: f64,
    /// Residual tolerance for identities and symmetry checks
    #[arg(long, default_value_t = 1e-8)]
    tol_residual: f64,
}

#[derive(Subcommand)]
enum Command {
    /// List catalog entries, or show details for one
    Info {
        /// Entry name
        name: Option<String>,
    },
    /// Evaluate curvature on a grid or path, one report per point
    Scan {
        #[command(flatten)]
        source: MetricSource,
        #[command(flatten)]
        region: RegionArgs,
        /// Requested outputs (repeatable or comma-separated)
        #[arg(long, value_delimiter = ',', default_value = "classify")]
        outputs: Vec<Output>,
        /// Output format
        #[arg(long, default_value = "json")]
        format: Format,
        /// Output file (stdout when omitted)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: Tolerances,
        /// Seed recorded for reproducibility (scans are deterministic)
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the verification suites against a metric
    Check {
        #[command(flatten)]
        source: MetricSource,
        #[command(flatten)]
        region: RegionArgs,
        /// Sample points for the point-sampled suites
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[command(flatten)]
        tol: Tolerances,
        /// Seed for the randomized suites
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Info { name } => cmd_info(name.as_deref()),
        Command::Scan {
            source,
            region,
            outputs,
            format,
            out,
            tol,
            seed,
        } => cmd_scan(source, region, outputs, format, out, tol, seed),
        Command::Check {
            source,
            region,
            points,
            tol,
            seed,
        } => cmd_check(source, region, points, tol, seed),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn cmd_info(name: Option<&str>) -> Result<ExitCode, UsageError> {
    let entries = catalog::entries();
    match name {
        None => {
            println!("{:<16} SUMMARY", "NAME");
            for e in &entries {
                println!("{:<16} {}", e.name, e.summary);
            }
            println!("\nUse `semireg info NAME` for parameters and expected facts.");
        }
        Some(name) => {
            let entry = entries
                .iter()
                .find(|e| e.name == name)
                .ok_or_else(|| UsageError(format!("unknown catalog entry `{name}`")))?;
            println!("{}: {}", entry.name, entry.summary);
            if entry.params_help.is_empty() {
                println!("  parameters: none");
            } else {
                println!("  parameters:");
                for p in entry.params_help {
                    println!("    {p}");
                }
            }
            let facts = (entry.expected)();
            if !facts.is_empty() {
                println!("  expected facts (re-derived by the test suite):");
                for f in facts {
                    println!("    - {}", f.description);
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn build_region(args: &RegionArgs, field: &MetricField) -> Result<Region, UsageError> {
    match (&args.grid, &args.path) {
        (Some(grid), None) => parse_grid(grid, field),
        (None, Some(path)) => {
            let range = args
                .range
                .as_deref()
                .ok_or_else(|| UsageError("--path requires --range".into()))?;
            parse_path(path, range, field)
        }
        // default: the origin only
        (None, None) => Ok(Region::Grid(vec![
            Axis {
                min: 0.0,
                max: 0.0,
                steps: 1
            };
            field.n()
        ])),
        (Some(_), Some(_)) => Err(UsageError("--grid and --path are mutually exclusive".into())),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_scan(
    source: MetricSource,
    region_args: RegionArgs,
    mut outputs: Vec<Output>,
    format: Format,
    out: Option<PathBuf>,
    tol: Tolerances,
    _seed: u64,
) -> Result<ExitCode, UsageError> {
    let field = resolve_metric(&source.metric, &source.catalog, &source.params)?;
    outputs.sort();
    outputs.dedup();
    if outputs.contains(&Output::EinsteinDensity) && field.n() != 4 {
        return Err(UsageError(format!(
            "einstein-density requires dimension 4, metric has dimension {}",
            field.n()
        )));
    }
    let region = build_region(&region_args, &field)?;
    let points = region.points()?;

    let stdout = std::io::stdout();
    let mut sink: BufWriter<Box<dyn Write>> = match &out {
        Some(path) => BufWriter::new(Box::new(std::fs::File::create(path).map_err(|e| {
            UsageError(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => BufWriter::new(Box::new(stdout.lock())),
    };

    let layout = CsvLayout::new(field.n(), field.coord_names(), &outputs);
    if format == Format::Csv {
        layout.write_header(&mut sink).map_err(io_err)?;
    }

    let mut flagged = 0usize;
    for p in &points {
        let report = scan_point(&field, p, &outputs, &tol);
        if report.flagged() {
            flagged += 1;
        }
        match format {
            Format::Json => {
                let line = serde_json::to_string(&report)
                    .map_err(|e| UsageError(format!("serialization failed: {e}")))?;
                writeln!(sink, "{line}").map_err(io_err)?;
            }
            Format::Csv => layout.write_row(&mut sink, &report).map_err(io_err)?,
        }
    }
    sink.flush().map_err(io_err)?;
    drop(sink);

    if flagged > 0 {
        eprintln!("scan: {flagged}/{} points flagged", points.len());
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn io_err(e: std::io::Error) -> UsageError {
    UsageError(format!("write failed: {e}"))
}

fn scan_point(field: &MetricField, p: &[f64], outputs: &[Output], tol: &Tolerances) -> PointReport {
    let n = field.n();
    let pg = match evaluate_point(field, p, tol.tol_rank) {
        Ok(pg) => pg,
        Err(e) => {
            return PointReport {
                point: p.to_vec(),
                rank: None,
                signature: None,
                flags: None,
                values: BTreeMap::new(),
                residuals: None,
                divergent: Vec::new(),
                eval_error: Some(e.to_string()),
            }
        }
    };
    let r = riemann(&pg);
    let mut values: BTreeMap<&'static str, Vec<TensorEntry>> = BTreeMap::new();
    let mut divergent: Vec<&'static str> = Vec::new();

    for out in outputs {
        match out {
            Output::Classify => {}
            Output::Koszul => {
                let mut entries = Vec::new();
                pg.koszul.for_each(|idx, v| {
                    entries.push(TensorEntry {
                        indices: idx.to_vec(),
                        value: v,
                    })
                });
                values.insert("koszul", entries);
            }
            Output::Riemann => {
                let mut entries = Vec::new();
                r.values.for_each(|idx, v| {
                    entries.push(TensorEntry {
                        indices: idx.to_vec(),
                        value: v,
                    })
                });
                values.insert("riemann", entries);
            }
            Output::Ricci => {
                let ric = ricci(&r, &pg.cm);
                let mut entries = Vec::new();
                let mut any_divergent = false;
                for a in 0..n {
                    for b in 0..n {
                        let v = ric.get(a, b);
                        any_divergent |= divergence_candidate(v, tol.tol_residual);
                        entries.push(TensorEntry {
                            indices: vec![a, b],
                            value: v,
                        });
                    }
                }
                if any_divergent {
                    divergent.push("ricci");
                }
                values.insert("ricci", entries);
            }
            Output::Scalar => {
                let ric = ricci(&r, &pg.cm);
                let s = scalar_curvature(&ric, &pg.cm, tol.tol_residual);
                if divergence_candidate(s.value, tol.tol_residual) {
                    divergent.push("scalar");
                }
                values.insert(
                    "scalar",
                    vec![TensorEntry {
                        indices: Vec::new(),
                        value: s.value,
                    }],
                );
            }
            Output::EinsteinDensity => {
                // guarded to n == 4 before the scan starts
                let dc = densitized_einstein(&r, &pg.g, &pg.cm).expect("dimension checked");
                let mut entries = Vec::new();
                for a in 0..4 {
                    for b in 0..4 {
                        entries.push(TensorEntry {
                            indices: vec![a, b],
                            value: dc.g_up_density.get(a, b),
                        });
                    }
                }
                values.insert("einstein_density", entries);
                values.insert(
                    "einstein_s_density",
                    vec![TensorEntry {
                        indices: Vec::new(),
                        value: dc.s_density,
                    }],
                );
            }
        }
    }

    let scale = r.residuals.norm.max(1.0);
    PointReport {
        point: p.to_vec(),
        rank: Some(pg.cm.rank),
        signature: Some(SignatureOut {
            zero: pg.cm.signature.zero,
            neg: pg.cm.signature.neg,
            pos: pg.cm.signature.pos,
        }),
        flags: Some(FlagsOut {
            nondegenerate: pg.flags.nondegenerate,
            radical_stationary: pg.flags.radical_stationary,
        }),
        values,
        residuals: Some(ResidualsOut {
            riemann_symmetry: r.residuals.max_relative(),
            radical_annihilation: r.residuals.radical_annihilation / scale,
        }),
        divergent,
        eval_error: None,
    }
}

fn cmd_check(
    source: MetricSource,
    region_args: RegionArgs,
    points: usize,
    tol: Tolerances,
    seed: u64,
) -> Result<ExitCode, UsageError> {
    let field = resolve_metric(&source.metric, &source.catalog, &source.params)?;
    let n = field.n();

    // sample points: from the region when one is given, else a seeded box
    let sample: Vec<Vec<f64>> = if region_args.grid.is_some() || region_args.path.is_some() {
        build_region(&region_args, &field)?.points()?
    } else {
        suites::sample_box(seed, n, -1.0, 1.0, points)
    };

    let mut results = vec![
        suites::koszul_identity_suite(&field, &sample, seed ^ 0x1, tol.tol_residual),
        suites::riemann_symmetry_suite(&field, &sample, tol.tol_residual),
        suites::penrose_suite(Some(&field), &sample, seed ^ 0x2, 200, 1e-9),
        suites::contraction_dual_path_suite(seed ^ 0x3, 100, 1e-10),
        suites::oracle_suite(&field, &sample, 1e-7),
        suites::radical_stationarity_suite(&field, &sample, tol.tol_rank),
        suites::metric_parallel_suite(&field, &sample, seed ^ 0x4, 1e-9),
    ];

    let mut all_passed = true;
    for r in &mut results {
        // the oracle suite legitimately has nothing to say on totally
        // degenerate metrics; report but do not fail on zero cases
        if r.cases == 0 && r.name == "levi-civita-oracle" {
            r.passed = true;
            r.detail.push_str(" (no non-degenerate points sampled)");
        }
        all_passed &= r.passed;
        println!(
            "{} {:<24} max_residual={:<12.3e} tol={:<9.1e} cases={} {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.max_residual,
            r.tolerance,
            r.cases,
            r.detail
        );
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
