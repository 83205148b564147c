use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mmbm::error::{CliError, CliResult};
use mmbm::experiment::{run_discretization_sweep, run_stability_replay, Experiment};
use mmbm::io::{
    load_model, load_space, parse_cells, parse_metric, read_json, write_text, CouplingFile, CrossFile, SpaceFile,
};
use mmbm::report::{indices_label, to_csv, to_json, BMReportJson, CsvRow, ValidationJson};
use mmbm_core::bm::{
    bm_check_tol, bm_exhaustive_check, bm_mult_check_tol, bm_search_violations, default_s_grid, BMReport, SearchConfig,
};
use mmbm_core::coupling::ot_coupling;
use mmbm_core::discretize::discretize_grid;
use mmbm_core::{BMQuery, FiniteMetricMeasureSpace, SubsetMask};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "mmbm",
    version,
    about = "Check approximate Brunn-Minkowski inequalities on finite metric measure spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit flat CSV rows instead of JSON.
    #[arg(long, global = true)]
    csv: bool,
    /// Seed for searches and random compacts (overrides the experiment's).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Deficits below -tol count as violations.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Check a space file for metric and weight errors.
    Validate {
        space: PathBuf,
        /// Triangle tolerance (default: relative to the largest distance).
        #[arg(long)]
        tri_tol: Option<f64>,
    },
    /// Evaluate BM(N,h) (or the multiplicative form) on one pair.
    BmCheck {
        space: PathBuf,
        /// Comma-separated indices of C0; empty for the empty set.
        #[arg(long = "K", allow_hyphen_values = true)]
        k: String,
        /// Comma-separated indices of C1.
        #[arg(long = "L", allow_hyphen_values = true)]
        l: String,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        h: f64,
        #[arg(long = "N", required_unless_present = "mult")]
        n: Option<f64>,
        #[arg(long)]
        mult: bool,
    },
    /// Seeded local search for violating pairs.
    BmSearch {
        space: PathBuf,
        #[arg(long = "N")]
        n: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, value_delimiter = ',')]
        s_grid: Option<Vec<f64>>,
        /// Number of worst reports kept.
        #[arg(long, default_value_t = 10)]
        keep: usize,
    },
    /// Worst pair over all subsets (spaces of at most 16 points).
    Exhaustive {
        space: PathBuf,
        #[arg(long = "N")]
        n: f64,
        #[arg(long)]
        h: f64,
        #[arg(long, value_delimiter = ',')]
        s_grid: Option<Vec<f64>>,
    },
    /// Grid discretization of a model, written as a space file.
    Discretize {
        model: PathBuf,
        /// Cells per axis, e.g. `8` or `4,4`.
        #[arg(long)]
        cells: String,
    },
    /// Run an experiment's discretization sweep.
    Sweep { experiment: PathBuf },
    /// Replay the stability construction of an experiment.
    Stability { experiment: PathBuf },
    /// Optimal quadratic coupling between two spaces.
    Ot {
        a: PathBuf,
        b: PathBuf,
        /// Cross distance file: `"ambient"` or a matrix (default: ambient).
        #[arg(long)]
        cross: Option<PathBuf>,
    },
}

enum Outcome {
    Clean,
    Violation,
}

impl Outcome {
    fn from_violation(found: bool) -> Self {
        if found {
            Outcome::Violation
        } else {
            Outcome::Clean
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Clean) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                if !e.to_string().contains(&s.to_string()) {
                    eprintln!("  caused by: {s}");
                }
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    if !(cli.tol >= 0.0 && cli.tol.is_finite()) {
        return Err(CliError::Usage(format!("--tol must be finite and >= 0, got {}", cli.tol)));
    }
    match &cli.command {
        Command::Validate { space, tri_tol } => validate(cli, space, *tri_tol),
        Command::BmCheck { space, k, l, s, h, n, mult } => {
            let sp = load_space(space)?;
            let c0 = parse_subset(&sp, k, "--K")?;
            let c1 = parse_subset(&sp, l, "--L")?;
            let report = if *mult {
                bm_mult_check_tol(&sp, &c0, &c1, *s, *h, cli.tol)?
            } else {
                let n = n.expect("clap requires N without --mult");
                note_fractional(n);
                bm_check_tol(&sp, &c0, &c1, BMQuery::new(n, *s, *h)?, cli.tol)?
            };
            emit_reports(cli, std::slice::from_ref(&report), || BMReportJson::from(&report))?;
            Ok(Outcome::from_violation(report.is_violation()))
        }
        Command::BmSearch { space, n, h, iters, s_grid, keep } => {
            let sp = load_space(space)?;
            note_fractional(*n);
            let cfg = SearchConfig {
                seed: cli.seed.unwrap_or(0),
                iterations: *iters,
                s_grid: s_grid.clone().unwrap_or_else(default_s_grid),
                keep: *keep,
                ..SearchConfig::default()
            };
            let reports: Vec<BMReport> =
                bm_search_violations(&sp, *n, *h, &cfg)?.into_iter().map(|r| r.with_tolerance(cli.tol)).collect();
            let found = reports.iter().any(BMReport::is_violation);
            emit_reports(cli, &reports, || SearchJson {
                seed: cfg.seed,
                iterations: cfg.iterations,
                n: *n,
                h: *h,
                violations: reports.iter().filter(|r| r.is_violation()).count(),
                reports: reports.iter().map(BMReportJson::from).collect(),
            })?;
            Ok(Outcome::from_violation(found))
        }
        Command::Exhaustive { space, n, h, s_grid } => {
            let sp = load_space(space)?;
            note_fractional(*n);
            let grid = s_grid.clone().unwrap_or_else(default_s_grid);
            let worst = bm_exhaustive_check(&sp, *n, *h, &grid)?.with_tolerance(cli.tol);
            emit_reports(cli, std::slice::from_ref(&worst), || BMReportJson::from(&worst))?;
            Ok(Outcome::from_violation(worst.is_violation()))
        }
        Command::Discretize { model, cells } => {
            if cli.csv {
                return Err(CliError::Usage("discretize writes a space file; --csv does not apply".into()));
            }
            let m = load_model(model)?;
            let cells = parse_cells(cells)?;
            let d = discretize_grid(&m, &cells).map_err(|e| CliError::input(model, e.to_string()))?;
            emit(cli, &to_json(&SpaceFile::from_discretization(&d))?)?;
            Ok(Outcome::Clean)
        }
        Command::Sweep { experiment } => {
            let exp = load_experiment(cli, experiment)?;
            let report = run_discretization_sweep(&exp, cli.tol)?;
            let json = to_json(&report)?;
            let csv = to_csv(&report.csv_rows())?;
            write_outputs(&exp, &json, &csv)?;
            emit(cli, if cli.csv { &csv } else { &json })?;
            Ok(Outcome::from_violation(report.violations > 0))
        }
        Command::Stability { experiment } => {
            let exp = load_experiment(cli, experiment)?;
            let run = run_stability_replay(&exp, cli.tol)?;
            let json = to_json(&run)?;
            let csv = to_csv(&run.csv_rows())?;
            write_outputs(&exp, &json, &csv)?;
            emit(cli, if cli.csv { &csv } else { &json })?;
            Ok(Outcome::from_violation(!run.ok()))
        }
        Command::Ot { a, b, cross } => {
            if cli.csv {
                return Err(CliError::Usage("ot writes a coupling file; --csv does not apply".into()));
            }
            let fa: SpaceFile = read_json(a)?;
            let metric = match &fa.metric {
                Some(name) => Some(
                    parse_metric(name)
                        .ok_or_else(|| CliError::input(a, format!("field `metric`: unknown metric {name:?}")))?,
                ),
                None => None,
            };
            let sa = fa.into_space(a)?;
            let sb = load_space(b)?;
            let (cross_file, origin) = match cross {
                Some(p) => (read_json::<CrossFile>(p)?, p.as_path()),
                None => (CrossFile::Named("ambient".into()), a.as_path()),
            };
            let d = cross_file.resolve(&sa, &sb, metric, origin)?;
            let (q, cost) = ot_coupling(sa.weights(), sb.weights(), &d)?;
            emit(cli, &to_json(&CouplingFile::from_coupling(&q, Some(cost)))?)?;
            Ok(Outcome::Clean)
        }
    }
}

#[derive(Serialize)]
struct SearchJson {
    seed: u64,
    iterations: usize,
    #[serde(rename = "N")]
    n: f64,
    h: f64,
    violations: usize,
    reports: Vec<BMReportJson>,
}

fn validate(cli: &Cli, path: &Path, tri_tol: Option<f64>) -> CliResult<Outcome> {
    let space = load_space(path)?;
    let report = space.validate(tri_tol);
    let json = ValidationJson::new(space.len(), &report);
    if cli.csv {
        return Err(CliError::Usage("validate has no CSV form".into()));
    }
    emit(cli, &to_json(&json)?)?;
    if report.is_valid() {
        return Ok(Outcome::Clean);
    }
    let details: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    Err(CliError::input(path, format!("invalid space: {}", details.join("; "))))
}

fn load_experiment(cli: &Cli, path: &Path) -> CliResult<Experiment> {
    let mut exp = Experiment::load(path)?;
    if let Some(seed) = cli.seed {
        exp.spec.seed = seed;
    }
    Ok(exp)
}

fn write_outputs(exp: &Experiment, json: &str, csv: &str) -> CliResult<()> {
    if let Some(p) = &exp.spec.outputs.json {
        write_text(p, json)?;
    }
    if let Some(p) = &exp.spec.outputs.csv {
        write_text(p, csv)?;
    }
    Ok(())
}

fn emit_reports<T: Serialize>(cli: &Cli, reports: &[BMReport], json: impl FnOnce() -> T) -> CliResult<()> {
    let text = if cli.csv {
        let rows: Vec<CsvRow> = reports
            .iter()
            .map(|r| {
                CsvRow::from_report("", None, indices_label(&r.k.to_indices()), indices_label(&r.l.to_indices()), r)
            })
            .collect();
        to_csv(&rows)?
    } else {
        to_json(&json())?
    };
    emit(cli, &text)
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(p) => write_text(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn parse_subset(space: &FiniteMetricMeasureSpace, text: &str, flag: &str) -> CliResult<SubsetMask> {
    let indices = text
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| CliError::Usage(format!("{flag}: {t:?} is not a point index"))))
        .collect::<CliResult<Vec<_>>>()?;
    space.subset(&indices).map_err(|e| CliError::Usage(format!("{flag}: {e}")))
}

fn note_fractional(n: f64) {
    if n.fract() != 0.0 {
        eprintln!("note: N = {n} is not an integer; integer N is the standard setting");
    }
}
