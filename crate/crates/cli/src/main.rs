//! Command-line front end: `solve`, `ingest`, `tune` and `report`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use waveadr::grid::Grid2D;
use waveadr::ingest::{ingest_raster, read_image, read_raw_grid, write_raw_grid, Raster};
use waveadr::problem::{nearest_valid_size, run_solve, tune_spec, ProblemSpec};
use waveadr::report::{emit_report, format_sci6, parse_history_csv};

/// Thread count override for the rayon pool.
const THREADS_ENV: &str = "WAVEADR_THREADS";

const EXIT_ERROR: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(name = "waveadr", version, about = "Multigrid-preconditioned 2D Helmholtz solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the problem(s) described by `key = value` config files.
    Solve {
        /// Config file; repeat together with --batch to run several.
        #[arg(long = "config", required = true)]
        configs: Vec<PathBuf>,
        /// Run every config concurrently, each with its own report.
        #[arg(long)]
        batch: bool,
        /// Residual history CSV (single config only). Defaults to the config path with a `.csv` extension.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Directory for batch reports. Defaults to each config's directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Convert an image or raw grid into a normalized slowness raw grid.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Interior grid size; adjusted to the nearest coarsenable size.
        #[arg(long)]
        n: usize,
        /// Gaussian width in cells (default N/64).
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Tune the per-level Chebyshev α and print `alpha.<l> = value` lines.
    Tune {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize a residual-history CSV.
    Report { csv: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_ERROR);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{v}`"))?;
    if n == 0 {
        bail!("{THREADS_ENV} must be a positive integer, got `{v}`");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Solve {
            configs,
            batch,
            output,
            out_dir,
        } => solve(&configs, batch, output, out_dir),
        Command::Ingest {
            input,
            n,
            sigma,
            output,
        } => ingest(&input, n, sigma, &output),
        Command::Tune { config } => {
            let spec = ProblemSpec::from_file(&config).with_context(|| format!("reading {}", config.display()))?;
            let tuned = tune_spec(&spec)?;
            print!("{}", tuned.to_config_lines());
            eprintln!(
                "loss = {} (uniform {} start: {})",
                format_sci6(tuned.loss),
                tuned.start.0,
                format_sci6(tuned.start.1)
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { csv } => report(&csv),
    }
}

fn csv_path(config: &Path, dir: Option<&Path>) -> PathBuf {
    let p = config.with_extension("csv");
    match (dir, p.file_name()) {
        (Some(d), Some(name)) => d.join(name),
        _ => p,
    }
}

/// Solve one config and write its report; `Ok(converged)`.
fn solve_one(config: &Path, csv: &Path) -> Result<bool> {
    let spec = ProblemSpec::from_file(config).with_context(|| format!("reading {}", config.display()))?;
    let out = run_solve(&spec).with_context(|| format!("solving {}", config.display()))?;
    let r = &out.report;
    if let Some(req) = r.requested_n {
        eprintln!("{}: n = {req} adjusted to {}", config.display(), r.n);
    }
    let side = emit_report(r, csv).with_context(|| format!("writing {}", csv.display()))?;
    println!(
        "{}: method={} converged={} iterations={} relres={} setup={:.3}s solve={:.3}s csv={} summary={}",
        config.display(),
        r.method.name(),
        r.converged,
        r.iterations,
        format_sci6(r.final_residual),
        r.setup_seconds(),
        r.solve_seconds(),
        csv.display(),
        side.display()
    );
    Ok(r.converged)
}

fn solve(configs: &[PathBuf], batch: bool, output: Option<PathBuf>, out_dir: Option<PathBuf>) -> Result<ExitCode> {
    if configs.len() > 1 && !batch {
        bail!("several configs given; pass --batch to run them together");
    }
    if output.is_some() && configs.len() > 1 {
        bail!("--output names a single CSV; use --out-dir with --batch");
    }
    if let Some(d) = &out_dir {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    let jobs: Vec<(PathBuf, PathBuf)> = configs
        .iter()
        .map(|c| {
            let csv = output.clone().unwrap_or_else(|| csv_path(c, out_dir.as_deref()));
            (c.clone(), csv)
        })
        .collect();
    let results: Vec<Result<bool>> = if batch {
        jobs.par_iter().map(|(c, csv)| solve_one(c, csv)).collect()
    } else {
        jobs.iter().map(|(c, csv)| solve_one(c, csv)).collect()
    };
    let mut failed = false;
    let mut all_converged = true;
    for r in results {
        match r {
            Ok(c) => all_converged &= c,
            Err(e) => {
                eprintln!("error: {e:#}");
                failed = true;
            }
        }
    }
    Ok(if failed {
        ExitCode::from(EXIT_ERROR)
    } else if all_converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    })
}

fn ingest(input: &Path, n: usize, sigma: Option<f64>, output: &Path) -> Result<ExitCode> {
    let raster = load_raster(input)?;
    let used = nearest_valid_size(n);
    if used != n {
        eprintln!("n = {n} adjusted to {used}");
    }
    let grid = Grid2D::square(used)?;
    let s = ingest_raster(&raster, &grid, sigma)?;
    // Same orientation as raw input: row 0 is the bottom grid row.
    let out = Raster::new(used, used, s.values().to_vec())?;
    write_raw_grid(output, &out).with_context(|| format!("writing {}", output.display()))?;
    println!(
        "{}: {used}x{used} slowness in [{:.4}, {:.4}]",
        output.display(),
        s.min(),
        s.max()
    );
    Ok(ExitCode::SUCCESS)
}

fn load_raster(path: &Path) -> Result<Raster> {
    let raw = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("raw") || e.eq_ignore_ascii_case("bin"));
    let r = if raw {
        read_raw_grid(path)
    } else {
        read_image(path).map(|r| r.flipped())
    };
    r.with_context(|| format!("reading {}", path.display()))
}

fn report(csv: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
    let h = parse_history_csv(&text)?;
    let Some(&last) = h.last() else {
        println!("{}: empty history", csv.display());
        return Ok(ExitCode::SUCCESS);
    };
    let iters = h.len() - 1;
    let rate = if iters > 0 && last > 0.0 && h[0] > 0.0 {
        (last / h[0]).powf(1.0 / iters as f64)
    } else {
        f64::NAN
    };
    println!("iterations = {iters}");
    println!("initial_relres = {}", format_sci6(h[0]));
    println!("final_relres = {}", format_sci6(last));
    println!("mean_reduction_per_iteration = {rate:.6}");
    Ok(ExitCode::SUCCESS)
}
