//! Command-line driver: reads an experiment configuration, runs the sweep,
//! and writes the error table, the run log and optional dumps.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use log::LevelFilter;

use crate::config::{parse_config, ExperimentConfig};
use crate::error::{Error, Result};
use crate::models::{reduced_system, FullSolution, ModelVariant, ReducedSolution};
use crate::postproc::{aperture_sweep, write_fields, ErrorTable, Fields, SweepObserver};

#[derive(Debug, Parser)]
#[command(name = "fracdg", version, about = "Compare reduced fracture flow models against a full-dimensional reference")]
pub struct Args {
    /// Experiment configuration (TOML).
    pub config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "info")]
    pub log_level: LevelFilter,
    /// Write bulk and fracture fields of every run under `fields/`.
    #[arg(long)]
    pub dump_fields: bool,
    /// Write every reduced system matrix under `matrices/`.
    #[arg(long)]
    pub dump_matrices: bool,
}

/// What a finished run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub table: ErrorTable,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn failed(&self) -> bool {
        self.table.has_failures()
    }
}

fn tag(d0: f64, variant: &str) -> String {
    format!("d0_{d0:e}_{variant}")
}

struct Recorder<'a> {
    config: &'a ExperimentConfig,
    out: &'a Path,
    dump_fields: bool,
    dump_matrices: bool,
    log: String,
    files: Vec<PathBuf>,
    first_error: Option<Error>,
    started: Instant,
}

impl Recorder<'_> {
    fn keep(&mut self, r: Result<()>) {
        if let Err(e) = r {
            self.first_error.get_or_insert(e);
        }
    }

    fn elapsed_ms(&mut self) -> u128 {
        let ms = self.started.elapsed().as_millis();
        self.started = Instant::now();
        ms
    }

    fn dump_matrix(&mut self, d0: f64, variant: ModelVariant) -> Result<()> {
        let problem = self.config.make_problem(d0)?;
        let setup = reduced_system(&problem, variant, &self.config.disc, self.config.disc.reduced_mesh)?;
        let dir = self.out.join("matrices");
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.txt", tag(d0, variant.name())));
        setup.system.matrix.write_text(std::io::BufWriter::new(fs::File::create(&path)?))?;
        self.files.push(path);
        Ok(())
    }
}

impl SweepObserver for Recorder<'_> {
    fn full(&mut self, d0: f64, sol: &FullSolution) {
        let ms = self.elapsed_ms();
        let _ = writeln!(
            self.log,
            "d0={d0:e} model=full dofs={} method={} iterations={} residual={:e} elapsed_ms={ms}",
            sol.space.n_dofs(),
            sol.report.method,
            sol.report.iterations,
            sol.report.residual
        );
        if self.dump_fields {
            let r = (|| {
                let dir = self.out.join("fields");
                fs::create_dir_all(&dir)?;
                let files = write_fields(Fields::Full(sol), &dir.join(tag(d0, "full")))?;
                self.files.extend(files);
                Ok(())
            })();
            self.keep(r);
        }
    }

    fn reduced(&mut self, d0: f64, sol: &ReducedSolution, error: f64) {
        let ms = self.elapsed_ms();
        let w = &sol.wellposedness;
        let _ = writeln!(
            self.log,
            "d0={d0:e} model={} bulk_dofs={} iface_dofs={} wellposedness_lhs={:.6} wellposed={} method={} iterations={} residual={:e} l2_error={error:e} elapsed_ms={ms}",
            sol.variant,
            sol.bulk_space.n_dofs(),
            sol.iface_space.n_dofs(),
            w.lhs,
            w.satisfied,
            sol.report.method,
            sol.report.iterations,
            sol.report.residual
        );
        if self.dump_fields {
            let r = (|| {
                let dir = self.out.join("fields");
                fs::create_dir_all(&dir)?;
                let files = write_fields(Fields::Reduced(sol), &dir.join(tag(d0, sol.variant.name())))?;
                self.files.extend(files);
                Ok(())
            })();
            self.keep(r);
        }
        if self.dump_matrices {
            let r = self.dump_matrix(d0, sol.variant);
            self.keep(r);
        }
    }

    fn failed(&mut self, d0: f64, variant: ModelVariant, err: &Error) {
        let ms = self.elapsed_ms();
        let _ = writeln!(self.log, "d0={d0:e} model={variant} failed=\"{err}\" elapsed_ms={ms}");
    }
}

/// Runs the configured sweep and writes `errors.csv` and `run.log` (plus
/// `fields/` and `matrices/` when requested) under `out`.
pub fn run(config: &ExperimentConfig, out: &Path, dump_fields: bool, dump_matrices: bool) -> Result<RunSummary> {
    fs::create_dir_all(out)?;
    let mut rec = Recorder {
        config,
        out,
        dump_fields: dump_fields || config.output.dump_fields,
        dump_matrices: dump_matrices || config.output.dump_matrices,
        log: String::new(),
        files: Vec::new(),
        first_error: None,
        started: Instant::now(),
    };
    let _ = writeln!(
        rec.log,
        "preset={} variants={} d0={:?} h={} bulk_degree={} interface_degree={} xi={}",
        config.preset.name(),
        config.variants.iter().map(|v| v.name()).collect::<Vec<_>>().join(","),
        config.d0,
        config.disc.h,
        config.disc.bulk_degree,
        config.disc.interface_degree,
        config.xi
    );
    let make = |d0: f64| config.make_problem(d0);
    let table = aperture_sweep(&make, &config.variants, &config.d0, &config.disc, config.reference, &mut rec)?;
    if let Some(e) = rec.first_error.take() {
        return Err(e);
    }
    let csv = out.join("errors.csv");
    table.write_csv(std::io::BufWriter::new(fs::File::create(&csv)?))?;
    let log_path = out.join("run.log");
    fs::write(&log_path, &rec.log)?;
    let mut files = vec![csv, log_path];
    files.append(&mut rec.files);
    Ok(RunSummary {
        table,
        out_dir: out.to_path_buf(),
        files,
    })
}

fn print_summary(summary: &RunSummary, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{:>10}  {:<5}  {:>12}  {:>9}  {:>6}", "d0", "model", "l2_error", "bulk_dofs", "iface")?;
    for r in summary.table.rows() {
        match (r.l2_error, &r.failure) {
            (Some(e), _) => writeln!(
                out,
                "{:>10.3e}  {:<5}  {:>12.4e}  {:>9}  {:>6}",
                r.d0,
                r.variant.name(),
                e,
                r.bulk_dofs,
                r.iface_dofs
            )?,
            (None, f) => writeln!(
                out,
                "{:>10.3e}  {:<5}  failed: {}",
                r.d0,
                r.variant.name(),
                f.as_deref().unwrap_or("unknown")
            )?,
        }
    }
    writeln!(out, "results in {}", summary.out_dir.display())
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    env_logger::Builder::new()
        .filter_level(args.log_level)
        .format_timestamp(None)
        .init();
    let config = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return 2;
        }
    };
    let out = args
        .out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match run(&config, &out, args.dump_fields, args.dump_matrices) {
        Ok(summary) => {
            let _ = print_summary(&summary, std::io::stdout().lock());
            if summary.failed() {
                eprintln!("error: some runs failed; see {}", out.join("run.log").display());
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
