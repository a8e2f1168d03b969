//! Command-line entry points.
//!
//! `run <config> [--out DIR] [--seed N]` executes one experiment and writes
//! its CSV trace; `plot <csv...> --x ... --out FILE` renders traces into a
//! self-contained SVG; `verify` runs the property suites; `gen` writes a
//! synthetic dataset in LibSVM form. Exit codes: 0 success, 2 validation
//! error, 1 runtime error.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::load_config;
use crate::error::Error;
use crate::plot::{emit_plot, XAxis, YAxis};
use crate::trace_io::{emit_csv, read_csv};

#[derive(Parser)]
#[command(name = "condgrad", about = "Projection-free stochastic optimization benchmark runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the run described by a key=value config file.
    Run {
        config: PathBuf,
        /// Directory for the output CSV (joined with the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render CSV traces into an SVG convergence plot.
    Plot {
        csv: Vec<PathBuf>,
        /// Cost metric on the x axis.
        #[arg(long, value_parser = ["iter", "grad_calls", "bits_sent"])]
        x: String,
        /// Quantity on the (log-scaled) y axis.
        #[arg(long, default_value = "f_value", value_parser = ["f_value", "fw_gap"])]
        y: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property suites and report one line per property.
    Verify,
    /// Write a synthetic dataset in LibSVM text form.
    Gen {
        /// Preset: mushrooms_like | w1a_like.
        preset: String,
        #[arg(long)]
        out: PathBuf,
        /// Number of rows.
        #[arg(long, default_value_t = 500)]
        rows: usize,
    },
}

fn exit_code(err: &Error) -> i32 {
    if err.is_validation() {
        2
    } else {
        1
    }
}

fn cmd_run(config: &PathBuf, out_dir: Option<PathBuf>, seed: Option<u64>) -> Result<(), Error> {
    let mut cfg = load_config(config)?;
    if let Some(seed) = seed {
        cfg.spec.seed = seed;
    }
    let out_path = match out_dir {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            dir.join(&cfg.out)
        }
        None => cfg.out.clone(),
    };
    let trace = crate::driver::run(&cfg.dataset, &cfg.ball, &cfg.spec)?;
    emit_csv(&trace, &out_path)?;
    let last = trace.records.last().expect("trace has records");
    println!(
        "{}: K={} f={:.9e} gap={:.3e} grad_calls={} coord_calls={} bits={} -> {}",
        cfg.spec.method.method().name(),
        last.k,
        last.f_value,
        last.fw_gap,
        last.grad_calls,
        last.coord_calls,
        last.bits_sent,
        out_path.display()
    );
    Ok(())
}

fn cmd_plot(csv: &[PathBuf], x: &str, y: &str, out: &PathBuf) -> Result<(), Error> {
    if csv.is_empty() {
        return Err(Error::Config("plot requires at least one csv file".into()));
    }
    let x_axis = XAxis::parse(x)?;
    let y_axis = YAxis::parse(y)?;
    let mut traces = Vec::new();
    for path in csv {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        traces.push((name, read_csv(path)?));
    }
    emit_plot(&traces, x_axis, y_axis, out)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_gen(preset: &str, out: &PathBuf, rows: usize) -> Result<(), Error> {
    let data = match preset {
        "mushrooms_like" => crate::synthetic::mushrooms_like(rows),
        "w1a_like" => crate::synthetic::w1a_like(rows),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}` (expected mushrooms_like|w1a_like)"
            )))
        }
    };
    let file = std::fs::File::create(out)?;
    data.write_libsvm(std::io::BufWriter::new(file))?;
    println!(
        "wrote {} ({} rows, dim {})",
        out.display(),
        data.n_samples(),
        data.dim()
    );
    Ok(())
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, seed } => cmd_run(config, out.clone(), *seed),
        Command::Plot { csv, x, y, out } => cmd_plot(csv, x, y, out),
        Command::Verify => {
            return if crate::certify::run_all(std::io::stdout()) {
                0
            } else {
                1
            };
        }
        Command::Gen { preset, out, rows } => cmd_gen(preset, out, *rows),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
