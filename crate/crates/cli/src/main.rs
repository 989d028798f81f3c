use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use labelshift::LabelColumn;
use labelshift_cli::report::{read_rows, summarize, Axis};
use labelshift_cli::shiftgen::{shift_gen, sidecar_path, ShiftGenOptions};
use labelshift_cli::{run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "labelshift", version, about = "Label-shift correction experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a β sweep and write report.csv and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock durations (reports stop being byte-identical).
        #[arg(long)]
        record_timing: bool,
    },
    /// Oversample a CSV with inverse-frequency class weights.
    ShiftGen {
        #[arg(long)]
        data: PathBuf,
        /// Label column name or zero-based index.
        #[arg(long)]
        label: String,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Output row count; defaults to the input row count.
        #[arg(long)]
        target_size: Option<usize>,
        /// The input has no header row.
        #[arg(long)]
        no_header: bool,
    },
    /// Aggregate a report by the given axes.
    Report {
        /// report.csv, or the directory holding it.
        #[arg(long = "in")]
        input: PathBuf,
        /// Comma-separated subset of dataset,model,method,beta,seed.
        #[arg(long)]
        group_by: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, out, record_timing } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            cfg.record_timing |= record_timing;
            let report = run(&cfg)?;
            report.write(&cfg.out_dir)?;
            let failed = report.n_failed();
            eprintln!(
                "{} records ({} failed) written to {}",
                report.records.len(),
                failed,
                cfg.out_dir.display()
            );
            for r in report.records.iter().filter(|r| !r.is_ok()) {
                eprintln!("  {}/{}/{} seed {}: {}", r.dataset, r.model, r.method, r.seed, r.status);
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::ShiftGen { data, label, beta, seed, out, target_size, no_header } => {
            let sidecar = shift_gen(&ShiftGenOptions {
                data,
                label: LabelColumn::parse(&label),
                has_header: !no_header,
                beta,
                seed,
                target_size,
                out: out.clone(),
            })?;
            eprintln!(
                "{} rows written to {} (histogram {:?}, sidecar {})",
                sidecar.n_rows,
                out.display(),
                sidecar.histogram,
                sidecar_path(&out).display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { input, group_by, out } => {
            let axes = Axis::parse_list(&group_by)?;
            let rows = read_rows(&input)?;
            let table = summarize(&rows, &axes).to_csv();
            match out {
                Some(path) => fs::write(&path, table).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{table}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
