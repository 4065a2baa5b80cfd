mod job;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "mtw-kit",
    version,
    about = "Cost, curvature, and regularity-condition diagnostics for mechanical optimal transport"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the job described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's sample count.
        #[arg(long = "n-samples")]
        n_samples: Option<usize>,
        /// Override the CSV output path.
        #[arg(long = "out-csv")]
        out_csv: Option<PathBuf>,
        /// Override the summary output path.
        #[arg(long = "out-summary")]
        out_summary: Option<PathBuf>,
        /// Worker pool size (default: number of processors).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List every problem in a config without running it.
    Validate { config: PathBuf },
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Run {
            config,
            seed,
            n_samples,
            out_csv,
            out_summary,
            workers,
        } => match job::load(&config) {
            Ok(mut cfg) => {
                if seed.is_some() {
                    cfg.seed = seed;
                }
                if n_samples.is_some() {
                    cfg.n_samples = n_samples;
                }
                if workers.is_some() {
                    cfg.workers = workers;
                }
                if out_csv.is_some() || out_summary.is_some() {
                    let mut output = cfg.output.clone().unwrap_or_default();
                    if out_csv.is_some() {
                        output.csv = out_csv;
                    }
                    if out_summary.is_some() {
                        output.summary = out_summary;
                    }
                    cfg.output = Some(output);
                }
                match job::run(&cfg) {
                    Ok(code) => code,
                    Err(e) => {
                        eprintln!("error: {e}");
                        1
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Cmd::Validate { config } => match job::load(&config) {
            Ok(cfg) => {
                let diagnostics = job::validate(&cfg);
                if diagnostics.is_empty() {
                    println!("ok");
                    0
                } else {
                    for d in &diagnostics {
                        println!("{d}");
                    }
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
    };
    std::process::exit(code);
}
