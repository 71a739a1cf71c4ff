use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fairkm::clustering::InitMethod;

use fairkm_cli::report::{write_plot_data, write_report};
use fairkm_cli::{execute, gen_synthetic, parse_k_spec, Algo, CliError, RunSpec, SynthParams};

#[derive(Parser)]
#[command(name = "fairkm", about = "Socially fair k-means benchmark harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Lloyd,
    FairLloyd,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    Random,
    Kmeanspp,
    Weighted,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV and emit a JSON report and/or plot-data CSVs.
    Run {
        /// Input CSV with a header row.
        #[arg(long)]
        input: PathBuf,
        /// Name of the demographic-group column.
        #[arg(long)]
        group_col: String,
        /// Number of clusters: a single value ("5") or inclusive range ("4..16").
        #[arg(long)]
        k: String,
        #[arg(long, value_enum, default_value = "both")]
        algo: AlgoArg,
        #[arg(long, value_enum, default_value = "random")]
        init: InitArg,
        /// Independent center initializations per run.
        #[arg(long, default_value_t = 200)]
        restarts: usize,
        /// Maximum outer iterations per run.
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Pipeline such as "zscore,pca:k" or "onehot:1+3,zscore".
        #[arg(long)]
        preprocess: Option<String>,
        /// Where to write the JSON report.
        #[arg(long)]
        out_report: Option<PathBuf>,
        /// Prefix for the plot-data CSVs (<prefix>.group_costs.csv, <prefix>.ratios.csv).
        #[arg(long)]
        out_plotdata: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Include wall times in the report (breaks byte-for-byte determinism).
        #[arg(long, default_value_t = false)]
        timings: bool,
    },
    /// Generate a group-skewed Gaussian-blob CSV with a metadata sidecar.
    GenSynthetic {
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated points per group, e.g. "1600,400".
        #[arg(long, default_value = "1600,400")]
        n_per_group: String,
        #[arg(long, default_value_t = 2)]
        clusters: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 20.0)]
        separation: f64,
        #[arg(long, default_value_t = 4.0)]
        skew: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            input,
            group_col,
            k,
            algo,
            init,
            restarts,
            iters,
            seed,
            preprocess,
            out_report,
            out_plotdata,
            threads,
            timings,
        } => {
            let spec = RunSpec {
                input,
                group_col,
                ks: parse_k_spec(&k)?,
                algo: match algo {
                    AlgoArg::Lloyd => Algo::Lloyd,
                    AlgoArg::FairLloyd => Algo::FairLloyd,
                    AlgoArg::Both => Algo::Both,
                },
                init: match init {
                    InitArg::Random => InitMethod::Random,
                    InitArg::Kmeanspp => InitMethod::KMeansPlusPlus,
                    InitArg::Weighted => InitMethod::WeightedLloyd,
                },
                restarts,
                iterations: iters,
                seed,
                preprocess,
                threads,
                timings,
            };
            let (report, _) = execute(&spec)?;
            match (&out_report, &out_plotdata) {
                (None, None) => {
                    // Nowhere to write: print the report to stdout instead.
                    let bytes = fairkm_cli::report::render_report(&report)?;
                    print!("{}", String::from_utf8_lossy(&bytes));
                }
                _ => {
                    if let Some(path) = &out_report {
                        write_report(&report, path)?;
                    }
                    if let Some(prefix) = &out_plotdata {
                        write_plot_data(&report, prefix)?;
                    }
                }
            }
            Ok(())
        }
        Command::GenSynthetic {
            out,
            n_per_group,
            clusters,
            dim,
            separation,
            skew,
            seed,
        } => {
            let counts = n_per_group
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| CliError::Input(format!("bad group size {s:?}")))
                })
                .collect::<Result<Vec<usize>, _>>()?;
            gen_synthetic(&SynthParams {
                out,
                n_per_group: counts,
                clusters,
                dim,
                separation,
                skew,
                seed,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
