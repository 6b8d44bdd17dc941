//! `omv`: command-line driver for the OMv engine.

mod bench;
mod commands;
mod input;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "omv",
    version,
    about = "Online Boolean matrix-vector multiplication"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Auto,
    Row,
    Col,
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Dense,
    Coo,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Preprocess a matrix and report tree weights.
    Build {
        #[arg(long)]
        matrix: String,
        /// Write the column-tree dump here.
        #[arg(long)]
        out: Option<String>,
        /// Linearize the column tree before dumping.
        #[arg(long)]
        linearize: bool,
    },
    /// Multiply a matrix by a vector.
    Mv {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        vector: String,
        #[arg(long, value_enum, default_value_t = AlgoArg::Auto)]
        algo: AlgoArg,
        /// Print query statistics to stderr.
        #[arg(long)]
        stats: bool,
    },
    /// Replay an update trace against the dynamic engine.
    Replay {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        trace: String,
        /// Check every query against a plain shadow matrix.
        #[arg(long)]
        audit: bool,
    },
    /// Graph applications.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Generate a structured matrix.
    Gen {
        #[arg(long)]
        family: String,
        /// Rows and columns (square).
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        /// Entries flipped per row.
        #[arg(long, default_value_t = 0)]
        corruption: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Coo)]
        format: FormatArg,
        #[arg(long)]
        out: Option<String>,
    },
    /// Tree-weight and query-cost benchmark emitting JSON.
    Bench(bench::BenchArgs),
}

#[derive(Subcommand, Debug)]
pub enum GraphCommand {
    /// Triangle trace and detection.
    Triangle {
        #[arg(long)]
        graph: String,
    },
    /// Hop distances from a source, up to a bound.
    Sssp {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        source: u64,
        /// Hop bound; defaults to n - 1.
        #[arg(long)]
        dmax: Option<usize>,
    },
    /// Solve L x = b.
    Solve {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        vector: String,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Effective resistance between two vertices.
    Resist {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        u: u64,
        #[arg(long)]
        v: u64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(value) = std::env::var("OMV_THREADS") {
        let threads: usize = value.trim().parse().map_err(|_| {
            anyhow::anyhow!("OMV_THREADS must be a positive integer, got `{value}`")
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_threads()?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Build {
            matrix,
            out: dump,
            linearize,
        } => commands::build(&matrix, dump.as_deref(), linearize, &mut out),
        Command::Mv {
            matrix,
            vector,
            algo,
            stats,
        } => commands::mv(&matrix, &vector, algo, stats, &mut out),
        Command::Replay {
            matrix,
            trace,
            audit,
        } => commands::replay(&matrix, &trace, audit, &mut out),
        Command::Graph { command } => commands::graph(command, &mut out),
        Command::Gen {
            family,
            size,
            rows,
            cols,
            corruption,
            seed,
            format,
            out: path,
        } => {
            let rows = rows
                .or(size)
                .ok_or_else(|| anyhow::anyhow!("give --size or --rows"))?;
            let cols = cols
                .or(size)
                .ok_or_else(|| anyhow::anyhow!("give --size or --cols"))?;
            commands::gen(
                &family,
                rows,
                cols,
                corruption,
                seed,
                format,
                path.as_deref(),
                &mut out,
            )
        }
        Command::Bench(args) => bench::run(&args, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
