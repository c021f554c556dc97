//! `qtrack`: command-line front end for the track-finding pipeline.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtrack_core::config::RunConfig;
use qtrack_core::pipeline::{self, EVENT_FILE, NETWORK_FILE, RESULT_FILE};
use qtrack_core::{Error, Method, Result};

#[derive(Parser, Debug)]
#[command(name = "qtrack", version, about = "Track finding with Hopfield networks and annealing solvers")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Run configuration file (sectioned key = value text).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed; overrides [run] seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides [run] out (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Solver: exact, sa, sqa or meanfield; overrides [solver] method.
    #[arg(long, global = true, value_name = "METHOD")]
    solver: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a toy event and write event.json.
    Generate,
    /// Build the segment network of an event and write network.ising and segments.json.
    BuildNet {
        /// Event file (default: <out>/event.json).
        event: Option<PathBuf>,
    },
    /// Convert an Ising file to network.qubo.
    ToQubo {
        /// Ising file (default: <out>/network.ising).
        input: Option<PathBuf>,
    },
    /// Solve an Ising or QUBO file and write result.json.
    Solve {
        /// Problem file (default: <out>/network.ising).
        problem: Option<PathBuf>,
    },
    /// Embed an Ising file on a Chimera grid; writes embedding.json and physical.ising.
    Embed {
        /// Ising file (default: <out>/network.ising).
        input: Option<PathBuf>,
        /// Chimera grid size; overrides [chimera] grid_n.
        #[arg(long)]
        grid_n: Option<usize>,
    },
    /// Score a solve result against event truth; writes report.json and trace.csv.
    Evaluate {
        /// Result file (default: <out>/result.json).
        #[arg(long)]
        result: Option<PathBuf>,
        /// Event file (default: <out>/event.json).
        #[arg(long)]
        event: Option<PathBuf>,
    },
    /// Run every stage in order.
    RunAll,
}

fn resolve(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(name) = &common.solver {
        config.method = name.parse::<Method>()?;
    }
    let out = common
        .out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, out))
}

fn or_default(path: Option<PathBuf>, out: &Path, name: &str) -> PathBuf {
    path.unwrap_or_else(|| out.join(name))
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let (config, out) = resolve(&cli.common)?;
    let written = match cli.command {
        Command::Generate => vec![pipeline::generate(&config, &out)?],
        Command::BuildNet { event } => {
            let p = pipeline::build_net(&or_default(event, &out, EVENT_FILE), &config, &out)?;
            vec![p.ising, p.segments]
        }
        Command::ToQubo { input } => vec![pipeline::to_qubo(&or_default(input, &out, NETWORK_FILE), &out)?],
        Command::Solve { problem } => {
            let problem = or_default(problem, &out, NETWORK_FILE);
            vec![pipeline::solve(&problem, config.method, &config, &out)?]
        }
        Command::Embed { input, grid_n } => {
            let grid_n = grid_n
                .or(config.chimera_grid)
                .ok_or_else(|| Error::Usage("embed needs --grid-n or [chimera] grid_n".into()))?;
            let p = pipeline::embed(&or_default(input, &out, NETWORK_FILE), grid_n, &out)?;
            vec![p.embedding, p.physical]
        }
        Command::Evaluate { result, event } => {
            let p = pipeline::evaluate(
                &or_default(result, &out, RESULT_FILE),
                &or_default(event, &out, EVENT_FILE),
                &config,
                &out,
            )?;
            vec![p.report, p.trace]
        }
        Command::RunAll => {
            let p = pipeline::run_all(&config, &out)?;
            let mut v = vec![p.event, p.network.ising, p.network.segments, p.qubo, p.result];
            if let Some(e) = p.embedding {
                v.extend([e.embedding, e.physical]);
            }
            v.extend([p.report.report, p.report.trace]);
            v
        }
    };
    Ok(written)
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let mut lines = rendered.lines();
            let head = lines.next().unwrap_or("invalid arguments");
            eprintln!("ERROR 1: usage: {}", one_line(head.trim_start_matches("error: ")));
            for line in lines {
                eprintln!("{line}");
            }
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("ERROR {code}: {}", one_line(&e.to_string()));
            ExitCode::from(code as u8)
        }
    }
}
