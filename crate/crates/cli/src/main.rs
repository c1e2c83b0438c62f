//! `gcca`: synthesize multi-view datasets, run subspace-intersection solvers,
//! sweep SNR grids, check identifiability, and aggregate plot data.

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use gcca_cli::commands::{self, CheckInputs};
use gcca_cli::config::{Method, Whitening};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gcca", version, about = "GCCA subspace-intersection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Racing,
    Maxvar,
    Cca2,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Racing => Method::Racing,
            MethodArg::Maxvar => Method::Maxvar,
            MethodArg::Cca2 => Method::Cca2,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WhiteningArg {
    Signal,
    Full,
}

impl From<WhiteningArg> for Whitening {
    fn from(w: WhiteningArg) -> Self {
        match w {
            WhiteningArg::Signal => Whitening::Signal,
            WhiteningArg::Full => Whitening::Full,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a dataset (factors, views, manifest) from a config file
    Synth {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Override the config's base_seed
        #[arg(long)]
        seed: Option<u64>,
        /// Add white Gaussian noise at this aggregate SNR (dB)
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Run one solver on view files and write the estimate
    Run {
        /// Solver to run
        #[arg(long)]
        method: MethodArg,
        /// Common subspace dimension R
        #[arg(long, value_name = "R")]
        rank: usize,
        /// Per-view individual ranks L_1,L_2,…
        #[arg(long, value_delimiter = ',', value_name = "L1,L2,…")]
        extra_ranks: Vec<usize>,
        /// Whitening rank for maxvar/cca2: signal (R+L_n) or full
        #[arg(long, value_enum, default_value_t = WhiteningArg::Signal)]
        whitening: WhiteningArg,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// View files (Matrix Market), one per view
        #[arg(required = true)]
        views: Vec<PathBuf>,
    },
    /// Run the Monte-Carlo SNR sweep described by a config file
    Sweep {
        /// Experiment config (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = auto)
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Identifiability report from dims, views, and/or factor files
    Check {
        /// Common subspace dimension R
        #[arg(long, value_name = "R")]
        rank: usize,
        /// Per-view individual ranks L_1,L_2,…
        #[arg(long, value_delimiter = ',', value_name = "L1,L2,…")]
        extra_ranks: Vec<usize>,
        /// Entity count I (dims-only checking)
        #[arg(long)]
        entities: Option<usize>,
        /// Per-view feature counts K_1,K_2,… (dims-only checking)
        #[arg(long, value_delimiter = ',', value_name = "K1,K2,…")]
        features: Option<Vec<usize>>,
        /// Factor files: m.mtx c_1.mtx … c_N.mtx
        #[arg(long, num_args = 1.., value_name = "FILE")]
        factors: Vec<PathBuf>,
        /// Mixing files s_1.mtx … s_N.mtx (identity assumed when omitted)
        #[arg(long, num_args = 1.., value_name = "FILE")]
        mixers: Vec<PathBuf>,
        /// Also write the report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        /// View files (Matrix Market), one per view
        views: Vec<PathBuf>,
    },
    /// Aggregate a sweep CSV into per-cell plot data
    Plotdata {
        /// Sweep CSV produced by `gcca sweep`
        input: PathBuf,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            config,
            out,
            seed,
            snr,
        } => commands::cmd_synth(&config, &out, seed, snr),
        Command::Run {
            method,
            rank,
            extra_ranks,
            whitening,
            out,
            views,
        } => commands::cmd_run(
            &views,
            method.into(),
            rank,
            &extra_ranks,
            whitening.into(),
            &out,
        ),
        Command::Sweep {
            config,
            out,
            threads,
        } => commands::cmd_sweep(&config, &out, threads),
        Command::Check {
            rank,
            extra_ranks,
            entities,
            features,
            factors,
            mixers,
            out,
            views,
        } => commands::cmd_check(&CheckInputs {
            rank,
            extra_ranks,
            entities,
            features,
            views,
            factors,
            mixers,
            out,
        }),
        Command::Plotdata { input, out } => commands::cmd_plotdata(&input, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
