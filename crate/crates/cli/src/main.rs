//! `pivot`: corpus preparation, batch scoring, calibration, reporting and the live service.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pivot", version, about = "Find the moments in a conversation where the next reply matters most")]
struct Cli {
    /// TOML configuration file (backends, sampling, cache, service).
    #[arg(long, global = true, env = "PIVOT_CONFIG")]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Counseling,
    Default,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Steer {
    Success,
    Disengaged,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mark conversations whose responder gave up on a silent seeker as disengaged.
    Label {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Closing phrase (repeatable); replaces the built-in list.
        #[arg(long = "phrase")]
        phrases: Vec<String>,
        /// Do not treat a final unanswered responder question as disengagement.
        #[arg(long)]
        no_question_rule: bool,
    },
    /// Drop the final turns of every conversation.
    Truncate {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 3)]
        turns: usize,
    },
    /// Pair successful with disengaged conversations of similar length.
    Pair {
        #[arg(short, long)]
        input: PathBuf,
        /// One `{"success", "disengaged", ...}` record per line.
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the paired conversations as a corpus.
        #[arg(long)]
        corpus_output: Option<PathBuf>,
    },
    /// Generate a synthetic corpus from a world with known outcome probabilities.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        conversations: usize,
        #[arg(long, default_value_t = 12)]
        max_turns: usize,
        #[arg(long, value_enum, default_value_t = Preset::Counseling)]
        preset: Preset,
        /// Bias responder moves toward an outcome.
        #[arg(long, value_enum)]
        steer: Option<Steer>,
        #[arg(long, default_value_t = 1.5)]
        strength: f64,
        #[arg(short, long)]
        output: PathBuf,
        /// Exact per-moment PIV values, as JSON.
        #[arg(long)]
        annotations: Option<PathBuf>,
    },
    /// Score every moment of a corpus and write a moment table.
    Score {
        #[arg(short, long)]
        input: PathBuf,
        /// Moment table (JSON).
        #[arg(short, long)]
        output: PathBuf,
        /// Thresholds file from `pivot calibrate`; otherwise calibrated over this corpus.
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Also compute the embedding-range baseline.
        #[arg(long)]
        range: bool,
        /// Skip retrospective improvement.
        #[arg(long)]
        no_ri: bool,
        /// Sampling seed; overrides the config file (default 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 10.0)]
        lo: f64,
        #[arg(long, default_value_t = 90.0)]
        hi: f64,
    },
    /// Derive low/high thresholds from the PIV scores in a moment table.
    Calibrate {
        #[arg(short, long)]
        table: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        lo: f64,
        #[arg(long, default_value_t = 90.0)]
        hi: f64,
    },
    /// Write the analysis report (CSV files and summary.json) for a moment table.
    Analyze {
        #[arg(short, long)]
        table: PathBuf,
        /// Report directory.
        #[arg(short, long)]
        output: PathBuf,
        /// Relabel moments with these thresholds first.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        #[arg(long, default_value_t = 10)]
        top_terms: usize,
        #[arg(long, default_value_t = pivot_core::analysis::DEFAULT_PRIOR_MASS)]
        prior_mass: f64,
    },
    /// Print a few scored synthetic conversations with high-PIV moments in bold.
    Demo {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        conversations: usize,
    },
    /// Run the live session service.
    Serve {
        /// Listen address; overrides `[service] bind` (default 127.0.0.1:8080).
        #[arg(long)]
        bind: Option<String>,
        /// Sampling seed; overrides the config file (default 0).
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
