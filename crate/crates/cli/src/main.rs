//! `gazeswipe`: decode, replay, sweep, synthesize, score and serve.
//!
//! Exit status is 0 on success, 1 when a `--check` threshold is missed and
//! 2 for usage, input and I/O errors.

mod commands;
mod models;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "gazeswipe", version, about = "Gaze-swipe word decoding tools")]
pub struct Cli {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub decoder: DecoderArgs,
    /// Print one JSON object instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Directory holding layout.json, lexicon.tsv and ngrams.tsv.
    #[arg(long, global = true, env = "SWIPE_DECODE_DATA")]
    pub data_dir: Option<PathBuf>,
    /// Layout JSON; the built-in QWERTY layout when neither this nor the
    /// data directory provides one.
    #[arg(long, global = true)]
    pub layout: Option<PathBuf>,
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Word bigram counts (`w1 w2<TAB>count`).
    #[arg(long, global = true)]
    pub ngrams: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DecoderArgs {
    /// Language-model weight in the fusion.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Smoothing added to the n-gram probability before fusion.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub top_k: Option<usize>,
    /// I-VT velocity threshold, deg/s.
    #[arg(long, global = true)]
    pub ivt_threshold: Option<f64>,
    /// DBSCAN radius in keyboard widths.
    #[arg(long, global = true)]
    pub dbscan_eps: Option<f64>,
    #[arg(long, global = true)]
    pub dbscan_min_pts: Option<usize>,
    /// Keyboard widths per second on DBSCAN's time axis.
    #[arg(long, global = true)]
    pub time_scale: Option<f64>,
    /// Drop the time coordinate from the alignment.
    #[arg(long, global = true)]
    pub no_time_dim: bool,
    /// Align every raw sample instead of fixation centroids.
    #[arg(long, global = true)]
    pub no_pruning: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Rank candidates for one record of a trace file.
    Decode {
        trace_file: PathBuf,
        record_id: String,
    },
    /// Decode every record and report accuracy and latency.
    Replay {
        trace_file: PathBuf,
        /// Per-record CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        check: ReplayCheck,
    },
    /// Replay once per pruning-parameter grid point.
    Sweep {
        trace_file: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [50.0, 100.0, 150.0])]
        ivt_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.10, 0.15])]
        eps_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 5, 6])]
        min_pts_grid: Vec<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        check: SweepCheck,
    },
    /// Generate synthetic traces for lexicon words.
    Synth {
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Start from the noisy preset (0.3 key-width jitter, 20 mm drift on 10%).
        #[arg(long)]
        noisy: bool,
        /// Landing error per fixation, key widths.
        #[arg(long)]
        jitter: Option<f64>,
        #[arg(long)]
        sample_noise_mm: Option<f64>,
        #[arg(long)]
        drift_mm: Option<f64>,
        #[arg(long)]
        drift_fraction: Option<f64>,
        #[arg(long)]
        dwell_ms: Option<f64>,
        #[arg(long)]
        saccade_deg_s: Option<f64>,
        /// Draw from the N most frequent words only.
        #[arg(long)]
        top_words: Option<usize>,
        /// Output file; standard output when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Score a recorded session event log.
    Metrics {
        session_log: PathBuf,
        /// Per-trial CSV output.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the WebSocket typing service.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Built UI bundle served at `/`.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
        /// Directory for per-connection event logs.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Convert an external CSV dataset into the trace format.
    Import {
        source_dir: PathBuf,
        #[arg(long, value_enum, default_value_t = FrameArg::Mm)]
        frame: FrameArg,
        /// Required with `--frame pixels`.
        #[arg(long)]
        px_per_mm: Option<f64>,
        /// Output file; `<data dir>/imported/traces.jsonl` when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Count word bigrams in text files.
    BuildNgrams {
        #[arg(required = true)]
        corpus: Vec<PathBuf>,
        /// Drop pairs seen fewer times.
        #[arg(long, default_value_t = 1)]
        min_count: u64,
        /// Output file; `<data dir>/ngrams.tsv` when omitted.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct ReplayCheck {
    /// Exit with status 1 when a threshold is missed.
    #[arg(long)]
    pub check: bool,
    #[arg(long, requires = "check")]
    pub min_top1: Option<f64>,
    #[arg(long, requires = "check")]
    pub min_top4: Option<f64>,
    #[arg(long, requires = "check")]
    pub max_mean_ms: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepCheck {
    /// Exit with status 1 when the grid is not stable.
    #[arg(long)]
    pub check: bool,
    /// Largest allowed max/min mean latency ratio.
    #[arg(long, default_value_t = 2.0)]
    pub max_latency_ratio: f64,
    /// Largest allowed Top-1 gain, in points, from the middle to the
    /// highest I-VT threshold.
    #[arg(long, default_value_t = 1.0)]
    pub max_saturation_gap: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
pub enum FrameArg {
    Mm,
    Normalized,
    Pixels,
}

/// What a command found, beyond plain success.
pub enum Outcome {
    Done,
    CheckFailed(Vec<String>),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match commands::run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed(failures)) => {
            for f in failures {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
