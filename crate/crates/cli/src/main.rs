use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ductmode::ranging::PeakAnchor;
use ductmode_cli::commands;
use ductmode_cli::config::RunConfig;
use ductmode_cli::CliError;

/// Normal-mode modelling, mode separation and source ranging for ducted waveguides.
///
/// Every setting lives in one TOML config (see README); flags override it.
#[derive(Parser)]
#[command(name = "ductmode", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sound speed profile CSV (depth_m,speed_mps); replaces the parametric profile.
    #[arg(long, global = true)]
    ssp: Option<PathBuf>,
    /// Bathymetry CSV (range_m,depth_m) used as a modal cutoff by `synth`.
    #[arg(long, global = true)]
    transect: Option<PathBuf>,
    /// Seed for randomized utilities.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve normal modes at single frequencies; writes ModeSet JSON and eigenfunction CSV.
    Modes {
        /// Frequencies in Hz.
        #[arg(long = "freq", num_args = 1..)]
        freqs: Vec<f64>,
        /// Maximum number of modes per frequency.
        #[arg(long)]
        max_modes: Option<usize>,
        /// Grid step in metres.
        #[arg(long)]
        dz: Option<f64>,
    },
    /// Group-velocity dispersion table over a frequency band.
    Dispersion {
        /// Lowest frequency (Hz).
        #[arg(long)]
        fmin: Option<f64>,
        /// Highest frequency (Hz).
        #[arg(long)]
        fmax: Option<f64>,
        /// Frequency step (Hz).
        #[arg(long)]
        df: Option<f64>,
        /// Maximum number of modes.
        #[arg(long)]
        max_modes: Option<usize>,
    },
    /// Synthesize the received waveform (CSV, WAV with JSON sidecar, PNG).
    Synth {
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Spectrogram of a waveform file.
    Spectrogram {
        /// Waveform (WAV with sidecar, or t_s,amplitude CSV).
        #[arg(long)]
        input: PathBuf,
        /// Window length in samples.
        #[arg(long)]
        window: Option<usize>,
        /// Hop in samples.
        #[arg(long)]
        hop: Option<usize>,
    },
    /// Warping mode separation of a waveform file.
    Separate {
        /// Waveform (WAV with sidecar, or t_s,amplitude CSV).
        #[arg(long)]
        input: PathBuf,
        /// Guard before the reference time, as a fraction of the gap after the window.
        #[arg(long)]
        guard_fraction: Option<f64>,
    },
    /// Range from the dispersion-structure duration.
    RangeA {
        /// Waveform (WAV with sidecar, or t_s,amplitude CSV).
        #[arg(long)]
        input: PathBuf,
        /// Start anchor: first, second, penultimate or last.
        #[arg(long, value_parser = anchor)]
        start: Option<PeakAnchor>,
        /// End anchor: first, second, penultimate or last.
        #[arg(long, value_parser = anchor)]
        end: Option<PeakAnchor>,
        /// Nominal range (km) used to weight modes when picking equivalent speeds.
        #[arg(long)]
        range_km: Option<f64>,
    },
    /// Range from the mode-1/mode-2 arrival difference.
    RangeB {
        /// Waveform (WAV with sidecar, or t_s,amplitude CSV).
        #[arg(long)]
        input: PathBuf,
        /// Averaging band for the mode speeds (Hz).
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        band: Option<Vec<f64>>,
    },
    /// End-to-end demo over several ranges, some behind a seamount.
    PipelineDemo {
        /// Ranges in km.
        #[arg(long, num_args = 1..)]
        ranges_km: Option<Vec<f64>>,
        /// Ranges (km) whose path crosses the seamount.
        #[arg(long, num_args = 0..)]
        blocked_km: Option<Vec<f64>>,
        /// Seamount summit depth (m).
        #[arg(long)]
        seamount_depth: Option<f64>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Source-receiver range (km).
    #[arg(long)]
    range_km: Option<f64>,
    /// Source depth (m).
    #[arg(long)]
    source_depth: Option<f64>,
    /// Receiver depth (m).
    #[arg(long)]
    receiver_depth: Option<f64>,
    /// Sample rate (Hz).
    #[arg(long)]
    fs: Option<f64>,
    /// Window length (s); sized automatically when omitted.
    #[arg(long)]
    duration: Option<f64>,
    /// Analysis band (Hz).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    band: Option<Vec<f64>>,
    /// Ricker center frequency (Hz).
    #[arg(long)]
    ricker: Option<f64>,
}

fn anchor(s: &str) -> Result<PeakAnchor, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown anchor `{s}`; use first, second, penultimate or last"))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn band(v: Option<Vec<f64>>) -> Option<[f64; 2]> {
    v.map(|b| [b[0], b[1]])
}

fn configure(global: Global, command: &Command) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.output_dir, global.out);
    set(&mut cfg.seed, global.seed);
    if global.ssp.is_some() {
        cfg.environment.ssp_csv = global.ssp;
    }
    if global.transect.is_some() {
        cfg.environment.transect_csv = global.transect;
    }
    match command {
        Command::Modes { freqs, max_modes, dz } => {
            if !freqs.is_empty() {
                cfg.modes.frequencies = freqs.clone();
            }
            set(&mut cfg.modes.max_modes, *max_modes);
            if dz.is_some() {
                cfg.modes.dz = *dz;
            }
        }
        Command::Dispersion { fmin, fmax, df, max_modes } => {
            let d = &mut cfg.dispersion;
            set(&mut d.f_min, *fmin);
            set(&mut d.f_max, *fmax);
            set(&mut d.df, *df);
            set(&mut d.max_modes, *max_modes);
        }
        Command::Synth { scenario: a } => {
            let s = &mut cfg.scenario;
            set(&mut s.range_km, a.range_km);
            set(&mut s.source_depth, a.source_depth);
            set(&mut s.receiver_depth, a.receiver_depth);
            set(&mut s.sample_rate, a.fs);
            set(&mut s.band, band(a.band.clone()));
            if a.duration.is_some() {
                s.duration = a.duration;
            }
            if let Some(fc) = a.ricker {
                s.wavelet = ductmode::synth::SourceWavelet::ricker(fc);
            }
        }
        Command::Spectrogram { window, hop, .. } => {
            set(&mut cfg.spectrogram.window, *window);
            set(&mut cfg.spectrogram.hop, *hop);
        }
        Command::Separate { guard_fraction, .. } => {
            set(&mut cfg.separation.guard_fraction, *guard_fraction);
        }
        Command::RangeA { start, end, range_km, .. } => {
            set(&mut cfg.ranging.start, *start);
            set(&mut cfg.ranging.end, *end);
            set(&mut cfg.scenario.range_km, *range_km);
        }
        Command::RangeB { band: b, .. } => {
            set(&mut cfg.ranging.mode_pair_band, band(b.clone()));
        }
        Command::PipelineDemo {
            ranges_km,
            blocked_km,
            seamount_depth,
        } => {
            set(&mut cfg.demo.ranges_km, ranges_km.clone());
            set(&mut cfg.demo.blocked_ranges_km, blocked_km.clone());
            set(&mut cfg.demo.seamount_depth, *seamount_depth);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let cfg = configure(cli.global, &cli.command)?;
    match &cli.command {
        Command::Modes { .. } => commands::cmd_modes(&cfg),
        Command::Dispersion { .. } => commands::cmd_dispersion(&cfg),
        Command::Synth { .. } => commands::cmd_synth(&cfg),
        Command::Spectrogram { input, .. } => commands::cmd_spectrogram(&cfg, input),
        Command::Separate { input, .. } => commands::cmd_separate(&cfg, input),
        Command::RangeA { input, .. } => commands::cmd_range_a(&cfg, input),
        Command::RangeB { input, .. } => commands::cmd_range_b(&cfg, input),
        Command::PipelineDemo { .. } => commands::cmd_pipeline_demo(&cfg).map(|(_, files)| files),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
