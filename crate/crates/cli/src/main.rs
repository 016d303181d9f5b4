use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use timebin::analysis::AngleSummary;
use timebin::experiment::{self, SnrKind};
use timebin::tagstream::{
    gated_counts, open_stream, read_stream, stream_stats, write_stream, GateWindow, SyncHistogrammer,
    MAX_TIMESTAMP,
};
use timebin::{Error, ExperimentConfig, Mask, Result};

#[derive(Parser)]
#[command(name = "timebin", version, about = "Time-bin single-photon imaging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Snr {
    High,
    Lamp,
}

#[derive(Subcommand)]
enum Command {
    /// Middle-peak phase scan over the array: histogram, scans and visibility map.
    PhaseScan {
        #[command(flatten)]
        common: Common,
        /// Also write the raw tag stream to tags.tbl.
        #[arg(long)]
        save_tags: bool,
    },
    /// Visibility and intensity against surface rotation.
    AngleScan {
        #[command(flatten)]
        common: Common,
        /// Rotation angles in degrees; the configured list when omitted.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        angles: Option<Vec<f64>>,
    },
    /// Intensity image and correlation reconstruction of an object mask.
    Image {
        #[command(flatten)]
        common: Common,
        /// 0/1 CSV mask of the object; a built-in letter when omitted.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "high")]
        snr: Snr,
    },
    /// BB84 session over the scattering channel.
    Qkd {
        #[command(flatten)]
        common: Common,
        /// Number of pulses; the configured value when omitted.
        #[arg(long)]
        pulses: Option<u64>,
    },
    /// Configuration utilities.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
    /// Tag-file utilities.
    Tags {
        #[command(subcommand)]
        action: TagsAction,
    },
}

#[derive(Subcommand)]
enum ConfigAction {
    /// Print the default configuration with source notes.
    Dump {
        /// Configuration to re-emit instead of the defaults.
        #[arg(long, short)]
        config: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TagsAction {
    /// Per-channel record counts.
    Inspect { file: PathBuf },
    /// Trigger-relative delay histogram as CSV.
    Hist {
        file: PathBuf,
        /// Channel to histogram; all photon channels when omitted.
        #[arg(long)]
        channel: Option<u16>,
        #[arg(long, default_value_t = 10)]
        bin_ps: u64,
        #[arg(long, default_value_t = 0)]
        lo_ps: u64,
        #[arg(long, default_value_t = 5000)]
        hi_ps: u64,
    },
    /// Post-selected counts per channel inside `center ± half_width`.
    Select {
        file: PathBuf,
        #[arg(long)]
        center_ps: u64,
        #[arg(long)]
        half_width_ps: u64,
        #[arg(long)]
        channel: Option<u16>,
    },
}

enum Outcome {
    Done,
    Insufficient(String),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Insufficient(_) => 3,
        Error::Invariant(_) | Error::Unordered { .. } => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Insufficient(msg)) => {
            eprintln!("insufficient data: {msg}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn finish(
    dir: &Path,
    command: &str,
    figure: &str,
    cfg: &ExperimentConfig,
    outputs: Vec<String>,
) -> Result<()> {
    experiment::write_manifest(dir, command, figure, cfg, outputs)
}

fn run(cmd: Command) -> Result<Outcome> {
    match cmd {
        Command::PhaseScan { common, save_tags } => {
            let cfg = common.load()?;
            let r = experiment::run_phase_scan(&cfg)?;
            let mut outputs = experiment::write_phase_scan(&common.out, &cfg, &r)?;
            if save_tags {
                write_stream(common.out.join("tags.tbl"), &r.stream)?;
                outputs.push("tags.tbl".into());
            }
            finish(&common.out, "phase-scan", "middle-peak intensity and visibility map", &cfg, outputs)?;
            if r.insufficient(&cfg) {
                return Ok(Outcome::Insufficient("an illuminated pixel could not be fitted".into()));
            }
            Ok(Outcome::Done)
        }
        Command::AngleScan { common, angles } => {
            let cfg = common.load()?;
            let angles = angles.unwrap_or_else(|| cfg.angle_scan.angles_deg.clone());
            if angles.is_empty() {
                return Err(Error::Config("angle list is empty".into()));
            }
            let rows = experiment::run_angle_scan(&cfg, &angles)?;
            let outputs = experiment::write_angle_scan(&common.out, &rows)?;
            finish(&common.out, "angle-scan", "visibility and intensity against rotation", &cfg, outputs)?;
            flagged(&rows, cfg.acquisition.count_floor)
        }
        Command::Image { common, mask, snr } => {
            let cfg = common.load()?;
            let object = match mask {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
                    Mask::parse_csv(&text)?
                }
                None => experiment::default_object_mask(cfg.sensor.rows, cfg.sensor.cols),
            };
            let (kind, figure) = match snr {
                Snr::High => (SnrKind::High, "correlation image, high SNR"),
                Snr::Lamp => (SnrKind::Lamp, "intensity and correlation images under lamp background"),
            };
            let r = experiment::run_image(&cfg, &object, kind)?;
            let outputs = experiment::write_image(&common.out, &object, &r)?;
            finish(&common.out, "image", figure, &cfg, outputs)?;
            Ok(Outcome::Done)
        }
        Command::Qkd { common, pulses } => {
            let cfg = common.load()?;
            let n = pulses.unwrap_or(cfg.qkd.n_pulses);
            let report = experiment::run_qkd(&cfg, n)?;
            let outputs = experiment::write_qkd(&common.out, &report)?;
            finish(&common.out, "qkd", "phase-encoded BB84 session", &cfg, outputs)?;
            if report.insufficient {
                return Ok(Outcome::Insufficient(format!(
                    "{} sifted bits, fewer than {}",
                    report.sift.sifted_count, cfg.qkd.min_sifted
                )));
            }
            Ok(Outcome::Done)
        }
        Command::Config { action: ConfigAction::Dump { config } } => {
            let cfg = match config {
                Some(p) => ExperimentConfig::load(&p)?,
                None => ExperimentConfig::default(),
            };
            print!("{}", cfg.to_commented_toml());
            Ok(Outcome::Done)
        }
        Command::Tags { action } => tags(action),
    }
}

fn flagged(rows: &[AngleSummary], floor: u64) -> Result<Outcome> {
    let low: Vec<String> = rows
        .iter()
        .filter(|r| r.insufficient)
        .map(|r| r.phi_deg.to_string())
        .collect();
    if low.is_empty() {
        Ok(Outcome::Done)
    } else {
        Ok(Outcome::Insufficient(format!(
            "fewer than {floor} counts at angles {}",
            low.join(", ")
        )))
    }
}

fn tags(action: TagsAction) -> Result<Outcome> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match action {
        TagsAction::Inspect { file } => {
            let mut failure = None;
            let stats = stream_stats(open_stream(&file)?.map_while(|r| r.map_err(|e| failure = Some(e)).ok()));
            if let Some(e) = failure {
                return Err(e);
            }
            writeln!(out, "channel,count")?;
            for (ch, n) in &stats.per_channel {
                writeln!(out, "{ch},{n}")?;
            }
            eprintln!(
                "records {} out_of_order {} first_ps {} last_ps {}",
                stats.records,
                stats.out_of_order,
                stats.first_timestamp.map(|t| t.to_string()).unwrap_or_default(),
                stats.last_timestamp.map(|t| t.to_string()).unwrap_or_default(),
            );
        }
        TagsAction::Hist { file, channel, bin_ps, lo_ps, hi_ps } => {
            let mut h = match channel {
                Some(c) => SyncHistogrammer::new(c, bin_ps, lo_ps, hi_ps)?,
                None => SyncHistogrammer::all_channels(bin_ps, lo_ps, hi_ps)?,
            };
            for r in open_stream(&file)? {
                h.push(r?)?;
            }
            let (hist, tally) = h.finish();
            write!(out, "{}", experiment::histogram_csv(&hist))?;
            eprintln!(
                "binned {} out_of_window {} before_first_trigger {}",
                tally.binned, tally.out_of_window, tally.before_first_trigger
            );
        }
        TagsAction::Select { file, center_ps, half_width_ps, channel } => {
            let stream = read_stream(&file)?;
            let gate = GateWindow::centered(center_ps, half_width_ps)?;
            let max = stream.iter().map(|r| r.channel()).max().unwrap_or(0);
            let g = gated_counts(stream.iter(), gate, &[0, MAX_TIMESTAMP + 1], max)?;
            writeln!(out, "channel,count")?;
            let channels: Vec<u16> = match channel {
                Some(c) => vec![c],
                None => (1..=max).collect(),
            };
            for ch in channels {
                let n = if ch <= max { g.channel_total(ch) } else { 0 };
                writeln!(out, "{ch},{n}")?;
            }
        }
    }
    Ok(Outcome::Done)
}
