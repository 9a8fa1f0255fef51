use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use horizon_core::DetectorConfig;

use crate::error::CliError;

/// Sea-horizon detection from filtered line segments.
#[derive(Debug, Parser)]
#[command(name = "horizon", version, about, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect the horizon in one image and print `Y=<px> phi=<deg>`.
    Detect(DetectArgs),
    /// Process a frame source with one temporal state and write results JSON.
    Run(RunArgs),
    /// Compare results with annotations; write the metric table and histograms.
    Eval(EvalArgs),
    /// Time the pipeline per stage over a frame source.
    Bench(BenchArgs),
    /// Write intermediate segment sets and edge maps of one image.
    DebugDump(DebugDumpArgs),
    /// Generate a synthetic sequence with matching annotations.
    Synth(SynthArgs),
}

/// Detector configuration: a TOML file plus per-key overrides. Each flag is
/// named after its configuration key.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML configuration file; keys not given keep their defaults.
    #[arg(long, short = 'c', value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Downsampling factor in ]0, 1].
    #[arg(long, value_name = "K")]
    pub kappa: Option<f64>,
    /// Smallest gradient magnitude joining a segment region, gray levels per pixel.
    #[arg(
        long = "grad_magnitude_threshold",
        alias = "grad-magnitude-threshold",
        value_name = "G"
    )]
    pub grad_magnitude_threshold: Option<f64>,
    /// Orientation tolerance of region growing, degrees.
    #[arg(long = "angle_tolerance", alias = "angle-tolerance", value_name = "DEG")]
    pub angle_tolerance: Option<f64>,
    /// Smallest region emitted as a segment, pixels (default: from image size).
    #[arg(long = "min_region_size", alias = "min-region-size", value_name = "N")]
    pub min_region_size: Option<usize>,
    /// Largest accepted |slope| of a segment.
    #[arg(long = "alpha_th", alias = "alpha-th", value_name = "A")]
    pub alpha_th: Option<f64>,
    /// Number of longest segments used as primary candidates.
    #[arg(long = "n_c", alias = "n-c", value_name = "N")]
    pub n_c: Option<usize>,
    /// Number of following segments tested against the primary lines.
    #[arg(long = "n_d", alias = "n-d", value_name = "N")]
    pub n_d: Option<usize>,
    /// Band half-width around primary lines, pixels.
    #[arg(long = "t_roi", alias = "t-roi", value_name = "PX")]
    pub t_roi: Option<f64>,
    /// Outlier threshold on Y as a fraction of frame height.
    #[arg(long = "dy_th_frac", alias = "dy-th-frac", value_name = "F")]
    pub dy_th_frac: Option<f64>,
    /// Outlier threshold on Y in pixels; overrides dy_th_frac.
    #[arg(long = "dy_th_px", alias = "dy-th-px", value_name = "PX")]
    pub dy_th_px: Option<f64>,
    /// Outlier threshold on tilt, degrees.
    #[arg(long = "dphi_th", alias = "dphi-th", value_name = "DEG")]
    pub dphi_th: Option<f64>,
    /// Consecutive outliers tolerated before recovery.
    #[arg(long = "n_outs_th", alias = "n-outs-th", value_name = "N")]
    pub n_outs_th: Option<u32>,
    /// Hough lines examined for a substitute.
    #[arg(long = "m_top", alias = "m-top", value_name = "N")]
    pub m_top: Option<usize>,
    /// Inlier distance for least-squares refinement, pixels.
    #[arg(long = "d_in", alias = "d-in", value_name = "PX")]
    pub d_in: Option<f64>,
    /// Threshold applied to the upsampled edge map.
    #[arg(long = "e_th", alias = "e-th", value_name = "V")]
    pub e_th: Option<f64>,
    /// Keep intermediate products of every frame.
    #[arg(long = "debug_dump", alias = "debug-dump")]
    pub debug_dump: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<DetectorConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => DetectorConfig::load(path)?,
            None => DetectorConfig::default(),
        };
        let overrides: [(&str, Option<String>); 15] = [
            ("kappa", self.kappa.map(|v| v.to_string())),
            (
                "grad_magnitude_threshold",
                self.grad_magnitude_threshold.map(|v| v.to_string()),
            ),
            ("angle_tolerance", self.angle_tolerance.map(|v| v.to_string())),
            ("min_region_size", self.min_region_size.map(|v| v.to_string())),
            ("alpha_th", self.alpha_th.map(|v| v.to_string())),
            ("n_c", self.n_c.map(|v| v.to_string())),
            ("n_d", self.n_d.map(|v| v.to_string())),
            ("t_roi", self.t_roi.map(|v| v.to_string())),
            ("dy_th_frac", self.dy_th_frac.map(|v| v.to_string())),
            ("dy_th_px", self.dy_th_px.map(|v| v.to_string())),
            ("dphi_th", self.dphi_th.map(|v| v.to_string())),
            ("n_outs_th", self.n_outs_th.map(|v| v.to_string())),
            ("m_top", self.m_top.map(|v| v.to_string())),
            ("d_in", self.d_in.map(|v| v.to_string())),
            ("e_th", self.e_th.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        if self.debug_dump {
            cfg.debug_dump = true;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// PNG or JPEG image.
    pub image: PathBuf,
    /// Write the image with the detected line drawn on it.
    #[arg(long, value_name = "PNG")]
    pub overlay: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Directory of numbered images, HRZN raw file, `-` for stdin, or `cmd:<decoder>`.
    pub source: String,
    /// Results JSON to write.
    #[arg(long, short = 'o', value_name = "JSON")]
    pub out: PathBuf,
    /// Identifier stored in the results (default: source name).
    #[arg(long, value_name = "ID")]
    pub video_id: Option<String>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Results JSON written by `run`.
    pub results: PathBuf,
    /// Annotation CSV with header `frame_index,y_gt_px,phi_gt_deg`.
    pub annotations: PathBuf,
    /// Directory for the metric CSV and histograms.
    #[arg(long, short = 'o', value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Annotations give Y at the left image edge; convert using this width.
    #[arg(long, value_name = "PX")]
    pub left_edge_width: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BenchFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Frame source as for `run`; omit when using `--synthetic`.
    #[arg(required_unless_present = "synthetic")]
    pub source: Option<String>,
    /// Generate frames of this size instead, e.g. `1920x1080`.
    #[arg(long, value_name = "WxH", value_parser = parse_size, conflicts_with = "source")]
    pub synthetic: Option<(usize, usize)>,
    /// Number of synthetic frames.
    #[arg(long, default_value_t = 30, value_name = "N")]
    pub frames: usize,
    /// Passes over the frames.
    #[arg(long, default_value_t = 1, value_name = "N")]
    pub repetitions: usize,
    /// Independent streams processed concurrently.
    #[arg(long = "parallel-streams", default_value_t = 1, value_name = "N")]
    pub parallel_streams: usize,
    #[arg(long, value_enum, default_value_t = BenchFormat::Text)]
    pub format: BenchFormat,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct DebugDumpArgs {
    /// PNG or JPEG image.
    pub image: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, short = 'o', value_name = "DIR")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthFormat {
    /// Numbered PNG files.
    Png,
    /// One HRZN raw stream, `frames.hrzn`.
    Raw,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML sequence description; omitted keys keep their defaults.
    pub params: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, short = 'o', value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = SynthFormat::Png)]
    pub format: SynthFormat,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: usize = w.parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: usize = h.parse().map_err(|_| format!("bad height `{h}`"))?;
    if w == 0 || h == 0 {
        return Err("size must be positive".into());
    }
    Ok((w, h))
}
