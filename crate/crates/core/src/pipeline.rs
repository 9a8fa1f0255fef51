//! Per-frame orchestration with stage timing.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::edge_map::{build_downsampled_map, reconstruct_full_map, segments_to_coords, EdgeMap};
use crate::error::{Error, Result};
use crate::filters::{assemble_candidates, length_partition, roif, slope_filter, FilterTrace, LsfParams, RoifParams};
use crate::inference::{
    hough_top_lines_on_points, ohm_select, refine_on_points, HorizonLine, HoughLine, HoughParams, OhmDecision,
    OhmParams, TemporalState,
};
use crate::lsd::{Lsd, LsdParams, SegmentDetector};
use crate::preprocess::{downsample, extract_red, Frame};

/// Outlier-gate settings as stored in configuration. The vertical threshold
/// is a fraction of frame height unless an absolute value is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OhmConfig {
    pub dy_th_frac: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dy_th_px: Option<f64>,
    pub dphi_th: f64,
    pub n_outs_th: u32,
    pub m_top: usize,
    pub d_in: f64,
}

impl Default for OhmConfig {
    fn default() -> Self {
        OhmConfig {
            dy_th_frac: 0.05,
            dy_th_px: None,
            dphi_th: 1.5,
            n_outs_th: 10,
            m_top: 10,
            d_in: 2.0,
        }
    }
}

impl OhmConfig {
    pub fn resolve(&self, frame_height: usize) -> OhmParams {
        OhmParams {
            dy_th: self.dy_th_px.unwrap_or(self.dy_th_frac * frame_height as f64),
            dphi_th: self.dphi_th,
            n_outs_th: self.n_outs_th,
            m_top: self.m_top,
            d_in: self.d_in,
        }
    }
}

/// Every tunable of the detector. Serialized flat: one TOML key per field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub kappa: f64,
    #[serde(flatten)]
    pub lsd: LsdParams,
    #[serde(flatten)]
    pub lsf: LsfParams,
    #[serde(flatten)]
    pub roif: RoifParams,
    #[serde(flatten)]
    pub ohm: OhmConfig,
    pub e_th: f64,
    pub debug_dump: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            kappa: 0.5,
            lsd: LsdParams::default(),
            lsf: LsfParams::default(),
            roif: RoifParams::default(),
            ohm: OhmConfig::default(),
            e_th: crate::edge_map::DEFAULT_E_TH as f64,
            debug_dump: false,
        }
    }
}

/// Configuration keys accepted in TOML files and as overrides.
pub const CONFIG_KEYS: &[&str] = &[
    "kappa",
    "grad_magnitude_threshold",
    "angle_tolerance",
    "min_region_size",
    "alpha_th",
    "n_c",
    "n_d",
    "t_roi",
    "dy_th_frac",
    "dy_th_px",
    "dphi_th",
    "n_outs_th",
    "m_top",
    "d_in",
    "e_th",
    "debug_dump",
];

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::param("kappa", "must lie in ]0, 1]"));
        }
        if !(self.e_th > 0.0 && self.e_th <= 255.0) {
            return Err(Error::param("e_th", "must lie in ]0, 255]"));
        }
        if !(self.ohm.dy_th_frac > 0.0) {
            return Err(Error::param("dy_th_frac", "must be > 0"));
        }
        self.lsd.validate()?;
        self.lsf.validate()?;
        self.roif.validate()?;
        self.ohm.resolve(1).validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        if let Some(k) = table.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown configuration key `{k}`")));
        }
        let cfg: DetectorConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Overrides one key with a value written in TOML syntax (`0.5`,
    /// `true`, `12`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !CONFIG_KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown configuration key `{key}`")));
        }
        let parsed: toml::Table = format!("v = {value}")
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse value `{value}` for `{key}`")))?;
        let mut table = toml::Table::try_from(*self).expect("config serializes");
        table.insert(key.to_string(), parsed["v"].clone());
        *self = Self::from_table(table)?;
        Ok(())
    }
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub detect: f64,
    pub lsf: f64,
    pub roif: f64,
    pub step_edge: f64,
    pub inference: f64,
    pub total: f64,
}

impl StageTimings {
    pub fn stage_sum(&self) -> f64 {
        self.detect + self.lsf + self.roif + self.step_edge + self.inference
    }
}

/// Intermediate products of one frame, kept when debugging.
#[derive(Debug, Clone)]
pub struct FrameDebug {
    pub trace: FilterTrace,
    pub eprime: EdgeMap,
    pub edges: EdgeMap,
    pub top_lines: Vec<HoughLine>,
}

#[derive(Debug, Clone)]
pub struct FrameResult {
    pub frame_index: u64,
    /// `None` when the frame was skipped.
    pub horizon: Option<HorizonLine>,
    pub decision: Option<OhmDecision>,
    /// The strongest line was rejected by the outlier gate.
    pub outlier: bool,
    /// No horizon could be produced for this frame.
    pub failure: bool,
    /// The outlier gate declared a failure state and reset.
    pub recovered: bool,
    pub error: Option<String>,
    pub timings: StageTimings,
    pub debug: Option<Box<FrameDebug>>,
}

/// Stateless part of the per-frame work: everything up to the ranked Hough
/// lines.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub width: usize,
    pub height: usize,
    pub trace: FilterTrace,
    pub eprime: EdgeMap,
    pub edges: EdgeMap,
    pub edge_points: Vec<(u32, u32)>,
    pub top_lines: Vec<HoughLine>,
    pub timings: StageTimings,
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// The detector for one configuration. Cheap to share between threads;
/// temporal state lives outside.
#[derive(Clone)]
pub struct Pipeline {
    config: DetectorConfig,
    detector: Arc<dyn SegmentDetector>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl Pipeline {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline {
            config,
            detector: Arc::new(Lsd::new(config.lsd)),
        })
    }

    pub fn with_detector(config: DetectorConfig, detector: Arc<dyn SegmentDetector>) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline { config, detector })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn hough_params(&self) -> HoughParams {
        HoughParams::for_slope_threshold(self.config.lsf.alpha_th)
    }

    /// Runs detection, filtering, edge reconstruction and Hough voting.
    pub fn analyze(&self, frame: &Frame) -> Result<Analysis> {
        let cfg = &self.config;
        let t_total = Instant::now();
        let mut timings = StageTimings::default();

        let t = Instant::now();
        let red = extract_red(frame);
        let small = downsample(&red, cfg.kappa)?;
        let sa = self.detector.detect(&small)?.with_cache();
        timings.detect = ms_since(t);

        let t = Instant::now();
        let (b_from_a, sb) = slope_filter(&sa, cfg.lsf.alpha_th);
        let part = length_partition(&sb, cfg.lsf.n_c, cfg.lsf.n_d);
        timings.lsf = ms_since(t);

        let t = Instant::now();
        let roi = roif(&part.sc, &part.sd, cfg.roif.t_roi);
        let sf = assemble_candidates(&part.sc, &roi.se);
        timings.roif = ms_since(t);

        let t = Instant::now();
        let coords = segments_to_coords(&sf, small.width, small.height);
        let eprime = build_downsampled_map(&coords, small.width, small.height);
        let edges = reconstruct_full_map(&eprime, cfg.kappa, frame.width(), frame.height(), cfg.e_th as f32);
        let edge_points = edges.points();
        timings.step_edge = ms_since(t);

        let t = Instant::now();
        let top_lines = hough_top_lines_on_points(
            &edge_points,
            frame.width(),
            frame.height(),
            cfg.ohm.m_top,
            &self.hough_params(),
        )?;
        timings.inference = ms_since(t);
        timings.total = ms_since(t_total);

        let trace = FilterTrace {
            sa,
            sb,
            sc: part.sc,
            sd: part.sd,
            se: roi.se,
            sf,
            b_from_a,
            c_from_b: part.c_idx,
            d_from_b: part.d_idx,
            e_from_d: roi.e_idx,
            matrices: cfg.debug_dump.then_some(roi.matrices),
        };
        Ok(Analysis {
            width: frame.width(),
            height: frame.height(),
            trace,
            eprime,
            edges,
            edge_points,
            top_lines,
            timings,
        })
    }

    /// Full per-frame step. Soft failures leave `state` untouched and are
    /// reported in the result.
    pub fn process_frame(&self, frame: &Frame, state: &TemporalState) -> Result<(FrameResult, TemporalState)> {
        let t_total = Instant::now();
        let analysis = match self.analyze(frame) {
            Ok(a) => a,
            Err(e) if e.is_soft() => {
                let result = FrameResult {
                    frame_index: frame.frame_index,
                    horizon: None,
                    decision: None,
                    outlier: false,
                    failure: true,
                    recovered: false,
                    error: Some(e.to_string()),
                    timings: StageTimings {
                        total: ms_since(t_total),
                        ..Default::default()
                    },
                    debug: None,
                };
                return Ok((result, state.clone()));
            }
            Err(e) => return Err(e),
        };

        let t = Instant::now();
        let params = self.config.ohm.resolve(frame.height());
        let (coarse, mut next, decision) = ohm_select(&analysis.top_lines, state, &params);
        let refined = refine_on_points(&coarse, &analysis.edge_points, analysis.width, params.d_in);
        if decision.updates_prev() {
            next.prev = Some(refined);
        }
        let mut timings = analysis.timings;
        timings.inference += ms_since(t);
        timings.total = ms_since(t_total);

        let debug = self.config.debug_dump.then(|| {
            Box::new(FrameDebug {
                trace: analysis.trace,
                eprime: analysis.eprime,
                edges: analysis.edges,
                top_lines: analysis.top_lines,
            })
        });
        let result = FrameResult {
            frame_index: frame.frame_index,
            horizon: Some(refined),
            decision: Some(decision),
            outlier: decision.is_outlier(),
            failure: false,
            recovered: decision == OhmDecision::Recovered,
            error: None,
            timings,
            debug,
        };
        Ok((result, next))
    }
}

/// One video stream: a pipeline plus the temporal state it owns.
#[derive(Debug, Clone)]
pub struct Stream {
    pipeline: Pipeline,
    state: TemporalState,
}

impl Stream {
    pub fn new(pipeline: Pipeline) -> Self {
        Stream {
            pipeline,
            state: TemporalState::default(),
        }
    }

    pub fn resume(pipeline: Pipeline, state: TemporalState) -> Self {
        Stream { pipeline, state }
    }

    pub fn state(&self) -> &TemporalState {
        &self.state
    }

    pub fn push(&mut self, frame: &Frame) -> Result<FrameResult> {
        let (result, next) = self.pipeline.process_frame(frame, &self.state)?;
        self.state = next;
        Ok(result)
    }
}
