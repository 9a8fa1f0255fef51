//! Per-video results document in JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{DetectorConfig, FrameResult, StageTimings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub frame_index: u64,
    pub y: Option<f64>,
    pub phi: Option<f64>,
    pub outlier: bool,
    pub failure: bool,
    #[serde(default)]
    pub recovered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub timings_ms: StageTimings,
}

impl ResultRecord {
    pub fn detected(frame_index: u64, y: f64, phi: f64) -> Self {
        ResultRecord {
            frame_index,
            y: Some(y),
            phi: Some(phi),
            outlier: false,
            failure: false,
            recovered: false,
            error: None,
            timings_ms: StageTimings::default(),
        }
    }

    pub fn failed(frame_index: u64) -> Self {
        ResultRecord {
            y: None,
            phi: None,
            failure: true,
            ..Self::detected(frame_index, 0.0, 0.0)
        }
    }
}

impl From<&FrameResult> for ResultRecord {
    fn from(r: &FrameResult) -> Self {
        ResultRecord {
            frame_index: r.frame_index,
            y: r.horizon.map(|h| h.y),
            phi: r.horizon.map(|h| h.phi),
            outlier: r.outlier,
            failure: r.failure,
            recovered: r.recovered,
            error: r.error.clone(),
            timings_ms: r.timings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub video_id: String,
    pub config_echo: serde_json::Value,
    pub frames: Vec<ResultRecord>,
}

impl ResultsDocument {
    pub fn new(video_id: impl Into<String>, config: &DetectorConfig) -> Self {
        ResultsDocument {
            video_id: video_id.into(),
            config_echo: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            frames: Vec::new(),
        }
    }

    pub fn push(&mut self, r: &FrameResult) {
        self.frames.push(r.into());
    }

    /// Mean total time over frames, or 0 for an empty document.
    pub fn mean_total_ms(&self) -> f64 {
        if self.frames.is_empty() {
            return 0.0;
        }
        self.frames.iter().map(|f| f.timings_ms.total).sum::<f64>() / self.frames.len() as f64
    }

    pub fn detections(&self) -> usize {
        self.frames.iter().filter(|f| f.y.is_some()).count()
    }
}

pub fn write_results(doc: &ResultsDocument, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(doc)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_results(path: &Path) -> Result<ResultsDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
