//! Sea-horizon detection from filtered line segments.
//!
//! A frame's red channel is downsampled and run through a line segment
//! detector. Segments are filtered by slope, length and proximity to the
//! longest candidates, rasterized back onto a full-resolution edge map, and
//! a Hough transform with a temporal outlier gate picks the horizon, which
//! least squares then refines.
//!
//! ```
//! use horizon_core::{generate_scene, DetectorConfig, Pipeline, SyntheticSceneParams, TemporalState};
//!
//! let params = SyntheticSceneParams { width: 640, height: 360, y_gt: 150.0, ..Default::default() };
//! let (frame, gt) = generate_scene(&params).unwrap();
//! let pipeline = Pipeline::new(DetectorConfig::default()).unwrap();
//! let (result, _) = pipeline.process_frame(&frame, &TemporalState::default()).unwrap();
//! let line = result.horizon.unwrap();
//! assert!((line.y - gt.y_gt).abs() < 2.0);
//! ```

// `!(x > 0.0)` style checks reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod edge_map;
pub mod error;
pub mod filters;
pub mod geometry;
pub mod inference;
pub mod io;
pub mod lsd;
pub mod pipeline;
pub mod preprocess;

pub use edge_map::{EdgeMap, MapScale, DEFAULT_E_TH};
pub use error::{Error, Result};
pub use filters::{filter_segments, FilterTrace, LsfParams, RoifMatrices, RoifParams};
pub use geometry::{IndexList, LineParams, Segment, SegmentSet};
pub use inference::{HorizonLine, HoughLine, HoughParams, OhmDecision, OhmParams, TemporalState};
pub use io::annotations::GtAnnotation;
pub use io::metrics::{ErrorRecord, MetricSummary, Stats};
pub use io::results::{ResultRecord, ResultsDocument};
pub use io::synth::{generate_scene, SequenceSpec, SyntheticSceneParams};
pub use lsd::{Lsd, LsdParams, SegmentDetector};
pub use pipeline::{DetectorConfig, FrameResult, OhmConfig, Pipeline, StageTimings, Stream};
pub use preprocess::{Frame, Raster};
