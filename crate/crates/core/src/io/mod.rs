//! Frame sources, annotations, results, metrics and the scene generator.

pub mod annotations;
pub mod frames;
pub mod images;
pub mod metrics;
pub mod plots;
pub mod results;
pub mod synth;
