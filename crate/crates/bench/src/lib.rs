//! Fixtures shared by the stage benchmarks.

use horizon_core::{generate_scene, Frame, SyntheticSceneParams};

/// Frame sizes exercised by the benchmarks.
pub const RESOLUTIONS: [(&str, usize, usize); 3] = [("480p", 854, 480), ("720p", 1280, 720), ("1080p", 1920, 1080)];

/// A sea scene with waves and sensor noise at the given size.
pub fn sea_frame(width: usize, height: usize) -> Frame {
    let params = SyntheticSceneParams {
        width,
        height,
        y_gt: height as f64 * 0.42,
        phi_gt: 1.5,
        wave_amplitude: 6.0,
        noise_sigma: 2.0,
        ..Default::default()
    };
    generate_scene(&params).expect("valid scene parameters").0
}
