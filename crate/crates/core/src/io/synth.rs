//! Synthetic maritime scenes with known horizon.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::HorizonLine;
use crate::io::annotations::GtAnnotation;
use crate::preprocess::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Occluder {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
    pub intensity: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSceneParams {
    pub width: usize,
    pub height: usize,
    pub y_gt: f64,
    pub phi_gt: f64,
    /// Sky intensity right above the horizon.
    pub sky_intensity: f64,
    /// Change of sky intensity per pixel of distance above the horizon.
    pub sky_gradient: f64,
    /// Change of sea intensity per pixel of distance below the horizon.
    pub sea_gradient: f64,
    /// Sky minus sea intensity at the horizon; negative for a bright sea.
    pub contrast: f64,
    pub wave_amplitude: f64,
    /// Vertical wavelength of the wave pattern, pixels.
    pub wave_wavelength: f64,
    /// Distance below the horizon over which waves fade in, like distant
    /// sea washed out by haze. 0 starts them at full strength.
    pub wave_haze: f64,
    pub glint_count: usize,
    pub glint_brightness: u8,
    pub occluders: Vec<Occluder>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSceneParams {
    fn default() -> Self {
        SyntheticSceneParams {
            width: 1280,
            height: 720,
            y_gt: 360.0,
            phi_gt: 0.0,
            sky_intensity: 170.0,
            sky_gradient: 0.05,
            sea_gradient: 0.03,
            contrast: 80.0,
            wave_amplitude: 0.0,
            wave_wavelength: 14.0,
            wave_haze: 20.0,
            glint_count: 0,
            glint_brightness: 250,
            occluders: Vec::new(),
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SyntheticSceneParams {
    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::param("width", "scene must be at least 16x16"));
        }
        if !(0.0..=255.0).contains(&self.sky_intensity) {
            return Err(Error::param("sky_intensity", "must lie in [0, 255]"));
        }
        let sea = self.sky_intensity - self.contrast;
        if !(0.0..=255.0).contains(&sea) {
            return Err(Error::param("contrast", format!("sea intensity {sea} leaves [0, 255]")));
        }
        if !self.y_gt.is_finite() {
            return Err(Error::param("y_gt", "must be finite"));
        }
        if !(self.phi_gt.abs() < 90.0) {
            return Err(Error::param("phi_gt", "must lie in ]-90, 90["));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::param("noise_sigma", "must be >= 0"));
        }
        if !(self.wave_haze >= 0.0) {
            return Err(Error::param("wave_haze", "must be >= 0"));
        }
        if !(self.wave_wavelength > 0.0) {
            return Err(Error::param("wave_wavelength", "must be > 0"));
        }
        Ok(())
    }

    pub fn horizon(&self) -> HorizonLine {
        HorizonLine::new(self.y_gt, self.phi_gt)
    }
}

const SUPERSAMPLE: usize = 8;

/// Renders the scene. The red channel carries the intensity; green and blue
/// are tinted copies.
pub fn generate_scene(p: &SyntheticSceneParams) -> Result<(Frame, GtAnnotation)> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (w, h) = (p.width, p.height);
    let horizon = p.horizon();
    let slope = horizon.slope();
    let norm = (1.0 + slope * slope).sqrt();
    let sea_top = p.sky_intensity - p.contrast;
    let wave_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let crest_phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let tau = std::f64::consts::TAU;

    let sky_at = |d: f64| p.sky_intensity + p.sky_gradient * d;
    let sea_at = |d: f64, x: f64| {
        let mut v = sea_top + p.sea_gradient * d;
        if p.wave_amplitude > 0.0 {
            let lam = p.wave_wavelength;
            let ripple = (tau * d / lam + wave_phase + 0.8 * (tau * x / (4.1 * lam)).sin()).sin();
            let crests = 0.5 + 0.5 * (tau * x / (3.3 * lam) + crest_phase).sin();
            let fade = if p.wave_haze > 0.0 {
                1.0 - (-d / p.wave_haze).exp()
            } else {
                1.0
            };
            v += p.wave_amplitude * fade * ripple * crests;
        }
        v
    };

    let mut img = vec![0.0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            let (xf, yf) = (x as f64, y as f64);
            let line_y = horizon.y_at(xf, w);
            // Signed normal distance, positive below the horizon (sea side).
            let d = (yf - line_y) / norm;
            let v = if d.abs() * norm > 1.5 + slope.abs() {
                if d > 0.0 {
                    sea_at(d, xf)
                } else {
                    sky_at(-d)
                }
            } else {
                let mut sea = 0usize;
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let px = xf - 0.5 + (sx as f64 + 0.5) / SUPERSAMPLE as f64;
                        let py = yf - 0.5 + (sy as f64 + 0.5) / SUPERSAMPLE as f64;
                        if py > horizon.y_at(px, w) {
                            sea += 1;
                        }
                    }
                }
                let frac = sea as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64;
                frac * sea_at(d.max(0.0), xf) + (1.0 - frac) * sky_at((-d).max(0.0))
            };
            img[y * w + x] = v;
        }
    }

    for _ in 0..p.glint_count {
        let gx = rng.random_range(0..w);
        let gy = rng.random_range(0..h);
        if (gy as f64 - horizon.y_at(gx as f64, w)) < 3.0 {
            continue;
        }
        let r: i64 = rng.random_range(1..=2);
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (gx as i64 + dx, gy as i64 + dy);
                if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && dx * dx + dy * dy <= r * r {
                    img[y as usize * w + x as usize] = p.glint_brightness as f64;
                }
            }
        }
    }

    for o in &p.occluders {
        for y in o.y.min(h)..(o.y + o.height).min(h) {
            for x in o.x.min(w)..(o.x + o.width).min(w) {
                img[y * w + x] = o.intensity as f64;
            }
        }
    }

    if p.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, p.noise_sigma).expect("sigma validated");
        for v in &mut img {
            *v += normal.sample(&mut rng);
        }
    }

    let mut data = Vec::with_capacity(w * h * 3);
    for &v in &img {
        let r = v.round().clamp(0.0, 255.0);
        data.push(r as u8);
        data.push((r + 10.0).min(255.0) as u8);
        data.push((r + 25.0).min(255.0) as u8);
    }
    let frame = Frame::rgb(w, h, data)?;
    Ok((
        frame,
        GtAnnotation {
            frame_index: 0,
            y_gt: p.y_gt,
            phi_gt: p.phi_gt,
        },
    ))
}

/// A generated video: a base scene whose horizon follows a sinusoidal pitch
/// (vertical) and roll (tilt) motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SequenceSpec {
    pub frames: usize,
    pub scene: SyntheticSceneParams,
    pub pitch_amplitude: f64,
    pub pitch_period: f64,
    pub roll_amplitude: f64,
    pub roll_period: f64,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        SequenceSpec {
            frames: 50,
            scene: SyntheticSceneParams::default(),
            pitch_amplitude: 0.0,
            pitch_period: 50.0,
            roll_amplitude: 0.0,
            roll_period: 50.0,
        }
    }
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.pitch_period > 0.0) {
            return Err(Error::param("pitch_period", "must be > 0"));
        }
        if !(self.roll_period > 0.0) {
            return Err(Error::param("roll_period", "must be > 0"));
        }
        self.scene.validate()
    }

    /// Scene parameters of frame `i`. Each frame gets its own noise seed.
    pub fn frame_params(&self, i: usize) -> SyntheticSceneParams {
        let t = i as f64;
        let tau = std::f64::consts::TAU;
        let mut p = self.scene.clone();
        p.y_gt += self.pitch_amplitude * (tau * t / self.pitch_period).sin();
        p.phi_gt += self.roll_amplitude * (tau * t / self.roll_period).sin();
        p.seed = self.scene.seed.wrapping_add(i as u64);
        p
    }

    pub fn generate(&self) -> impl Iterator<Item = Result<(Frame, GtAnnotation)>> + '_ {
        (0..self.frames).map(move |i| {
            let (frame, mut gt) = generate_scene(&self.frame_params(i))?;
            gt.frame_index = i as u64;
            Ok((frame.with_index(i as u64), gt))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_scene_is_exact_step() {
        let p = SyntheticSceneParams {
            width: 200,
            height: 100,
            y_gt: 40.0,
            sky_intensity: 150.0,
            contrast: 100.0,
            sky_gradient: 0.0,
            sea_gradient: 0.0,
            ..Default::default()
        };
        let (f, gt) = generate_scene(&p).unwrap();
        assert_eq!((gt.y_gt, gt.phi_gt), (40.0, 0.0));
        for x in [0, 57, 199] {
            assert_eq!(f.pixel(x, 38)[0], 150);
            assert_eq!(f.pixel(x, 42)[0], 50);
            // Row 40 straddles the boundary: half sky, half sea.
            assert_eq!(f.pixel(x, 40)[0], 100);
        }
    }

    #[test]
    fn tilted_scene_sides() {
        let p = SyntheticSceneParams {
            width: 300,
            height: 200,
            y_gt: 100.0,
            phi_gt: 10.0,
            sky_gradient: 0.0,
            sea_gradient: 0.0,
            ..Default::default()
        };
        let (f, _) = generate_scene(&p).unwrap();
        let h = p.horizon();
        for x in (0..300).step_by(37) {
            let ly = h.y_at(x as f64, 300);
            assert_eq!(f.pixel(x, (ly - 4.0) as usize)[0], 170);
            assert_eq!(f.pixel(x, (ly + 4.0) as usize)[0], 90);
        }
        // Counter-clockwise tilt puts the right side higher.
        assert!(h.y_at(299.0, 300) < h.y_at(0.0, 300));
    }

    #[test]
    fn deterministic_per_seed() {
        let p = SyntheticSceneParams {
            width: 160,
            height: 90,
            noise_sigma: 3.0,
            wave_amplitude: 4.0,
            glint_count: 10,
            seed: 99,
            ..Default::default()
        };
        assert_eq!(generate_scene(&p).unwrap().0, generate_scene(&p).unwrap().0);
        let q = SyntheticSceneParams { seed: 100, ..p.clone() };
        assert_ne!(generate_scene(&p).unwrap().0, generate_scene(&q).unwrap().0);
    }

    #[test]
    fn weak_edge_scene_generates() {
        let p = SyntheticSceneParams {
            contrast: 8.0,
            noise_sigma: 2.0,
            wave_amplitude: 3.0,
            ..Default::default()
        };
        let (f, _) = generate_scene(&p).unwrap();
        assert_eq!((f.width(), f.height()), (1280, 720));
    }

    #[test]
    fn invalid_params() {
        let p = SyntheticSceneParams {
            contrast: 300.0,
            ..Default::default()
        };
        assert!(matches!(
            generate_scene(&p),
            Err(Error::InvalidParam { field: "contrast", .. })
        ));
    }

    #[test]
    fn sequence_trajectory() {
        let spec = SequenceSpec {
            frames: 8,
            scene: SyntheticSceneParams {
                width: 64,
                height: 48,
                y_gt: 24.0,
                ..Default::default()
            },
            pitch_amplitude: 5.0,
            pitch_period: 8.0,
            roll_amplitude: 2.0,
            roll_period: 4.0,
        };
        let gts: Vec<_> = spec.generate().map(|r| r.unwrap().1).collect();
        assert_eq!(gts.len(), 8);
        assert!((gts[2].y_gt - 29.0).abs() < 1e-9);
        assert!((gts[1].phi_gt - 2.0).abs() < 1e-9);
        assert_eq!(gts[5].frame_index, 5);
    }
}
