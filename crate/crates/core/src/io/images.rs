//! Image file I/O and simple overlay drawing.

use std::path::Path;

use image::{GrayImage, RgbImage};

use crate::edge_map::EdgeMap;
use crate::error::{Error, Result};
use crate::geometry::SegmentSet;
use crate::inference::HorizonLine;
use crate::preprocess::Frame;

pub fn load_image(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = img.into_rgb8();
    let (w, h) = rgb.dimensions();
    Frame::rgb(w as usize, h as usize, rgb.into_raw())
}

fn to_rgb_image(frame: &Frame) -> RgbImage {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let data = match frame.channels() {
        3 => frame.data().to_vec(),
        _ => frame.data().iter().flat_map(|&v| [v, v, v]).collect(),
    };
    RgbImage::from_raw(w, h, data).expect("frame buffer matches its dimensions")
}

pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    to_rgb_image(frame).save(path).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })
}

pub fn save_edge_map(map: &EdgeMap, path: &Path) -> Result<()> {
    GrayImage::from_raw(map.width as u32, map.height as u32, map.data.clone())
        .expect("edge map buffer matches its dimensions")
        .save(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
}

/// RGB canvas for overlays.
#[derive(Debug, Clone)]
pub struct Canvas {
    img: RgbImage,
}

impl Canvas {
    pub fn from_frame(frame: &Frame) -> Self {
        Canvas {
            img: to_rgb_image(frame),
        }
    }

    pub fn width(&self) -> usize {
        self.img.width() as usize
    }

    pub fn height(&self) -> usize {
        self.img.height() as usize
    }

    fn plot(&mut self, x: f64, y: f64, color: [u8; 3]) {
        let (xi, yi) = (x.round(), y.round());
        if xi >= 0.0 && yi >= 0.0 && (xi as u32) < self.img.width() && (yi as u32) < self.img.height() {
            self.img.put_pixel(xi as u32, yi as u32, image::Rgb(color));
        }
    }

    /// Draws a segment by dense sampling; `thickness` extends vertically.
    pub fn segment(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, color: [u8; 3], thickness: u32) {
        let steps = ((x1 - x0).abs().max((y1 - y0).abs()) * 2.0).ceil().max(1.0) as usize;
        let half = thickness as f64 / 2.0;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            let mut dy = -half + 0.5;
            while dy <= half - 0.5 + 1e-9 {
                self.plot(x, y + dy, color);
                dy += 1.0;
            }
        }
    }

    pub fn horizon(&mut self, line: &HorizonLine, color: [u8; 3]) {
        let w = self.width();
        let x1 = (w - 1) as f64;
        self.segment(0.0, line.y_at(0.0, w), x1, line.y_at(x1, w), color, 3);
    }

    /// Draws segments given in coordinates scaled by `scale` relative to
    /// the canvas.
    pub fn segments(&mut self, set: &SegmentSet, scale: f64, color: [u8; 3]) {
        for s in set.iter() {
            self.segment(s.x_s * scale, s.y_s * scale, s.x_e * scale, s.y_e * scale, color, 1);
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.img.get_pixel(x as u32, y as u32).0
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.img.save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.png");
        let data: Vec<u8> = (0..12 * 10 * 3).map(|i| (i % 251) as u8).collect();
        let frame = Frame::rgb(12, 10, data.clone()).unwrap();
        save_frame(&frame, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!((back.width(), back.height()), (12, 10));
        assert_eq!(back.data(), &data[..]);
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(matches!(
            load_image(Path::new("/nonexistent/x.png")),
            Err(Error::Image { .. })
        ));
    }

    #[test]
    fn horizon_overlay_marks_the_line() {
        let frame = Frame::gray(41, 21, vec![0; 41 * 21]).unwrap();
        let mut c = Canvas::from_frame(&frame);
        c.horizon(&HorizonLine::new(10.0, 0.0), [255, 0, 0]);
        assert_eq!(c.pixel(0, 10), [255, 0, 0]);
        assert_eq!(c.pixel(40, 10), [255, 0, 0]);
        assert_eq!(c.pixel(20, 3), [0, 0, 0]);
    }
}
