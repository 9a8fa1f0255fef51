//! Red-channel extraction and area-averaging downsampling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest raster the detector accepts after downsampling.
pub const MIN_SIDE: usize = 8;

/// An input video frame, interleaved 8-bit samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
    pub frame_index: u64,
    pub timestamp: Option<f64>,
}

impl Frame {
    /// `channels` must be 3 (RGB) or 1 (gray).
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!("empty frame {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidFrame(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidFrame(format!(
                "expected {} bytes, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            channels,
            data,
            frame_index: 0,
            timestamp: None,
        })
    }

    pub fn rgb(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 3, data)
    }

    pub fn gray(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        Self::new(width, height, 1, data)
    }

    pub fn with_index(mut self, index: u64) -> Self {
        self.frame_index = index;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn data(&self) -> &[u8] {
        &self.data
    }
    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }
}

/// Single-channel floating-point image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Raster {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster { width, height, data }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len().max(1) as f64
    }

    /// Rotates the raster by 180 degrees.
    pub fn rotated_180(&self) -> Raster {
        let mut data = self.data.clone();
        data.reverse();
        Raster {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

/// Takes the red channel of an RGB frame; gray frames pass through.
pub fn extract_red(frame: &Frame) -> Raster {
    let data = match frame.channels {
        1 => frame.data.iter().map(|&v| v as f32).collect(),
        _ => frame.data.chunks_exact(frame.channels).map(|px| px[0] as f32).collect(),
    };
    Raster {
        width: frame.width,
        height: frame.height,
        data,
    }
}

/// Output size for scale `kappa`, before the minimum-size check.
pub fn scaled_dims(width: usize, height: usize, kappa: f64) -> (usize, usize) {
    let s = |n: usize| (kappa * n as f64 + 1e-9).floor() as usize;
    (s(width), s(height))
}

/// Sparse resampling weights along one axis.
struct AxisWeights {
    start: Vec<usize>,
    weights: Vec<Vec<f32>>,
}

/// Output sample `i` sits at input coordinate `i / kappa` (pixel centers on
/// integers) and averages the input over a box of width `1 / kappa` around
/// it, clipped to the image.
fn axis_weights(n_in: usize, n_out: usize, kappa: f64) -> AxisWeights {
    let half = 0.5 / kappa;
    let lo_edge = -0.5;
    let hi_edge = n_in as f64 - 0.5;
    let mut start = Vec::with_capacity(n_out);
    let mut weights = Vec::with_capacity(n_out);
    for i in 0..n_out {
        let c = i as f64 / kappa;
        let a = (c - half).max(lo_edge);
        let b = (c + half).min(hi_edge);
        let first = (a + 0.5).floor().max(0.0) as usize;
        let last = ((b + 0.5).ceil() as usize).min(n_in).max(first + 1);
        let mut w: Vec<f64> = (first..last)
            .map(|j| {
                let pl = j as f64 - 0.5;
                let pr = j as f64 + 0.5;
                (b.min(pr) - a.max(pl)).max(0.0)
            })
            .collect();
        let total: f64 = w.iter().sum();
        for v in &mut w {
            *v /= total;
        }
        start.push(first);
        weights.push(w.into_iter().map(|v| v as f32).collect());
    }
    AxisWeights { start, weights }
}

/// Area-averaging downsample by `kappa` in `]0, 1]`.
pub fn downsample(src: &Raster, kappa: f64) -> Result<Raster> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::param("kappa", format!("{kappa} is outside ]0, 1]")));
    }
    let (w, h) = scaled_dims(src.width, src.height, kappa);
    if w < MIN_SIDE || h < MIN_SIDE {
        return Err(Error::ImageTooSmall { width: w, height: h });
    }
    if kappa == 1.0 {
        return Ok(src.clone());
    }
    let wx = axis_weights(src.width, w, kappa);
    let wy = axis_weights(src.height, h, kappa);

    // Horizontal pass into a (w x src.height) buffer, then vertical.
    let mut tmp = vec![0.0f32; w * src.height];
    for y in 0..src.height {
        let row = &src.data[y * src.width..(y + 1) * src.width];
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let s = wx.start[x];
            *o = wx.weights[x].iter().zip(&row[s..]).map(|(k, v)| k * v).sum();
        }
    }
    let mut data = vec![0.0f32; w * h];
    for y in 0..h {
        let s = wy.start[y];
        let out = &mut data[y * w..(y + 1) * w];
        for (k, &wk) in wy.weights[y].iter().enumerate() {
            let row = &tmp[(s + k) * w..(s + k + 1) * w];
            for (o, v) in out.iter_mut().zip(row) {
                *o += wk * v;
            }
        }
    }
    Ok(Raster {
        width: w,
        height: h,
        data,
    })
}

/// Pixel-center mapping between the downsampled and the original grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMap {
    pub kappa: f64,
}

impl ScaleMap {
    pub fn to_original(&self, v: f64) -> f64 {
        v / self.kappa
    }
    pub fn to_downsampled(&self, v: f64) -> f64 {
        v * self.kappa
    }
}
