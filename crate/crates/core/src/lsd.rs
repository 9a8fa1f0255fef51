//! Line segment detection by gradient-orientation region growing.
//!
//! Pixels are visited in decreasing gradient magnitude. Each unused seed grows
//! an 8-connected region of pixels whose gradient direction stays within
//! `angle_tolerance` of the running region direction. A region becomes a
//! segment when it is large enough and fills its oriented bounding rectangle
//! densely enough; the segment is the rectangle's principal axis. A sparse
//! region is first trimmed to a thin band through its seed, then regrown
//! once with half the tolerance.
//!
//! Instead of the a-contrario false-alarm test, acceptance uses a region
//! size floor plus a rectangle density floor. Anything implementing
//! [`SegmentDetector`] can replace this detector in the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Segment, SegmentSet};
use crate::preprocess::{Raster, MIN_SIDE};

/// Minimum ratio of region pixels to rectangle area.
pub const MIN_DENSITY: f64 = 0.7;

const ORDER_BINS: usize = 1024;
/// Half-width of the band kept when a sparse region is trimmed to its axis.
const TRIM_HALF_WIDTH: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsdParams {
    /// Gray levels per pixel; weaker pixels never join a region.
    pub grad_magnitude_threshold: f64,
    /// Degrees.
    pub angle_tolerance: f64,
    /// `None` derives the floor from the image size.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_region_size: Option<usize>,
}

impl Default for LsdParams {
    fn default() -> Self {
        LsdParams {
            grad_magnitude_threshold: 2.0,
            angle_tolerance: 22.5,
            min_region_size: None,
        }
    }
}

impl LsdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_magnitude_threshold >= 0.0) {
            return Err(Error::param("grad_magnitude_threshold", "must be >= 0"));
        }
        if !(self.angle_tolerance > 0.0 && self.angle_tolerance < 90.0) {
            return Err(Error::param("angle_tolerance", "must lie in ]0, 90["));
        }
        if matches!(self.min_region_size, Some(n) if n < 2) {
            return Err(Error::param("min_region_size", "must be >= 2"));
        }
        Ok(())
    }

    /// Region size floor. When unset, the smallest region whose chance of
    /// arising from aligned noise drops below one expected false detection
    /// for a `width x height` image.
    pub fn region_floor(&self, width: usize, height: usize) -> usize {
        self.min_region_size.unwrap_or_else(|| {
            let log_nt = 2.5 * ((width as f64).log10() + (height as f64).log10());
            let p = self.angle_tolerance / 180.0;
            ((-log_nt / p.log10()) as usize).max(2)
        })
    }
}

/// Anything that turns a grayscale raster into segments.
pub trait SegmentDetector: Send + Sync {
    fn detect(&self, raster: &Raster) -> Result<SegmentSet>;
}

/// The built-in region-growing detector.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lsd {
    pub params: LsdParams,
}

impl Lsd {
    pub fn new(params: LsdParams) -> Self {
        Lsd { params }
    }
}

impl SegmentDetector for Lsd {
    fn detect(&self, raster: &Raster) -> Result<SegmentSet> {
        detect_segments(raster, &self.params)
    }
}

/// Per-pixel gradient on 2x2 neighbourhoods. Sample `(x, y)` describes the
/// point `(x + 0.5, y + 0.5)`; the last row and column are undefined.
struct Gradient {
    width: usize,
    height: usize,
    mag: Vec<f32>,
    /// Unit gradient direction; meaningless where `mag` is below threshold.
    dir: Vec<[f32; 2]>,
    max_mag: f32,
}

fn gradient(r: &Raster) -> Gradient {
    let (w, h) = (r.width, r.height);
    let mut mag = vec![0.0f32; w * h];
    let mut dir = vec![[0.0f32; 2]; w * h];
    let mut max_mag = 0.0f32;
    for y in 0..h - 1 {
        let top = &r.data[y * w..(y + 1) * w];
        let bot = &r.data[(y + 1) * w..(y + 2) * w];
        for x in 0..w - 1 {
            let (a, b, c, d) = (top[x], top[x + 1], bot[x], bot[x + 1]);
            let gx = 0.5 * (b + d - a - c);
            let gy = 0.5 * (c + d - a - b);
            let m = (gx * gx + gy * gy).sqrt();
            let i = y * w + x;
            mag[i] = m;
            if m > 0.0 {
                dir[i] = [gx / m, gy / m];
            }
            max_mag = max_mag.max(m);
        }
    }
    Gradient {
        width: w,
        height: h,
        mag,
        dir,
        max_mag,
    }
}

/// Pixel indices above `threshold`, in decreasing magnitude (binned), ties
/// in raster order.
fn pseudo_order(g: &Gradient, threshold: f32) -> Vec<u32> {
    if g.max_mag <= threshold {
        return Vec::new();
    }
    let scale = (ORDER_BINS as f32 - 1.0) / g.max_mag;
    let bin = |m: f32| ORDER_BINS - 1 - ((m * scale) as usize).min(ORDER_BINS - 1);
    let mut counts = vec![0usize; ORDER_BINS + 1];
    for &m in &g.mag {
        if m > threshold {
            counts[bin(m) + 1] += 1;
        }
    }
    for i in 1..=ORDER_BINS {
        counts[i] += counts[i - 1];
    }
    let mut out = vec![0u32; counts[ORDER_BINS]];
    for (i, &m) in g.mag.iter().enumerate() {
        if m > threshold {
            let b = bin(m);
            out[counts[b]] = i as u32;
            counts[b] += 1;
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Unused,
    Used,
    Undefined,
}

struct Rect {
    seg: Segment,
    density: f64,
    length: f64,
    axis: (f64, f64),
}

struct Grower<'a> {
    g: &'a Gradient,
    state: Vec<State>,
    region: Vec<u32>,
}

impl Grower<'_> {
    /// Grows a region from `seed`, marking members used.
    fn grow(&mut self, seed: u32, cos_tol: f32) {
        let w = self.g.width as i64;
        let h = self.g.height as i64;
        self.region.clear();
        self.region.push(seed);
        self.state[seed as usize] = State::Used;
        let [sx, sy] = self.g.dir[seed as usize];
        let (mut sum_x, mut sum_y) = (sx, sy);
        let (mut ux, mut uy) = (sx, sy);
        let mut k = 0;
        while k < self.region.len() {
            let p = self.region[k] as i64;
            let (px, py) = (p % w, p / w);
            for dy in -1..=1i64 {
                let ny = py + dy;
                if ny < 0 || ny >= h - 1 {
                    continue;
                }
                for dx in -1..=1i64 {
                    let nx = px + dx;
                    if nx < 0 || nx >= w - 1 || (dx == 0 && dy == 0) {
                        continue;
                    }
                    let q = (ny * w + nx) as usize;
                    if self.state[q] != State::Unused {
                        continue;
                    }
                    let [qx, qy] = self.g.dir[q];
                    if qx * ux + qy * uy >= cos_tol {
                        self.state[q] = State::Used;
                        self.region.push(q as u32);
                        sum_x += qx;
                        sum_y += qy;
                        let n = (sum_x * sum_x + sum_y * sum_y).sqrt();
                        if n > 0.0 {
                            ux = sum_x / n;
                            uy = sum_y / n;
                        }
                    }
                }
            }
            k += 1;
        }
    }

    fn release(&mut self) {
        for &p in &self.region {
            self.state[p as usize] = State::Unused;
        }
    }

    /// Magnitude-weighted principal-axis rectangle of the current region.
    fn rect(&self) -> Rect {
        let w = self.g.width;
        let (mut sw, mut sx, mut sy) = (0.0f64, 0.0f64, 0.0f64);
        for &p in &self.region {
            let m = self.g.mag[p as usize] as f64;
            let p = p as usize;
            sw += m;
            sx += m * (p % w) as f64;
            sy += m * (p / w) as f64;
        }
        let (cx, cy) = (sx / sw, sy / sw);
        let (mut cxx, mut cyy, mut cxy) = (0.0f64, 0.0f64, 0.0f64);
        for &p in &self.region {
            let m = self.g.mag[p as usize] as f64;
            let p = p as usize;
            let dx = (p % w) as f64 - cx;
            let dy = (p / w) as f64 - cy;
            cxx += m * dx * dx;
            cyy += m * dy * dy;
            cxy += m * dx * dy;
        }
        let theta = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
        let (st, ct) = theta.sin_cos();
        let (mut l_min, mut l_max, mut w_min, mut w_max) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for &p in &self.region {
            let p = p as usize;
            let dx = (p % w) as f64 - cx;
            let dy = (p / w) as f64 - cy;
            let l = dx * ct + dy * st;
            let d = -dx * st + dy * ct;
            l_min = l_min.min(l);
            l_max = l_max.max(l);
            w_min = w_min.min(d);
            w_max = w_max.max(d);
        }
        let length = l_max - l_min;
        let width = (w_max - w_min).max(1.0);
        let density = self.region.len() as f64 / (length.max(1.0) * width);
        // Gradient samples sit half a pixel down and right of their index.
        let (ox, oy) = (cx + 0.5, cy + 0.5);
        let seg = Segment::new(ox + l_min * ct, oy + l_min * st, ox + l_max * ct, oy + l_max * st);
        Rect {
            seg,
            density,
            length,
            axis: (ct, st),
        }
    }

    /// Drops members farther than `TRIM_HALF_WIDTH` from the line through
    /// the seed along the axis of `rect`, and frees them. Returns whether
    /// anything was dropped.
    fn trim(&mut self, rect: &Rect) -> bool {
        let w = self.g.width;
        let seed = self.region[0] as usize;
        let (cx, cy) = ((seed % w) as f64, (seed / w) as f64);
        let (ct, st) = rect.axis;
        let before = self.region.len();
        let state = &mut self.state;
        self.region.retain(|&p| {
            let p = p as usize;
            let d = -((p % w) as f64 - cx) * st + ((p / w) as f64 - cy) * ct;
            let keep = d.abs() <= TRIM_HALF_WIDTH;
            if !keep {
                state[p] = State::Unused;
            }
            keep
        });
        self.region.len() < before
    }

    /// Rectangle of the current region, trimmed to its axis when too sparse.
    fn dense_rect(&mut self, min_size: usize) -> Option<Rect> {
        let rect = self.rect();
        if rect.density >= MIN_DENSITY {
            return Some(rect);
        }
        if !self.trim(&rect) || self.region.len() < min_size {
            return None;
        }
        let rect = self.rect();
        (rect.density >= MIN_DENSITY).then_some(rect)
    }
}

/// Detects segments on `raster`. Deterministic for a given input.
pub fn detect_segments(raster: &Raster, params: &LsdParams) -> Result<SegmentSet> {
    params.validate()?;
    if raster.width < MIN_SIDE || raster.height < MIN_SIDE {
        return Err(Error::ImageTooSmall {
            width: raster.width,
            height: raster.height,
        });
    }
    let g = gradient(raster);
    let threshold = params.grad_magnitude_threshold as f32;
    let order = pseudo_order(&g, threshold);
    let min_size = params.region_floor(raster.width, raster.height);
    let cos_tol = params.angle_tolerance.to_radians().cos() as f32;
    let cos_tight = (params.angle_tolerance / 2.0).to_radians().cos() as f32;

    let state = g
        .mag
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let (x, y) = (i % g.width, i / g.width);
            if m <= threshold || x + 1 == g.width || y + 1 == g.height {
                State::Undefined
            } else {
                State::Unused
            }
        })
        .collect();
    let mut grower = Grower {
        g: &g,
        state,
        region: Vec::new(),
    };
    let (max_x, max_y) = ((raster.width - 1) as f64, (raster.height - 1) as f64);
    let mut out = SegmentSet::new();

    for &seed in &order {
        if grower.state[seed as usize] != State::Unused {
            continue;
        }
        grower.grow(seed, cos_tol);
        if grower.region.len() < min_size {
            continue;
        }
        let rect = match grower.dense_rect(min_size) {
            Some(r) => r,
            None => {
                // Retry once with a tighter orientation tolerance; pixels the
                // first attempt swallowed become available again.
                grower.release();
                grower.grow(seed, cos_tight);
                if grower.region.len() < min_size {
                    continue;
                }
                match grower.dense_rect(min_size) {
                    Some(r) => r,
                    None => continue,
                }
            }
        };
        if rect.length < min_size as f64 / 2.0 {
            continue;
        }
        let s = rect.seg;
        out.push(Segment::new(
            s.x_s.clamp(0.0, max_x),
            s.y_s.clamp(0.0, max_y),
            s.x_e.clamp(0.0, max_x),
            s.y_e.clamp(0.0, max_y),
        ));
    }
    Ok(out)
}
