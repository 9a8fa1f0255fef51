//! Turning candidate segments back into edge pixels.
//!
//! Segments are sampled into points on the downsampled grid, splatted into a
//! binary map, then relocated onto the original frame size: bilinear upsampling
//! produces a thick grayscale ridge which column-wise non-maximum suppression
//! and a near-saturation threshold thin back to one pixel per column.

use serde::{Deserialize, Serialize};

use crate::geometry::{Segment, SegmentSet};

/// Threshold applied to the upsampled map.
pub const DEFAULT_E_TH: f32 = 254.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapScale {
    Downsampled,
    Original,
}

/// Binary edge raster: 0 or 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
    pub scale: MapScale,
}

impl EdgeMap {
    pub fn empty(width: usize, height: usize, scale: MapScale) -> Self {
        EdgeMap {
            width,
            height,
            data: vec![0; width * height],
            scale,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize) {
        self.data[y * self.width + x] = 255;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Coordinates of every edge pixel, row-major order.
    pub fn points(&self) -> Vec<(u32, u32)> {
        let mut pts = Vec::new();
        for (y, row) in self.data.chunks_exact(self.width).enumerate() {
            for (x, &v) in row.iter().enumerate() {
                if v != 0 {
                    pts.push((x as u32, y as u32));
                }
            }
        }
        pts
    }
}

/// Sample coordinates along all candidate segments.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoords {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl EdgeCoords {
    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Evenly spaced points from start to end, about one per pixel of length.
/// Segments shorter than a pixel yield their start point only.
pub fn rasterize_segment(seg: &Segment, length: f64) -> (Vec<f64>, Vec<f64>) {
    if length < 1.0 {
        return (vec![seg.x_s], vec![seg.y_s]);
    }
    let n = (length.round() as usize).max(2);
    let step_x = (seg.x_e - seg.x_s) / (n - 1) as f64;
    let step_y = (seg.y_e - seg.y_s) / (n - 1) as f64;
    let mut xs: Vec<f64> = (0..n).map(|j| step_x * j as f64 + seg.x_s).collect();
    let mut ys: Vec<f64> = (0..n).map(|j| step_y * j as f64 + seg.y_s).collect();
    // Pin the far end so it is reproduced exactly.
    xs[n - 1] = seg.x_e;
    ys[n - 1] = seg.y_e;
    (xs, ys)
}

/// Concatenated samples of every segment, clamped to `[0, w-1] x [0, h-1]`.
pub fn segments_to_coords(sf: &SegmentSet, width: usize, height: usize) -> EdgeCoords {
    let lengths: Vec<f64> = match sf.lengths() {
        Some(l) => l.to_vec(),
        None => sf.iter().map(|s| s.length()).collect(),
    };
    let mut out = EdgeCoords::default();
    let (mx, my) = ((width - 1) as f64, (height - 1) as f64);
    for (seg, &len) in sf.iter().zip(&lengths) {
        let (xs, ys) = rasterize_segment(&seg, len);
        out.x.extend(xs.into_iter().map(|v| v.clamp(0.0, mx)));
        out.y.extend(ys.into_iter().map(|v| v.clamp(0.0, my)));
    }
    out
}

/// Binary map with 255 at each rounded coordinate.
pub fn build_downsampled_map(coords: &EdgeCoords, width: usize, height: usize) -> EdgeMap {
    let mut map = EdgeMap::empty(width, height, MapScale::Downsampled);
    for (&x, &y) in coords.x.iter().zip(&coords.y) {
        let xi = (x.round().max(0.0) as usize).min(width - 1);
        let yi = (y.round().max(0.0) as usize).min(height - 1);
        map.set(xi, yi);
    }
    map
}

/// Grayscale intermediate: bilinear upsampling of a downsampled map.
#[derive(Debug, Clone, PartialEq)]
pub struct Upsampled {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Upsampled {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }
}

struct Tap {
    i0: usize,
    i1: usize,
    w1: f32,
}

fn taps(n_out: usize, n_in: usize, kappa: f64) -> Vec<Tap> {
    (0..n_out)
        .map(|o| {
            let s = (o as f64 * kappa).clamp(0.0, (n_in - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(n_in - 1);
            Tap {
                i0,
                i1,
                w1: (s - i0 as f64) as f32,
            }
        })
        .collect()
}

/// Bilinear upsampling of `eprime` to `width x height`. Output pixel `x`
/// samples the input at `x * kappa`.
pub fn upsample(eprime: &EdgeMap, kappa: f64, width: usize, height: usize) -> Upsampled {
    let tx = taps(width, eprime.width, kappa);
    let ty = taps(height, eprime.height, kappa);
    let row_busy: Vec<bool> = eprime
        .data
        .chunks_exact(eprime.width)
        .map(|r| r.iter().any(|&v| v != 0))
        .collect();
    let mut data = vec![0.0f32; width * height];
    for (y, t) in ty.iter().enumerate() {
        if !row_busy[t.i0] && !row_busy[t.i1] {
            continue;
        }
        let r0 = &eprime.data[t.i0 * eprime.width..(t.i0 + 1) * eprime.width];
        let r1 = &eprime.data[t.i1 * eprime.width..(t.i1 + 1) * eprime.width];
        let out = &mut data[y * width..(y + 1) * width];
        for (o, c) in out.iter_mut().zip(&tx) {
            let top = r0[c.i0] as f32 * (1.0 - c.w1) + r0[c.i1] as f32 * c.w1;
            let bot = r1[c.i0] as f32 * (1.0 - c.w1) + r1[c.i1] as f32 * c.w1;
            *o = top * (1.0 - t.w1) + bot * t.w1;
        }
    }
    Upsampled { width, height, data }
}

/// Keeps pixels that are column-wise local maxima, then thresholds. A
/// vertical plateau of equal values counts as one maximum and is replaced by
/// its middle pixel (the upper one of the two middles for even runs).
pub fn suppress_and_threshold(up: &Upsampled, e_th: f32) -> EdgeMap {
    let (w, h) = (up.width, up.height);
    let mut out = EdgeMap::empty(w, h, MapScale::Original);
    // Per column: first row of the current run of equal values, and the
    // value just above that run.
    let mut run_start = vec![0usize; w];
    let mut above = vec![0.0f32; w];
    let close = |out: &mut EdgeMap, x: usize, start: usize, end: usize, v: f32, prev: f32, next: f32| {
        if v >= e_th && v > prev && v > next {
            out.data[(start + (end - start) / 2) * w + x] = 255;
        }
    };
    for y in 1..=h {
        for x in 0..w {
            let cur = up.data[(y - 1) * w + x];
            let next = if y < h { up.data[y * w + x] } else { 0.0 };
            if next != cur {
                close(&mut out, x, run_start[x], y - 1, cur, above[x], next);
                run_start[x] = y;
                above[x] = cur;
            }
        }
    }
    out
}

/// Full-resolution, one-pixel-thick edge map from the downsampled one.
pub fn reconstruct_full_map(eprime: &EdgeMap, kappa: f64, width: usize, height: usize, e_th: f32) -> EdgeMap {
    suppress_and_threshold(&upsample(eprime, kappa, width, height), e_th)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rasterize_examples() {
        let s = Segment::new(0.0, 0.0, 4.0, 0.0);
        let (x, y) = rasterize_segment(&s, 4.0);
        let expect = [0.0, 4.0 / 3.0, 8.0 / 3.0, 4.0];
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(y, vec![0.0; 4]);

        let s = Segment::new(0.0, 0.0, 0.4, 0.3);
        assert_eq!(rasterize_segment(&s, s.length()), (vec![0.0], vec![0.0]));

        for s in [Segment::new(1.3, 2.7, 97.1, 40.9), Segment::new(5.0, 5.0, 6.2, 4.1)] {
            let (x, y) = rasterize_segment(&s, s.length());
            assert_eq!((x[0], y[0]), (s.x_s, s.y_s));
            assert_eq!((*x.last().unwrap(), *y.last().unwrap()), (s.x_e, s.y_e));
        }
    }

    #[test]
    fn downsampled_map_examples() {
        assert!(build_downsampled_map(&EdgeCoords::default(), 10, 10).is_empty());

        let one = EdgeCoords {
            x: vec![3.4],
            y: vec![7.6],
        };
        let m = build_downsampled_map(&one, 10, 10);
        assert_eq!(m.points(), vec![(3, 8)]);

        let dup = EdgeCoords {
            x: vec![3.4, 3.4, 3.1],
            y: vec![7.6, 7.6, 7.9],
        };
        assert_eq!(build_downsampled_map(&dup, 10, 10), m);
    }

    #[test]
    fn empty_map_reconstructs_empty() {
        let e = EdgeMap::empty(40, 30, MapScale::Downsampled);
        assert!(reconstruct_full_map(&e, 0.5, 80, 60, DEFAULT_E_TH).is_empty());
    }

    #[test]
    fn horizontal_row_becomes_thin_row() {
        let r = 17;
        let mut e = EdgeMap::empty(50, 40, MapScale::Downsampled);
        for x in 0..50 {
            e.set(x, r);
        }
        let full = reconstruct_full_map(&e, 0.5, 100, 80, DEFAULT_E_TH);
        for x in 0..100 {
            let rows: Vec<usize> = (0..80).filter(|&y| full.get(x, y) != 0).collect();
            assert_eq!(rows.len(), 1, "column {x}: {rows:?}");
            assert!((rows[0] as i64 - 2 * r as i64).abs() <= 1);
        }
    }

    #[test]
    fn plateau_keeps_its_middle() {
        // Rows 8 and 9 map to 16 and 18; 17 interpolates to the same value.
        let mut e = EdgeMap::empty(20, 20, MapScale::Downsampled);
        for x in 0..20 {
            e.set(x, 8);
            e.set(x, 9);
        }
        let full = reconstruct_full_map(&e, 0.5, 40, 40, DEFAULT_E_TH);
        for x in 0..39 {
            let rows: Vec<usize> = (0..40).filter(|&y| full.get(x, y) != 0).collect();
            assert_eq!(rows, vec![17], "column {x}");
        }
    }

    #[test]
    fn nms_only_removes() {
        let mut e = EdgeMap::empty(30, 30, MapScale::Downsampled);
        for x in 0..30 {
            e.set(x, 10 + x / 6);
            e.set(x, 11 + x / 6);
        }
        let up = upsample(&e, 0.5, 60, 60);
        let above = up.data.iter().filter(|&&v| v >= DEFAULT_E_TH).count();
        let thin = suppress_and_threshold(&up, DEFAULT_E_TH);
        assert!(thin.count() <= above);
        for x in 0..60 {
            let n = (0..60).filter(|&y| thin.get(x, y) != 0).count();
            assert!(n <= 2, "column {x} has {n}");
        }
    }
}
