//! Horizon inference on the full-resolution edge map: Hough peaks, temporal
//! outlier gating, and least-squares refinement.

use serde::{Deserialize, Serialize};

use crate::edge_map::EdgeMap;
use crate::error::{Error, Result};
use crate::geometry::LineParams;

/// Horizon position and tilt.
///
/// `y` is measured at the central column `(width - 1) / 2` with pixel
/// centers on integer coordinates. `phi` is in degrees, positive when the
/// line rises to the right on screen (counter-clockwise).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonLine {
    pub y: f64,
    pub phi: f64,
}

pub fn center_x(width: usize) -> f64 {
    (width as f64 - 1.0) / 2.0
}

impl HorizonLine {
    pub fn new(y: f64, phi: f64) -> Self {
        HorizonLine { y, phi }
    }

    /// `dy/dx` in image coordinates (y grows downward).
    pub fn slope(&self) -> f64 {
        -self.phi.to_radians().tan()
    }

    pub fn y_at(&self, x: f64, width: usize) -> f64 {
        self.y + self.slope() * (x - center_x(width))
    }

    pub fn to_line(&self, width: usize) -> LineParams {
        let alpha = self.slope();
        LineParams {
            alpha,
            beta: self.y - alpha * center_x(width),
        }
    }

    pub fn from_line(line: LineParams, width: usize) -> Self {
        HorizonLine {
            y: line.at(center_x(width)),
            phi: -line.alpha.atan().to_degrees(),
        }
    }

    pub fn distance(&self, x: f64, y: f64, width: usize) -> f64 {
        let a = self.slope();
        (a * (x - center_x(width)) + self.y - y).abs() / (1.0 + a * a).sqrt()
    }

    /// Rescales a line found on an image of width `from_w` to an image
    /// `factor` times larger. Angles are unchanged.
    pub fn rescale(&self, from_w: usize, factor: f64, to_w: usize) -> Self {
        let line = self.to_line(from_w);
        let scaled = LineParams {
            alpha: line.alpha,
            beta: line.beta * factor,
        };
        HorizonLine::from_line(scaled, to_w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughParams {
    /// Degrees per angle bin.
    pub theta_step: f64,
    /// Largest tilt searched, degrees.
    pub max_tilt: f64,
    /// Half-size of the suppression window, in angle bins.
    pub suppress_theta: usize,
    /// Half-size of the suppression window, in distance bins.
    pub suppress_rho: usize,
}

impl HoughParams {
    /// Covers every tilt the slope filter can let through, plus a margin.
    pub fn for_slope_threshold(alpha_th: f64) -> Self {
        HoughParams {
            theta_step: 0.25,
            max_tilt: alpha_th.atan().to_degrees() + 2.0,
            suppress_theta: 4,
            suppress_rho: 5,
        }
    }
}

impl Default for HoughParams {
    fn default() -> Self {
        Self::for_slope_threshold(0.6)
    }
}

/// One Hough peak converted to horizon form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughLine {
    pub line: HorizonLine,
    pub votes: u32,
    pub theta_bin: usize,
    pub rho_bin: usize,
}

/// Vote accumulator over `(tilt, distance)`. A line with tilt `psi` (image
/// coordinates) has normal distance `rho = (y - yc) cos psi - (x - xc) sin psi`
/// from the image center.
#[derive(Debug, Clone)]
pub struct HoughAccumulator {
    pub n_theta: usize,
    pub n_rho: usize,
    pub votes: Vec<u32>,
    half_theta: usize,
    rho_offset: f64,
    step: f64,
    width: usize,
    height: usize,
}

impl HoughAccumulator {
    pub fn new(width: usize, height: usize, params: &HoughParams) -> Self {
        let half_theta = (params.max_tilt / params.theta_step).ceil() as usize;
        let n_theta = 2 * half_theta + 1;
        let diag = ((width * width + height * height) as f64).sqrt();
        let rho_offset = (diag / 2.0).ceil() + 1.0;
        let n_rho = 2 * rho_offset as usize + 1;
        HoughAccumulator {
            n_theta,
            n_rho,
            votes: vec![0; n_theta * n_rho],
            half_theta,
            rho_offset,
            step: params.theta_step,
            width,
            height,
        }
    }

    pub fn tilt_of(&self, theta_bin: usize) -> f64 {
        (theta_bin as f64 - self.half_theta as f64) * self.step
    }

    pub fn vote(&mut self, points: &[(u32, u32)]) {
        let xc = center_x(self.width);
        let yc = (self.height as f64 - 1.0) / 2.0;
        let trig: Vec<(f64, f64)> = (0..self.n_theta)
            .map(|t| self.tilt_of(t).to_radians().sin_cos())
            .collect();
        for &(x, y) in points {
            let (dx, dy) = (x as f64 - xc, y as f64 - yc);
            for (t, &(s, c)) in trig.iter().enumerate() {
                let rho = dy * c - dx * s;
                let r = (rho + self.rho_offset).round() as usize;
                self.votes[t * self.n_rho + r] += 1;
            }
        }
    }

    pub fn to_horizon(&self, theta_bin: usize, rho_bin: usize) -> HorizonLine {
        let psi = self.tilt_of(theta_bin).to_radians();
        let rho = rho_bin as f64 - self.rho_offset;
        let yc = (self.height as f64 - 1.0) / 2.0;
        HorizonLine {
            y: yc + rho / psi.cos(),
            phi: -psi.to_degrees(),
        }
    }
}

/// Up to `m_top` distinct peaks of a row-major `n_theta x n_rho` grid, best
/// first. Ties go to the smaller `(theta, rho)` index. A peak suppresses
/// every bin within the given window half-sizes.
pub fn find_peaks<T: PartialOrd + Copy + Default>(
    votes: &[T],
    n_theta: usize,
    n_rho: usize,
    m_top: usize,
    suppress_theta: usize,
    suppress_rho: usize,
) -> Vec<(usize, usize)> {
    let zero = T::default();
    let at = |t: usize, r: usize| votes[t * n_rho + r];
    let mut cands: Vec<(usize, usize)> = Vec::new();
    for t in 0..n_theta {
        for r in 0..n_rho {
            let v = at(t, r);
            if !(v > zero) {
                continue;
            }
            let mut is_max = true;
            'nb: for dt in -1i64..=1 {
                for dr in -1i64..=1 {
                    let (nt, nr) = (t as i64 + dt, r as i64 + dr);
                    if (dt == 0 && dr == 0) || nt < 0 || nr < 0 || nt >= n_theta as i64 || nr >= n_rho as i64 {
                        continue;
                    }
                    if at(nt as usize, nr as usize) > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                cands.push((t, r));
            }
        }
    }
    cands.sort_by(|&(t1, r1), &(t2, r2)| {
        at(t2, r2)
            .partial_cmp(&at(t1, r1))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then((t1, r1).cmp(&(t2, r2)))
    });
    let mut taken: Vec<(usize, usize)> = Vec::new();
    for (t, r) in cands {
        if taken.len() == m_top {
            break;
        }
        let clash = taken
            .iter()
            .any(|&(pt, pr)| pt.abs_diff(t) <= suppress_theta && pr.abs_diff(r) <= suppress_rho);
        if !clash {
            taken.push((t, r));
        }
    }
    taken
}

/// The `m_top` strongest distinct lines of `edges`, most votes first.
pub fn hough_top_lines(edges: &EdgeMap, m_top: usize, params: &HoughParams) -> Result<Vec<HoughLine>> {
    let points = edges.points();
    hough_top_lines_on_points(&points, edges.width, edges.height, m_top, params)
}

pub fn hough_top_lines_on_points(
    points: &[(u32, u32)],
    width: usize,
    height: usize,
    m_top: usize,
    params: &HoughParams,
) -> Result<Vec<HoughLine>> {
    if points.is_empty() {
        return Err(Error::NoEdges);
    }
    let mut acc = HoughAccumulator::new(width, height, params);
    acc.vote(points);
    let peaks = find_peaks(
        &acc.votes,
        acc.n_theta,
        acc.n_rho,
        m_top,
        params.suppress_theta,
        params.suppress_rho,
    );
    Ok(peaks
        .into_iter()
        .map(|(t, r)| HoughLine {
            line: acc.to_horizon(t, r),
            votes: acc.votes[t * acc.n_rho + r],
            theta_bin: t,
            rho_bin: r,
        })
        .collect())
}

/// Thresholds of the temporal outlier gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhmParams {
    /// Largest accepted jump in `y`, pixels.
    pub dy_th: f64,
    /// Largest accepted jump in `phi`, degrees.
    pub dphi_th: f64,
    /// Consecutive outliers tolerated before declaring a failure state.
    pub n_outs_th: u32,
    /// Hough lines examined when looking for a substitute.
    pub m_top: usize,
    /// Inlier band half-width for refinement, pixels.
    pub d_in: f64,
}

impl OhmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dy_th > 0.0) {
            return Err(Error::param("dy_th", "must be > 0"));
        }
        if !(self.dphi_th > 0.0) {
            return Err(Error::param("dphi_th", "must be > 0"));
        }
        if self.n_outs_th == 0 {
            return Err(Error::param("n_outs_th", "must be > 0"));
        }
        if self.m_top == 0 {
            return Err(Error::param("m_top", "must be > 0"));
        }
        if !(self.d_in > 0.0) {
            return Err(Error::param("d_in", "must be > 0"));
        }
        Ok(())
    }

    pub fn is_outlier(&self, cand: &HorizonLine, prev: &HorizonLine) -> bool {
        (cand.y - prev.y).abs() > self.dy_th || (cand.phi - prev.phi).abs() > self.dphi_th
    }
}

/// Per-stream memory of the outlier gate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TemporalState {
    pub prev: Option<HorizonLine>,
    pub n_outs: u32,
    pub in_failure: bool,
}

/// Which branch of the gate produced the coarse line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OhmDecision {
    /// No previous horizon; strongest line taken.
    Initial,
    /// Strongest line agreed with the previous horizon.
    Accepted,
    /// Strongest line rejected; the given rank (0-based) replaced it.
    Substituted(usize),
    /// Strongest line rejected and nothing qualified; reported as is.
    Outlier,
    /// Too many consecutive outliers; strongest line taken unconditionally.
    Recovered,
}

impl OhmDecision {
    /// Whether the reported line becomes the new reference.
    pub fn updates_prev(&self) -> bool {
        !matches!(self, OhmDecision::Outlier)
    }

    pub fn is_outlier(&self) -> bool {
        matches!(
            self,
            OhmDecision::Substituted(_) | OhmDecision::Outlier | OhmDecision::Recovered
        )
    }
}

/// Picks the coarse horizon among ranked Hough lines and advances the gate.
///
/// # Panics
///
/// Panics if `top` is empty.
pub fn ohm_select(
    top: &[HoughLine],
    state: &TemporalState,
    params: &OhmParams,
) -> (HorizonLine, TemporalState, OhmDecision) {
    let best = top.first().expect("at least one Hough line").line;
    let Some(prev) = state.prev else {
        return (
            best,
            TemporalState {
                prev: Some(best),
                n_outs: 0,
                in_failure: false,
            },
            OhmDecision::Initial,
        );
    };
    if !params.is_outlier(&best, &prev) {
        return (
            best,
            TemporalState {
                prev: Some(best),
                n_outs: 0,
                in_failure: false,
            },
            OhmDecision::Accepted,
        );
    }
    let n_outs = state.n_outs + 1;
    if n_outs > params.n_outs_th {
        return (
            best,
            TemporalState {
                prev: Some(best),
                n_outs: 0,
                in_failure: true,
            },
            OhmDecision::Recovered,
        );
    }
    let substitute = top
        .iter()
        .take(params.m_top)
        .enumerate()
        .skip(1)
        .filter(|(_, h)| !params.is_outlier(&h.line, &prev))
        .min_by(|(i, a), (j, b)| {
            (a.line.y - prev.y)
                .abs()
                .total_cmp(&(b.line.y - prev.y).abs())
                .then(i.cmp(j))
        });
    match substitute {
        Some((rank, h)) => (
            h.line,
            TemporalState {
                prev: Some(h.line),
                n_outs,
                in_failure: false,
            },
            OhmDecision::Substituted(rank),
        ),
        None => (
            best,
            TemporalState {
                prev: Some(prev),
                n_outs,
                in_failure: false,
            },
            OhmDecision::Outlier,
        ),
    }
}

/// Ordinary least squares of `y` on `x` over edge points within `d_in` of
/// `coarse`. Returns `coarse` when fewer than two inliers exist or they span
/// less than two pixels horizontally.
pub fn refine_least_squares(coarse: &HorizonLine, edges: &EdgeMap, d_in: f64) -> HorizonLine {
    refine_on_points(coarse, &edges.points(), edges.width, d_in)
}

pub fn refine_on_points(coarse: &HorizonLine, points: &[(u32, u32)], width: usize, d_in: f64) -> HorizonLine {
    let a = coarse.slope();
    let xc = center_x(width);
    let norm = (1.0 + a * a).sqrt();
    let inliers: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (x as f64, y as f64))
        .filter(|&(x, y)| (a * (x - xc) + coarse.y - y).abs() / norm <= d_in)
        .collect();
    if inliers.len() < 2 {
        return *coarse;
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, _) in &inliers {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
    }
    if x_max - x_min < 2.0 {
        return *coarse;
    }
    let n = inliers.len() as f64;
    let mx = inliers.iter().map(|p| p.0).sum::<f64>() / n;
    let my = inliers.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in &inliers {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let b = sxy / sxx;
    HorizonLine {
        y: my + b * (xc - mx),
        phi: -b.atan().to_degrees(),
    }
}
