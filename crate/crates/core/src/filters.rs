//! Length-slope filtering and region-of-interest filtering of segment sets.
//!
//! Naming follows the stages of the filter chain:
//!
//! * `a`: raw detector output
//! * `b`: slope survivors of `a`
//! * `c`: the `n_c` longest of `b` (primary candidates)
//! * `d`: the next `n_d` longest of `b`
//! * `e`: members of `d` lying inside the band around some line of `c`
//! * `f`: `c` followed by `e`
//!
//! Every set is a restriction of `a`, obtained by gathering with an
//! [`IndexList`], so slopes and lengths are computed once on `a` and carried
//! along.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{compute_lengths, compute_slopes, select, IndexList, SegmentSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LsfParams {
    /// Largest accepted `|slope|`.
    pub alpha_th: f64,
    /// Number of primary candidates.
    pub n_c: usize,
    /// Number of secondary segments handed to the ROI filter.
    pub n_d: usize,
}

impl Default for LsfParams {
    fn default() -> Self {
        LsfParams {
            alpha_th: 0.6,
            n_c: 15,
            n_d: 150,
        }
    }
}

impl LsfParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_th > 0.0 && self.alpha_th.is_finite()) {
            return Err(Error::param("alpha_th", "must be finite and > 0"));
        }
        if self.n_c < 1 {
            return Err(Error::param("n_c", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoifParams {
    /// Largest normal distance (pixels, downsampled scale) between a
    /// secondary endpoint and a primary line.
    pub t_roi: f64,
}

impl Default for RoifParams {
    fn default() -> Self {
        RoifParams { t_roi: 2.0 }
    }
}

impl RoifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_roi > 0.0) {
            return Err(Error::param("t_roi", "must be > 0"));
        }
        Ok(())
    }
}

fn slopes_of(set: &SegmentSet) -> std::borrow::Cow<'_, [f64]> {
    match set.slopes() {
        Some(s) => s.into(),
        None => compute_slopes(set).into(),
    }
}

fn lengths_of(set: &SegmentSet) -> std::borrow::Cow<'_, [f64]> {
    match set.lengths() {
        Some(l) => l.into(),
        None => compute_lengths(set).into(),
    }
}

/// Keeps segments with `|slope| <= alpha_th`, preserving order.
pub fn slope_filter(sa: &SegmentSet, alpha_th: f64) -> (IndexList, SegmentSet) {
    let slopes = slopes_of(sa);
    let idx: IndexList = slopes
        .iter()
        .enumerate()
        .filter(|(_, a)| a.abs() <= alpha_th)
        .map(|(i, _)| i)
        .collect::<Vec<_>>()
        .into();
    let sb = select(sa, &idx).expect("indices come from sa");
    (idx, sb)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LengthPartition {
    /// Indices into `b` of the primary candidates.
    pub c_idx: IndexList,
    /// Indices into `b` of the secondary segments.
    pub d_idx: IndexList,
    pub sc: SegmentSet,
    pub sd: SegmentSet,
}

/// Splits `sb` into its `n_c` longest segments and the `n_d` after them.
/// Longer first; equal lengths keep their original order.
pub fn length_partition(sb: &SegmentSet, n_c: usize, n_d: usize) -> LengthPartition {
    let lengths = lengths_of(sb);
    let mut order: Vec<usize> = (0..sb.len()).collect();
    order.sort_by(|&i, &j| lengths[j].total_cmp(&lengths[i]).then(i.cmp(&j)));
    let n_c = n_c.min(order.len());
    let n_d = n_d.min(order.len() - n_c);
    let c_idx = IndexList::new(order[..n_c].to_vec());
    let d_idx = IndexList::new(order[n_c..n_c + n_d].to_vec());
    let sc = select(sb, &c_idx).expect("indices come from sb");
    let sd = select(sb, &d_idx).expect("indices come from sb");
    LengthPartition { c_idx, d_idx, sc, sd }
}

/// Endpoint-to-line distance matrices, `n_c` rows by `n_d` columns,
/// row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoifMatrices {
    pub n_c: usize,
    pub n_d: usize,
    /// Distances of each secondary start point to each primary line.
    pub d_start: Vec<f64>,
    /// Distances of each secondary end point to each primary line.
    pub d_end: Vec<f64>,
}

impl RoifMatrices {
    /// Builds both matrices from the broadcast form
    /// `|alpha (x)^T + B - Y| / (sqrt(1 + alpha^2) 1^T)`.
    pub fn compute(sc: &SegmentSet, sd: &SegmentSet) -> Self {
        let (n_c, n_d) = (sc.len(), sd.len());
        let alpha = slopes_of(sc);
        // Intercepts through each primary start point.
        let beta: Vec<f64> = sc
            .y_s()
            .iter()
            .zip(sc.x_s())
            .zip(alpha.iter())
            .map(|((y, x), a)| y - a * x)
            .collect();
        let inv_norm: Vec<f64> = alpha.iter().map(|a| 1.0 / (1.0 + a * a).sqrt()).collect();

        let fill = |xs: &[f64], ys: &[f64]| {
            let mut m = vec![0.0; n_c * n_d];
            for k in 0..n_c {
                let (a, b, s) = (alpha[k], beta[k], inv_norm[k]);
                let row = &mut m[k * n_d..(k + 1) * n_d];
                for ((out, &x), &y) in row.iter_mut().zip(xs).zip(ys) {
                    *out = (a * x + b - y).abs() * s;
                }
            }
            m
        };
        RoifMatrices {
            n_c,
            n_d,
            d_start: fill(sd.x_s(), sd.y_s()),
            d_end: fill(sd.x_e(), sd.y_e()),
        }
    }

    pub fn at(&self, k: usize, l: usize) -> (f64, f64) {
        (self.d_start[k * self.n_d + l], self.d_end[k * self.n_d + l])
    }

    /// Column-wise OR over rows of `(D_s <= t) AND (D_e <= t)`.
    pub fn mask(&self, t_roi: f64) -> Vec<bool> {
        let mut q = vec![false; self.n_d];
        for k in 0..self.n_c {
            let ds = &self.d_start[k * self.n_d..(k + 1) * self.n_d];
            let de = &self.d_end[k * self.n_d..(k + 1) * self.n_d];
            for ((q, &s), &e) in q.iter_mut().zip(ds).zip(de) {
                *q |= s <= t_roi && e <= t_roi;
            }
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoifOutput {
    /// Indices into `d` of the kept segments.
    pub e_idx: IndexList,
    pub se: SegmentSet,
    pub mask: Vec<bool>,
    pub matrices: RoifMatrices,
}

/// Keeps each secondary segment whose two endpoints both lie within `t_roi`
/// of the same primary line.
pub fn roif(sc: &SegmentSet, sd: &SegmentSet, t_roi: f64) -> RoifOutput {
    let matrices = RoifMatrices::compute(sc, sd);
    let mask = matrices.mask(t_roi);
    let e_idx: IndexList = mask
        .iter()
        .enumerate()
        .filter(|(_, &q)| q)
        .map(|(i, _)| i)
        .collect::<Vec<_>>()
        .into();
    let se = select(sd, &e_idx).expect("indices come from sd");
    RoifOutput {
        e_idx,
        se,
        mask,
        matrices,
    }
}

/// `c` followed by `e`.
pub fn assemble_candidates(sc: &SegmentSet, se: &SegmentSet) -> SegmentSet {
    if sc.is_empty() {
        return SegmentSet::new();
    }
    sc.concat(se)
}

/// All intermediate sets of one run of the filter chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterTrace {
    pub sa: SegmentSet,
    pub sb: SegmentSet,
    pub sc: SegmentSet,
    pub sd: SegmentSet,
    pub se: SegmentSet,
    pub sf: SegmentSet,
    pub b_from_a: IndexList,
    pub c_from_b: IndexList,
    pub d_from_b: IndexList,
    pub e_from_d: IndexList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<RoifMatrices>,
}

impl FilterTrace {
    /// Indices into `a` of the members of `f`.
    pub fn f_from_a(&self) -> IndexList {
        let c = self.b_from_a.compose(&self.c_from_b).expect("composable");
        let d = self.b_from_a.compose(&self.d_from_b).expect("composable");
        let e = d.compose(&self.e_from_d).expect("composable");
        let mut v = c.as_slice().to_vec();
        v.extend_from_slice(e.as_slice());
        IndexList::new(v)
    }
}

/// Runs both filters on the detector output `sa`.
pub fn filter_segments(sa: &SegmentSet, lsf: &LsfParams, roi: &RoifParams, keep_matrices: bool) -> FilterTrace {
    let sa = sa.clone().with_cache();
    let (b_from_a, sb) = slope_filter(&sa, lsf.alpha_th);
    let part = length_partition(&sb, lsf.n_c, lsf.n_d);
    let out = roif(&part.sc, &part.sd, roi.t_roi);
    let sf = assemble_candidates(&part.sc, &out.se);
    FilterTrace {
        sa,
        sb,
        sc: part.sc,
        sd: part.sd,
        se: out.se,
        sf,
        b_from_a,
        c_from_b: part.c_idx,
        d_from_b: part.d_idx,
        e_from_d: out.e_idx,
        matrices: keep_matrices.then_some(out.matrices),
    }
}
