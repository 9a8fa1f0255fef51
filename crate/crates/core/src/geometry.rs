//! Structure-of-arrays segment batches and the elementwise kernels shared by
//! every filtering stage.
//!
//! Coordinates live in four parallel `Vec<f64>` columns. Filters never move
//! segments around individually; they build an [`IndexList`] and gather all
//! columns (including cached slopes and lengths) in one pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope assigned to segments with `x_s == x_e`. Every finite threshold
/// rejects it.
pub const VERTICAL_SLOPE: f64 = f64::INFINITY;

/// One segment, used at API boundaries. Storage is always [`SegmentSet`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x_s: f64,
    pub y_s: f64,
    pub x_e: f64,
    pub y_e: f64,
}

impl Segment {
    /// Builds a segment with endpoints ordered left to right.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        if x0 <= x1 {
            Segment {
                x_s: x0,
                y_s: y0,
                x_e: x1,
                y_e: y1,
            }
        } else {
            Segment {
                x_s: x1,
                y_s: y1,
                x_e: x0,
                y_e: y0,
            }
        }
    }

    pub fn slope(&self) -> f64 {
        slope_of(self.x_s, self.y_s, self.x_e, self.y_e)
    }

    pub fn length(&self) -> f64 {
        length_of(self.x_s, self.y_s, self.x_e, self.y_e)
    }
}

#[inline]
fn slope_of(xs: f64, ys: f64, xe: f64, ye: f64) -> f64 {
    let dx = xe - xs;
    if dx == 0.0 {
        VERTICAL_SLOPE
    } else {
        (ye - ys) / dx
    }
}

#[inline]
fn length_of(xs: f64, ys: f64, xe: f64, ye: f64) -> f64 {
    let dx = xe - xs;
    let dy = ye - ys;
    (dx * dx + dy * dy).sqrt()
}

/// A batch of segments in structure-of-arrays layout. Equality ignores the
/// slope and length caches.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SegmentSet {
    x_s: Vec<f64>,
    y_s: Vec<f64>,
    x_e: Vec<f64>,
    y_e: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slope: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<Vec<f64>>,
}

impl PartialEq for SegmentSet {
    fn eq(&self, other: &Self) -> bool {
        self.x_s == other.x_s && self.y_s == other.y_s && self.x_e == other.x_e && self.y_e == other.y_e
    }
}

impl SegmentSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        SegmentSet {
            x_s: Vec::with_capacity(n),
            y_s: Vec::with_capacity(n),
            x_e: Vec::with_capacity(n),
            y_e: Vec::with_capacity(n),
            slope: None,
            length: None,
        }
    }

    /// Builds a set from coordinate columns. Rows whose start lies right of
    /// their end are swapped so that `x_s <= x_e` holds for every row.
    pub fn from_columns(mut x_s: Vec<f64>, mut y_s: Vec<f64>, mut x_e: Vec<f64>, mut y_e: Vec<f64>) -> Result<Self> {
        let lens = [x_s.len(), y_s.len(), x_e.len(), y_e.len()];
        if lens.iter().any(|&l| l != lens[0]) {
            return Err(Error::LengthMismatch(lens));
        }
        for i in 0..lens[0] {
            if !(x_s[i].is_finite() && y_s[i].is_finite() && x_e[i].is_finite() && y_e[i].is_finite()) {
                return Err(Error::NonFinite(i));
            }
            if x_s[i] > x_e[i] {
                std::mem::swap(&mut x_s[i], &mut x_e[i]);
                std::mem::swap(&mut y_s[i], &mut y_e[i]);
            }
        }
        Ok(SegmentSet {
            x_s,
            y_s,
            x_e,
            y_e,
            slope: None,
            length: None,
        })
    }

    pub fn from_segments<I: IntoIterator<Item = Segment>>(segs: I) -> Self {
        let mut set = SegmentSet::new();
        for s in segs {
            set.push(s);
        }
        set
    }

    /// Appends a segment, reordering its endpoints if needed. Drops any
    /// cached slope/length columns.
    pub fn push(&mut self, seg: Segment) {
        let seg = Segment::new(seg.x_s, seg.y_s, seg.x_e, seg.y_e);
        self.x_s.push(seg.x_s);
        self.y_s.push(seg.y_s);
        self.x_e.push(seg.x_e);
        self.y_e.push(seg.y_e);
        self.slope = None;
        self.length = None;
    }

    pub fn len(&self) -> usize {
        self.x_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_s.is_empty()
    }

    pub fn x_s(&self) -> &[f64] {
        &self.x_s
    }
    pub fn y_s(&self) -> &[f64] {
        &self.y_s
    }
    pub fn x_e(&self) -> &[f64] {
        &self.x_e
    }
    pub fn y_e(&self) -> &[f64] {
        &self.y_e
    }

    pub fn get(&self, i: usize) -> Option<Segment> {
        (i < self.len()).then(|| Segment {
            x_s: self.x_s[i],
            y_s: self.y_s[i],
            x_e: self.x_e[i],
            y_e: self.y_e[i],
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = Segment> + '_ {
        (0..self.len()).map(move |i| Segment {
            x_s: self.x_s[i],
            y_s: self.y_s[i],
            x_e: self.x_e[i],
            y_e: self.y_e[i],
        })
    }

    /// Cached slope column, if computed.
    pub fn slopes(&self) -> Option<&[f64]> {
        self.slope.as_deref()
    }

    /// Cached length column, if computed.
    pub fn lengths(&self) -> Option<&[f64]> {
        self.length.as_deref()
    }

    /// Computes and caches both derived columns.
    pub fn with_cache(mut self) -> Self {
        self.ensure_cache();
        self
    }

    pub fn ensure_cache(&mut self) {
        if self.slope.is_none() {
            self.slope = Some(compute_slopes(self));
        }
        if self.length.is_none() {
            self.length = Some(compute_lengths(self));
        }
    }

    /// Concatenates `other` after `self`. Cached columns survive only when
    /// both sides carry them.
    pub fn concat(&self, other: &SegmentSet) -> SegmentSet {
        fn cat(a: &[f64], b: &[f64]) -> Vec<f64> {
            let mut v = Vec::with_capacity(a.len() + b.len());
            v.extend_from_slice(a);
            v.extend_from_slice(b);
            v
        }
        let both = |a: &Option<Vec<f64>>, b: &Option<Vec<f64>>| match (a, b) {
            (Some(a), Some(b)) => Some(cat(a, b)),
            _ => None,
        };
        SegmentSet {
            x_s: cat(&self.x_s, &other.x_s),
            y_s: cat(&self.y_s, &other.y_s),
            x_e: cat(&self.x_e, &other.x_e),
            y_e: cat(&self.y_e, &other.y_e),
            slope: both(&self.slope, &other.slope),
            length: both(&self.length, &other.length),
        }
    }

    /// Applies `f` to every coordinate pair. Cached columns are dropped.
    pub fn map_points(&self, f: impl Fn(f64, f64) -> (f64, f64)) -> SegmentSet {
        SegmentSet::from_segments(self.iter().map(|s| {
            let (x0, y0) = f(s.x_s, s.y_s);
            let (x1, y1) = f(s.x_e, s.y_e);
            Segment::new(x0, y0, x1, y1)
        }))
    }
}

impl FromIterator<Segment> for SegmentSet {
    fn from_iter<I: IntoIterator<Item = Segment>>(iter: I) -> Self {
        SegmentSet::from_segments(iter)
    }
}

/// Row indices into a parent [`SegmentSet`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexList(Vec<usize>);

impl IndexList {
    pub fn new(indices: Vec<usize>) -> Self {
        IndexList(indices)
    }

    pub fn identity(n: usize) -> Self {
        IndexList((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Maps indices relative to a child set back to the child's parent:
    /// `parent_of_child.compose(child_idx)[j] == parent_of_child[child_idx[j]]`.
    pub fn compose(&self, inner: &IndexList) -> Result<IndexList> {
        inner
            .0
            .iter()
            .map(|&i| {
                self.0.get(i).copied().ok_or(Error::IndexOutOfRange {
                    index: i,
                    len: self.0.len(),
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(IndexList)
    }
}

impl From<Vec<usize>> for IndexList {
    fn from(v: Vec<usize>) -> Self {
        IndexList(v)
    }
}

/// Slope/intercept form `y = alpha * x + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub alpha: f64,
    pub beta: f64,
}

impl LineParams {
    pub fn through(seg: &Segment) -> Self {
        let alpha = seg.slope();
        LineParams {
            alpha,
            beta: seg.y_s - alpha * seg.x_s,
        }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.alpha * x + self.beta
    }
}

/// Elementwise `(y_e - y_s) / (x_e - x_s)`, with [`VERTICAL_SLOPE`] where
/// the denominator vanishes.
pub fn compute_slopes(segs: &SegmentSet) -> Vec<f64> {
    segs.x_s
        .iter()
        .zip(&segs.y_s)
        .zip(segs.x_e.iter().zip(&segs.y_e))
        .map(|((&xs, &ys), (&xe, &ye))| slope_of(xs, ys, xe, ye))
        .collect()
}

/// Elementwise Euclidean segment length.
pub fn compute_lengths(segs: &SegmentSet) -> Vec<f64> {
    segs.x_s
        .iter()
        .zip(&segs.y_s)
        .zip(segs.x_e.iter().zip(&segs.y_e))
        .map(|((&xs, &ys), (&xe, &ye))| length_of(xs, ys, xe, ye))
        .collect()
}

/// Normal distance from `(px, py)` to the line `y = alpha * x + beta`.
#[inline]
pub fn point_line_distance(line: LineParams, px: f64, py: f64) -> f64 {
    (line.alpha * px + line.beta - py).abs() / (1.0 + line.alpha * line.alpha).sqrt()
}

/// Gathers rows `idx` out of `segs`, including any cached columns.
pub fn select(segs: &SegmentSet, idx: &IndexList) -> Result<SegmentSet> {
    let n = segs.len();
    if let Some(&bad) = idx.0.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    let gather = |col: &[f64]| idx.0.iter().map(|&i| col[i]).collect::<Vec<_>>();
    Ok(SegmentSet {
        x_s: gather(&segs.x_s),
        y_s: gather(&segs.y_s),
        x_e: gather(&segs.x_e),
        y_e: gather(&segs.y_e),
        slope: segs.slope.as_deref().map(gather),
        length: segs.length.as_deref().map(gather),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(x0: f64, y0: f64, x1: f64, y1: f64) -> SegmentSet {
        SegmentSet::from_segments([Segment::new(x0, y0, x1, y1)])
    }

    #[test]
    fn slopes() {
        assert_eq!(compute_slopes(&seg(0.0, 0.0, 10.0, 5.0)), vec![0.5]);
        assert_eq!(compute_slopes(&seg(0.0, 3.0, 8.0, 3.0)), vec![0.0]);
        let v = compute_slopes(&seg(2.0, 0.0, 2.0, 9.0));
        assert!(v[0].is_infinite() && v[0] > 0.0);
    }

    #[test]
    fn lengths() {
        assert_eq!(compute_lengths(&seg(0.0, 0.0, 3.0, 4.0)), vec![5.0]);
        assert_eq!(compute_lengths(&seg(0.0, 0.0, 10.0, 0.0)), vec![10.0]);
        assert_eq!(compute_lengths(&seg(1.0, 1.0, 4.0, 5.0)), vec![5.0]);
    }

    #[test]
    fn distance_examples() {
        let flat = LineParams { alpha: 0.0, beta: 0.0 };
        assert_eq!(point_line_distance(flat, 5.0, 3.0), 3.0);
        assert_eq!(point_line_distance(flat, 7.0, 0.0), 0.0);

        // Foot of the perpendicular from (0, 2) onto y = x is (1, 1).
        let diag = LineParams { alpha: 1.0, beta: 0.0 };
        let (fx, fy) = (1.0_f64, 1.0_f64);
        let oracle = ((0.0 - fx).powi(2) + (2.0 - fy).powi(2)).sqrt();
        assert!((point_line_distance(diag, 0.0, 2.0) - oracle).abs() < 1e-12);
        assert!((oracle - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn select_examples() {
        let set = SegmentSet::from_segments([
            Segment::new(0.0, 0.0, 1.0, 0.0),
            Segment::new(0.0, 1.0, 2.0, 1.0),
            Segment::new(0.0, 2.0, 3.0, 2.0),
        ])
        .with_cache();
        let out = select(&set, &IndexList::new(vec![2, 0])).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.get(0), set.get(2));
        assert_eq!(out.get(1), set.get(0));
        assert_eq!(out.lengths(), Some(&[3.0, 1.0][..]));

        assert!(select(&set, &IndexList::default()).unwrap().is_empty());
        assert_eq!(select(&set, &IndexList::identity(3)).unwrap(), set);
        assert!(matches!(
            select(&set, &IndexList::new(vec![3])),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
    }

    #[test]
    fn endpoints_are_ordered() {
        let s = SegmentSet::from_columns(vec![5.0], vec![1.0], vec![2.0], vec![7.0]).unwrap();
        assert_eq!(
            s.get(0),
            Some(Segment {
                x_s: 2.0,
                y_s: 7.0,
                x_e: 5.0,
                y_e: 1.0
            })
        );
        assert!(matches!(
            SegmentSet::from_columns(vec![1.0], vec![], vec![2.0], vec![3.0]),
            Err(Error::LengthMismatch(_))
        ));
    }

    fn arb_set() -> impl Strategy<Value = SegmentSet> {
        prop::collection::vec((0.0..960.0, 0.0..540.0, 0.0..960.0, 0.0..540.0), 0..64)
            .prop_map(|v| v.into_iter().map(|(a, b, c, d)| Segment::new(a, b, c, d)).collect())
    }

    proptest! {
        #[test]
        fn identity_select_is_exact(set in arb_set()) {
            let set = set.with_cache();
            prop_assert_eq!(select(&set, &IndexList::identity(set.len())).unwrap(), set);
        }

        #[test]
        fn length_ignores_endpoint_roles(x0 in -1e3..1e3f64, y0 in -1e3..1e3f64, x1 in -1e3..1e3f64, y1 in -1e3..1e3f64) {
            prop_assert_eq!(length_of(x0, y0, x1, y1), length_of(x1, y1, x0, y0));
        }

        #[test]
        fn points_on_line_have_zero_distance(alpha in -5.0..5.0f64, beta in -500.0..500.0f64, x in -1e3..1e3f64) {
            let line = LineParams { alpha, beta };
            let d = point_line_distance(line, x, line.at(x));
            prop_assert!(d <= 1e-9 * (1.0 + line.at(x).abs()));
        }

        #[test]
        fn batch_kernels_match_scalar_loop(set in arb_set()) {
            let slopes = compute_slopes(&set);
            let lengths = compute_lengths(&set);
            for (i, s) in set.iter().enumerate() {
                let ref_slope = if s.x_e == s.x_s { f64::INFINITY } else { (s.y_e - s.y_s) / (s.x_e - s.x_s) };
                let ref_len = ((s.x_e - s.x_s).powi(2) + (s.y_e - s.y_s).powi(2)).sqrt();
                prop_assert!(slopes[i] == ref_slope || ((slopes[i] - ref_slope).abs() <= 1e-9 * ref_slope.abs().max(1.0)));
                prop_assert!((lengths[i] - ref_len).abs() <= 1e-9 * ref_len.max(1.0));
            }
        }
    }
}
