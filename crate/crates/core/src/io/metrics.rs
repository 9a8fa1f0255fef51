//! Error statistics in the usual horizon-benchmark layout.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::annotations::GtAnnotation;
use crate::io::results::ResultRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub frame_index: u64,
    pub y_err: f64,
    pub phi_err: f64,
}

/// Mean, population standard deviation and four percentiles.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mu: f64,
    pub sigma: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub y_err: Stats,
    pub phi_err: Stats,
    pub mean_time_ms: f64,
    pub frames: usize,
}

/// Percentile `p` in `[0, 1]` by linear interpolation between closest
/// ranks, endpoints inclusive. Reorders `values`.
pub fn quantile(values: &mut [f64], p: f64) -> f64 {
    let n = values.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let (_, &mut a, rest) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if lo + 1 >= n {
        return a;
    }
    let b = rest.iter().copied().fold(f64::INFINITY, f64::min);
    a + (h - lo as f64) * (b - a)
}

pub fn stats(values: &[f64]) -> Result<Stats> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    // Welford update for mean and variance.
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    for (i, &v) in values.iter().enumerate() {
        let d = v - mean;
        mean += d / (i + 1) as f64;
        m2 += d * (v - mean);
    }
    let n = values.len() as f64;
    let mut buf = values.to_vec();
    Ok(Stats {
        mu: mean,
        sigma: (m2 / n).max(0.0).sqrt(),
        q25: quantile(&mut buf, 0.25),
        q50: quantile(&mut buf, 0.50),
        q75: quantile(&mut buf, 0.75),
        q95: quantile(&mut buf, 0.95),
    })
}

pub fn summarize(errors: &[ErrorRecord], times_ms: &[f64]) -> Result<MetricSummary> {
    let y: Vec<f64> = errors.iter().map(|e| e.y_err).collect();
    let phi: Vec<f64> = errors.iter().map(|e| e.phi_err).collect();
    let mean_time_ms = if times_ms.is_empty() {
        0.0
    } else {
        times_ms.iter().sum::<f64>() / times_ms.len() as f64
    };
    Ok(MetricSummary {
        y_err: stats(&y)?,
        phi_err: stats(&phi)?,
        mean_time_ms,
        frames: errors.len(),
    })
}

/// Matched errors plus the frames that produced no horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Matched {
    pub errors: Vec<ErrorRecord>,
    pub undetected: Vec<u64>,
}

/// Pairs results with annotations. Both sides must cover the same frame
/// indices; frames without a detection are listed separately.
pub fn match_errors(results: &[ResultRecord], gt: &BTreeMap<u64, GtAnnotation>) -> Result<Matched> {
    let by_frame: BTreeMap<u64, &ResultRecord> = results.iter().map(|r| (r.frame_index, r)).collect();
    let mut unmatched: Vec<u64> = by_frame.keys().filter(|k| !gt.contains_key(k)).copied().collect();
    unmatched.extend(gt.keys().filter(|k| !by_frame.contains_key(k)));
    if !unmatched.is_empty() {
        unmatched.sort_unstable();
        return Err(Error::Unmatched(unmatched));
    }
    let mut out = Matched {
        errors: Vec::new(),
        undetected: Vec::new(),
    };
    for (idx, r) in by_frame {
        let g = &gt[&idx];
        match (r.y, r.phi) {
            (Some(y), Some(phi)) => out.errors.push(ErrorRecord {
                frame_index: idx,
                y_err: (y - g.y_gt).abs(),
                phi_err: (phi - g.phi_gt).abs(),
            }),
            _ => out.undetected.push(idx),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(y: &[f64]) -> Vec<ErrorRecord> {
        y.iter()
            .enumerate()
            .map(|(i, &v)| ErrorRecord {
                frame_index: i as u64,
                y_err: v,
                phi_err: v / 10.0,
            })
            .collect()
    }

    #[test]
    fn mean_and_median() {
        let s = summarize(&recs(&[1.0, 2.0, 3.0, 4.0]), &[10.0, 20.0]).unwrap();
        assert_eq!(s.y_err.mu, 2.5);
        assert_eq!(s.y_err.q50, 2.5);
        assert_eq!(s.mean_time_ms, 15.0);
        // (n-1) p = 0.75 and 2.85 for Q25 and Q95.
        assert!((s.y_err.q25 - 1.75).abs() < 1e-12);
        assert!((s.y_err.q95 - 3.85).abs() < 1e-12);
        assert!((s.y_err.sigma - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn constant_input() {
        let s = stats(&[3.5; 9]).unwrap();
        assert_eq!(s.sigma, 0.0);
        assert_eq!([s.mu, s.q25, s.q50, s.q75, s.q95], [3.5; 5]);
    }

    #[test]
    fn single_value_and_empty() {
        assert_eq!(stats(&[7.0]).unwrap().q95, 7.0);
        assert!(matches!(summarize(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn matching() {
        let gt: BTreeMap<u64, GtAnnotation> = (0..3)
            .map(|i| {
                (
                    i,
                    GtAnnotation {
                        frame_index: i,
                        y_gt: 100.0,
                        phi_gt: 0.0,
                    },
                )
            })
            .collect();
        let mut results: Vec<ResultRecord> = (0..3)
            .map(|i| ResultRecord::detected(i, 101.0 + i as f64, 0.5))
            .collect();
        results[1] = ResultRecord::failed(1);
        let m = match_errors(&results, &gt).unwrap();
        assert_eq!(m.undetected, vec![1]);
        assert_eq!(m.errors.iter().map(|e| e.y_err).collect::<Vec<_>>(), vec![1.0, 3.0]);

        results.push(ResultRecord::detected(7, 0.0, 0.0));
        let mut gt2 = gt.clone();
        gt2.remove(&0);
        match match_errors(&results, &gt2) {
            Err(Error::Unmatched(v)) => assert_eq!(v, vec![0, 7]),
            other => panic!("{other:?}"),
        }
    }
}
