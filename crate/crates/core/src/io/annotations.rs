//! Ground-truth annotation CSV: `frame_index,y_gt_px,phi_gt_deg`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::center_x;

pub const HEADER: [&str; 3] = ["frame_index", "y_gt_px", "phi_gt_deg"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtAnnotation {
    pub frame_index: u64,
    /// Central-column convention.
    pub y_gt: f64,
    pub phi_gt: f64,
}

/// Converts a horizon annotated at the left image edge (`x = 0`) to the
/// central-column convention.
pub fn left_edge_to_central(y_left: f64, phi_deg: f64, width: usize) -> f64 {
    y_left - phi_deg.to_radians().tan() * center_x(width)
}

pub fn parse_annotations<R: std::io::Read>(reader: R, path: &Path) -> Result<BTreeMap<u64, GtAnnotation>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(parse_err(1, format!("expected header `{}`", HEADER.join(","))));
    }
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| {
            rec.get(i)
                .ok_or_else(|| parse_err(line, format!("missing column {}", HEADER[i])))
        };
        let frame_index: u64 = field(0)?
            .parse()
            .map_err(|_| parse_err(line, format!("bad frame index `{}`", &rec[0])))?;
        let y_gt: f64 = field(1)?
            .parse()
            .map_err(|_| parse_err(line, format!("bad y `{}`", &rec[1])))?;
        let phi_gt: f64 = field(2)?
            .parse()
            .map_err(|_| parse_err(line, format!("bad phi `{}`", &rec[2])))?;
        if !(y_gt.is_finite() && phi_gt.is_finite()) {
            return Err(parse_err(line, "non-finite value".into()));
        }
        if out
            .insert(
                frame_index,
                GtAnnotation {
                    frame_index,
                    y_gt,
                    phi_gt,
                },
            )
            .is_some()
        {
            return Err(Error::DuplicateFrame(frame_index));
        }
    }
    Ok(out)
}

pub fn load_annotations(path: &Path) -> Result<BTreeMap<u64, GtAnnotation>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(file, path)
}

pub fn write_annotations<'a>(path: &Path, rows: impl IntoIterator<Item = &'a GtAnnotation>) -> Result<()> {
    let mut text = HEADER.join(",");
    text.push('\n');
    for a in rows {
        text.push_str(&format!("{},{},{}\n", a.frame_index, a.y_gt, a.phi_gt));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<BTreeMap<u64, GtAnnotation>> {
        parse_annotations(s.as_bytes(), Path::new("gt.csv"))
    }

    #[test]
    fn parses_rows() {
        let m = parse("frame_index,y_gt_px,phi_gt_deg\n12,345.5,0.8\n").unwrap();
        assert_eq!(
            m[&12],
            GtAnnotation {
                frame_index: 12,
                y_gt: 345.5,
                phi_gt: 0.8
            }
        );
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse("frame_index,y_gt_px,phi_gt_deg\n").unwrap().is_empty());
    }

    #[test]
    fn duplicates_rejected() {
        let r = parse("frame_index,y_gt_px,phi_gt_deg\n1,2,3\n1,4,5\n");
        assert!(matches!(r, Err(Error::DuplicateFrame(1))));
    }

    #[test]
    fn malformed_row_reports_line() {
        let r = parse("frame_index,y_gt_px,phi_gt_deg\n1,2,3\n2,abc,0\n");
        match r {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse("a,b,c\n").is_err());
        assert!(parse("frame_index,y_gt_px,phi_gt_deg\n1,2\n").is_err());
    }

    #[test]
    fn round_trip_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gt.csv");
        let rows = [
            GtAnnotation {
                frame_index: 0,
                y_gt: 10.25,
                phi_gt: -0.5,
            },
            GtAnnotation {
                frame_index: 1,
                y_gt: 11.0,
                phi_gt: 0.1 + 0.2,
            },
        ];
        write_annotations(&path, &rows).unwrap();
        let back = load_annotations(&path).unwrap();
        assert_eq!(back.values().copied().collect::<Vec<_>>(), rows);
    }

    #[test]
    fn convention_converter() {
        // A flat line reads the same at every column.
        assert_eq!(left_edge_to_central(100.0, 0.0, 640), 100.0);
        // Rising to the right by 45 degrees: the center is higher by xc.
        let y = left_edge_to_central(400.0, 45.0, 101);
        assert!((y - 350.0).abs() < 1e-9);
    }
}
