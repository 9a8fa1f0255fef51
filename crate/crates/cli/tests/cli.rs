use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn horizon(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horizon"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("spawn horizon")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const SEQ: &str = "frames = 6\n[scene]\nwidth = 320\nheight = 180\ny_gt = 80.0\nphi_gt = 2.0\n";

fn synth(dir: &Path) {
    write(dir, "seq.toml", SEQ);
    let o = horizon(&["synth", "seq.toml", "-o", "seq"], dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn detect_prints_line_and_writes_overlay() {
    let t = TempDir::new().unwrap();
    synth(t.path());
    let o = horizon(&["detect", "seq/000.png", "--overlay", "ov.png"], t.path());
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    let y: f64 = line
        .split_whitespace()
        .next()
        .unwrap()
        .trim_start_matches("Y=")
        .parse()
        .unwrap();
    assert!((y - 80.0).abs() < 2.0, "{line}");
    let dims = image::image_dimensions(t.path().join("ov.png")).unwrap();
    assert_eq!(dims, (320, 180));
}

#[test]
fn detect_on_blank_image_exits_two() {
    let t = TempDir::new().unwrap();
    image::RgbImage::new(200, 120).save(t.path().join("black.png")).unwrap();
    let o = horizon(&["detect", "black.png"], t.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn usage_and_io_exit_codes() {
    let t = TempDir::new().unwrap();
    assert_eq!(
        horizon(&["detect", "--bogus", "x.png"], t.path()).status.code(),
        Some(64)
    );
    assert_eq!(horizon(&["detect", "missing.png"], t.path()).status.code(), Some(1));
    assert_eq!(horizon(&["--help"], t.path()).status.code(), Some(0));
    synth(t.path());
    assert_eq!(
        horizon(&["detect", "seq/000.png", "--kappa", "1.5"], t.path())
            .status
            .code(),
        Some(64)
    );
}

#[test]
fn run_keeps_going_past_an_empty_frame() {
    let t = TempDir::new().unwrap();
    synth(t.path());
    image::RgbImage::new(320, 180)
        .save(t.path().join("seq/003.png"))
        .unwrap();
    let o = horizon(&["run", "seq", "-o", "res.json"], t.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("res.json")).unwrap()).unwrap();
    let frames = doc["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 6);
    assert_eq!(frames[3]["failure"], true);
    assert!(frames[3]["y"].is_null());
    assert!(frames.iter().enumerate().all(|(i, f)| f["frame_index"] == i as u64));
    assert!(frames[5]["y"].is_number());
}

#[test]
fn run_is_deterministic() {
    let t = TempDir::new().unwrap();
    synth(t.path());
    let strip = |name: &str| {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(t.path().join(name)).unwrap()).unwrap();
        for f in v["frames"].as_array_mut().unwrap() {
            f.as_object_mut().unwrap().remove("timings_ms");
        }
        v
    };
    for out in ["a.json", "b.json"] {
        assert!(horizon(&["run", "seq", "-o", out], t.path()).status.success());
    }
    assert_eq!(strip("a.json"), strip("b.json"));
}

#[test]
fn eval_perfect_and_known_errors() {
    let t = TempDir::new().unwrap();
    let results = |ys: &[f64]| {
        let frames: Vec<_> = ys
            .iter()
            .enumerate()
            .map(|(i, y)| serde_json::json!({"frame_index": i, "y": y, "phi": 0.0, "outlier": false, "failure": false,
                "timings_ms": {"detect": 1.0, "lsf": 0.0, "roif": 0.0, "step_edge": 0.0, "inference": 0.0, "total": 2.0}}))
            .collect();
        serde_json::json!({"video_id": "clip", "config_echo": {}, "frames": frames}).to_string()
    };
    write(
        t.path(),
        "gt.csv",
        "frame_index,y_gt_px,phi_gt_deg\n0,100,0\n1,100,0\n2,100,0\n3,100,0\n",
    );

    write(t.path(), "perfect.json", &results(&[100.0; 4]));
    let o = horizon(&["eval", "perfect.json", "gt.csv", "-o", "p"], t.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(t.path().join("p/clip_metrics.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let cells: Vec<f64> = row.split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells, [0.0, 0.0], "{row}");
    }
    assert!(t.path().join("p/clip_y_err.svg").exists());
    assert!(t.path().join("p/clip_phi_err.svg").exists());

    write(t.path(), "off.json", &results(&[101.0, 102.0, 103.0, 104.0]));
    let o = horizon(&["eval", "off.json", "gt.csv", "-o", "q"], t.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(t.path().join("q/clip_metrics.csv")).unwrap();
    let y: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|r| r.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let expect = [2.5, 1.25f64.sqrt(), 1.75, 2.5, 3.25, 3.85];
    for (a, b) in y.iter().zip(expect) {
        assert!((a - b).abs() < 1e-9, "{y:?}");
    }
}

#[test]
fn eval_reports_missing_annotation() {
    let t = TempDir::new().unwrap();
    synth(t.path());
    assert!(horizon(&["run", "seq", "-o", "res.json"], t.path()).status.success());
    let gt = std::fs::read_to_string(t.path().join("seq/gt.csv")).unwrap();
    let trimmed: Vec<&str> = gt.lines().filter(|l| !l.starts_with("4,")).collect();
    write(t.path(), "gt.csv", &trimmed.join("\n"));
    let o = horizon(&["eval", "res.json", "gt.csv"], t.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains('4'));
}

#[test]
fn bench_counts_every_sample() {
    let t = TempDir::new().unwrap();
    let o = horizon(
        &[
            "bench",
            "--synthetic",
            "240x160",
            "--frames",
            "3",
            "--repetitions",
            "2",
            "--parallel-streams",
            "2",
            "--format",
            "json",
        ],
        t.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["samples"], 12);
    let stages: Vec<&str> = v["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages, ["detect", "lsf", "roif", "step_edge", "inference", "total"]);
}

#[test]
fn debug_dump_writes_every_product() {
    let t = TempDir::new().unwrap();
    synth(t.path());
    let o = horizon(&["debug-dump", "seq/000.png", "-o", "dump"], t.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "sa.png",
        "sc.png",
        "sd.png",
        "se.png",
        "sf.png",
        "eprime.png",
        "edges.png",
        "trace.json",
    ] {
        assert!(t.path().join("dump").join(f).is_file(), "{f}");
    }
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t.path().join("dump/trace.json")).unwrap()).unwrap();
    let c = &v["counts"];
    let n = |k: &str| c[k].as_u64().unwrap();
    assert!(n("sb") <= n("sa") && n("sc") <= n("sb") && n("sf") >= n("sc"));
}

#[test]
fn synth_is_reproducible() {
    let t = TempDir::new().unwrap();
    write(t.path(), "seq.toml", SEQ);
    for dir in ["a", "b"] {
        assert!(horizon(&["synth", "seq.toml", "-o", dir], t.path()).status.success());
    }
    for name in ["000.png", "005.png", "gt.csv"] {
        let a = std::fs::read(t.path().join("a").join(name)).unwrap();
        let b = std::fs::read(t.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn synth_raw_stream_runs() {
    let t = TempDir::new().unwrap();
    write(t.path(), "seq.toml", SEQ);
    assert!(
        horizon(&["synth", "seq.toml", "-o", "raw", "--format", "raw"], t.path())
            .status
            .success()
    );
    let o = horizon(&["run", "raw/frames.hrzn", "-o", "res.json"], t.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("frames=6 detections=6"));
}

#[test]
fn synth_rejects_bad_field() {
    let t = TempDir::new().unwrap();
    write(t.path(), "bad.toml", "frames = \"many\"\n");
    let o = horizon(&["synth", "bad.toml", "-o", "x"], t.path());
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("frames"));
}
