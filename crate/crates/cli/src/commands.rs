use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use horizon_core::io::annotations::{left_edge_to_central, load_annotations, write_annotations, GtAnnotation};
use horizon_core::io::frames::{load_frames, RawHeader, RawVideoWriter};
use horizon_core::io::images::{load_image, save_edge_map, save_frame, Canvas};
use horizon_core::io::metrics::{match_errors, stats, summarize};
use horizon_core::io::plots::{emit_plots, metric_table};
use horizon_core::io::results::{read_results, write_results, ResultRecord, ResultsDocument};
use horizon_core::{Error, Frame, Pipeline, SequenceSpec, StageTimings, Stream, SyntheticSceneParams, TemporalState};
use serde::Serialize;

use crate::cli::{BenchArgs, BenchFormat, DebugDumpArgs, DetectArgs, EvalArgs, RunArgs, SynthArgs, SynthFormat};
use crate::error::{io_error, CliError};

const LINE_COLOR: [u8; 3] = [255, 40, 40];

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{}: no such file", path.display())))
    }
}

fn require_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !p.is_dir() => {
            Err(CliError::Io(format!("{}: directory does not exist", p.display())))
        }
        _ => Ok(()),
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn detect(args: &DetectArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    require_file(&args.image)?;
    if let Some(out) = &args.overlay {
        require_parent(out)?;
    }
    let frame = load_image(&args.image)?;
    let pipeline = Pipeline::new(cfg)?;
    let (result, _) = pipeline.process_frame(&frame, &TemporalState::default())?;
    let Some(line) = result.horizon else {
        return Err(CliError::NoDetection(format!(
            "{}: {}",
            args.image.display(),
            result.error.unwrap_or_else(|| "no horizon found".into())
        )));
    };
    println!("Y={:.3} phi={:.4}", line.y, line.phi);
    if let Some(out) = &args.overlay {
        let mut canvas = Canvas::from_frame(&frame);
        canvas.horizon(&line, LINE_COLOR);
        canvas.save(out)?;
    }
    Ok(())
}

fn failure_record(index: u64, err: &Error) -> ResultRecord {
    ResultRecord {
        error: Some(err.to_string()),
        ..ResultRecord::failed(index)
    }
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    require_parent(&args.out)?;
    let source = load_frames(&args.source)?;
    let video_id = args.video_id.clone().unwrap_or_else(|| video_name(&args.source));
    let mut stream = Stream::new(Pipeline::new(cfg)?);
    let mut doc = ResultsDocument::new(video_id, &cfg);
    for item in source {
        match item {
            Ok(frame) => {
                let result = stream.push(&frame)?;
                if let Some(e) = &result.error {
                    eprintln!("frame {}: {e}", result.frame_index);
                }
                doc.push(&result);
            }
            Err(e) => {
                let index = match e {
                    Error::MissingFrame(i) | Error::Frame { index: i, .. } => i,
                    _ => return Err(e.into()),
                };
                eprintln!("frame {index}: {e}");
                doc.frames.push(failure_record(index, &e));
            }
        }
    }
    write_results(&doc, &args.out)?;
    let outliers = doc.frames.iter().filter(|f| f.outlier).count();
    println!(
        "frames={} detections={} failures={} outliers={} mean_ms={:.2}",
        doc.frames.len(),
        doc.detections(),
        doc.frames.len() - doc.detections(),
        outliers,
        doc.mean_total_ms()
    );
    Ok(())
}

fn video_name(source: &str) -> String {
    if source == "-" {
        return "stdin".into();
    }
    if source.starts_with("cmd:") {
        return "decoder".into();
    }
    Path::new(source)
        .file_stem()
        .and_then(|s| s.to_str())
        .map_or_else(|| source.to_string(), str::to_string)
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    require_file(&args.results)?;
    require_file(&args.annotations)?;
    let doc = read_results(&args.results)?;
    let mut gt = load_annotations(&args.annotations)?;
    if let Some(w) = args.left_edge_width {
        for a in gt.values_mut() {
            a.y_gt = left_edge_to_central(a.y_gt, a.phi_gt, w);
        }
    }
    let matched = match_errors(&doc.frames, &gt)?;
    if !matched.undetected.is_empty() {
        eprintln!(
            "{} frames without a detection excluded: {:?}",
            matched.undetected.len(),
            matched.undetected
        );
    }
    let times: Vec<f64> = doc.frames.iter().map(|f| f.timings_ms.total).collect();
    let summary = summarize(&matched.errors, &times)?;
    let stem = if doc.video_id.is_empty() {
        "video"
    } else {
        doc.video_id.as_str()
    };
    let files = emit_plots(&summary, &matched.errors, &args.out_dir, stem)?;
    print!("{}", metric_table(&summary));
    println!("mean_time_ms,{:.3}", summary.mean_time_ms);
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct StageReport {
    stage: &'static str,
    mean_ms: f64,
    sigma_ms: f64,
    q50_ms: f64,
    q95_ms: f64,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    frames: usize,
    repetitions: usize,
    parallel_streams: usize,
    samples: usize,
    width: usize,
    height: usize,
    failures: usize,
    wall_ms: f64,
    stages: Vec<StageReport>,
}

fn bench_frames(args: &BenchArgs) -> Result<Vec<Frame>, CliError> {
    if let Some((width, height)) = args.synthetic {
        let spec = SequenceSpec {
            frames: args.frames,
            scene: SyntheticSceneParams {
                width,
                height,
                y_gt: height as f64 * 0.45,
                wave_amplitude: 4.0,
                noise_sigma: 2.0,
                ..Default::default()
            },
            pitch_amplitude: height as f64 * 0.02,
            roll_amplitude: 1.0,
            ..Default::default()
        };
        return spec
            .generate()
            .map(|r| r.map(|(f, _)| f).map_err(CliError::from))
            .collect();
    }
    let source = args.source.as_deref().expect("clap requires a source");
    load_frames(source)?.map(|r| r.map_err(CliError::from)).collect()
}

pub fn bench(args: &BenchArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    if args.repetitions == 0 || args.parallel_streams == 0 {
        return Err(CliError::Usage(
            "--repetitions and --parallel-streams must be positive".into(),
        ));
    }
    let frames = bench_frames(args)?;
    if frames.is_empty() {
        return Err(CliError::Io("frame source is empty".into()));
    }
    let pipeline = Pipeline::new(cfg)?;
    let run_stream = || -> Result<(Vec<StageTimings>, usize), Error> {
        let mut timings = Vec::with_capacity(frames.len() * args.repetitions);
        let mut failures = 0;
        for _ in 0..args.repetitions {
            let mut stream = Stream::new(pipeline.clone());
            for f in &frames {
                let r = stream.push(f)?;
                failures += usize::from(r.failure);
                timings.push(r.timings);
            }
        }
        Ok((timings, failures))
    };
    let t0 = std::time::Instant::now();
    let per_stream: Vec<Result<(Vec<StageTimings>, usize), Error>> = if args.parallel_streams == 1 {
        vec![run_stream()]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..args.parallel_streams).map(|_| s.spawn(run_stream)).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("bench worker panicked"))
                .collect()
        })
    };
    let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut all = Vec::new();
    let mut failures = 0;
    for r in per_stream {
        let (t, f) = r?;
        all.extend(t);
        failures += f;
    }

    type Column = (&'static str, fn(&StageTimings) -> f64);
    let columns: [Column; 6] = [
        ("detect", |t| t.detect),
        ("lsf", |t| t.lsf),
        ("roif", |t| t.roif),
        ("step_edge", |t| t.step_edge),
        ("inference", |t| t.inference),
        ("total", |t| t.total),
    ];
    let mut stages = Vec::new();
    for (stage, get) in columns {
        let values: Vec<f64> = all.iter().map(get).collect();
        let s = stats(&values)?;
        stages.push(StageReport {
            stage,
            mean_ms: s.mu,
            sigma_ms: s.sigma,
            q50_ms: s.q50,
            q95_ms: s.q95,
        });
    }
    let report = BenchReport {
        frames: frames.len(),
        repetitions: args.repetitions,
        parallel_streams: args.parallel_streams,
        samples: all.len(),
        width: frames[0].width(),
        height: frames[0].height(),
        failures,
        wall_ms,
        stages,
    };
    match args.format {
        BenchFormat::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?
            )
        }
        BenchFormat::Text => {
            println!(
                "{}x{}, {} frames x {} repetitions x {} streams = {} samples, {} failures",
                report.width,
                report.height,
                report.frames,
                report.repetitions,
                report.parallel_streams,
                report.samples,
                report.failures
            );
            println!(
                "{:<10} {:>9} {:>9} {:>9} {:>9}",
                "stage", "mean_ms", "sigma_ms", "q50_ms", "q95_ms"
            );
            for s in &report.stages {
                println!(
                    "{:<10} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
                    s.stage, s.mean_ms, s.sigma_ms, s.q50_ms, s.q95_ms
                );
            }
            println!(
                "wall {:.1} ms, {:.1} frames/s",
                wall_ms,
                report.samples as f64 / wall_ms * 1e3
            );
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct DumpCounts {
    sa: usize,
    sb: usize,
    sc: usize,
    sd: usize,
    se: usize,
    sf: usize,
    eprime_pixels: usize,
    edge_pixels: usize,
}

#[derive(Debug, Serialize)]
struct DumpDocument<'a> {
    image: String,
    width: usize,
    height: usize,
    kappa: f64,
    counts: DumpCounts,
    horizon: Option<horizon_core::HorizonLine>,
    top_lines: &'a [horizon_core::HoughLine],
    trace: &'a horizon_core::FilterTrace,
}

pub fn debug_dump(args: &DebugDumpArgs) -> Result<(), CliError> {
    let mut cfg = args.config.resolve()?;
    cfg.debug_dump = true;
    require_file(&args.image)?;
    create_dir(&args.out_dir)?;
    let frame = load_image(&args.image)?;
    let pipeline = Pipeline::new(cfg)?;
    let analysis = pipeline.analyze(&frame)?;
    let (result, _) = pipeline.process_frame(&frame, &TemporalState::default())?;
    let t = &analysis.trace;
    let scale = 1.0 / cfg.kappa;

    let sets = [
        ("sa", &t.sa, [255, 200, 0]),
        ("sc", &t.sc, [255, 40, 40]),
        ("sd", &t.sd, [40, 160, 255]),
        ("se", &t.se, [40, 220, 80]),
        ("sf", &t.sf, [255, 0, 255]),
    ];
    for (name, set, color) in sets {
        let mut canvas = Canvas::from_frame(&frame);
        canvas.segments(set, scale, color);
        canvas.save(&args.out_dir.join(format!("{name}.png")))?;
    }
    save_edge_map(&analysis.eprime, &args.out_dir.join("eprime.png"))?;
    save_edge_map(&analysis.edges, &args.out_dir.join("edges.png"))?;

    let doc = DumpDocument {
        image: args.image.display().to_string(),
        width: analysis.width,
        height: analysis.height,
        kappa: cfg.kappa,
        counts: DumpCounts {
            sa: t.sa.len(),
            sb: t.sb.len(),
            sc: t.sc.len(),
            sd: t.sd.len(),
            se: t.se.len(),
            sf: t.sf.len(),
            eprime_pixels: analysis.eprime.count(),
            edge_pixels: analysis.edges.count(),
        },
        horizon: result.horizon,
        top_lines: &analysis.top_lines,
        trace: t,
    };
    let path = args.out_dir.join("trace.json");
    let file = File::create(&path).map_err(|e| io_error(&path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &doc)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    println!(
        "sa={} sb={} sc={} sd={} se={} sf={}",
        doc.counts.sa, doc.counts.sb, doc.counts.sc, doc.counts.sd, doc.counts.se, doc.counts.sf
    );
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec: SequenceSpec = match &args.params {
        Some(path) => {
            require_file(path)?;
            let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SequenceSpec::default(),
    };
    spec.validate()?;
    create_dir(&args.out_dir)?;
    let digits = spec.frames.saturating_sub(1).to_string().len().max(3);
    let mut rows: Vec<GtAnnotation> = Vec::with_capacity(spec.frames);
    let mut raw = match args.format {
        SynthFormat::Raw => {
            let path = args.out_dir.join("frames.hrzn");
            let file = File::create(&path).map_err(|e| io_error(&path, e))?;
            let header = RawHeader {
                width: spec.scene.width as u32,
                height: spec.scene.height as u32,
                frames: spec.frames as u32,
            };
            Some((
                RawVideoWriter::new(BufWriter::new(file), header).map_err(|e| io_error(&path, e))?,
                path,
            ))
        }
        SynthFormat::Png => None,
    };
    for item in spec.generate() {
        let (frame, gt) = item?;
        match &mut raw {
            Some((w, path)) => w.write_frame(&frame).map_err(|e| io_error(path, e))?,
            None => save_frame(&frame, &args.out_dir.join(format!("{:0digits$}.png", gt.frame_index)))?,
        }
        rows.push(gt);
    }
    if let Some((w, path)) = raw {
        w.finish().and_then(|mut b| b.flush()).map_err(|e| io_error(&path, e))?;
    }
    write_annotations(&args.out_dir.join("gt.csv"), &rows)?;
    println!("wrote {} frames to {}", rows.len(), args.out_dir.display());
    Ok(())
}
