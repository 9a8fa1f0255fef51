use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use horizon_bench::{sea_frame, RESOLUTIONS};
use horizon_core::edge_map::{build_downsampled_map, reconstruct_full_map, segments_to_coords};
use horizon_core::inference::{hough_top_lines_on_points, refine_least_squares};
use horizon_core::preprocess::{downsample, extract_red};
use horizon_core::{filter_segments, DetectorConfig, Lsd, Pipeline, SegmentDetector, Stream};

fn stages(c: &mut Criterion) {
    let cfg = DetectorConfig::default();
    let pipeline = Pipeline::new(cfg).unwrap();
    let lsd = Lsd::new(cfg.lsd);
    let mut group = c.benchmark_group("stage");
    group.sample_size(20);
    for (name, w, h) in RESOLUTIONS {
        let frame = sea_frame(w, h);
        let small = downsample(&extract_red(&frame), cfg.kappa).unwrap();
        let analysis = pipeline.analyze(&frame).unwrap();
        let sa = &analysis.trace.sa;
        let sf = &analysis.trace.sf;

        group.bench_with_input(BenchmarkId::new("preprocess", name), &frame, |b, f| {
            b.iter(|| downsample(&extract_red(f), cfg.kappa).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("lsd", name), &small, |b, r| {
            b.iter(|| lsd.detect(r).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("filters", name), sa, |b, s| {
            b.iter(|| filter_segments(s, &cfg.lsf, &cfg.roif, false))
        });
        group.bench_with_input(BenchmarkId::new("edge_map", name), sf, |b, s| {
            b.iter(|| {
                let coords = segments_to_coords(s, small.width, small.height);
                let eprime = build_downsampled_map(&coords, small.width, small.height);
                reconstruct_full_map(&eprime, cfg.kappa, w, h, cfg.e_th as f32)
            })
        });
        group.bench_with_input(BenchmarkId::new("hough", name), &analysis.edge_points, |b, p| {
            b.iter(|| hough_top_lines_on_points(p, w, h, cfg.ohm.m_top, &pipeline.hough_params()).unwrap())
        });
        let coarse = analysis.top_lines[0].line;
        group.bench_with_input(BenchmarkId::new("refine", name), &analysis.edges, |b, e| {
            b.iter(|| refine_least_squares(&coarse, e, cfg.ohm.d_in))
        });
    }
    group.finish();
}

fn full_frame(c: &mut Criterion) {
    let mut group = c.benchmark_group("frame");
    group.sample_size(20);
    for (name, w, h) in RESOLUTIONS {
        let frame = sea_frame(w, h);
        let mut stream = Stream::new(Pipeline::new(DetectorConfig::default()).unwrap());
        group.bench_function(name, |b| b.iter(|| stream.push(black_box(&frame)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, stages, full_frame);
criterion_main!(benches);
