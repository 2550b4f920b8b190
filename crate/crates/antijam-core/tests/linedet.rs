use antijam_core::linedet::{
    candidate_lines, continuity_loss, detect_target_ridge, matching_loss, sol_split, DetectorConfig, LineSegment,
};
use antijam_core::par::Exec;
use antijam_core::siggen::noise;
use antijam_core::tfr::{Axis, TfImage, TfSource};
use antijam_core::Error;

const ROWS: usize = 64;
const COLS: usize = 128;

/// Low-level random background plus a line `row = 10 + 0.3 col` drawn where `on(col)`.
fn image_with(on: impl Fn(usize) -> bool) -> TfImage {
    let bg = noise(ROWS * COLS, 0.03, 11);
    let mut data: Vec<f64> = bg.iter().map(|z| z.norm()).collect();
    for c in 20..100 {
        if on(c) {
            let r = (10.0 + 0.3 * c as f64).round() as usize;
            data[r * COLS + c] = 1.0;
        }
    }
    let unit = Axis { origin: 0.0, step: 1.0 };
    TfImage::new(data, ROWS, COLS, unit, unit, TfSource::Glwd).unwrap()
}

fn config(gamma1: f64) -> DetectorConfig {
    DetectorConfig { gamma1, mu: gamma1 / 4.0, ..DetectorConfig::default() }
}

#[test]
fn solid_line_is_found() {
    let img = image_with(|_| true);
    let seg = detect_target_ridge(&img, &config(20.0)).unwrap();
    assert!(seg.length() > 60.0, "{seg:?}");
    assert!((seg.slope_k() - 0.3).abs() < 0.05, "{seg:?}");
    let truth = LineSegment::new(20.0, 16.0, 99.0, 39.7, 0.0).unwrap();
    assert!(matching_loss(&seg, &truth, 20.0) < 15.0);
}

#[test]
fn dashed_line_has_no_target_ridge() {
    // 8 px dashes separated by 5 px gaps: every piece is far below gamma1
    let img = image_with(|c| (c - 20) % 13 < 8);
    match detect_target_ridge(&img, &config(20.0)) {
        Err(Error::NoTargetRidge) => {}
        other => panic!("expected NoTargetRidge, got {other:?}"),
    }
}

#[test]
fn longer_gate_never_admits_more() {
    let img = image_with(|c| c < 50 || c > 56);
    let mut last = usize::MAX;
    for g in [8.0, 16.0, 32.0, 64.0] {
        let cfg = config(g);
        let n = candidate_lines(&img, &cfg).unwrap().segments.iter().filter(|s| s.length() > g).count();
        assert!(n <= last, "gate {g}: {n} > {last}");
        last = n;
    }
}

#[test]
fn parallel_and_sequential_agree() {
    let img = image_with(|c| c % 17 != 0);
    let par = candidate_lines(&img, &DetectorConfig { exec: Exec::Parallel, ..config(20.0) }).unwrap();
    let seq = candidate_lines(&img, &DetectorConfig { exec: Exec::Sequential, ..config(20.0) }).unwrap();
    assert_eq!(par, seq);
    assert_eq!(par, candidate_lines(&img, &config(20.0)).unwrap());
}

#[test]
fn split_count_and_overlap_starts() {
    let s = LineSegment::new(0.0, 0.0, 10.0, 0.0, 1.0).unwrap();
    for beta in [0.25, 0.375, 0.5] {
        let parts = sol_split(&s, 4.0, 5.0, beta);
        assert_eq!(parts.len(), 4);
        let len = parts[0].t2 - parts[0].t1;
        for (i, p) in parts.iter().enumerate() {
            // piece i starts at i * L * (1 - beta)
            assert!((p.t1 - i as f64 * len * (1.0 - beta)).abs() < 1e-12);
        }
        assert!((parts[3].t2 - 10.0).abs() < 1e-12);
    }
}

#[test]
fn gap_counting() {
    let seg = |t1: f64, t2: f64| LineSegment::new(t1, 0.0, t2, 0.0, 0.0).unwrap();
    let segs = [seg(0.0, 4.0), seg(5.0, 9.0), seg(11.5, 15.0), seg(15.0, 20.0)];
    // gaps 1, 2.5, 0
    assert_eq!(continuity_loss(&segs, 2.0), 2);
    assert_eq!(continuity_loss(&segs, 3.0), 3);
    assert_eq!(continuity_loss(&segs, 0.5), 1);
}
