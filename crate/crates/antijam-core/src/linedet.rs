//! Long-ridge detection in a [`TfImage`].
//!
//! Candidates come from an (angle, offset) vote accumulator over the brightest
//! pixels. Each accumulator peak is traced along the image into runs; runs
//! separated by short gaps are merged. The target ridge is the best surviving
//! run after a minimum-length gate, scored by length, continuity and robust
//! (sub-segment median) magnitude.

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::tfr::{median_of, TfImage};
use std::f64::consts::PI;

/// Straight segment from `(t1, u1)` to `(t2, u2)` with `t2 > t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub t1: f64,
    pub u1: f64,
    pub t2: f64,
    pub u2: f64,
    pub score: f64,
}

impl LineSegment {
    /// Orders the endpoints by `t`; errors on a vertical or non-finite segment.
    pub fn new(t1: f64, u1: f64, t2: f64, u2: f64, score: f64) -> Result<Self> {
        if ![t1, u1, t2, u2].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("segment endpoints must be finite"));
        }
        if t1 == t2 {
            return Err(Error::invalid("segment must span a nonzero time interval"));
        }
        let (t1, u1, t2, u2) = if t1 < t2 { (t1, u1, t2, u2) } else { (t2, u2, t1, u1) };
        Ok(LineSegment { t1, u1, t2, u2, score })
    }

    /// Slope in u-units per time unit.
    pub fn slope_k(&self) -> f64 {
        (self.u2 - self.u1) / (self.t2 - self.t1)
    }

    pub fn length(&self) -> f64 {
        (self.t2 - self.t1).hypot(self.u2 - self.u1)
    }

    pub fn midpoint(&self) -> (f64, f64) {
        (0.5 * (self.t1 + self.t2), 0.5 * (self.u1 + self.u2))
    }

    fn point(&self, f: f64) -> (f64, f64) {
        (self.t1 + f * (self.t2 - self.t1), self.u1 + f * (self.u2 - self.u1))
    }
}

/// Detector settings. Lengths are in pixels along the line.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Minimum accepted ridge length.
    pub gamma1: f64,
    /// Runs separated by less than this are merged.
    pub gamma2: f64,
    /// Overlap ratio of consecutive sub-segments.
    pub beta: f64,
    /// Base sub-segment length.
    pub mu: f64,
    /// Pixels above this quantile of the image vote.
    pub binarize_percentile: f64,
    /// Quantile of the image used as the baseline level when extracting runs.
    pub level_percentile: f64,
    pub angle_bins: usize,
    /// Offset resolution in pixels.
    pub offset_step: f64,
    /// Expected ridge slope in image axis units (u per second), if known.
    pub expected_slope: Option<f64>,
    /// Half-width of the angle search around `expected_slope`, degrees.
    pub slope_tolerance_deg: f64,
    /// Accumulator peaks to trace.
    pub max_candidates: usize,
    /// Votes carry linear magnitude instead of 1.
    pub weighted_votes: bool,
    pub exec: Exec,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            gamma1: 12.0,
            gamma2: 3.0,
            beta: 0.375,
            mu: 3.0,
            binarize_percentile: 0.9,
            level_percentile: 0.9,
            angle_bins: 180,
            offset_step: 1.0,
            expected_slope: None,
            slope_tolerance_deg: 3.0,
            max_candidates: 12,
            weighted_votes: true,
            exec: Exec::Parallel,
        }
    }
}

impl DetectorConfig {
    /// Defaults scaled to a ridge that spans `extent_px` pixels.
    pub fn for_ridge_extent(extent_px: f64) -> Self {
        let gamma1 = 0.4 * extent_px;
        DetectorConfig {
            gamma1,
            mu: gamma1 / 4.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1 > self.mu && self.mu > 0.0) {
            return Err(Error::invalid("need gamma1 > mu > 0"));
        }
        if !(0.25..=0.5).contains(&self.beta) {
            return Err(Error::invalid("beta must lie in [0.25, 0.5]"));
        }
        if !(self.gamma2 < self.gamma1) || self.gamma2 < 0.0 {
            return Err(Error::invalid("need 0 <= gamma2 < gamma1"));
        }
        if !(0.0..1.0).contains(&self.binarize_percentile) || !(0.0..1.0).contains(&self.level_percentile) {
            return Err(Error::invalid("percentiles must lie in [0, 1)"));
        }
        if self.angle_bins == 0 || !(self.offset_step > 0.0) || self.max_candidates == 0 {
            return Err(Error::invalid("accumulator resolution must be positive"));
        }
        Ok(())
    }
}

/// Segments sorted by descending score.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SegmentSet {
    pub segments: Vec<LineSegment>,
}

impl SegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    /// CSV with header `t1,u1,t2,u2,score`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t1,u1,t2,u2,score")?;
        for s in &self.segments {
            writeln!(w, "{:e},{:e},{:e},{:e},{:e}", s.t1, s.u1, s.t2, s.u2, s.score)?;
        }
        Ok(())
    }
}

/// Endpoint + centre L1 matching loss, gated on the predicted length exceeding `gamma1`.
pub fn matching_loss(pred: &LineSegment, truth: &LineSegment, gamma1: f64) -> f64 {
    if pred.length() <= gamma1 {
        return 0.0;
    }
    let l1 = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() + (a.1 - b.1).abs();
    l1((pred.t1, pred.u1), (truth.t1, truth.u1))
        + l1((pred.t2, pred.u2), (truth.t2, truth.u2))
        + l1(pred.midpoint(), truth.midpoint())
}

/// Splits a segment longer than `gamma1` into `floor(r / (mu/2)) - 1` equal
/// sub-segments, each starting `beta` of its length before the previous end.
/// Shorter segments are returned unchanged.
pub fn sol_split(seg: &LineSegment, mu: f64, gamma1: f64, beta: f64) -> Vec<LineSegment> {
    let r = seg.length();
    if r <= gamma1 || mu <= 0.0 {
        return vec![*seg];
    }
    let k = (r / (mu / 2.0)).floor() as i64 - 1;
    if k < 1 {
        return vec![*seg];
    }
    let k = k as usize;
    // k pieces of length L with step L(1-beta) cover r exactly
    let piece = 1.0 / (1.0 + (k as f64 - 1.0) * (1.0 - beta));
    let step = piece * (1.0 - beta);
    (0..k)
        .map(|i| {
            let f0 = i as f64 * step;
            let f1 = if i + 1 == k { 1.0 } else { f0 + piece };
            let (t1, u1) = seg.point(f0);
            let (t2, u2) = seg.point(f1);
            LineSegment { t1, u1, t2, u2, score: seg.score }
        })
        .collect()
}

/// Gap between consecutive segments: zero when they overlap along the first's direction.
fn gap(a: &LineSegment, b: &LineSegment) -> f64 {
    let (dt, du) = (a.t2 - a.t1, a.u2 - a.u1);
    let len = dt.hypot(du);
    let (vt, vu) = (b.t1 - a.t2, b.u1 - a.u2);
    if len == 0.0 {
        return vt.hypot(vu);
    }
    let along = (vt * dt + vu * du) / len;
    let across = (vt * du - vu * dt).abs() / len;
    if along <= 0.0 {
        across
    } else {
        vt.hypot(vu)
    }
}

/// Number of consecutive pairs whose gap is below `gamma2`.
pub fn continuity_loss(segments: &[LineSegment], gamma2: f64) -> usize {
    segments.windows(2).filter(|w| gap(&w[0], &w[1]) < gamma2).count()
}

// ---------------------------------------------------------------------------
// accumulator and tracing, all in pixel coordinates (t = column, u = row)

struct Px {
    rows: usize,
    cols: usize,
    mag: Vec<f64>,
    /// Vote and continuity threshold.
    thr: f64,
    /// Baseline subtracted when extracting runs along a line.
    level: f64,
}

const MAX_RUNS_PER_LINE: usize = 3;

impl Px {
    fn from_image(image: &TfImage, percentile: f64, level_percentile: f64) -> Self {
        let mag: Vec<f64> = (0..image.rows)
            .flat_map(|r| (0..image.cols).map(move |c| (r, c)))
            .map(|(r, c)| image.linear(r, c))
            .collect();
        let mut sorted = mag.clone();
        sorted.sort_by(f64::total_cmp);
        let at = |q: f64| sorted[(((sorted.len() as f64 - 1.0) * q).round() as usize).min(sorted.len() - 1)];
        Px {
            rows: image.rows,
            cols: image.cols,
            thr: at(percentile),
            level: at(level_percentile),
            mag,
        }
    }

    fn at(&self, r: i64, c: i64) -> Option<f64> {
        if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols {
            None
        } else {
            Some(self.mag[r as usize * self.cols + c as usize])
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Peak {
    votes: f64,
    ai: usize,
    oi: usize,
    theta: f64,
    rho: f64,
}

fn angle_grid(image: &TfImage, cfg: &DetectorConfig) -> Vec<f64> {
    match cfg.expected_slope {
        Some(s) => {
            let px = s * image.t_axis.step / image.u_axis.step;
            let phi = px.atan();
            let tol = cfg.slope_tolerance_deg.to_radians();
            let n = cfg.angle_bins.max(1);
            (0..n)
                .map(|i| {
                    let f = if n == 1 { 0.5 } else { i as f64 / (n - 1) as f64 };
                    phi - tol + 2.0 * tol * f + PI / 2.0
                })
                .collect()
        }
        None => (0..cfg.angle_bins).map(|i| i as f64 * PI / cfg.angle_bins as f64).collect(),
    }
}

fn accumulate(px: &Px, thetas: &[f64], cfg: &DetectorConfig) -> (Vec<Vec<f64>>, f64) {
    let diag = (px.rows as f64).hypot(px.cols as f64);
    let n_off = (2.0 * diag / cfg.offset_step).ceil() as usize + 1;
    let mut on: Vec<(f64, f64, f64)> = Vec::new();
    for r in 0..px.rows {
        for c in 0..px.cols {
            let v = px.mag[r * px.cols + c];
            if v > px.thr {
                on.push((c as f64, r as f64, if cfg.weighted_votes { v } else { 1.0 }));
            }
        }
    }
    let acc = par::map_indices(thetas.len(), cfg.exec, |ai| {
        let (s, c) = thetas[ai].sin_cos();
        let mut row = vec![0.0; n_off];
        for &(x, y, w) in &on {
            let rho = x * c + y * s;
            let oi = ((rho + diag) / cfg.offset_step).round() as usize;
            row[oi.min(n_off - 1)] += w;
        }
        row
    });
    (acc, diag)
}

fn find_peaks(acc: &[Vec<f64>], thetas: &[f64], diag: f64, cfg: &DetectorConfig) -> Vec<Peak> {
    let na = acc.len();
    let no = acc.first().map_or(0, Vec::len);
    let nms_a = 2i64;
    let nms_o = (3.0 / cfg.offset_step).ceil() as i64;
    let mut peaks = Vec::new();
    for ai in 0..na {
        for oi in 0..no {
            let v = acc[ai][oi];
            if v <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'n: for da in -nms_a..=nms_a {
                for dof in -nms_o..=nms_o {
                    if da == 0 && dof == 0 {
                        continue;
                    }
                    let (a2, o2) = (ai as i64 + da, oi as i64 + dof);
                    if a2 < 0 || o2 < 0 || a2 as usize >= na || o2 as usize >= no {
                        continue;
                    }
                    let w = acc[a2 as usize][o2 as usize];
                    // strict on one side so plateaus keep exactly one peak
                    if w > v || (w == v && (da, dof) < (0, 0)) {
                        is_max = false;
                        break 'n;
                    }
                }
            }
            if is_max {
                peaks.push(Peak {
                    votes: v,
                    ai,
                    oi,
                    theta: thetas[ai],
                    rho: oi as f64 * cfg.offset_step - diag,
                });
            }
        }
    }
    peaks.sort_by(|a, b| b.votes.total_cmp(&a.votes).then(a.ai.cmp(&b.ai)).then(a.oi.cmp(&b.oi)));
    peaks.truncate(cfg.max_candidates);
    peaks
}

/// One traced run in pixel coordinates plus its per-step magnitudes.
#[derive(Debug, Clone)]
struct Run {
    seg: LineSegment,
    profile: Vec<f64>,
    thr: f64,
    offset_index: usize,
}

fn trace(px: &Px, pk: &Peak, cfg: &DetectorConfig) -> Vec<Run> {
    let (s, c) = pk.theta.sin_cos();
    let (x0, y0) = (pk.rho * c, pk.rho * s);
    let (dxs, dys) = (-s, c);
    let major = dxs.abs().max(dys.abs());
    let step = 1.0 / major;
    let steep = dys.abs() > dxs.abs();
    // parameter range that keeps the point inside the image
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (p0, d, n) in [(x0, dxs, px.cols), (y0, dys, px.rows)] {
        if d.abs() < 1e-12 {
            if p0 < -0.5 || p0 > n as f64 - 0.5 {
                return Vec::new();
            }
        } else {
            let a = (-0.5 - p0) / d;
            let b = (n as f64 - 0.5 - p0) / d;
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    if !(hi > lo) {
        return Vec::new();
    }
    let n_steps = ((hi - lo) / step).floor() as usize + 1;
    let mut prof = Vec::with_capacity(n_steps);
    let mut pts = Vec::with_capacity(n_steps);
    for i in 0..n_steps {
        let t = lo + i as f64 * step;
        let (x, y) = (x0 + t * dxs, y0 + t * dys);
        let (ci, ri) = (x.round() as i64, y.round() as i64);
        let mut best = 0.0f64;
        for o in -1..=1 {
            let v = if steep { px.at(ri, ci + o) } else { px.at(ri + o, ci) };
            if let Some(v) = v {
                best = best.max(v);
            }
        }
        prof.push(best);
        pts.push((x, y));
    }
    // runs are the maximum-sum stretches of (profile - level); short dips inside a
    // strong stretch do not split it
    let n = prof.len();
    // a stretch of at least gamma2 steps below the level is a hard gap
    let mut taken = vec![false; n];
    let gap_len = cfg.gamma2.ceil().max(1.0) as usize;
    let mut i = 0;
    while i < n {
        if prof[i] <= px.level {
            let j0 = i;
            while i < n && prof[i] <= px.level {
                i += 1;
            }
            if i - j0 >= gap_len {
                taken[j0..i].iter_mut().for_each(|t| *t = true);
            }
        } else {
            i += 1;
        }
    }
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for _ in 0..MAX_RUNS_PER_LINE {
        let mut best = (0.0, 0, 0);
        let (mut acc, mut a) = (0.0, 0);
        for i in 0..n {
            if taken[i] {
                acc = 0.0;
                a = i + 1;
                continue;
            }
            acc += prof[i] - px.level;
            if acc <= 0.0 {
                acc = 0.0;
                a = i + 1;
            } else if acc > best.0 {
                best = (acc, a, i + 1);
            }
        }
        let (sum, a, b) = best;
        if sum <= 0.0 || ((b - a) as f64) < cfg.mu {
            break;
        }
        taken[a..b].iter_mut().for_each(|t| *t = true);
        runs.push((a, b));
    }
    runs.sort_unstable();
    // join runs separated by less than gamma2 steps
    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (a, b) in runs {
        match merged.last_mut() {
            Some(last) if ((a - last.1) as f64) < cfg.gamma2 => last.1 = b,
            _ => merged.push((a, b)),
        }
    }
    let runs = merged;
    runs.into_iter()
        .filter_map(|(a, b)| {
            let (xa, ya) = pts[a];
            let (xb, yb) = pts[b - 1];
            if xa == xb {
                return None;
            }
            let seg = LineSegment::new(xa, ya, xb, yb, 0.0).ok()?;
            Some(Run {
                seg,
                profile: prof[a..b].to_vec(),
                thr: px.thr,
                offset_index: pk.oi,
            })
        })
        .collect()
}

fn run_score(run: &Run, cfg: &DetectorConfig) -> f64 {
    let r = run.seg.length();
    let n = run.profile.len();
    let cont = run.profile.iter().filter(|&&v| v > run.thr).count() as f64 / n as f64;
    let subs = sol_split(&run.seg, cfg.mu, cfg.gamma1, cfg.beta);
    let meds: Vec<f64> = subs
        .iter()
        .map(|s| {
            let f0 = ((s.t1 - run.seg.t1) / (run.seg.t2 - run.seg.t1)).clamp(0.0, 1.0);
            let f1 = ((s.t2 - run.seg.t1) / (run.seg.t2 - run.seg.t1)).clamp(0.0, 1.0);
            let a = (f0 * (n - 1) as f64).round() as usize;
            let b = ((f1 * (n - 1) as f64).round() as usize).max(a);
            median_of(&run.profile[a..=b])
        })
        .collect();
    let mag = meds.iter().sum::<f64>() / meds.len() as f64;
    r * cont * mag
}

fn is_duplicate(a: &LineSegment, b: &LineSegment, tol: f64) -> bool {
    // b's endpoints near a's line and the two overlap by more than half of the shorter
    let (dt, du) = (a.t2 - a.t1, a.u2 - a.u1);
    let len = dt.hypot(du);
    let perp = |t: f64, u: f64| ((t - a.t1) * du - (u - a.u1) * dt).abs() / len;
    let proj = |t: f64, u: f64| ((t - a.t1) * dt + (u - a.u1) * du) / len;
    if perp(b.t1, b.u1) > tol || perp(b.t2, b.u2) > tol {
        return false;
    }
    let (p1, p2) = (proj(b.t1, b.u1), proj(b.t2, b.u2));
    let (lo, hi) = (p1.min(p2), p1.max(p2));
    let overlap = (hi.min(len) - lo.max(0.0)).max(0.0);
    overlap > 0.5 * (hi - lo).min(len)
}

fn scored_runs(image: &TfImage, cfg: &DetectorConfig) -> Result<Vec<(f64, Run)>> {
    cfg.validate()?;
    if image.is_empty() {
        return Err(Error::EmptyImage);
    }
    let px = Px::from_image(image, cfg.binarize_percentile, cfg.level_percentile);
    let thetas = angle_grid(image, cfg);
    let (acc, diag) = accumulate(&px, &thetas, cfg);
    let peaks = find_peaks(&acc, &thetas, diag, cfg);
    let mut runs: Vec<(f64, Run)> = peaks
        .iter()
        .flat_map(|pk| trace(&px, pk, cfg))
        .filter(|r| r.seg.length() >= cfg.mu)
        .map(|r| (run_score(&r, cfg), r))
        .collect();
    runs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.seg.length().total_cmp(&a.1.seg.length()))
            .then(a.1.offset_index.cmp(&b.1.offset_index))
    });
    let mut kept: Vec<(f64, Run)> = Vec::new();
    for (s, r) in runs {
        if kept.iter().any(|(_, k)| is_duplicate(&k.seg, &r.seg, 3.0)) {
            continue;
        }
        kept.push((s, r));
    }
    Ok(kept)
}

fn to_axes(image: &TfImage, seg: &LineSegment, score: f64) -> Result<LineSegment> {
    LineSegment::new(
        image.t_axis.value(seg.t1),
        image.u_axis.value(seg.u1),
        image.t_axis.value(seg.t2),
        image.u_axis.value(seg.u2),
        score,
    )
}

/// All traced candidate segments, in axis units, best first.
pub fn candidate_lines(image: &TfImage, cfg: &DetectorConfig) -> Result<SegmentSet> {
    let runs = scored_runs(image, cfg)?;
    let segments = runs
        .iter()
        .filter(|(s, _)| *s > 0.0)
        .map(|(s, r)| to_axes(image, &r.seg, *s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SegmentSet { segments })
}

/// Candidate segments in pixel coordinates (column, row), best first.
pub fn candidate_lines_px(image: &TfImage, cfg: &DetectorConfig) -> Result<SegmentSet> {
    let runs = scored_runs(image, cfg)?;
    Ok(SegmentSet {
        segments: runs
            .into_iter()
            .filter(|(s, _)| *s > 0.0)
            .map(|(s, r)| LineSegment { score: s, ..r.seg })
            .collect(),
    })
}

/// The best candidate longer than `gamma1`, in axis units.
pub fn detect_target_ridge(image: &TfImage, cfg: &DetectorConfig) -> Result<LineSegment> {
    let runs = scored_runs(image, cfg)?;
    runs.iter()
        .find(|(s, r)| *s > 0.0 && r.seg.length() > cfg.gamma1)
        .map(|(s, r)| to_axes(image, &r.seg, *s))
        .unwrap_or(Err(Error::NoTargetRidge))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(t1: f64, u1: f64, t2: f64, u2: f64) -> LineSegment {
        LineSegment::new(t1, u1, t2, u2, 0.0).unwrap()
    }

    #[test]
    fn matching_loss_examples() {
        let t = seg(0.0, 0.0, 20.0, 10.0);
        assert_eq!(matching_loss(&t, &t, 5.0), 0.0);
        let short = seg(0.0, 0.0, 2.0, 1.0);
        assert_eq!(matching_loss(&short, &seg(0.0, 0.0, 4.0, 2.0), 4.5), 0.0);
        let p = seg(1.0, 1.0, 19.0, 9.0);
        assert!((matching_loss(&p, &t, 5.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sol_split_count_and_overlap() {
        let s = seg(0.0, 0.0, 10.0, 0.0);
        let parts = sol_split(&s, 4.0, 5.0, 0.5);
        assert_eq!(parts.len(), 4);
        for w in parts.windows(2) {
            assert!((w[1].t1 - (w[0].t2 - 0.5 * (w[0].t2 - w[0].t1))).abs() < 1e-12);
        }
        assert_eq!(parts.first().unwrap().t1, 0.0);
        assert_eq!(parts.last().unwrap().t2, 10.0);
        assert_eq!(sol_split(&s, 4.0, 10.0, 0.5), vec![s]);
    }

    #[test]
    fn continuity_counts() {
        let a = seg(0.0, 0.0, 4.0, 0.0);
        let b = seg(4.0, 0.0, 8.0, 0.0);
        let c = seg(8.0, 0.0, 12.0, 0.0);
        assert_eq!(continuity_loss(&[a, b, c], 1.0), 2);
        let g = 2.0;
        let b2 = seg(5.0, 0.0, 9.0, 0.0);
        let c2 = seg(13.0, 0.0, 17.0, 0.0);
        assert_eq!(continuity_loss(&[a, b2, c2], g), 1);
        assert_eq!(continuity_loss(&[a], g), 0);
    }
}
