//! Masking in the STFT domain, pulse compression, CFAR and suppression metrics.

use crate::error::{Error, Result};
use crate::fft;
use crate::linedet::LineSegment;
use crate::siggen::ComplexSignal;
use crate::tfr::{hann, istft, stft_with, StftFrameSet};
use crate::SPEED_OF_LIGHT;
use std::fmt::Write as _;
use std::io::Write;

/// Binary passband around a line, laid out like [`StftFrameSet::frames`].
#[derive(Debug, Clone, PartialEq)]
pub struct TfMask {
    pub values: Vec<f64>,
    pub n_frames: usize,
    pub nfft: usize,
    pub window_len: usize,
    pub hop: usize,
    /// Line in seconds and Hz.
    pub line: LineSegment,
    /// Passband width in STFT bins.
    pub width_bins: f64,
}

impl TfMask {
    pub fn get(&self, frame: usize, bin: usize) -> f64 {
        self.values[frame * self.nfft + bin]
    }

    pub fn ones(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1.0).count()
    }
}

/// Sets bins whose circular distance from the line frequency is below `width_bins / 2`
/// for frames whose centre lies in `[t1, t2]`.
pub fn build_mask(line: &LineSegment, frames: &StftFrameSet, width_bins: f64) -> Result<TfMask> {
    if !(width_bins > 0.0) {
        return Err(Error::invalid("mask width must be positive"));
    }
    let n = frames.n_frames;
    if n == 0 {
        return Err(Error::EmptyImage);
    }
    let (t_lo, t_hi) = (frames.frame_time(0), frames.frame_time(n - 1));
    if line.t2 < t_lo || line.t1 > t_hi {
        return Err(Error::invalid(format!(
            "line [{:e}, {:e}] s lies outside the frame extent [{t_lo:e}, {t_hi:e}] s",
            line.t1, line.t2
        )));
    }
    let nfft = frames.nfft;
    let df = frames.bin_spacing_hz();
    let k = line.slope_k();
    let mut values = vec![0.0; n * nfft];
    for i in 0..n {
        let t = frames.frame_time(i);
        if t < line.t1 || t > line.t2 {
            continue;
        }
        let centre = (line.u1 + k * (t - line.t1)) / df;
        for b in 0..nfft {
            let d = (fft::signed_bin(b, nfft) as f64 - centre).rem_euclid(nfft as f64);
            let d = d.min(nfft as f64 - d);
            if d < width_bins / 2.0 {
                values[i * nfft + b] = 1.0;
            }
        }
    }
    Ok(TfMask {
        values,
        n_frames: n,
        nfft,
        window_len: frames.window_len(),
        hop: frames.hop,
        line: *line,
        width_bins,
    })
}

/// `istft(stft(received) * mask)` using the mask's frame layout.
pub fn filter_stft(received: &ComplexSignal, mask: &TfMask) -> Result<ComplexSignal> {
    let frames = stft_with(received, &hann(mask.window_len), mask.hop, mask.nfft)?;
    if frames.n_frames != mask.n_frames || frames.nfft != mask.nfft {
        return Err(Error::ShapeMismatch(format!(
            "mask is {}x{}, signal frames are {}x{}",
            mask.n_frames, mask.nfft, frames.n_frames, frames.nfft
        )));
    }
    istft(&frames.masked(&mask.values)?)
}

/// Matched-filter output magnitude over range.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeProfile {
    pub magnitudes: Vec<f64>,
    pub range_origin_m: f64,
    pub range_step_m: f64,
}

impl RangeProfile {
    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    pub fn range(&self, i: usize) -> f64 {
        self.range_origin_m + i as f64 * self.range_step_m
    }

    pub fn bin_of(&self, range_m: f64) -> Option<usize> {
        let i = ((range_m - self.range_origin_m) / self.range_step_m).round();
        (i >= 0.0 && (i as usize) < self.len()).then_some(i as usize)
    }

    /// Largest magnitude within `half_width` bins of `range_m`.
    pub fn peak_near(&self, range_m: f64, half_width: usize) -> Result<f64> {
        let c = self
            .bin_of(range_m)
            .ok_or_else(|| Error::invalid(format!("range {range_m} m outside profile")))?;
        let lo = c.saturating_sub(half_width);
        let hi = (c + half_width).min(self.len() - 1);
        Ok(self.magnitudes[lo..=hi].iter().cloned().fold(0.0, f64::max))
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.magnitudes.iter().enumerate() {
            if v > self.magnitudes[best] {
                best = i;
            }
        }
        best
    }

    /// CSV `range_m,magnitude_db`, dB relative to the profile maximum.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let peak = self.magnitudes.iter().cloned().fold(0.0, f64::max);
        writeln!(w, "range_m,magnitude_db")?;
        for (i, &v) in self.magnitudes.iter().enumerate() {
            let db = if peak > 0.0 && v > 0.0 { 20.0 * (v / peak).log10() } else { -300.0 };
            writeln!(w, "{:.4},{:.6}", self.range(i), db)?;
        }
        Ok(())
    }
}

/// Cross-correlation `|sum_n x[n + l] r*[n]|` for every start lag `l` of the received window.
pub fn pulse_compress(received: &ComplexSignal, reference: &ComplexSignal) -> Result<RangeProfile> {
    let (n, nr) = (received.len(), reference.len());
    if nr == 0 || nr > n {
        return Err(Error::invalid(format!("reference of {nr} samples does not fit {n} received samples")));
    }
    if (received.sample_rate_hz() - reference.sample_rate_hz()).abs() > 1e-9 * received.sample_rate_hz() {
        return Err(Error::ShapeMismatch("reference and received sample rates differ".into()));
    }
    let m = (n + nr).next_power_of_two();
    let mut x = vec![num_complex::Complex64::new(0.0, 0.0); m];
    x[..n].copy_from_slice(received.samples());
    let mut r = vec![num_complex::Complex64::new(0.0, 0.0); m];
    r[..nr].copy_from_slice(reference.samples());
    fft::fft(&mut x);
    fft::fft(&mut r);
    for (a, b) in x.iter_mut().zip(&r) {
        *a *= b.conj();
    }
    fft::ifft(&mut x);
    let magnitudes = x[..n].iter().map(|z| z.norm()).collect();
    let dt = received.dt();
    Ok(RangeProfile {
        magnitudes,
        range_origin_m: SPEED_OF_LIGHT * received.start_time_s() / 2.0,
        range_step_m: SPEED_OF_LIGHT * dt / 2.0,
    })
}

/// Cell-averaging CFAR settings (cells per side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfarConfig {
    pub training: usize,
    pub guard: usize,
    pub pfa: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        CfarConfig {
            training: 16,
            guard: 4,
            pfa: 1e-4,
        }
    }
}

impl CfarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.training == 0 {
            return Err(Error::config("cfar.training", "must be >= 1"));
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::config("cfar.pfa", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Threshold multiplier for `n` averaged exponential cells.
    pub fn alpha(&self, n: usize) -> f64 {
        let n = n as f64;
        n * (self.pfa.powf(-1.0 / n) - 1.0)
    }
}

/// Per-cell CA-CFAR decisions on a power sequence; training windows are truncated at the edges.
pub fn cfar_mask(power: &[f64], cfg: &CfarConfig) -> Result<Vec<bool>> {
    cfg.validate()?;
    let len = power.len();
    if len < 2 * (cfg.training + cfg.guard) + 1 {
        return Err(Error::invalid(format!(
            "profile of {len} cells is shorter than the CFAR window"
        )));
    }
    let mut prefix = vec![0.0; len + 1];
    for i in 0..len {
        prefix[i + 1] = prefix[i] + power[i];
    }
    let sum = |a: usize, b: usize| prefix[b] - prefix[a];
    Ok((0..len)
        .map(|i| {
            let mut total = 0.0;
            let mut count = 0;
            if i > cfg.guard {
                let hi = i - cfg.guard;
                let lo = hi.saturating_sub(cfg.training);
                total += sum(lo, hi);
                count += hi - lo;
            }
            let lo = i + cfg.guard + 1;
            if lo < len {
                let hi = (lo + cfg.training).min(len);
                total += sum(lo, hi);
                count += hi - lo;
            }
            count > 0 && power[i] > cfg.alpha(count) * total / count as f64
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub range_m: f64,
    pub magnitude: f64,
}

/// CFAR on `|profile|^2`; each run of contiguous detections reports its peak cell.
pub fn cfar_detect(profile: &RangeProfile, cfg: &CfarConfig) -> Result<Vec<Detection>> {
    let power: Vec<f64> = profile.magnitudes.iter().map(|v| v * v).collect();
    let hits = cfar_mask(&power, cfg)?;
    let mut out = Vec::new();
    let mut i = 0;
    while i < hits.len() {
        if !hits[i] {
            i += 1;
            continue;
        }
        let mut best = i;
        while i < hits.len() && hits[i] {
            if profile.magnitudes[i] > profile.magnitudes[best] {
                best = i;
            }
            i += 1;
        }
        out.push(Detection {
            range_m: profile.range(best),
            magnitude: profile.magnitudes[best],
        });
    }
    Ok(out)
}

/// Writes detections as CSV `range_m,magnitude`.
pub fn write_detections_csv<W: Write>(detections: &[Detection], mut w: W) -> std::io::Result<()> {
    writeln!(w, "range_m,magnitude")?;
    for d in detections {
        writeln!(w, "{:.4},{:e}", d.range_m, d.magnitude)?;
    }
    Ok(())
}

/// Peak search half-width (bins) around truth ranges.
pub const METRIC_HALF_WIDTH: usize = 3;

/// Before/after suppression figures. SJR fields are `None` without a false target.
#[derive(Debug, Clone, PartialEq)]
pub struct SuppressionReport {
    pub sjr_before_db: Option<f64>,
    pub sjr_after_db: Option<f64>,
    pub sjrif_db: Option<f64>,
    pub slr_db: f64,
    pub target_range_m: f64,
    /// Strongest false-target peak after suppression relative to the target peak.
    pub false_target_residual_db: Option<f64>,
    pub target_peak_before: f64,
    pub target_peak_after: f64,
    pub jam_peak_before: Option<f64>,
    pub jam_peak_after: Option<f64>,
}

fn db(ratio: f64) -> f64 {
    20.0 * ratio.log10()
}

/// SJR before and after, SJRIF and SLR from peaks within ±3 bins of the truth ranges.
/// With several false targets the strongest one defines `A_j`.
pub fn metrics(
    before: &RangeProfile,
    after: &RangeProfile,
    target_range_m: f64,
    false_ranges_m: &[f64],
) -> Result<SuppressionReport> {
    let hw = METRIC_HALF_WIDTH;
    let a_s = before.peak_near(target_range_m, hw)?;
    let a_s_after = after.peak_near(target_range_m, hw)?;
    let jam = |p: &RangeProfile| -> Result<Option<f64>> {
        let mut best: Option<f64> = None;
        for &r in false_ranges_m {
            let v = p.peak_near(r, hw)?;
            best = Some(best.map_or(v, |b| b.max(v)));
        }
        Ok(best)
    };
    let a_j = jam(before)?;
    let a_j_after = jam(after)?;
    let sjr_before_db = a_j.map(|j| db(a_s / j));
    let sjr_after_db = a_j_after.map(|j| db(a_s_after / j));
    let sjrif_db = match (sjr_before_db, sjr_after_db) {
        (Some(b), Some(a)) => Some(a - b),
        _ => None,
    };
    Ok(SuppressionReport {
        sjr_before_db,
        sjr_after_db,
        sjrif_db,
        slr_db: db(a_s_after / a_s),
        target_range_m,
        false_target_residual_db: a_j_after.map(|j| db(j / a_s_after)),
        target_peak_before: a_s,
        target_peak_after: a_s_after,
        jam_peak_before: a_j,
        jam_peak_after: a_j_after,
    })
}

impl SuppressionReport {
    /// `key: value` lines; absent values print as `none`.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x:.6}"));
        let mut s = String::new();
        let _ = writeln!(s, "target_range_m: {:.4}", self.target_range_m);
        let _ = writeln!(s, "false_target: {}", if self.jam_peak_before.is_some() { "yes" } else { "no false target" });
        let _ = writeln!(s, "sjr_before_db: {}", opt(self.sjr_before_db));
        let _ = writeln!(s, "sjr_after_db: {}", opt(self.sjr_after_db));
        let _ = writeln!(s, "sjrif_db: {}", opt(self.sjrif_db));
        let _ = writeln!(s, "slr_db: {:.6}", self.slr_db);
        let _ = writeln!(s, "false_target_residual_db: {}", opt(self.false_target_residual_db));
        s
    }
}

/// Sliding-energy excision settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    /// Window length in samples.
    pub window: usize,
    /// Samples whose local energy exceeds `kappa` times the mean local energy are zeroed.
    pub kappa: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { window: 16, kappa: 2.0 }
    }
}

/// Energy-function comparison method: zeroes the samples with high local energy.
pub fn baseline_energy_function(received: &ComplexSignal, cfg: &BaselineConfig) -> Result<ComplexSignal> {
    let n = received.len();
    if n == 0 || cfg.window == 0 {
        return Ok(received.clone());
    }
    let x = received.samples();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + x[i].norm_sqr();
    }
    let half = cfg.window / 2;
    let local: Vec<f64> = (0..n)
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + cfg.window - half).min(n);
            (prefix[b] - prefix[a]) / (b - a) as f64
        })
        .collect();
    let mean = local.iter().sum::<f64>() / n as f64;
    let thr = cfg.kappa * mean;
    let mut out = received.clone();
    for (z, &e) in out.samples_mut().iter_mut().zip(&local) {
        if e > thr {
            *z = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    Ok(out)
}
