//! End-to-end runs, Monte Carlo sweeps and artifact output.

use crate::error::{Error, Result};
use crate::linedet::{candidate_lines, DetectorConfig, LineSegment, SegmentSet};
use crate::par::{self, Exec};
use crate::scenario::{ScenarioConfig, WaveformParams};
use crate::siggen::{band_limit, reference_pulse, simulate, ComplexSignal, Received};
use crate::suppress::{
    baseline_energy_function, build_mask, cfar_detect, filter_stft, metrics, pulse_compress, write_detections_csv,
    BaselineConfig, CfarConfig, Detection, RangeProfile, SuppressionReport,
};
use crate::tfr::{
    glwd_distribution, rasterize, ridge_line_theoretical, select_glwd_params, stft, GlwdParams, SelectorPrefs,
    TfConfig, TfImage,
};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

/// Suppression method applied before pulse compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Proposed,
    EnergyBaseline,
    /// No suppression.
    Unfiltered,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::EnergyBaseline, Method::Unfiltered];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::EnergyBaseline => "energy_baseline",
            Method::Unfiltered => "none",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::config("method", format!("unknown method `{s}` (proposed | energy_baseline | none)")))
    }
}

/// Processing settings shared by every trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Seconds per normalized time unit; `None` uses `sqrt(Tp / B)`.
    pub time_unit_s: Option<f64>,
    pub selector: SelectorPrefs,
    pub half_lag: usize,
    pub n_freq: usize,
    /// dB span of the rasterized GLWD image.
    pub floor_db: f64,
    /// Detector settings; `None` derives them from the expected ridge extent.
    pub detector: Option<DetectorConfig>,
    pub stft_window: usize,
    pub stft_hop: usize,
    pub mask_width_bins: f64,
    pub cfar: CfarConfig,
    pub baseline: BaselineConfig,
    /// Receiver low-pass to the chirp bandwidth before any processing.
    pub band_limit: bool,
    pub exec: Exec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            time_unit_s: None,
            selector: SelectorPrefs::default(),
            half_lag: 16,
            n_freq: 128,
            floor_db: 40.0,
            detector: None,
            stft_window: 64,
            stft_hop: 16,
            mask_width_bins: 7.0,
            cfar: CfarConfig::default(),
            baseline: BaselineConfig::default(),
            band_limit: true,
            exec: Exec::Parallel,
        }
    }
}

impl PipelineConfig {
    pub fn time_unit(&self, wf: &WaveformParams) -> f64 {
        self.time_unit_s
            .unwrap_or_else(|| (wf.pulse_width_s / wf.bandwidth_hz).sqrt())
    }

    /// Quadratic phase coefficient of the transmitted chirp in normalized time.
    pub fn chirp_rate_n(&self, wf: &WaveformParams) -> f64 {
        let t0 = self.time_unit(wf);
        std::f64::consts::PI * wf.chirp_rate() * t0 * t0
    }
}

/// GLWD stage output for one received signal.
#[derive(Debug, Clone)]
pub struct RidgeImage {
    /// Rasterized `|GLWD|` with the column axis in seconds.
    pub image: TfImage,
    pub params: GlwdParams,
    pub time_unit_s: f64,
    pub time_origin_s: f64,
    /// Expected ridge slope in image units (u per second).
    pub slope: f64,
    /// Expected ridge length in pixels.
    pub extent_px: f64,
}

/// Computes the rasterized GLWD with parameters chosen for the transmitted chirp.
pub fn ridge_image(signal: &ComplexSignal, wf: &WaveformParams, pipe: &PipelineConfig) -> Result<RidgeImage> {
    let t0 = pipe.time_unit(wf);
    let n = pipe.chirp_rate_n(wf);
    let params = select_glwd_params(n, &pipe.selector)?;
    let origin = signal.time(signal.len() / 2);
    let tf = TfConfig {
        time_unit_s: Some(t0),
        time_origin_s: Some(origin),
        half_lag: pipe.half_lag,
        n_freq: pipe.n_freq,
        column_stride: 1,
        exec: pipe.exec,
    };
    let out = glwd_distribution(signal, &params, &tf)?;
    let image = rasterize(&out.dist.magnitude(), pipe.floor_db)?;
    let (slope_n, _) = ridge_line_theoretical(&params, 0.0)?;
    // a pulse of Tp spans Tp / (h T0) normalized units along x
    let h_mean = 0.5 * (params.h1() + params.h2());
    let x_span = wf.pulse_width_s / t0 / h_mean.abs();
    let cols = x_span / out.dist.x_axis.step;
    let rows = (slope_n * x_span / out.dist.u_axis.step).abs();
    Ok(RidgeImage {
        slope: slope_n / t0,
        extent_px: cols.hypot(rows),
        image,
        params,
        time_unit_s: t0,
        time_origin_s: origin,
    })
}

impl RidgeImage {
    pub fn detector(&self, pipe: &PipelineConfig) -> DetectorConfig {
        let mut cfg = pipe
            .detector
            .clone()
            .unwrap_or_else(|| DetectorConfig::for_ridge_extent(self.extent_px));
        if cfg.expected_slope.is_none() {
            cfg.expected_slope = Some(self.slope);
        }
        cfg.exec = pipe.exec;
        cfg
    }

    /// Maps a detected GLWD ridge to the transmitted chirp's line in (seconds, Hz),
    /// clipped to the chirp band `[-B/2, B/2]`.
    pub fn chirp_line(&self, ridge: &LineSegment, wf: &WaveformParams) -> Result<LineSegment> {
        let p = &self.params;
        let (slope_n, _) = ridge_line_theoretical(p, 0.0)?;
        let x = |t: f64| (t - self.time_origin_s) / self.time_unit_s;
        let (xm, um) = ridge.midpoint();
        let intercept = um - slope_n * x(xm);
        let m = intercept * p.kernel_sum() / (p.h1() + p.h2());
        let n = p.chirp_rate_n;
        // f(t) = (m + 2 n x) / (2 pi T0)
        let two_pi_t0 = 2.0 * std::f64::consts::PI * self.time_unit_s;
        let t_at = |f: f64| self.time_origin_s + (f * two_pi_t0 - m) / (2.0 * n) * self.time_unit_s;
        let half_b = wf.bandwidth_hz / 2.0;
        LineSegment::new(t_at(-half_b), -half_b, t_at(half_b), half_b, ridge.score)
    }
}

/// Everything produced by one end-to-end run.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub method: Method,
    pub received: Received,
    /// Received signal after the receiver filter.
    pub input: ComplexSignal,
    pub ridge_image: Option<RidgeImage>,
    pub segments: Option<SegmentSet>,
    /// Best segment in GLWD image units.
    pub ridge: Option<LineSegment>,
    /// Passband centre line in seconds and Hz.
    pub mask_line: Option<LineSegment>,
    pub output: ComplexSignal,
    pub before: RangeProfile,
    pub after: RangeProfile,
    pub detections: Vec<Detection>,
    pub report: SuppressionReport,
    /// The proposed method found no target ridge.
    pub ridge_missing: bool,
    /// Target detected within ±3 m and no detection within ±3 m of any false target.
    pub success: bool,
}

/// Detection tolerance around truth ranges, metres.
pub const RANGE_TOLERANCE_M: f64 = 3.0;

pub fn detection_success(detections: &[Detection], target_m: f64, false_m: &[f64]) -> bool {
    let near = |r: f64| detections.iter().any(|d| (d.range_m - r).abs() <= RANGE_TOLERANCE_M);
    near(target_m) && !false_m.iter().any(|&r| near(r))
}

/// generate, GLWD, detect, mask, filter, PC, CFAR, metrics.
pub fn run_scenario(cfg: &ScenarioConfig, method: Method, pipe: &PipelineConfig) -> Result<ScenarioRun> {
    cfg.validate()?;
    let received = simulate(cfg)?;
    let wf = &cfg.waveform;
    let input = if pipe.band_limit {
        band_limit(&received.total, wf.bandwidth_hz)?
    } else {
        received.total.clone()
    };
    let reference = reference_pulse(wf)?;
    let before = pulse_compress(&input, &reference)?;

    let mut ridge_image_out = None;
    let mut segments = None;
    let mut ridge = None;
    let mut mask_line = None;
    let mut ridge_missing = false;
    let output = match method {
        Method::Unfiltered => input.clone(),
        Method::EnergyBaseline => baseline_energy_function(&input, &pipe.baseline)?,
        Method::Proposed => {
            let ri = ridge_image(&input, wf, pipe)?;
            let det = ri.detector(pipe);
            let set = candidate_lines(&ri.image, &det)?;
            let best = set.segments.iter().find(|s| pixel_length(&ri.image, s) > det.gamma1).copied();
            segments = Some(set);
            let out = match best {
                Some(seg) => {
                    let line = ri.chirp_line(&seg, wf)?;
                    let frames = stft(&input, pipe.stft_window, pipe.stft_hop)?;
                    let mask = build_mask(&line, &frames, pipe.mask_width_bins)?;
                    ridge = Some(seg);
                    mask_line = Some(line);
                    filter_stft(&input, &mask)?
                }
                None => {
                    ridge_missing = true;
                    input.clone()
                }
            };
            ridge_image_out = Some(ri);
            out
        }
    };
    let after = pulse_compress(&output, &reference)?;
    let detections = cfar_detect(&after, &pipe.cfar)?;
    let false_ranges = cfg.false_target_ranges();
    let report = metrics(&before, &after, cfg.target.range_m, &false_ranges)?;
    let success = !ridge_missing && detection_success(&detections, cfg.target.range_m, &false_ranges);
    Ok(ScenarioRun {
        method,
        received,
        input,
        ridge_image: ridge_image_out,
        segments,
        ridge,
        mask_line,
        output,
        before,
        after,
        detections,
        report,
        ridge_missing,
        success,
    })
}

/// Segment length in pixels of `image`.
fn pixel_length(image: &TfImage, s: &LineSegment) -> f64 {
    let dc = (s.t2 - s.t1) / image.t_axis.step;
    let dr = (s.u2 - s.u1) / image.u_axis.step;
    dc.hypot(dr)
}

/// Per-trial seed `base * 1e6 + point * 1e3 + trial`.
pub fn trial_seed(base: u64, point: usize, trial: usize) -> u64 {
    base.wrapping_mul(1_000_000)
        .wrapping_add(point as u64 * 1_000)
        .wrapping_add(trial as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    SjrDb,
    SnrDb,
}

impl SweepVariable {
    pub fn tag(self) -> &'static str {
        match self {
            SweepVariable::SjrDb => "sjr_db",
            SweepVariable::SnrDb => "snr_db",
        }
    }
}

impl FromStr for SweepVariable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sjr_db" | "sjr" => Ok(SweepVariable::SjrDb),
            "snr_db" | "snr" => Ok(SweepVariable::SnrDb),
            _ => Err(Error::config("variable", format!("unknown sweep variable `{s}` (sjr_db | snr_db)"))),
        }
    }
}

/// Monte Carlo sweep over SJR or SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::config("step", "must be > 0"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be >= 1"));
        }
        if !(self.stop >= self.start) {
            return Err(Error::config("stop", "must be >= start"));
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn apply(&self, base: &ScenarioConfig, x: f64, seed: u64) -> ScenarioConfig {
        let cfg = match self.variable {
            SweepVariable::SjrDb => base.clone().with_sjr(x),
            SweepVariable::SnrDb => base.clone().with_snr(x),
        };
        cfg.with_seed(seed)
    }
}

/// Aggregate of one sweep point for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub method: Method,
    pub sjrif_mean_db: Option<f64>,
    pub sjrif_std_db: Option<f64>,
    pub slr_mean_db: f64,
    pub slr_std_db: f64,
    pub detection_probability: f64,
    pub trials: usize,
}

/// Per-trial figures kept for aggregation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub sjrif_db: Option<f64>,
    pub slr_db: f64,
    pub success: bool,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn aggregate(x: f64, method: Method, trials: &[TrialResult]) -> CurvePoint {
    let sj: Vec<f64> = trials.iter().filter_map(|t| t.sjrif_db).collect();
    let slr: Vec<f64> = trials.iter().map(|t| t.slr_db).collect();
    let (sm, ss) = if sj.is_empty() { (None, None) } else {
        let (m, s) = mean_std(&sj);
        (Some(m), Some(s))
    };
    let (lm, ls) = mean_std(&slr);
    CurvePoint {
        x,
        method,
        sjrif_mean_db: sm,
        sjrif_std_db: ss,
        slr_mean_db: lm,
        slr_std_db: ls,
        detection_probability: trials.iter().filter(|t| t.success).count() as f64 / trials.len() as f64,
        trials: trials.len(),
    }
}

/// Runs `trials` seeded trials of `method`, trials in parallel under `pipe.exec`.
pub fn run_trials(
    base: &ScenarioConfig,
    method: Method,
    pipe: &PipelineConfig,
    seeds: &[u64],
) -> Result<Vec<TrialResult>> {
    let inner = PipelineConfig {
        exec: Exec::Sequential,
        ..pipe.clone()
    };
    let results = par::map_indices(seeds.len(), pipe.exec, |i| {
        let cfg = base.clone().with_seed(seeds[i]);
        run_scenario(&cfg, method, &inner).map(|r| TrialResult {
            sjrif_db: r.report.sjrif_db,
            slr_db: r.report.slr_db,
            success: r.success,
        })
    });
    results.into_iter().collect()
}

pub const SWEEP_CSV_HEADER: &str =
    "x,variable,method,trials,sjrif_mean_db,sjrif_std_db,slr_mean_db,slr_std_db,detection_probability";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |x| format!("{x:.6}"))
}

impl CurvePoint {
    pub fn csv_row(&self, variable: SweepVariable) -> String {
        format!(
            "{:.6},{},{},{},{},{},{:.6},{:.6},{:.6}",
            self.x,
            variable.tag(),
            self.method,
            self.trials,
            opt(self.sjrif_mean_db),
            opt(self.sjrif_std_db),
            self.slr_mean_db,
            self.slr_std_db,
            self.detection_probability
        )
    }
}

/// Runs the sweep, writing one CSV row per (point, method) as soon as it is complete.
pub fn run_sweep<W: Write>(
    base: &ScenarioConfig,
    spec: &SweepSpec,
    pipe: &PipelineConfig,
    mut csv: W,
) -> Result<Vec<CurvePoint>> {
    spec.validate()?;
    writeln!(csv, "{SWEEP_CSV_HEADER}")?;
    let mut out = Vec::new();
    for (pi, &x) in spec.points().iter().enumerate() {
        let cfg = spec.apply(base, x, base.noise.seed);
        let seeds: Vec<u64> = (0..spec.trials).map(|t| trial_seed(spec.base_seed, pi, t)).collect();
        for &method in &spec.methods {
            let trials = run_trials(&cfg, method, pipe, &seeds)?;
            let point = aggregate(x, method, &trials);
            writeln!(csv, "{}", point.csv_row(spec.variable))?;
            csv.flush()?;
            out.push(point);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// artifacts

/// Output encoding for signals and images.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// Raw little-endian signals and PGM images.
    #[default]
    Binary,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bin" | "binary" | "pgm" => Ok(Format::Binary),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::config("format", format!("unknown format `{s}` (bin | csv)"))),
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

pub fn write_signal(dir: &Path, stem: &str, s: &ComplexSignal, format: Format) -> Result<()> {
    match format {
        Format::Binary => s.write_binary(create(dir, &format!("{stem}.bin"))?)?,
        Format::Csv => s.write_csv(create(dir, &format!("{stem}.csv"))?)?,
    }
    Ok(())
}

pub fn write_image(dir: &Path, stem: &str, image: &TfImage, format: Format) -> Result<()> {
    match format {
        Format::Binary => {
            image.write_pgm(create(dir, &format!("{stem}.pgm"))?)?;
            image.write_sidecar(create(dir, &format!("{stem}.txt"))?)?;
        }
        Format::Csv => image.write_csv(create(dir, &format!("{stem}.csv"))?)?,
    }
    Ok(())
}

/// Writes the scenario and every component of the received signal.
pub fn write_simulation(dir: &Path, cfg: &ScenarioConfig, rx: &Received, format: Format) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("scenario.conf"), cfg.to_config_string())?;
    write_signal(dir, "echo", &rx.echo, format)?;
    for (i, j) in rx.jamming.iter().enumerate() {
        write_signal(dir, &format!("jamming_{}", i + 1), j, format)?;
    }
    write_signal(dir, "noise", &rx.noise, format)?;
    write_signal(dir, "received", &rx.total, format)
}

fn write_line(dir: &Path, name: &str, line: &LineSegment) -> Result<()> {
    SegmentSet { segments: vec![*line] }.write_csv(create(dir, name)?)?;
    Ok(())
}

/// Writes every artifact of a finished run into `dir`.
pub fn write_run(dir: &Path, cfg: &ScenarioConfig, run: &ScenarioRun, format: Format) -> Result<()> {
    write_simulation(dir, cfg, &run.received, format)?;
    write_signal(dir, "output", &run.output, format)?;
    if let Some(ri) = &run.ridge_image {
        write_image(dir, "glwd", &ri.image, format)?;
    }
    if let Some(set) = &run.segments {
        set.write_csv(create(dir, "segments.csv")?)?;
    }
    if let Some(line) = &run.mask_line {
        write_line(dir, "mask_line.csv", line)?;
    }
    run.before.write_csv(create(dir, "profile_before.csv")?)?;
    run.after.write_csv(create(dir, "profile_after.csv")?)?;
    write_detections_csv(&run.detections, create(dir, "detections.csv")?)?;
    let mut text = format!("method: {}\n", run.method);
    text.push_str(&run.report.to_text());
    text.push_str(&format!(
        "ridge_detected: {}\ndetection_success: {}\n",
        !run.ridge_missing && run.method == Method::Proposed,
        run.success
    ));
    fs::write(dir.join("report.txt"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct() {
        assert_eq!(trial_seed(7, 2, 3), 7_002_003);
        assert_ne!(trial_seed(1, 0, 999), trial_seed(1, 1, 0));
    }

    #[test]
    fn sweep_points_inclusive() {
        let s = SweepSpec {
            variable: SweepVariable::SjrDb,
            start: -10.0,
            stop: 10.0,
            step: 2.0,
            trials: 1,
            methods: vec![Method::Proposed],
            base_seed: 1,
        };
        assert_eq!(s.points().len(), 11);
        let bad = SweepSpec { step: 0.0, ..s };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn methods_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("x".parse::<Method>().is_err());
    }

    #[test]
    fn success_predicate() {
        let d = |r| Detection { range_m: r, magnitude: 1.0 };
        assert!(detection_success(&[d(900.5)], 900.0, &[927.0]));
        assert!(!detection_success(&[d(900.5), d(926.0)], 900.0, &[927.0]));
        assert!(!detection_success(&[d(910.0)], 900.0, &[927.0]));
    }

    #[test]
    fn clean_chirp_line_maps_back() {
        let cfg = ScenarioConfig::table1();
        let pipe = PipelineConfig::default();
        let echo = crate::siggen::gen_echo(&cfg.waveform, &cfg.target, &cfg.window).unwrap();
        let ri = ridge_image(&echo, &cfg.waveform, &pipe).unwrap();
        let det = ri.detector(&pipe);
        let seg = crate::linedet::detect_target_ridge(&ri.image, &det).unwrap();
        let line = ri.chirp_line(&seg, &cfg.waveform).unwrap();
        let tau = cfg.target.delay_s();
        let dt = 1.0 / cfg.waveform.sample_rate_hz;
        assert!((line.t1 - tau).abs() < 3.0 * dt, "t1 {} vs {}", line.t1, tau);
        assert!((line.t2 - tau - cfg.waveform.pulse_width_s).abs() < 3.0 * dt);
    }
}
