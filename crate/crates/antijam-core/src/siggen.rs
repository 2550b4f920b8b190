//! Waveform, echo, ISRJ and noise generation on a uniform complex-baseband grid.
//!
//! Time conventions: a delayed pulse starts (onset) at its delay, and the chirp
//! phase is `pi k (t - onset - Tp/2)^2`, i.e. zero at mid pulse. The carrier is
//! not sampled; a delay `tau` contributes the scalar phase `exp(-j 2 pi fc tau)`.

use crate::error::{Error, Result};
use crate::fft;
use crate::scenario::{JammerParams, NoiseModel, ScenarioConfig, TargetParams, TimeWindow, WaveformParams};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;
use std::io::{Read, Write};

/// Uniformly sampled complex baseband sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate_hz: f64,
    start_time_s: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64, start_time_s: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.is_empty() {
            return Err(Error::invalid("signal must have at least one sample"));
        }
        if !start_time_s.is_finite() || samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("signal contains non-finite values"));
        }
        Ok(ComplexSignal {
            samples,
            sample_rate_hz,
            start_time_s,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64, start_time_s: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate_hz, start_time_s)
    }

    /// Zero signal covering `window` at `sample_rate_hz`.
    pub fn on_window(window: &TimeWindow, sample_rate_hz: f64) -> Result<Self> {
        let n = (window.duration() * sample_rate_hz).round() as usize;
        Self::zeros(n, sample_rate_hz, window.start_s)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn time(&self, i: usize) -> f64 {
        self.start_time_s + i as f64 / self.sample_rate_hz
    }

    pub fn end_time_s(&self) -> f64 {
        self.time(self.len())
    }

    /// Sum of |x|^2 (sample energy, no dt factor).
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.energy().sqrt()
    }

    /// Same sample grid (rate, start and length).
    pub fn same_grid(&self, other: &ComplexSignal) -> bool {
        self.len() == other.len()
            && (self.sample_rate_hz - other.sample_rate_hz).abs() <= 1e-12 * self.sample_rate_hz
            && (self.start_time_s - other.start_time_s).abs() <= 1e-6 / self.sample_rate_hz
    }

    pub fn scaled(&self, k: f64) -> ComplexSignal {
        ComplexSignal {
            samples: self.samples.iter().map(|z| z * k).collect(),
            ..self.clone()
        }
    }

    /// Writes the binary dump: u64 LE sample count, then (re, im) f64 LE pairs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.len());
        for z in &self.samples {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&buf)
    }

    /// Reads the binary dump. The grid is not stored in the file and must be supplied.
    pub fn read_binary<R: Read>(mut r: R, sample_rate_hz: f64, start_time_s: f64) -> Result<Self> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        let n = u64::from_le_bytes(head) as usize;
        let mut body = vec![0u8; 16 * n];
        r.read_exact(&mut body)?;
        let samples = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Self::new(samples, sample_rate_hz, start_time_s)
    }

    /// CSV export with header `t_s,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t_s,re,im")?;
        for (i, z) in self.samples.iter().enumerate() {
            writeln!(w, "{:e},{:e},{:e}", self.time(i), z.re, z.im)?;
        }
        Ok(())
    }
}

/// Analytic chirp `exp(j(m t + n t^2))`, used for ridge theory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticLfm {
    /// Linear phase coefficient, rad per time unit.
    pub m: f64,
    /// Quadratic phase coefficient, rad per time unit squared.
    pub n: f64,
}

impl AnalyticLfm {
    pub fn at(&self, t: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.m * t + self.n * t * t)
    }
}

// Sample positions of a pulse that starts at `onset` and lasts `width`, in
// fractional samples; tolerant to rounding so on-grid edges are inclusive at
// the start and exclusive at the end.
fn inside(t_rel: f64, width: f64, fs: f64) -> bool {
    let eps = 1e-6;
    let x = t_rel * fs;
    x > -eps && x < width * fs - eps
}

fn lfm_sample(wf: &WaveformParams, t_rel: f64) -> Complex64 {
    if !inside(t_rel, wf.pulse_width_s, wf.sample_rate_hz) {
        return Complex64::new(0.0, 0.0);
    }
    let tc = t_rel - wf.pulse_width_s / 2.0;
    Complex64::from_polar(1.0, PI * wf.chirp_rate() * tc * tc)
}

/// Transmitted LFM pulse on a window of `duration_window_s` centred on t = 0.
///
/// The pulse occupies `[-Tp/2, Tp/2)` with phase `pi k t^2`.
pub fn gen_lfm(wf: &WaveformParams, duration_window_s: f64) -> Result<ComplexSignal> {
    if duration_window_s + 1e-6 / wf.sample_rate_hz < wf.pulse_width_s {
        return Err(Error::invalid(format!(
            "window {duration_window_s} s shorter than pulse {} s",
            wf.pulse_width_s
        )));
    }
    let n = (duration_window_s * wf.sample_rate_hz).round() as usize;
    let start = -(n as f64) / 2.0 / wf.sample_rate_hz;
    let mut sig = ComplexSignal::zeros(n, wf.sample_rate_hz, start)?;
    let onset = -wf.pulse_width_s / 2.0;
    for i in 0..n {
        let t = sig.time(i);
        sig.samples[i] = lfm_sample(wf, t - onset);
    }
    Ok(sig)
}

/// Reference pulse for matched filtering: exactly the nonzero samples of [`gen_lfm`].
pub fn reference_pulse(wf: &WaveformParams) -> Result<ComplexSignal> {
    gen_lfm(wf, wf.pulse_width_s)
}

fn check_in_window(what: &str, start: f64, end: f64, sig: &ComplexSignal) -> Result<()> {
    let tol = 1e-6 / sig.sample_rate_hz();
    if start < sig.start_time_s() - tol || end > sig.end_time_s() + tol {
        return Err(Error::invalid(format!(
            "{what} [{start:e}, {end:e}] s falls outside window [{:e}, {:e}] s",
            sig.start_time_s(),
            sig.end_time_s()
        )));
    }
    Ok(())
}

/// Target echo: `A_t * s(t - tau_r) * exp(-j 2 pi fc tau_r)`.
pub fn gen_echo(wf: &WaveformParams, target: &TargetParams, window: &TimeWindow) -> Result<ComplexSignal> {
    let mut sig = ComplexSignal::on_window(window, wf.sample_rate_hz)?;
    let tau = target.delay_s();
    check_in_window("echo", tau, tau + wf.pulse_width_s, &sig)?;
    if target.amplitude == 0.0 {
        return Ok(sig);
    }
    let carrier = Complex64::from_polar(target.amplitude, -2.0 * PI * (wf.carrier_hz * tau).fract());
    for i in 0..sig.len() {
        let t = sig.time(i);
        sig.samples[i] = carrier * lfm_sample(wf, t - tau);
    }
    Ok(sig)
}

/// 0/1 gate: `n_slices` rectangles of width `slice_width_s` every `period_s`, first edge at `t0`.
pub fn gen_pulse_train(
    slice_width_s: f64,
    period_s: f64,
    n_slices: usize,
    t0: f64,
    grid: &ComplexSignal,
) -> Result<ComplexSignal> {
    if !(slice_width_s > 0.0) || slice_width_s > period_s || n_slices == 0 {
        return Err(Error::invalid("pulse train needs 0 < slice width <= period and n >= 1"));
    }
    let fs = grid.sample_rate_hz();
    let mut out = ComplexSignal::zeros(grid.len(), fs, grid.start_time_s())?;
    for i in 0..out.len() {
        let t = out.time(i) - t0;
        let idx = (t / period_s + 1e-9).floor();
        if idx < 0.0 || idx >= n_slices as f64 {
            continue;
        }
        if inside(t - idx * period_s, slice_width_s, fs) {
            out.samples[i] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(out)
}

/// ISRJ signal: `A_j * s(t - tau_j) * p(t) * exp(j 2 pi f1 t) * exp(-j 2 pi fc tau_j)`.
///
/// Slices cut by the end of the intercepted pulse are kept truncated.
pub fn gen_isrj(wf: &WaveformParams, jam: &JammerParams, window: &TimeWindow) -> Result<ComplexSignal> {
    let grid = ComplexSignal::on_window(window, wf.sample_rate_hz)?;
    let last_edge = jam.delay_s
        + ((jam.n_slices - 1) as f64 * jam.sample_period_s + jam.slice_width_s).min(wf.pulse_width_s);
    check_in_window("jammer slices", jam.delay_s, last_edge, &grid)?;
    let gate = gen_pulse_train(jam.slice_width_s, jam.sample_period_s, jam.n_slices, jam.delay_s, &grid)?;
    let mut sig = grid;
    if jam.amplitude == 0.0 {
        return Ok(sig);
    }
    let carrier = Complex64::from_polar(jam.amplitude, -2.0 * PI * (wf.carrier_hz * jam.delay_s).fract());
    for i in 0..sig.len() {
        if gate.samples[i].re == 0.0 {
            continue;
        }
        let t = sig.time(i);
        let shift = Complex64::from_polar(1.0, 2.0 * PI * jam.freq_shift_hz * t);
        sig.samples[i] = carrier * shift * lfm_sample(wf, t - jam.delay_s);
    }
    Ok(sig)
}

/// Complex white Gaussian noise of standard deviation `sigma` (total, both quadratures).
pub fn noise(len: usize, sigma: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = sigma / std::f64::consts::SQRT_2;
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

/// Adds circular complex Gaussian noise with per-sample variance `sigma^2`.
pub fn add_awgn_sigma(signal: &ComplexSignal, sigma: f64, seed: u64) -> ComplexSignal {
    let mut out = signal.clone();
    if sigma == 0.0 {
        return out;
    }
    for (z, n) in out.samples.iter_mut().zip(noise(signal.len(), sigma, seed)) {
        *z += n;
    }
    out
}

pub fn add_awgn(signal: &ComplexSignal, model: &NoiseModel) -> ComplexSignal {
    add_awgn_sigma(signal, model.sigma(), model.seed)
}

/// Pointwise sum of echo, jamming components and optional noise.
pub fn compose_received(
    echo: &ComplexSignal,
    jamming: &[ComplexSignal],
    noise: Option<&ComplexSignal>,
) -> Result<ComplexSignal> {
    let mut out = echo.clone();
    for part in jamming.iter().chain(noise) {
        if !out.same_grid(part) {
            return Err(Error::ShapeMismatch(
                "components must share sample rate, start time and length".into(),
            ));
        }
        for (z, p) in out.samples.iter_mut().zip(&part.samples) {
            *z += p;
        }
    }
    Ok(out)
}

/// Ideal low-pass keeping `|f| <= bandwidth_hz / 2` (receiver filter), applied via zero-padded FFT.
pub fn band_limit(signal: &ComplexSignal, bandwidth_hz: f64) -> Result<ComplexSignal> {
    if !(bandwidth_hz > 0.0) {
        return Err(Error::invalid("bandwidth must be positive"));
    }
    let n = signal.len();
    if n == 0 || bandwidth_hz >= signal.sample_rate_hz() {
        return Ok(signal.clone());
    }
    let m = 2 * n;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..n].copy_from_slice(signal.samples());
    fft::fft(&mut buf);
    let df = signal.sample_rate_hz() / m as f64;
    for (k, z) in buf.iter_mut().enumerate() {
        if (fft::signed_bin(k, m) as f64 * df).abs() > bandwidth_hz / 2.0 {
            *z = Complex64::new(0.0, 0.0);
        }
    }
    fft::ifft(&mut buf);
    buf.truncate(n);
    ComplexSignal::new(buf, signal.sample_rate_hz(), signal.start_time_s())
}

/// All components of one simulated received pulse.
#[derive(Debug, Clone)]
pub struct Received {
    pub echo: ComplexSignal,
    pub jamming: Vec<ComplexSignal>,
    pub noise: ComplexSignal,
    pub total: ComplexSignal,
}

/// Generates echo, jamming, noise and their sum for `cfg`.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Received> {
    let echo = gen_echo(&cfg.waveform, &cfg.target, &cfg.window)?;
    let jamming = cfg
        .jammers
        .iter()
        .map(|j| gen_isrj(&cfg.waveform, j, &cfg.window))
        .collect::<Result<Vec<_>>>()?;
    let zero = ComplexSignal::zeros(echo.len(), echo.sample_rate_hz(), echo.start_time_s())?;
    let noise = add_awgn(&zero, &cfg.noise);
    let total = compose_received(&echo, &jamming, Some(&noise))?;
    Ok(Received {
        echo,
        jamming,
        noise,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioConfig;

    fn wf() -> WaveformParams {
        ScenarioConfig::table1().waveform
    }

    #[test]
    fn band_limit_removes_out_of_band_tone() {
        let fs = 200e6;
        let mk = |f: f64| {
            let s = (0..400)
                .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / fs))
                .collect();
            ComplexSignal::new(s, fs, 0.0).unwrap()
        };
        let out = band_limit(&mk(80e6), 100e6).unwrap();
        assert!(out.energy() < 0.05 * 400.0);
        let keep = band_limit(&mk(10e6), 100e6).unwrap();
        assert!((keep.energy() / 400.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn lfm_support_and_phase() {
        let w = wf();
        let s = gen_lfm(&w, 2e-6).unwrap();
        let nz: Vec<usize> = (0..s.len()).filter(|&i| s.samples()[i].norm() > 0.0).collect();
        assert_eq!(nz.len(), 200);
        for &i in &nz {
            let t = s.time(i);
            let expect = Complex64::from_polar(1.0, PI * w.chirp_rate() * t * t);
            assert!((s.samples()[i] - expect).norm() < 1e-9);
            assert!((s.samples()[i].norm() - 1.0).abs() < 1e-12);
        }
        let mid = s.samples()[s.len() / 2];
        assert!((mid - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        // instantaneous frequency sweeps -B/2 -> +B/2
        let f = |i: usize| (s.samples()[i + 1] * s.samples()[i].conj()).arg() * w.sample_rate_hz / (2.0 * PI);
        assert!((f(nz[0]) + 50e6).abs() < 0.5e6);
        assert!((f(nz[nz.len() - 2]) - 50e6).abs() < 1e6);
    }

    #[test]
    fn lfm_window_too_short() {
        assert!(gen_lfm(&wf(), 0.5e-6).is_err());
    }

    #[test]
    fn zero_chirp_rate_is_rect() {
        let mut w = wf();
        w.bandwidth_hz = 0.0;
        let s = gen_lfm(&w, 1e-6).unwrap();
        assert!(s.samples().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn echo_onset_and_energy() {
        let cfg = ScenarioConfig::table1();
        let e = gen_echo(&cfg.waveform, &cfg.target, &cfg.window).unwrap();
        let first = (0..e.len()).find(|&i| e.samples()[i].norm() > 0.0).unwrap();
        assert!((e.time(first) - cfg.target.delay_s()).abs() < 5e-9);
        assert!((e.energy() - 200.0).abs() < 1e-9);
        let mut t = cfg.target;
        t.amplitude = 2.0;
        let e2 = gen_echo(&cfg.waveform, &t, &cfg.window).unwrap();
        assert!((e2.energy() - 4.0 * e.energy()).abs() < 1e-9);
        t.amplitude = 0.0;
        assert_eq!(gen_echo(&cfg.waveform, &t, &cfg.window).unwrap().energy(), 0.0);
        t.range_m = 5000.0;
        assert!(gen_echo(&cfg.waveform, &t, &cfg.window).is_err());
    }

    #[test]
    fn pulse_train_slices() {
        let grid = ComplexSignal::zeros(200, 200e6, 0.0).unwrap();
        let p = gen_pulse_train(0.125e-6, 0.1875e-6, 6, 0.0, &grid).unwrap();
        let ones = p.samples().iter().filter(|z| z.re == 1.0).count();
        // 5 full slices of 25 samples, the 6th cut by the grid end after 12
        assert_eq!(ones, 5 * 25 + 12);
        let mut runs = 0;
        let mut prev = 0.0;
        for z in p.samples() {
            if z.re == 1.0 && prev == 0.0 {
                runs += 1;
            }
            prev = z.re;
        }
        assert_eq!(runs, 6);
        let full = gen_pulse_train(0.1e-6, 0.1e-6, 5, 0.0, &grid).unwrap();
        assert_eq!(full.samples().iter().filter(|z| z.re == 1.0).count(), 100);
        let one = gen_pulse_train(0.1e-6, 0.2e-6, 1, 0.25e-6, &grid).unwrap();
        assert_eq!(one.samples().iter().filter(|z| z.re == 1.0).count(), 20);
    }

    #[test]
    fn degenerate_jammer_is_repeater() {
        let cfg = ScenarioConfig::table1();
        let mut j = cfg.jammers[0];
        j.freq_shift_hz = 0.0;
        j.slice_width_s = j.sample_period_s;
        j.amplitude = 0.5;
        let jam = gen_isrj(&cfg.waveform, &j, &cfg.window).unwrap();
        let echo = gen_echo(&cfg.waveform, &cfg.target, &cfg.window).unwrap();
        for (a, b) in jam.samples().iter().zip(echo.samples()) {
            assert!((a - b * 0.5).norm() < 1e-12);
        }
        j.amplitude = 0.0;
        assert_eq!(gen_isrj(&cfg.waveform, &j, &cfg.window).unwrap().energy(), 0.0);
    }

    #[test]
    fn awgn_statistics_and_determinism() {
        let z = ComplexSignal::zeros(1_000_000, 1.0, 0.0).unwrap();
        let a = add_awgn_sigma(&z, 1.0, 42);
        let b = add_awgn_sigma(&z, 1.0, 42);
        assert_eq!(a, b);
        let var = a.energy() / a.len() as f64;
        assert!((var - 1.0).abs() < 0.01, "{var}");
        let same = add_awgn_sigma(&a, 0.0, 7);
        assert_eq!(same, a);
    }

    #[test]
    fn compose_checks_grid() {
        let a = ComplexSignal::zeros(10, 1.0, 0.0).unwrap();
        let b = ComplexSignal::zeros(11, 1.0, 0.0).unwrap();
        assert!(compose_received(&a, &[b], None).is_err());
        let c = ComplexSignal::zeros(10, 2.0, 0.0).unwrap();
        assert!(compose_received(&a, &[], Some(&c)).is_err());
    }

    #[test]
    fn binary_dump_round_trip() {
        let cfg = ScenarioConfig::table1();
        let r = simulate(&cfg).unwrap();
        let mut buf = Vec::new();
        r.total.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 16 * r.total.len());
        let back = ComplexSignal::read_binary(&buf[..], 200e6, 0.0).unwrap();
        assert_eq!(back, r.total);
    }
}
