//! Scenario parameters, unit conversions and the `key = value` config format.
//!
//! Recognised keys (SI units):
//!
//! ```text
//! pulse_width_s  bandwidth_hz  carrier_hz  prf_hz  sample_rate_hz
//! target_range_m  target_amplitude  snr_db  seed
//! jammer.N.delay_s  jammer.N.slice_width_s  jammer.N.sample_period_s
//! jammer.N.n_slices  jammer.N.freq_shift_hz  jammer.N.sjr_db
//! window_start_s  window_end_s          (optional, default 0 and 10 us)
//! ```
//!
//! Lines starting with `#` are comments. Jammer indices start at 1.

use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;
use std::collections::BTreeMap;
use std::path::Path;

/// Two-way propagation delay for a target at `range_m`.
pub fn range_to_delay(range_m: f64) -> Result<f64> {
    if !(range_m >= 0.0) || !range_m.is_finite() {
        return Err(Error::invalid(format!("range must be >= 0, got {range_m}")));
    }
    Ok(2.0 * range_m / SPEED_OF_LIGHT)
}

/// Inverse of [`range_to_delay`].
pub fn delay_to_range(delay_s: f64) -> Result<f64> {
    if !(delay_s >= 0.0) || !delay_s.is_finite() {
        return Err(Error::invalid(format!("delay must be >= 0, got {delay_s}")));
    }
    Ok(delay_s * SPEED_OF_LIGHT / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitudes {
    pub target: f64,
    pub jammer: f64,
    pub noise_sigma: f64,
}

/// Target/jammer amplitudes and noise sigma for the given ratios.
///
/// SNR is in-pulse: noise variance is measured against the target pulse power
/// `target_amplitude^2`.
pub fn amplitudes_from_ratios(sjr_db: f64, snr_db: f64, target_amplitude: f64) -> Amplitudes {
    Amplitudes {
        target: target_amplitude,
        jammer: target_amplitude * 10f64.powf(-sjr_db / 20.0),
        noise_sigma: target_amplitude * 10f64.powf(-snr_db / 20.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveformParams {
    pub pulse_width_s: f64,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub prf_hz: f64,
    pub sample_rate_hz: f64,
}

impl WaveformParams {
    /// k = B / Tp in Hz/s.
    pub fn chirp_rate(&self) -> f64 {
        self.bandwidth_hz / self.pulse_width_s
    }

    /// Quadratic phase coefficient n = pi k (rad/s^2).
    pub fn phase_rate(&self) -> f64 {
        std::f64::consts::PI * self.chirp_rate()
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive and finite, got {v}")))
            }
        };
        pos("pulse_width_s", self.pulse_width_s)?;
        pos("bandwidth_hz", self.bandwidth_hz)?;
        pos("prf_hz", self.prf_hz)?;
        pos("sample_rate_hz", self.sample_rate_hz)?;
        if !(self.carrier_hz >= 0.0) || !self.carrier_hz.is_finite() {
            return Err(Error::config("carrier_hz", "must be >= 0"));
        }
        if self.sample_rate_hz < 2.0 * self.bandwidth_hz {
            return Err(Error::config(
                "sample_rate_hz",
                format!(
                    "must be at least twice bandwidth_hz ({} < {})",
                    self.sample_rate_hz,
                    2.0 * self.bandwidth_hz
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetParams {
    pub range_m: f64,
    pub amplitude: f64,
}

impl TargetParams {
    pub fn delay_s(&self) -> f64 {
        2.0 * self.range_m / SPEED_OF_LIGHT
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JammerParams {
    pub delay_s: f64,
    pub slice_width_s: f64,
    pub sample_period_s: f64,
    pub n_slices: usize,
    pub amplitude: f64,
    pub freq_shift_hz: f64,
}

impl JammerParams {
    pub fn duty(&self) -> f64 {
        self.slice_width_s / self.sample_period_s
    }

    /// Apparent range of the main false target after pulse compression.
    ///
    /// A frequency shift f1 on a chirp of rate k moves the compressed peak by
    /// -f1/k in delay.
    pub fn false_target_range(&self, chirp_rate: f64) -> f64 {
        (self.delay_s - self.freq_shift_hz / chirp_rate) * SPEED_OF_LIGHT / 2.0
    }

    /// Frequency shift that places the main false target `offset_m` behind the repeat delay.
    pub fn shift_for_offset(offset_m: f64, chirp_rate: f64) -> f64 {
        -chirp_rate * 2.0 * offset_m / SPEED_OF_LIGHT
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let key = |f: &str| format!("jammer.{idx}.{f}");
        if !(self.slice_width_s > 0.0) || !self.slice_width_s.is_finite() {
            return Err(Error::config(key("slice_width_s"), "must be positive"));
        }
        if !(self.sample_period_s > 0.0) || !self.sample_period_s.is_finite() {
            return Err(Error::config(key("sample_period_s"), "must be positive"));
        }
        if self.slice_width_s > self.sample_period_s {
            return Err(Error::config(
                key("slice_width_s"),
                format!(
                    "slice_width_s ({}) exceeds sample_period_s ({})",
                    self.slice_width_s, self.sample_period_s
                ),
            ));
        }
        if self.n_slices == 0 {
            return Err(Error::config(key("n_slices"), "must be >= 1"));
        }
        if !(self.delay_s >= 0.0) || !self.delay_s.is_finite() {
            return Err(Error::config(key("delay_s"), "must be >= 0"));
        }
        if !self.freq_shift_hz.is_finite() {
            return Err(Error::config(key("freq_shift_hz"), "must be finite"));
        }
        Ok(())
    }
}

/// Complex white noise model. The variance is tied to the target pulse power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub snr_db: f64,
    pub seed: u64,
    /// Target pulse power the SNR is measured against.
    pub signal_power: f64,
    pub sample_rate_hz: f64,
}

impl NoiseModel {
    pub fn variance(&self) -> f64 {
        self.signal_power * 10f64.powf(-self.snr_db / 10.0)
    }

    pub fn sigma(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Two-sided power spectral density D (power per Hz).
    pub fn psd(&self) -> f64 {
        self.variance() / self.sample_rate_hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeWindow {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

impl Default for TimeWindow {
    fn default() -> Self {
        TimeWindow {
            start_s: 0.0,
            end_s: 10e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub waveform: WaveformParams,
    pub target: TargetParams,
    pub jammers: Vec<JammerParams>,
    pub sjr_db: Vec<f64>,
    pub noise: NoiseModel,
    pub window: TimeWindow,
}

impl ScenarioConfig {
    /// Single ISRJ scenario: target at 900 m, main false target at 927 m.
    pub fn table1() -> Self {
        let wf = table_waveform();
        let target = TargetParams {
            range_m: 900.0,
            amplitude: 1.0,
        };
        let jam = JammerParams {
            delay_s: target.delay_s(),
            slice_width_s: 0.125e-6,
            sample_period_s: 0.1875e-6,
            n_slices: 6,
            amplitude: 0.0,
            freq_shift_hz: JammerParams::shift_for_offset(27.0, wf.chirp_rate()),
        };
        Self::assemble(wf, target, vec![(jam, 0.0)], -12.0, 1, TimeWindow::default())
            .expect("table 1 preset is valid")
    }

    /// Compound scenario: two jammers with main false targets at 867 m and 927 m.
    pub fn table2() -> Self {
        let wf = table_waveform();
        let target = TargetParams {
            range_m: 900.0,
            amplitude: 1.0,
        };
        let j1 = JammerParams {
            delay_s: target.delay_s(),
            slice_width_s: 0.0625e-6,
            sample_period_s: 0.1563e-6,
            n_slices: 7,
            amplitude: 0.0,
            freq_shift_hz: JammerParams::shift_for_offset(-33.0, wf.chirp_rate()),
        };
        let j2 = JammerParams {
            delay_s: target.delay_s(),
            slice_width_s: 0.125e-6,
            sample_period_s: 0.1875e-6,
            n_slices: 6,
            amplitude: 0.0,
            freq_shift_hz: JammerParams::shift_for_offset(27.0, wf.chirp_rate()),
        };
        Self::assemble(
            wf,
            target,
            vec![(j1, 4.2), (j2, 0.0)],
            -12.0,
            1,
            TimeWindow::default(),
        )
        .expect("table 2 preset is valid")
    }

    fn assemble(
        waveform: WaveformParams,
        target: TargetParams,
        jammers: Vec<(JammerParams, f64)>,
        snr_db: f64,
        seed: u64,
        window: TimeWindow,
    ) -> Result<Self> {
        let mut cfg = ScenarioConfig {
            waveform,
            target,
            sjr_db: jammers.iter().map(|j| j.1).collect(),
            jammers: jammers.into_iter().map(|j| j.0).collect(),
            noise: NoiseModel {
                snr_db,
                seed,
                signal_power: target.amplitude * target.amplitude,
                sample_rate_hz: waveform.sample_rate_hz,
            },
            window,
        };
        cfg.refresh_derived();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Recomputes jammer amplitudes and noise reference power from the stored ratios.
    pub fn refresh_derived(&mut self) {
        for (j, &sjr) in self.jammers.iter_mut().zip(&self.sjr_db) {
            j.amplitude = amplitudes_from_ratios(sjr, self.noise.snr_db, self.target.amplitude).jammer;
        }
        self.noise.signal_power = self.target.amplitude * self.target.amplitude;
        self.noise.sample_rate_hz = self.waveform.sample_rate_hz;
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.noise.snr_db = snr_db;
        self.refresh_derived();
        self
    }

    /// Sets every jammer's SJR to `sjr_db`.
    pub fn with_sjr(mut self, sjr_db: f64) -> Self {
        for s in self.sjr_db.iter_mut() {
            *s = sjr_db;
        }
        self.refresh_derived();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.noise.seed = seed;
        self
    }

    /// Main false-target range of each jammer.
    pub fn false_target_ranges(&self) -> Vec<f64> {
        let k = self.waveform.chirp_rate();
        self.jammers.iter().map(|j| j.false_target_range(k)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.waveform.validate()?;
        if !(self.target.range_m >= 0.0) || !self.target.range_m.is_finite() {
            return Err(Error::config("target_range_m", "must be >= 0"));
        }
        if !(self.target.amplitude >= 0.0) || !self.target.amplitude.is_finite() {
            return Err(Error::config("target_amplitude", "must be >= 0"));
        }
        if self.sjr_db.len() != self.jammers.len() {
            return Err(Error::config("jammer", "sjr_db count differs from jammer count"));
        }
        for (i, j) in self.jammers.iter().enumerate() {
            j.validate(i + 1)?;
            if !self.sjr_db[i].is_finite() {
                return Err(Error::config(format!("jammer.{}.sjr_db", i + 1), "must be finite"));
            }
        }
        if !self.noise.snr_db.is_finite() {
            return Err(Error::config("snr_db", "must be finite"));
        }
        if !(self.window.end_s > self.window.start_s) {
            return Err(Error::config("window_end_s", "must exceed window_start_s"));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), "expected `key = value`")
            })?;
            let k = k.trim().to_string();
            let v = v.split('#').next().unwrap_or("").trim().to_string();
            if kv.insert(k.clone(), v).is_some() {
                return Err(Error::config(k, "duplicate key"));
            }
        }

        let mut used: Vec<String> = Vec::new();
        let mut num = |key: &str| -> Result<f64> {
            used.push(key.to_string());
            let v = kv.get(key).ok_or_else(|| Error::config(key, "missing key"))?;
            v.parse::<f64>()
                .map_err(|_| Error::config(key, format!("non-numeric value `{v}`")))
        };

        let waveform = WaveformParams {
            pulse_width_s: num("pulse_width_s")?,
            bandwidth_hz: num("bandwidth_hz")?,
            carrier_hz: num("carrier_hz")?,
            prf_hz: num("prf_hz")?,
            sample_rate_hz: num("sample_rate_hz")?,
        };
        let target = TargetParams {
            range_m: num("target_range_m")?,
            amplitude: num("target_amplitude")?,
        };
        let snr_db = num("snr_db")?;
        let seed_f = num("seed")?;

        let mut indices: Vec<usize> = Vec::new();
        for k in kv.keys() {
            if let Some(rest) = k.strip_prefix("jammer.") {
                let idx_str = rest.split('.').next().unwrap_or("");
                let idx: usize = idx_str
                    .parse()
                    .map_err(|_| Error::config(k.clone(), "jammer index must be a positive integer"))?;
                if idx == 0 {
                    return Err(Error::config(k.clone(), "jammer indices start at 1"));
                }
                if !indices.contains(&idx) {
                    indices.push(idx);
                }
            }
        }
        indices.sort_unstable();
        for (expect, &got) in indices.iter().enumerate() {
            if got != expect + 1 {
                return Err(Error::config(format!("jammer.{}", expect + 1), "missing jammer index"));
            }
        }

        let mut jammers = Vec::new();
        for &i in &indices {
            let n_slices = num(&format!("jammer.{i}.n_slices"))?;
            if n_slices.fract() != 0.0 || n_slices < 0.0 {
                return Err(Error::config(
                    format!("jammer.{i}.n_slices"),
                    "must be a non-negative integer",
                ));
            }
            let jam = JammerParams {
                delay_s: num(&format!("jammer.{i}.delay_s"))?,
                slice_width_s: num(&format!("jammer.{i}.slice_width_s"))?,
                sample_period_s: num(&format!("jammer.{i}.sample_period_s"))?,
                n_slices: n_slices as usize,
                amplitude: 0.0,
                freq_shift_hz: num(&format!("jammer.{i}.freq_shift_hz"))?,
            };
            let sjr = num(&format!("jammer.{i}.sjr_db"))?;
            jammers.push((jam, sjr));
        }

        let mut window = TimeWindow::default();
        if kv.contains_key("window_start_s") {
            window.start_s = num("window_start_s")?;
        }
        if kv.contains_key("window_end_s") {
            window.end_s = num("window_end_s")?;
        }

        for k in kv.keys() {
            if !used.contains(k) {
                return Err(Error::config(k.clone(), "unknown key"));
            }
        }
        if seed_f < 0.0 || seed_f.fract() != 0.0 || seed_f > u64::MAX as f64 {
            return Err(Error::config("seed", "must be a non-negative integer"));
        }
        Self::assemble(waveform, target, jammers, snr_db, seed_f as u64, window)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::parse(&text)
    }

    /// Serializes to the config format; `parse(to_config_string())` round-trips exactly.
    pub fn to_config_string(&self) -> String {
        let w = &self.waveform;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("pulse_width_s", fmt_f64(w.pulse_width_s));
        put("bandwidth_hz", fmt_f64(w.bandwidth_hz));
        put("carrier_hz", fmt_f64(w.carrier_hz));
        put("prf_hz", fmt_f64(w.prf_hz));
        put("sample_rate_hz", fmt_f64(w.sample_rate_hz));
        put("target_range_m", fmt_f64(self.target.range_m));
        put("target_amplitude", fmt_f64(self.target.amplitude));
        put("snr_db", fmt_f64(self.noise.snr_db));
        put("seed", self.noise.seed.to_string());
        put("window_start_s", fmt_f64(self.window.start_s));
        put("window_end_s", fmt_f64(self.window.end_s));
        for (i, (j, sjr)) in self.jammers.iter().zip(&self.sjr_db).enumerate() {
            let p = format!("jammer.{}.", i + 1);
            put(&format!("{p}delay_s"), fmt_f64(j.delay_s));
            put(&format!("{p}slice_width_s"), fmt_f64(j.slice_width_s));
            put(&format!("{p}sample_period_s"), fmt_f64(j.sample_period_s));
            put(&format!("{p}n_slices"), j.n_slices.to_string());
            put(&format!("{p}freq_shift_hz"), fmt_f64(j.freq_shift_hz));
            put(&format!("{p}sjr_db"), fmt_f64(*sjr));
        }
        s
    }
}

fn table_waveform() -> WaveformParams {
    WaveformParams {
        pulse_width_s: 1e-6,
        bandwidth_hz: 100e6,
        carrier_hz: 10e9,
        prf_hz: 5e3,
        sample_rate_hz: 200e6,
    }
}

// Shortest representation that parses back to the same f64.
fn fmt_f64(v: f64) -> String {
    let s = format!("{v:e}");
    debug_assert_eq!(s.parse::<f64>().ok(), Some(v));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_of_900m() {
        let d = range_to_delay(900.0).unwrap();
        assert!((d - 6.004_153e-6).abs() < 1e-12);
        assert_eq!(range_to_delay(0.0).unwrap(), 0.0);
        assert!((delay_to_range(range_to_delay(927.0).unwrap()).unwrap() - 927.0).abs() < 1e-9);
        assert!(range_to_delay(-1.0).is_err());
        assert!(delay_to_range(-1e-9).is_err());
    }

    #[test]
    fn ratios() {
        let a = amplitudes_from_ratios(0.0, -12.0, 1.0);
        assert_eq!(a.target, a.jammer);
        assert!((a.noise_sigma.powi(2) - 15.848_931_924_611_133).abs() < 1e-9);
        let b = amplitudes_from_ratios(4.2, 0.0, 1.0);
        assert!((b.target / b.jammer - 1.621_810_097_358_930_2).abs() < 1e-12);
        assert!((20.0 * (b.target / b.jammer).log10() - 4.2).abs() < 1e-12);
    }

    #[test]
    fn presets_place_false_targets() {
        let t1 = ScenarioConfig::table1();
        let r = t1.false_target_ranges();
        assert!((r[0] - 927.0).abs() < 1e-6);
        let t2 = ScenarioConfig::table2();
        let r = t2.false_target_ranges();
        assert!((r[0] - 867.0).abs() < 1e-6);
        assert!((r[1] - 927.0).abs() < 1e-6);
        assert!((t2.jammers[0].amplitude - 10f64.powf(-4.2 / 20.0)).abs() < 1e-15);
    }

    #[test]
    fn slice_wider_than_period_names_key() {
        let mut text = ScenarioConfig::table1().to_config_string();
        text = text.replace("jammer.1.slice_width_s = 1.25e-7", "jammer.1.slice_width_s = 2.5e-7");
        let err = ScenarioConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("slice_width_s"), "{err}");
    }

    #[test]
    fn missing_and_non_numeric_keys() {
        let text = ScenarioConfig::table1().to_config_string();
        let no_bw: String = text
            .lines()
            .filter(|l| !l.starts_with("bandwidth_hz"))
            .map(|l| format!("{l}\n"))
            .collect();
        let e = ScenarioConfig::parse(&no_bw).unwrap_err().to_string();
        assert!(e.contains("bandwidth_hz") && e.contains("missing"), "{e}");
        let bad = text.replace("snr_db = -1.2e1", "snr_db = loud");
        let e = ScenarioConfig::parse(&bad).unwrap_err().to_string();
        assert!(e.contains("snr_db") && e.contains("non-numeric"), "{e}");
    }

    #[test]
    fn round_trip_is_identical() {
        for cfg in [ScenarioConfig::table1(), ScenarioConfig::table2()] {
            let again = ScenarioConfig::parse(&cfg.to_config_string()).unwrap();
            assert_eq!(cfg, again);
        }
    }

    #[test]
    fn undersampled_rate_rejected() {
        let text = ScenarioConfig::table1()
            .to_config_string()
            .replace("sample_rate_hz = 2e8", "sample_rate_hz = 1.5e8");
        let e = ScenarioConfig::parse(&text).unwrap_err().to_string();
        assert!(e.contains("sample_rate_hz"), "{e}");
    }
}
