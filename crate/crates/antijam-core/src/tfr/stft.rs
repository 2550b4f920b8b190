use super::image::{Axis, TfImage, TfSource};
use crate::error::{Error, Result};
use crate::fft;
use crate::siggen::ComplexSignal;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Frames of a windowed FFT analysis, frame-major (`frames[i * nfft + k]`).
///
/// Frame `i` covers samples `[i * hop - pad, i * hop - pad + window_len)` with
/// `pad = window_len - hop`, so every sample is seen by the same number of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct StftFrameSet {
    pub frames: Vec<Complex64>,
    pub n_frames: usize,
    pub nfft: usize,
    pub window: Vec<f64>,
    pub hop: usize,
    pub signal_len: usize,
    pub sample_rate_hz: f64,
    pub start_time_s: f64,
    // overlap-add normalizer sum_m w^2(n - m hop)
    ola_gain: f64,
}

impl StftFrameSet {
    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    fn pad(&self) -> usize {
        self.window.len() - self.hop
    }

    /// First sample index of frame `i` (may be negative).
    pub fn frame_start(&self, i: usize) -> i64 {
        (i * self.hop) as i64 - self.pad() as i64
    }

    /// Centre time of frame `i` in seconds.
    pub fn frame_time(&self, i: usize) -> f64 {
        let centre = self.frame_start(i) as f64 + self.window.len() as f64 / 2.0;
        self.start_time_s + centre / self.sample_rate_hz
    }

    pub fn bin_spacing_hz(&self) -> f64 {
        self.sample_rate_hz / self.nfft as f64
    }

    /// Signed frequency of bin `k` in Hz.
    pub fn bin_freq(&self, k: usize) -> f64 {
        fft::signed_bin(k, self.nfft) as f64 * self.bin_spacing_hz()
    }

    pub fn get(&self, frame: usize, bin: usize) -> Complex64 {
        self.frames[frame * self.nfft + bin]
    }

    /// Magnitude image with rows sorted by ascending frequency.
    pub fn magnitude_image(&self) -> TfImage {
        let n = self.nfft;
        let lo = n / 2;
        let mut data = vec![0.0; n * self.n_frames];
        for r in 0..n {
            let k = (r + n - lo) % n;
            for c in 0..self.n_frames {
                data[r * self.n_frames + c] = self.get(c, k).norm();
            }
        }
        let t_axis = Axis {
            origin: self.frame_time(0),
            step: self.hop as f64 / self.sample_rate_hz,
        };
        let u_axis = Axis {
            origin: -(lo as f64) * self.bin_spacing_hz(),
            step: self.bin_spacing_hz(),
        };
        TfImage::new(data, n, self.n_frames, t_axis, u_axis, TfSource::Stft).expect("stft magnitudes are valid")
    }

    /// Copy with every frame value multiplied by `mask[i * nfft + k]`.
    pub fn masked(&self, mask: &[f64]) -> Result<StftFrameSet> {
        if mask.len() != self.frames.len() {
            return Err(Error::ShapeMismatch(format!(
                "mask has {} cells, frames have {}",
                mask.len(),
                self.frames.len()
            )));
        }
        let mut out = self.clone();
        for (z, m) in out.frames.iter_mut().zip(mask) {
            *z *= *m;
        }
        Ok(out)
    }
}

/// Checks that `sum_m w^2(n - m hop)` is constant and returns it.
fn wola_constant(window: &[f64], hop: usize) -> Result<f64> {
    let len = window.len();
    let mut sums = vec![0.0; hop];
    for (n, w) in window.iter().enumerate() {
        sums[n % hop] += w * w;
    }
    let mean = sums.iter().sum::<f64>() / hop as f64;
    if mean <= 0.0 || sums.iter().any(|s| (s - mean).abs() > 1e-10 * mean) {
        return Err(Error::invalid(format!(
            "window of length {len} does not satisfy constant overlap-add at hop {hop}"
        )));
    }
    Ok(mean)
}

/// STFT with a periodic Hann window and `nfft = window_len`.
pub fn stft(signal: &ComplexSignal, window_len: usize, hop: usize) -> Result<StftFrameSet> {
    stft_with(signal, &hann(window_len), hop, window_len)
}

/// STFT with an explicit analysis window and FFT size.
pub fn stft_with(signal: &ComplexSignal, window: &[f64], hop: usize, nfft: usize) -> Result<StftFrameSet> {
    let len = window.len();
    if len == 0 || hop == 0 || hop > len {
        return Err(Error::invalid("need 0 < hop <= window length"));
    }
    if len > signal.len() {
        return Err(Error::invalid("window longer than signal"));
    }
    if nfft < len {
        return Err(Error::invalid("nfft must be at least the window length"));
    }
    let ola_gain = wola_constant(window, hop)?;
    let pad = len - hop;
    let n = signal.len();
    let n_frames = (n - 1 + pad) / hop + 1;
    let x = signal.samples();
    let mut frames = vec![Complex64::new(0.0, 0.0); n_frames * nfft];
    for (i, frame) in frames.chunks_mut(nfft).enumerate() {
        let s0 = (i * hop) as i64 - pad as i64;
        for (k, w) in window.iter().enumerate() {
            let idx = s0 + k as i64;
            if idx >= 0 && (idx as usize) < n {
                frame[k] = x[idx as usize] * *w;
            }
        }
        fft::fft(frame);
    }
    Ok(StftFrameSet {
        frames,
        n_frames,
        nfft,
        window: window.to_vec(),
        hop,
        signal_len: n,
        sample_rate_hz: signal.sample_rate_hz(),
        start_time_s: signal.start_time_s(),
        ola_gain,
    })
}

/// Weighted overlap-add inverse of [`stft`].
pub fn istft(frames: &StftFrameSet) -> Result<ComplexSignal> {
    let n = frames.signal_len;
    let len = frames.window.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut buf = vec![Complex64::new(0.0, 0.0); frames.nfft];
    for i in 0..frames.n_frames {
        buf.copy_from_slice(&frames.frames[i * frames.nfft..(i + 1) * frames.nfft]);
        fft::ifft(&mut buf);
        let s0 = frames.frame_start(i);
        for k in 0..len {
            let idx = s0 + k as i64;
            if idx >= 0 && (idx as usize) < n {
                out[idx as usize] += buf[k] * frames.window[k];
            }
        }
    }
    let g = 1.0 / frames.ola_gain;
    for z in out.iter_mut() {
        *z *= g;
    }
    ComplexSignal::new(out, frames.sample_rate_hz, frames.start_time_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize, f: f64, fs: f64) -> ComplexSignal {
        let s = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64 / fs))
            .collect();
        ComplexSignal::new(s, fs, 0.0).unwrap()
    }

    fn rel_err(a: &ComplexSignal, b: &ComplexSignal) -> f64 {
        let num: f64 = a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm_sqr()).sum();
        (num / b.energy()).sqrt()
    }

    #[test]
    fn tone_peaks_in_its_bin() {
        let fs = 200e6;
        let f0 = 25e6;
        let st = stft(&tone(1000, f0, fs), 64, 16).unwrap();
        for i in 4..st.n_frames - 4 {
            let k = (0..st.nfft).max_by(|&a, &b| st.get(i, a).norm().total_cmp(&st.get(i, b).norm())).unwrap();
            assert!((st.bin_freq(k) - f0).abs() <= st.bin_spacing_hz());
        }
    }

    #[test]
    fn perfect_reconstruction() {
        let x = tone(777, 13e6, 200e6);
        let y = istft(&stft(&x, 64, 16).unwrap()).unwrap();
        assert!(rel_err(&y, &x) < 1e-12);
    }

    #[test]
    fn linear() {
        let x = tone(300, 13e6, 200e6);
        let y = tone(300, -41e6, 200e6).scaled(0.3);
        let sum = crate::siggen::compose_received(&x, &[y.clone()], None).unwrap();
        let a = stft(&sum, 64, 16).unwrap();
        let b = stft(&x, 64, 16).unwrap();
        let c = stft(&y, 64, 16).unwrap();
        for i in 0..a.frames.len() {
            assert!((a.frames[i] - b.frames[i] - c.frames[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn cola_violation_rejected() {
        let x = tone(300, 13e6, 200e6);
        assert!(stft(&x, 64, 48).is_err());
        assert!(stft(&x, 64, 16).is_ok());
    }

    #[test]
    fn zero_frames_zero_signal() {
        let x = tone(300, 13e6, 200e6);
        let st = stft(&x, 64, 16).unwrap();
        let z = st.masked(&vec![0.0; st.frames.len()]).unwrap();
        assert_eq!(istft(&z).unwrap().energy(), 0.0);
    }
}
