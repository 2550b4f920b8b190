// Thin wrappers over rustfft with a per-thread planner cache.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::cell::RefCell;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized forward DFT, X[k] = sum x[n] e^{-j2pi kn/N}.
pub(crate) fn fft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

/// Normalized inverse DFT (includes the 1/N).
pub(crate) fn ifft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
    let s = 1.0 / buf.len() as f64;
    for x in buf.iter_mut() {
        *x *= s;
    }
}

/// Signed DFT bin index for position `k` of an `n`-point transform.
pub(crate) fn signed_bin(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Band-limited 2x upsampling: output[2i] = x[i], odd entries interpolated.
/// The input is zero padded by `pad` samples on both sides before the FFT.
pub(crate) fn upsample2(x: &[Complex64], pad: usize) -> Vec<Complex64> {
    let n = x.len() + 2 * pad;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[pad..pad + x.len()].copy_from_slice(x);
    fft(&mut buf);
    let mut up = vec![Complex64::new(0.0, 0.0); 2 * n];
    let half = n / 2;
    for k in 0..n {
        let s = signed_bin(k, n);
        let dst = if s >= 0 { s as usize } else { (2 * n as i64 + s) as usize };
        up[dst] = buf[k];
    }
    if n % 2 == 0 {
        // split the Nyquist bin so real inputs stay real
        let v = buf[half] * 0.5;
        up[half] = v;
        up[2 * n - half] = v;
    }
    ifft(&mut up);
    for v in up.iter_mut() {
        *v *= 2.0;
    }
    up[2 * pad..2 * pad + 2 * x.len() - 1].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_roundtrip() {
        let x: Vec<Complex64> = (0..17)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut y = x.clone();
        fft(&mut y);
        ifft(&mut y);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn upsample_keeps_samples_and_interpolates_tone() {
        let n = 64;
        let w = 0.4;
        let x: Vec<Complex64> = (0..n)
            .map(|i| Complex64::from_polar(1.0, w * i as f64))
            .collect();
        let up = upsample2(&x, 0);
        assert_eq!(up.len(), 2 * n - 1);
        for i in 0..n {
            assert!((up[2 * i] - x[i]).norm() < 1e-10);
        }
        // periodic tone: exact only when w*n is a multiple of 2pi, so just check magnitude near centre
        assert!((up[n + 1].norm() - 1.0).abs() < 0.1);
    }
}
