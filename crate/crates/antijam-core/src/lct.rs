//! Discrete linear canonical transform.
//!
//! For `b != 0` the transform is evaluated as chirp multiply, FFT, chirp multiply:
//!
//! ```text
//! F(u) = 1/sqrt(j 2 pi b) e^{j d u^2 / 2b} sum_n f(t_n) e^{j a t_n^2 / 2b} e^{-j u t_n / b} dt
//! ```
//!
//! on the grid `u_k = k * 2 pi |b| / (M dt)`, `k = -M/2 .. M/2-1`, where `M` is the
//! zero-padded length (2x the input). For `b = 0` the scaling branch
//! `sqrt(d) e^{j c d u^2 / 2} f(d u)` is used and the output grid is `u = t / d`.
//! Square roots take the principal branch.

use crate::error::{Error, Result};
use crate::fft;
use crate::siggen::ComplexSignal;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Unit-determinant parameter matrix `(a, b; c, d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LctParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

const DET_TOL: f64 = 1e-12;

impl LctParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let p = LctParams { a, b, c, d };
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("LCT parameters must be finite"));
        }
        let scale = 1f64.max((a * d).abs() + (b * c).abs());
        if (p.det() - 1.0).abs() > DET_TOL * scale {
            return Err(Error::invalid(format!(
                "LCT matrix ({a}, {b}; {c}, {d}) has determinant {} != 1",
                p.det()
            )));
        }
        Ok(p)
    }

    /// Completes `(a, b; c, ?)` to unit determinant; needs `a != 0`.
    pub fn from_abc(a: f64, b: f64, c: f64) -> Result<Self> {
        if a == 0.0 {
            return Err(Error::invalid("from_abc needs a != 0"));
        }
        Self::new(a, b, c, (1.0 + b * c) / a)
    }

    /// Completes `(a, b; ?, d)` to unit determinant; needs `b != 0`.
    pub fn from_abd(a: f64, b: f64, d: f64) -> Result<Self> {
        if b == 0.0 {
            return Err(Error::invalid("from_abd needs b != 0"));
        }
        Self::new(a, b, (a * d - 1.0) / b, d)
    }

    pub const fn identity() -> Self {
        LctParams { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// `(0, 1; -1, 0)`: the Fourier transform with kernel `e^{-jut}/sqrt(j2pi)`.
    pub const fn fourier() -> Self {
        LctParams { a: 0.0, b: 1.0, c: -1.0, d: 0.0 }
    }

    /// Fractional Fourier transform of angle `theta` (radians).
    pub fn frft(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        LctParams { a: c, b: s, c: -s, d: c }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `(d, -b; -c, a)`.
    pub fn inverse(&self) -> Self {
        LctParams {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Matrix product `self * rhs`; applying `rhs` first and then `self` equals applying the product.
    pub fn compose(&self, rhs: &LctParams) -> Self {
        LctParams {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }
}

/// Principal square root of `j 2 pi b`.
pub fn sqrt_j2pib(b: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * b).sqrt()
}

/// Kernel `K_A(u, t)`; errors for `b = 0`.
pub fn kernel(p: &LctParams, u: f64, t: f64) -> Result<Complex64> {
    if p.b == 0.0 {
        return Err(Error::Degenerate("kernel undefined for b = 0; use the scaling branch".into()));
    }
    let phase = (p.d * u * u - 2.0 * u * t + p.a * t * t) / (2.0 * p.b);
    Ok(Complex64::from_polar(1.0, phase) / sqrt_j2pib(p.b))
}

/// Forward LCT with 2x zero padding. The output is a [`ComplexSignal`] whose
/// "time" axis is the LCT-domain variable `u`.
pub fn lct_forward(signal: &ComplexSignal, p: &LctParams) -> Result<ComplexSignal> {
    apply(signal, p, 2 * signal.len())
}

/// Inverse LCT: the transform with `(d, -b; -c, a)`, evaluated without padding
/// so that the output lands back on the forward input's sample spacing.
pub fn lct_inverse(signal: &ComplexSignal, p: &LctParams) -> Result<ComplexSignal> {
    apply(signal, &p.inverse(), signal.len())
}

fn apply(signal: &ComplexSignal, p: &LctParams, m: usize) -> Result<ComplexSignal> {
    let dt = signal.dt();
    let t0 = signal.start_time_s();
    if p.b == 0.0 {
        return Ok(scaling_branch(signal, p));
    }
    let n = signal.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (j, (dst, x)) in buf.iter_mut().zip(signal.samples()).enumerate() {
        let t = t0 + j as f64 * dt;
        *dst = x * Complex64::from_polar(1.0, p.a * t * t / (2.0 * p.b));
    }
    debug_assert!(n <= m);
    fft::fft(&mut buf);
    let du = 2.0 * PI * p.b.abs() / (m as f64 * dt);
    let half = (m / 2) as i64;
    let pref = dt / sqrt_j2pib(p.b);
    let sgn = p.b.signum() as i64;
    let out: Vec<Complex64> = (0..m as i64)
        .map(|i| {
            let u = (i - half) as f64 * du;
            let k = ((i - half) * sgn).rem_euclid(m as i64) as usize;
            let ph = p.d * u * u / (2.0 * p.b) - u * t0 / p.b;
            pref * Complex64::from_polar(1.0, ph) * buf[k]
        })
        .collect();
    ComplexSignal::new(out, 1.0 / du, -(half as f64) * du)
}

fn scaling_branch(signal: &ComplexSignal, p: &LctParams) -> ComplexSignal {
    let root = Complex64::new(p.d, 0.0).sqrt();
    let dt = signal.dt();
    let n = signal.len();
    let du = dt / p.d.abs();
    let mut out = Vec::with_capacity(n);
    // u_i = t_j / d; reverse order when d < 0 so u ascends
    for i in 0..n {
        let j = if p.d > 0.0 { i } else { n - 1 - i };
        let t = signal.time(j);
        let u = t / p.d;
        out.push(root * Complex64::from_polar(1.0, p.c * p.d * u * u / 2.0) * signal.samples()[j]);
    }
    let u0 = signal.time(if p.d > 0.0 { 0 } else { n - 1 }) / p.d;
    ComplexSignal::new(out, 1.0 / du, u0).expect("scaled grid is valid")
}

/// Direct quadrature of the LCT integral at points `u`, using the signal's own
/// samples (Riemann sum). O(N M); used as an oracle and for small problems.
pub fn lct_direct(signal: &ComplexSignal, p: &LctParams, u: &[f64]) -> Result<Vec<Complex64>> {
    let dt = signal.dt();
    u.iter()
        .map(|&uk| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, x) in signal.samples().iter().enumerate() {
                acc += x * kernel(p, uk, signal.time(j))?;
            }
            Ok(acc * dt)
        })
        .collect()
}

/// Samples of an LCT-domain signal at its grid points, as `(u, value)` pairs.
pub fn grid_points(sig: &ComplexSignal) -> Vec<f64> {
    (0..sig.len()).map(|i| sig.time(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(n: usize, dt: f64, sigma: f64, shift: f64) -> ComplexSignal {
        let start = -(n as f64 / 2.0) * dt;
        let s = (0..n)
            .map(|j| {
                let t = start + j as f64 * dt;
                Complex64::new((-(t - shift).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0)
            })
            .collect();
        ComplexSignal::new(s, 1.0 / dt, start).unwrap()
    }

    #[test]
    fn kernel_at_origin_and_modulus() {
        let k = kernel(&LctParams::fourier(), 0.0, 0.0).unwrap();
        assert!((k - Complex64::new(1.0, 0.0) / Complex64::new(0.0, 2.0 * PI).sqrt()).norm() < 1e-15);
        let p = LctParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
        for &(u, t) in &[(0.3, -1.2), (4.0, 2.0), (-7.5, 0.1)] {
            let k = kernel(&p, u, t).unwrap();
            assert!((k.norm() - 1.0 / (2.0 * PI * p.b.abs()).sqrt()).abs() < 1e-14);
        }
        assert!(kernel(&LctParams::identity(), 0.0, 0.0).is_err());
    }

    #[test]
    fn kernel_conjugate_symmetry() {
        let p = LctParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let q = LctParams { a: p.a, b: -p.b, c: -p.c, d: p.d };
        for &(u, t) in &[(0.3, -1.2), (1.5, 0.25)] {
            let lhs = kernel(&p, u, t).unwrap().conj();
            let rhs = kernel(&q, u, t).unwrap();
            // equal up to the branch of the square root: ratio is a unit constant
            let r = lhs / rhs;
            assert!((r.norm() - 1.0).abs() < 1e-12);
            assert!((r - Complex64::new(0.0, -1.0)).norm() < 1e-12 || (r - Complex64::new(1.0, 0.0)).norm() < 1e-12 || (r - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn det_validation_and_inverse() {
        assert!(LctParams::new(1.0, 1.0, 1.0, 1.0).is_err());
        let p = LctParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let q = p.compose(&p.inverse());
        assert!((q.a - 1.0).abs() < 1e-15 && q.b.abs() < 1e-15 && q.c.abs() < 1e-15 && (q.d - 1.0).abs() < 1e-15);
        assert!((p.inverse().det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_branch_is_copy() {
        let g = gaussian(64, 0.1, 1.0, 0.3);
        let out = lct_forward(&g, &LctParams::identity()).unwrap();
        assert_eq!(out, g);
        assert_eq!(lct_inverse(&g, &LctParams::identity()).unwrap(), g);
    }

    #[test]
    fn fourier_matches_direct_sum() {
        let g = gaussian(128, 0.125, 0.7, 0.5);
        let out = lct_forward(&g, &LctParams::fourier()).unwrap();
        let u = grid_points(&out);
        let direct = lct_direct(&g, &LctParams::fourier(), &u).unwrap();
        let err: f64 = out.samples().iter().zip(&direct).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err / out.l2_norm() < 1e-12);
    }

    #[test]
    fn parseval_holds() {
        let g = gaussian(128, 0.125, 0.7, 0.5);
        for p in [LctParams::fourier(), LctParams::new(2.0, 1.0, 1.0, 1.0).unwrap(), LctParams::new(0.5, -0.7, 0.0, 2.0).unwrap()] {
            let out = lct_forward(&g, &p).unwrap();
            let e_in = g.energy() * g.dt();
            let e_out = out.energy() * out.dt();
            assert!((e_out / e_in - 1.0).abs() < 1e-12);
        }
    }
}
