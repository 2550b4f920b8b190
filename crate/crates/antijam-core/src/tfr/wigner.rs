use super::image::{Axis, TfDistribution, TfImage, TfSource};
use super::params::GlwdParams;
use crate::error::{Error, Result};
use crate::fft;
use crate::lct::{self, sqrt_j2pib, LctParams};
use crate::par::{self, Exec};
use crate::siggen::ComplexSignal;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Discretization settings shared by [`wd_with`] and [`glwd_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TfConfig {
    /// Seconds per normalized time unit; `None` uses one sample.
    pub time_unit_s: Option<f64>,
    /// Physical time of x = 0; `None` uses the sample nearest the window centre.
    pub time_origin_s: Option<f64>,
    /// Lags run over `-half_lag..=half_lag` (in units of the column spacing).
    pub half_lag: usize,
    /// FFT length over the lag axis; also the number of rows. Must exceed `2 * half_lag`.
    pub n_freq: usize,
    /// Keep every `column_stride`-th column.
    pub column_stride: usize,
    pub exec: Exec,
}

impl Default for TfConfig {
    fn default() -> Self {
        TfConfig {
            time_unit_s: None,
            time_origin_s: None,
            half_lag: 32,
            n_freq: 128,
            column_stride: 1,
            exec: Exec::Parallel,
        }
    }
}

impl TfConfig {
    fn check(&self) -> Result<()> {
        if self.n_freq < 2 * self.half_lag + 1 {
            return Err(Error::invalid("n_freq must be at least 2 * half_lag + 1"));
        }
        if self.column_stride == 0 {
            return Err(Error::invalid("column_stride must be >= 1"));
        }
        Ok(())
    }
}

/// Signal samples on a normalized time axis `x_j = (j - centre) * dx`.
struct Normalized {
    samples: Vec<Complex64>,
    dx: f64,
    centre: f64,
    unit: f64,
    origin: f64,
}

fn normalize(signal: &ComplexSignal, cfg: &TfConfig) -> Normalized {
    let unit = cfg.time_unit_s.unwrap_or(signal.dt());
    let (origin, centre) = match cfg.time_origin_s {
        Some(t) => (t, (t - signal.start_time_s()) * signal.sample_rate_hz()),
        None => {
            let c = (signal.len() / 2) as f64;
            (signal.time(signal.len() / 2), c)
        }
    };
    Normalized {
        samples: signal.samples().to_vec(),
        dx: signal.dt() / unit,
        centre,
        unit,
        origin,
    }
}

/// Values of `U[2p + m] * conj(V[2p - m])` for `|m| <= M_p` placed in an FFT buffer.
fn lag_products(
    u: &[Complex64],
    v: &[Complex64],
    p: usize,
    half_lag: usize,
    buf: &mut [Complex64],
    weight: impl Fn(i64) -> Complex64,
) {
    let nf = buf.len();
    buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
    let last = u.len() - 1;
    let mp = half_lag.min(2 * p).min(last - 2 * p);
    for m in -(mp as i64)..=(mp as i64) {
        let i1 = (2 * p as i64 + m) as usize;
        let i2 = (2 * p as i64 - m) as usize;
        buf[m.rem_euclid(nf as i64) as usize] = u[i1] * v[i2].conj() * weight(m);
    }
}

/// Classical WD `W(t, w) = (1/2pi) int f(t + tau/2) f*(t - tau/2) e^{-j w tau} dtau`
/// with a rectangular lag window.
pub fn wd_distribution(signal: &ComplexSignal, cfg: &TfConfig) -> Result<TfDistribution> {
    cfg.check()?;
    let nz = normalize(signal, cfg);
    let n = nz.samples.len();
    let up = fft::upsample2(&nz.samples, n / 2);
    let nf = cfg.n_freq;
    let cols: Vec<usize> = (0..n).step_by(cfg.column_stride).collect();
    let dx = nz.dx;
    let scale = dx / (2.0 * PI);
    let half = (nf / 2) as i64;
    let columns = par::map_indices(cols.len(), cfg.exec, |ci| {
        let p = cols[ci];
        let mut buf = vec![Complex64::new(0.0, 0.0); nf];
        lag_products(&up, &up, p, cfg.half_lag, &mut buf, |_| Complex64::new(1.0, 0.0));
        fft::fft(&mut buf);
        (0..nf as i64)
            .map(|r| buf[(r - half).rem_euclid(nf as i64) as usize] * scale)
            .collect::<Vec<_>>()
    });
    let dw = 2.0 * PI / (nf as f64 * dx);
    Ok(assemble(columns, nf, &cols, &nz, dx, Axis { origin: -(half as f64) * dw, step: dw }, TfSource::Wd))
}

fn assemble(
    columns: Vec<Vec<Complex64>>,
    rows: usize,
    cols: &[usize],
    nz: &Normalized,
    dx: f64,
    u_axis: Axis,
    source: TfSource,
) -> TfDistribution {
    let nc = cols.len();
    let mut values = vec![Complex64::new(0.0, 0.0); rows * nc];
    for (c, col) in columns.iter().enumerate() {
        for r in 0..rows {
            values[r * nc + c] = col[r];
        }
    }
    let stride = if cols.len() > 1 { (cols[1] - cols[0]) as f64 } else { 1.0 };
    TfDistribution {
        values,
        rows,
        cols: nc,
        x_axis: Axis {
            origin: (cols[0] as f64 - nz.centre) * dx,
            step: stride * dx,
        },
        u_axis,
        time_unit_s: nz.unit,
        time_origin_s: nz.origin,
        source,
    }
}

/// WD magnitude image with default settings.
pub fn wd(signal: &ComplexSignal) -> Result<TfImage> {
    Ok(wd_distribution(signal, &TfConfig::default())?.magnitude())
}

pub fn wd_with(signal: &ComplexSignal, cfg: &TfConfig) -> Result<TfImage> {
    Ok(wd_distribution(signal, cfg)?.magnitude())
}

/// `F_B` sampled on the grid `x_i = x0 + i dx`.
struct OnGrid {
    values: Vec<Complex64>,
    x0: f64,
    dx: f64,
}

/// LCT of the normalized signal on a uniform grid tied to the input grid.
///
/// * `b = 0`: `x = t / d`, no interpolation.
/// * `b != 0, a != 0`: chirp(c/a) after a Fresnel convolution evaluated spectrally; `x = a t`.
/// * `a = 0`: chirp-FFT-chirp on its natural grid.
fn lct_on_grid(nz: &Normalized, p: &LctParams) -> Result<OnGrid> {
    let n = nz.samples.len();
    let t = |j: usize| (j as f64 - nz.centre) * nz.dx;
    if p.b == 0.0 {
        let root = Complex64::new(p.d, 0.0).sqrt();
        let order: Vec<usize> = if p.d > 0.0 { (0..n).collect() } else { (0..n).rev().collect() };
        let values = order
            .iter()
            .map(|&j| {
                let x = t(j) / p.d;
                root * Complex64::from_polar(1.0, p.c * p.d * x * x / 2.0) * nz.samples[j]
            })
            .collect();
        return Ok(OnGrid {
            values,
            x0: t(order[0]) / p.d,
            dx: nz.dx / p.d.abs(),
        });
    }
    if p.a == 0.0 {
        let start = t(0);
        let sig = ComplexSignal::new(nz.samples.clone(), 1.0 / nz.dx, start)?;
        let out = lct::lct_forward(&sig, p)?;
        return Ok(OnGrid {
            x0: out.start_time_s(),
            dx: out.dt(),
            values: out.into_samples(),
        });
    }
    // Fresnel convolution with exp(j a s^2 / 2b): spectrum sqrt(j2pi b/a) exp(-j (b/2a) w^2)
    let pad = n / 2 + 1;
    let m = n + 2 * pad;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[pad..pad + n].copy_from_slice(&nz.samples);
    fft::fft(&mut buf);
    let dw = 2.0 * PI / (m as f64 * nz.dx);
    let q = p.b / (2.0 * p.a);
    for (k, z) in buf.iter_mut().enumerate() {
        let w = fft::signed_bin(k, m) as f64 * dw;
        *z *= Complex64::from_polar(1.0, -q * w * w);
    }
    fft::ifft(&mut buf);
    let pref = sqrt_j2pib(p.b / p.a) / sqrt_j2pib(p.b);
    let order: Vec<usize> = if p.a > 0.0 { (0..n).collect() } else { (0..n).rev().collect() };
    let values = order
        .iter()
        .map(|&j| {
            let x = p.a * t(j);
            pref * Complex64::from_polar(1.0, p.c / (2.0 * p.a) * x * x) * buf[pad + j]
        })
        .collect();
    Ok(OnGrid {
        values,
        x0: p.a * t(order[0]),
        dx: nz.dx * p.a.abs(),
    })
}

/// Phase the kernel product contributes outside the lag integral.
pub(crate) fn output_phase(params: &GlwdParams, u: f64, x: f64) -> f64 {
    let (k1, k2) = (&params.a1, &params.a2);
    let uu = k1.d / (2.0 * k1.b) - k2.d / (2.0 * k2.b);
    let xx = k1.a / (2.0 * k1.b) - k2.a / (2.0 * k2.b);
    let ux = -(1.0 / k1.b - 1.0 / k2.b);
    uu * u * u + xx * x * x + ux * u * x
}

/// Result of [`glwd_distribution`].
#[derive(Debug, Clone)]
pub struct GlwdOutput {
    pub dist: TfDistribution,
    /// False when the ridge condition `l = 0` does not hold.
    pub ridge_feasible: bool,
}

/// Generalized linear canonical Wigner distribution
///
/// ```text
/// W(x, u) = int F_B1(x + tau/2) F_B2*(x - tau/2) K_A1(u, x + tau/2) K_A2*(u, x - tau/2) dtau
/// ```
///
/// with a rectangular lag window of `half_lag` steps. Rows are `u_k = w_k / beta`
/// with `beta = (1/b1 + 1/b2) / 2` and `w_k` the lag-FFT frequencies.
pub fn glwd_distribution(signal: &ComplexSignal, params: &GlwdParams, cfg: &TfConfig) -> Result<GlwdOutput> {
    cfg.check()?;
    let (k1, k2) = (params.a1, params.a2);
    if k1.b == 0.0 || k2.b == 0.0 {
        return Err(Error::Degenerate("kernel matrices need b != 0".into()));
    }
    let beta = 0.5 * params.kernel_sum();
    if beta == 0.0 {
        return Err(Error::Degenerate("1/b1 + 1/b2 = 0".into()));
    }
    let nz = normalize(signal, cfg);
    let f1 = lct_on_grid(&nz, &params.b1)?;
    let f2 = lct_on_grid(&nz, &params.b2)?;
    let same = f1.values.len() == f2.values.len()
        && (f1.dx - f2.dx).abs() <= 1e-9 * f1.dx
        && (f1.x0 - f2.x0).abs() <= 1e-9 * f1.dx.max(f1.x0.abs());
    if !same {
        return Err(Error::invalid("B1 and B2 map the signal onto different sample grids"));
    }
    let len = f1.values.len();
    let dx = f1.dx;
    let up1 = fft::upsample2(&f1.values, len / 2);
    let up2 = fft::upsample2(&f2.values, len / 2);

    let tau2 = k1.a / (8.0 * k1.b) - k2.a / (8.0 * k2.b);
    let xtau = k1.a / (2.0 * k1.b) + k2.a / (2.0 * k2.b);
    let pref = (Complex64::new(1.0, 0.0) / sqrt_j2pib(k1.b)) * (Complex64::new(1.0, 0.0) / sqrt_j2pib(k2.b)).conj() * dx;

    let nf = cfg.n_freq;
    let half = (nf / 2) as i64;
    let du = 2.0 * PI / (nf as f64 * dx * beta.abs());
    let sgn = beta.signum() as i64;
    let cols: Vec<usize> = (0..len).step_by(cfg.column_stride).collect();
    let x_of = |p: usize| f1.x0 + p as f64 * dx;

    let columns = par::map_indices(cols.len(), cfg.exec, |ci| {
        let p = cols[ci];
        let x = x_of(p);
        let mut buf = vec![Complex64::new(0.0, 0.0); nf];
        lag_products(&up1, &up2, p, cfg.half_lag, &mut buf, |m| {
            let tau = m as f64 * dx;
            Complex64::from_polar(1.0, tau2 * tau * tau + xtau * x * tau)
        });
        fft::fft(&mut buf);
        (0..nf as i64)
            .map(|r| {
                let u = (r - half) as f64 * du;
                let k = ((r - half) * sgn).rem_euclid(nf as i64) as usize;
                pref * Complex64::from_polar(1.0, output_phase(params, u, x)) * buf[k]
            })
            .collect::<Vec<_>>()
    });

    let mut dist = assemble(
        columns,
        nf,
        &cols,
        &nz,
        dx,
        Axis { origin: -(half as f64) * du, step: du },
        TfSource::Glwd,
    );
    dist.x_axis.origin = x_of(cols[0]);
    Ok(GlwdOutput {
        dist,
        ridge_feasible: params.ridge_feasible(),
    })
}

pub fn glwd(signal: &ComplexSignal, params: &GlwdParams) -> Result<TfImage> {
    glwd_with(signal, params, &TfConfig::default())
}

pub fn glwd_with(signal: &ComplexSignal, params: &GlwdParams, cfg: &TfConfig) -> Result<TfImage> {
    Ok(glwd_distribution(signal, params, cfg)?.dist.magnitude())
}
