//! Monte Carlo estimate of the GLWD output SNR for a unit chirp in white noise.

use super::params::{osnr_glwd, GlwdParams};
use super::wigner::{glwd_distribution, output_phase, TfConfig};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::siggen::{noise, ComplexSignal};
use num_complex::Complex64;

/// Monte Carlo setup; times are in normalized units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsnrTrials {
    pub n_samples: usize,
    pub dx: f64,
    /// Chirp support length in samples, centred in the window.
    pub chirp_samples: usize,
    pub sigma: f64,
    pub trials: usize,
    pub half_lag: usize,
    pub n_freq: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for OsnrTrials {
    fn default() -> Self {
        OsnrTrials {
            n_samples: 512,
            dx: 0.05,
            chirp_samples: 200,
            sigma: 1.0,
            trials: 400,
            half_lag: 16,
            n_freq: 128,
            seed: 1,
            exec: Exec::Parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsnrEstimate {
    /// Ridge delta coefficient: `|sum_u W_f du|` with the kernel phase removed.
    pub ridge: f64,
    /// Mean over ridge points of `|E[W_n]|`.
    pub noise_mean: f64,
    pub empirical: f64,
    pub theoretical: f64,
}

/// Estimates `max|W_f| / mean_ridge |E W_n|` for `exp(j n x^2)` with noise PSD `sigma^2 dx`.
pub fn osnr_monte_carlo(params: &GlwdParams, setup: &OsnrTrials) -> Result<OsnrEstimate> {
    if setup.trials < 2 || setup.chirp_samples >= setup.n_samples || !(setup.sigma > 0.0) {
        return Err(Error::invalid("need >= 2 trials, a chirp shorter than the window and sigma > 0"));
    }
    let n = setup.n_samples;
    let fs = 1.0 / setup.dx;
    let start = -((n / 2) as f64) * setup.dx;
    let tf = TfConfig {
        time_unit_s: Some(1.0),
        time_origin_s: Some(0.0),
        half_lag: setup.half_lag,
        n_freq: setup.n_freq,
        column_stride: 1,
        exec: Exec::Sequential,
    };
    let half = setup.chirp_samples as f64 * setup.dx / 2.0;
    let chirp: Vec<Complex64> = (0..n)
        .map(|j| {
            let t = start + j as f64 * setup.dx;
            if t.abs() < half {
                Complex64::from_polar(1.0, params.chirp_rate_n * t * t)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let sig = ComplexSignal::new(chirp, fs, start)?;
    let clean = glwd_distribution(&sig, params, &tf)?.dist;

    // the chirp occupies |x| < half / |h| in the transformed domain; use its central half
    let h = 0.5 * (params.h1().abs() + params.h2().abs());
    let reach = 0.5 * half / h;
    let cols: Vec<usize> = (0..clean.cols)
        .filter(|&c| clean.x_axis.value(c as f64).abs() <= reach)
        .collect();
    if cols.is_empty() {
        return Err(Error::Degenerate("chirp support narrower than one column".into()));
    }
    let mut sums = Vec::with_capacity(cols.len());
    let mut points = Vec::with_capacity(cols.len());
    for &c in &cols {
        let x = clean.x_axis.value(c as f64);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut best = (0.0, 0);
        for r in 0..clean.rows {
            let u = clean.u_axis.value(r as f64);
            let w = clean.get(r, c);
            acc += w * Complex64::from_polar(1.0, -output_phase(params, u, x));
            if w.norm() > best.0 {
                best = (w.norm(), r);
            }
        }
        sums.push((acc * clean.u_axis.step).norm());
        points.push((best.1, c));
    }
    sums.sort_by(f64::total_cmp);
    let ridge = sums[sums.len() / 2];

    let per_trial = par::map_indices(setup.trials, setup.exec, |t| -> Result<Vec<Complex64>> {
        let z = noise(n, setup.sigma, setup.seed.wrapping_mul(1_000_003).wrapping_add(t as u64));
        let d = glwd_distribution(&ComplexSignal::new(z, fs, start)?, params, &tf)?.dist;
        Ok(points.iter().map(|&(r, c)| d.get(r, c)).collect())
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let k = setup.trials as f64;
    let mut noise_mean = 0.0;
    for i in 0..points.len() {
        let mean = per_trial.iter().map(|v| v[i]).sum::<Complex64>() / k;
        let var = per_trial.iter().map(|v| (v[i] - mean).norm_sqr()).sum::<f64>() / (k - 1.0);
        // remove the finite-trial bias of |mean|^2
        noise_mean += (mean.norm_sqr() - var / k).max(0.0).sqrt();
    }
    noise_mean /= points.len() as f64;
    if noise_mean <= 0.0 {
        return Err(Error::Degenerate("noise expectation vanished".into()));
    }
    let d = setup.sigma * setup.sigma * setup.dx;
    Ok(OsnrEstimate {
        ridge,
        noise_mean,
        empirical: ridge / noise_mean,
        theoretical: osnr_glwd(params, d)?,
    })
}
