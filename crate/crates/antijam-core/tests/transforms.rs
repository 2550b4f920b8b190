use antijam_core::lct::{lct_direct, lct_forward, lct_inverse, LctParams};
use antijam_core::siggen::ComplexSignal;
use antijam_core::tfr::{glwd_distribution, istft, stft, wd_distribution, GlwdParams, TfConfig};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn gaussian(n: usize, dt: f64, sigma: f64, shift: f64, chirp: f64) -> ComplexSignal {
    let start = -(n as f64 / 2.0) * dt;
    let s = (0..n)
        .map(|j| {
            let t = start + j as f64 * dt;
            let env = (-(t - shift).powi(2) / (2.0 * sigma * sigma)).exp();
            Complex64::from_polar(env, chirp * t * t)
        })
        .collect();
    ComplexSignal::new(s, 1.0 / dt, start).unwrap()
}

fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Continuous Fourier transform `(1/sqrt(j 2 pi)) int x(t) exp(-j u t) dt` as a plain DFT sum.
fn dft_oracle(x: &ComplexSignal, u: &[f64]) -> Vec<Complex64> {
    let norm = Complex64::new(0.0, 2.0 * PI).sqrt();
    u.iter()
        .map(|&uk| {
            let acc: Complex64 = x
                .samples()
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -uk * x.time(j)))
                .sum();
            acc * x.dt() / norm
        })
        .collect()
}

#[test]
fn fourier_lct_matches_dft() {
    let x = gaussian(256, 0.1, 1.3, 0.4, 0.3);
    let out = lct_forward(&x, &LctParams::new(0.0, 1.0, -1.0, 0.0).unwrap()).unwrap();
    let u: Vec<f64> = (0..out.len()).map(|i| out.time(i)).collect();
    let err = rel_l2(out.samples(), &dft_oracle(&x, &u));
    assert!(err <= 1e-8, "{err}");
}

/// Error allowing for the metaplectic sign ambiguity of composed kernels.
fn up_to_sign(a: &[Complex64], b: &[Complex64]) -> f64 {
    let neg: Vec<Complex64> = b.iter().map(|z| -z).collect();
    rel_l2(a, b).min(rel_l2(a, &neg))
}

fn params() -> impl Strategy<Value = LctParams> {
    (0.3f64..2.0, prop_oneof![-1.5f64..-0.3, 0.3f64..1.5], -1.0f64..1.0)
        .prop_map(|(a, b, c)| LctParams::from_abc(a, b, c).unwrap())
}

fn mild_params() -> impl Strategy<Value = LctParams> {
    (0.5f64..1.5, prop_oneof![-1.5f64..-0.5, 0.5f64..1.5], -0.5f64..0.5)
        .prop_map(|(a, b, c)| LctParams::from_abc(a, b, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lct_round_trip(p in params(), sigma in 0.6f64..1.2, shift in -0.5f64..0.5) {
        let x = gaussian(128, 0.125, sigma, shift, 0.0);
        let y = lct_forward(&x, &p).unwrap();
        let back = lct_inverse(&y, &p).unwrap();
        // the inverse lands on the input spacing; align by time
        let offset = ((x.start_time_s() - back.start_time_s()) / x.dt()).round() as usize;
        prop_assert!((back.dt() / x.dt() - 1.0).abs() < 1e-12);
        let seg = &back.samples()[offset..offset + x.len()];
        let err = rel_l2(seg, x.samples());
        prop_assert!(err <= 1e-6, "round trip {}", err);
    }

    #[test]
    fn lct_additivity(p in mild_params(), q in mild_params()) {
        let qp = q.compose(&p);
        // a near-zero composite b makes the direct-sum oracle itself alias
        prop_assume!(qp.b.abs() > 0.3);
        // fine input grid so the intermediate LCT is well sampled for the direct sums
        let x = gaussian(1024, 0.05, 0.8, 0.2, 0.0);
        let y = lct_forward(&x, &p).unwrap();
        // evaluate both sides on a common grid with the direct sum
        let u: Vec<f64> = (0..64).map(|i| (i as f64 - 32.0) * 0.1).collect();
        let two_step = lct_direct(&y, &q, &u).unwrap();
        let one_step = lct_direct(&x, &qp, &u).unwrap();
        let err = up_to_sign(&two_step, &one_step);
        prop_assert!(err <= 1e-6, "additivity {}", err);
    }

    #[test]
    fn stft_round_trip(seed in 0u64..1000, hop in prop_oneof![Just(8usize), Just(16)]) {
        let n = 400;
        let z = antijam_core::siggen::noise(n, 1.0, seed);
        let x = ComplexSignal::new(z, 1.0, 0.0).unwrap();
        let back = istft(&stft(&x, 64, hop).unwrap()).unwrap();
        prop_assert_eq!(back.len(), x.len());
        let err = rel_l2(back.samples(), x.samples());
        prop_assert!(err <= 1e-10, "stft {}", err);
    }
}

#[test]
fn glwd_reduces_to_wd() {
    let x = gaussian(300, 0.05, 2.0, 0.3, PI);
    let cfg = TfConfig { time_unit_s: Some(1.0), half_lag: 24, n_freq: 64, ..TfConfig::default() };
    let wd = wd_distribution(&x, &cfg).unwrap();
    let gl = glwd_distribution(&x, &GlwdParams::wigner(PI), &cfg).unwrap().dist;
    assert!(rel_l2(&gl.values, &wd.values) <= 1e-8);
}
