use antijam_core::tfr::{osnr_monte_carlo, select_glwd_params, GlwdParams, OsnrTrials, SelectorPrefs};
use std::f64::consts::PI;

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

#[test]
fn empirical_osnr_follows_formula() {
    let mut sets = vec![GlwdParams::wigner(PI)];
    for g in [2.0, 4.0, 8.0, 16.0] {
        let prefs = SelectorPrefs { max_gain: g, min_ratio: 1.0, ..SelectorPrefs::default() };
        sets.push(select_glwd_params(PI, &prefs).unwrap());
    }
    let setup = OsnrTrials::default();
    let est: Vec<_> = sets.iter().map(|p| osnr_monte_carlo(p, &setup).unwrap()).collect();
    for e in &est[..3] {
        let rel = (e.empirical / e.theoretical - 1.0).abs();
        assert!(rel <= 0.2, "{e:?}");
    }
    let emp: Vec<f64> = est.iter().map(|e| e.empirical).collect();
    let theo: Vec<f64> = est.iter().map(|e| e.theoretical).collect();
    assert!(spearman(&emp, &theo) >= 0.9, "{emp:?} vs {theo:?}");
}

#[test]
fn estimate_is_reproducible() {
    let setup = OsnrTrials { trials: 20, ..OsnrTrials::default() };
    let p = GlwdParams::wigner(PI);
    assert_eq!(osnr_monte_carlo(&p, &setup).unwrap(), osnr_monte_carlo(&p, &setup).unwrap());
    assert!(osnr_monte_carlo(&p, &OsnrTrials { trials: 1, ..setup }).is_err());
}
