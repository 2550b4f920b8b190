use crate::error::{Error, Result};
use crate::lct::LctParams;
use std::f64::consts::PI;

/// GLWD parameter set: two signal-side LCTs `B1`, `B2` and two kernel LCTs `A1`, `A2`,
/// tuned for chirps with quadratic phase coefficient `chirp_rate_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlwdParams {
    pub b1: LctParams,
    pub b2: LctParams,
    pub a1: LctParams,
    pub a2: LctParams,
    pub chirp_rate_n: f64,
}

/// Tolerance on the ridge condition `l = 0`.
pub const RIDGE_TOL: f64 = 1e-9;

impl GlwdParams {
    /// Parameters under which the GLWD equals the classical WD.
    pub fn wigner(chirp_rate_n: f64) -> Self {
        GlwdParams {
            b1: LctParams::identity(),
            b2: LctParams::identity(),
            a1: LctParams::fourier(),
            a2: LctParams::fourier(),
            chirp_rate_n,
        }
    }

    pub fn new(b1: LctParams, b2: LctParams, a1: LctParams, a2: LctParams, chirp_rate_n: f64) -> Result<Self> {
        for p in [b1, b2, a1, a2] {
            LctParams::new(p.a, p.b, p.c, p.d)?;
        }
        if a1.b == 0.0 || a2.b == 0.0 {
            return Err(Error::Degenerate("kernel matrices need b != 0".into()));
        }
        let p = GlwdParams { b1, b2, a1, a2, chirp_rate_n };
        if p.inv_h1() == 0.0 || p.inv_h2() == 0.0 {
            return Err(Error::Degenerate("1/h must be nonzero".into()));
        }
        Ok(p)
    }

    /// `1/h1 = 2 n b1bar + a1bar`.
    pub fn inv_h1(&self) -> f64 {
        2.0 * self.chirp_rate_n * self.b1.b + self.b1.a
    }

    pub fn inv_h2(&self) -> f64 {
        2.0 * self.chirp_rate_n * self.b2.b + self.b2.a
    }

    pub fn h1(&self) -> f64 {
        1.0 / self.inv_h1()
    }

    pub fn h2(&self) -> f64 {
        1.0 / self.inv_h2()
    }

    /// `(dbar - h) / bbar`, written as `(2 n dbar + cbar) h` so it stays defined at `bbar = 0`.
    fn shear_term(&self, b: &LctParams, h: f64) -> f64 {
        (2.0 * self.chirp_rate_n * b.d + b.c) * h
    }

    /// Ridge condition residual `l`.
    pub fn l(&self) -> f64 {
        let (a1, a2) = (&self.a1, &self.a2);
        self.shear_term(&self.b1, self.h1()) / 8.0 - self.shear_term(&self.b2, self.h2()) / 8.0
            + (a1.a * a2.b - a2.a * a1.b) / (8.0 * a1.b * a2.b)
    }

    pub fn ridge_feasible(&self) -> bool {
        self.l().abs() <= RIDGE_TOL && self.inv_h1() != 0.0 && self.inv_h2() != 0.0
    }

    /// `1/b1 + 1/b2` of the kernel matrices.
    pub fn kernel_sum(&self) -> f64 {
        1.0 / self.a1.b + 1.0 / self.a2.b
    }

    /// `|h1 + h2| / |1/b1 + 1/b2|`; equals 1 for the WD.
    pub fn osnr_gain(&self) -> Result<f64> {
        let s = self.kernel_sum();
        if s == 0.0 {
            return Err(Error::Degenerate("1/b1 + 1/b2 = 0".into()));
        }
        Ok((self.h1() + self.h2()).abs() / s.abs())
    }

    pub fn max_abs(&self) -> f64 {
        [self.b1, self.b2, self.a1, self.a2]
            .iter()
            .map(LctParams::max_abs)
            .fold(0.0, f64::max)
    }
}

/// Slope and intercept of the GLWD ridge `u = slope * x + intercept` of the chirp
/// `exp(j(m t + n t^2))`.
///
/// The slope is `[h1 (2n d1 + c1) + h2 (2n d2 + c2) + a1/b1 + a2/b2] / (1/b1 + 1/b2)`
/// (signal-matrix entries barred, kernel entries plain) and the intercept is
/// `(h1 + h2) m / (1/b1 + 1/b2)`.
pub fn ridge_line_theoretical(p: &GlwdParams, m: f64) -> Result<(f64, f64)> {
    let s = p.kernel_sum();
    if s == 0.0 {
        return Err(Error::Degenerate("1/b1 + 1/b2 = 0".into()));
    }
    let (h1, h2) = (p.h1(), p.h2());
    let shear = p.shear_term(&p.b1, h1) + p.shear_term(&p.b2, h2) + p.a1.a / p.a1.b + p.a2.a / p.a2.b;
    Ok((shear / s, (h1 + h2) * m / s))
}

/// Output SNR of the GLWD ridge for white noise of PSD `d`: `(2 pi / D) |h1+h2| / |1/b1+1/b2|`.
pub fn osnr_glwd(p: &GlwdParams, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid("noise PSD must be positive"));
    }
    Ok(2.0 * PI / d * p.osnr_gain()?)
}

/// Search box and targets for [`select_glwd_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorPrefs {
    /// Upper bound on the signal-side compression `|h|`.
    pub max_gain: f64,
    /// Required `osnr_gain` over the WD.
    pub min_ratio: f64,
    /// Number of geometric steps for `h` in `[1, max_gain]`.
    pub h_steps: usize,
    /// Shared `abar` of both signal matrices.
    pub a_bar: f64,
    /// Offsets `d2bar - d1bar` to try; nonzero values are compensated through `a2`.
    pub d_bar_spread: Vec<f64>,
    /// Box for the kernel `b1` and `b2`.
    pub kernel_b1: (f64, f64),
    pub kernel_b2: (f64, f64),
    pub kernel_b_steps: usize,
    /// Kernel `a1`.
    pub kernel_a: f64,
    /// The `b` in the second dominance inequality `2/|b| > |1/b1 + 1/b2|`.
    pub reference_b: f64,
    /// Fixed `(B1, B2, A1, A2)`; only validity and the ridge condition are checked.
    pub pinned: Option<[LctParams; 4]>,
}

impl Default for SelectorPrefs {
    fn default() -> Self {
        SelectorPrefs {
            max_gain: 16.0,
            min_ratio: 4.0,
            h_steps: 9,
            a_bar: 1.0,
            d_bar_spread: vec![0.0],
            kernel_b1: (1.0, 2.0),
            kernel_b2: (1.0, 2.0),
            kernel_b_steps: 5,
            kernel_a: 0.0,
            reference_b: 1.0,
            pinned: None,
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || lo == hi {
        return vec![hi];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Builds the candidate for compression `h`, kernel `b1`, `b2` and spread `s = d2bar - d1bar`.
fn candidate(n: f64, prefs: &SelectorPrefs, h: f64, kb1: f64, kb2: f64, spread: f64) -> Result<GlwdParams> {
    let a_bar = prefs.a_bar;
    let b_bar = (1.0 / h - a_bar) / (2.0 * n);
    let d1 = if a_bar != 0.0 { 1.0 / a_bar } else { 0.0 };
    let d2 = d1 + spread;
    let sig = |d: f64| -> Result<LctParams> {
        if b_bar == 0.0 {
            // pure scaling: needs a d = 1
            LctParams::new(a_bar, 0.0, 0.0, 1.0 / a_bar)
        } else {
            LctParams::from_abd(a_bar, b_bar, d)
        }
    };
    let b1 = sig(d1)?;
    let b2 = sig(d2)?;
    let a1 = prefs.kernel_a;
    // l = 0 with equal bbar, h: a1 b2 - a2 b1 = -b1 b2 (d1 - d2)/bbar
    let a2 = if spread == 0.0 {
        a1 * kb2 / kb1
    } else {
        if b_bar == 0.0 {
            return Err(Error::Degenerate("dbar spread needs bbar != 0".into()));
        }
        (a1 * kb2 + kb1 * kb2 * (d1 - d2) / b_bar) / kb1
    };
    let k1 = LctParams::from_abd(a1, kb1, 0.0)?;
    let k2 = LctParams::from_abd(a2, kb2, 0.0)?;
    GlwdParams::new(b1, b2, k1, k2, n)
}

/// Chooses GLWD parameters for chirp rate `n` that satisfy the ridge condition
/// and both OSNR dominance inequalities, maximizing `osnr_gain`.
///
/// Ties are broken by the smallest largest-magnitude matrix entry. The search
/// order is fixed, so the result is deterministic.
pub fn select_glwd_params(chirp_rate_n: f64, prefs: &SelectorPrefs) -> Result<GlwdParams> {
    if !(chirp_rate_n != 0.0 && chirp_rate_n.is_finite()) {
        return Err(Error::invalid("chirp rate must be finite and nonzero"));
    }
    if let Some([b1, b2, a1, a2]) = prefs.pinned {
        let p = GlwdParams::new(b1, b2, a1, a2, chirp_rate_n)?;
        p.osnr_gain()?;
        if !p.ridge_feasible() {
            return Err(Error::Infeasible(format!("pinned parameters violate the ridge condition (l = {:e})", p.l())));
        }
        return Ok(p);
    }
    if !(prefs.max_gain >= 1.0) {
        return Err(Error::Infeasible("max_gain must be >= 1".into()));
    }
    let hs = geomspace(1.0, prefs.max_gain, prefs.h_steps);
    let b1s = linspace(prefs.kernel_b1.0, prefs.kernel_b1.1, prefs.kernel_b_steps);
    let b2s = linspace(prefs.kernel_b2.0, prefs.kernel_b2.1, prefs.kernel_b_steps);
    let mut best: Option<(f64, f64, GlwdParams)> = None;
    for &h in &hs {
        for &kb1 in &b1s {
            for &kb2 in &b2s {
                for &spread in &prefs.d_bar_spread {
                    let Ok(p) = candidate(chirp_rate_n, prefs, h, kb1, kb2, spread) else {
                        continue;
                    };
                    let s = p.kernel_sum().abs();
                    if s == 0.0 || !p.ridge_feasible() {
                        continue;
                    }
                    let hsum = (p.h1() + p.h2()).abs();
                    if !(hsum > s) || !(2.0 / prefs.reference_b.abs() > s) {
                        continue;
                    }
                    let gain = hsum / s;
                    if gain < prefs.min_ratio {
                        continue;
                    }
                    let norm = p.max_abs();
                    let better = match &best {
                        None => true,
                        Some((g, nrm, _)) => gain > *g * (1.0 + 1e-12) || ((gain - g).abs() <= 1e-12 * g && norm < *nrm),
                    };
                    if better {
                        best = Some((gain, norm, p));
                    }
                }
            }
        }
    }
    best.map(|b| b.2).ok_or_else(|| {
        Error::Infeasible("no parameter set in the preference box meets the ridge and OSNR constraints".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: f64 = PI;

    #[test]
    fn wigner_ridge_is_slope_2n_intercept_m() {
        let p = GlwdParams::wigner(N);
        assert!(p.ridge_feasible());
        let (s, i) = ridge_line_theoretical(&p, 1.7).unwrap();
        assert!((s - 2.0 * N).abs() < 1e-12);
        assert!((i - 1.7).abs() < 1e-12);
        assert_eq!(ridge_line_theoretical(&p, 0.0).unwrap().1, 0.0);
        assert!((osnr_glwd(&p, 0.5).unwrap() - 2.0 * PI / 0.5).abs() < 1e-12);
    }

    #[test]
    fn regularized_l_matches_raw_formula() {
        let p = select_glwd_params(N, &SelectorPrefs { d_bar_spread: vec![0.3], ..Default::default() }).unwrap();
        let raw = (p.b1.d - p.h1()) / (8.0 * p.b1.b) - (p.b2.d - p.h2()) / (8.0 * p.b2.b)
            + (p.a1.a * p.a2.b - p.a2.a * p.a1.b) / (8.0 * p.a1.b * p.a2.b);
        assert!(raw.abs() <= RIDGE_TOL, "{raw}");
        assert!((raw - p.l()).abs() < 1e-12);
    }

    #[test]
    fn default_selector_meets_constraints() {
        let p = select_glwd_params(N, &SelectorPrefs::default()).unwrap();
        for m in [p.b1, p.b2, p.a1, p.a2] {
            assert!((m.det() - 1.0).abs() < 1e-12);
        }
        assert!(p.l().abs() <= RIDGE_TOL);
        let s = p.kernel_sum().abs();
        assert!((p.h1() + p.h2()).abs() > s && 2.0 > s);
        assert!(p.osnr_gain().unwrap() >= 4.0);
        assert!(osnr_glwd(&p, 1.0).unwrap() > 2.0 * PI);
        assert_eq!(p, select_glwd_params(N, &SelectorPrefs::default()).unwrap());
    }

    #[test]
    fn pinned_wigner_is_accepted() {
        let w = GlwdParams::wigner(N);
        let prefs = SelectorPrefs { pinned: Some([w.b1, w.b2, w.a1, w.a2]), ..Default::default() };
        let p = select_glwd_params(N, &prefs).unwrap();
        assert_eq!(p.osnr_gain().unwrap(), 1.0);
    }

    #[test]
    fn opposite_kernel_b_is_infeasible() {
        let prefs = SelectorPrefs {
            kernel_b1: (1.0, 1.0),
            kernel_b2: (-1.0, -1.0),
            kernel_b_steps: 1,
            ..Default::default()
        };
        assert!(matches!(select_glwd_params(N, &prefs), Err(Error::Infeasible(_))));
    }

    #[test]
    fn spread_is_compensated() {
        for s in [-0.5, 0.2, 1.0] {
            let prefs = SelectorPrefs { d_bar_spread: vec![s], ..Default::default() };
            let p = select_glwd_params(N, &prefs).unwrap();
            assert!(p.ridge_feasible());
            assert!((p.b2.d - p.b1.d - s).abs() < 1e-12);
        }
    }
}
