use antijam_core::harness::PipelineConfig;
use antijam_core::scenario::ScenarioConfig;
use antijam_core::siggen::gen_echo;
use antijam_core::tfr::{
    energy_near_line, fit_ridge, glwd_distribution, ridge_line_theoretical, select_glwd_params, GlwdParams,
    SelectorPrefs, TfConfig, TfImage,
};

struct Check {
    slope_rel_err: f64,
    intercept_bins: f64,
    energy_frac: f64,
}

/// Fits the GLWD ridge of the Table 1 echo, with the time origin placed `shift` normalized
/// units before the pulse centre so the chirp has a linear phase term.
fn check(params: &GlwdParams, shift: f64) -> Check {
    let cfg = ScenarioConfig::table1();
    let wf = cfg.waveform;
    let pipe = PipelineConfig::default();
    let t0 = pipe.time_unit(&wf);
    let echo = gen_echo(&wf, &cfg.target, &cfg.window).unwrap();
    let centre = cfg.target.delay_s() + wf.pulse_width_s / 2.0;
    let tf = TfConfig {
        time_unit_s: Some(t0),
        time_origin_s: Some(centre - shift * t0),
        half_lag: 16,
        n_freq: 128,
        ..TfConfig::default()
    };
    let dist = glwd_distribution(&echo, params, &tf).unwrap().dist;
    // keep the column axis in normalized units so slopes compare directly
    let mag = dist.magnitude();
    let image = TfImage::new(mag.data, mag.rows, mag.cols, dist.x_axis, dist.u_axis, mag.source).unwrap();
    // n (x - shift)^2 has linear coefficient -2 n shift
    let m = -2.0 * params.chirp_rate_n * shift;
    let (slope, intercept) = ridge_line_theoretical(params, m).unwrap();

    // central half of the chirp support, mapped through the signal-side compression
    let h = 0.5 * (params.h1().abs() + params.h2().abs());
    let half = 0.5 * wf.pulse_width_s / t0 / h;
    // stationary point of the pulse centre: x = abar * shift
    let centre_x = params.b1.a * shift;
    let lo = dist.x_axis.index(centre_x - 0.5 * half).ceil().max(0.0) as usize;
    let hi = (dist.x_axis.index(centre_x + 0.5 * half).floor() as usize + 1).min(dist.cols);
    let fit = fit_ridge(&image, lo..hi, 0.5).expect("ridge fit");
    // compare intercepts at the middle of the fitted span
    let xm = dist.x_axis.value(0.5 * (lo + hi - 1) as f64);
    let u_fit = fit.slope * xm + fit.intercept;
    let u_theory = slope * xm + intercept;
    Check {
        slope_rel_err: (fit.slope / slope - 1.0).abs(),
        intercept_bins: (u_fit - u_theory).abs() / dist.u_axis.step,
        energy_frac: energy_near_line(&image, slope, intercept, 2.0, lo..hi),
    }
}

fn parameter_sets() -> Vec<(&'static str, GlwdParams)> {
    let n = std::f64::consts::PI;
    let sel = |g: f64| select_glwd_params(n, &SelectorPrefs { max_gain: g, min_ratio: 1.0, ..Default::default() }).unwrap();
    vec![("wd", GlwdParams::wigner(n)), ("gain4", sel(4.0)), ("gain16", sel(16.0))]
}

#[test]
fn ridge_matches_theory() {
    for (name, p) in parameter_sets() {
        assert!(p.ridge_feasible(), "{name}");
        let c = check(&p, 0.0);
        assert!(c.slope_rel_err < 0.02, "{name}: slope error {}", c.slope_rel_err);
        assert!(c.intercept_bins <= 2.0, "{name}: intercept off by {} bins", c.intercept_bins);
        assert!(c.energy_frac >= 0.7, "{name}: energy near line {}", c.energy_frac);
    }
}

#[test]
fn intercept_tracks_linear_phase() {
    for (name, p) in parameter_sets() {
        let c = check(&p, 0.5);
        assert!(c.slope_rel_err < 0.02, "{name}: slope error {}", c.slope_rel_err);
        assert!(c.intercept_bins <= 2.0, "{name}: intercept off by {} bins", c.intercept_bins);
    }
}
