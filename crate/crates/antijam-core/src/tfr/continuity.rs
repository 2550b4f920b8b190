use super::image::TfImage;
use crate::error::{Error, Result};
use crate::linedet::LineSegment;
use std::ops::Range;

/// Samples the image along a segment, one sample per step of the longer pixel
/// axis, taking the max over +-1 pixel across the line.
pub(crate) fn profile_along(image: &TfImage, c0: f64, r0: f64, c1: f64, r1: f64) -> Vec<f64> {
    let (dc, dr) = (c1 - c0, r1 - r0);
    let steps = dc.abs().max(dr.abs()).round() as usize;
    let steep = dr.abs() > dc.abs();
    let mut out = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        let f = if steps == 0 { 0.0 } else { s as f64 / steps as f64 };
        let c = (c0 + f * dc).round() as i64;
        let r = (r0 + f * dr).round() as i64;
        let mut best: Option<f64> = None;
        for o in -1..=1i64 {
            let (cc, rr) = if steep { (c + o, r) } else { (c, r + o) };
            if cc >= 0 && rr >= 0 && (cc as usize) < image.cols && (rr as usize) < image.rows {
                let v = image.get(rr as usize, cc as usize);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        if let Some(v) = best {
            out.push(v);
        }
    }
    out
}

/// Fraction of samples along `line` whose magnitude exceeds `threshold_frac`
/// times the median along the line. 1.0 means an unbroken ridge.
pub fn tf_continuity_score(image: &TfImage, line: &LineSegment, threshold_frac: f64) -> Result<f64> {
    if image.is_empty() {
        return Err(Error::EmptyImage);
    }
    let c0 = image.t_axis.index(line.t1);
    let c1 = image.t_axis.index(line.t2);
    let r0 = image.u_axis.index(line.u1);
    let r1 = image.u_axis.index(line.u2);
    if (c1 - c0).abs().max((r1 - r0).abs()) < 0.5 {
        return Err(Error::invalid("zero-length line"));
    }
    let prof = profile_along(image, c0, r0, c1, r1);
    if prof.is_empty() {
        return Err(Error::invalid("line lies outside the image"));
    }
    let med = median(&prof);
    let thr = threshold_frac * med;
    let hits = prof.iter().filter(|&&v| v > thr).count();
    Ok(hits as f64 / prof.len() as f64)
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Least-squares ridge line in axis units: `u = slope * t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

fn linfit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((b, my - b * mx, r2))
}

/// Parabolic sub-pixel position of the peak at `i`; `None` when the peak sits on
/// the edge of `range` and may be clipped.
fn refine(i: usize, range: Range<usize>, at: impl Fn(usize) -> f64) -> Option<f64> {
    if i == range.start || i + 1 >= range.end {
        return None;
    }
    let (l, m, r) = (at(i - 1), at(i), at(i + 1));
    let den = l - 2.0 * m + r;
    if den >= 0.0 {
        return Some(i as f64);
    }
    Some(i as f64 + 0.5 * (l - r) / den)
}

/// Fits the dominant ridge over `cols` from per-column argmax positions, or
/// per-row argmax when the ridge is steeper than one row per column.
/// Columns (rows) whose peak is below `min_rel` of the image peak are skipped.
pub fn fit_ridge(image: &TfImage, cols: Range<usize>, min_rel: f64) -> Option<RidgeFit> {
    let peak = image.max();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for c in cols.clone() {
        let (r, v) = (0..image.rows)
            .map(|r| (r, image.get(r, c)))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        if v >= min_rel * peak {
            if let Some(y) = refine(r, 0..image.rows, |i| image.get(i, c)) {
                xs.push(c as f64);
                ys.push(y);
            }
        }
    }
    let (mut b, mut a, mut r2) = linfit(&xs, &ys)?;
    let mut npts = xs.len();
    if b.abs() > 1.0 {
        xs.clear();
        ys.clear();
        for r in 0..image.rows {
            let (c, v) = cols
                .clone()
                .map(|c| (c, image.get(r, c)))
                .max_by(|a, b| a.1.total_cmp(&b.1))?;
            if v >= min_rel * peak {
                if let Some(y) = refine(c, cols.clone(), |i| image.get(r, i)) {
                    xs.push(r as f64);
                    ys.push(y);
                }
            }
        }
        let (bb, aa, rr) = linfit(&xs, &ys)?;
        if bb == 0.0 {
            return None;
        }
        // col = bb * row + aa  ->  row = col / bb - aa / bb
        b = 1.0 / bb;
        a = -aa / bb;
        r2 = rr;
        npts = xs.len();
    }
    // pixel line row = b * col + a  ->  axis units
    let (t, u) = (image.t_axis, image.u_axis);
    let slope = b * u.step / t.step;
    let intercept = u.origin + u.step * (a - b * t.origin / t.step);
    Some(RidgeFit {
        slope,
        intercept,
        r2,
        points: npts,
    })
}

/// Fraction of image energy (sum of squares over `cols`) lying within `tol`
/// pixels of the line `u = slope * t + intercept`, measured along rows for
/// shallow lines and along columns for steep ones.
pub fn energy_near_line(image: &TfImage, slope: f64, intercept: f64, tol: f64, cols: Range<usize>) -> f64 {
    let (t, u) = (image.t_axis, image.u_axis);
    // row = bp * col + ap
    let bp = slope * t.step / u.step;
    let ap = (slope * t.origin + intercept - u.origin) / u.step;
    let mut total = 0.0;
    let mut near = 0.0;
    for c in cols {
        for r in 0..image.rows {
            let e = image.get(r, c).powi(2);
            total += e;
            let dr = r as f64 - (bp * c as f64 + ap);
            let dist = if bp.abs() > 1.0 { (dr / bp).abs() } else { dr.abs() };
            if dist <= tol {
                near += e;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        near / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfr::{Axis, TfSource};

    fn line_image(rows: usize, cols: usize, gaps: bool) -> TfImage {
        let mut d = vec![0.0; rows * cols];
        for c in 0..cols {
            let r = (c / 2 + 2).min(rows - 1);
            let on = !gaps || (c / 6) % 3 != 2;
            d[r * cols + c] = if on { 1.0 } else { 0.0 };
        }
        TfImage::new(d, rows, cols, Axis { origin: 0.0, step: 1.0 }, Axis { origin: 0.0, step: 1.0 }, TfSource::Wd).unwrap()
    }

    fn seg(t1: f64, u1: f64, t2: f64, u2: f64) -> LineSegment {
        LineSegment::new(t1, u1, t2, u2, 0.0).unwrap()
    }

    #[test]
    fn continuous_vs_gapped() {
        let l = seg(0.0, 2.0, 59.0, 31.5);
        let a = tf_continuity_score(&line_image(40, 60, false), &l, 0.5).unwrap();
        let b = tf_continuity_score(&line_image(40, 60, true), &l, 0.5).unwrap();
        assert!(a >= 0.95, "{a}");
        assert!(b <= 0.8 && b < a, "{b}");
    }

    #[test]
    fn zero_image_scores_zero() {
        let z = TfImage::new(vec![0.0; 100], 10, 10, Axis { origin: 0.0, step: 1.0 }, Axis { origin: 0.0, step: 1.0 }, TfSource::Wd).unwrap();
        assert_eq!(tf_continuity_score(&z, &seg(0.0, 0.0, 9.0, 9.0), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn fit_recovers_line() {
        let img = line_image(40, 60, false);
        let f = fit_ridge(&img, 0..60, 0.5).unwrap();
        assert!((f.slope - 0.5).abs() < 0.02, "{f:?}");
        assert!(energy_near_line(&img, 0.5, 2.0, 1.0, 0..60) > 0.99);
    }
}
