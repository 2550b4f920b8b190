use crate::error::{Error, Result};
use num_complex::Complex64;
use std::io::Write;

/// Affine axis: `value(i) = origin + step * i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub origin: f64,
    pub step: f64,
}

impl Axis {
    pub fn value(&self, i: f64) -> f64 {
        self.origin + self.step * i
    }

    /// Fractional index of `v`.
    pub fn index(&self, v: f64) -> f64 {
        (v - self.origin) / self.step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfSource {
    Stft,
    Wd,
    Glwd,
}

impl TfSource {
    pub fn tag(self) -> &'static str {
        match self {
            TfSource::Stft => "STFT",
            TfSource::Wd => "WD",
            TfSource::Glwd => "GLWD",
        }
    }
}

/// How a rasterized image maps back to linear magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbScale {
    pub floor_db: f64,
    pub reference: f64,
}

/// Nonnegative magnitude grid, row-major with `rows` frequency bins and `cols` time bins.
#[derive(Debug, Clone, PartialEq)]
pub struct TfImage {
    pub data: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    /// Column axis in seconds.
    pub t_axis: Axis,
    /// Row axis in the distribution's own frequency/LCT-domain units.
    pub u_axis: Axis,
    pub source: TfSource,
    /// Set when the grid holds a normalized dB mapping (see [`super::rasterize`]).
    pub db_scale: Option<DbScale>,
}

impl TfImage {
    pub fn new(data: Vec<f64>, rows: usize, cols: usize, t_axis: Axis, u_axis: Axis, source: TfSource) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{} values for {rows}x{cols} grid", data.len())));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("image values must be finite and nonnegative"));
        }
        if !(t_axis.step != 0.0 && t_axis.step.is_finite() && u_axis.step != 0.0 && u_axis.step.is_finite()) {
            return Err(Error::invalid("image axes must be strictly monotone"));
        }
        Ok(TfImage {
            data,
            rows,
            cols,
            t_axis,
            u_axis,
            source,
            db_scale: None,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, k: f64) -> TfImage {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= k;
        }
        out
    }

    /// Linear magnitude of cell `(row, col)`; undoes the dB mapping for rasterized images.
    pub fn linear(&self, row: usize, col: usize) -> f64 {
        let v = self.get(row, col);
        match self.db_scale {
            Some(s) if v > 0.0 => s.reference * 10f64.powf((v - 1.0) * s.floor_db.abs() / 20.0),
            Some(_) => 0.0,
            None => v,
        }
    }

    /// 8-bit binary PGM, top row = highest frequency.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.cols, self.rows)?;
        let peak = self.max();
        let mut buf = Vec::with_capacity(self.rows * self.cols);
        for r in (0..self.rows).rev() {
            for c in 0..self.cols {
                let v = if peak > 0.0 { self.get(r, c) / peak } else { 0.0 };
                buf.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
            }
        }
        w.write_all(&buf)
    }

    /// Axis sidecar for the PGM (key: value lines).
    pub fn write_sidecar<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "source: {}", self.source.tag())?;
        writeln!(w, "rows: {}", self.rows)?;
        writeln!(w, "cols: {}", self.cols)?;
        writeln!(w, "t_origin_s: {:e}", self.t_axis.origin)?;
        writeln!(w, "t_step_s: {:e}", self.t_axis.step)?;
        writeln!(w, "u_origin: {:e}", self.u_axis.origin)?;
        writeln!(w, "u_step: {:e}", self.u_axis.step)?;
        writeln!(w, "row_order: bottom-to-top ascending u")?;
        if let Some(s) = self.db_scale {
            writeln!(w, "db_floor: {:e}", s.floor_db)?;
            writeln!(w, "db_reference: {:e}", s.reference)?;
        }
        Ok(())
    }

    /// CSV with header `t,u,magnitude`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,u,magnitude")?;
        for c in 0..self.cols {
            for r in 0..self.rows {
                writeln!(
                    w,
                    "{:e},{:e},{:e}",
                    self.t_axis.value(c as f64),
                    self.u_axis.value(r as f64),
                    self.get(r, c)
                )?;
            }
        }
        Ok(())
    }
}

/// Complex time-frequency distribution (WD or GLWD) before taking magnitudes.
#[derive(Debug, Clone)]
pub struct TfDistribution {
    pub values: Vec<Complex64>,
    pub rows: usize,
    pub cols: usize,
    /// Column axis in normalized time units.
    pub x_axis: Axis,
    /// Row axis in normalized domain units.
    pub u_axis: Axis,
    /// Seconds per normalized time unit.
    pub time_unit_s: f64,
    /// Physical time of x = 0.
    pub time_origin_s: f64,
    pub source: TfSource,
}

impl TfDistribution {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.cols + col]
    }

    /// `|W|` image with the column axis converted to seconds.
    pub fn magnitude(&self) -> TfImage {
        let t_axis = Axis {
            origin: self.time_origin_s + self.x_axis.origin * self.time_unit_s,
            step: self.x_axis.step * self.time_unit_s,
        };
        TfImage::new(
            self.values.iter().map(|z| z.norm()).collect(),
            self.rows,
            self.cols,
            t_axis,
            self.u_axis,
            self.source,
        )
        .expect("distribution magnitudes are valid")
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Normalized log-magnitude image: `1 + 20 log10(v / max) / |floor_db|`, clipped to [0, 1].
pub fn rasterize(image: &TfImage, floor_db: f64) -> Result<TfImage> {
    if image.is_empty() {
        return Err(Error::EmptyImage);
    }
    if !floor_db.is_finite() || floor_db == 0.0 {
        return Err(Error::invalid("dB floor must be finite and nonzero"));
    }
    let span = floor_db.abs();
    let peak = image.max();
    let mut out = image.clone();
    for v in out.data.iter_mut() {
        *v = if peak > 0.0 && *v > 0.0 {
            (1.0 + 20.0 * (*v / peak).log10() / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    out.db_scale = Some(DbScale {
        floor_db: -span,
        reference: peak,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(data: Vec<f64>, rows: usize, cols: usize) -> TfImage {
        let ax = Axis { origin: 0.0, step: 1.0 };
        TfImage::new(data, rows, cols, ax, ax, TfSource::Stft).unwrap()
    }

    #[test]
    fn constant_maps_to_one() {
        let r = rasterize(&img(vec![3.0; 12], 3, 4), -60.0).unwrap();
        assert!(r.data.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn floor_clips_to_zero() {
        let r = rasterize(&img(vec![1.0, 1e-4, 1e-2, 0.0], 2, 2), -60.0).unwrap();
        assert_eq!(r.data[1], 0.0);
        assert!((r.data[2] - (1.0 - 40.0 / 60.0)).abs() < 1e-12);
        assert_eq!(r.data[3], 0.0);
        assert!((r.linear(1, 0) - 1e-2).abs() < 1e-12);
    }

    #[test]
    fn empty_rejected() {
        let ax = Axis { origin: 0.0, step: 1.0 };
        let e = TfImage::new(vec![], 0, 0, ax, ax, TfSource::Wd).unwrap();
        assert!(matches!(rasterize(&e, -60.0), Err(Error::EmptyImage)));
    }

    #[test]
    fn pgm_header() {
        let mut buf = Vec::new();
        img(vec![0.0, 1.0, 2.0, 4.0], 2, 2).write_pgm(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(&buf[buf.len() - 4..], &[128, 255, 0, 64]);
    }
}
