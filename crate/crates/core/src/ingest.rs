//! Slowness ingestion: resize, smooth, normalize.
//!
//! Orientation: raw grids store row `r` at `y`-index `j = r`; images store their top
//! row at the largest `y`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::grid::Grid2D;
use crate::medium::{SlownessModel, SLOWNESS_MAX, SLOWNESS_MIN};

/// Where slowness values come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SlownessSource {
    Constant(f64),
    Image(PathBuf),
    Raw(PathBuf),
}

/// Row-major 2D array of samples, row 0 first.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidGrid(format!(
                "raster {rows}x{cols} with {} samples",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("raster samples".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Flip rows so row 0 becomes the last.
    pub fn flipped(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for r in (0..self.rows).rev() {
            data.extend_from_slice(&self.data[r * self.cols..(r + 1) * self.cols]);
        }
        Self { rows: self.rows, cols: self.cols, data }
    }
}

/// Read a raw grid: `u64` rows, `u64` cols (little endian), then `f64` samples.
pub fn read_raw_grid(path: &Path) -> Result<Raster> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(Error::Parse(format!("{}: truncated raw grid header", path.display())));
    }
    let rows = u64::from_le_bytes(bytes[0..8].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(16))
        .ok_or_else(|| Error::Parse("raw grid dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Parse(format!(
            "{}: header says {rows}x{cols} ({expected} bytes) but file has {} bytes",
            path.display(),
            bytes.len()
        )));
    }
    let data = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Raster::new(rows, cols, data)
}

pub fn write_raw_grid(path: &Path, raster: &Raster) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&(raster.rows as u64).to_le_bytes())?;
    f.write_all(&(raster.cols as u64).to_le_bytes())?;
    for v in &raster.data {
        f.write_all(&v.to_le_bytes())?;
    }
    f.flush()?;
    Ok(())
}

/// Grayscale intensities of an image file (PGM, PNG), top row first, in `[0, 1]`.
pub fn read_image(path: &Path) -> Result<Raster> {
    let img = image::open(path)?.into_luma16();
    let (w, h) = img.dimensions();
    let data = img.pixels().map(|p| p.0[0] as f64 / u16::MAX as f64).collect();
    Raster::new(h as usize, w as usize, data)
}

/// Bilinear resize with pixel-centre alignment; an `n`-to-`n` resize is the identity.
pub fn bilinear_resize(src: &Raster, rows: usize, cols: usize) -> Raster {
    let map = |d: usize, nin: usize, nout: usize| -> (usize, usize, f64) {
        let x = ((d as f64 + 0.5) * nin as f64 / nout as f64 - 0.5).clamp(0.0, (nin - 1) as f64);
        let i0 = x.floor() as usize;
        let i1 = (i0 + 1).min(nin - 1);
        (i0, i1, x - i0 as f64)
    };
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let (r0, r1, fr) = map(r, src.rows, rows);
        for c in 0..cols {
            let (c0, c1, fc) = map(c, src.cols, cols);
            let top = src.at(r0, c0) * (1.0 - fc) + src.at(r0, c1) * fc;
            let bot = src.at(r1, c0) * (1.0 - fc) + src.at(r1, c1) * fc;
            data.push(top * (1.0 - fr) + bot * fr);
        }
    }
    Raster { rows, cols, data }
}

/// Separable Gaussian blur truncated at `3σ`, edges replicated. `σ = 0` is a no-op.
pub fn gaussian_smooth(src: &Raster, sigma: f64) -> Raster {
    if sigma <= 0.0 {
        return src.clone();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);
    let pass = |data: &[f64], rows: usize, cols: usize, horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; data.len()];
        for r in 0..rows {
            for c in 0..cols {
                let mut acc = 0.0;
                for (t, k) in kernel.iter().enumerate() {
                    let d = t as isize - radius;
                    let (rr, cc) = if horizontal {
                        (r as isize, (c as isize + d).clamp(0, cols as isize - 1))
                    } else {
                        ((r as isize + d).clamp(0, rows as isize - 1), c as isize)
                    };
                    acc += k * data[rr as usize * cols + cc as usize];
                }
                out[r * cols + c] = acc;
            }
        }
        out
    };
    let tmp = pass(&src.data, src.rows, src.cols, true);
    let data = pass(&tmp, src.rows, src.cols, false);
    Raster { rows: src.rows, cols: src.cols, data }
}

/// Affine map of the values onto `[0.25, 1]`; a constant raster maps to 1.
pub fn normalize_slowness(src: &Raster) -> Raster {
    let lo = src.data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = src.data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let data = if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        vec![SLOWNESS_MAX; src.data.len()]
    } else {
        src.data
            .iter()
            .map(|v| {
                let t = (v - lo) / (hi - lo);
                (SLOWNESS_MIN + (SLOWNESS_MAX - SLOWNESS_MIN) * t).clamp(SLOWNESS_MIN, SLOWNESS_MAX)
            })
            .collect()
    };
    Raster { rows: src.rows, cols: src.cols, data }
}

/// Default smoothing width in grid cells for an `n`-point grid.
pub fn default_sigma(n: usize) -> f64 {
    n as f64 / 64.0
}

/// Resize to the grid, smooth with `sigma` cells (default `n/64`), normalize.
/// The raster's row 0 maps to `j = 0`.
pub fn ingest_raster(raster: &Raster, grid: &Grid2D, sigma: Option<f64>) -> Result<SlownessModel> {
    let resized = bilinear_resize(raster, grid.ny(), grid.nx());
    let sigma = sigma.unwrap_or_else(|| default_sigma(grid.nx().max(grid.ny())));
    let smoothed = gaussian_smooth(&resized, sigma);
    let normalized = normalize_slowness(&smoothed);
    SlownessModel::new(RealField::from_values(*grid, normalized.data)?)
}

/// Ingest a slowness model onto a square `n × n` interior grid.
pub fn ingest_slowness(source: &SlownessSource, n: usize, sigma: Option<f64>) -> Result<SlownessModel> {
    if n == 0 {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    let grid = Grid2D::square(n)?;
    match source {
        SlownessSource::Constant(c) => {
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::InvalidParameter(format!("constant slowness must be positive, got {c}")));
            }
            SlownessModel::constant(grid, *c)
        }
        SlownessSource::Image(p) => ingest_raster(&read_image(p)?.flipped(), &grid, sigma),
        SlownessSource::Raw(p) => ingest_raster(&read_raw_grid(p)?, &grid, sigma),
    }
}
