#![allow(dead_code)]

use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveadr::hierarchy::Level;
use waveadr::ingest::{ingest_slowness, SlownessSource};
use waveadr::{Complex64, ComplexField, Grid2D, SlownessModel};

pub const TWENTY_PI: f64 = 20.0 * std::f64::consts::PI;
pub const TEN_PI: f64 = 10.0 * std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(grid: Grid2D, rng: &mut ChaCha8Rng) -> ComplexField {
    ComplexField::from_fn(grid, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Writes a 32x32 image of uniform random gray levels. The extension picks the format.
pub fn write_random_image(path: &Path, seed: u64) {
    let mut r = rng(seed);
    let img: ImageBuffer<Luma<u16>, Vec<u16>> =
        ImageBuffer::from_fn(32, 32, |_, _| Luma([r.gen_range(0..=u16::MAX)]));
    img.save(path).expect("write test image");
}

/// Three heterogeneous models written as image files inside `dir`.
pub fn heterogeneous_images(dir: &Path) -> Vec<PathBuf> {
    [("model1.png", 1), ("model2.pgm", 2), ("model3.png", 3)]
        .iter()
        .map(|(name, seed)| {
            let p = dir.join(name);
            write_random_image(&p, *seed);
            p
        })
        .collect()
}

pub fn heterogeneous_model(dir: &Path, seed: u64, n: usize) -> SlownessModel {
    let p = dir.join(format!("hetero{seed}.png"));
    write_random_image(&p, seed);
    ingest_slowness(&SlownessSource::Image(p), n, None).expect("ingest test image")
}

/// Dense Helmholtz matrix assembled from the level coefficients:
/// `(4/h²) - ω²s² + i(ωγs² + ratio·ω²s²)` on the diagonal, `-1/h²` to the four neighbours.
pub fn dense_helmholtz(level: &Level, omega: f64, shift_ratio: f64) -> DMatrix<Complex64> {
    let g = level.grid;
    let n = g.len();
    let inv_h2 = 1.0 / (g.h() * g.h());
    let mut a = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let k = g.idx(i, j);
            let s2 = level.s2.get(i, j);
            let gam = level.gamma.get(i, j);
            a[(k, k)] = Complex64::new(
                4.0 * inv_h2 - omega * omega * s2,
                omega * gam * s2 + shift_ratio * omega * omega * s2,
            );
            let nbrs = [
                (i > 0).then(|| g.idx(i - 1, j)),
                (i + 1 < g.nx()).then(|| g.idx(i + 1, j)),
                (j > 0).then(|| g.idx(i, j - 1)),
                (j + 1 < g.ny()).then(|| g.idx(i, j + 1)),
            ];
            for m in nbrs.into_iter().flatten() {
                a[(k, m)] = Complex64::new(-inv_h2, 0.0);
            }
        }
    }
    a
}

/// Dense matrix of a five-point stencil given as `(north, west, centre, east, south)` fields.
pub fn dense_five_point(grid: &Grid2D, coeffs: [&[Complex64]; 5]) -> DMatrix<Complex64> {
    let n = grid.len();
    let [north, west, centre, east, south] = coeffs;
    let mut a = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let k = grid.idx(i, j);
            a[(k, k)] = centre[k];
            if i > 0 {
                a[(k, k - 1)] = west[k];
            }
            if i + 1 < grid.nx() {
                a[(k, k + 1)] = east[k];
            }
            if j > 0 {
                a[(k, k - grid.nx())] = south[k];
            }
            if j + 1 < grid.ny() {
                a[(k, k + grid.nx())] = north[k];
            }
        }
    }
    a
}

pub fn to_dvector(v: &[Complex64]) -> nalgebra::DVector<Complex64> {
    nalgebra::DVector::from_column_slice(v)
}

/// `max_k |a_k - b_k| / scale_k`, with `scale` the matching magnitude row sums.
pub fn max_scaled_diff(a: &[Complex64], b: &[Complex64], scale: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(scale)
        .map(|((x, y), s)| (x - y).norm() / s.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

pub fn rel_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    num / den
}

pub fn unit_square(n: usize) -> Grid2D {
    Grid2D::square(n).expect("valid grid")
}
