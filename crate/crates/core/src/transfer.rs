//! Full-weighting restriction and bilinear prolongation between nested grids.
//!
//! Coarse node `(ci, cj)` coincides with fine node `(2ci + 1, 2cj + 1)`. Both
//! operators use the tensor kernel `[1 2 1] x [1 2 1]`, scaled by 1/16 for
//! restriction and 1/4 for prolongation, so `P = 4 R^T`.

use std::ops::{AddAssign, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid2D;

const W: [f64; 3] = [1.0, 2.0, 1.0];

pub(crate) fn restrict_slice<T>(fine: &Grid2D, coarse: &Grid2D, src: &[T], dst: &mut [T])
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    let nxf = fine.nx();
    for cj in 0..coarse.ny() {
        for ci in 0..coarse.nx() {
            let (fi, fj) = (2 * ci + 1, 2 * cj + 1);
            let mut acc = T::default();
            for (b, wb) in W.iter().enumerate() {
                let row = (fj + b - 1) * nxf;
                for (a, wa) in W.iter().enumerate() {
                    acc += src[row + fi + a - 1] * (wa * wb);
                }
            }
            dst[coarse.idx(ci, cj)] = acc * (1.0 / 16.0);
        }
    }
}

pub(crate) fn prolong_add_slice<T>(coarse: &Grid2D, fine: &Grid2D, src: &[T], dst: &mut [T])
where
    T: Copy + Default + AddAssign + Mul<f64, Output = T>,
{
    let nxf = fine.nx();
    for cj in 0..coarse.ny() {
        for ci in 0..coarse.nx() {
            let v = src[coarse.idx(ci, cj)] * 0.25;
            let (fi, fj) = (2 * ci + 1, 2 * cj + 1);
            for (b, wb) in W.iter().enumerate() {
                let row = (fj + b - 1) * nxf;
                for (a, wa) in W.iter().enumerate() {
                    dst[row + fi + a - 1] += v * (wa * wb);
                }
            }
        }
    }
}

fn coarse_of(fine: &Grid2D) -> Result<Grid2D> {
    fine.coarsen().map_err(|_| Error::IncompatibleSize {
        n: fine.nx(),
        valid: vec![],
    })
}

/// Full-weighting restriction onto the nested coarse grid.
pub fn restrict(r: &ComplexField) -> Result<ComplexField> {
    let fine = *r.grid();
    let coarse = coarse_of(&fine)?;
    let mut out = vec![Complex64::default(); coarse.len()];
    restrict_slice(&fine, &coarse, r.values(), &mut out);
    Ok(ComplexField::from_raw(coarse, out))
}

/// Full-weighting restriction of a real field.
pub fn restrict_real(r: &RealField) -> Result<RealField> {
    let fine = *r.grid();
    let coarse = coarse_of(&fine)?;
    let mut out = vec![0.0; coarse.len()];
    restrict_slice(&fine, &coarse, r.values(), &mut out);
    RealField::from_values(coarse, out)
}

/// Bilinear interpolation of a coarse field onto `fine`.
pub fn prolong(e: &ComplexField, fine: &Grid2D) -> Result<ComplexField> {
    if !fine.is_coarsening_of(e.grid()) {
        return Err(Error::GridMismatch {
            expected: format!("coarsening of {}", fine.describe()),
            found: e.grid().describe(),
        });
    }
    let mut out = vec![Complex64::default(); fine.len()];
    prolong_add_slice(e.grid(), fine, e.values(), &mut out);
    Ok(ComplexField::from_raw(*fine, out))
}
