//! Matrix-free five-point Helmholtz operator with sponge damping and shifts.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid2D;
use crate::hierarchy::{Hierarchy, Level};

/// Discrete `-Δ - ω²s² + iωγs² + iγ₀ + iβ` on one level, homogeneous Dirichlet frame.
///
/// `γ₀ = shift_ratio · ω²s²` pointwise and `β` is a constant complex-shift term
/// (zero except for the shifted-Laplacian preconditioner).
#[derive(Debug, Clone)]
pub struct HelmholtzOp {
    grid: Grid2D,
    level: usize,
    inv_h2: f64,
    diag: Vec<Complex64>,
}

impl HelmholtzOp {
    pub fn new(level: &Level, omega: f64, shift_ratio: f64) -> Self {
        Self::with_extra_shift(level, omega, shift_ratio, 0.0)
    }

    pub fn with_extra_shift(level: &Level, omega: f64, shift_ratio: f64, beta: f64) -> Self {
        let grid = level.grid;
        let inv_h2 = 1.0 / (grid.h() * grid.h());
        let w2 = omega * omega;
        let diag = level
            .s2
            .values()
            .iter()
            .zip(level.gamma.values())
            .map(|(&s2, &g)| {
                Complex64::new(
                    4.0 * inv_h2 - w2 * s2,
                    omega * g * s2 + shift_ratio * w2 * s2 + beta,
                )
            })
            .collect();
        Self {
            grid,
            level: 0,
            inv_h2,
            diag,
        }
    }

    /// Operators for every level of the hierarchy, finest first.
    pub fn for_hierarchy(h: &Hierarchy) -> Vec<Self> {
        h.levels()
            .iter()
            .enumerate()
            .map(|(l, lev)| {
                let mut op = Self::new(lev, h.omega(), h.shift_ratio());
                op.level = l;
                op
            })
            .collect()
    }

    /// Same operator with an extra constant imaginary shift `iβ` on the diagonal.
    pub fn shifted(&self, beta: f64) -> Self {
        let mut out = self.clone();
        for d in &mut out.diag {
            d.im += beta;
        }
        out
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// 0-based level index this operator was built for.
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn diagonal(&self) -> &[Complex64] {
        &self.diag
    }

    pub fn apply(&self, u: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(u.grid())?;
        let mut out = vec![Complex64::default(); self.grid.len()];
        self.apply_slice(u.values(), &mut out, false);
        Ok(ComplexField::from_raw(self.grid, out))
    }

    /// Conjugate transpose `A^* u`.
    pub fn apply_adjoint(&self, u: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(u.grid())?;
        let mut out = vec![Complex64::default(); self.grid.len()];
        self.apply_slice(u.values(), &mut out, true);
        Ok(ComplexField::from_raw(self.grid, out))
    }

    /// `g - A u`.
    pub fn residual(&self, g: &ComplexField, u: &ComplexField) -> Result<ComplexField> {
        self.grid.check_same(g.grid())?;
        self.grid.check_same(u.grid())?;
        let mut out = vec![Complex64::default(); self.grid.len()];
        self.apply_slice(u.values(), &mut out, false);
        for (o, gv) in out.iter_mut().zip(g.values()) {
            *o = gv - *o;
        }
        Ok(ComplexField::from_raw(self.grid, out))
    }

    pub(crate) fn apply_slice(&self, u: &[Complex64], out: &mut [Complex64], adjoint: bool) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let c = self.inv_h2;
        for j in 0..ny {
            let row = j * nx;
            for i in 0..nx {
                let k = row + i;
                let mut nb = Complex64::default();
                if i > 0 {
                    nb += u[k - 1];
                }
                if i + 1 < nx {
                    nb += u[k + 1];
                }
                if j > 0 {
                    nb += u[k - nx];
                }
                if j + 1 < ny {
                    nb += u[k + nx];
                }
                let d = if adjoint { self.diag[k].conj() } else { self.diag[k] };
                out[k] = d * u[k] - nb * c;
            }
        }
    }

    /// Index of the first exactly-zero diagonal entry, if any.
    pub(crate) fn zero_diagonal(&self) -> Option<(usize, usize)> {
        self.diag
            .iter()
            .position(|d| d.norm() == 0.0)
            .map(|k| (k % self.grid.nx(), k / self.grid.nx()))
    }

    pub(crate) fn check_diagonal(&self) -> Result<()> {
        match self.zero_diagonal() {
            Some((i, j)) => Err(Error::ZeroDiagonal {
                level: self.level + 1,
                i,
                j,
            }),
            None => Ok(()),
        }
    }
}

/// Discrete point source `δ(x - x₀)`: `1/h²` at node `(i, j)`.
pub fn point_source(grid: &Grid2D, node: (usize, usize)) -> Result<ComplexField> {
    let (i, j) = node;
    if i >= grid.nx() || j >= grid.ny() {
        return Err(Error::SourceOutsideGrid {
            i,
            j,
            nx: grid.nx(),
            ny: grid.ny(),
        });
    }
    let mut g = ComplexField::zeros(*grid);
    g.set(i, j, Complex64::new(1.0 / (grid.h() * grid.h()), 0.0));
    Ok(g)
}
